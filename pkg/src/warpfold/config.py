"""Launch configuration: the contract between transformed code and the scheduler."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import ConfigError

MODES = ("flat", "hier", "auto")


def default_workers() -> int:
    return os.cpu_count() or 1


@dataclass
class LaunchConfig:
    grid_size: int = 1
    block_size: int = 32
    warp_size: int = 32
    mode: str = "auto"
    specialize: bool = False
    workers: int = field(default_factory=default_workers)

    def validate(self, hierarchical: bool | None = None) -> None:
        if self.grid_size < 0:
            raise ConfigError(f"grid size must be >= 0, got {self.grid_size}")
        if self.block_size < 1:
            raise ConfigError(f"block size must be >= 1, got {self.block_size}")
        if self.warp_size < 1:
            raise ConfigError(f"warp size must be >= 1, got {self.warp_size}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if hierarchical and self.block_size % self.warp_size != 0:
            raise ConfigError(
                f"hierarchical mode requires block size ({self.block_size}) divisible "
                f"by warp size ({self.warp_size})"
            )

    @property
    def warps_per_block(self) -> int:
        return self.block_size // self.warp_size
