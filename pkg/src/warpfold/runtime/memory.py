"""Device memory: host-visible byte regions addressed by buffer id.

Host and device share one address space here, so copies are plain memcpy.
The buffer table is lock-guarded so concurrent launches can allocate and
free safely; access to buffer contents is the kernel author's problem,
exactly as on the original hardware.
"""

from __future__ import annotations

import threading

import numpy as np

from ..errors import LaunchError
from ..numerics import numpy_dtype

HOST_TO_DEVICE = "h2d"
DEVICE_TO_HOST = "d2h"
DEVICE_TO_DEVICE = "d2d"


class DeviceMemory:
    def __init__(self):
        self._buffers: dict[int, bytearray] = {}
        self._next_id = 1
        self._lock = threading.Lock()
        self.alloc_count = 0
        self.free_count = 0

    def alloc(self, nbytes: int) -> int:
        if nbytes < 0:
            raise LaunchError(f"cannot allocate {nbytes} bytes")
        with self._lock:
            buffer_id = self._next_id
            self._next_id += 1
            self._buffers[buffer_id] = bytearray(nbytes)
            self.alloc_count += 1
        return buffer_id

    def free(self, buffer_id: int) -> None:
        with self._lock:
            if buffer_id not in self._buffers:
                raise LaunchError(f"free of unknown buffer {buffer_id}")
            del self._buffers[buffer_id]
            self.free_count += 1

    def raw(self, buffer_id: int) -> bytearray:
        try:
            return self._buffers[buffer_id]
        except KeyError:
            raise LaunchError(f"unknown buffer {buffer_id}") from None

    def size(self, buffer_id: int) -> int:
        return len(self.raw(buffer_id))

    def live_buffers(self) -> int:
        with self._lock:
            return len(self._buffers)

    def copy_in(self, buffer_id: int, data: bytes, offset: int = 0) -> None:
        buf = self.raw(buffer_id)
        if offset < 0 or offset + len(data) > len(buf):
            raise LaunchError(
                f"copy of {len(data)} bytes at offset {offset} exceeds buffer "
                f"{buffer_id} of {len(buf)} bytes")
        buf[offset:offset + len(data)] = data

    def copy_out(self, buffer_id: int, nbytes: int | None = None, offset: int = 0) -> bytes:
        buf = self.raw(buffer_id)
        if nbytes is None:
            nbytes = len(buf) - offset
        if offset < 0 or offset + nbytes > len(buf):
            raise LaunchError(
                f"copy of {nbytes} bytes at offset {offset} exceeds buffer "
                f"{buffer_id} of {len(buf)} bytes")
        return bytes(buf[offset:offset + nbytes])

    def copy(self, dst: int, src: int, nbytes: int) -> None:
        data = self.copy_out(src, nbytes)
        self.copy_in(dst, data)

    def view(self, buffer_id: int, kind: str) -> np.ndarray:
        """Writable typed view over the whole buffer."""
        return np.frombuffer(self.raw(buffer_id), dtype=numpy_dtype(kind))

    def clone(self) -> "DeviceMemory":
        other = DeviceMemory()
        with self._lock:
            other._next_id = self._next_id
            for buffer_id, buf in self._buffers.items():
                other._buffers[buffer_id] = bytearray(buf)
        return other

    def equal_bytes(self, other: "DeviceMemory") -> bool:
        return set(self._buffers) == set(other._buffers) and all(
            self._buffers[k] == other._buffers[k] for k in self._buffers)


def device_alloc(memory: DeviceMemory, nbytes: int) -> int:
    return memory.alloc(nbytes)


def device_free(memory: DeviceMemory, buffer_id: int) -> None:
    memory.free(buffer_id)


def device_copy(memory: DeviceMemory, dst, src, nbytes: int, direction: str) -> bytes | None:
    """Copy in the style of the original device API; host payloads are bytes."""
    if direction == HOST_TO_DEVICE:
        memory.copy_in(dst, src[:nbytes])
        return None
    if direction == DEVICE_TO_HOST:
        return memory.copy_out(src, nbytes)
    if direction == DEVICE_TO_DEVICE:
        memory.copy(dst, src, nbytes)
        return None
    raise LaunchError(f"unknown copy direction {direction!r}")
