from .memory import (DeviceMemory, device_alloc, device_copy, device_free,
                     HOST_TO_DEVICE, DEVICE_TO_HOST, DEVICE_TO_DEVICE)
from .launch import bind_args, launch, run_blocks_inline
from ..interp.mpmd import BlockContext

__all__ = ["DeviceMemory", "device_alloc", "device_copy", "device_free",
           "HOST_TO_DEVICE", "DEVICE_TO_HOST", "DEVICE_TO_DEVICE",
           "bind_args", "launch", "run_blocks_inline", "BlockContext"]
