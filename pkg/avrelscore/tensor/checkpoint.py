"""AVRT checkpoint format.

Layout: magic ``AVRT``, one version byte, then per entry: uint32 name length,
UTF-8 name, uint32 rank, rank x int64 extents, raw float64 values. All integers
and floats little-endian.
"""

import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Mapping

import numpy as np

from avrelscore.core.exceptions import MediaFormatError

logger = logging.getLogger(__name__)

MAGIC = b"AVRT"
VERSION = 1


def save_checkpoint(path: Path, state: Mapping[str, np.ndarray]) -> Path:
    """
    Write named arrays in AVRT format.

    Args:
        path: Destination file
        state: Ordered name -> array mapping

    Returns:
        The written path
    """
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        for name, array in state.items():
            arr = np.asarray(array, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}q", *arr.shape))
            fh.write(np.ascontiguousarray(arr).tobytes())
    logger.info(f"Saved checkpoint with {len(state)} entries: {path}")
    return path


def load_checkpoint(path: Path) -> "OrderedDict[str, np.ndarray]":
    """
    Read an AVRT checkpoint.

    Args:
        path: Checkpoint file

    Returns:
        Ordered name -> float64 array mapping
    """
    path = Path(path)
    if not path.exists():
        raise MediaFormatError(str(path), "checkpoint not found")
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise MediaFormatError(str(path), "bad magic, expected AVRT")
    if len(blob) < 5 or blob[4] != VERSION:
        raise MediaFormatError(str(path), f"unsupported checkpoint version {blob[4] if len(blob) > 4 else None}")

    state: "OrderedDict[str, np.ndarray]" = OrderedDict()
    pos = 5
    try:
        while pos < len(blob):
            (name_len,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            name = blob[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            shape = struct.unpack_from(f"<{rank}q", blob, pos)
            pos += 8 * rank
            count = int(np.prod(shape)) if rank else 1
            nbytes = 8 * count
            if pos + nbytes > len(blob):
                raise MediaFormatError(str(path), f"truncated data for '{name}'")
            state[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).astype(np.float64).reshape(shape)
            pos += nbytes
    except struct.error as e:
        raise MediaFormatError(str(path), f"truncated header: {e}") from e
    return state
