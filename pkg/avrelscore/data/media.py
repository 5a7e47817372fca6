"""AVT1 media container for frame tensors and waveforms, plus PGM debug dumps.

AVT1 layout: magic ``AVT1``, uint32 rank, rank x int64 extents, raw float64
values; everything little-endian.
"""

import logging
import struct
from pathlib import Path
from typing import List

import numpy as np
from PIL import Image

from avrelscore.core.exceptions import MediaFormatError

logger = logging.getLogger(__name__)

MAGIC = b"AVT1"


def write_avt(path: Path, array: np.ndarray) -> Path:
    path = Path(path)
    arr = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}q", *arr.shape))
            fh.write(arr.tobytes())
    except OSError as e:
        raise MediaFormatError(str(path), f"write failed: {e}") from e
    return path


def read_avt(path: Path) -> np.ndarray:
    """
    Read an AVT1 file.

    Args:
        path: Container file

    Returns:
        float64 array with the stored extents
    """
    path = Path(path)
    if not path.exists():
        raise MediaFormatError(str(path), "file not found")
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise MediaFormatError(str(path), "bad magic, expected AVT1")
    try:
        (rank,) = struct.unpack_from("<I", blob, 4)
        shape = struct.unpack_from(f"<{rank}q", blob, 8)
    except struct.error as e:
        raise MediaFormatError(str(path), f"truncated header: {e}") from e
    offset = 8 + 8 * rank
    count = int(np.prod(shape)) if rank else 1
    if len(blob) - offset != 8 * count:
        raise MediaFormatError(str(path), f"payload of {len(blob) - offset} bytes does not match extents {shape}")
    return np.frombuffer(blob, dtype="<f8", count=count, offset=offset).astype(np.float64).reshape(shape)


def dump_pgm(frames: np.ndarray, directory: Path, prefix: str = "frame") -> List[Path]:
    """
    Write grayscale frames as binary PGM images for eyeballing.

    Args:
        frames: [T x H x W] or [T x H x W x 1] values in [0, 1]
        directory: Output directory (created)
        prefix: File name prefix

    Returns:
        Written paths in frame order
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim == 4:
        frames = frames[..., 0]
    paths = []
    for t, frame in enumerate(frames):
        pixels = np.round(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)
        target = directory / f"{prefix}_{t:04d}.pgm"
        Image.fromarray(pixels).save(target)
        paths.append(target)
    logger.debug(f"Dumped {len(paths)} frames to {directory}")
    return paths
