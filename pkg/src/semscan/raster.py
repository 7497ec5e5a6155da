"""Core raster types, file codecs, and the decimation primitive.

All rasters are thin frozen wrappers around 2-D numpy arrays in row-major
``[row, col]`` order.  File formats owned here:

* 8-bit grayscale PGM (P5) and PNG for images,
* PBM (P4) for scan bitmaps, bit set = pixel gets (re)scanned,
* EMAP for error/probability maps: one ASCII header line
  ``EMAP <width> <height>\\n`` followed by ``width*height`` little-endian
  IEEE-754 float32 values, row-major, no trailing bytes.

The decimation primitive simulates the cheap initial low-resolution scan:
top-left anchored, offset 0, stride ``rate``.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PilImage
from PIL import UnidentifiedImageError

from .errors import FormatError, ValidationError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _grid(data, dtype) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(data, dtype=dtype))
    if arr.ndim != 2:
        raise ValidationError(f"raster data must be 2-D, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Image:
    """Grayscale raster with every value in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = _grid(self.data, np.float64)
        if not np.isfinite(arr).all():
            raise ValidationError("image contains non-finite values")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValidationError("image values must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class ErrorMap:
    """Non-negative per-pixel scalar field (true or estimated error)."""

    data: np.ndarray

    def __post_init__(self):
        arr = _grid(self.data, np.float64)
        if not np.isfinite(arr).all():
            raise ValidationError("error map contains non-finite values")
        if arr.size and arr.min() < 0.0:
            raise ValidationError("error map values must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class Bitmap:
    """Boolean per-pixel mask of scan locations."""

    bits: np.ndarray

    def __post_init__(self):
        arr = _grid(self.bits, bool)
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def count(self) -> int:
        """Number of set bits."""
        return int(self.bits.sum())


# ---------------------------------------------------------------------------
# netpbm header scanning


def _pnm_tokens(buf: bytes, start: int, count: int) -> tuple[list[int], int]:
    """Read `count` ASCII integers after a PNM magic, skipping # comments.

    Returns the integers and the offset of the first payload byte (one
    whitespace byte past the last token).
    """
    tokens: list[int] = []
    i, n = start, len(buf)
    while len(tokens) < count:
        while i < n and buf[i : i + 1].isspace():
            i += 1
        if i < n and buf[i] == ord("#"):
            while i < n and buf[i] not in (0x0A, 0x0D):
                i += 1
            continue
        j = i
        while j < n and not buf[j : j + 1].isspace():
            j += 1
        token = buf[i:j]
        if not token or not token.isdigit():
            raise FormatError(f"malformed netpbm header token {token!r}")
        tokens.append(int(token))
        i = j
    if i >= n or not buf[i : i + 1].isspace():
        raise FormatError("netpbm header not terminated by whitespace")
    return tokens, i + 1


# ---------------------------------------------------------------------------
# images: PGM P5 / PNG


def load_image(path) -> Image:
    """Load an 8-bit grayscale PGM (P5) or PNG file; bytes map to value/255."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    buf = path.read_bytes()
    if buf[:2] == b"P5":
        return _image_from_pgm(buf)
    if buf[:8] == _PNG_MAGIC:
        return _image_from_png(path)
    raise FormatError(f"{path}: neither a P5 PGM nor a PNG file")


def _image_from_pgm(buf: bytes) -> Image:
    (width, height, maxval), offset = _pnm_tokens(buf, 2, 3)
    if maxval != 255:
        raise FormatError(f"unsupported PGM bit depth: maxval={maxval}, expected 255")
    expected = width * height
    payload = buf[offset:]
    if len(payload) != expected:
        raise FormatError(
            f"PGM payload is {len(payload)} bytes, header demands {expected}"
        )
    values = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return Image(values / 255.0)


def _image_from_png(path: Path) -> Image:
    try:
        with _PilImage.open(path) as img:
            if img.mode != "L":
                raise FormatError(
                    f"{path}: unsupported PNG mode {img.mode!r}, need 8-bit grayscale"
                )
            values = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: malformed PNG") from exc
    return Image(values / 255.0)


def quantize(img: Image) -> np.ndarray:
    """Map values to bytes with round-half-up, clamped to [0, 255]."""
    return np.clip(np.floor(img.data * 255.0 + 0.5), 0, 255).astype(np.uint8)


def save_image(img: Image, path) -> None:
    """Write an image as P5 PGM or PNG, chosen by file extension."""
    path = Path(path)
    raw = quantize(img)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
        path.write_bytes(header + raw.tobytes())
    elif suffix == ".png":
        _PilImage.fromarray(raw, mode="L").save(path, format="PNG")
    else:
        raise ValidationError(f"unsupported image extension {suffix!r} (use .pgm or .png)")


# ---------------------------------------------------------------------------
# error maps: EMAP


def write_emap(emap, path) -> None:
    """Write an error/probability map as an EMAP file (float32, row-major)."""
    header = f"EMAP {emap.width} {emap.height}\n".encode("ascii")
    payload = emap.data.astype("<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_emap(path) -> ErrorMap:
    """Read an EMAP file; NaN payloads and size mismatches are rejected."""
    buf = Path(path).read_bytes()
    nl = buf.find(b"\n")
    if nl < 0:
        raise FormatError("EMAP header line missing newline")
    fields = buf[:nl].split()
    if len(fields) != 3 or fields[0] != b"EMAP":
        raise FormatError(f"bad EMAP magic in header {buf[:nl]!r}")
    if not (fields[1].isdigit() and fields[2].isdigit()):
        raise FormatError(f"malformed EMAP dimensions in header {buf[:nl]!r}")
    width, height = int(fields[1]), int(fields[2])
    payload = buf[nl + 1 :]
    expected = 4 * width * height
    if len(payload) != expected:
        raise FormatError(
            f"EMAP payload is {len(payload)} bytes, header demands {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    if np.isnan(values).any():
        raise FormatError("EMAP payload contains NaN")
    return ErrorMap(values.astype(np.float64))


# ---------------------------------------------------------------------------
# bitmaps: PBM P4


def bitmap_to_pbm(b: Bitmap, path) -> None:
    """Write a bitmap as P4 PBM; row padding bits are written as 0."""
    header = f"P4\n{b.width} {b.height}\n".encode("ascii")
    packed = np.packbits(b.bits, axis=1)
    Path(path).write_bytes(header + packed.tobytes())


def pbm_to_bitmap(path) -> Bitmap:
    """Read a P4 PBM; row padding bits are ignored."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P4":
        raise FormatError("bad PBM magic, expected P4")
    (width, height), offset = _pnm_tokens(buf, 2, 2)
    row_bytes = (width + 7) // 8
    expected = row_bytes * height
    payload = buf[offset:]
    if len(payload) != expected:
        raise FormatError(
            f"PBM payload is {len(payload)} bytes, header demands {expected}"
        )
    packed = np.frombuffer(payload, dtype=np.uint8).reshape(height, row_bytes)
    bits = np.unpackbits(packed, axis=1)[:, :width].astype(bool)
    return Bitmap(bits)


# ---------------------------------------------------------------------------
# decimation


def downsample_nearest(img: Image, rate: int) -> Image:
    """Keep every `rate`-th pixel, anchored at (0, 0).

    Output dimensions are ``ceil(dim / rate)``; for non-divisible sizes the
    last sample index is clamped to the image edge.
    """
    if rate < 1:
        raise ValidationError(f"downsample rate must be >= 1, got {rate}")
    h, w = img.shape
    rows = np.minimum(np.arange(math.ceil(h / rate)) * rate, h - 1)
    cols = np.minimum(np.arange(math.ceil(w / rate)) * rate, w - 1)
    return Image(img.data[np.ix_(rows, cols)])


def scan_lattice(width: int, height: int, rate: int) -> Bitmap:
    """Bitmap of the pixels visited by the initial scan at the given rate."""
    if rate < 1:
        raise ValidationError(f"scan rate must be >= 1, got {rate}")
    bits = np.zeros((height, width), dtype=bool)
    bits[::rate, ::rate] = True
    return Bitmap(bits)
