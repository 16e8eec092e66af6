"""Result images and variance images.

A variance image summarizes how a group of renders disagrees per pixel:
channels are normalized to [0, 1], the population variance is taken per
channel across the group, averaged over RGB, and the standard deviation is
mapped to gray with full white at 0.5.  Identical inputs therefore produce
pure black, and regions that flicker across revisions light up.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from .errors import DimensionMismatch, MalformedPPM, TooFewImages

# Standard deviation that saturates to white in a variance image.
FULL_SCALE_DEVIATION = 0.5


def quantize(values: np.ndarray) -> np.ndarray:
    """Map [0, 1] floats to 0..255 bytes, rounding halves up.

    The same convention is used for rendered pixels and variance output so
    the two can be compared bit for bit.
    """
    scaled = np.clip(values, 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


@dataclass(frozen=True)
class Image:
    """Immutable 8-bit RGB raster, row-major from the top-left corner."""

    width: int
    height: int
    pixels: bytes  # height * width * 3 interleaved RGB

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DimensionMismatch(f"bad dimensions {self.width}x{self.height}")
        expected = self.width * self.height * 3
        if len(self.pixels) != expected:
            raise DimensionMismatch(
                f"{self.width}x{self.height} needs {expected} bytes, got {len(self.pixels)}")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Image":
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionMismatch(f"expected HxWx3 array, got shape {arr.shape}")
        data = np.ascontiguousarray(arr, dtype=np.uint8)
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=data.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3)

    def size(self) -> tuple[int, int]:
        return (self.width, self.height)


def variance_image(images: list[Image]) -> Image:
    """Per-pixel disagreement of two or more equally sized images.

    gray = round(255 * min(1, sqrt(mean_rgb(var(channel / 255))) / 0.5))
    with the population variance taken across the group.
    """
    if len(images) < 2:
        raise TooFewImages(f"need at least 2 images, got {len(images)}")
    size = images[0].size()
    for img in images[1:]:
        if img.size() != size:
            raise DimensionMismatch(f"mixed sizes {size} and {img.size()}")
    stack = np.stack([img.to_array() for img in images]).astype(np.float64) / 255.0
    var = stack.var(axis=0)          # population variance per channel
    avg = var.mean(axis=2)           # average over RGB
    gray = quantize(np.sqrt(avg) / FULL_SCALE_DEVIATION)
    return Image.from_array(np.repeat(gray[:, :, None], 3, axis=2))


# -- PPM (binary P6, maxval 255) --

def encode_ppm(image: Image) -> bytes:
    header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels


def _ppm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read whitespace-separated header integers, honoring '#' comments."""
    tokens: list[int] = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise MalformedPPM("truncated header")
        ch = data[i:i + 1]
        if ch in b" \t\r\n":
            i += 1
        elif ch == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
        elif ch.isdigit():
            j = i
            while j < len(data) and data[j:j + 1].isdigit():
                j += 1
            tokens.append(int(data[i:j]))
            i = j
        else:
            raise MalformedPPM(f"unexpected byte {ch!r} in header")
    return tokens, i


def decode_ppm(data: bytes) -> Image:
    if not data.startswith(b"P6"):
        raise MalformedPPM("not a binary P6 file")
    try:
        (width, height, maxval), pos = _ppm_tokens(data[2:], 3)
    except MalformedPPM:
        raise
    pos += 2  # account for the magic bytes
    if maxval != 255:
        raise MalformedPPM(f"unsupported maxval {maxval}")
    if width <= 0 or height <= 0:
        raise MalformedPPM(f"bad dimensions {width}x{height}")
    if pos >= len(data) or data[pos:pos + 1] not in b" \t\r\n":
        raise MalformedPPM("missing whitespace after maxval")
    pos += 1
    raster = data[pos:pos + width * height * 3]
    if len(raster) < width * height * 3:
        raise MalformedPPM("truncated pixel data")
    return Image(width=width, height=height, pixels=bytes(raster))


# -- PNG (delegated to Pillow) --

def encode_png(image: Image) -> bytes:
    pil = PILImage.frombytes("RGB", image.size(), image.pixels)
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> Image:
    pil = PILImage.open(io.BytesIO(data)).convert("RGB")
    return Image(width=pil.width, height=pil.height, pixels=pil.tobytes())


def decode_auto(data: bytes) -> Image:
    """Sniff PPM vs PNG; external toolchains may emit either."""
    if data.startswith(b"P6"):
        return decode_ppm(data)
    return decode_png(data)
