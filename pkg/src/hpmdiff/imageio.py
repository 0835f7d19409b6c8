"""8-bit grayscale image files: PGM (P2/P5) and PNG."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ImageFormatError

__all__ = ["read_gray8", "write_gray8", "write_heatmap", "to_uint8"]


def _pgm_tokens(data: bytes):
    """Yield ``(token, end_offset)`` for header tokens, skipping ``#`` comments."""
    i, n = 0, len(data)
    while i < n:
        c = data[i : i + 1]
        if c == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            yield data[i:j], j
            i = j


def _read_pgm(data: bytes, path) -> np.ndarray:
    tokens = _pgm_tokens(data)
    try:
        magic, _ = next(tokens)
        w_tok, _ = next(tokens)
        h_tok, _ = next(tokens)
        m_tok, end = next(tokens)
        width, height, maxval = int(w_tok), int(h_tok), int(m_tok)
    except (StopIteration, ValueError) as exc:
        raise ImageFormatError(f"{path}: corrupt PGM header") from exc
    if width <= 0 or height <= 0 or not 0 < maxval <= 255:
        raise ImageFormatError(f"{path}: unsupported PGM header ({width}x{height}, maxval {maxval})")
    count = width * height
    if magic == b"P5":
        raster = data[end + 1 : end + 1 + count]
        if len(raster) != count:
            raise ImageFormatError(f"{path}: truncated P5 raster ({len(raster)} of {count} bytes)")
        pix = np.frombuffer(raster, dtype=np.uint8)
    elif magic == b"P2":
        try:
            vals = [int(tok) for tok, _ in tokens]
        except ValueError as exc:
            raise ImageFormatError(f"{path}: non-integer sample in P2 raster") from exc
        if len(vals) < count:
            raise ImageFormatError(f"{path}: truncated P2 raster ({len(vals)} of {count} samples)")
        pix = np.array(vals[:count], dtype=np.int64)
    else:
        raise ImageFormatError(f"{path}: unsupported PGM magic {magic!r}")
    if pix.max(initial=0) > maxval:
        raise ImageFormatError(f"{path}: sample exceeds maxval {maxval}")
    if maxval != 255:
        pix = np.rint(pix * (255.0 / maxval))
    return pix.reshape(height, width).astype(np.uint8)


def read_gray8(path) -> np.ndarray:
    """Read a PGM or PNG file as an ``(H, W)`` uint8 array (color is converted by luma)."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P2", b"P5"):
        return _read_pgm(data, path)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        from PIL import Image as PILImage

        try:
            with PILImage.open(path) as im:
                if im.mode not in ("L", "P", "RGB", "RGBA", "LA", "1"):
                    raise ImageFormatError(f"{path}: unsupported PNG mode {im.mode!r} (8-bit only)")
                return np.asarray(im.convert("L"), dtype=np.uint8).copy()
        except OSError as exc:
            raise ImageFormatError(f"{path}: corrupt PNG ({exc})") from exc
    raise ImageFormatError(f"{path}: unsupported image format (expected PGM P2/P5 or PNG)")


def write_gray8(pixels: np.ndarray, path) -> None:
    """Write uint8 pixels; ``.png`` goes through Pillow, anything else as binary P5 PGM."""
    path = Path(path)
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    if path.suffix.lower() == ".png":
        from PIL import Image as PILImage

        PILImage.fromarray(pixels).save(path, format="PNG")
        return
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def to_uint8(values) -> np.ndarray:
    """Clamp intensities to ``[0, 1]`` and quantize to 8 bits."""
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_heatmap(values, path) -> tuple[float, float]:
    """Min-max normalize ``values`` to an 8-bit image; the range goes to ``<path stem>.range.txt``."""
    path = Path(path)
    values = np.asarray(values, dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    norm = (values - lo) / span if span > 0 else np.zeros_like(values)
    write_gray8(to_uint8(norm), path)
    path.with_suffix(".range.txt").write_text(f"min={lo!r}\nmax={hi!r}\n")
    return lo, hi
