"""Image and field file formats.

SF2D is a raw float stream: the 4-byte magic ``SF2D``, width and height as
little-endian uint32, four pad bytes, then ``height * width`` little-endian
float32 values in row-major order.
"""

import struct
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .grid import ParameterError

SF2D_MAGIC = b"SF2D"
_HEADER = struct.Struct("<4sII4x")


class FormatError(ValueError):
    pass


def write_sf2d(path, u):
    u = np.asarray(u)
    if u.ndim != 2:
        raise ParameterError("SF2D stores 2-D fields only")
    h, w = u.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(SF2D_MAGIC, w, h))
        f.write(np.ascontiguousarray(u, dtype="<f4").tobytes())


def read_sf2d(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated SF2D header")
    magic, w, h = _HEADER.unpack_from(data)
    if magic != SF2D_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    body = data[_HEADER.size:]
    if len(body) != 4 * w * h:
        raise FormatError(f"{path}: expected {w}x{h} floats, got {len(body)} bytes")
    return np.frombuffer(body, dtype="<f4").reshape(h, w).astype(np.float64)


def _pgm_tokens(data):
    # header tokens with '#' comments stripped; returns tokens and body offset
    tokens, i = [], 2
    while len(tokens) < 3:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if j == i:
            raise FormatError("truncated PGM header")
        tokens.append(int(data[i:j]))
        i = j
    return tokens, i + 1


def read_pgm(path):
    """Read a P2 or P5 graymap, scaled to [0, 1] by its maxval."""
    data = Path(path).read_bytes()
    kind = data[:2]
    if kind not in (b"P2", b"P5"):
        raise FormatError(f"{path}: not a PGM file")
    (w, h, maxval), off = _pgm_tokens(data)
    if not 0 < maxval < 65536:
        raise FormatError(f"{path}: bad maxval {maxval}")
    if kind == b"P2":
        vals = np.array(data[off:].split(), dtype=np.float64)
    else:
        dt = ">u2" if maxval > 255 else "u1"
        vals = np.frombuffer(data[off:off + w * h * np.dtype(dt).itemsize], dtype=dt)
    if vals.size != w * h:
        raise FormatError(f"{path}: expected {w * h} samples, got {vals.size}")
    return vals.reshape(h, w).astype(np.float64) / maxval


def _to_uint(u, maxval):
    u = np.asarray(u, dtype=np.float64)
    return np.rint(np.clip(u, 0.0, 1.0) * maxval).astype(np.int64)


def write_pgm(path, u, binary=True, maxval=255):
    q = _to_uint(u, maxval)
    h, w = q.shape
    with open(path, "wb") as f:
        f.write(f"{'P5' if binary else 'P2'}\n{w} {h}\n{maxval}\n".encode())
        if binary:
            f.write(q.astype(">u2" if maxval > 255 else "u1").tobytes())
        else:
            for row in q:
                f.write((" ".join(map(str, row)) + "\n").encode())


def read_png(path):
    img = Image.open(path)
    if img.mode in ("I;16", "I;16B", "I"):
        arr = np.asarray(img, dtype=np.float64)
        return arr / 65535.0
    return np.asarray(img.convert("L"), dtype=np.float64) / 255.0


def write_png(path, u, bits=8):
    if bits == 16:
        Image.fromarray(_to_uint(u, 65535).astype(np.uint16)).save(path)
    else:
        Image.fromarray(_to_uint(u, 255).astype(np.uint8), mode="L").save(path)


def read_image(path):
    """Load PGM, PNG or SF2D by extension; 8/16-bit data lands in [0, 1]."""
    ext = Path(path).suffix.lower()
    if ext in (".pgm", ".pnm"):
        return read_pgm(path)
    if ext in (".sf2d", ".f32", ".raw"):
        return read_sf2d(path)
    if ext == ".npy":
        return np.load(path).astype(np.float64)
    return read_png(path)


def write_image(path, u):
    ext = Path(path).suffix.lower()
    if ext in (".pgm", ".pnm"):
        write_pgm(path, u)
    elif ext in (".sf2d", ".f32", ".raw"):
        write_sf2d(path, u)
    else:
        write_png(path, u)


def normalize_intensity(u):
    """Affine map to [0, 1]; a constant image maps to zeros."""
    u = np.asarray(u, dtype=np.float64)
    lo, hi = float(u.min()), float(u.max())
    return np.zeros_like(u) if hi == lo else (u - lo) / (hi - lo)


def colormap_png(path, field, cmap="viridis", vmin=None, vmax=None):
    """Color-mapped rendering of a scalar field (scale or vesselness maps)."""
    from matplotlib import colormaps

    f = np.asarray(field, dtype=np.float64)
    lo = float(f.min()) if vmin is None else vmin
    hi = float(f.max()) if vmax is None else vmax
    t = np.zeros_like(f) if hi == lo else np.clip((f - lo) / (hi - lo), 0, 1)
    rgb = (colormaps[cmap](t)[..., :3] * 255).round().astype(np.uint8)
    Image.fromarray(rgb, mode="RGB").save(path)


def overlay_png(path, image, curves=(), gt=(), scale=4):
    """Gray image with ground truth in red and reconstructed curves in blue.

    Curve coordinates are pixel centres, so they are mapped to
    ``(x + 0.5) * scale`` in the upsampled canvas.
    """
    base = _to_uint(normalize_intensity(image), 255).astype(np.uint8)
    img = Image.fromarray(base, mode="L").convert("RGB")
    h, w = base.shape
    img = img.resize((w * scale, h * scale), Image.NEAREST)
    draw = ImageDraw.Draw(img)
    for color, cs in (((230, 40, 40), gt), ((40, 90, 255), curves)):
        for c in cs:
            pts = [((x + 0.5) * scale, (y + 0.5) * scale) for x, y in c.points]
            if len(pts) >= 2:
                draw.line(pts, fill=color, width=max(1, scale // 3))
    img.save(path)
