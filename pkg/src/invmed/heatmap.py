"""Grayscale PGM export of fields with a JSON sidecar holding the value range."""

import json
from pathlib import Path

import numpy as np

from .grid import ComplexField

__all__ = ["export_heatmap", "read_pgm"]

_PARTS = {"real": np.real, "imag": np.imag, "abs": np.abs}


def export_heatmap(field, out_image, part=None):
    """Write ``field`` as an 8-bit binary PGM (P5) plus ``<out>.json``.

    Values map linearly from min -> 0 to max -> 255.  A constant nonzero
    field becomes uniform mid-gray (128), an all-zero field all black.  Rows
    are written top-down, so the first image row is the largest y.

    Complex fields need ``part`` in {"real", "imag", "abs"}.
    """
    if isinstance(field, ComplexField) or np.iscomplexobj(field.values):
        if part not in _PARTS:
            raise ValueError("complex fields need part = 'real', 'imag' or 'abs'")
        vals = _PARTS[part](field.values)
    else:
        part = part or "real"
        if part not in _PARTS:
            raise ValueError(f"unknown part {part!r}")
        vals = _PARTS[part](field.values)
    vals = np.asarray(vals, dtype=float)
    vmin, vmax = float(vals.min()), float(vals.max())
    if vmax > vmin:
        img = np.rint((vals - vmin) / (vmax - vmin) * 255.0)
    elif vmax == 0.0:
        img = np.zeros_like(vals)
    else:
        img = np.full_like(vals, 128.0)
    img = np.flipud(img).astype(np.uint8)

    out_image = Path(out_image)
    h, w = img.shape
    with open(out_image, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    sidecar = out_image.with_suffix(out_image.suffix + ".json")
    sidecar.write_text(json.dumps({"min": vmin, "max": vmax, "part": part}) + "\n")
    return out_image


def read_pgm(path):
    """Read a binary PGM written by :func:`export_heatmap`."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)
