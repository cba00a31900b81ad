"""Decoding and geometric normalization of corpus images.

Images are held as uint8 numpy arrays of shape (height, width, 3), RGB,
row-major.  Every downstream descriptor is computed on the fixed analysis
window produced by :func:`normalize_window`, so feature vectors have a
constant length regardless of the source resolution.
"""

from __future__ import annotations

import io
import json
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, ParseError

# Canonical analysis window: 360 px wide, 450 px tall.
WINDOW_WIDTH = 360
WINDOW_HEIGHT = 450

WHITE = 255


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG or JPEG bytes into an RGB pixel grid.

    Alpha, when present, is composited over a white background.  Raises
    DecodeError on malformed or unsupported input, carrying the decoder's
    diagnostic message.
    """
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except UnidentifiedImageError as exc:
        raise DecodeError(f"unrecognized image data: {exc}") from exc
    except OSError as exc:
        raise DecodeError(f"corrupt image data: {exc}") from exc
    if img.format not in ("PNG", "JPEG"):
        raise DecodeError(f"unsupported format {img.format!r}, expected PNG or JPEG")
    return _to_rgb_array(img)


def _to_rgb_array(img: Image.Image) -> np.ndarray:
    if img.mode == "P":
        img = img.convert("RGBA" if "transparency" in img.info else "RGB")
    if img.mode in ("RGBA", "LA"):
        rgba = img.convert("RGBA")
        background = Image.new("RGBA", rgba.size, (WHITE, WHITE, WHITE, 255))
        img = Image.alpha_composite(background, rgba).convert("RGB")
    elif img.mode != "RGB":
        img = img.convert("RGB")
    arr = np.asarray(img, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DecodeError(f"decoded to unexpected shape {arr.shape}")
    return arr


def is_landscape(img: np.ndarray) -> bool:
    """Landscape iff width >= height; squares count as landscape."""
    h, w = img.shape[:2]
    return w >= h


def normalize_window(img: np.ndarray) -> np.ndarray:
    """Scale and crop/pad an image to the canonical 360x450 window.

    Landscape inputs are uniformly scaled so the height becomes 450;
    portrait inputs so the width becomes 360.  The result is then
    center-cropped (or center-padded with white) on both axes to exactly
    360 wide by 450 tall.  Idempotent: a normalized window passes through
    unchanged, pixel for pixel.
    """
    h, w = img.shape[:2]
    if h < 1 or w < 1:
        raise ValueError("empty image")
    if is_landscape(img):
        new_h = WINDOW_HEIGHT
        new_w = max(1, int(w * WINDOW_HEIGHT / h + 0.5))
    else:
        new_w = WINDOW_WIDTH
        new_h = max(1, int(h * WINDOW_WIDTH / w + 0.5))
    if (new_w, new_h) != (w, h):
        pil = Image.fromarray(img).resize((new_w, new_h), Image.Resampling.BILINEAR)
        img = np.asarray(pil, dtype=np.uint8)
    return _center_fit(img, WINDOW_WIDTH, WINDOW_HEIGHT)


def _center_fit(img: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Center-crop each oversized axis, center-pad each undersized one with white."""
    h, w = img.shape[:2]
    if w > target_w:
        x0 = (w - target_w) // 2
        img = img[:, x0 : x0 + target_w]
    if h > target_h:
        y0 = (h - target_h) // 2
        img = img[y0 : y0 + target_h, :]
    h, w = img.shape[:2]
    if w < target_w or h < target_h:
        out = np.full((target_h, target_w, 3), WHITE, dtype=np.uint8)
        y0 = (target_h - h) // 2
        x0 = (target_w - w) // 2
        out[y0 : y0 + h, x0 : x0 + w] = img
        img = out
    return img


def encode_png(img: np.ndarray) -> bytes:
    """Serialize a pixel grid to PNG bytes."""
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="PNG")
    return buf.getvalue()


IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


def load_corpus_paths(corpus_dir: str) -> dict[str, str]:
    """Map image ids to file paths for a corpus directory.

    If ``corpus.jsonl`` exists it is taken as the manifest, one
    ``{"id": ..., "path": ...}`` object per line (paths relative to the
    directory unless absolute).  Otherwise every PNG/JPEG file is included
    with its basename, minus extension, as the id.
    """
    manifest = os.path.join(corpus_dir, "corpus.jsonl")
    paths: dict[str, str] = {}
    if os.path.isfile(manifest):
        with open(manifest, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    image_id, rel = rec["id"], rec["path"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ParseError(f"bad manifest record: {exc}", line=lineno) from exc
                path = rel if os.path.isabs(rel) else os.path.join(corpus_dir, rel)
                if image_id in paths:
                    raise ParseError(f"duplicate id {image_id!r}", line=lineno)
                paths[image_id] = path
        return paths
    for name in sorted(os.listdir(corpus_dir)):
        stem, ext = os.path.splitext(name)
        if ext.lower() in IMAGE_EXTENSIONS:
            paths[stem] = os.path.join(corpus_dir, name)
    return paths


def load_image(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_image(fh.read())
