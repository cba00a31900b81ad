"""Low-level visual descriptors computed on the normalized window.

Five feature types are built in:

* ``color_hist``  - 30 values, 10 bins per RGB channel, each channel sums to 1
* ``lum_hist``    - 10 values, luminance histogram
* ``hog16``/``hog32`` - oriented-gradient cell descriptors at two cell sizes
* ``lbp``         - uniform local binary pattern histograms per 16x16 cell

All of them are deterministic functions of the pixel grid.  Externally
computed vectors can join the same pipeline through the JSONL interchange
format at the bottom of this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import InvalidParam, ParseError

HIST_BINS = 10
HOG_ORIENTATIONS = 9
HOG_CLIP = 0.2
LBP_CELL = 16
LBP_BINS = 59  # 58 uniform patterns + 1 catch-all


@dataclass(frozen=True)
class FeatureVector:
    """A named, fixed-length descriptor for one image."""

    feature_name: str
    values: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]


def grayscale(img: np.ndarray) -> np.ndarray:
    """Luma (0.299 R + 0.587 G + 0.114 B) as float64, shape (H, W)."""
    rgb = img.astype(np.float64)
    return 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]


def _bin_channel(values: np.ndarray) -> np.ndarray:
    """Histogram one channel into 10 equal-width bins over [0, 255].

    Bin i covers [25.5 i, 25.5 (i+1)); 255 itself lands in the last bin.
    Normalized to sum 1 (the channel always has at least one pixel).
    """
    idx = np.minimum(np.floor(values / 25.5).astype(np.int64), HIST_BINS - 1)
    counts = np.bincount(idx.ravel(), minlength=HIST_BINS).astype(np.float64)
    return counts / counts.sum()


def color_histogram(img: np.ndarray) -> FeatureVector:
    """Per-channel RGB histogram, 30 values (R bins, then G, then B)."""
    chans = img.astype(np.float64)
    parts = [_bin_channel(chans[:, :, c]) for c in range(3)]
    return FeatureVector("color_hist", np.concatenate(parts))


def luminance_histogram(img: np.ndarray) -> FeatureVector:
    """Luminance histogram, 10 values."""
    return FeatureVector("lum_hist", _bin_channel(grayscale(img)))


# --------------------------------------------------------------------------
# Histogram of oriented gradients

def image_gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradients (gx, gy); the 1px border reads zero."""
    gx = np.zeros_like(gray)
    gy = np.zeros_like(gray)
    gx[:, 1:-1] = gray[:, 2:] - gray[:, :-2]
    gy[1:-1, :] = gray[2:, :] - gray[:-2, :]
    return gx, gy


def hog_cell_histograms(gray: np.ndarray, cell_size: int) -> np.ndarray:
    """Unnormalized 9-bin orientation histograms per cell, shape (rows, cols, 9).

    Gradient orientation is taken modulo 180 degrees with bin centers at
    0, 20, ..., 160; each pixel's magnitude is split linearly between the
    two nearest centers (wrapping 180 back to 0).  A pixel votes only into
    the cell containing it; pixels beyond the last full cell are dropped.
    """
    h, w = gray.shape
    rows, cols = h // cell_size, w // cell_size
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols, HOG_ORIENTATIONS))
    gx, gy = image_gradients(gray)
    region = np.s_[: rows * cell_size, : cols * cell_size]
    gx, gy = gx[region], gy[region]
    mag = np.sqrt(gx * gx + gy * gy)
    theta = np.degrees(np.arctan2(gy, gx)) % 180.0
    t = theta / 20.0
    base = np.floor(t)
    frac = t - base
    lo = base.astype(np.int64) % HOG_ORIENTATIONS
    hi = (lo + 1) % HOG_ORIENTATIONS

    ys, xs = np.indices(mag.shape)
    cell = (ys // cell_size) * cols + (xs // cell_size)
    # Interleave the (low, high) votes per pixel so accumulation order is
    # exactly the per-pixel order a straight loop would use.
    idx = np.stack([cell * HOG_ORIENTATIONS + lo, cell * HOG_ORIENTATIONS + hi], axis=-1)
    wts = np.stack([mag * (1.0 - frac), mag * frac], axis=-1)
    hist = np.bincount(
        idx.ravel(), weights=wts.ravel(), minlength=rows * cols * HOG_ORIENTATIONS
    )
    return hist.reshape(rows, cols, HOG_ORIENTATIONS)


def _block_span(i: int, n: int) -> range:
    """Rows (or cols) of the 2x2 block a cell is normalized against."""
    anchor = min(i, max(n - 2, 0))
    return range(anchor, min(anchor + 2, n))


def _hog_normalize(cells: np.ndarray) -> np.ndarray:
    """L2 normalization of each cell against its 2x2 block, clip 0.2, renormalize.

    Both normalization passes divide by the block's total energy, the second
    recomputed after clipping, so relative weight between cells in a block
    survives.  Zero-energy blocks normalize to zero vectors.
    """
    rows, cols, _ = cells.shape
    out = np.zeros_like(cells)
    energy2 = np.einsum("rck,rck->rc", cells, cells)
    for r in range(rows):
        rspan = _block_span(r, rows)
        for c in range(cols):
            cspan = _block_span(c, cols)
            e2 = sum(energy2[rr, cc] for rr in rspan for cc in cspan)
            if e2 <= 0.0:
                continue
            norm = np.sqrt(e2)
            clipped_e2 = 0.0
            for rr in rspan:
                for cc in cspan:
                    u = np.minimum(cells[rr, cc] / norm, HOG_CLIP)
                    clipped_e2 += float(u @ u)
            own = np.minimum(cells[r, c] / norm, HOG_CLIP)
            out[r, c] = own / np.sqrt(clipped_e2)
    return out


def hog(img: np.ndarray, cell_size: int) -> FeatureVector:
    """Block-normalized HoG descriptor, row-major cell concatenation.

    Length is (W // cell) * (H // cell) * 9: 5544 for cell 16 and 1386 for
    cell 32 on the 360x450 window.
    """
    if cell_size not in (16, 32):
        raise InvalidParam(f"cell_size must be 16 or 32, got {cell_size!r}")
    cells = hog_cell_histograms(grayscale(img), cell_size)
    return FeatureVector(f"hog{cell_size}", _hog_normalize(cells).ravel())


# --------------------------------------------------------------------------
# Local binary patterns

# Neighbor offsets in circular (clockwise) order starting at the top-left;
# bit k of a pattern corresponds to offset k.
LBP_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def _circular_transitions(code: int) -> int:
    bits = [(code >> k) & 1 for k in range(8)]
    return sum(bits[k] != bits[(k + 1) % 8] for k in range(8))


def _uniform_table() -> np.ndarray:
    """Map each 8-bit pattern to a bin: uniform patterns 0..57, the rest 58."""
    table = np.full(256, LBP_BINS - 1, dtype=np.int64)
    uniform = [code for code in range(256) if _circular_transitions(code) <= 2]
    assert len(uniform) == 58
    for slot, code in enumerate(uniform):
        table[code] = slot
    return table


LBP_UNIFORM_TABLE = _uniform_table()


def lbp_codes(gray: np.ndarray) -> np.ndarray:
    """8-neighbor binary pattern per interior pixel, shape (H-2, W-2).

    Bit k is set when the neighbor at ``LBP_OFFSETS[k]`` is >= the center,
    making the code invariant to strictly increasing intensity remappings.
    """
    h, w = gray.shape
    if h < 3 or w < 3:
        return np.zeros((max(h - 2, 0), max(w - 2, 0)), dtype=np.int64)
    center = gray[1:-1, 1:-1]
    codes = np.zeros(center.shape, dtype=np.int64)
    for k, (dy, dx) in enumerate(LBP_OFFSETS):
        neighbor = gray[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        codes |= (neighbor >= center).astype(np.int64) << k
    return codes


def lbp(img: np.ndarray) -> FeatureVector:
    """Uniform-pattern LBP histograms per 16x16 cell, row-major, 59 bins each.

    Cells tile the image from the top-left; each cell histogram is
    normalized to sum 1 and cells that receive no patterns stay zero.
    Length on the 360x450 window: 22 * 28 * 59 = 36344.
    """
    gray = grayscale(img)
    h, w = gray.shape
    rows, cols = h // LBP_CELL, w // LBP_CELL
    hist = np.zeros(rows * cols * LBP_BINS, dtype=np.float64)
    codes = lbp_codes(gray)
    if codes.size and rows and cols:
        bins = LBP_UNIFORM_TABLE[codes]
        ys, xs = np.indices(codes.shape)
        ys, xs = ys + 1, xs + 1  # interior pixel coordinates
        keep = (ys < rows * LBP_CELL) & (xs < cols * LBP_CELL)
        cell = (ys[keep] // LBP_CELL) * cols + (xs[keep] // LBP_CELL)
        counts = np.bincount(
            cell * LBP_BINS + bins[keep], minlength=rows * cols * LBP_BINS
        )
        per_cell = counts.reshape(rows * cols, LBP_BINS).astype(np.float64)
        totals = per_cell.sum(axis=1, keepdims=True)
        np.divide(per_cell, totals, out=per_cell, where=totals > 0)
        hist = per_cell.ravel()
    return FeatureVector("lbp", hist)


# --------------------------------------------------------------------------
# Registry and interchange format

_EXTRACTORS: dict[str, Callable[[np.ndarray], FeatureVector]] = {
    "color_hist": color_histogram,
    "lum_hist": luminance_histogram,
    "hog16": lambda img: hog(img, 16),
    "hog32": lambda img: hog(img, 32),
    "lbp": lbp,
}

BUILTIN_FEATURES = tuple(_EXTRACTORS)

# Lengths on the canonical 360x450 window.
FEATURE_LENGTHS = {
    "color_hist": 30,
    "lum_hist": 10,
    "hog16": 5544,
    "hog32": 1386,
    "lbp": 36344,
}


def compute_feature(name: str, window: np.ndarray) -> FeatureVector:
    try:
        extract = _EXTRACTORS[name]
    except KeyError:
        raise InvalidParam(
            f"unknown feature {name!r}; built-ins are {', '.join(BUILTIN_FEATURES)}"
        ) from None
    return extract(window)


def write_features_jsonl(path: str, records: Iterable[tuple[str, FeatureVector]]) -> None:
    """Write (image_id, vector) records as JSONL, one object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for image_id, fv in records:
            obj = {
                "id": image_id,
                "feature": fv.feature_name,
                "values": fv.values.tolist(),
            }
            fh.write(json.dumps(obj, separators=(",", ":")))
            fh.write("\n")


def iter_features_jsonl(path: str) -> Iterator[tuple[str, FeatureVector]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                image_id = obj["id"]
                fv = FeatureVector(obj["feature"], np.asarray(obj["values"], dtype=np.float64))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad feature record: {exc}", line=lineno) from exc
            yield image_id, fv


def read_features_jsonl(path: str) -> dict[str, dict[str, FeatureVector]]:
    """Load a features file into {image_id: {feature_name: vector}}."""
    table: dict[str, dict[str, FeatureVector]] = {}
    for image_id, fv in iter_features_jsonl(path):
        table.setdefault(image_id, {})[fv.feature_name] = fv
    return table
