"""Shot cut and shot similarity detection from block HSV histograms."""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

import numpy as np
from matplotlib.colors import rgb_to_hsv
from PIL import Image
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GeometryMismatch, ImageTooSmall, IngestError
from .model import Shot, TimeSpan

log = logging.getLogger(__name__)

GRID = (6, 5)  # columns, rows
BINS = (8, 4, 4)  # hue, saturation, value
N_BLOCKS = GRID[0] * GRID[1]
N_BINS = BINS[0] * BINS[1] * BINS[2]
KEEP_BLOCKS = 20

HIST_MAGIC = b"BH30"


@dataclass(frozen=True)
class Thresholds:
    theta_cut: float = 0.5
    theta_sim: float = 0.7

    def __post_init__(self) -> None:
        for name in ("theta_cut", "theta_sim"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [-1, 1]")


@dataclass(frozen=True, eq=False)
class BlockHistogramFrame:
    index: int
    hist: np.ndarray  # (blocks, bins), each row sums to 1

    def __post_init__(self) -> None:
        if self.hist.ndim != 2:
            raise GeometryMismatch("histogram frame must be 2-D (blocks x bins)")


def _edges(size: int, parts: int) -> list[int]:
    step = size // parts
    return [k * step for k in range(parts)] + [size]


def frame_histogram(raster: np.ndarray, index: int = 0, grid=GRID, bins=BINS) -> BlockHistogramFrame:
    """Per-block normalized HSV histograms of an 8-bit RGB image.

    The image is cut into ``grid`` (columns, rows) blocks of equal size, any
    remainder pixels going to the last row / column.
    """
    raster = np.asarray(raster)
    if raster.ndim != 3 or raster.shape[2] != 3:
        raise ValueError(f"expected an H x W x 3 raster, got shape {raster.shape}")
    height, width = raster.shape[:2]
    cols, rows = grid
    if width < cols or height < rows:
        raise ImageTooSmall(f"{width}x{height} image cannot hold a {cols}x{rows} grid")

    hsv = rgb_to_hsv(raster.astype(np.float64) / 255.0)
    nh, ns, nv = bins
    h = np.minimum((hsv[..., 0] * nh).astype(np.int64), nh - 1)
    s = np.minimum((hsv[..., 1] * ns).astype(np.int64), ns - 1)
    v = np.minimum((hsv[..., 2] * nv).astype(np.int64), nv - 1)
    code = (h * ns + s) * nv + v

    xs, ys = _edges(width, cols), _edges(height, rows)
    n_bins = nh * ns * nv
    out = np.empty((cols * rows, n_bins))
    k = 0
    for r in range(rows):
        for c in range(cols):
            block = code[ys[r] : ys[r + 1], xs[c] : xs[c + 1]].ravel()
            out[k] = np.bincount(block, minlength=n_bins) / block.size
            k += 1
    return BlockHistogramFrame(index, out)


def _standardize(hist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Centered, unit-norm rows plus a mask of zero-variance rows."""
    centered = hist - hist.mean(axis=-1, keepdims=True)
    norm = np.sqrt((centered**2).sum(axis=-1, keepdims=True))
    flat = norm[..., 0] == 0
    return np.divide(centered, norm, out=np.zeros_like(centered), where=~flat[..., None]), flat


def block_correlations(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pearson correlation of corresponding rows (last axis is the bin axis).

    Broadcasts over leading axes. A zero-variance row correlates 1 with an
    identical row and 0 with anything else.
    """
    za, fa = _standardize(a)
    zb, fb = _standardize(b)
    corr = np.clip((za * zb).sum(axis=-1), -1.0, 1.0)
    degenerate = fa | fb
    if degenerate.any():
        same = np.all(a == b, axis=-1)
        corr = np.where(degenerate, np.where(same, 1.0, 0.0), corr)
    return corr


def _trimmed(corr: np.ndarray, keep: int) -> np.ndarray:
    top = -np.sort(-corr, axis=-1)[..., :keep]
    return top.mean(axis=-1)


def compare_frames(a: BlockHistogramFrame, b: BlockHistogramFrame, keep: int = KEEP_BLOCKS) -> float:
    """Mean of the ``keep`` best block correlations between two frames."""
    if a.hist.shape != b.hist.shape:
        raise GeometryMismatch(f"frame geometries differ: {a.hist.shape} vs {b.hist.shape}")
    return float(_trimmed(block_correlations(a.hist, b.hist), min(keep, a.hist.shape[0])))


def _frame_times(first: int, last: int, fps: float) -> TimeSpan:
    return TimeSpan(round(first * 1000 / fps), round((last + 1) * 1000 / fps))


def detect_cuts(
    frames: Iterable[BlockHistogramFrame], th: Thresholds = Thresholds(), fps: float = 25.0
) -> list[Shot]:
    """Split a frame stream into shots.

    A cut falls between consecutive frames whose similarity is below
    ``th.theta_cut``. Frame positions are counted from 0 in stream order.
    """
    shots: list[Shot] = []
    start = 0
    prev: Optional[BlockHistogramFrame] = None
    pos = -1
    for pos, frame in enumerate(frames):
        if prev is not None and compare_frames(prev, frame) < th.theta_cut:
            shots.append(Shot(len(shots), _frame_times(start, pos - 1, fps), (start, pos - 1)))
            start = pos
        prev = frame
    if pos < 0:
        raise ValueError("cannot detect cuts in an empty frame stream")
    shots.append(Shot(len(shots), _frame_times(start, pos, fps), (start, pos)))
    return shots


def detect_similar_shots(
    shots: Sequence[Shot], frames: Sequence[BlockHistogramFrame], th: Thresholds = Thresholds()
) -> list[tuple[int, int]]:
    """Pairs (q, c), q < c, where the first frame of c resembles the last frame of q."""
    if len(shots) < 2:
        return []
    firsts = np.stack([frames[s.frame_range[0]].hist for s in shots])
    lasts = np.stack([frames[s.frame_range[1]].hist for s in shots])
    keep = min(KEEP_BLOCKS, firsts.shape[1])
    pairs = []
    for c in range(1, len(shots)):
        corr = block_correlations(firsts[c][None], lasts[:c])
        sims = _trimmed(corr, keep)
        pairs.extend((int(q), c) for q in np.flatnonzero(sims >= th.theta_sim))
    return pairs


def assign_labels(shots: Sequence[Shot], pairs: Iterable[tuple[int, int]]) -> list[Shot]:
    """Label shots by connected component of the similarity graph.

    Labels are numbered in order of each component's first shot.
    """
    n = len(shots)
    pairs = list(pairs)
    if pairs:
        i, j = np.array(pairs).T
        graph = coo_matrix((np.ones(len(pairs)), (i, j)), shape=(n, n))
    else:
        graph = coo_matrix((n, n))
    _, comp = connected_components(graph, directed=False)
    relabel: dict[int, int] = {}
    out = []
    for shot, c in zip(shots, comp):
        label = relabel.setdefault(int(c), len(relabel))
        out.append(Shot(shot.index, shot.span, shot.frame_range, label))
    return out


def label_sequence(shots: Sequence[Shot]) -> list[int]:
    labels = [s.label for s in shots]
    if any(label is None for label in labels):
        raise ValueError("shots must be labeled")
    return labels  # type: ignore[return-value]


def analyze(
    frames: Sequence[BlockHistogramFrame], th: Thresholds = Thresholds(), fps: float = 25.0
) -> tuple[list[Shot], list[tuple[int, int]]]:
    """Cuts, similarity pairs and labels in one go."""
    shots = detect_cuts(frames, th, fps)
    pairs = detect_similar_shots(shots, frames, th)
    return assign_labels(shots, pairs), pairs


# frame I/O


def read_ppm(path: Union[str, Path]) -> np.ndarray:
    with Image.open(path) as im:
        if im.format != "PPM" or im.mode != "RGB":
            raise IngestError(f"not a binary RGB PPM file ({im.format}, {im.mode})", path=path)
        return np.asarray(im, dtype=np.uint8)


def write_ppm(path: Union[str, Path], raster: np.ndarray) -> None:
    Image.fromarray(np.asarray(raster, dtype=np.uint8), "RGB").save(path, format="PPM")


def frame_paths(directory: Union[str, Path]) -> list[Path]:
    """PPM files of a directory, ordered by the integer in their stem."""
    found = []
    for p in Path(directory).iterdir():
        if p.suffix.lower() != ".ppm":
            continue
        try:
            found.append((int(p.stem), p))
        except ValueError:
            raise IngestError("frame file name is not a frame index", path=p) from None
    found.sort()
    return [p for _, p in found]


def histograms_from_dir(directory: Union[str, Path]) -> list[BlockHistogramFrame]:
    paths = frame_paths(directory)
    if not paths:
        raise IngestError("no PPM frames found", path=directory)
    return [frame_histogram(read_ppm(p), k) for k, p in enumerate(paths)]


def write_histogram_file(path: Union[str, Path], frames: Sequence[BlockHistogramFrame]) -> None:
    """Packed layout: ``BH30``, uint32 frame count, uint32 bins, float32 data (little endian)."""
    n_bins = frames[0].hist.shape[1] if frames else N_BINS
    with open(path, "wb") as fh:
        fh.write(HIST_MAGIC + struct.pack("<II", len(frames), n_bins))
        for f in frames:
            if f.hist.shape != (N_BLOCKS, n_bins):
                raise GeometryMismatch(f"frame {f.index} has shape {f.hist.shape}")
            fh.write(f.hist.astype("<f4").tobytes())


def read_histogram_file(path: Union[str, Path]) -> list[BlockHistogramFrame]:
    raw = Path(path).read_bytes()
    if raw[:4] != HIST_MAGIC or len(raw) < 12:
        raise IngestError("missing BH30 header", path=path)
    count, n_bins = struct.unpack("<II", raw[4:12])
    expected = 12 + count * N_BLOCKS * n_bins * 4
    if len(raw) != expected:
        raise IngestError(f"expected {expected} bytes, found {len(raw)}", path=path)
    data = np.frombuffer(raw, dtype="<f4", offset=12).reshape(count, N_BLOCKS, n_bins)
    return [BlockHistogramFrame(k, data[k].astype(np.float64)) for k in range(count)]


def iter_histograms(rasters: Iterable[np.ndarray]) -> Iterator[BlockHistogramFrame]:
    for k, raster in enumerate(rasters):
        yield frame_histogram(raster, k)
