"""Patch tiling, strict labeling, and fusion of patch classifier outputs.

Patches live on a fixed lattice in WSI level-0 pixels (origin 0, one
step per stride, last origin where the patch still fits). Classifier
probabilities are averaged over overlapping footprints at map
resolution, then fused per pixel: a prediction counts as positive only
strictly above 0.5. Pixels never covered by any patch stay NI, which
keeps "not examined" distinct from "examined but unclassified" (UNC).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FusionError, TissueMapsError
from .maps import LayerGrid
from .profiles import FIRST_SEMANTIC_ID, NI, UNC, UNK, Profile, lookup

DEFAULT_PATCH_SIZE = 512
DEFAULT_STRIDE = 128


@dataclass(frozen=True)
class PatchSpec:
    patch_size: int = DEFAULT_PATCH_SIZE
    stride: int = DEFAULT_STRIDE

    def __post_init__(self) -> None:
        if not 1 <= self.stride <= self.patch_size:
            raise FusionError(
                f"stride {self.stride} outside [1, patch_size={self.patch_size}]"
            )


@dataclass(frozen=True)
class PatchPrediction:
    """One classifier output: patch origin in WSI px, class id, probability."""

    x: int
    y: int
    class_id: int
    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise FusionError(f"probability {self.probability} outside [0, 1]")


@dataclass
class ProbabilityMap:
    """Mean patch probability per map pixel for one class, with coverage counts."""

    class_id: int
    probabilities: np.ndarray  # float64 (H, W), 0 where coverage is 0
    coverage: np.ndarray  # int32 (H, W), contributing patches per pixel


def tile(wsi_width: int, wsi_height: int, spec: PatchSpec = PatchSpec()) -> list[tuple[int, int]]:
    """Patch origins in row-major order; count per axis is floor((dim-patch)/stride)+1."""
    if wsi_width < spec.patch_size or wsi_height < spec.patch_size:
        raise FusionError(
            f"WSI {wsi_width}x{wsi_height} smaller than patch size {spec.patch_size}"
        )
    xs = range(0, wsi_width - spec.patch_size + 1, spec.stride)
    ys = range(0, wsi_height - spec.patch_size + 1, spec.stride)
    return [(x, y) for y in ys for x in xs]


def _footprint(
    x: int, y: int, patch_size: int, scale: float, shape: tuple[int, int]
) -> tuple[int, int, int, int]:
    """Patch box in map pixels, clipped: floor the origin, ceil the extent."""
    height, width = shape
    x0 = max(0, int(np.floor(x * scale)))
    y0 = max(0, int(np.floor(y * scale)))
    x1 = min(width, int(np.ceil((x + patch_size) * scale)))
    y1 = min(height, int(np.ceil((y + patch_size) * scale)))
    return x0, y0, x1, y1


def label_patch(
    origin: tuple[int, int],
    grid: LayerGrid,
    scale: float,
    profile: Profile | None = None,
    patch_size: int = DEFAULT_PATCH_SIZE,
) -> int:
    """Strict label of a patch: most frequent non-sentinel id, ties to lowest.

    Returns NI when the footprint holds no non-sentinel pixels. The
    optional profile guards against ids foreign to the vocabulary.
    """
    x, y = origin
    x0, y0, x1, y1 = _footprint(x, y, patch_size, scale, grid.values.shape)
    if x0 >= x1 or y0 >= y1:
        raise FusionError(f"patch at ({x}, {y}) has an empty footprint at scale {scale}")
    counts = np.bincount(grid.values[y0:y1, x0:x1].ravel(), minlength=256)
    counts[:FIRST_SEMANTIC_ID] = 0
    if counts.sum() == 0:
        return NI
    winner = int(counts.argmax())  # argmax takes the first maximum: lowest id
    if profile is not None and not profile.has_id(winner):
        raise FusionError(f"grid contains id {winner} not present in the profile")
    return winner


def accumulate(
    predictions: list[PatchPrediction],
    spec: PatchSpec,
    map_size: tuple[int, int],
    scale: float,
) -> dict[int, ProbabilityMap]:
    """Mean probability per pixel per class over all covering patch footprints."""
    width, height = map_size
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, np.ndarray] = {}
    for pred in predictions:
        if pred.class_id not in sums:
            sums[pred.class_id] = np.zeros((height, width), dtype=np.float64)
            counts[pred.class_id] = np.zeros((height, width), dtype=np.int32)
        x0, y0, x1, y1 = _footprint(pred.x, pred.y, spec.patch_size, scale, (height, width))
        sums[pred.class_id][y0:y1, x0:x1] += pred.probability
        counts[pred.class_id][y0:y1, x0:x1] += 1
    out: dict[int, ProbabilityMap] = {}
    for class_id, total in sums.items():
        coverage = counts[class_id]
        probabilities = np.divide(
            total, coverage, out=np.zeros_like(total), where=coverage > 0
        )
        out[class_id] = ProbabilityMap(class_id, probabilities, coverage)
    return out


def _check_fusable(maps: list[ProbabilityMap]) -> tuple[int, int]:
    if not maps:
        raise FusionError("nothing to fuse: no probability maps")
    shape = maps[0].probabilities.shape
    seen: set[int] = set()
    for pmap in maps:
        if pmap.probabilities.shape != shape or pmap.coverage.shape != shape:
            raise FusionError("probability maps differ in shape")
        if pmap.class_id in seen:
            raise FusionError(f"duplicate class id {pmap.class_id}")
        if pmap.class_id < FIRST_SEMANTIC_ID:
            raise FusionError(f"cannot fuse onto sentinel id {pmap.class_id}")
        seen.add(pmap.class_id)
    return shape


def fuse_multiclass(maps: list[ProbabilityMap]) -> LayerGrid:
    """Combine per-class probability maps into one layer.

    Per covered pixel: more than one class above 0.5 is UNK, none is
    UNC, exactly one wins the pixel. Uncovered pixels stay NI.
    """
    shape = _check_fusable(maps)
    probs = np.stack([m.probabilities for m in maps])
    covered = np.stack([m.coverage for m in maps]).sum(axis=0) > 0
    above = probs > 0.5
    n_above = above.sum(axis=0)

    out = np.full(shape, NI, dtype=np.uint8)
    out[covered & (n_above == 0)] = UNC
    out[covered & (n_above >= 2)] = UNK
    ids = np.array([m.class_id for m in maps], dtype=np.uint8)
    sole = covered & (n_above == 1)
    out[sole] = ids[above.argmax(axis=0)][sole]
    return LayerGrid(out)


def fuse_binary(
    predictions: list[PatchPrediction],
    class_id: int,
    spec: PatchSpec,
    map_size: tuple[int, int],
    scale: float,
) -> LayerGrid:
    """Fuse raw patch predictions treated as evidence for a single class.

    Per covered pixel: every contributing probability above 0.5 gives
    the class, every one at or below gives UNC, a mix gives UNK.
    """
    if class_id < FIRST_SEMANTIC_ID:
        raise FusionError(f"cannot fuse onto sentinel id {class_id}")
    width, height = map_size
    total = np.zeros((height, width), dtype=np.int32)
    above = np.zeros((height, width), dtype=np.int32)
    for pred in predictions:
        x0, y0, x1, y1 = _footprint(pred.x, pred.y, spec.patch_size, scale, (height, width))
        total[y0:y1, x0:x1] += 1
        if pred.probability > 0.5:
            above[y0:y1, x0:x1] += 1
    out = np.full((height, width), NI, dtype=np.uint8)
    covered = total > 0
    out[covered & (above == 0)] = UNC
    out[covered & (above == total)] = class_id
    out[covered & (above > 0) & (above < total)] = UNK
    return LayerGrid(out)


def sample_patches(
    grid: LayerGrid,
    class_id: int,
    count: int,
    seed: int,
    spec: PatchSpec = PatchSpec(),
    scale: float = 1.0,
) -> list[tuple[int, int]]:
    """Uniformly sample lattice origins whose strict label is class_id.

    Deterministic for a fixed seed. Asking for more than exist returns
    all qualifying origins and warns.
    """
    if not (grid.values == class_id).any():
        raise FusionError(f"class {class_id} absent from grid")
    wsi_width = round(grid.width / scale)
    wsi_height = round(grid.height / scale)
    qualifying = [
        origin
        for origin in tile(wsi_width, wsi_height, spec)
        if label_patch(origin, grid, scale, patch_size=spec.patch_size) == class_id
    ]
    if count >= len(qualifying):
        if count > len(qualifying):
            warnings.warn(
                f"requested {count} patches, only {len(qualifying)} qualify; returning all",
                stacklevel=2,
            )
        return qualifying
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(qualifying), size=count, replace=False)
    return [qualifying[i] for i in sorted(picked)]


def parse_predictions(text: str, profile: Profile) -> dict[str, list[PatchPrediction]]:
    """Read line-delimited JSON patch predictions, grouped by wsi_id.

    Each line carries wsi_id, x, y, class (a profile code or name) and
    probability; this is the ingestion contract for external classifiers.
    """
    grouped: dict[str, list[PatchPrediction]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            pred = PatchPrediction(
                x=int(record["x"]),
                y=int(record["y"]),
                class_id=lookup(profile, str(record["class"])),
                probability=float(record["probability"]),
            )
            grouped.setdefault(str(record["wsi_id"]), []).append(pred)
        except (KeyError, ValueError, json.JSONDecodeError, TissueMapsError) as exc:
            raise FusionError(f"line {lineno}: bad prediction record: {exc}") from exc
    return grouped
