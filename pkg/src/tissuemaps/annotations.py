"""Polygon annotations: GeoJSON ingestion and rasterization into layer grids.

Coordinates are WSI level-0 pixels. A pixel of the target grid is covered
by a polygon iff its center lies inside under the even-odd rule after
scaling; holes participate in the same parity count. Overlapping
annotations resolve by hierarchy depth (more specific class wins), then
by file order (later wins).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GeoJsonError, LookupMissError, TissueMapsError
from .maps import LayerGrid
from .profiles import LayerKind, Profile, depth, lookup

Point = tuple[float, float]
Ring = list[Point]


@dataclass(frozen=True)
class Annotation:
    """One polygon with a class key; holes are subtracted by parity."""

    layer_kind: LayerKind
    class_key: str
    exterior: tuple[Point, ...]
    holes: tuple[tuple[Point, ...], ...] = ()
    order_index: int = 0

    def rings(self) -> list[tuple[Point, ...]]:
        return [self.exterior, *self.holes]


@dataclass
class AnnotationSet:
    wsi_id: str
    annotations: list[Annotation] = field(default_factory=list)
    source_tool: str = ""


def _close_ring(points: list, feature_index: int) -> tuple[Point, ...]:
    ring = [(float(x), float(y)) for x, y in points]
    if ring and ring[0] != ring[-1]:
        ring.append(ring[0])
    if len(set(ring)) < 3:
        raise GeoJsonError(
            f"ring has fewer than 3 distinct vertices ({len(set(ring))})",
            feature=feature_index,
        )
    return tuple(ring)


def _class_key(properties: dict, feature_index: int) -> str:
    classification = properties.get("classification")
    if isinstance(classification, dict) and classification.get("name"):
        return str(classification["name"])
    if isinstance(classification, str) and classification:
        return classification
    # V7 Darwin style exports put the class name directly on the feature
    if properties.get("name"):
        return str(properties["name"])
    raise GeoJsonError("missing classification name property", feature=feature_index)


def parse_geojson(
    text: str,
    layer_kind: LayerKind,
    wsi_id: str = "",
    source_tool: str = "",
) -> AnnotationSet:
    """Parse a FeatureCollection of Polygon/MultiPolygon annotations.

    Each feature needs `properties.classification.name` (QuPath) or
    `properties.name` as its class key; `properties.layer` overrides the
    default layer for that feature. MultiPolygons explode into one
    annotation per part, all sharing the class key; order_index follows
    encounter order across the whole document.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeoJsonError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise GeoJsonError("document is not a GeoJSON FeatureCollection")

    annotations: list[Annotation] = []
    order = 0
    for index, feature in enumerate(doc.get("features", [])):
        geometry = feature.get("geometry") or {}
        geom_type = geometry.get("type")
        properties = feature.get("properties") or {}
        key = _class_key(properties, index)
        kind = layer_kind
        if properties.get("layer"):
            kind = LayerKind.from_string(str(properties["layer"]))
        if geom_type == "Polygon":
            polygons = [geometry.get("coordinates") or []]
        elif geom_type == "MultiPolygon":
            polygons = geometry.get("coordinates") or []
        else:
            raise GeoJsonError(
                f"unsupported geometry type {geom_type!r}; expected Polygon or MultiPolygon",
                feature=index,
            )
        for poly in polygons:
            if not poly:
                raise GeoJsonError("polygon has no rings", feature=index)
            exterior = _close_ring(poly[0], index)
            holes = tuple(_close_ring(ring, index) for ring in poly[1:])
            annotations.append(
                Annotation(
                    layer_kind=kind,
                    class_key=key,
                    exterior=exterior,
                    holes=holes,
                    order_index=order,
                )
            )
            order += 1
    return AnnotationSet(wsi_id=wsi_id, annotations=annotations, source_tool=source_tool)


def split_by_layer(aset: AnnotationSet) -> dict[LayerKind, AnnotationSet]:
    """Split a possibly mixed set into per-layer sets, preserving order."""
    out: dict[LayerKind, AnnotationSet] = {}
    for ann in aset.annotations:
        bucket = out.setdefault(
            ann.layer_kind, AnnotationSet(aset.wsi_id, [], aset.source_tool)
        )
        bucket.annotations.append(ann)
    return out


DEFAULT_LONGEST_SIDE = 1024
LONGEST_SIDE_RANGE = (1000, 2000)


def choose_resolution(
    wsi_width: int, wsi_height: int, longest_side: int = DEFAULT_LONGEST_SIDE
) -> tuple[int, int]:
    """Map resolution for a WSI: longest side pinned, aspect preserved, sides >= 1."""
    if wsi_width < 1 or wsi_height < 1:
        raise TissueMapsError(f"WSI dimensions must be >= 1, got {wsi_width}x{wsi_height}")
    lo, hi = LONGEST_SIDE_RANGE
    if not lo <= longest_side <= hi:
        raise TissueMapsError(f"longest side {longest_side} outside [{lo}, {hi}]")
    if wsi_width >= wsi_height:
        return longest_side, max(1, round(wsi_height * longest_side / wsi_width))
    return max(1, round(wsi_width * longest_side / wsi_height)), longest_side


def rasterize(
    aset: AnnotationSet,
    profile: Profile,
    map_size: tuple[int, int],
    scale: float,
) -> LayerGrid:
    """Rasterize annotations of the profile's layer into a class-id grid.

    Pixels keep NI where nothing covers them. Precedence on overlap:
    deeper hierarchy (longer ancestor path) wins; equal depth, higher
    order_index wins. Raises on keys that do not resolve, listing every
    offender, and on annotations from a different layer.
    """
    width, height = map_size
    mismatched = [a.class_key for a in aset.annotations if a.layer_kind != profile.layer_kind]
    if mismatched:
        raise TissueMapsError(
            f"annotations for layer(s) other than {profile.layer_kind.value}: {mismatched}"
        )
    unresolved = []
    resolved: list[tuple[Annotation, int, int]] = []
    for ann in aset.annotations:
        try:
            class_id = lookup(profile, ann.class_key)
        except LookupMissError:
            unresolved.append(ann.class_key)
            continue
        resolved.append((ann, class_id, depth(profile, class_id)))
    if unresolved:
        raise LookupMissError(
            f"class key(s) not in {profile.layer_kind.value} profile: "
            + ", ".join(sorted(set(unresolved)))
        )

    grid = np.zeros((height, width), dtype=np.uint8)
    resolved.sort(key=lambda item: (item[2], item[0].order_index))
    for ann, class_id, _ in resolved:
        _paint_polygon(grid, ann, class_id, scale)
    return LayerGrid(grid)


def _paint_polygon(grid: np.ndarray, ann: Annotation, class_id: int, scale: float) -> None:
    """Scanline even-odd fill at pixel centers, clipped to the grid."""
    height, width = grid.shape
    x1s, y1s, x2s, y2s = [], [], [], []
    ymin, ymax = math.inf, -math.inf
    for ring in ann.rings():
        for (ax, ay), (bx, by) in zip(ring, ring[1:]):
            if ay == by:
                continue  # horizontal edges never cross a scanline
            x1s.append(ax * scale)
            y1s.append(ay * scale)
            x2s.append(bx * scale)
            y2s.append(by * scale)
            ymin = min(ymin, ay * scale, by * scale)
            ymax = max(ymax, ay * scale, by * scale)
    if not x1s:
        return
    x1 = np.array(x1s)
    y1 = np.array(y1s)
    x2 = np.array(x2s)
    y2 = np.array(y2s)
    slope = (x2 - x1) / (y2 - y1)

    row_lo = max(0, math.floor(ymin - 0.5))
    row_hi = min(height, math.ceil(ymax))
    for row in range(row_lo, row_hi):
        yc = row + 0.5
        crossing = ((y1 <= yc) & (yc < y2)) | ((y2 <= yc) & (yc < y1))
        if not crossing.any():
            continue
        xs = np.sort(x1[crossing] + (yc - y1[crossing]) * slope[crossing])
        for left, right in zip(xs[0::2], xs[1::2]):
            lo = max(0, math.ceil(left - 0.5))
            hi = min(width, math.ceil(right - 0.5))
            if lo < hi:
                grid[row, lo:hi] = class_id
