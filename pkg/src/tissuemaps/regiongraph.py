"""Graph representation of a tissue map.

Nodes are maximal 4-connected regions of one semantic class within one
layer; sentinel classes produce no nodes. Same-layer regions are fully
connected with Euclidean centroid distance as the weight (optionally
pruned to k nearest neighbors). Regions of different layers are linked
when they share pixel positions, weighted by the overlap pixel count --
one defensible reading of cross-layer spatial relationship, not the
only one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .maps import LayerGrid, TissueMap
from .profiles import FIRST_SEMANTIC_ID, LayerKind, Profile, builtin_profiles

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class Region:
    layer_kind: LayerKind
    class_id: int
    pixel_count: int
    centroid: tuple[float, float]  # (x, y) in map pixels
    bbox: tuple[int, int, int, int]  # inclusive (x0, y0, x1, y1)


@dataclass
class RegionGraph:
    nodes: list[Region] = field(default_factory=list)
    intra_edges: list[tuple[int, int, float]] = field(default_factory=list)
    cross_edges: list[tuple[int, int, int]] = field(default_factory=list)


def _labeled_regions(
    grid: LayerGrid, layer_kind: LayerKind, node_offset: int
) -> tuple[list[Region], np.ndarray]:
    """Regions in deterministic order plus a grid of node index + 1."""
    pixels = grid.values
    node_index = np.zeros(pixels.shape, dtype=np.int32)
    regions: list[Region] = []
    present = np.unique(pixels)
    for class_id in present:
        if class_id < FIRST_SEMANTIC_ID:
            continue
        labels, count = ndimage.label(pixels == class_id, structure=_FOUR_CONNECTED)
        if count == 0:
            continue
        flat = labels.ravel()
        sizes = np.bincount(flat, minlength=count + 1)
        ys, xs = np.indices(pixels.shape)
        sum_x = np.bincount(flat, weights=xs.ravel(), minlength=count + 1)
        sum_y = np.bincount(flat, weights=ys.ravel(), minlength=count + 1)
        boxes = ndimage.find_objects(labels)
        for k in range(1, count + 1):
            box = boxes[k - 1]
            regions.append(
                Region(
                    layer_kind=layer_kind,
                    class_id=int(class_id),
                    pixel_count=int(sizes[k]),
                    centroid=(sum_x[k] / sizes[k], sum_y[k] / sizes[k]),
                    bbox=(
                        box[1].start,
                        box[0].start,
                        box[1].stop - 1,
                        box[0].stop - 1,
                    ),
                )
            )
            node_index[labels == k] = node_offset + len(regions)
    return regions, node_index


def extract_regions(grid: LayerGrid, layer_kind: LayerKind) -> list[Region]:
    """Maximal 4-connected components per non-sentinel class, raster order."""
    regions, _ = _labeled_regions(grid, layer_kind, 0)
    return regions


def build_graph(tmap: TissueMap, k_nearest: int | None = None) -> RegionGraph:
    """Region graph over all three layers of one map.

    k_nearest, when set, keeps for each node only the edges to its k
    closest same-layer neighbors (union over both directions).
    """
    graph = RegionGraph()
    layer_ranges: list[tuple[int, int]] = []
    index_grids: list[np.ndarray] = []
    for layer_kind in LayerKind:
        start = len(graph.nodes)
        regions, node_index = _labeled_regions(
            tmap.layer(layer_kind), layer_kind, node_offset=start
        )
        graph.nodes.extend(regions)
        layer_ranges.append((start, len(graph.nodes)))
        index_grids.append(node_index)

    for start, stop in layer_ranges:
        edges = []
        for i in range(start, stop):
            for j in range(i + 1, stop):
                edges.append((i, j, math.dist(graph.nodes[i].centroid, graph.nodes[j].centroid)))
        if k_nearest is not None:
            edges = _prune_k_nearest(edges, k_nearest)
        graph.intra_edges.extend(edges)

    for a in range(len(index_grids)):
        for b in range(a + 1, len(index_grids)):
            graph.cross_edges.extend(_overlaps(index_grids[a], index_grids[b]))
    return graph


def _prune_k_nearest(edges: list[tuple[int, int, float]], k: int) -> list:
    by_node: dict[int, list[tuple[float, int]]] = {}
    for index, (i, j, weight) in enumerate(edges):
        by_node.setdefault(i, []).append((weight, index))
        by_node.setdefault(j, []).append((weight, index))
    keep: set[int] = set()
    for candidates in by_node.values():
        candidates.sort()
        keep.update(index for _, index in candidates[:k])
    return [edges[index] for index in sorted(keep)]


def _overlaps(grid_a: np.ndarray, grid_b: np.ndarray) -> list[tuple[int, int, int]]:
    """Cross edges (node_a, node_b, shared pixel count), deterministic order."""
    mask = (grid_a > 0) & (grid_b > 0)
    if not mask.any():
        return []
    pairs = grid_a[mask].astype(np.int64) * (2**32) + grid_b[mask]
    values, counts = np.unique(pairs, return_counts=True)
    return [
        (int(v // 2**32) - 1, int(v % 2**32) - 1, int(c))
        for v, c in zip(values, counts)
    ]


def export_graph(
    graph: RegionGraph, profiles: dict[LayerKind, Profile] | None = None
) -> dict:
    """JSON-ready node and edge tables; import_graph inverts exactly."""
    if profiles is None:
        profiles = builtin_profiles()
    nodes = []
    for index, region in enumerate(graph.nodes):
        profile = profiles[region.layer_kind]
        code = (
            profile.entry(region.class_id).code if profile.has_id(region.class_id) else ""
        )
        nodes.append(
            {
                "id": index,
                "layer": region.layer_kind.value,
                "class_id": region.class_id,
                "class_code": code,
                "pixel_count": region.pixel_count,
                "centroid": list(region.centroid),
                "bbox": list(region.bbox),
            }
        )
    return {
        "nodes": nodes,
        "intra_edges": [[i, j, w] for i, j, w in graph.intra_edges],
        "cross_edges": [[i, j, c] for i, j, c in graph.cross_edges],
    }


def import_graph(doc: dict) -> RegionGraph:
    graph = RegionGraph()
    for node in doc["nodes"]:
        graph.nodes.append(
            Region(
                layer_kind=LayerKind.from_string(node["layer"]),
                class_id=int(node["class_id"]),
                pixel_count=int(node["pixel_count"]),
                centroid=tuple(node["centroid"]),
                bbox=tuple(node["bbox"]),
            )
        )
    graph.intra_edges = [(int(i), int(j), float(w)) for i, j, w in doc["intra_edges"]]
    graph.cross_edges = [(int(i), int(j), int(c)) for i, j, c in doc["cross_edges"]]
    return graph


def export_edge_list(graph: RegionGraph) -> str:
    """One edge per line: `i j kind weight` for graph-ML toolchains."""
    lines = [f"{i} {j} intra {w!r}" for i, j, w in graph.intra_edges]
    lines += [f"{i} {j} cross {c}" for i, j, c in graph.cross_edges]
    return "\n".join(lines) + ("\n" if lines else "")


def graph_to_json(graph: RegionGraph, profiles: dict[LayerKind, Profile] | None = None) -> str:
    return json.dumps(export_graph(graph, profiles), indent=2, sort_keys=True)
