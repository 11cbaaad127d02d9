"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from tissuemaps import LayerGrid, LayerKind, TissueMap, parse_profile

HEADER = "ID,PARENT,CODE,DEF COLOR,COLOR,NAME,COMMENT,ONTOLOGY,CONCEPT"

NULL_ROWS = [
    "0,-1,NI,#000000,#000000,NI,,,",
    "1,-1,UNC,#D3D3D3,#D3D3D3,UNC,,,",
    "2,-1,UNK,#808080,#808080,UNK,,,",
    "3,-1,NV,#660066,#660066,NV,,,",
]


def profile_text(rows: list[str]) -> str:
    return "\n".join([HEADER, *NULL_ROWS, *rows]) + "\n"


def make_profile(rows: list[str], layer_kind: LayerKind = LayerKind.TISSUE):
    return parse_profile(profile_text(rows), layer_kind)


# Highest id + 1 per layer in the shipped profiles; random grids drawn below
# these stay resolvable everywhere.
BUILTIN_ID_RANGE = {
    LayerKind.SOURCE: 84,
    LayerKind.TISSUE: 13,
    LayerKind.ALTERATION: 11,
}


def map_from_grids(
    source: np.ndarray,
    tissue: np.ndarray,
    alteration: np.ndarray,
    wsi_id: str = "w",
    profile_hashes: dict[str, str] | None = None,
) -> TissueMap:
    height, width = np.asarray(source).shape
    return TissueMap(
        wsi_id=wsi_id,
        source=LayerGrid.from_array(source),
        tissue=LayerGrid.from_array(tissue),
        alteration=LayerGrid.from_array(alteration),
        wsi_width=width,
        wsi_height=height,
        scale=1.0,
        profile_hashes=dict(profile_hashes or {}),
    )


def random_map(rng: np.random.Generator, width: int, height: int, wsi_id: str = "w") -> TissueMap:
    """Arbitrary 8-bit grids; ids need not resolve in any profile."""
    layers = [
        rng.integers(0, 256, size=(height, width), dtype=np.uint8) for _ in range(3)
    ]
    return map_from_grids(*layers, wsi_id=wsi_id)


def random_profiled_map(
    rng: np.random.Generator, width: int, height: int, wsi_id: str = "w"
) -> TissueMap:
    """Grids whose ids all exist in the shipped profiles."""
    layers = [
        rng.integers(0, BUILTIN_ID_RANGE[kind], size=(height, width), dtype=np.uint8)
        for kind in LayerKind
    ]
    return map_from_grids(*layers, wsi_id=wsi_id)
