"""Tissue maps: three aligned 8-bit class-id grids plus provenance metadata.

The on-disk form is a single lossless RGB image holding all three layers
(G = source, B = tissue type, R = alteration) next to a JSON sidecar with
the slide id, dimensions, scale and profile hashes. Maps are immutable
after construction; rendering and encoding are pure functions.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CodecError, TissueMapsError
from .profiles import NI, LayerKind, Profile, lut

MAX_MAP_SIDE = 4096
SIDECAR_FORMAT = "tissuemap-rgb"
SIDECAR_VERSION = 1


@dataclass(frozen=True)
class LayerGrid:
    """A width x height grid of 8-bit class ids, row-major."""

    values: np.ndarray  # uint8, shape (height, width)

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2 or v.dtype != np.uint8:
            raise TissueMapsError("layer grid must be a 2-D uint8 array")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise TissueMapsError("layer grid dimensions must be >= 1")
        v.setflags(write=False)

    @classmethod
    def filled(cls, width: int, height: int, value: int = NI) -> "LayerGrid":
        if width < 1 or height < 1:
            raise TissueMapsError(f"grid dimensions must be >= 1, got {width}x{height}")
        return cls(np.full((height, width), value, dtype=np.uint8))

    @classmethod
    def from_array(cls, array: np.ndarray) -> "LayerGrid":
        return cls(np.asarray(array, dtype=np.uint8).copy())

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LayerGrid):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:  # content hash, grids are immutable
        return hash((self.values.shape, self.values.tobytes()))


@dataclass(frozen=True)
class TissueMap:
    """Three same-sized layer grids describing one whole slide image."""

    wsi_id: str
    source: LayerGrid
    tissue: LayerGrid
    alteration: LayerGrid
    wsi_width: int
    wsi_height: int
    scale: float
    microns_per_pixel: float | None = None
    profile_hashes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        dims = {(g.width, g.height) for g in (self.source, self.tissue, self.alteration)}
        if len(dims) != 1:
            raise TissueMapsError(f"layer grids differ in size: {sorted(dims)}")
        if self.wsi_width < 1 or self.wsi_height < 1:
            raise TissueMapsError("WSI dimensions must be >= 1")
        w, h = self.width, self.height
        if abs(self.scale * self.wsi_width - w) > 1.0 + 1e-9 or (
            abs(self.scale * self.wsi_height - h) > 1.0 + 1e-9
        ):
            raise TissueMapsError(
                f"scale {self.scale} inconsistent with map {w}x{h} for WSI "
                f"{self.wsi_width}x{self.wsi_height}"
            )

    @property
    def width(self) -> int:
        return self.source.width

    @property
    def height(self) -> int:
        return self.source.height

    def layer(self, kind: LayerKind) -> LayerGrid:
        return {
            LayerKind.SOURCE: self.source,
            LayerKind.TISSUE: self.tissue,
            LayerKind.ALTERATION: self.alteration,
        }[kind]

    def with_layer(self, kind: LayerKind, grid: LayerGrid) -> "TissueMap":
        grids = {k: self.layer(k) for k in LayerKind}
        grids[kind] = grid
        return TissueMap(
            wsi_id=self.wsi_id,
            source=grids[LayerKind.SOURCE],
            tissue=grids[LayerKind.TISSUE],
            alteration=grids[LayerKind.ALTERATION],
            wsi_width=self.wsi_width,
            wsi_height=self.wsi_height,
            scale=self.scale,
            microns_per_pixel=self.microns_per_pixel,
            profile_hashes=dict(self.profile_hashes),
        )


def new_map(
    width: int,
    height: int,
    wsi_size: tuple[int, int],
    wsi_id: str,
    microns_per_pixel: float | None = None,
    profile_hashes: dict[str, str] | None = None,
) -> TissueMap:
    """A map of the given resolution with all three layers set to NI."""
    if width < 1 or height < 1:
        raise TissueMapsError(f"map dimensions must be >= 1, got {width}x{height}")
    if width > MAX_MAP_SIDE or height > MAX_MAP_SIDE:
        raise TissueMapsError(f"map side exceeds {MAX_MAP_SIDE}: {width}x{height}")
    wsi_w, wsi_h = wsi_size
    return TissueMap(
        wsi_id=wsi_id,
        source=LayerGrid.filled(width, height),
        tissue=LayerGrid.filled(width, height),
        alteration=LayerGrid.filled(width, height),
        wsi_width=wsi_w,
        wsi_height=wsi_h,
        scale=width / wsi_w,
        microns_per_pixel=microns_per_pixel,
        profile_hashes=dict(profile_hashes or {}),
    )


def encode(tmap: TissueMap) -> tuple[bytes, dict]:
    """Pack the three layers into lossless PNG bytes plus a sidecar document.

    Channel order is G = source, B = tissue, R = alteration, so each layer
    survives as a bit-exact single channel of the RGB container.
    """
    rgb = np.stack(
        [tmap.alteration.values, tmap.source.values, tmap.tissue.values], axis=-1
    )
    buf = io.BytesIO()
    Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
    sidecar = {
        "format": SIDECAR_FORMAT,
        "version": SIDECAR_VERSION,
        "wsi_id": tmap.wsi_id,
        "width": tmap.width,
        "height": tmap.height,
        "wsi_width": tmap.wsi_width,
        "wsi_height": tmap.wsi_height,
        "scale": tmap.scale,
        "microns_per_pixel": tmap.microns_per_pixel,
        "profile_hashes": dict(tmap.profile_hashes),
    }
    return buf.getvalue(), sidecar


def decode(image_bytes: bytes, sidecar: dict) -> TissueMap:
    """Inverse of encode, bit-exact. Raises CodecError on any mismatch."""
    version = sidecar.get("version")
    if sidecar.get("format") != SIDECAR_FORMAT or version != SIDECAR_VERSION:
        raise CodecError(
            f"unsupported sidecar format/version: {sidecar.get('format')!r} v{version!r}"
        )
    if "profile_hashes" not in sidecar:
        raise CodecError("sidecar is missing profile_hashes")
    image = Image.open(io.BytesIO(image_bytes))
    if image.mode != "RGB":
        raise CodecError(f"expected an RGB image, got mode {image.mode!r}")
    rgb = np.asarray(image, dtype=np.uint8)
    height, width = rgb.shape[0], rgb.shape[1]
    if width != sidecar["width"] or height != sidecar["height"]:
        raise CodecError(
            f"image is {width}x{height} but sidecar says "
            f"{sidecar['width']}x{sidecar['height']}"
        )
    return TissueMap(
        wsi_id=sidecar["wsi_id"],
        source=LayerGrid.from_array(rgb[:, :, 1]),
        tissue=LayerGrid.from_array(rgb[:, :, 2]),
        alteration=LayerGrid.from_array(rgb[:, :, 0]),
        wsi_width=sidecar["wsi_width"],
        wsi_height=sidecar["wsi_height"],
        scale=sidecar["scale"],
        microns_per_pixel=sidecar.get("microns_per_pixel"),
        profile_hashes=dict(sidecar["profile_hashes"]),
    )


def sidecar_path(image_path: Path | str) -> Path:
    return Path(image_path).with_suffix(".json")


def save(tmap: TissueMap, image_path: Path | str) -> Path:
    """Write the PNG and its sidecar (same stem, .json). Returns the image path."""
    image_path = Path(image_path)
    png, sidecar = encode(tmap)
    image_path.write_bytes(png)
    sidecar_path(image_path).write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return image_path


def load(image_path: Path | str) -> TissueMap:
    image_path = Path(image_path)
    meta = sidecar_path(image_path)
    if not meta.exists():
        raise CodecError(f"sidecar {meta} not found next to {image_path}")
    return decode(image_path.read_bytes(), json.loads(meta.read_text("utf-8")))


def render_layer(
    tmap: TissueMap,
    layer_kind: LayerKind,
    profile: Profile,
    alpha: float = 1.0,
    base: np.ndarray | None = None,
) -> np.ndarray:
    """Render one layer through the profile LUT, optionally over a base image.

    Per channel: out = round(alpha * lut[id] + (1 - alpha) * base), with
    half-up rounding. Without a base the layer renders as if alpha were 1.
    The profile must hash-match the map's recorded profile for the layer
    (maps that never recorded a hash skip the check).
    """
    if not 0.0 <= alpha <= 1.0:
        raise TissueMapsError(f"alpha must be in [0, 1], got {alpha}")
    recorded = tmap.profile_hashes.get(layer_kind.value, "")
    if recorded and recorded != profile.content_hash:
        raise TissueMapsError(
            f"profile hash mismatch for layer {layer_kind.value}: map was built "
            f"with {recorded[:12]}..., got {profile.content_hash[:12]}..."
        )
    grid = tmap.layer(layer_kind)
    colors = lut(profile)[grid.values]  # (h, w, 3) uint8
    if base is None:
        return colors
    base = np.asarray(base)
    if base.shape != (grid.height, grid.width, 3):
        raise TissueMapsError(
            f"base image shape {base.shape} does not match map {grid.width}x{grid.height}"
        )
    blended = alpha * colors.astype(np.float64) + (1.0 - alpha) * base.astype(np.float64)
    return np.floor(blended + 0.5).astype(np.uint8)


def palette_image(grid: LayerGrid, profile: Profile) -> bytes:
    """Indexed PNG for human inspection: pixel = class id, palette slot i = lut(i)."""
    image = Image.fromarray(grid.values, mode="P")
    image.putpalette(lut(profile).flatten().tolist())
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()
