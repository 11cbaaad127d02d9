"""Class-area composition of tissue map layers.

Three normalization modes share one counting pass:

* PerImage: every pixel of the layer against the full image area.
* PerSpecimen: pixels inside the specimen mask (non-NI area of the
  source layer) against that mask; layer pixels the mask covers but the
  layer leaves NI count as UNC, so the non-NI ratios always sum to 1.
* PerContent: semantic pixels only, against the layer's semantic area.

Counts are exact integers; ratios are 64-bit quotients of them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDenominatorError
from .maps import TissueMap
from .profiles import (
    FIRST_SEMANTIC_ID,
    NI,
    UNC,
    LayerKind,
    Profile,
    ancestors,
    lut,
)


class Mode(str, enum.Enum):
    PER_IMAGE = "per_image"
    PER_SPECIMEN = "per_specimen"
    PER_CONTENT = "per_content"

    @classmethod
    def from_string(cls, value: str) -> "Mode":
        for mode in cls:
            if mode.value == value:
                return mode
        raise ValueError(f"unknown composition mode {value!r}")


@dataclass
class CompositionVector:
    layer_kind: LayerKind
    mode: Mode
    ratios: dict[int, float]  # class id -> ratio, zero entries omitted
    pixel_counts: dict[int, int]  # raw per-id histogram, mode-independent
    specimen_pixels: int
    total_pixels: int


def _specimen_mask(tmap: TissueMap, layer_kind: LayerKind) -> np.ndarray:
    """Non-NI area of the source layer; falls back to the layer itself."""
    mask = tmap.source.values != NI
    if not mask.any():
        mask = tmap.layer(layer_kind).values != NI
    return mask


def composition(tmap: TissueMap, layer_kind: LayerKind, mode: Mode) -> CompositionVector:
    """Area composition of one layer under the given normalization mode."""
    pixels = tmap.layer(layer_kind).values
    histogram = np.bincount(pixels.ravel(), minlength=256)
    pixel_counts = {int(i): int(n) for i, n in enumerate(histogram) if n > 0}
    specimen = _specimen_mask(tmap, layer_kind)
    specimen_pixels = int(specimen.sum())
    total_pixels = pixels.size

    if mode is Mode.PER_IMAGE:
        numerators = dict(pixel_counts)
        denominator = total_pixels
    elif mode is Mode.PER_SPECIMEN:
        inside = np.bincount(pixels[specimen].ravel(), minlength=256)
        inside[UNC] += inside[NI]  # specimen the layer leaves unencoded
        inside[NI] = 0
        numerators = {int(i): int(n) for i, n in enumerate(inside) if n > 0}
        denominator = specimen_pixels
    else:
        numerators = {i: n for i, n in pixel_counts.items() if i >= FIRST_SEMANTIC_ID}
        denominator = sum(numerators.values())
    if denominator == 0:
        raise EmptyDenominatorError(
            f"{mode.value} denominator is zero for layer {layer_kind.value}"
        )
    ratios = {i: n / denominator for i, n in numerators.items()}
    return CompositionVector(
        layer_kind=layer_kind,
        mode=mode,
        ratios=ratios,
        pixel_counts=pixel_counts,
        specimen_pixels=specimen_pixels,
        total_pixels=total_pixels,
    )


def rollup(vector: CompositionVector, profile: Profile) -> CompositionVector:
    """Accumulate each class's ratio and count into all of its ancestors.

    Leaves keep their values; a parent ends up with its own direct share
    plus everything below it.
    """
    ratios = dict(vector.ratios)
    counts = dict(vector.pixel_counts)
    for class_id, ratio in vector.ratios.items():
        for ancestor in ancestors(profile, class_id):
            ratios[ancestor] = ratios.get(ancestor, 0.0) + ratio
    for class_id, count in vector.pixel_counts.items():
        for ancestor in ancestors(profile, class_id):
            counts[ancestor] = counts.get(ancestor, 0) + count
    return CompositionVector(
        layer_kind=vector.layer_kind,
        mode=vector.mode,
        ratios=ratios,
        pixel_counts=counts,
        specimen_pixels=vector.specimen_pixels,
        total_pixels=vector.total_pixels,
    )


def all_compositions(tmap: TissueMap) -> dict[LayerKind, dict[Mode, CompositionVector]]:
    """Every layer under every mode; modes with an empty denominator are omitted."""
    out: dict[LayerKind, dict[Mode, CompositionVector]] = {}
    for layer_kind in LayerKind:
        per_mode: dict[Mode, CompositionVector] = {}
        for mode in Mode:
            try:
                per_mode[mode] = composition(tmap, layer_kind, mode)
            except EmptyDenominatorError:
                continue
        out[layer_kind] = per_mode
    return out


def serialize_composition(vector: CompositionVector, profile: Profile) -> dict:
    """JSON-ready document keyed by class code (falling back to decimal id)."""

    def key(class_id: int) -> str:
        if profile.has_id(class_id) and profile.entry(class_id).code:
            return profile.entry(class_id).code
        return str(class_id)

    return {
        "layer": vector.layer_kind.value,
        "mode": vector.mode.value,
        "ratios": {key(i): vector.ratios[i] for i in sorted(vector.ratios)},
        "pixel_counts": {key(i): vector.pixel_counts[i] for i in sorted(vector.pixel_counts)},
        "specimen_pixels": vector.specimen_pixels,
        "total_pixels": vector.total_pixels,
        "profile_hash": profile.content_hash,
    }


def parse_composition(doc: dict, profile: Profile) -> CompositionVector:
    """Inverse of serialize_composition for the same profile."""
    code_map = {entry.code: entry.id for entry in profile.entries if entry.code}

    def resolve(key: str) -> int:
        if key in code_map:
            return code_map[key]
        if key.isdigit():
            return int(key)
        raise KeyError(f"class key {key!r} not in {doc['layer']} profile")

    return CompositionVector(
        layer_kind=LayerKind.from_string(doc["layer"]),
        mode=Mode.from_string(doc["mode"]),
        ratios={resolve(k): float(v) for k, v in doc["ratios"].items()},
        pixel_counts={resolve(k): int(v) for k, v in doc["pixel_counts"].items()},
        specimen_pixels=int(doc["specimen_pixels"]),
        total_pixels=int(doc["total_pixels"]),
    )


BAR_WIDTH = 600
BAR_HEIGHT = 24
ROW_GAP = 10
LABEL_HEIGHT = 16
LEGEND_ROW = 18
MARGIN = 12


def _hex(color: tuple[int, int, int]) -> str:
    return "#{:02X}{:02X}{:02X}".format(*color)


def to_barchart(
    vectors: list[CompositionVector],
    profiles: dict[LayerKind, Profile],
    title: str = "",
) -> str:
    """Render stacked horizontal bars (one per vector) as an SVG document.

    Segment widths are proportional to ratios and land on integer pixel
    edges via cumulative rounding, so a vector summing to 1 fills the
    bar exactly. Colors come from each profile's LUT; a legend lists
    class names with their percentage.
    """
    parts: list[str] = []
    y = MARGIN
    if title:
        parts.append(
            f'<text x="{MARGIN}" y="{y + 12}" font-size="14" font-family="sans-serif">'
            f"{_escape(title)}</text>"
        )
        y += LABEL_HEIGHT + ROW_GAP
    legend: list[str] = []
    for vector in vectors:
        profile = profiles[vector.layer_kind]
        colors = lut(profile)
        parts.append(
            f'<text x="{MARGIN}" y="{y + 12}" font-size="12" font-family="sans-serif">'
            f"{vector.layer_kind.value} ({vector.mode.value})</text>"
        )
        y += LABEL_HEIGHT
        parts.append(
            f'<rect x="{MARGIN}" y="{y}" width="{BAR_WIDTH}" height="{BAR_HEIGHT}" '
            'fill="none" stroke="#444444"/>'
        )
        cumulative = 0.0
        edge = 0
        for class_id in sorted(vector.ratios):
            cumulative += vector.ratios[class_id]
            next_edge = round(cumulative * BAR_WIDTH)
            if next_edge > edge:
                fill = _hex(tuple(int(c) for c in colors[class_id]))
                parts.append(
                    f'<rect x="{MARGIN + edge}" y="{y}" width="{next_edge - edge}" '
                    f'height="{BAR_HEIGHT}" fill="{fill}"/>'
                )
            name = (
                profile.entry(class_id).name if profile.has_id(class_id) else f"id {class_id}"
            )
            legend.append(
                f"{vector.layer_kind.value}: {name} {vector.ratios[class_id] * 100:.2f}%"
                f"\t{_hex(tuple(int(c) for c in colors[class_id]))}"
            )
            edge = max(edge, next_edge)
        y += BAR_HEIGHT + ROW_GAP
    for line in legend:
        text, color = line.rsplit("\t", 1)
        parts.append(
            f'<rect x="{MARGIN}" y="{y + 3}" width="12" height="12" fill="{color}" '
            'stroke="#444444"/>'
        )
        parts.append(
            f'<text x="{MARGIN + 18}" y="{y + 13}" font-size="11" '
            f'font-family="sans-serif">{_escape(text)}</text>'
        )
        y += LEGEND_ROW
    height = y + MARGIN
    width = BAR_WIDTH + 2 * MARGIN
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n' + "\n".join(parts) + "\n</svg>\n"
    )


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
