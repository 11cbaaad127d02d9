"""Command line entry points wiring the pipeline end to end.

Every subcommand is a thin wrapper over one module operation: explicit
inputs and outputs, deterministic output bytes for identical inputs,
exit code 0 on success and a clean error message otherwise.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np
from PIL import Image

from . import maps
from .annotations import AnnotationSet, choose_resolution, parse_geojson, split_by_layer
from .annotations import rasterize as rasterize_set
from .catalog import Catalog
from .composition import (
    Mode,
    all_compositions,
    serialize_composition,
    to_barchart,
)
from .errors import TissueMapsError
from .fusion import PatchSpec, accumulate, fuse_binary, fuse_multiclass, parse_predictions
from .profiles import (
    LayerKind,
    Profile,
    builtin_profiles,
    load_profile_file,
    lookup,
    validate_profile,
)
from .regiongraph import build_graph, export_edge_list, graph_to_json

_CATALOG_OPTION = click.option(
    "--catalog",
    "catalog_path",
    envvar="TISSUEMAPS_CATALOG",
    required=True,
    type=click.Path(dir_okay=False, path_type=Path),
    help="Catalog log file (env: TISSUEMAPS_CATALOG).",
)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TissueMapsError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load_profiles(profile_dir: Path | None) -> dict[LayerKind, Profile]:
    if profile_dir is None:
        return builtin_profiles()
    return {
        kind: load_profile_file(profile_dir / f"{kind.value}.csv", kind)
        for kind in LayerKind
    }


def _profile_hashes(profiles: dict[LayerKind, Profile]) -> dict[str, str]:
    return {kind.value: profile.content_hash for kind, profile in profiles.items()}


@click.group()
def main() -> None:
    """Tissue map archive tools."""


@main.command("validate-profile")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--layer", default="tissue", show_default=True, help="Profile layer kind.")
@click.option("--machine", is_flag=True, help="Emit JSON instead of text.")
@_guarded
def validate_profile_cmd(path: Path, layer: str, machine: bool) -> None:
    """Check a profile CSV against the vocabulary rules."""
    kind = LayerKind.from_string(layer)
    profile = load_profile_file(path, kind)
    violations = validate_profile(profile)
    if machine:
        click.echo(
            json.dumps(
                {
                    "violations": [
                        {"kind": v.kind, "message": v.message, "ids": list(v.ids)}
                        for v in violations
                    ]
                },
                sort_keys=True,
            )
        )
    else:
        for violation in violations:
            click.echo(str(violation))
        click.echo(f"{len(violations)} violations")
    if violations:
        sys.exit(1)


@main.command("rasterize")
@click.option("--wsi-id", required=True)
@click.option("--wsi-width", required=True, type=int)
@click.option("--wsi-height", required=True, type=int)
@click.option("--source", "source_path", type=click.Path(exists=True, path_type=Path))
@click.option("--tissue", "tissue_path", type=click.Path(exists=True, path_type=Path))
@click.option(
    "--alteration", "alteration_path", type=click.Path(exists=True, path_type=Path)
)
@click.option("--longest-side", default=1024, show_default=True, type=int)
@click.option("--microns-per-pixel", type=float)
@click.option("--profile-dir", type=click.Path(file_okay=False, path_type=Path))
@click.option(
    "-o", "--output", required=True, type=click.Path(dir_okay=False, path_type=Path)
)
@_guarded
def rasterize_cmd(
    wsi_id: str,
    wsi_width: int,
    wsi_height: int,
    source_path: Path | None,
    tissue_path: Path | None,
    alteration_path: Path | None,
    longest_side: int,
    microns_per_pixel: float | None,
    profile_dir: Path | None,
    output: Path,
) -> None:
    """Rasterize GeoJSON annotation files into a tissue map."""
    profiles = _load_profiles(profile_dir)
    inputs = [
        (LayerKind.SOURCE, source_path),
        (LayerKind.TISSUE, tissue_path),
        (LayerKind.ALTERATION, alteration_path),
    ]
    if not any(path for _, path in inputs):
        raise click.UsageError("need at least one of --source/--tissue/--alteration")
    collected = []
    for kind, path in inputs:
        if path is None:
            continue
        aset = parse_geojson(path.read_text("utf-8"), kind, wsi_id=wsi_id)
        collected.extend(aset.annotations)
    merged = AnnotationSet(
        wsi_id, [replace(a, order_index=i) for i, a in enumerate(collected)]
    )
    width, height = choose_resolution(wsi_width, wsi_height, longest_side)
    tmap = maps.new_map(
        width,
        height,
        (wsi_width, wsi_height),
        wsi_id,
        microns_per_pixel=microns_per_pixel,
        profile_hashes=_profile_hashes(profiles),
    )
    for kind, aset in split_by_layer(merged).items():
        grid = rasterize_set(aset, profiles[kind], (width, height), tmap.scale)
        tmap = tmap.with_layer(kind, grid)
    maps.save(tmap, output)
    click.echo(f"wrote {output} and {maps.sidecar_path(output)}")


@main.command("fuse")
@click.option(
    "--predictions",
    "predictions_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Line-delimited JSON patch predictions.",
)
@click.option("--wsi-id", required=True)
@click.option("--wsi-width", required=True, type=int)
@click.option("--wsi-height", required=True, type=int)
@click.option("--layer", default="tissue", show_default=True)
@click.option("--patch-size", default=512, show_default=True, type=int)
@click.option("--stride", default=128, show_default=True, type=int)
@click.option(
    "--binary-class",
    default=None,
    help="Fuse all predictions as evidence for this single class (binary rule).",
)
@click.option("--longest-side", default=1024, show_default=True, type=int)
@click.option("--profile-dir", type=click.Path(file_okay=False, path_type=Path))
@click.option(
    "-o", "--output", required=True, type=click.Path(dir_okay=False, path_type=Path)
)
@_guarded
def fuse_cmd(
    predictions_path: Path,
    wsi_id: str,
    wsi_width: int,
    wsi_height: int,
    layer: str,
    patch_size: int,
    stride: int,
    binary_class: str | None,
    longest_side: int,
    profile_dir: Path | None,
    output: Path,
) -> None:
    """Fuse patch classifier predictions into a tissue map layer."""
    profiles = _load_profiles(profile_dir)
    kind = LayerKind.from_string(layer)
    profile = profiles[kind]
    spec = PatchSpec(patch_size, stride)
    grouped = parse_predictions(predictions_path.read_text("utf-8"), profile)
    if wsi_id not in grouped:
        raise click.ClickException(f"no predictions for wsi_id {wsi_id!r}")
    width, height = choose_resolution(wsi_width, wsi_height, longest_side)
    scale = width / wsi_width if wsi_width >= wsi_height else height / wsi_height
    if binary_class is not None:
        class_id = lookup(profile, binary_class)
        grid = fuse_binary(grouped[wsi_id], class_id, spec, (width, height), scale)
    else:
        pmaps = accumulate(grouped[wsi_id], spec, (width, height), scale)
        grid = fuse_multiclass([pmaps[c] for c in sorted(pmaps)])
    tmap = maps.new_map(
        width,
        height,
        (wsi_width, wsi_height),
        wsi_id,
        profile_hashes=_profile_hashes(profiles),
    ).with_layer(kind, grid)
    maps.save(tmap, output)
    click.echo(f"wrote {output} and {maps.sidecar_path(output)}")


@main.command("stats")
@click.argument("map_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--profile-dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "--barchart",
    "barchart_path",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Also write an SVG bar chart here.",
)
@click.option("--barchart-mode", default="per_content", show_default=True)
@_guarded
def stats_cmd(
    map_path: Path,
    profile_dir: Path | None,
    output: Path | None,
    barchart_path: Path | None,
    barchart_mode: str,
) -> None:
    """Compute all layer compositions of a map (JSON to stdout or -o)."""
    profiles = _load_profiles(profile_dir)
    tmap = maps.load(map_path)
    compositions = all_compositions(tmap)
    doc = {
        "wsi_id": tmap.wsi_id,
        "compositions": {
            layer.value: {
                mode.value: serialize_composition(vector, profiles[layer])
                for mode, vector in per_mode.items()
            }
            for layer, per_mode in compositions.items()
        },
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}")
    if barchart_path is not None:
        mode = Mode.from_string(barchart_mode)
        vectors = [
            compositions[layer][mode]
            for layer in LayerKind
            if mode in compositions.get(layer, {})
        ]
        barchart_path.write_text(
            to_barchart(vectors, profiles, title=tmap.wsi_id), encoding="utf-8"
        )
        click.echo(f"wrote {barchart_path}")


@main.command("index")
@click.argument(
    "map_paths",
    nargs=-1,
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@_CATALOG_OPTION
@click.option("--profile-dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--case-id", default="")
@click.option("--overwrite", is_flag=True, help="Replace existing records.")
@_guarded
def index_cmd(
    map_paths: tuple[Path, ...],
    catalog_path: Path,
    profile_dir: Path | None,
    case_id: str,
    overwrite: bool,
) -> None:
    """Compute compositions for maps and append records to the catalog."""
    catalog = Catalog(catalog_path, _load_profiles(profile_dir))
    for map_path in map_paths:
        tmap = maps.load(map_path)
        record = catalog.ingest_record(
            tmap,
            all_compositions(tmap),
            map_ref=str(map_path),
            case_id=case_id,
            overwrite=overwrite,
        )
        click.echo(f"indexed {record.wsi_id}")


@main.command("search")
@click.option("-q", "--query", "query_text", default="", help="Query text; empty matches all.")
@_CATALOG_OPTION
@click.option("--profile-dir", type=click.Path(file_okay=False, path_type=Path))
@click.option(
    "--manifest",
    "manifest_format",
    type=click.Choice(["csv", "jsonl"]),
    help="Emit a cohort manifest instead of bare ids.",
)
@click.option("--machine", is_flag=True, help="Emit JSON instead of one id per line.")
@_guarded
def search_cmd(
    query_text: str,
    catalog_path: Path,
    profile_dir: Path | None,
    manifest_format: str | None,
    machine: bool,
) -> None:
    """Search the catalog; print matching wsi_ids ascending."""
    catalog = Catalog(catalog_path, _load_profiles(profile_dir))
    wsi_ids = catalog.search(query_text)
    if manifest_format is not None:
        click.echo(
            catalog.export_cohort(wsi_ids, manifest_format, query_text), nl=False
        )
    elif machine:
        click.echo(json.dumps({"query": query_text, "wsi_ids": wsi_ids}, sort_keys=True))
    else:
        for wsi_id in wsi_ids:
            click.echo(wsi_id)


@main.command("graph")
@click.argument("map_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--profile-dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--k-nearest", type=int, help="Prune intra-layer edges to k nearest.")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "--edge-list",
    "edge_list_path",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Also write a plain edge-list file.",
)
@_guarded
def graph_cmd(
    map_path: Path,
    profile_dir: Path | None,
    k_nearest: int | None,
    output: Path | None,
    edge_list_path: Path | None,
) -> None:
    """Build the region graph of a map (JSON to stdout or -o)."""
    profiles = _load_profiles(profile_dir)
    graph = build_graph(maps.load(map_path), k_nearest=k_nearest)
    text = graph_to_json(graph, profiles) + "\n"
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}")
    if edge_list_path is not None:
        edge_list_path.write_text(export_edge_list(graph), encoding="utf-8")
        click.echo(f"wrote {edge_list_path}")


@main.command("render")
@click.argument("map_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--layer", default="tissue", show_default=True)
@click.option("--alpha", default=1.0, show_default=True, type=float)
@click.option(
    "--base",
    "base_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="RGB thumbnail to blend over (defaults to white when alpha < 1).",
)
@click.option("--profile-dir", type=click.Path(file_okay=False, path_type=Path))
@click.option(
    "-o", "--output", required=True, type=click.Path(dir_okay=False, path_type=Path)
)
@_guarded
def render_cmd(
    map_path: Path,
    layer: str,
    alpha: float,
    base_path: Path | None,
    profile_dir: Path | None,
    output: Path,
) -> None:
    """Render one layer through its LUT to a PNG overlay."""
    profiles = _load_profiles(profile_dir)
    kind = LayerKind.from_string(layer)
    tmap = maps.load(map_path)
    base = None
    if base_path is not None:
        base = np.asarray(Image.open(base_path).convert("RGB"))
    elif alpha < 1.0:
        base = np.full((tmap.height, tmap.width, 3), 255, dtype=np.uint8)
    rgb = maps.render_layer(tmap, kind, profiles[kind], alpha, base)
    Image.fromarray(rgb, mode="RGB").save(output, format="PNG")
    click.echo(f"wrote {output}")


@main.command("serve")
@_CATALOG_OPTION
@click.option("--profile-dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--map-root",
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory that relative map_refs resolve against.",
)
@_guarded
def serve_cmd(
    catalog_path: Path,
    profile_dir: Path | None,
    host: str,
    port: int,
    map_root: Path | None,
) -> None:
    """Serve the catalog over HTTP."""
    import uvicorn

    from .service import create_app

    catalog = Catalog(catalog_path, _load_profiles(profile_dir))
    uvicorn.run(create_app(catalog, map_root), host=host, port=port)


if __name__ == "__main__":
    main()
