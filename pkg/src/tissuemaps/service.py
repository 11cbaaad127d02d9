"""HTTP interface over one catalog for browsers and scripts.

Read endpoints serve search results, compositions, rendered layer
images, and bar charts; POST /cohorts exports manifests. Every response
carries the catalog's profile content hashes in X-Profile-Hash-*
headers so clients can validate caches.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from PIL import Image
from pydantic import BaseModel

from . import maps
from .catalog import Catalog, record_summary
from .composition import Mode, serialize_composition, to_barchart
from .errors import (
    CatalogError,
    CodecError,
    LookupAmbiguityError,
    LookupMissError,
    QuerySyntaxError,
    TissueMapsError,
)
from .profiles import LayerKind, serialize_profile
from .query import parse_query


class CohortRequest(BaseModel):
    wsi_ids: list[str]
    format: str = "csv"
    query: str = ""


def create_app(catalog: Catalog, map_root: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="tissuemaps catalog service")
    root = Path(map_root) if map_root is not None else catalog.path.parent
    hash_headers = {
        f"X-Profile-Hash-{layer.value.capitalize()}": profile.content_hash
        for layer, profile in catalog.profiles.items()
    }

    @app.middleware("http")
    async def _profile_hashes(request, call_next):
        response = await call_next(request)
        for name, value in hash_headers.items():
            response.headers[name] = value
        return response

    def _record(wsi_id: str):
        try:
            return catalog.get(wsi_id)
        except CatalogError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    def _layer(name: str) -> LayerKind:
        try:
            return LayerKind.from_string(name)
        except TissueMapsError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    def _mode(name: str) -> Mode:
        try:
            return Mode.from_string(name)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/wsis")
    def list_wsis(query: str = "", mode: str = Mode.PER_SPECIMEN.value):
        try:
            node = parse_query(query, default_mode=_mode(mode))
            wsi_ids = catalog.search(node)
        except QuerySyntaxError as exc:
            raise HTTPException(
                status_code=400, detail={"error": str(exc), "offset": exc.offset}
            ) from exc
        except (LookupMissError, LookupAmbiguityError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "query": query,
            "count": len(wsi_ids),
            "records": [record_summary(catalog.get(wsi_id)) for wsi_id in wsi_ids],
        }

    @app.get("/wsis/{wsi_id}/composition")
    def composition_of(wsi_id: str):
        record = _record(wsi_id)
        return {
            "wsi_id": record.wsi_id,
            "profile_hashes": record.profile_hashes,
            "compositions": {
                layer.value: {
                    mode.value: serialize_composition(vector, catalog.profiles[layer])
                    for mode, vector in per_mode.items()
                }
                for layer, per_mode in record.compositions.items()
            },
        }

    def _load_map(record) -> maps.TissueMap:
        if not record.map_ref:
            raise HTTPException(status_code=404, detail="record has no map reference")
        path = Path(record.map_ref)
        if not path.is_absolute():
            path = root / path
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"map file {path} not found")
        try:
            return maps.load(path)
        except CodecError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc

    @app.get("/wsis/{wsi_id}/map")
    def layer_image(wsi_id: str, layer: str = "tissue", alpha: float = 1.0):
        record = _record(wsi_id)
        tmap = _load_map(record)
        kind = _layer(layer)
        # No thumbnail pyramid here, so partial alpha blends over white.
        base = None
        if alpha < 1.0:
            base = np.full((tmap.height, tmap.width, 3), 255, dtype=np.uint8)
        try:
            rgb = maps.render_layer(tmap, kind, catalog.profiles[kind], alpha, base)
        except TissueMapsError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        buf = io.BytesIO()
        Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/wsis/{wsi_id}/barchart")
    def barchart(wsi_id: str, mode: str = Mode.PER_CONTENT.value):
        record = _record(wsi_id)
        wanted = _mode(mode)
        vectors = [
            record.compositions[layer][wanted]
            for layer in LayerKind
            if wanted in record.compositions.get(layer, {})
        ]
        svg = to_barchart(vectors, catalog.profiles, title=record.wsi_id)
        return Response(content=svg, media_type="image/svg+xml")

    @app.post("/cohorts")
    def cohorts(body: CohortRequest):
        try:
            manifest = catalog.export_cohort(body.wsi_ids, body.format, body.query)
        except CatalogError as exc:
            status = 404 if "no record" in str(exc) else 400
            raise HTTPException(status_code=status, detail=str(exc)) from exc
        media = "text/csv" if body.format == "csv" else "application/x-ndjson"
        return Response(
            content=manifest,
            media_type=media,
            headers={
                "Content-Disposition": f"attachment; filename=cohort.{body.format}"
            },
        )

    @app.get("/profiles/{layer}")
    def profile_csv(layer: str):
        kind = _layer(layer)
        profile = catalog.profiles[kind]
        return Response(
            content=serialize_profile(profile),
            media_type="text/csv",
            headers={"ETag": f'"{profile.content_hash}"'},
        )

    return app
