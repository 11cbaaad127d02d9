"""Durable archive of per-WSI tissue-map metadata with composition search.

Storage is an append-only log, one JSON record per line; reopening
replays the log (last record per wsi_id wins, which is how overwrite
works). Search runs against an in-memory column index of rolled-up
ratios and counts, rebuilt lazily after ingestion and swapped in
atomically, so concurrent readers always see a complete snapshot.

Comparisons evaluate against rolled-up ratios: a query on a parent
class matches mass annotated at any of its descendants. A composition
missing from a record (empty normalization denominator) compares as
ratio 0.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .composition import (
    CompositionVector,
    Mode,
    parse_composition,
    serialize_composition,
)
from .errors import CatalogError, LookupMissError
from .maps import TissueMap
from .profiles import (
    FIRST_SEMANTIC_ID,
    LayerKind,
    Profile,
    ancestors,
    builtin_profiles,
    lookup,
)
from .query import (
    And,
    Comparison,
    HasClass,
    MatchAll,
    Node,
    Not,
    OrganIs,
    Or,
    parse_query,
)

Compositions = dict[LayerKind, dict[Mode, CompositionVector]]


@dataclass
class CatalogRecord:
    wsi_id: str
    case_id: str
    organ_codes: tuple[str, ...]
    map_ref: str
    compositions: Compositions
    profile_hashes: dict[str, str]
    ingested_at: str


def _to_document(record: CatalogRecord, profiles: dict[LayerKind, Profile]) -> dict:
    return {
        "wsi_id": record.wsi_id,
        "case_id": record.case_id,
        "organ_codes": list(record.organ_codes),
        "map_ref": record.map_ref,
        "profile_hashes": record.profile_hashes,
        "ingested_at": record.ingested_at,
        "compositions": {
            layer.value: {
                mode.value: serialize_composition(vector, profiles[layer])
                for mode, vector in per_mode.items()
            }
            for layer, per_mode in record.compositions.items()
        },
    }


def _from_document(doc: dict, profiles: dict[LayerKind, Profile]) -> CatalogRecord:
    compositions: Compositions = {}
    for layer_name, per_mode in doc.get("compositions", {}).items():
        layer = LayerKind.from_string(layer_name)
        compositions[layer] = {
            Mode.from_string(mode_name): parse_composition(cdoc, profiles[layer])
            for mode_name, cdoc in per_mode.items()
        }
    return CatalogRecord(
        wsi_id=str(doc["wsi_id"]),
        case_id=str(doc.get("case_id", "")),
        organ_codes=tuple(doc.get("organ_codes", [])),
        map_ref=str(doc.get("map_ref", "")),
        compositions=compositions,
        profile_hashes=dict(doc.get("profile_hashes", {})),
        ingested_at=str(doc.get("ingested_at", "")),
    )


class _Index:
    """Rolled-up ratio and count columns for vectorized query evaluation."""

    def __init__(self, records: list[CatalogRecord], profiles: dict[LayerKind, Profile]):
        self.wsi_ids = [record.wsi_id for record in records]
        n = len(records)
        self.ratios = {
            (layer, mode): np.zeros((n, 256)) for layer in LayerKind for mode in Mode
        }
        self.counts = {layer: np.zeros((n, 256), dtype=np.int64) for layer in LayerKind}
        for row, record in enumerate(records):
            for layer, per_mode in record.compositions.items():
                profile = profiles[layer]
                for mode, vector in per_mode.items():
                    target = self.ratios[(layer, mode)]
                    for class_id, ratio in vector.ratios.items():
                        target[row, class_id] += ratio
                        for ancestor in ancestors(profile, class_id):
                            target[row, ancestor] += ratio
                if per_mode:
                    vector = next(iter(per_mode.values()))  # counts are mode-invariant
                    target = self.counts[layer]
                    for class_id, count in vector.pixel_counts.items():
                        target[row, class_id] += count
                        for ancestor in ancestors(profile, class_id):
                            target[row, ancestor] += count


_COMPARE = {
    "<": np.less,
    "<=": np.less_equal,
    "=": np.equal,
    ">=": np.greater_equal,
    ">": np.greater,
}


class Catalog:
    """Append-only catalog over one log file. Single writer, many readers."""

    def __init__(
        self,
        path: str | Path,
        profiles: dict[LayerKind, Profile] | None = None,
    ):
        self.path = Path(path)
        self.profiles = profiles if profiles is not None else builtin_profiles()
        self._records: dict[str, CatalogRecord] = {}
        self._index: _Index | None = None
        self._lock = threading.Lock()
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        record = _from_document(json.loads(line), self.profiles)
                        self._records[record.wsi_id] = record

    def __len__(self) -> int:
        return len(self._records)

    @property
    def wsi_ids(self) -> list[str]:
        return sorted(self._records)

    def get(self, wsi_id: str) -> CatalogRecord:
        try:
            return self._records[wsi_id]
        except KeyError:
            raise CatalogError(f"no record for wsi_id {wsi_id!r}") from None

    def ingest_record(
        self,
        tmap: TissueMap,
        compositions: Compositions,
        map_ref: str = "",
        case_id: str = "",
        overwrite: bool = False,
    ) -> CatalogRecord:
        """Build, validate, and durably append one record."""
        if tmap.wsi_id in self._records and not overwrite:
            raise CatalogError(f"wsi_id {tmap.wsi_id!r} already cataloged")
        for layer_name, recorded in tmap.profile_hashes.items():
            layer = LayerKind.from_string(layer_name)
            expected = self.profiles[layer].content_hash
            if recorded != expected:
                raise CatalogError(
                    f"{layer_name} profile hash {recorded[:12]} does not match "
                    f"catalog profile {expected[:12]}"
                )
        record = CatalogRecord(
            wsi_id=tmap.wsi_id,
            case_id=case_id,
            organ_codes=self._organ_codes(compositions),
            map_ref=map_ref,
            compositions=compositions,
            profile_hashes={
                layer.value: profile.content_hash
                for layer, profile in self.profiles.items()
            },
            ingested_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        line = json.dumps(_to_document(record, self.profiles), sort_keys=True)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()
        with self._lock:
            self._records[record.wsi_id] = record
            self._index = None
        return record

    def _organ_codes(self, compositions: Compositions) -> tuple[str, ...]:
        source = compositions.get(LayerKind.SOURCE, {})
        if not source:
            return ()
        profile = self.profiles[LayerKind.SOURCE]
        counts = next(iter(source.values())).pixel_counts
        codes = {
            profile.entry(class_id).code
            for class_id, count in counts.items()
            if count > 0 and class_id >= FIRST_SEMANTIC_ID and profile.has_id(class_id)
        }
        return tuple(sorted(codes))

    def _snapshot(self) -> _Index:
        with self._lock:
            if self._index is None:
                self._index = _Index(
                    [self._records[w] for w in sorted(self._records)], self.profiles
                )
            return self._index

    def search(self, query: str | Node) -> list[str]:
        """wsi_ids matching the query, ascending. Accepts text or a parsed AST."""
        node = parse_query(query) if isinstance(query, str) else query
        index = self._snapshot()
        if not index.wsi_ids:
            return []
        mask = self._evaluate(node, index)
        return [wsi_id for wsi_id, hit in zip(index.wsi_ids, mask) if hit]

    def _evaluate(self, node: Node, index: _Index) -> np.ndarray:
        n = len(index.wsi_ids)
        if isinstance(node, MatchAll):
            return np.ones(n, dtype=bool)
        if isinstance(node, Comparison):
            class_id = lookup(self.profiles[node.layer], node.key)
            column = index.ratios[(node.layer, node.mode)][:, class_id]
            return _COMPARE[node.op](column, node.threshold)
        if isinstance(node, OrganIs):
            class_id = lookup(self.profiles[LayerKind.SOURCE], node.code)
            return index.counts[LayerKind.SOURCE][:, class_id] > 0
        if isinstance(node, HasClass):
            class_id = lookup(self.profiles[node.layer], node.key)
            return index.counts[node.layer][:, class_id] > 0
        if isinstance(node, Not):
            return ~self._evaluate(node.item, index)
        if isinstance(node, And):
            out = np.ones(n, dtype=bool)
            for item in node.items:
                out &= self._evaluate(item, index)
            return out
        if isinstance(node, Or):
            out = np.zeros(n, dtype=bool)
            for item in node.items:
                out |= self._evaluate(item, index)
            return out
        raise CatalogError(f"cannot evaluate query node {node!r}")

    def export_cohort(
        self, wsi_ids: list[str], fmt: str = "csv", query_text: str = ""
    ) -> str:
        """Manifest of the selected records; fmt is csv or jsonl."""
        records = [self.get(wsi_id) for wsi_id in wsi_ids]
        if fmt == "csv":
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(["wsi_id", "case_id", "organ_codes", "map_ref", "query"])
            for record in records:
                writer.writerow(
                    [
                        record.wsi_id,
                        record.case_id,
                        "|".join(record.organ_codes),
                        record.map_ref,
                        query_text,
                    ]
                )
            return buffer.getvalue()
        if fmt == "jsonl":
            lines = [
                json.dumps(
                    {
                        "wsi_id": record.wsi_id,
                        "case_id": record.case_id,
                        "organ_codes": list(record.organ_codes),
                        "map_ref": record.map_ref,
                        "query": query_text,
                    },
                    sort_keys=True,
                )
                for record in records
            ]
            return "\n".join(lines) + ("\n" if lines else "")
        raise CatalogError(f"unknown manifest format {fmt!r}; use csv or jsonl")


def parse_cohort(text: str) -> list[str]:
    """wsi_ids from a manifest in either export format."""
    stripped = text.strip()
    if not stripped:
        return []
    if stripped.startswith("{"):
        return [json.loads(line)["wsi_id"] for line in stripped.splitlines() if line.strip()]
    rows = list(csv.DictReader(io.StringIO(text)))
    try:
        return [row["wsi_id"] for row in rows]
    except KeyError:
        raise CatalogError("manifest lacks a wsi_id column") from None


def record_summary(record: CatalogRecord) -> dict:
    """Compact JSON-ready view used by listings and the HTTP layer."""
    return {
        "wsi_id": record.wsi_id,
        "case_id": record.case_id,
        "organ_codes": list(record.organ_codes),
        "map_ref": record.map_ref,
        "ingested_at": record.ingested_at,
        "profile_hashes": record.profile_hashes,
    }
