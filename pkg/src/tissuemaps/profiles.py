"""Layer profiles: the coded class vocabularies behind every tissue map.

A profile is a CSV table of up to 256 entries. Each entry binds an 8-bit
class id to a coding-standard code (ICD-O-3 topography for the source
layer, NCIt for tissue types and alterations), a display color, and an
optional parent id that arranges entries into a forest. Ids 0..3 are
reserved for the NULL entries NI, UNC, UNK and NV; grids use them as
sentinels for background, not-encoded, uncertain and no-proper-value.

Profiles are immutable after parsing and safe to share across threads.
"""

from __future__ import annotations

import csv
import hashlib
import io
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

import numpy as np

from .errors import LookupAmbiguityError, LookupMissError, ProfileError, TissueMapsError

# Reserved sentinel ids, fixed by convention so grid values stay portable.
NI = 0    # no semantics: background / no specimen
UNC = 1   # not encoded: specimen present but unclassified
UNK = 2   # unknown: examined but uncertain
NV = 3    # no proper value: reserved
SENTINEL_IDS = frozenset((NI, UNC, UNK, NV))
FIRST_SEMANTIC_ID = 4

NULL_ENTRY_NAMES = ((NI, "NI"), (UNC, "UNC"), (UNK, "UNK"), (NV, "NV"))

MAX_ENTRIES = 256

CSV_COLUMNS = (
    "ID",
    "PARENT",
    "CODE",
    "DEF COLOR",
    "COLOR",
    "NAME",
    "COMMENT",
    "ONTOLOGY",
    "CONCEPT",
)

FALLBACK_COLOR = (255, 0, 255)  # loud magenta for ids without an entry

_COLOR_RE = re.compile(r"^#[0-9A-Fa-f]{6}$")


class LayerKind(str, Enum):
    SOURCE = "source"
    TISSUE = "tissue"
    ALTERATION = "alteration"

    @classmethod
    def from_string(cls, text: str) -> "LayerKind":
        try:
            return cls(text.lower())
        except ValueError:
            raise TissueMapsError(
                f"unknown layer {text!r}; expected one of source, tissue, alteration"
            ) from None


@dataclass(frozen=True)
class ProfileEntry:
    id: int
    parent_id: int
    code: str
    def_color: str
    color: str
    name: str
    comment: str = ""
    ontology_url: str = ""
    concept_url: str = ""


@dataclass
class Profile:
    """An ordered class vocabulary for one tissue-map layer."""

    layer_kind: LayerKind
    entries: list[ProfileEntry]
    content_hash: str = field(default="")

    def __post_init__(self) -> None:
        if not self.content_hash:
            self.content_hash = _digest(serialize_profile(self))

    def entry(self, entry_id: int) -> ProfileEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise LookupMissError(f"no entry with id {entry_id} in {self.layer_kind.value} profile")

    def has_id(self, entry_id: int) -> bool:
        return any(e.id == entry_id for e in self.entries)

    def ids(self) -> list[int]:
        return [e.id for e in self.entries]


@dataclass(frozen=True)
class Violation:
    """One broken profile invariant. `ids` names the offending entries."""

    kind: str
    message: str
    ids: tuple[int, ...] = ()

    def __str__(self) -> str:
        return f"[{self.kind}] {self.message}"


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_color(text: str) -> tuple[int, int, int]:
    """Parse '#RRGGBB' (case-insensitive) into an RGB triple."""
    if not _COLOR_RE.match(text):
        raise ValueError(f"malformed hex color {text!r}")
    return (int(text[1:3], 16), int(text[3:5], 16), int(text[5:7], 16))


def parse_profile(text: str, layer_kind: LayerKind) -> Profile:
    """Parse profile CSV text into a Profile, entries in file order.

    The header must contain exactly the nine Table-style column names
    (ID, PARENT, CODE, DEF COLOR, COLOR, NAME, COMMENT, ONTOLOGY,
    CONCEPT), in any order. Raises ProfileError with the offending row
    number for malformed rows, non-integer ids and bad hex colors.
    Structural invariants beyond field syntax are left to
    validate_profile.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ProfileError("empty file: missing header row", row=1) from None

    header = [h.strip() for h in header]
    missing = [c for c in CSV_COLUMNS if c not in header]
    unknown = [c for c in header if c not in CSV_COLUMNS]
    if missing:
        raise ProfileError(f"missing header column(s): {', '.join(missing)}", row=1)
    if unknown:
        raise ProfileError(f"unknown header column(s): {', '.join(unknown)}", row=1)
    if len(header) != len(CSV_COLUMNS):
        raise ProfileError("duplicate header column", row=1)
    col = {name: header.index(name) for name in CSV_COLUMNS}

    entries: list[ProfileEntry] = []
    for row in reader:
        line = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # blank line
        if len(row) != len(CSV_COLUMNS):
            raise ProfileError(
                f"malformed row: expected {len(CSV_COLUMNS)} fields, got {len(row)}", row=line
            )
        raw = {name: row[col[name]] for name in CSV_COLUMNS}
        try:
            entry_id = int(raw["ID"].strip())
        except ValueError:
            raise ProfileError(f"non-integer ID {raw['ID']!r}", row=line) from None
        try:
            parent_id = int(raw["PARENT"].strip())
        except ValueError:
            raise ProfileError(f"non-integer PARENT {raw['PARENT']!r}", row=line) from None
        for field_name in ("DEF COLOR", "COLOR"):
            value = raw[field_name].strip()
            if not _COLOR_RE.match(value):
                raise ProfileError(
                    f"malformed hex color {value!r} in {field_name}", row=line
                )
        entries.append(
            ProfileEntry(
                id=entry_id,
                parent_id=parent_id,
                code=raw["CODE"].strip(),
                def_color=raw["DEF COLOR"].strip(),
                color=raw["COLOR"].strip(),
                name=raw["NAME"].strip(),
                comment=raw["COMMENT"].strip(),
                ontology_url=raw["ONTOLOGY"].strip(),
                concept_url=raw["CONCEPT"].strip(),
            )
        )
    return Profile(layer_kind=layer_kind, entries=entries)


def serialize_profile(profile: Profile) -> str:
    """Serialize to canonical CSV: fixed column order, '\\n' endings, minimal quoting."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for e in profile.entries:
        writer.writerow(
            [
                e.id,
                e.parent_id,
                e.code,
                e.def_color,
                e.color,
                e.name,
                e.comment,
                e.ontology_url,
                e.concept_url,
            ]
        )
    return out.getvalue()


def validate_profile(profile: Profile) -> list[Violation]:
    """Check every profile invariant; an empty list means the profile is valid.

    Checked: NULL entries NI/UNC/UNK/NV at ids 0..3, id uniqueness and
    0..255 range, parent existence, acyclic parent links, the 256-entry
    cap, color syntax, and injective code and name lookups.
    """
    violations: list[Violation] = []
    entries = profile.entries

    if len(entries) > MAX_ENTRIES:
        violations.append(
            Violation(
                "too-many-entries",
                f"{len(entries)} entries exceed the {MAX_ENTRIES}-entry cap",
            )
        )

    seen: dict[int, int] = {}
    for e in entries:
        seen[e.id] = seen.get(e.id, 0) + 1
    for entry_id, count in seen.items():
        if count > 1:
            violations.append(
                Violation("duplicate-id", f"id {entry_id} appears {count} times", (entry_id,))
            )

    for e in entries:
        if not 0 <= e.id <= 255:
            violations.append(
                Violation("id-range", f"id {e.id} outside 0..255", (e.id,))
            )

    by_id = {e.id: e for e in entries}
    for slot, name in NULL_ENTRY_NAMES:
        got = by_id.get(slot)
        if got is None or got.name != name:
            found = "missing" if got is None else f"named {got.name!r}"
            violations.append(
                Violation("null-values", f"id {slot} must be NULL entry {name}, {found}", (slot,))
            )

    for e in entries:
        if e.parent_id != -1 and e.parent_id not in by_id:
            violations.append(
                Violation(
                    "unknown-parent",
                    f"entry {e.id} references missing parent {e.parent_id}",
                    (e.id,),
                )
            )

    violations.extend(_find_cycles(entries, by_id))

    for e in entries:
        for label, value in (("DEF COLOR", e.def_color), ("COLOR", e.color)):
            if not _COLOR_RE.match(value):
                violations.append(
                    Violation("bad-color", f"entry {e.id} has malformed {label} {value!r}", (e.id,))
                )

    for kind, key_of in (("duplicate-code", lambda e: e.code), ("duplicate-name", lambda e: e.name)):
        groups: dict[str, list[int]] = {}
        for e in entries:
            key = key_of(e)
            if key:
                groups.setdefault(key, []).append(e.id)
        for key, ids in sorted(groups.items()):
            if len(ids) > 1:
                violations.append(
                    Violation(kind, f"{key!r} used by entries {ids}", tuple(ids))
                )

    return violations


def _find_cycles(entries: list[ProfileEntry], by_id: dict[int, ProfileEntry]) -> list[Violation]:
    cycles: list[tuple[int, ...]] = []
    resolved: set[int] = set()  # known cycle-free
    in_cycle: set[int] = set()
    for start in by_id:
        if start in resolved or start in in_cycle:
            continue
        path: list[int] = []
        pos: dict[int, int] = {}
        node = start
        while True:
            if node in pos:
                cycle = tuple(sorted(path[pos[node]:]))
                if not in_cycle.intersection(cycle):
                    cycles.append(cycle)
                in_cycle.update(cycle)
                resolved.update(path)
                break
            if node in resolved or node in in_cycle:
                resolved.update(path)
                break
            pos[node] = len(path)
            path.append(node)
            parent = by_id[node].parent_id
            if parent == -1 or parent not in by_id:
                resolved.update(path)
                break
            node = parent
    return [
        Violation("cycle", f"parent links form a cycle through ids {list(c)}", c)
        for c in cycles
    ]


def ancestors(profile: Profile, entry_id: int) -> list[int]:
    """Ids on the parent chain from the entry up to its root, nearest first.

    The entry itself and the -1 terminator are excluded; a root entry
    yields []. Raises LookupMissError for ids absent from the profile.
    """
    by_id = {e.id: e for e in profile.entries}
    if entry_id not in by_id:
        raise LookupMissError(
            f"unknown id {entry_id} in {profile.layer_kind.value} profile"
        )
    chain: list[int] = []
    node = by_id[entry_id].parent_id
    while node != -1:
        if node not in by_id:
            break  # dangling parent; validation reports it
        chain.append(node)
        if len(chain) >= MAX_ENTRIES:
            raise TissueMapsError(
                f"parent chain of id {entry_id} exceeds {MAX_ENTRIES} links; profile has a cycle"
            )
        node = by_id[node].parent_id
    return chain


def depth(profile: Profile, entry_id: int) -> int:
    """Hierarchy depth: 0 for roots, 1 for their children, and so on."""
    return len(ancestors(profile, entry_id))


def lookup(profile: Profile, key: str) -> int:
    """Resolve a class key to an entry id.

    Codes are tried first (exact, case-sensitive), then names. Raises
    LookupMissError when nothing matches and LookupAmbiguityError when
    several entries share the key.
    """
    code_hits = [e.id for e in profile.entries if e.code and e.code == key]
    if len(code_hits) == 1:
        return code_hits[0]
    if len(code_hits) > 1:
        raise LookupAmbiguityError(
            f"code {key!r} matches entries {code_hits} in {profile.layer_kind.value} profile"
        )
    name_hits = [e.id for e in profile.entries if e.name == key]
    if len(name_hits) == 1:
        return name_hits[0]
    if len(name_hits) > 1:
        raise LookupAmbiguityError(
            f"name {key!r} matches entries {name_hits} in {profile.layer_kind.value} profile"
        )
    raise LookupMissError(f"no entry with code or name {key!r} in {profile.layer_kind.value} profile")


def lut(profile: Profile) -> np.ndarray:
    """256x3 uint8 color table: slot i = entry i's COLOR, else fallback magenta."""
    table = np.tile(np.array(FALLBACK_COLOR, dtype=np.uint8), (256, 1))
    for e in profile.entries:
        if 0 <= e.id <= 255:
            table[e.id] = parse_color(e.color)
    return table


def load_builtin(layer_kind: LayerKind) -> Profile:
    """Load one of the three shipped profile fixtures."""
    name = f"{layer_kind.value}.csv"
    text = resources.files("tissuemaps.data.profiles").joinpath(name).read_text("utf-8")
    return parse_profile(text, layer_kind)


def load_profile_file(path, layer_kind: LayerKind) -> Profile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_profile(fh.read(), layer_kind)


def builtin_profiles() -> dict[LayerKind, Profile]:
    return {kind: load_builtin(kind) for kind in LayerKind}
