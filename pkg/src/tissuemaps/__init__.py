"""Searchable tissue maps for whole slide image archives.

Three aligned class-id grids (source material, tissue type, pathological
alteration) describe each slide at thumbnail resolution. This package
covers the full pipeline: coded vocabularies (profiles), map encoding and
rendering, annotation rasterization, patch-prediction fusion, composition
statistics, a searchable catalog with a query language, region graphs,
and CLI/HTTP front ends.
"""

from .annotations import (
    Annotation,
    AnnotationSet,
    choose_resolution,
    parse_geojson,
    rasterize,
    split_by_layer,
)
from .catalog import Catalog, CatalogRecord, parse_cohort, record_summary
from .composition import (
    BAR_WIDTH,
    CompositionVector,
    Mode,
    all_compositions,
    composition,
    parse_composition,
    rollup,
    serialize_composition,
    to_barchart,
)
from .errors import (
    CatalogError,
    CodecError,
    EmptyDenominatorError,
    FusionError,
    GeoJsonError,
    LookupAmbiguityError,
    LookupMissError,
    ProfileError,
    QuerySyntaxError,
    TissueMapsError,
)
from .fusion import (
    PatchPrediction,
    PatchSpec,
    ProbabilityMap,
    accumulate,
    fuse_binary,
    fuse_multiclass,
    label_patch,
    parse_predictions,
    sample_patches,
    tile,
)
from .maps import (
    LayerGrid,
    TissueMap,
    decode,
    encode,
    load,
    new_map,
    palette_image,
    render_layer,
    save,
)
from .profiles import (
    NI,
    NV,
    UNC,
    UNK,
    LayerKind,
    Profile,
    ProfileEntry,
    Violation,
    ancestors,
    builtin_profiles,
    depth,
    load_builtin,
    load_profile_file,
    lookup,
    lut,
    parse_profile,
    serialize_profile,
    validate_profile,
)
from .query import (
    And,
    Comparison,
    HasClass,
    MatchAll,
    Not,
    Or,
    OrganIs,
    parse_query,
    serialize_query,
)
from .regiongraph import (
    Region,
    RegionGraph,
    build_graph,
    export_edge_list,
    export_graph,
    extract_regions,
    graph_to_json,
    import_graph,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
