"""Live-programming backend for image-producing visualization code.

The package keeps every successful compile as a node of a revision tree,
parses brace structure into static scope trees, diffs revisions, renders
result and variance images, propagates parameter changes across whole
branches, and serves all of it to clients over JSON-RPC.
"""

from .diffs import (
    FileDiff,
    Hunk,
    apply_diff,
    diff_to_json,
    line_diff,
    revision_diff,
    unified_text,
)
from .errors import VisevoError
from .images import (
    Image,
    decode_png,
    decode_ppm,
    encode_png,
    encode_ppm,
    variance_image,
)
from .metavis import GroupNode, branch_view, compress_tree, tree_payload
from .params import (
    Camera,
    ParameterDecl,
    ParameterSet,
    arcball,
    camera_from_params,
    camera_to_params,
    effective_params,
    extract_params,
    pan,
    zoom,
)
from .scheduler import (
    ArtifactCache,
    Debouncer,
    Job,
    JobQueue,
    SchedulerConfig,
)
from .scopes import (
    C_LIKE,
    MINIVIS,
    LanguageProfile,
    ScopeNode,
    parse_scopes,
    scope_hash,
    source_tree,
    structurally_equal,
)
from .session import SessionEngine
from .store import Revision, RevisionStore, SourceState, revision_id
from .toolchain.base import CompileResult, Diagnostic, ToolchainAdapter
from .toolchain.external import ExternalAdapter, load_toolchains
from .toolchain.minivis import MinivisAdapter

__all__ = [
    "ArtifactCache",
    "C_LIKE",
    "Camera",
    "CompileResult",
    "Debouncer",
    "Diagnostic",
    "ExternalAdapter",
    "FileDiff",
    "GroupNode",
    "Hunk",
    "Image",
    "Job",
    "JobQueue",
    "LanguageProfile",
    "MINIVIS",
    "MinivisAdapter",
    "ParameterDecl",
    "ParameterSet",
    "Revision",
    "RevisionStore",
    "SchedulerConfig",
    "ScopeNode",
    "SessionEngine",
    "SourceState",
    "ToolchainAdapter",
    "VisevoError",
    "apply_diff",
    "arcball",
    "branch_view",
    "camera_from_params",
    "camera_to_params",
    "compress_tree",
    "decode_png",
    "decode_ppm",
    "diff_to_json",
    "effective_params",
    "encode_png",
    "encode_ppm",
    "extract_params",
    "line_diff",
    "load_toolchains",
    "pan",
    "parse_scopes",
    "revision_diff",
    "revision_id",
    "scope_hash",
    "source_tree",
    "structurally_equal",
    "tree_payload",
    "unified_text",
    "variance_image",
    "zoom",
]
