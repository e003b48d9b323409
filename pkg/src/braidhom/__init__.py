"""Triply graded link homology of closed braids over the two-element field.

Computes the unreduced HOMFLYPT homology table of a closed braid, the
second page of the spectral sequence connecting it to Khovanov homology,
and the Khovanov table itself, together with independent skein-polynomial
oracles and an unlink-pattern detector.
"""

from .braid import (
    BraidWord,
    MarkedDiagram,
    build_marked_diagram,
    closure_stats,
    markov_variants,
    parse_braid_word,
)
from .errors import (
    BraidhomError,
    InvariantViolationError,
    ResourceLimitError,
    UsageError,
)
from .pipeline import (
    DimTable,
    Engine,
    EngineConfig,
    e2_table,
    engine_for,
    homfly_table,
    khovanov_table,
    markov_invariance_report,
    verify_homotopy_identity,
)
from .analysis import (
    DetectionReport,
    LaurentSeries,
    detect_unlink,
    euler_series,
    hilbert_P_B,
    hilbert_fit,
    qhat_polynomial,
    qhat_skein_check,
)
from .oracle import homfly_series, jones_kauffman

__version__ = "0.1.0"

__all__ = [
    "BraidWord",
    "MarkedDiagram",
    "build_marked_diagram",
    "closure_stats",
    "markov_variants",
    "parse_braid_word",
    "BraidhomError",
    "InvariantViolationError",
    "ResourceLimitError",
    "UsageError",
    "DimTable",
    "Engine",
    "EngineConfig",
    "e2_table",
    "engine_for",
    "homfly_table",
    "khovanov_table",
    "markov_invariance_report",
    "verify_homotopy_identity",
    "DetectionReport",
    "LaurentSeries",
    "detect_unlink",
    "euler_series",
    "hilbert_P_B",
    "hilbert_fit",
    "qhat_polynomial",
    "qhat_skein_check",
    "homfly_series",
    "jones_kauffman",
]
