"""Two-receiver caching broadcast schemes under a symbol-tapping adversary.

Exact bit-level implementations of the placement/delivery coding
schemes, seeded random-binning codebooks with nested embedding layers,
an erasure adversary with exact brute-force leakage accounting, and
closed-form rate bounds with sweep tables.
"""

from .bounds import (
    AllocationResult,
    RatePoint,
    capacity_d2,
    chain_scheme_rate,
    lower_bound,
    optimize_allocation,
    rate_point,
    single_receiver_bound,
    sweep,
    uncoded_placement_bound,
    upper_bound,
    write_sweep_csv,
)
from .codebook import (
    FORWARD,
    REVERSE,
    EmbeddedCodebook,
    EmbedSpec,
    build_codebook,
    dump_codebook,
)
from .core import (
    BitString,
    CacheContent,
    DemandVector,
    FileLibrary,
    KeyMaterial,
    SchemeConfig,
    SchemeId,
    SubfileLayout,
    TranscriptRecord,
    derive_seed,
    validate_config,
)
from .adversary import (
    AdversaryView,
    LeakageEnumerator,
    LeakageReport,
    TapPattern,
    exact_leakage,
    exact_mi,
    max_leakage,
    observe,
    tap_patterns,
)
from .errors import (
    AlphaOutOfRange,
    BadD,
    BlocklengthTooLarge,
    BudgetTooLarge,
    CachetapError,
    ConfigError,
    ConfigViolation,
    EnumerationTooLarge,
    IndexOutOfRange,
    LayoutMismatch,
    LengthMismatch,
    NotNormalized,
    WidthMismatch,
)
from .schemes import (
    SchemeLayout,
    SchemeRunner,
    layout_for,
    receiver_decode,
    run_round,
)

__all__ = [name for name in dir() if not name.startswith("_")]
