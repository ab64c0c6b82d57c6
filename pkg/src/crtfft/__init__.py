"""crtfft: keyed three-view CRT sparse FFT.

Recovers exactly k-sparse spectra from lazy time-domain access using three
coprime decimated views, 2-of-3 CRT gating (as the analyzable reference
form), peeling-only recovery, two-part verification on independently hashed
views, and a certified dense-FFT fallback.
"""

from .config import Config, load_config, replace
from .errors import (
    CrtFftError,
    DenseRegimeError,
    DuplicateConflictError,
    DuplicateFrequencyError,
    GridMismatchError,
    NonFiniteError,
    NotCoprimeError,
    OracleCapExceededError,
    OutOfRangeError,
    ParseError,
    SearchExhaustedError,
    StrideMismatchError,
)
from .numtheory import (
    ModTriple,
    coprime_divisor_capacity,
    egcd,
    find_coprime_moduli,
    garner2,
    garner3,
    garner3_parts,
    is_prime,
    mod_inverse,
)
from .dft import dft_direct, dft_forward, dft_inverse
from .opcount import OpCounter
from .signal import (
    SignalSource,
    SparseSpectrum,
    from_dense,
    load_spectrum,
    save_spectrum,
    synthesize,
)
from .planner import (
    ModuliPlan,
    Regime,
    RegimeParams,
    ViewParams,
    classify_regime,
    make_plan,
    validate_plan,
)
from .views import (
    ResidueSet,
    ViewSpectrum,
    build_view,
    build_view_from_spectrum,
    extract_residues,
    view_energy,
)
from .gating import GatedCandidate, GateStats, gate_pairs, gate_survivor_stats
from .peeling import (
    PeelOutcome,
    PeelState,
    PeelStatus,
    SingletonReading,
    detect_singletons,
    peel,
    recursive_spectrum,
    rehash,
    run_peeling,
)
from .verification import (
    VerificationReport,
    ViewCheck,
    parseval_check,
    residual_check,
    verify,
)
from .pipeline import (
    Certificate,
    RecoveryPath,
    RecoveryResult,
    build_certificate,
    dense_fallback,
    sparse_fft,
    sparse_fft_dense,
    verify_certificate,
)

__version__ = "0.1.0"
