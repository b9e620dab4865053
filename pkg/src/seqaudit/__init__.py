"""Sequential audit sampling for finite populations.

Calibrates per-stage stopping boundaries under the hypergeometric law (exact
dynamic programming or Monte Carlo at the least-favorable deviation rates),
runs live stop/continue sessions, and evaluates designs by operating
characteristics and replay over random inspection orders.
"""

__version__ = "0.1.0"

from .calibration import (  # noqa: E402,F401
    BoundarySchedule,
    CalibrationError,
    DesignConfig,
    TruncationRule,
    calibrate,
    mc_ensemble,
    mc_exact_time_estimates,
    min_sample_size,
    stage1_boundaries,
    truncated_terminal,
)
from .evaluation import (  # noqa: F401
    OcPoint,
    ReplaySummary,
    expected_tau_peak,
    oc_curve,
    replay,
    validate_full_grid,
)
from .exact import (  # noqa: F401
    brute_force_crossing,
    exact_time_error,
    hypergeom_pmf,
    propagate,
    schedule_profile,
)
from .population import (  # noqa: F401
    DeviationPath,
    FinitePopulation,
    nearest_grid_rate,
    sample_path,
    synth_population,
)
from .procedure import (  # noqa: F401
    SessionState,
    new_session,
    observe,
    run_path,
    undo,
)
