FORMAT_VERSION: int = 1
PAYLOAD_DTYPE: str = "c128le"

DEFAULT_SEED: int = 0
DEFAULT_THREADS: int = 1
ROW_BLOCK: int = 256  # sampling rows per work unit, never derived from the thread count

# Seed stream ids
AMP_STREAM: int = 0
PHASE_STREAM: int = 1
SLOPE_STREAM: int = 2

COHERENCE_LEVEL: float = 0.9
DEFAULT_TX_PSD_DBM_HZ: float = -55.0
DEFAULT_NOISE_PSD_DBM_HZ: float = -110.0

SYMMETRY_TOL: float = 1e-10
SQRT_EIG_TOL: float = 1e-8  # relative to the largest eigenvalue
PSD_REPAIR_TOL: float = 1e-10  # per dimension
CORR_BOUND_TOL: float = 1e-10

# 20*log10(|H|) = LN_TO_DB * ln|H|
LN_TO_DB: float = 8.685889638065035

TRANSITION_GRADIENT: float = 0.05
CCDF_LEVELS: int = 99

# Default validation thresholds
COV_MAX_ABS: float = 0.15
COV_MAX_ABS_SMOOTH: float = 0.05
ACG_MAX_ABS_DB: float = 2.0
RMS_DS_MAX_ABS_US: float = 0.05

EXPORT_DIR: str = "export"
