"""Application-wide constants to avoid magic numbers and strings"""

# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3

# HTTP Status Codes
HTTP_UNPROCESSABLE_ENTITY = 422

# Mesher defaults
DEFAULT_MARGIN = 0.99
DEFAULT_SEED = 0
DEFAULT_SLAB_HEIGHT = 0.002
PITCH_ITERATION_CAP = 5_000_000
# relative to the slab height
TIME_TOLERANCE = 1e-12
# relative shrink of the causality reach, absorbs round-off in apex times
REACH_SHRINK = 1e-10

# Local solver
SINGULAR_CONDITION_LIMIT = 1e12

# Stability sweep
DEFAULT_THETA_COUNT = 256
POWER_NORM_CAP = 10_000
POWER_NORM_BOUND = 1e3
DET_R_TOLERANCE = 1e-8
SPECTRAL_RADIUS_TOLERANCE = 1e-12
BLOWUP_RENORMALIZE_AT = 1e100

# Quadrature
DEFAULT_GAUSS_POINTS = 5
DEFAULT_TRACE_LEVELS = 40
DEFAULT_CONVERGENCE_FIT_POINTS = 4

# Tent types, matching the integer codes stored in TentMesh.kind
KIND_INTERIOR = 0
KIND_LEFT = 1
KIND_RIGHT = 2

# Output file suffixes
SNAPSHOT_SUFFIX = "snap"
ERROR_SUFFIX = "error.csv"
METADATA_SUFFIX = "metadata.json"
NODAL_SUFFIX = "nodal.json"
MESH_SUFFIX = "mesh.json"
STABILITY_SUFFIX = "stability.csv"
CONVERGENCE_SUFFIX = "convergence"

SNAPSHOT_HEADER = ["x", "u1", "u2"]
ERROR_HEADER = ["t", "l2err"]
CONVERGENCE_HEADER = ["h", "err", "slope_running"]
STABILITY_HEADER = ["theta", "spectral_radius", "max_power_norm"]

# Convergence sweep of the pulse problem: h = 1/2^3 ... 1/2^9
DEFAULT_CONVERGENCE_H = [2.0**-n for n in range(3, 10)]
