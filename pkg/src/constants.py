"""
Application constants and configuration values.
Centralized location for default parameters, guards and output formats.
"""

# Reference parameter quintet (rates per day, kernel variance in deg^2)
REFERENCE_GAMMA = 0.1070
REFERENCE_LAMBDA = 1.3274
REFERENCE_EPSILON = 0.0126
REFERENCE_D = 0.0070
REFERENCE_P = 0.2035

# Reference study rectangle (degrees)
REFERENCE_LON_MIN = 131.0
REFERENCE_LON_MAX = 140.0
REFERENCE_LAT_MIN = 34.0
REFERENCE_LAT_MAX = 39.0

# Catalog ingestion
DEFAULT_MIN_MAGNITUDE = 4.0
DEFAULT_MAX_DEPTH_KM = 100.0
DEFAULT_TIME_ORIGIN = "1926-01-01"
SECONDS_PER_DAY = 86400.0
CATALOG_COLUMNS = ("time", "lon", "lat", "magnitude", "depth_km")
LABEL_COLUMNS = ("index", "label", "kills", "D", "E")

# Output formatting: 12 significant digits, dot decimal separator
FLOAT_FORMAT = "%.12g"
# Catalog files are read back exactly
CATALOG_FLOAT_FORMAT = "%.17g"

# Simulation
DEFAULT_HORIZON_DAYS = 25567.0
MAX_REJECTION_ATTEMPTS = 1_000_000
REJECTION_BATCH = 64

# Filtering (targets advanced together per pass)
FILTER_TARGET_BATCH = 256

# Oracle
ORACLE_MAX_EVENTS = 14

# Estimation
DEFAULT_RESTARTS = 5
DEFAULT_XTOL = 1e-6
DEFAULT_FTOL = 1e-8
DEFAULT_MAX_ITER = 5000
RESTART_PERTURBATION = 0.5
INITIAL_SIMPLEX_STEP = 0.1
EPSILON_FLOOR = 1e-12
NM_REFLECT = 1.0
NM_EXPAND = 2.0
NM_CONTRACT = 0.5
NM_SHRINK = 0.5

# Reporting
HISTOGRAM_BINS = 20
DEFAULT_TOP_K = 1500
LOW_PROBABILITY = 0.1
HIGH_PROBABILITY = 0.9

# Configuration
ENV_PREFIX = "SWARMFILTER_"
