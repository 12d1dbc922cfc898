# ----------------------- config/settings.py -----------------------
from __future__ import annotations
import os
from dotenv import load_dotenv

load_dotenv()

# ===== Logging (the only setting read from the environment / .env) =====
LOG_LEVEL      = (os.getenv("LOG_LEVEL", "INFO") or "INFO").strip().upper()

# ===== CLI defaults =====
SWEEP_WORKERS  = max(1, os.cpu_count() or 1)

# ===== Layout =====
N_SITES                = 45
INTER_SITE_DISTANCE    = 1000.0     # m, repo convention
LAYOUT_JITTER          = 150.0      # m
LAYOUT_SEED            = 7
LAYOUT_ASPECT          = 1.8        # columns per row of the generated lattice patch

# ===== Radio =====
PRB_CAPACITY           = 25
REUSE_FACTOR           = 3
SUBCARRIERS_PER_PRB    = 12
SUBCARRIER_BANDWIDTH   = 15e3       # Hz
TX_POWER_PER_SUBCARRIER = 18.2      # dBm, 43 dBm spread over 300 subcarriers
ANTENNA_GAIN           = 14.0       # dBi
THERMAL_NOISE_PER_SUBCARRIER = -125.0  # dBm, kTB over 15 kHz plus 7 dB noise figure
MIN_PRB_PER_USER       = 1
MAX_PRB_PER_USER       = 4
CAC_SIGNAL_THRESHOLD   = -120.0     # dBm per subcarrier
HO_SIGNAL_THRESHOLD    = -120.0     # dBm per subcarrier

# ===== Link curve (attenuated Shannon) =====
BANDWIDTH_EFFICIENCY   = 0.6
SINR_EFFICIENCY        = 1.25
MAX_THROUGHPUT_PER_PRB = 720e3      # bit/s
PRB_BANDWIDTH          = 180e3      # Hz

# ===== Propagation =====
L0_DB                  = 128.1      # dB at reference distance
PATH_LOSS_EXPONENT     = 3.76
SHADOWING_SIGMA_DB     = 8.0
REFERENCE_DISTANCE     = 1000.0     # m
MIN_COUPLING_LOSS_DB   = 70.0

# ===== Traffic =====
ARRIVAL_RATE           = 5.0        # mobiles/s, network wide
FILE_SIZE              = 5_000_000  # bytes
USER_SPEED             = 1.0        # m/s
TURN_SIGMA             = 0.3        # rad per snapshot
HOTSPOT_WEIGHT         = 3.0

# ===== Policy =====
F0_DB                  = 6.0
HM_MIN_DB              = 0.0
HM_MAX_DB              = 12.0
BALANCING_ORDER        = 1
HYSTERESIS_DB          = 0.0
ADJACENCY_FACTOR       = 2.0        # neighbour radius in inter-site distances
LOAD_TIME_CONSTANT     = 60.0       # s of simulated time
MARGIN_UPDATE_EVERY    = 1          # snapshots
HANDOVER_EVERY         = 1          # snapshots

# ===== Timing =====
SNAPSHOT_DURATION      = 1.0        # s
SIM_DURATION           = 600.0      # s
WARMUP_FRACTION        = 0.1
RNG_SEED               = 1

# ===== Metrics =====
SINR_QUANTILES = tuple(round(0.01 * k, 2) for k in range(0, 101))
VALIDATION_SAMPLES     = 10_000
SYMMETRY_TOLERANCE     = 1e-9
TARGET_ACCESS_LEVEL    = 0.95

# ===== CLI defaults =====
REPO_ROOT              = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_SCENARIO       = os.path.join(REPO_ROOT, "data", "reference_45.scn")
OUTPUT_DIR             = "out"
SWEEP_LAMBDAS          = (2.0, 4.0, 6.0, 8.0)   # mobiles/s
SWEEP_SEEDS            = (1, 2, 3, 4, 5)
# ----------------------- /config/settings.py -----------------------
