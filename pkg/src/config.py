# Fakespan Configuration
from pathlib import Path


# Resolve project root one level above the src package
BASE_DIR = Path(__file__).resolve().parent.parent

# Run outputs
RUNS_DIR = str(BASE_DIR / "runs")

# Sweep registry
DB_PATH = str(BASE_DIR / "runs" / "sweeps.db")

# Sequence handling
MAX_SEQUENCE_LENGTH = 512
DEFAULT_FPS = 25.0

# Architecture defaults
DEFAULT_KERNEL_SIZE = 15
DEFAULT_MODEL_DIM = 128
LAYER_NORM_EPS = 1e-5

# Loss defaults
FOCAL_ALPHA = 0.25
FOCAL_GAMMA = 2.0
SMOOTH_L1_BETA = 1.0
PROB_CLAMP = 1e-12

# Training defaults
DEFAULT_MAX_EPOCHS = 100
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_BATCH_SIZE = 64
EARLY_STOP_PATIENCE = 10
PLATEAU_FACTOR = 0.5
PLATEAU_PATIENCE = 5
IMPROVEMENT_THRESHOLD = 1e-4

# Post-processing defaults
SOFT_NMS_SIGMA = 0.5
SOFT_NMS_MIN_SCORE = 1e-4
PRE_NMS_TOP_N = 200

# In-the-wild scoring defaults
CHUNK_SECONDS = 20.0
MIN_SEGMENT_SECONDS = 2.0
TALK_THRESHOLD = 2.0
PSI_M_THETA = 0.01

# Metric report keys
AP_IOU_THRESHOLDS = [0.5, 0.75, 0.9, 0.95]
AR_TOP_K = [100, 50, 30, 20, 10, 5]

# Checkpoint criterion: AP@{0.5,0.75,0.95} + AR@{100,50,20,10}
CRITERION_AP = [0.5, 0.75, 0.95]
CRITERION_AR = [100, 50, 20, 10]
