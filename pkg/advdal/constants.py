"""
Constants for the advdal experiment framework.

This module contains all default values, magic numbers, and configuration
constants used throughout the application.
"""
from __future__ import annotations

# Model and training defaults
DEFAULT_HIDDEN_DIM = 32
DEFAULT_EPOCHS = 10
DEFAULT_BATCH_SIZE = 32
DEFAULT_LEARNING_RATE = 0.001
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# Attack defaults
DEFAULT_TOLERANCE = 0.001
MAX_TOLERANCE = 0.1
DEFAULT_DEEPFOOL_MAX_ITER = 50
DEFAULT_DEEPFOOL_OVERSHOOT = 0.02
DEEPFOOL_STEP_EPS = 1e-10  # pushes a linearized step strictly past the boundary
UNFLIPPED_MARGIN = 1.0

# Verifier defaults
DEFAULT_HARVEST_K = 10
DEFAULT_HARVEST_TIME_LIMIT = 5.0
DEFAULT_EPS_INCREMENT = 0.05
DEFAULT_EPS_MAX = 0.5
DEFAULT_EXCLUSION_RADIUS = 1e-4
LP_FEASIBILITY_TOL = 1e-7
STRICTNESS_MARGIN = 1e-6
EXCLUSION_SLACK = 1e-6
LP_MAX_ITER_FACTOR = 50

# Active-learning defaults (desk scale)
DEFAULT_ROUNDS = 10
DEFAULT_N_SUB = 1000
DEFAULT_N_QUERY = 20
DEFAULT_N_ADV = 10
DEFAULT_RUNS = 5
DEFAULT_FIXED_QUERY_EPS = 0.01
DEFAULT_MARGIN_SLACK = 0.05
DEFAULT_FGSM_EPS_LOW = 0.05
DEFAULT_FGSM_EPS_HIGH = 0.1

# Strategy and augmentation names
STRATEGY_RANDOM = "random"
STRATEGY_FVAAL = "fvaal"
STRATEGY_DFAL = "dfal"
STRATEGY_BADGE = "badge"
STRATEGIES = (STRATEGY_RANDOM, STRATEGY_FVAAL, STRATEGY_DFAL, STRATEGY_BADGE)
NATIVE_STRATEGIES = (STRATEGY_FVAAL, STRATEGY_DFAL)

AUGMENT_NONE = "none"
AUGMENT_FGSM = "fgsm_adv"
AUGMENT_FV = "fv_adv"
AUGMENT_NATIVE = "native_single"
AUGMENTATIONS = (AUGMENT_NONE, AUGMENT_FGSM, AUGMENT_FV, AUGMENT_NATIVE)

# Dataset kinds
DATASET_MNIST = "mnist"
DATASET_FASHION_MNIST = "fashion_mnist"
DATASET_CIFAR10 = "cifar10"
DATASET_IDX = "idx"
DATASET_BLOBS = "blobs"
DATASET_KINDS = (DATASET_MNIST, DATASET_FASHION_MNIST, DATASET_CIFAR10, DATASET_IDX, DATASET_BLOBS)

# IDX / CIFAR-10 formats
IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
CIFAR10_RECORD_SIZE = 3073
CIFAR10_NUM_CLASSES = 10
PIXEL_SCALE = 255.0

# Model container
MODEL_MAGIC = b"ADVM"
MODEL_VERSION = 1
MODEL_SUFFIX = ".advm"

# Reporting
CSV_HEADER = (
    "run", "round", "labeled", "accuracy", "adv_added",
    "sat", "unsat", "timeout", "select_ms", "verify_ms", "train_ms",
)
DEFAULT_DIVERSITY_CAP = 50
CURVES_FILE = "curves.svg"
SUMMARY_FILE = "summary.txt"
MODELS_DIR = "models"

# Environment variable prefixes
ENV_PREFIX = "ADVDAL_"
ENV_DATA_ROOT = "ADVDAL_DATA_ROOT"
