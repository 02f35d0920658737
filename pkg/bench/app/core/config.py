from dataclasses import dataclass, field
import os

import yaml

from app.core.errors import SpecError


class Config:
    # Input geometry (CIFAR-10)
    INPUT_SHAPE = (32, 32, 3)
    INPUT_DIM = 32 * 32 * 3
    NUM_CLASSES = 10
    ROW_LENGTH = 32

    # Byte convention
    DENSE_PARAM_BYTES = 4
    SPARSE_ENTRY_BYTES = 8      # 4-byte value + 4-byte flat index
    ACTIVATION_BYTES = 1        # one byte per live activation, as the raw image
    BUDGETS_KB = (8, 16, 32, 64, 128)
    MAX_BUDGET_KB = 128

    # Adam defaults
    ADAM_BETA1 = 0.9
    ADAM_BETA2 = 0.999
    ADAM_EPSILON = 1e-8

    # Direct convolution
    CNN_LR_INIT = 0.005
    CNN_LR_DECAY = 0.95
    CNN_BATCH_SIZE = 64
    CNN_DROPOUT_RATE = 0.1
    CNN_SAMPLES = 750
    CNN_PARTIAL_EPOCHS = 5
    CNN_FULL_EPOCHS = 100
    CNN_PATIENCE = 5

    # ProtoNN
    PROTONN_DIMS = (2, 4, 8, 16, 32, 64)
    PROTONN_GAMMA_EXPONENTS = tuple(range(-4, 5))
    PROTONN_LRS = (0.1, 0.01, 0.001)
    PROTONN_DENSITY = 1.0
    PROTONN_EPOCHS = 100
    PROTONN_PATIENCE = 10
    PROTONN_BATCH_SIZE = 100

    # Bonsai
    BONSAI_MAX_DEPTH = 8
    BONSAI_Z_DENSITY = 0.2
    BONSAI_WV_DENSITY = 0.3
    BONSAI_THETA_DENSITY = 0.62
    BONSAI_SIGMA = 1.0
    BONSAI_MAX_BRANCH_SHARPNESS = 16.0
    BONSAI_REG_WV_THETA = 1e-3
    BONSAI_REG_Z = 1e-4
    BONSAI_LR = 0.01
    BONSAI_EPOCHS = 200
    BONSAI_BATCH_SIZE = 224

    # FastGRNN
    FASTGRNN_INPUT_DIM = 32
    FASTGRNN_DENSITIES = (0.1, 0.2, 0.3)
    FASTGRNN_HIDDEN_STEP = 15
    FASTGRNN_HIDDEN_MAX = 225
    FASTGRNN_MULTI_HIDDEN_STEP = 5
    FASTGRNN_MULTI_HIDDEN_MAX = 100
    FASTGRNN_CANDIDATES_PER_BUDGET = 3
    FASTGRNN_EPOCHS = 150
    FASTGRNN_BATCH_SIZE = 100
    FASTGRNN_LR = 0.01
    FASTGRNN_LR_DECAY_EPOCH = 100
    FASTGRNN_LR_DECAY_FACTOR = 0.1
    FASTGRNN_LR_DECAY_MIN_BUDGET_KB = 32
    FASTGRNN_WEIGHT_DECAY = 5e-4
    FASTGRNN_WEIGHT_DECAY_MIN_BUDGET_KB = 64
    FASTGRNN_ZETA_INIT = 1.0
    FASTGRNN_NU_INIT = -4.0

    # Dataset
    HOLDOUT_PER_CLASS = 1000
    CIFAR_RECORD_BYTES = 3073
    CIFAR_RECORDS_PER_BATCH = 10000
    CIFAR_TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
    CIFAR_TEST_FILE = "test_batch.bin"
    DATA_DIR_ENV = "MEMCLF_DATA_DIR"

    # Reporting
    ACCURACY_DECIMALS = 3
    EVAL_BATCH_SIZE = 1000


@dataclass(frozen=True)
class ScaleProfile:
    """How much of the full recipe a run executes."""
    name: str
    train_subset: int | None     # stratified training subset size, None = all
    candidate_divisor: int       # candidate counts are divided by this
    epoch_cap: int | None        # upper bound on any training run
    cnn_samples: int

    def epochs(self, full_epochs: int) -> int:
        if self.epoch_cap is None:
            return full_epochs
        return min(full_epochs, self.epoch_cap)

    def candidates(self, count: int) -> int:
        if count <= 0:
            return 0
        return max(1, -(-count // self.candidate_divisor))


DESK = ScaleProfile("desk", train_subset=5000, candidate_divisor=25, epoch_cap=30, cnn_samples=30)
FULL = ScaleProfile("full", train_subset=None, candidate_divisor=1, epoch_cap=None,
                    cnn_samples=Config.CNN_SAMPLES)
SCALES = {"desk": DESK, "full": FULL}


def get_scale(name: str) -> ScaleProfile:
    try:
        return SCALES[name]
    except KeyError:
        raise SpecError(f"unknown scale {name!r}, expected one of {sorted(SCALES)}") from None


def default_data_dir() -> str | None:
    return os.environ.get(Config.DATA_DIR_ENV)


FAMILIES = ("directconv", "protonn", "bonsai", "fastgrnn")


@dataclass
class ExperimentConfig:
    families: tuple[str, ...] = FAMILIES
    budgets: tuple[int, ...] = Config.BUDGETS_KB
    seed: int = 0
    scale: str = "desk"
    data_dir: str | None = None
    output_dir: str = "results"
    workers: int = 1
    standardize: bool = False
    extra: dict = field(default_factory=dict, repr=False)

    def validate(self) -> "ExperimentConfig":
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise SpecError(f"unknown families: {unknown}")
        bad = [b for b in self.budgets if b not in Config.BUDGETS_KB]
        if bad:
            raise SpecError(f"budgets must be in {Config.BUDGETS_KB}, got {bad}")
        get_scale(self.scale)
        if self.workers < 1:
            raise SpecError("workers must be >= 1")
        return self


_CONFIG_KEYS = {"families", "budgets", "seed", "scale", "data_dir", "output_dir", "workers", "standardize"}


def load_experiment_config(path: str) -> ExperimentConfig:
    """Read a YAML experiment file into a validated ExperimentConfig."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise SpecError(f"config file not found: {path}") from None
    except yaml.YAMLError as e:
        raise SpecError(f"malformed config file {path}: {e}") from None

    if not isinstance(raw, dict):
        raise SpecError(f"config file {path} must hold a mapping")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise SpecError(f"unknown config keys: {sorted(unknown)}")

    cfg = ExperimentConfig()
    if "families" in raw:
        cfg.families = tuple(str(f) for f in raw["families"])
    if "budgets" in raw:
        cfg.budgets = tuple(int(b) for b in raw["budgets"])
    if "seed" in raw:
        cfg.seed = int(raw["seed"])
    if "scale" in raw:
        cfg.scale = str(raw["scale"])
    if raw.get("data_dir") is not None:
        cfg.data_dir = str(raw["data_dir"])
    if "output_dir" in raw:
        cfg.output_dir = str(raw["output_dir"])
    if "workers" in raw:
        cfg.workers = int(raw["workers"])
    if "standardize" in raw:
        cfg.standardize = bool(raw["standardize"])
    if cfg.data_dir is None:
        cfg.data_dir = default_data_dir()
    return cfg.validate()
