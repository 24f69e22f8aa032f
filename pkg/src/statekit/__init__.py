"""statekit: a self-contained CNN training toolkit.

Everything is plain numpy: tensor kernels with a bit-exact deterministic
mode, layers with analytic gradients, VGG-style presets, three first-order
optimizers, a manifest-driven data pipeline, an early-stopping training
loop, confusion-matrix reporting, and a binary checkpoint format.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_run_config, parse_run_config
from .data import (CLASS_NAMES, Batch, ManifestEntry, PreprocessConfig,
                   center_crop, load_image, load_manifest, make_batches,
                   normalize)
from .errors import (ConfigError, DataError, DimensionError, FormatError,
                     NumericError, StatekitError)
from .evaluation import (ConfusionMatrix, accuracies, confusion_matrix,
                         emit_plots, misclassification_report)
from .model import (ArchitectureSpec, Network, build_preset, count_parameters,
                    make_spec, set_frozen)
from .optim import OptimizerConfig, OptimizerState, make_state, optimizer_step
from .tensor import deterministic_mode, matmul, set_deterministic, tensor
from .training import (EpochRecord, TrainConfig, TrainResult, early_stop_check,
                       evaluate_epoch, train)

__version__ = "0.1.0"
