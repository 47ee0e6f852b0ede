# -*- coding: utf-8 -*-
"""
Package wide constants, default file names and the exception hierarchy.
"""

LOGGER_NAME = "cgcn"

# Output file names, all relative to the run's output directory.
REPORT_FNAME = "report.json"
LOSSES_FNAME = "losses.csv"
LABELS_FNAME = "labels.txt"
CHECKPOINT_FNAME = "checkpoint.bin"
CHECKPOINT_META_FNAME = "checkpoint.json"
SUMMARY_FNAME = "overview.yml"
SWEEP_FNAME = "sweep.csv"
SWEEP_SVG_TEMPLATE = "sweep_{param}.svg"
ABLATION_FNAME = "ablation.csv"
REPEAT_FNAME = "repeat.csv"

# Three-file dataset format.
FEATURES_FNAME = "features.csv"
EDGES_FNAME = "edges.csv"
DS_LABELS_FNAME = "labels.txt"

CHECKPOINT_MAGIC = b"CGCNCKPT"
CHECKPOINT_VERSION = 1

ACTIVATIONS = ("relu", "tanh", "sigmoid", "linear")

# Floor inside logs and denominators of the clustering head.
EPS = 1e-12

LOSS_COLUMNS = ["epoch", "phase", "l_ae", "l_f", "l_s", "l_pre", "l_train",
                "l_kl", "total"]
METRIC_NAMES = ["acc", "nmi", "ari", "f1"]

ABLATION_VARIANTS = ("base", "+C", "+S", "+C+S")


class CgcnError(Exception):
    """Base class of all errors raised by this package."""

    _default_msg = "cgcn error"

    def __init__(self, msg=None):
        self.msg = self._default_msg if msg is None else msg
        super().__init__(self.msg)


class DimensionError(CgcnError, ValueError):
    _default_msg = "Tensor shapes do not match."

    @classmethod
    def from_shapes(cls, op, a, b):
        return cls(f"{op}: incompatible shapes {tuple(a)} and {tuple(b)}")


class ConfigurationError(CgcnError, ValueError):
    _default_msg = "Invalid configuration."


class ContractError(CgcnError, ValueError):
    _default_msg = "Operation called outside of its contract."


class DatasetFormatError(CgcnError, ValueError):

    def __init__(self, path, line, detail):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}, line {line}: {detail}")


class DatasetValidationError(CgcnError, ValueError):
    _default_msg = "Dataset failed validation."


class NonFiniteError(CgcnError, ArithmeticError):

    def __init__(self, op):
        self.op = op
        super().__init__(f"{op} produced non-finite values")


class DivergenceError(CgcnError, RuntimeError):

    def __init__(self, phase, epoch, term):
        self.phase, self.epoch, self.term = phase, epoch, term
        super().__init__(
            f"Training diverged in phase '{phase}' at epoch {epoch}: "
            f"loss term '{term}' is not finite.")
