"""Feed-forward network bridging material-design and product-design variables."""

__version__ = "0.1.0"

from .core_net import (  # noqa: E402
    ModelBundle,
    Network,
    TransferKind,
    forward,
    init_network,
    load_model,
    save_model,
)
from .data import Dataset, NormParams, Schema, SplitSpec, default_schema  # noqa: E402
from .training import TrainConfig, TrainHistory, train  # noqa: E402

__all__ = [
    "Dataset", "ModelBundle", "Network", "NormParams", "Schema", "SplitSpec", "TrainConfig",
    "TrainHistory", "TransferKind", "default_schema", "forward", "init_network", "load_model",
    "save_model", "train",
]
