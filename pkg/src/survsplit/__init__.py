"""Random survival forests with exact and constant-time log-rank splitting."""

from .data import NodeView, SplitResult, SurvivalDataset, load_csv, write_csv
from .errors import (
    ConfigError,
    MetricUndefined,
    ModelFormatError,
    NoEvents,
    NoValidSplit,
    ParseError,
    SchemaError,
    TrainingError,
    UsageError,
)
from .estimators import StepCurve, kaplan_meier, nelson_aalen
from .forest import (
    ForestModel,
    ForestParams,
    load_model,
    predict_curve,
    predict_oob,
    save_model,
    train,
)
from .metrics import concordance_error, paired_delta, rmse_at_horizon
from .splitting import SplitConstraints, fast_numerator, scan_exact, scan_fast
from .timegrid import NodeTimeGrid, build_time_grid
from .tree import SurvivalTree, TreeParams, grow_tree

__version__ = "0.1.0"
