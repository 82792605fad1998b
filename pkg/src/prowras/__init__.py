"""ProWRAS: proximity weighted random affine shadowsampling for imbalanced binary data."""

__version__ = "0.1.0"

from .data import (
    DataError,
    Dataset,
    FoldPlan,
    Normalizer,
    apply_normalizer,
    fit_normalizer,
    load_csv,
    selection_split,
    stratified_folds,
    write_csv,
)
from .metrics import ComparisonCube, ConfusionMatrix, WsrtResult, cohen_kappa, f1_minority, iscore, wsrt
from .partition import WeightedPartition, partition_minority
from .samplers import (
    ProwrasParams,
    Scheme,
    SyntheticBatch,
    loras,
    oversample,
    pf_smote_star,
    prowras,
    prowsyn,
    scheme_params,
    select_scheme,
    smote,
)
