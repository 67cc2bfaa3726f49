"""Split conformal regression with kNN difficulty estimators, including target strangeness."""

from .conformal import ConformalRegressor, PredictionInterval, calibrate, interval, interval_batch
from .cps import ConformalPredictiveSystem, PredictiveDistribution, cps_calibrate, cps_distribution, crps
from .data import (
    DataError,
    Dataset,
    ScalingSpec,
    apply_scaling,
    fit_scaling,
    load_csv,
    make_synthetic,
    split,
)
from .density import KdeModel, kde_density, kde_fit, kde_log_density
from .difficulty import (
    DifficultyEstimator,
    DifficultyKind,
    DifficultySpec,
    estimate_residual,
    estimate_std,
    estimate_target_strangeness,
    estimate_variance,
    fit_difficulty,
)
from .neighbors import NeighborModel, NeighborSet, fit_neighbors, query, query_batch

__version__ = "0.1.0"
