"""Prediction intervals for day-ahead electricity demand via cluster-based
block bootstrapping of point-model residuals."""

from .backtest import (
    BacktestResult,
    ComparisonRow,
    RunConfig,
    compare_methods,
    run_expanding_window,
)
from .bootstrap import (
    ClusteredMemory,
    IntervalForecast,
    ResidualMemory,
    bagging_forecast,
    block_bootstrap_forecast_day,
    cbb_forecast_day,
    quantiles_from_samples,
    split_blocks,
    update_memory,
)
from .clustering import Clustering, elbow_scan, kmeans, nearest_cluster, wss
from .data import (
    DemandSeries,
    FeatureMatrix,
    TrainTestSplit,
    acf_pacf,
    aggregate_sites,
    build_features,
    parse_demand_csv,
    split_by_date,
    us_federal_holidays,
)
from .errors import ConfigError, DataError, IntervalcastError
from .metrics import aggregate_scores, coverage_point, winkler_point
from .models import (
    FittedModel,
    RegressorSpec,
    fit,
    point_metrics,
    predict,
    residual_matrix,
)
from .synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"
