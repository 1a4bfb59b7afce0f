"""Market-cap imbalance metrics and functionals of rolling Sharpe-optimal portfolios."""

from .cluster import Dendrogram, agglomerate, cut, l1_distance_matrix, l1_trajectory_distance, leaf_order
from .distmetrics import (
    DiscreteDistribution,
    DistanceMatrix,
    distance_matrix,
    normalized_cap_distribution,
    wasserstein,
    wasserstein_equal_n,
)
from .functionals import (
    FunctionalSeries,
    exposure,
    functional_series,
    portfolio_distance_matrix,
    portfolio_distribution,
    portfolio_gini,
    trailing_mean_caps,
)
from .ingest import (
    CalendarMap,
    CapPanel,
    PricePanel,
    ReturnsMatrix,
    build_calendar_map,
    compute_returns,
    load_panel,
    restrict_full_history,
    write_panel,
)
from .optimizer import (
    OptimizationInputs,
    WeightTrajectories,
    maximize_sharpe,
    project_capped_simplex,
    rolling_weights,
    sharpe,
)
from .structure import LorenzCurve, SeriesOutput, concentration_ratio, concentration_series, gini, gini_series, lorenz_curve

__version__ = "0.1.0"
