"""Residual memory, block splitting, and the three interval constructors:
cluster-based block bootstrap, plain block bootstrap, and bootstrap
aggregating.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import Clustering, kmeans, nearest_cluster
from .data import INTERVALS_PER_DAY, FeatureMatrix
from .errors import DataError
from .models import RegressorSpec, fit, predict
from .rng import TAG_BAGGING, TAG_TRAJECTORY, substream

MEMORY_FORMAT_VERSION = 1


def resolve_block_length(value) -> int:
    """An explicit divisor of 96, or "auto": the cube-root heuristic for a
    96-interval day rounded up to the nearest divisor of 96."""
    if value == "auto":
        guess = INTERVALS_PER_DAY ** (1.0 / 3.0)
        for cand in sorted(d for d in range(1, 97) if INTERVALS_PER_DAY % d == 0):
            if cand >= guess:
                return cand
    length = int(value)
    if length < 1 or INTERVALS_PER_DAY % length != 0:
        raise DataError(f"block length {length} does not divide {INTERVALS_PER_DAY}")
    return length


def split_blocks(z: np.ndarray, length: int) -> list[np.ndarray]:
    """Non-overlapping contiguous blocks; concatenation reproduces z."""
    z = np.asarray(z, dtype=float)
    if len(z) != INTERVALS_PER_DAY:
        raise DataError(f"expected a {INTERVALS_PER_DAY}-vector")
    if INTERVALS_PER_DAY % length != 0:
        raise DataError(f"block length {length} does not divide {INTERVALS_PER_DAY}")
    return [z[k * length : (k + 1) * length] for k in range(INTERVALS_PER_DAY // length)]


@dataclass(frozen=True)
class ResidualMemory:
    """Per-day residual vectors keyed by training-day label."""

    entries: dict[int, np.ndarray]
    block_length: int

    def __post_init__(self):
        if INTERVALS_PER_DAY % self.block_length != 0:
            raise DataError(
                f"block length {self.block_length} does not divide {INTERVALS_PER_DAY}"
            )
        for j, z in self.entries.items():
            if len(z) != INTERVALS_PER_DAY:
                raise DataError(f"residual vector for day {j} has length {len(z)}")

    @property
    def block_count(self) -> int:
        return INTERVALS_PER_DAY // self.block_length

    def days(self) -> list[int]:
        return sorted(self.entries)

    def matrix(self) -> np.ndarray:
        """Residuals stacked in ascending day order, shape (|E|, 96)."""
        return np.stack([self.entries[j] for j in self.days()])


@dataclass(frozen=True)
class ClusteredMemory:
    """Residual memory partitioned by the day clusters of the demand vectors."""

    memory: ResidualMemory
    demand: dict[int, np.ndarray]  # day label -> observed demand vector
    clustering: Clustering

    def __post_init__(self):
        if set(self.demand) != set(self.memory.entries):
            raise DataError("demand and residual memories cover different days")
        if set(self.clustering.assignment) != set(self.memory.entries):
            raise DataError("cluster assignment does not cover the memory")

    def partition(self) -> dict[int, list[int]]:
        """Cluster label -> ascending day labels."""
        out: dict[int, list[int]] = {k: [] for k in range(self.clustering.n_clusters)}
        for j in self.memory.days():
            out[self.clustering.assignment[j]].append(j)
        return out

    def cluster_matrix(self, label: int) -> np.ndarray:
        days = self.partition()[label]
        if not days:
            raise DataError(f"cluster {label} is empty")
        return np.stack([self.memory.entries[j] for j in days])


@dataclass(frozen=True)
class IntervalForecast:
    """Point forecast plus per-confidence-level interval bounds for one day."""

    day_index: int
    point: np.ndarray                      # (96,)
    bounds: dict[float, tuple]             # alpha -> (lower, upper), each (96,)
    n_replicates: int
    # wall-clock seconds of model fitting + interval construction, set by the
    # backtest loop; excluded from equality-sensitive serialization
    elapsed: float = field(default=0.0, compare=False)


def quantiles_from_samples(samples, alpha: float) -> tuple[float, float]:
    """Order-statistic bounds: ranks ceil(N*alpha/2) and ceil(N*(1-alpha/2))."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = len(s)
    if n < 2:
        raise DataError("need at least 2 samples")
    if not np.isfinite(s).all():
        raise DataError("non-finite sample")
    if not 0.0 < alpha < 1.0:
        raise DataError("alpha must be in (0, 1)")
    lo = math.ceil(n * alpha / 2.0)
    hi = math.ceil(n * (1.0 - alpha / 2.0))
    return float(s[lo - 1]), float(s[hi - 1])


def _bounds_from_trajectories(point, trajectories, alphas):
    samples = point[None, :] + trajectories
    ordered = np.sort(samples, axis=0)
    n = len(ordered)
    bounds = {}
    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise DataError("alpha must be in (0, 1)")
        lo = math.ceil(n * alpha / 2.0) - 1
        hi = math.ceil(n * (1.0 - alpha / 2.0)) - 1
        bounds[alpha] = (ordered[lo].copy(), ordered[hi].copy())
    return bounds


def sample_residual_trajectories(
    residuals: np.ndarray, block_length: int, n_replicates: int, seed: int, day_key: int
) -> np.ndarray:
    """Draw n_replicates full-day residual trajectories.

    Per block position the source day is drawn uniformly with replacement
    over the memory rows; blocks stay at their original position, so each
    trajectory is a positionwise concatenation of verbatim memory blocks.
    """
    residuals = np.asarray(residuals, dtype=float)
    if residuals.ndim != 2 or residuals.shape[1] != INTERVALS_PER_DAY:
        raise DataError("residual memory must be (days, 96)")
    if n_replicates < 2:
        raise DataError("need at least 2 replicates")
    n_days = len(residuals)
    b = INTERVALS_PER_DAY // block_length
    traj = np.empty((n_replicates, INTERVALS_PER_DAY))
    for pos in range(b):
        rng = substream(seed, TAG_TRAJECTORY, day_key, pos)
        rows = rng.integers(0, n_days, size=n_replicates)
        cols = slice(pos * block_length, (pos + 1) * block_length)
        traj[:, cols] = residuals[rows, cols]
    return traj


def cbb_forecast_day(
    point: np.ndarray,
    cmem: ClusteredMemory,
    alphas,
    n_replicates: int,
    seed: int,
    day_key: int = 0,
) -> IntervalForecast:
    """Cluster-based block bootstrap for one test day.

    The day's point forecast selects the nearest demand cluster; residual
    blocks are then resampled from that cluster's memory only.
    """
    point = np.asarray(point, dtype=float)
    label = nearest_cluster(cmem.clustering, point)
    residuals = cmem.cluster_matrix(label)
    traj = sample_residual_trajectories(
        residuals, cmem.memory.block_length, n_replicates, seed, day_key
    )
    return IntervalForecast(
        day_index=day_key,
        point=point,
        bounds=_bounds_from_trajectories(point, traj, alphas),
        n_replicates=n_replicates,
    )


def block_bootstrap_forecast_day(
    point: np.ndarray,
    memory: ResidualMemory,
    alphas,
    n_replicates: int,
    seed: int,
    day_key: int = 0,
) -> IntervalForecast:
    """Plain block bootstrap: blocks drawn over the whole memory."""
    point = np.asarray(point, dtype=float)
    traj = sample_residual_trajectories(
        memory.matrix(), memory.block_length, n_replicates, seed, day_key
    )
    return IntervalForecast(
        day_index=day_key,
        point=point,
        bounds=_bounds_from_trajectories(point, traj, alphas),
        n_replicates=n_replicates,
    )


def bagging_forecast(
    train_rows: FeatureMatrix,
    spec: RegressorSpec,
    memory: ResidualMemory,
    test_rows: FeatureMatrix,
    alphas,
    n_replicates: int,
    seed: int,
) -> list[IntervalForecast]:
    """Bootstrap aggregating: refit on target-perturbed training copies.

    Each replicate perturbs every training day's targets with a block
    bootstrapped residual trajectory drawn from the unclustered memory,
    refits, and predicts the whole test horizon. One IntervalForecast per
    test day.
    """
    if n_replicates < 2:
        raise DataError("need at least 2 replicates")
    base = fit(spec, train_rows.X, train_rows.y)
    yhat_train = predict(base, train_rows.X)
    res_matrix = memory.matrix()
    n_mem = len(res_matrix)
    b = memory.block_count
    length = memory.block_length

    train_days = [int(j) for j in np.unique(train_rows.day_index)]
    day_rows = {j: np.where(train_rows.day_index == j)[0] for j in train_days}
    for j, rows in day_rows.items():
        if len(rows) != INTERVALS_PER_DAY:
            raise DataError(f"training day {j} is partial")

    trajectories = np.empty((n_replicates, len(test_rows.y)))
    for rep in range(n_replicates):
        rng = substream(seed, TAG_BAGGING, rep)
        draws = rng.integers(0, n_mem, size=(len(train_days), b))
        y_star = yhat_train.copy()
        for d, j in enumerate(train_days):
            rows = day_rows[j]
            perturb = np.empty(INTERVALS_PER_DAY)
            for pos in range(b):
                cols = slice(pos * length, (pos + 1) * length)
                perturb[cols] = res_matrix[draws[d, pos], cols]
            y_star[rows] += perturb
        try:
            model = fit(spec, train_rows.X, y_star)
        except Exception as exc:
            raise DataError(f"replicate {rep} failed to fit: {exc}") from exc
        trajectories[rep] = predict(model, test_rows.X)

    out = []
    for j in np.unique(test_rows.day_index):
        mask = test_rows.day_index == j
        order = np.argsort(test_rows.interval[mask], kind="stable")
        point = predict(base, test_rows.X[mask][order])
        day_traj = trajectories[:, mask][:, order] - point[None, :]
        out.append(
            IntervalForecast(
                day_index=int(j),
                point=point,
                bounds=_bounds_from_trajectories(point, day_traj, alphas),
                n_replicates=n_replicates,
            )
        )
    return out


def update_memory(
    cmem: ClusteredMemory,
    train_day: int,
    new_residuals: np.ndarray,
    new_demand: np.ndarray | None = None,
    recluster: bool = False,
) -> ClusteredMemory:
    """Adaptive update: replace one training day's residuals (and demand).

    Membership is unchanged unless recluster is set, in which case k-means is
    re-run on the refreshed demand day vectors with the stored seed.
    """
    if train_day not in cmem.memory.entries:
        raise DataError(f"day {train_day} not in memory")
    new_residuals = np.asarray(new_residuals, dtype=float)
    if len(new_residuals) != INTERVALS_PER_DAY:
        raise DataError("replacement residual vector must have 96 entries")
    entries = dict(cmem.memory.entries)
    entries[train_day] = new_residuals
    demand = dict(cmem.demand)
    if new_demand is not None:
        new_demand = np.asarray(new_demand, dtype=float)
        if len(new_demand) != INTERVALS_PER_DAY:
            raise DataError("replacement demand vector must have 96 entries")
        demand[train_day] = new_demand
    memory = replace(cmem.memory, entries=entries)
    clustering = cmem.clustering
    if recluster:
        days = sorted(demand)
        clustering = kmeans(
            [demand[j] for j in days],
            cmem.clustering.n_clusters,
            cmem.clustering.seed,
            day_index=days,
        )
    return ClusteredMemory(memory=memory, demand=demand, clustering=clustering)


# ---------------------------------------------------------------------------
# Serialization

def forecast_to_csv(forecast: IntervalForecast, fh) -> None:
    """Columns: day,interval,point, then lo/hi pairs per confidence level
    in ascending confidence (descending alpha)."""
    alphas = sorted(forecast.bounds, reverse=True)
    labels = [str(int(round((1 - a) * 100))) for a in alphas]
    header = ["day", "interval", "point"]
    for lab in labels:
        header += [f"lo{lab}", f"hi{lab}"]
    fh.write(",".join(header) + "\n")
    for i in range(INTERVALS_PER_DAY):
        row = [str(forecast.day_index), str(i + 1), repr(float(forecast.point[i]))]
        for a in alphas:
            lo, hi = forecast.bounds[a]
            row += [repr(float(lo[i])), repr(float(hi[i]))]
        fh.write(",".join(row) + "\n")


def memory_to_dict(memory: ResidualMemory) -> dict:
    return {
        "format_version": MEMORY_FORMAT_VERSION,
        "block_length": memory.block_length,
        "entries": {str(j): z.tolist() for j, z in memory.entries.items()},
    }


def memory_from_dict(doc: dict) -> ResidualMemory:
    if doc.get("format_version") != MEMORY_FORMAT_VERSION:
        raise DataError(f"unsupported memory format {doc.get('format_version')!r}")
    return ResidualMemory(
        entries={int(j): np.asarray(z, dtype=float) for j, z in doc["entries"].items()},
        block_length=int(doc["block_length"]),
    )


def save_memory(memory: ResidualMemory, path) -> None:
    with open(path, "w") as fh:
        json.dump(memory_to_dict(memory), fh)


def load_memory(path) -> ResidualMemory:
    with open(path) as fh:
        return memory_from_dict(json.load(fh))
