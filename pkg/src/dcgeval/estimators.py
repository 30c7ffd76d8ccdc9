"""Offline ranking-metric estimators over logged position-biased data.

The core estimator scores a target policy from logging-policy data by
summing, over each trajectory's viewed items, an optionally de-biased label
times a rank discount taken at the item's rank under the TARGET ranking:

    value(trajectory) = sum_i label_i * discount(target_rank(action_i))

De-biased labels divide the observed reward by the logged view probability,
clipped at a cap m (label = reward * min(m, 1 / view_prob)); m = 1 leaves
labels raw, m = inf is the fully unclipped importance weight that makes the
estimator's expectation equal the target policy's true value when logging
exposure covers everything the target can show. The discount is either the
classic 1 / log2(rank + 1) curve with a cutoff, or a position-bias model's
view probability, which is what ties the estimate to expected viewed reward.

Normalization modes: "none" averages trajectory values as-is (DCG flavor);
"per_trajectory" divides each trajectory by its own ideal value (best
achievable reordering of its labels) and skips zero-ideal trajectories (nDCG
flavor); "post" divides the dataset's summed value by its summed ideal.

Evaluation is deterministic: trajectories are processed in dataset order
with sequential in-trajectory accumulation, so a report never depends on
scheduling. Stochastic target stages are handled by replacing the rank
discount with the exactly enumerated marginal exposure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .bias import PositionBiasModel, validate_model, view_prob, view_prob_vector
from .domain import Catalog, LoggedDataset, LoggedTrajectory, QualityModel
from .errors import (
    ConfigurationError,
    DegenerateDataError,
    FullSupportError,
    UnsupportedPolicyError,
)
from .policies import CandidateGenerator, RankingPolicy, candidates, rank
from .simulator import exposure_bruteforce

DISCOUNT_KINDS = ("logarithmic", "pbm")
LABEL_KINDS = ("raw", "debiased")
NORMALIZATIONS = ("none", "per_trajectory", "post")

# Clipping caps swept by the sensitivity analysis (inf = no clipping).
DEFAULT_M_GRID = (
    1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 2048.0, 4096.0,
    math.inf,
)


@dataclass(frozen=True)
class EstimatorConfig:
    """Which metric variant to compute.

    discount_kind "logarithmic" uses 1/log2(rank+1) up to log_cutoff;
    "pbm" uses the given position-bias model's view probabilities.
    """

    discount_kind: str
    labels: str = "debiased"
    clip_m: float = math.inf
    normalization: str = "none"
    log_cutoff: int | None = None
    pbm: PositionBiasModel | None = None

    def __post_init__(self):
        if self.discount_kind not in DISCOUNT_KINDS:
            raise ConfigurationError(f"unknown discount kind {self.discount_kind!r}")
        if self.labels not in LABEL_KINDS:
            raise ConfigurationError(f"unknown label mode {self.labels!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigurationError(f"unknown normalization {self.normalization!r}")
        if not self.clip_m >= 1.0:
            raise ConfigurationError(f"clip_m must be >= 1 (or inf), got {self.clip_m}")
        if self.discount_kind == "logarithmic":
            if self.log_cutoff is None or self.log_cutoff < 1:
                raise ConfigurationError("logarithmic discount requires log_cutoff >= 1")
        else:
            if self.pbm is None:
                raise ConfigurationError("pbm discount requires a position-bias model")
            problems = validate_model(self.pbm)
            if problems:
                raise ConfigurationError(f"invalid discount pbm: {problems[0]}")

    def discount_model(self) -> PositionBiasModel:
        if self.discount_kind == "logarithmic":
            return PositionBiasModel(kind="logarithmic", cutoff_n=self.log_cutoff)
        return self.pbm


@dataclass(frozen=True)
class MetricReport:
    """Aggregated estimate: n_trajectories == len(per_trajectory_values) + skipped.

    skipped counts trajectories that contribute no individual value: zero-ideal
    trajectories under per-trajectory normalization, and all trajectories under
    post normalization (which only defines a dataset-level ratio).
    """

    mean: float
    std: float
    n_trajectories: int
    skipped: int
    per_trajectory_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.n_trajectories != len(self.per_trajectory_values) + self.skipped:
            raise ValueError("n_trajectories must equal len(values) + skipped")
        if self.std < 0:
            raise ValueError("std must be nonnegative")


def debias_label(reward: float, logging_view_prob: float, clip_m: float) -> float:
    """Clipped inverse-propensity label: reward * min(clip_m, 1 / view_prob).

    clip_m = 1 reproduces the raw reward; clip_m = inf is fully unclipped.
    """
    if not clip_m >= 1.0:
        raise ValueError(f"clip_m must be >= 1 (or inf), got {clip_m}")
    if logging_view_prob <= 0.0:
        raise FullSupportError("logged view probability must be positive to de-bias")
    if logging_view_prob > 1.0:
        raise ValueError(f"logging_view_prob must be <= 1, got {logging_view_prob}")
    return reward * min(clip_m, 1.0 / logging_view_prob)


def _item_labels(rewards: np.ndarray, props: np.ndarray, config: EstimatorConfig) -> np.ndarray:
    if config.labels == "raw":
        return rewards.astype(np.float64, copy=True)
    if np.any(props <= 0.0):
        raise FullSupportError("logged view probability must be positive to de-bias")
    return rewards * np.minimum(config.clip_m, 1.0 / props)


def _flatten_dataset(dataset: LoggedDataset, catalog: Catalog):
    """Dataset -> (context ids in order of first use, per-traj context codes,
    item arrays) for the kernel path."""
    act_code = {a: i for i, a in enumerate(catalog.actions)}
    ctx_code: dict[str, int] = {}
    ctx_ids = []
    n = len(dataset.trajectories)
    traj_ctx = np.empty(n, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    acts, props, rewards = [], [], []
    for i, traj in enumerate(dataset.trajectories):
        if traj.context not in ctx_code:
            ctx_code[traj.context] = len(ctx_ids)
            ctx_ids.append(traj.context)
        traj_ctx[i] = ctx_code[traj.context]
        for item in traj.items:
            try:
                acts.append(act_code[item.action])
            except KeyError:
                raise ConfigurationError(
                    f"trajectory {traj.traj_id!r}: action {item.action!r} not in catalog"
                ) from None
            props.append(item.logging_view_prob)
            rewards.append(item.reward)
        offsets[i + 1] = len(acts)
    return (
        ctx_ids,
        traj_ctx,
        offsets,
        np.asarray(acts, dtype=np.int64),
        np.asarray(props, dtype=np.float64),
        np.asarray(rewards, dtype=np.float64),
    )


def _target_discounts(
    ctx_ids,
    catalog: Catalog,
    target_ranker: RankingPolicy,
    target_generator: CandidateGenerator,
    disc_model: PositionBiasModel,
    bound: int = 6,
) -> np.ndarray:
    """(context, action) -> discount the target policy grants that action.

    Deterministic pipelines use the view probability at the action's target
    rank (0 for actions the target never shows); stochastic pipelines use the
    exactly enumerated marginal exposure.
    """
    out = np.zeros((len(ctx_ids), len(catalog)), dtype=np.float64)
    act_code = {a: i for i, a in enumerate(catalog.actions)}
    deterministic = target_ranker.is_deterministic and target_generator.is_deterministic
    for ci, x in enumerate(ctx_ids):
        if deterministic:
            ordered = rank(target_ranker, x, candidates(target_generator, x, catalog))
            for r, a in enumerate(ordered, start=1):
                out[ci, act_code[a]] = view_prob(disc_model, r)
        else:
            for a in catalog.actions:
                out[ci, act_code[a]] = exposure_bruteforce(
                    target_generator, target_ranker, disc_model, x, a, catalog, bound
                )
    return out


def _ideal_position_discounts(disc_model: PositionBiasModel, max_len: int) -> np.ndarray:
    return view_prob_vector(disc_model, max(max_len, 1))


def _sample_std(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1))


def evaluate(
    dataset: LoggedDataset,
    target_ranker: RankingPolicy,
    target_generator: CandidateGenerator,
    config: EstimatorConfig,
    catalog: Catalog,
    ideal_quality: QualityModel | None = None,
    bound: int = 6,
) -> MetricReport:
    """Estimate the configured metric for the target policy on a dataset.

    ideal_quality switches normalization to the diagnostic oracle mode where
    each trajectory's ideal uses the true qualities of its items instead of
    its observed labels. Deterministic given the dataset order.
    """
    ctx_ids, traj_ctx, offsets, acts, props, rewards = _flatten_dataset(dataset, catalog)
    labels = _item_labels(rewards, props, config)
    disc_model = config.discount_model()
    disc_table = _target_discounts(
        ctx_ids, catalog, target_ranker, target_generator, disc_model, bound
    )
    item_ctx = np.repeat(traj_ctx, np.diff(offsets))
    disc_items = disc_table[item_ctx, acts] if len(acts) else np.zeros(0, dtype=np.float64)
    dcg = kernels.dcg_values(offsets, labels, disc_items)
    n = len(dataset.trajectories)

    if config.normalization == "none":
        return MetricReport(
            mean=float(dcg.mean()) if n else 0.0,
            std=_sample_std(dcg),
            n_trajectories=n,
            skipped=0,
            per_trajectory_values=tuple(dcg.tolist()),
        )

    if ideal_quality is not None:
        qual = np.empty((len(ctx_ids), len(catalog)), dtype=np.float64)
        for ci, x in enumerate(ctx_ids):
            for ai, a in enumerate(catalog.actions):
                qual[ci, ai] = ideal_quality.quality(x, a)
        ideal_labels = qual[item_ctx, acts] if len(acts) else np.zeros(0, dtype=np.float64)
    else:
        ideal_labels = labels
    max_len = int(np.diff(offsets).max()) if n else 0
    ideal = kernels.ideal_dcg_values(
        offsets, ideal_labels, _ideal_position_discounts(disc_model, max_len)
    )

    if config.normalization == "per_trajectory":
        mask = ideal > 0.0
        values = dcg[mask] / ideal[mask]
        skipped = int(n - mask.sum())
        if len(values) == 0:
            raise DegenerateDataError(
                "per-trajectory normalization skipped every trajectory (all ideals are 0)"
            )
        return MetricReport(
            mean=float(values.mean()),
            std=_sample_std(values),
            n_trajectories=n,
            skipped=skipped,
            per_trajectory_values=tuple(values.tolist()),
        )

    total_ideal = float(ideal.sum())
    if total_ideal == 0.0:
        raise DegenerateDataError("post normalization undefined: total ideal value is 0")
    return MetricReport(
        mean=float(dcg.sum()) / total_ideal,
        std=0.0,
        n_trajectories=n,
        skipped=n,
        per_trajectory_values=(),
    )


def evaluate_m_grid(
    dataset: LoggedDataset,
    target_ranker: RankingPolicy,
    target_generator: CandidateGenerator,
    base_config: EstimatorConfig,
    catalog: Catalog,
    m_grid=DEFAULT_M_GRID,
    bound: int = 6,
) -> dict[float, MetricReport]:
    """Evaluate base_config at every clipping cap, flattening the dataset once."""
    reports = {}
    for m in m_grid:
        reports[m] = evaluate(
            dataset,
            target_ranker,
            target_generator,
            replace(base_config, clip_m=float(m)),
            catalog,
            bound=bound,
        )
    return reports


def _single_trajectory_dataset(traj: LoggedTrajectory) -> LoggedDataset:
    return LoggedDataset(trajectories=(traj,))


def trajectory_dcg(
    traj: LoggedTrajectory,
    target_ranker: RankingPolicy,
    target_generator: CandidateGenerator,
    config: EstimatorConfig,
    catalog: Catalog,
) -> float:
    """One trajectory's discounted label sum under a deterministic target."""
    if not (target_ranker.is_deterministic and target_generator.is_deterministic):
        raise UnsupportedPolicyError(
            "trajectory_dcg needs a deterministic target; use trajectory_dcg_stochastic"
        )
    report = evaluate(
        _single_trajectory_dataset(traj),
        target_ranker,
        target_generator,
        replace(config, normalization="none"),
        catalog,
    )
    return report.per_trajectory_values[0]


def trajectory_dcg_stochastic(
    traj: LoggedTrajectory,
    target_ranker: RankingPolicy,
    target_generator: CandidateGenerator,
    config: EstimatorConfig,
    catalog: Catalog,
    bound: int = 6,
) -> float:
    """Like trajectory_dcg but weights each item by the target pipeline's
    exactly enumerated marginal exposure; valid for stochastic targets."""
    disc_model = config.discount_model()
    props = np.array([it.logging_view_prob for it in traj.items], dtype=np.float64)
    rewards = np.array([it.reward for it in traj.items], dtype=np.float64)
    labels = _item_labels(rewards, props, config)
    acc = 0.0
    for label, item in zip(labels.tolist(), traj.items):
        exposure = exposure_bruteforce(
            target_generator, target_ranker, disc_model, traj.context, item.action,
            catalog, bound,
        )
        acc += label * exposure
    return acc


def trajectory_ideal_dcg(
    traj: LoggedTrajectory,
    config: EstimatorConfig,
    ideal_quality: QualityModel | None = None,
) -> float:
    """Best achievable discounted sum of the trajectory's own labels: labels
    sorted descending, dotted with the discount at positions 1, 2, ..."""
    if ideal_quality is not None:
        labels = np.array(
            [ideal_quality.quality(traj.context, it.action) for it in traj.items],
            dtype=np.float64,
        )
    else:
        props = np.array([it.logging_view_prob for it in traj.items], dtype=np.float64)
        rewards = np.array([it.reward for it in traj.items], dtype=np.float64)
        labels = _item_labels(rewards, props, config)
    disc_model = config.discount_model()
    disc = _ideal_position_discounts(disc_model, len(traj.items)).tolist()
    acc = 0.0
    for j, lab in enumerate(sorted(labels.tolist(), reverse=True)):
        acc += lab * disc[j]
    return acc


def format_clip_m(m: float) -> str:
    if math.isinf(m):
        return "inf"
    if float(m).is_integer():
        return str(int(m))
    return repr(float(m))


ESTIMATE_HEADER = "variant,discount,labels,clip_m,normalization,mean,std,n,skipped"


def estimate_csv_row(name: str, config: EstimatorConfig, report: MetricReport) -> str:
    fields = [
        name,
        config.discount_kind,
        config.labels,
        format_clip_m(config.clip_m),
        config.normalization,
        repr(report.mean),
        repr(report.std),
        str(report.n_trajectories),
        str(report.skipped),
    ]
    return ",".join(fields)
