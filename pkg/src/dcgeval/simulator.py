"""Synthetic logging environment satisfying the toolkit's generative model.

One simulated session: draw a context, let the candidate generator pick the
eligible actions, let the logging ranker order them, then for every display
rank up to the position-bias cutoff flip an independent view coin with that
rank's view probability. Viewed items earn a reward: Bernoulli(quality) in
"binary" mode, or quality times a mean-one lognormal factor in "real" mode.
Only viewed items are logged, each carrying the exact view probability the
simulator used for its rank, which is what makes downstream importance
weights exact rather than estimated.

All sampling is vectorized: a seeded numpy Generator pre-draws every random
array in a fixed order and the kernel backend flattens them into logged
items, so datasets are deterministic functions of (environment, n, day,
seed) regardless of backend. The per-call functions in dcgeval.policies
define the semantics the vectorized path must match; tests pin them to each
other. Ground-truth values come either from exact enumeration over the
generator/ranking distributions or from plain Monte-Carlo rollouts of the
same generative process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .bias import PositionBiasModel, validate_model, view_prob, view_prob_vector
from .domain import (
    ActionId,
    Catalog,
    ContextId,
    LoggedDataset,
    LoggedItem,
    LoggedTrajectory,
    QualityModel,
)
from .errors import ConfigurationError, FullSupportError
from .policies import (
    CandidateGenerator,
    RankingPolicy,
    candidate_distribution,
    candidates,
    rank,
    ranking_distribution,
)

REWARD_MODES = ("binary", "real")

# Sub-stream tags appended to the user seed so that the dataset draw, the
# online rollout, and drift jitter never share a stream.
_TAG_DATASET = 0
_TAG_ONLINE = 1
_TAG_DRIFT = 2


@dataclass(frozen=True)
class Environment:
    """Complete description of the logging system under simulation."""

    catalog: Catalog
    contexts: tuple[ContextId, ...]
    context_probs: tuple[float, ...]
    quality: QualityModel
    logging_pbm: PositionBiasModel
    generator: CandidateGenerator
    logging_ranker: RankingPolicy
    reward_mode: str = "binary"
    reward_noise_sigma: float = 0.25  # real mode: lognormal sigma

    def __post_init__(self):
        object.__setattr__(self, "contexts", tuple(self.contexts))
        object.__setattr__(self, "context_probs", tuple(float(p) for p in self.context_probs))
        if len(self.contexts) == 0:
            raise ConfigurationError("environment needs at least one context")
        if len(set(self.contexts)) != len(self.contexts):
            raise ConfigurationError("context ids must be unique")
        if len(self.context_probs) != len(self.contexts):
            raise ConfigurationError("context_probs must match contexts in length")
        if any(p < 0 for p in self.context_probs):
            raise ConfigurationError("context probabilities must be nonnegative")
        if abs(sum(self.context_probs) - 1.0) > 1e-12:
            raise ConfigurationError("context probabilities must sum to 1 within 1e-12")
        problems = validate_model(self.logging_pbm)
        if problems:
            raise ConfigurationError(f"invalid logging position-bias model: {problems[0]}")
        for r in range(1, self.logging_pbm.cutoff_n + 1):
            if view_prob(self.logging_pbm, r) <= 0.0:
                raise ConfigurationError(
                    f"logging view probability must be strictly positive up to the "
                    f"cutoff; rank {r} has probability 0"
                )
        if self.reward_mode not in REWARD_MODES:
            raise ConfigurationError(f"unknown reward_mode {self.reward_mode!r}")
        if self.reward_noise_sigma < 0:
            raise ConfigurationError("reward_noise_sigma must be nonnegative")
        for x in self.contexts:
            for a in self.catalog.actions:
                q = self.quality.quality(x, a)
                if self.reward_mode == "binary" and q > 1.0:
                    raise ConfigurationError(
                        f"binary reward mode requires quality <= 1, got {q} for ({x}, {a})"
                    )


@dataclass(frozen=True)
class DriftSchedule:
    """Per-day multiplicative quality perturbation.

    factors[d] scales every quality on day d; noise_amplitude > 0 additionally
    applies seeded mean-one lognormal jitter per (day, context, action).
    """

    days: int
    factors: tuple[float, ...]
    noise_amplitude: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(float(f) for f in self.factors))
        if self.days < 1:
            raise ConfigurationError("drift schedule needs days >= 1")
        if len(self.factors) != self.days:
            raise ConfigurationError("drift factors must have one entry per day")
        if any(f < 0 for f in self.factors):
            raise ConfigurationError("drift factors must be nonnegative")
        if self.noise_amplitude < 0:
            raise ConfigurationError("noise_amplitude must be nonnegative")


@dataclass(frozen=True)
class DayResult:
    """One day of a simulated experiment series."""

    day: int
    dataset: LoggedDataset
    online_value: float
    online_std_err: float


def _entropy(seed) -> list[int]:
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return [int(seed)]


def _rng(seed, *tags) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed) + list(tags)))


def _quality_matrix(env: Environment) -> np.ndarray:
    out = np.empty((len(env.contexts), len(env.catalog)), dtype=np.float64)
    for ci, x in enumerate(env.contexts):
        for ai, a in enumerate(env.catalog.actions):
            out[ci, ai] = env.quality.quality(x, a)
    return out


def _score_matrix(scores, contexts, catalog: Catalog) -> np.ndarray:
    out = np.empty((len(contexts), len(catalog)), dtype=np.float64)
    for ci, x in enumerate(contexts):
        for ai, a in enumerate(catalog.actions):
            out[ci, ai] = scores.score(x, a)
    return out


def _id_sort_rank(catalog: Catalog) -> np.ndarray:
    """Position of each catalog index when action ids are sorted ascending."""
    order = sorted(range(len(catalog)), key=lambda i: catalog.actions[i])
    sid = np.empty(len(catalog), dtype=np.int64)
    for pos, idx in enumerate(order):
        sid[idx] = pos
    return sid


def _sort_rows_desc(cand: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Order each row of cand by descending key; callers pre-break ties."""
    order = np.argsort(-keys, axis=1, kind="stable")
    return np.take_along_axis(cand, order, axis=1)


def _batch_ranked(
    contexts, catalog, generator, ranker, ctx_idx, rng
) -> np.ndarray:
    """Ranked candidate slates (n, k) as action indices, one row per session.

    Consumes rng in a fixed order (subset draws, then ranking draws) so the
    whole simulation stays deterministic for a given seed.
    """
    n = len(ctx_idx)
    n_actions = len(catalog)
    act_index = {a: i for i, a in enumerate(catalog.actions)}
    sid = _id_sort_rank(catalog)

    if generator.is_deterministic:
        per_ctx = [
            [act_index[a] for a in candidates(generator, x, catalog)] for x in contexts
        ]
        k = len(per_ctx[0])
        cand = np.asarray(per_ctx, dtype=np.int64)[ctx_idx]
    else:
        k = generator.k
        if k > n_actions:
            raise ConfigurationError(f"k={k} exceeds catalog size {n_actions}")
        draws = rng.random((n, n_actions))
        cand = np.argsort(draws, axis=1, kind="stable")[:, :k].astype(np.int64)

    if ranker.kind == "deterministic_sort":
        if generator.is_deterministic:
            # one exact per-call ranking per context, broadcast to all rows
            per_ctx_ranked = []
            for ci, x in enumerate(contexts):
                cand_actions = [catalog.actions[ai] for ai in per_ctx[ci]]
                ordered = rank(ranker, x, cand_actions)
                per_ctx_ranked.append([act_index[a] for a in ordered])
            return np.asarray(per_ctx_ranked, dtype=np.int64)[ctx_idx]
        scores = _score_matrix(ranker.scores, contexts, catalog)
        # tie-break by ascending action id first (stable sorts compose)
        by_id = np.take_along_axis(cand, np.argsort(sid[cand], axis=1, kind="stable"), axis=1)
        keys = scores[np.asarray(ctx_idx)[:, None], by_id]
        return _sort_rows_desc(by_id, keys)

    # plackett_luce: Gumbel-max keys reproduce sequential softmax sampling
    scores = _score_matrix(ranker.scores, contexts, catalog)
    u = rng.random((n, cand.shape[1]))
    gumbel = -np.log(-np.log(u))
    keys = scores[np.asarray(ctx_idx)[:, None], cand] / ranker.temperature + gumbel
    return _sort_rows_desc(cand, keys)


def _generate_flat(env: Environment, ranker, generator, pbm, n_trajectories, rng):
    """Simulate n sessions; return (ctx_idx, counts, actions, ranks, props, rewards)."""
    c = len(env.contexts)
    probs = np.asarray(env.context_probs, dtype=np.float64)
    ctx_idx = rng.choice(c, size=n_trajectories, p=probs).astype(np.int64, copy=False)
    ranked = _batch_ranked(env.contexts, env.catalog, generator, ranker, ctx_idx, rng)
    display_n = min(pbm.cutoff_n, ranked.shape[1])
    ranked = np.ascontiguousarray(ranked[:, :display_n])
    pbm_probs = view_prob_vector(pbm, display_n)
    view_u = rng.random((n_trajectories, display_n))
    if env.reward_mode == "binary":
        reward_vals = rng.random((n_trajectories, display_n))
    else:
        sigma = env.reward_noise_sigma
        z = rng.standard_normal((n_trajectories, display_n))
        reward_vals = np.exp(-0.5 * sigma * sigma + sigma * z)
    quality = _quality_matrix(env)
    counts, actions, ranks, props, rewards = kernels.sample_logged_items(
        ranked, ctx_idx, quality, pbm_probs, view_u, reward_vals, env.reward_mode == "binary"
    )
    return ctx_idx, counts, actions, ranks, props, rewards


def simulate_dataset(env: Environment, n_trajectories: int, day: int, seed) -> LoggedDataset:
    """Simulate one day of logging-policy traffic.

    Deterministic for a given (env, n_trajectories, day, seed); trajectories
    with no viewed items are kept as empty sessions.
    """
    if n_trajectories < 0:
        raise ValueError("n_trajectories must be nonnegative")
    rng = _rng(seed, _TAG_DATASET, day)
    ctx_idx, counts, actions, ranks, props, rewards = _generate_flat(
        env, env.logging_ranker, env.generator, env.logging_pbm, n_trajectories, rng
    )
    action_names = env.catalog.actions
    context_names = env.contexts
    trajectories = []
    pos = 0
    counts_list = counts.tolist()
    actions_list = actions.tolist()
    ranks_list = ranks.tolist()
    props_list = props.tolist()
    rewards_list = rewards.tolist()
    for i in range(n_trajectories):
        n_items = counts_list[i]
        items = tuple(
            LoggedItem(
                action=action_names[actions_list[t]],
                log_rank=ranks_list[t],
                logging_view_prob=props_list[t],
                reward=rewards_list[t],
            )
            for t in range(pos, pos + n_items)
        )
        pos += n_items
        trajectories.append(
            LoggedTrajectory(
                traj_id=f"d{day}-t{i}",
                day=day,
                context=context_names[ctx_idx[i]],
                items=items,
            )
        )
    metadata = {
        "day": str(day),
        "seed": ",".join(str(s) for s in _entropy(seed)),
        "generator": env.generator.kind,
        "logging_ranker": env.logging_ranker.kind,
        "logging_pbm": env.logging_pbm.kind,
        "reward_mode": env.reward_mode,
    }
    return LoggedDataset(trajectories=tuple(trajectories), metadata=metadata)


def true_policy_value(
    env: Environment,
    target_ranker: RankingPolicy,
    target_generator: CandidateGenerator,
    target_pbm: PositionBiasModel,
    bound: int = 6,
) -> float:
    """Exact expected per-session reward sum under the target policy.

    Enumerates the candidate and ranking distributions, so stochastic stages
    must stay within the enumeration bound.
    """
    total = 0.0
    for x, px in zip(env.contexts, env.context_probs):
        if px == 0.0:
            continue
        for cand_set, ps in candidate_distribution(target_generator, x, env.catalog, bound).items():
            for perm, pr in ranking_distribution(target_ranker, x, cand_set, bound).items():
                value = 0.0
                for r, a in enumerate(perm, start=1):
                    value += env.quality.quality(x, a) * view_prob(target_pbm, r)
                total += px * ps * pr * value
    return total


def monte_carlo_policy_value(
    env: Environment,
    target_ranker: RankingPolicy,
    target_generator: CandidateGenerator,
    target_pbm: PositionBiasModel,
    n_trajectories: int,
    seed,
) -> tuple[float, float]:
    """Empirical (mean, std_err) of the per-session reward sum under the
    target policy, simulated with the environment's reward mechanism."""
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    rng = _rng(seed, _TAG_ONLINE)
    _, counts, _, _, _, rewards = _generate_flat(
        env, target_ranker, target_generator, target_pbm, n_trajectories, rng
    )
    offsets = np.zeros(n_trajectories + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    values = kernels.dcg_values(offsets, rewards, np.ones_like(rewards))
    mean = float(values.mean())
    if n_trajectories == 1:
        return mean, 0.0
    std_err = float(values.std(ddof=1) / math.sqrt(n_trajectories))
    return mean, std_err


def exposure_bruteforce(
    generator: CandidateGenerator,
    ranker: RankingPolicy,
    pbm: PositionBiasModel,
    context: ContextId,
    action: ActionId,
    catalog: Catalog,
    bound: int = 6,
) -> float:
    """Marginal probability that action is viewed, by exact enumeration over
    candidate sets, rankings, and display ranks."""
    total = 0.0
    for cand_set, ps in candidate_distribution(generator, context, catalog, bound).items():
        if action not in cand_set:
            continue
        for perm, pr in ranking_distribution(ranker, context, cand_set, bound).items():
            r = perm.index(action) + 1
            total += ps * pr * view_prob(pbm, r)
    return total


def exposure_ratio_simplified(
    target_pbm: PositionBiasModel,
    target_rank: int,
    logging_pbm: PositionBiasModel,
    logging_rank: int,
) -> float:
    """Exposure ratio for deterministic pipelines, where marginal exposure
    collapses to the view probability of the single realized rank."""
    denominator = view_prob(logging_pbm, logging_rank)
    if denominator == 0.0:
        raise FullSupportError(
            f"logging rank {logging_rank} has zero view probability; the "
            f"exposure ratio is undefined (full-support violation)"
        )
    return view_prob(target_pbm, target_rank) / denominator


def drifted_quality(env: Environment, drift: DriftSchedule, day: int, seed) -> QualityModel:
    """Quality table for one day: base quality times the day factor, times
    optional seeded lognormal jitter, clamped to the reward mode's range."""
    if not 0 <= day < drift.days:
        raise ValueError(f"day {day} outside drift schedule of {drift.days} days")
    factor = drift.factors[day]
    jitter = None
    if drift.noise_amplitude > 0:
        amp = drift.noise_amplitude
        rng = _rng(seed, _TAG_DRIFT, day)
        z = rng.standard_normal((len(env.contexts), len(env.catalog)))
        jitter = np.exp(-0.5 * amp * amp + amp * z)
    table = {}
    for ci, x in enumerate(env.contexts):
        for ai, a in enumerate(env.catalog.actions):
            value = env.quality.quality(x, a) * factor
            if jitter is not None:
                value *= jitter[ci, ai]
            if env.reward_mode == "binary":
                value = min(value, 1.0)
            table[(x, a)] = value
    return QualityModel(table)


def simulate_experiment_series(
    env: Environment,
    target_ranker: RankingPolicy,
    target_generator: CandidateGenerator,
    target_pbm: PositionBiasModel,
    drift: DriftSchedule,
    n_per_day: int,
    seed,
    online_mode: str = "mc",
    n_online: int | None = None,
) -> list[DayResult]:
    """One logged dataset and one online ground-truth value per drifted day.

    online_mode "exact" enumerates the true value (std_err 0); "mc" runs a
    Monte-Carlo rollout of n_online sessions (default n_per_day) under the
    target policy on that day's drifted environment.
    """
    if online_mode not in ("exact", "mc"):
        raise ValueError(f"unknown online_mode {online_mode!r}")
    results = []
    for day in range(drift.days):
        day_env = replace(env, quality=drifted_quality(env, drift, day, seed))
        dataset = simulate_dataset(day_env, n_per_day, day, seed)
        if online_mode == "exact":
            value = true_policy_value(day_env, target_ranker, target_generator, target_pbm)
            std_err = 0.0
        else:
            n_mc = n_online if n_online is not None else n_per_day
            if n_mc < 1:
                # No sessions to roll out: the online value is unknowable.
                value, std_err = math.nan, math.nan
            else:
                value, std_err = monte_carlo_policy_value(
                    day_env,
                    target_ranker,
                    target_generator,
                    target_pbm,
                    n_mc,
                    _entropy(seed) + [day],
                )
        results.append(DayResult(day=day, dataset=dataset, online_value=value, online_std_err=std_err))
    return results
