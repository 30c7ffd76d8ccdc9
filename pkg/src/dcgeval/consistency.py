"""When do per-sample and aggregate metric orderings agree?

Per sample, DCG and its normalized variant order two rankings identically:
normalizing divides both policies' scores by the same positive per-sample
ideal, which cannot flip a comparison. Aggregated over samples, the
normalizers differ per sample, reweighting samples relative to each other,
and the two aggregate orderings can invert. This module checks the
single-sample property on explicit relevance tables, reproduces a pinned
two-context inversion instance, searches small grids exhaustively for the
first verifiable inversion, and summarizes DCG/normalized-DCG disagreement
over a table of model scores.

Everything here works on exact relevance tables and full deterministic
rankings (metric analysis), independent of the logged-data estimators.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DatasetError, DegenerateDataError
from .stats import kendall_tau, pearson_r


def _log_discounts(n: int, cutoff: int) -> list[float]:
    return [1.0 / math.log2(r + 1) if r <= cutoff else 0.0 for r in range(1, n + 1)]


def _sample_dcg(rho: dict, ranking, discounts) -> float:
    acc = 0.0
    for pos, action in enumerate(ranking):
        acc += rho[action] * discounts[pos]
    return acc


def _sample_ideal(rho: dict, discounts) -> float:
    acc = 0.0
    for pos, value in enumerate(sorted(rho.values(), reverse=True)):
        acc += value * discounts[pos]
    return acc


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def check_single_sample_consistency(dcg_values, ndcg_values) -> bool:
    """True iff the two scores order the policies identically, ties included.

    Values are aligned per policy: dcg_values[i] and ndcg_values[i] belong to
    the same policy on the same sample.
    """
    if len(dcg_values) != len(ndcg_values):
        raise ValueError("value lists must align per policy")
    for i in range(len(dcg_values)):
        for j in range(i + 1, len(dcg_values)):
            if _sign(dcg_values[i] - dcg_values[j]) != _sign(ndcg_values[i] - ndcg_values[j]):
                return False
    return True


@dataclass(frozen=True)
class AggregateComparison:
    """Mean-level orderings of policies under DCG and normalized DCG."""

    dcg_order: tuple[str, ...]
    ndcg_order: tuple[str, ...]
    dcg_means: dict[str, float]
    ndcg_means: dict[str, float]
    consistent: bool


def check_aggregate_consistency(dcg_table: dict, ndcg_table: dict) -> AggregateComparison:
    """Order policies by their mean DCG and mean normalized DCG.

    Tables map policy id -> per-sample values (nDCG lists may be shorter when
    zero-ideal samples were skipped). Orders break mean ties by policy id;
    consistency is pairwise sign agreement of the mean differences.
    """
    if set(dcg_table) != set(ndcg_table):
        raise ValueError("tables must cover the same policies")
    if len(dcg_table) < 2:
        raise ValueError("need at least two policies to compare")
    dcg_means = {p: float(np.mean(v)) for p, v in dcg_table.items()}
    ndcg_means = {p: float(np.mean(v)) for p, v in ndcg_table.items()}
    policies = sorted(dcg_table)
    consistent = all(
        _sign(dcg_means[p] - dcg_means[q]) == _sign(ndcg_means[p] - ndcg_means[q])
        for p, q in itertools.combinations(policies, 2)
    )
    return AggregateComparison(
        dcg_order=tuple(sorted(policies, key=lambda p: (-dcg_means[p], p))),
        ndcg_order=tuple(sorted(policies, key=lambda p: (-ndcg_means[p], p))),
        dcg_means=dcg_means,
        ndcg_means=ndcg_means,
        consistent=consistent,
    )


@dataclass(frozen=True)
class Table1Report:
    """Pinned two-context top-1 instance where aggregates invert."""

    contexts: tuple[str, ...]
    policies: tuple[str, str]
    per_sample_dcg: dict[tuple[str, str], float]  # (context, policy) -> value
    per_sample_ndcg: dict[tuple[str, str], float]
    dcg_means: dict[str, float]
    ndcg_means: dict[str, float]
    per_sample_consistent: bool
    aggregates_inverted: bool


def reproduce_table1() -> Table1Report:
    """Recompute the pinned inversion instance.

    Two equally likely contexts, two actions with qualities
    x1: (1.0, 0.0), x2: (1.0, 2.5); policy_a always shows a1 top-1, policy_b
    shows a2. Per-sample normalized DCG divides by the context's total
    quality mass (the per-sample normalizer under which both samples stay
    individually consistent). Aggregate DCG prefers policy_b while aggregate
    normalized DCG prefers policy_a.
    """
    rho = {
        ("x1", "a1"): 1.0,
        ("x1", "a2"): 0.0,
        ("x2", "a1"): 1.0,
        ("x2", "a2"): 2.5,
    }
    contexts = ("x1", "x2")
    top_choice = {"policy_a": "a1", "policy_b": "a2"}
    per_dcg = {}
    per_ndcg = {}
    for x in contexts:
        mass = rho[(x, "a1")] + rho[(x, "a2")]
        for policy, action in top_choice.items():
            value = rho[(x, action)]
            per_dcg[(x, policy)] = value
            per_ndcg[(x, policy)] = value / mass
    dcg_means = {
        p: sum(per_dcg[(x, p)] for x in contexts) / len(contexts) for p in top_choice
    }
    ndcg_means = {
        p: sum(per_ndcg[(x, p)] for x in contexts) / len(contexts) for p in top_choice
    }
    per_sample_consistent = all(
        check_single_sample_consistency(
            [per_dcg[(x, "policy_a")], per_dcg[(x, "policy_b")]],
            [per_ndcg[(x, "policy_a")], per_ndcg[(x, "policy_b")]],
        )
        for x in contexts
    )
    inverted = (
        _sign(dcg_means["policy_a"] - dcg_means["policy_b"])
        == -_sign(ndcg_means["policy_a"] - ndcg_means["policy_b"])
        != 0
    )
    return Table1Report(
        contexts=contexts,
        policies=("policy_a", "policy_b"),
        per_sample_dcg=per_dcg,
        per_sample_ndcg=per_ndcg,
        dcg_means=dcg_means,
        ndcg_means=ndcg_means,
        per_sample_consistent=per_sample_consistent,
        aggregates_inverted=inverted,
    )


@dataclass(frozen=True)
class Counterexample:
    """A verified instance where aggregate DCG and nDCG order two rankings
    oppositely while every sample orders them consistently."""

    contexts: tuple[str, ...]
    actions: tuple[str, ...]
    quality: dict[tuple[str, str], float]
    ranking_a: tuple[str, ...]
    ranking_b: tuple[str, ...]
    log_cutoff: int
    dcg_mean_a: float
    dcg_mean_b: float
    ndcg_mean_a: float
    ndcg_mean_b: float


def _evaluate_instance(contexts, actions, quality, ranking_a, ranking_b, cutoff):
    """Aggregate (dcg_a, dcg_b, ndcg_a, ndcg_b) or None when nDCG is empty.

    DCG averages over all samples; nDCG (standard sorted-ideal normalizer)
    averages over samples with positive ideal.
    """
    discounts = _log_discounts(len(actions), cutoff)
    dcg_a = dcg_b = 0.0
    ndcg_a = ndcg_b = 0.0
    n_ndcg = 0
    for x in contexts:
        rho = {a: quality[(x, a)] for a in actions}
        va = _sample_dcg(rho, ranking_a, discounts)
        vb = _sample_dcg(rho, ranking_b, discounts)
        dcg_a += va
        dcg_b += vb
        ideal = _sample_ideal(rho, discounts)
        if ideal > 0.0:
            ndcg_a += va / ideal
            ndcg_b += vb / ideal
            n_ndcg += 1
    if n_ndcg == 0:
        return None
    n = len(contexts)
    return dcg_a / n, dcg_b / n, ndcg_a / n_ndcg, ndcg_b / n_ndcg


def search_counterexample(
    max_contexts: int = 3,
    max_actions: int = 3,
    quality_grid=(0.0, 1.0),
    log_cutoff: int | None = None,
) -> Counterexample | None:
    """Exhaustively search small instances for an aggregate inversion.

    Enumerates instance sizes, quality tables over the grid, and unordered
    pairs of full rankings in a fixed lexicographic order, returning the
    first instance where the aggregate DCG and nDCG orders are strictly
    opposite (the deterministic "smallest" witness). Returns None when the
    whole space is inversion-free, e.g. for a single context.
    """
    grid = tuple(float(v) for v in quality_grid)
    for n_ctx in range(1, max_contexts + 1):
        contexts = tuple(f"x{i + 1}" for i in range(n_ctx))
        for n_act in range(2, max_actions + 1):
            actions = tuple(f"a{i + 1}" for i in range(n_act))
            cutoff = log_cutoff if log_cutoff is not None else n_act
            pairs = list(
                itertools.combinations(itertools.permutations(actions), 2)
            )
            for values in itertools.product(grid, repeat=n_ctx * n_act):
                quality = {}
                pos = 0
                for x in contexts:
                    for a in actions:
                        quality[(x, a)] = values[pos]
                        pos += 1
                for ranking_a, ranking_b in pairs:
                    result = _evaluate_instance(
                        contexts, actions, quality, ranking_a, ranking_b, cutoff
                    )
                    if result is None:
                        continue
                    dcg_a, dcg_b, ndcg_a, ndcg_b = result
                    if _sign(dcg_a - dcg_b) == -_sign(ndcg_a - ndcg_b) != 0:
                        return Counterexample(
                            contexts=contexts,
                            actions=actions,
                            quality=quality,
                            ranking_a=ranking_a,
                            ranking_b=ranking_b,
                            log_cutoff=cutoff,
                            dcg_mean_a=dcg_a,
                            dcg_mean_b=dcg_b,
                            ndcg_mean_a=ndcg_a,
                            ndcg_mean_b=ndcg_b,
                        )
    return None


def verify_counterexample(ce: Counterexample) -> bool:
    """Recompute a counterexample from its raw table and confirm both the
    aggregate inversion and per-sample consistency on every context."""
    result = _evaluate_instance(
        ce.contexts, ce.actions, ce.quality, ce.ranking_a, ce.ranking_b, ce.log_cutoff
    )
    if result is None:
        return False
    dcg_a, dcg_b, ndcg_a, ndcg_b = result
    if not (
        math.isclose(dcg_a, ce.dcg_mean_a)
        and math.isclose(dcg_b, ce.dcg_mean_b)
        and math.isclose(ndcg_a, ce.ndcg_mean_a)
        and math.isclose(ndcg_b, ce.ndcg_mean_b)
    ):
        return False
    if _sign(dcg_a - dcg_b) != -_sign(ndcg_a - ndcg_b) or _sign(dcg_a - dcg_b) == 0:
        return False
    discounts = _log_discounts(len(ce.actions), ce.log_cutoff)
    for x in ce.contexts:
        rho = {a: ce.quality[(x, a)] for a in ce.actions}
        ideal = _sample_ideal(rho, discounts)
        if ideal <= 0.0:
            continue
        va = _sample_dcg(rho, ce.ranking_a, discounts)
        vb = _sample_dcg(rho, ce.ranking_b, discounts)
        if not check_single_sample_consistency([va, vb], [va / ideal, vb / ideal]):
            return False
    return True


@dataclass(frozen=True)
class SingleSampleTrialReport:
    """Randomized single-sample agreement trials."""

    n_trials: int
    n_consistent: int
    n_skipped: int


def run_single_sample_trials(
    n_trials: int,
    seed: int,
    max_items: int = 6,
    label_high: float = 5.0,
    zero_label_prob: float = 0.25,
) -> SingleSampleTrialReport:
    """Draw random relevance vectors and ranking pairs; count how often the
    per-sample DCG and nDCG orderings agree (zero-ideal samples are skipped).
    """
    rng = np.random.default_rng(seed)
    consistent = 0
    skipped = 0
    for _ in range(n_trials):
        k = int(rng.integers(2, max_items + 1))
        labels = rng.uniform(0.0, label_high, size=k)
        labels[rng.random(k) < zero_label_prob] = 0.0
        actions = [f"a{i}" for i in range(k)]
        rho = dict(zip(actions, labels.tolist()))
        perm_a = tuple(rng.permutation(actions).tolist())
        perm_b = tuple(rng.permutation(actions).tolist())
        discounts = _log_discounts(k, k)
        ideal = _sample_ideal(rho, discounts)
        if ideal <= 0.0:
            skipped += 1
            continue
        va = _sample_dcg(rho, perm_a, discounts)
        vb = _sample_dcg(rho, perm_b, discounts)
        if check_single_sample_consistency([va, vb], [va / ideal, vb / ideal]):
            consistent += 1
    return SingleSampleTrialReport(
        n_trials=n_trials, n_consistent=consistent, n_skipped=skipped
    )


@dataclass(frozen=True)
class DisagreementReport:
    """How often DCG and nDCG disagree across a table of model scores."""

    n_models: int
    pearson: float
    kendall: float
    inversion_rate: float
    n_pairs_used: int


def read_metric_table(path: str):
    """Read a model-score CSV with the exact header model_id,dcg,ndcg."""
    model_ids, dcg, ndcg = [], [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty metric table") from None
        if header != ["model_id", "dcg", "ndcg"]:
            raise DatasetError(
                f"{path}: header must be model_id,dcg,ndcg, got {','.join(header)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise DatasetError(f"{path}:{line_no}: expected 3 fields")
            try:
                dcg.append(float(row[1]))
                ndcg.append(float(row[2]))
            except ValueError:
                raise DatasetError(f"{path}:{line_no}: scores must be numbers") from None
            model_ids.append(row[0])
    if len(model_ids) < 2:
        raise DatasetError(f"{path}: need at least two models")
    return model_ids, dcg, ndcg


def disagreement_report(dcg, ndcg) -> DisagreementReport:
    """Correlations plus the pairwise inversion rate between two scorings.

    The inversion rate counts strict order flips over pairs where neither
    score ties; a table tied everywhere has no usable pairs and is an error.
    """
    if len(dcg) != len(ndcg):
        raise ValueError("score lists must align per model")
    n = len(dcg)
    if n < 2:
        raise ValueError("need at least two models")
    inversions = 0
    used = 0
    for i in range(n):
        for j in range(i + 1, n):
            sd = _sign(dcg[i] - dcg[j])
            sn = _sign(ndcg[i] - ndcg[j])
            if sd == 0 or sn == 0:
                continue
            used += 1
            if sd != sn:
                inversions += 1
    if used == 0:
        raise DegenerateDataError("all model pairs are tied; disagreement is undefined")
    return DisagreementReport(
        n_models=n,
        pearson=pearson_r(dcg, ndcg),
        kendall=kendall_tau(dcg, ndcg),
        inversion_rate=inversions / used,
        n_pairs_used=used,
    )
