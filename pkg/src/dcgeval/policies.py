"""Candidate generators and ranking policies.

A policy pipeline has two stages: a candidate generator picks the subset of
the catalog eligible for display, and a ranking policy orders that subset.
Both stages are driven by per-(context, action) score tables; stochastic
variants exist for both stages. Deterministic sorting breaks score ties by
ascending action id so every ranking is reproducible.

The functions here implement exact per-call semantics on one context at a
time, including exact enumeration of small ranking/candidate distributions.
The simulator contains an equivalent vectorized path for bulk generation;
tests pin the two paths to each other.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

from .domain import ActionId, Catalog, ContextId
from .errors import ConfigurationError, EnumerationBoundError, UnsupportedPolicyError

GENERATOR_KINDS = ("full_catalog", "top_k_by_score", "uniform_k_subset")
RANKER_KINDS = ("deterministic_sort", "plackett_luce")

# Exact distribution ops refuse instances larger than this unless overridden.
ENUMERATION_BOUND = 6


@dataclass(frozen=True)
class ScoreTable:
    """Dense (context, action) -> score map; missing entries are config errors."""

    table: dict[tuple[ContextId, ActionId], float]

    def __post_init__(self):
        object.__setattr__(self, "table", dict(self.table))

    def score(self, context: ContextId, action: ActionId) -> float:
        try:
            return self.table[(context, action)]
        except KeyError:
            raise ConfigurationError(
                f"no score entry for context {context!r}, action {action!r}"
            ) from None


@dataclass(frozen=True)
class CandidateGenerator:
    kind: str
    scores: ScoreTable | None = None  # top_k_by_score only
    k: int | None = None  # top_k_by_score and uniform_k_subset

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ConfigurationError(f"unknown generator kind {self.kind!r}")
        if self.kind == "top_k_by_score" and (self.scores is None or self.k is None):
            raise ConfigurationError("top_k_by_score requires scores and k")
        if self.kind == "uniform_k_subset" and self.k is None:
            raise ConfigurationError("uniform_k_subset requires k")
        if self.k is not None and self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")

    @property
    def is_deterministic(self) -> bool:
        return self.kind != "uniform_k_subset"


@dataclass(frozen=True)
class RankingPolicy:
    kind: str
    scores: ScoreTable
    temperature: float = 1.0  # plackett_luce only

    def __post_init__(self):
        if self.kind not in RANKER_KINDS:
            raise ConfigurationError(f"unknown ranker kind {self.kind!r}")
        if self.kind == "plackett_luce" and not self.temperature > 0:
            raise ConfigurationError(f"temperature must be > 0, got {self.temperature}")

    @property
    def is_deterministic(self) -> bool:
        return self.kind == "deterministic_sort"


def _check_k(k: int, catalog: Catalog) -> None:
    if k > len(catalog):
        raise ConfigurationError(f"k={k} exceeds catalog size {len(catalog)}")


def _sorted_by_score(scores: ScoreTable, context: ContextId, actions) -> list[ActionId]:
    # descending score, ties broken by ascending action id
    return sorted(actions, key=lambda a: (-scores.score(context, a), a))


def candidates(
    generator: CandidateGenerator, context: ContextId, catalog: Catalog, rng=None
) -> tuple[ActionId, ...]:
    """Draw (or compute) the candidate set for one context.

    Deterministic kinds ignore rng; uniform_k_subset requires it. The result
    is canonically ordered (catalog order) since it denotes a set.
    """
    if generator.kind == "full_catalog":
        return tuple(catalog.actions)
    if generator.kind == "top_k_by_score":
        _check_k(generator.k, catalog)
        top = _sorted_by_score(generator.scores, context, catalog.actions)[: generator.k]
        chosen = set(top)
        return tuple(a for a in catalog.actions if a in chosen)
    _check_k(generator.k, catalog)
    if rng is None:
        raise ValueError("uniform_k_subset requires an rng stream")
    idx = rng.choice(len(catalog), size=generator.k, replace=False)
    chosen = {catalog.actions[i] for i in idx}
    return tuple(a for a in catalog.actions if a in chosen)


def _pl_weights(policy: RankingPolicy, context: ContextId, actions) -> list[float]:
    raw = [policy.scores.score(context, a) / policy.temperature for a in actions]
    top = max(raw)
    return [math.exp(s - top) for s in raw]


def rank(
    policy: RankingPolicy, context: ContextId, candidate_set, rng=None
) -> tuple[ActionId, ...]:
    """Order a candidate set under the policy.

    deterministic_sort ranks by descending score with ties broken by ascending
    action id and ignores rng. plackett_luce samples sequentially without
    replacement with selection probabilities proportional to
    exp(score / temperature) over the remaining items, consuming rng.
    """
    candidate_set = list(candidate_set)
    if len(candidate_set) == 0:
        return ()
    if policy.kind == "deterministic_sort":
        return tuple(_sorted_by_score(policy.scores, context, candidate_set))
    if rng is None:
        raise ValueError("plackett_luce requires an rng stream")
    remaining = sorted(candidate_set)
    ordered = []
    while remaining:
        weights = _pl_weights(policy, context, remaining)
        total = sum(weights)
        u = rng.random() * total
        acc = 0.0
        pick = len(remaining) - 1
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                pick = i
                break
        ordered.append(remaining.pop(pick))
    return tuple(ordered)


def rank_of(
    policy: RankingPolicy, context: ContextId, candidate_set, action: ActionId
) -> int:
    """1-based rank of action under a deterministic policy.

    Stochastic policies have no single rank; use ranking_distribution instead.
    """
    if not policy.is_deterministic:
        raise UnsupportedPolicyError(
            "rank_of is undefined for stochastic policies; use ranking_distribution"
        )
    ranking = rank(policy, context, candidate_set)
    try:
        return ranking.index(action) + 1
    except ValueError:
        raise ValueError(f"action {action!r} not in candidate set") from None


def ranking_distribution(
    policy: RankingPolicy, context: ContextId, candidate_set, bound: int = ENUMERATION_BOUND
) -> dict[tuple[ActionId, ...], float]:
    """Exact probability of every permutation of the candidate set.

    Deterministic policies yield a point mass of any size; stochastic ones
    refuse candidate sets larger than bound (factorial blowup). Probabilities
    sum to 1 within 1e-12.
    """
    candidate_set = list(candidate_set)
    if policy.kind == "deterministic_sort":
        return {rank(policy, context, candidate_set): 1.0}
    if len(candidate_set) > bound:
        raise EnumerationBoundError(
            f"candidate set size {len(candidate_set)} exceeds enumeration bound {bound}"
        )
    base = sorted(candidate_set)
    weight = dict(zip(base, _pl_weights(policy, context, base)))
    out = {}
    for perm in itertools.permutations(base):
        remaining_total = sum(weight.values())
        p = 1.0
        for a in perm:
            p *= weight[a] / remaining_total
            remaining_total -= weight[a]
        out[perm] = p
    return out


def candidate_distribution(
    generator: CandidateGenerator, context: ContextId, catalog: Catalog,
    bound: int = ENUMERATION_BOUND,
) -> dict[tuple[ActionId, ...], float]:
    """Exact probability of every candidate set the generator can produce."""
    if generator.kind in ("full_catalog", "top_k_by_score"):
        return {candidates(generator, context, catalog): 1.0}
    _check_k(generator.k, catalog)
    if len(catalog) > bound:
        raise EnumerationBoundError(
            f"catalog size {len(catalog)} exceeds enumeration bound {bound}"
        )
    subsets = list(itertools.combinations(catalog.actions, generator.k))
    p = 1.0 / len(subsets)
    return {s: p for s in subsets}


def read_score_table(path: str) -> ScoreTable:
    """Read a score table from CSV with the exact header context,action,score."""
    table = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path}: empty score table") from None
        if header != ["context", "action", "score"]:
            raise ConfigurationError(
                f"{path}: header must be context,action,score, got {','.join(header)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise ConfigurationError(f"{path}:{line_no}: expected 3 fields")
            context, action, raw = row
            try:
                score = float(raw)
            except ValueError:
                raise ConfigurationError(
                    f"{path}:{line_no}: score {raw!r} is not a number"
                ) from None
            if (context, action) in table:
                raise ConfigurationError(
                    f"{path}:{line_no}: duplicate entry for ({context}, {action})"
                )
            table[(context, action)] = score
    return ScoreTable(table)
