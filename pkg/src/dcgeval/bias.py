"""Position-bias models: probability that a rank is viewed at all.

A model maps a 1-based display rank to the probability that a user examines
that slot, independent of what is shown there. Every model has a hard display
cutoff: ranks beyond cutoff_n are never viewed. Three curve families cover
the usual user models:

- "logarithmic": 1 / log2(rank + 1), the classic graded-attention curve
  (rank 1 -> 1.0, rank 3 -> 0.5);
- "exponential": gamma ** (rank - 1) with decay gamma in (0, 1];
- "table": explicit per-rank probabilities values[rank - 1].

Construction is permissive; validate_model reports problems as data, and
view_prob raises ConfigurationError if asked to evaluate an unusable model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

KINDS = ("logarithmic", "exponential", "table")


@dataclass(frozen=True)
class PositionBiasModel:
    kind: str
    cutoff_n: int
    gamma: float | None = None  # exponential only
    values: tuple[float, ...] | None = None  # table only

    def __post_init__(self):
        if self.values is not None:
            object.__setattr__(self, "values", tuple(self.values))


def validate_model(model: PositionBiasModel) -> list[str]:
    """Return a list of problems with the model; empty means usable."""
    out = []
    if model.kind not in KINDS:
        out.append(f"unknown kind {model.kind!r}")
    if not isinstance(model.cutoff_n, int) or model.cutoff_n < 1:
        out.append("cutoff_n must be an integer >= 1")
    if model.kind == "exponential":
        if model.gamma is None:
            out.append("exponential model requires gamma")
        elif not 0.0 < model.gamma <= 1.0:
            out.append(f"gamma must be in (0, 1], got {model.gamma}")
    if model.kind == "table":
        if model.values is None:
            out.append("table model requires values")
        else:
            if isinstance(model.cutoff_n, int) and len(model.values) < model.cutoff_n:
                out.append(
                    f"table has {len(model.values)} values but cutoff_n is {model.cutoff_n}"
                )
            for i, v in enumerate(model.values):
                if not 0.0 <= v <= 1.0:
                    out.append(f"values[{i}] must be in [0, 1], got {v}")
    return out


def _require_valid(model: PositionBiasModel) -> None:
    problems = validate_model(model)
    if problems:
        raise ConfigurationError(f"invalid position-bias model: {problems[0]}")


def view_prob(model: PositionBiasModel, rank: int) -> float:
    """Probability that 1-based display rank is viewed; 0 beyond the cutoff."""
    if rank <= 0:
        raise ValueError(f"rank must be >= 1, got {rank}")
    _require_valid(model)
    if rank > model.cutoff_n:
        return 0.0
    if model.kind == "logarithmic":
        return 1.0 / math.log2(rank + 1)
    if model.kind == "exponential":
        return model.gamma ** (rank - 1)
    return float(model.values[rank - 1])


def view_prob_vector(model: PositionBiasModel, n_ranks: int) -> np.ndarray:
    """View probabilities for ranks 1..n_ranks as a float64 array."""
    return np.array([view_prob(model, r) for r in range(1, n_ranks + 1)], dtype=np.float64)
