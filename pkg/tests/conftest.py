"""Shared builders for small hand-checkable test instances."""

import pytest

from dcgeval.bias import PositionBiasModel
from dcgeval.domain import Catalog, LoggedDataset, LoggedItem, LoggedTrajectory, QualityModel
from dcgeval.policies import CandidateGenerator, RankingPolicy, ScoreTable


def make_item(action, rank, prob, reward):
    return LoggedItem(action=action, log_rank=rank, logging_view_prob=prob, reward=reward)


def make_traj(traj_id, context, items, day=0):
    return LoggedTrajectory(traj_id=traj_id, day=day, context=context, items=tuple(items))


def make_dataset(trajectories, metadata=None):
    return LoggedDataset(trajectories=tuple(trajectories), metadata=metadata or {})


def score_table(mapping):
    return ScoreTable(dict(mapping))


def det_ranker(mapping):
    return RankingPolicy(kind="deterministic_sort", scores=score_table(mapping))


def full_generator():
    return CandidateGenerator(kind="full_catalog")


@pytest.fixture
def catalog3():
    return Catalog(("a1", "a2", "a3"))


@pytest.fixture
def quality3():
    return QualityModel(
        {
            ("x1", "a1"): 0.2,
            ("x1", "a2"): 0.6,
            ("x1", "a3"): 0.1,
            ("x2", "a1"): 0.5,
            ("x2", "a2"): 0.1,
            ("x2", "a3"): 0.4,
        }
    )


@pytest.fixture
def pbm_half():
    """Exponential halving attention: ranks view with 1.0, 0.5, 0.25."""
    return PositionBiasModel(kind="exponential", cutoff_n=3, gamma=0.5)
