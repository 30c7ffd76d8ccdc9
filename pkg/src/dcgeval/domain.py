"""Core data types for logged ranking interactions.

A logged dataset is a sequence of trajectories. Each trajectory records one
user session: the context it was served under, and the items the user actually
viewed, each with the display rank it occupied, the view probability the
logging system assigned to that rank, and the observed reward. Contexts and
actions are opaque string identifiers; the toolkit never inspects features.

Construction is deliberately permissive for the logged types: invariants over
field values are checked by validate_dataset (which reports violations as
data) and by read_dataset (which raises), not by the constructors, so that
defective datasets can be represented and audited.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import ConfigurationError, DatasetError

ActionId = str
ContextId = str

# Exact JSONL field layout for one trajectory line.
_TRAJ_KEYS = ("traj", "day", "context", "items")
_ITEM_KEYS = ("action", "rank", "logging_view_prob", "reward")


@dataclass(frozen=True)
class Catalog:
    """Ordered universe of recommendable actions.

    actions : tuple of unique ActionId, at least one entry.
    """

    actions: tuple[ActionId, ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        if len(self.actions) == 0:
            raise ConfigurationError("catalog must contain at least one action")
        if len(set(self.actions)) != len(self.actions):
            raise ConfigurationError("catalog actions must be unique")

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def __contains__(self, action):
        return action in self.actions


@dataclass(frozen=True)
class QualityModel:
    """True expected-reward table over (context, action) pairs.

    Values are nonnegative reals. Lookups for missing pairs are configuration
    errors: every pair a policy or simulator can reference must have an entry.
    """

    table: dict[tuple[ContextId, ActionId], float]

    def __post_init__(self):
        object.__setattr__(self, "table", dict(self.table))
        for key, value in self.table.items():
            if value < 0:
                raise ConfigurationError(f"quality for {key} is negative: {value}")

    def quality(self, context: ContextId, action: ActionId) -> float:
        try:
            return self.table[(context, action)]
        except KeyError:
            raise ConfigurationError(
                f"no quality entry for context {context!r}, action {action!r}"
            ) from None


@dataclass(frozen=True, slots=True)
class LoggedItem:
    """One viewed item within a session.

    log_rank is 1-based; logging_view_prob is the view probability the logging
    system assigned to that rank, in (0, 1]; reward is nonnegative.
    """

    action: ActionId
    log_rank: int
    logging_view_prob: float
    reward: float


@dataclass(frozen=True, slots=True)
class LoggedTrajectory:
    """One session: context plus viewed items in increasing rank order.

    A trajectory may be empty (a fully-abandoned session).
    """

    traj_id: str
    day: int
    context: ContextId
    items: tuple[LoggedItem, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True)
class LoggedDataset:
    """Ordered collection of trajectories with free-form string metadata."""

    trajectories: tuple[LoggedTrajectory, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self):
        return len(self.trajectories)


def _item_violations(traj: LoggedTrajectory) -> list[str]:
    out = []
    tid = traj.traj_id
    previous_rank = 0
    for item in traj.items:
        where = f"trajectory {tid!r} rank {item.log_rank}"
        if not isinstance(item.log_rank, int) or item.log_rank < 1:
            out.append(f"{where}: log_rank must be an integer >= 1")
        elif item.log_rank <= previous_rank:
            out.append(f"{where}: log_rank must be strictly increasing")
        if isinstance(item.log_rank, int):
            previous_rank = max(previous_rank, item.log_rank)
        if not 0.0 < item.logging_view_prob <= 1.0:
            out.append(f"{where}: logging_view_prob must be in (0, 1]")
        if item.reward < 0:
            out.append(f"{where}: reward must be nonnegative")
    return out


def validate_dataset(dataset: LoggedDataset, catalog: Catalog) -> list[str]:
    """Check all dataset invariants and return violation messages.

    Violations are data, not exceptions; an empty list means the dataset is
    valid. Each message names the trajectory (and rank, where applicable).
    """
    violations = []
    seen_ids = set()
    catalog_actions = set(catalog.actions)
    for traj in dataset.trajectories:
        if traj.traj_id in seen_ids:
            violations.append(f"trajectory {traj.traj_id!r}: duplicate traj_id")
        seen_ids.add(traj.traj_id)
        violations.extend(_item_violations(traj))
        for item in traj.items:
            if item.action not in catalog_actions:
                violations.append(
                    f"trajectory {traj.traj_id!r} rank {item.log_rank}: "
                    f"action {item.action!r} not in catalog"
                )
    return violations


def _require_keys(obj: dict, keys: tuple, line_no: int, what: str) -> None:
    if not isinstance(obj, dict) or set(obj) != set(keys):
        raise DatasetError(
            f"line {line_no}: {what} object must have exactly the keys {list(keys)}"
        )


def _check_type(value, types, line_no: int, name: str):
    # bool is an int subclass; never accept it for numeric fields
    if isinstance(value, bool) or not isinstance(value, types):
        raise DatasetError(f"line {line_no}: field {name!r} has wrong type")
    return value


def _parse_trajectory(obj: dict, line_no: int) -> LoggedTrajectory:
    _require_keys(obj, _TRAJ_KEYS, line_no, "trajectory")
    traj_id = _check_type(obj["traj"], str, line_no, "traj")
    day = _check_type(obj["day"], int, line_no, "day")
    context = _check_type(obj["context"], str, line_no, "context")
    raw_items = _check_type(obj["items"], list, line_no, "items")
    items = []
    for raw in raw_items:
        _require_keys(raw, _ITEM_KEYS, line_no, "item")
        items.append(
            LoggedItem(
                action=_check_type(raw["action"], str, line_no, "action"),
                log_rank=_check_type(raw["rank"], int, line_no, "rank"),
                logging_view_prob=float(
                    _check_type(raw["logging_view_prob"], (int, float), line_no, "logging_view_prob")
                ),
                reward=float(_check_type(raw["reward"], (int, float), line_no, "reward")),
            )
        )
    return LoggedTrajectory(traj_id=traj_id, day=day, context=context, items=tuple(items))


def read_dataset(path: str) -> LoggedDataset:
    """Read a JSONL dataset file.

    Malformed lines raise DatasetError with the 1-based line number; datasets
    violating trajectory invariants raise DatasetError naming the trajectory.
    """
    trajectories = []
    metadata: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {line_no}: invalid JSON: {exc.msg}") from None
            if line_no == 1 and isinstance(obj, dict) and set(obj) == {"metadata"}:
                header = obj["metadata"]
                if not isinstance(header, dict) or not all(
                    isinstance(k, str) and isinstance(v, str) for k, v in header.items()
                ):
                    raise DatasetError("line 1: metadata must map strings to strings")
                metadata = header
                continue
            trajectories.append(_parse_trajectory(obj, line_no))

    dataset = LoggedDataset(trajectories=tuple(trajectories), metadata=metadata)
    seen = set()
    for traj in dataset.trajectories:
        if traj.traj_id in seen:
            raise DatasetError(f"trajectory {traj.traj_id!r}: duplicate traj_id")
        seen.add(traj.traj_id)
        problems = _item_violations(traj)
        if problems:
            raise DatasetError(problems[0])
    return dataset


def _trajectory_line(traj: LoggedTrajectory) -> str:
    obj = {
        "traj": traj.traj_id,
        "day": traj.day,
        "context": traj.context,
        "items": [
            {
                "action": item.action,
                "rank": item.log_rank,
                "logging_view_prob": item.logging_view_prob,
                "reward": item.reward,
            }
            for item in traj.items
        ],
    }
    return json.dumps(obj, separators=(",", ":"))


def write_dataset(dataset: LoggedDataset, path: str) -> None:
    """Write a dataset as JSONL, one trajectory per line, atomically.

    A non-empty metadata map is written as a first line {"metadata": {...}};
    read_dataset recognizes and restores it, so write then read reproduces the
    dataset field-by-field.
    """
    tmp_path = f"{path}.tmp"
    with open(tmp_path, "w", encoding="utf-8") as fh:
        if dataset.metadata:
            fh.write(json.dumps({"metadata": dataset.metadata}, separators=(",", ":")) + "\n")
        for traj in dataset.trajectories:
            fh.write(_trajectory_line(traj) + "\n")
    os.replace(tmp_path, path)
