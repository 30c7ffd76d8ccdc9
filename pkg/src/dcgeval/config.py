"""Experiment configuration: TOML parsing and validation.

A single TOML file describes a complete experiment: the simulated
environment, the logging and target policies, position-bias models,
optional quality drift, the estimator variants to compute, and the
reward-signal battery for sensitivity runs.  `load_config` turns that
file into a fully validated `ExperimentConfig`; every referenced CSV
(quality tables, score tables) is resolved relative to the config file
and read eagerly so errors surface at load time.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .bias import KINDS as PBM_KINDS
from .bias import PositionBiasModel, validate_model
from .domain import Catalog, ContextId, QualityModel
from .errors import ConfigurationError
from .estimators import DEFAULT_M_GRID, EstimatorConfig
from .policies import (
    GENERATOR_KINDS,
    RANKER_KINDS,
    CandidateGenerator,
    RankingPolicy,
    ScoreTable,
    read_score_table,
)
from .simulator import REWARD_MODES, DriftSchedule, Environment

ONLINE_MODES = ("mc", "exact")

QUALITY_HEADER = ["context", "action", "quality"]


def read_quality_table(path: str) -> QualityModel:
    """Read a quality table from CSV with the exact header context,action,quality."""
    table: dict[tuple[ContextId, str], float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path}: empty quality table") from None
        if header != QUALITY_HEADER:
            raise ConfigurationError(
                f"{path}: expected header {','.join(QUALITY_HEADER)!r},"
                f" got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ConfigurationError(
                    f"{path}:{lineno}: expected 3 fields, got {len(row)}"
                )
            context, action, raw = row
            try:
                value = float(raw)
            except ValueError:
                raise ConfigurationError(
                    f"{path}:{lineno}: quality {raw!r} is not a number"
                ) from None
            key = (context, action)
            if key in table:
                raise ConfigurationError(
                    f"{path}:{lineno}: duplicate entry for context {context!r},"
                    f" action {action!r}"
                )
            table[key] = value
    if not table:
        raise ConfigurationError(f"{path}: quality table has no rows")
    return QualityModel(table)


@dataclass(frozen=True)
class EstimatorSpec:
    """A named estimator variant from one [[estimator]] table."""

    name: str
    config: EstimatorConfig


@dataclass(frozen=True)
class RewardSignal:
    """One reward signal for sensitivity runs: its own quality model and
    reward mechanism layered over the shared environment."""

    name: str
    quality: QualityModel
    reward_mode: str
    reward_noise_sigma: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated contents of one experiment TOML file."""

    seed: int
    days: int
    trajectories_per_day: int
    alpha: float
    m_grid: tuple[float, ...]
    catalog: Catalog
    contexts: tuple[ContextId, ...]
    context_probs: tuple[float, ...]
    quality: QualityModel
    reward_mode: str
    reward_noise_sigma: float
    logging_pbm: PositionBiasModel
    target_pbm: PositionBiasModel
    generator: CandidateGenerator
    target_generator: CandidateGenerator
    logging_ranker: RankingPolicy
    target_ranker: RankingPolicy
    drift: DriftSchedule | None
    online_mode: str
    online_trajectories: int | None
    estimators: tuple[EstimatorSpec, ...]
    sensitivity_n_per_arm: int | None
    reward_signals: tuple[RewardSignal, ...] = field(default=())

    def environment(self, signal: RewardSignal | None = None) -> Environment:
        """Build the simulation environment, optionally swapping in one
        reward signal's quality model and reward mechanism."""
        quality = self.quality if signal is None else signal.quality
        mode = self.reward_mode if signal is None else signal.reward_mode
        sigma = self.reward_noise_sigma if signal is None else signal.reward_noise_sigma
        return Environment(
            catalog=self.catalog,
            contexts=self.contexts,
            context_probs=self.context_probs,
            quality=quality,
            logging_pbm=self.logging_pbm,
            generator=self.generator,
            logging_ranker=self.logging_ranker,
            reward_mode=mode,
            reward_noise_sigma=sigma,
        )

    def drift_or_flat(self) -> DriftSchedule:
        """The configured drift schedule, or an identity schedule over all days."""
        if self.drift is not None:
            return self.drift
        return DriftSchedule(days=self.days, factors=(1.0,) * self.days)


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigurationError(f"{where}: missing required key {key!r}")
    return table[key]


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_str(value, where: str) -> str:
    if not isinstance(value, str):
        raise ConfigurationError(f"{where}: expected a string, got {value!r}")
    return value


def _as_table(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigurationError(f"{where}: expected a table")
    return value


def _check_unknown(table: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigurationError(f"{where}: unknown key {unknown[0]!r}")


def _parse_m_grid(raw, where: str) -> tuple[float, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigurationError(f"{where}: m_grid must be a non-empty array")
    grid: list[float] = []
    for i, entry in enumerate(raw):
        spot = f"{where}.m_grid[{i}]"
        if isinstance(entry, str):
            if entry != "inf":
                raise ConfigurationError(f'{spot}: only the string "inf" is allowed')
            value = math.inf
        else:
            value = _as_float(entry, spot)
        if not value >= 1.0:
            raise ConfigurationError(f"{spot}: clip thresholds must be >= 1")
        grid.append(value)
    for a, b in zip(grid, grid[1:]):
        if not b > a:
            raise ConfigurationError(f"{where}: m_grid must be strictly increasing")
    return tuple(grid)


def _parse_pbm(table: dict, where: str) -> PositionBiasModel:
    _check_unknown(table, ("kind", "cutoff", "gamma", "values"), where)
    kind = _as_str(_require(table, "kind", where), f"{where}.kind")
    if kind not in PBM_KINDS:
        raise ConfigurationError(f"{where}.kind: unknown kind {kind!r}")
    gamma = None
    values = None
    if "gamma" in table:
        gamma = _as_float(table["gamma"], f"{where}.gamma")
    if "values" in table:
        raw = table["values"]
        if not isinstance(raw, list):
            raise ConfigurationError(f"{where}.values: expected an array")
        values = tuple(
            _as_float(v, f"{where}.values[{i}]") for i, v in enumerate(raw)
        )
    if kind == "table" and "cutoff" not in table and values is not None:
        cutoff = len(values)
    else:
        cutoff = _as_int(_require(table, "cutoff", where), f"{where}.cutoff")
    model = PositionBiasModel(kind=kind, cutoff_n=cutoff, gamma=gamma, values=values)
    problems = validate_model(model)
    if problems:
        raise ConfigurationError(f"{where}: {problems[0]}")
    return model


def _parse_generator(
    table: dict, where: str, base_dir: str
) -> CandidateGenerator:
    _check_unknown(table, ("kind", "scores", "k"), where)
    kind = _as_str(_require(table, "kind", where), f"{where}.kind")
    if kind not in GENERATOR_KINDS:
        raise ConfigurationError(f"{where}.kind: unknown kind {kind!r}")
    scores: ScoreTable | None = None
    if "scores" in table:
        scores = read_score_table(
            _resolve(_as_str(table["scores"], f"{where}.scores"), base_dir)
        )
    k = None
    if "k" in table:
        k = _as_int(table["k"], f"{where}.k")
    return CandidateGenerator(kind=kind, scores=scores, k=k)


def _parse_ranker(table: dict, where: str, base_dir: str) -> RankingPolicy:
    _check_unknown(table, ("kind", "scores", "temperature"), where)
    kind = _as_str(_require(table, "kind", where), f"{where}.kind")
    if kind not in RANKER_KINDS:
        raise ConfigurationError(f"{where}.kind: unknown kind {kind!r}")
    scores = read_score_table(
        _resolve(_as_str(_require(table, "scores", where), f"{where}.scores"), base_dir)
    )
    temperature = 1.0
    if "temperature" in table:
        temperature = _as_float(table["temperature"], f"{where}.temperature")
    return RankingPolicy(kind=kind, scores=scores, temperature=temperature)


def _parse_estimator(
    table: dict, index: int, target_pbm: PositionBiasModel
) -> EstimatorSpec:
    where = f"[[estimator]] #{index + 1}"
    _check_unknown(
        table, ("name", "discount", "cutoff", "labels", "clip_m", "normalization"), where
    )
    name = _as_str(_require(table, "name", where), f"{where}.name")
    discount = _as_str(_require(table, "discount", where), f"{where}.discount")
    labels = "debiased"
    if "labels" in table:
        labels = _as_str(table["labels"], f"{where}.labels")
    clip_m = math.inf
    if "clip_m" in table:
        raw = table["clip_m"]
        if isinstance(raw, str):
            if raw != "inf":
                raise ConfigurationError(
                    f'{where}.clip_m: only the string "inf" is allowed'
                )
        else:
            clip_m = _as_float(raw, f"{where}.clip_m")
    normalization = "none"
    if "normalization" in table:
        normalization = _as_str(table["normalization"], f"{where}.normalization")
    log_cutoff = None
    if "cutoff" in table:
        log_cutoff = _as_int(table["cutoff"], f"{where}.cutoff")
    try:
        config = EstimatorConfig(
            discount_kind=discount,
            labels=labels,
            clip_m=clip_m,
            normalization=normalization,
            log_cutoff=log_cutoff,
            pbm=target_pbm if discount == "pbm" else None,
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None
    return EstimatorSpec(name=name, config=config)


def _parse_signal(
    table: dict, index: int, base_dir: str, default_mode: str, default_sigma: float
) -> RewardSignal:
    where = f"[[sensitivity.signal]] #{index + 1}"
    _check_unknown(
        table, ("name", "quality", "reward_mode", "reward_noise_sigma"), where
    )
    name = _as_str(_require(table, "name", where), f"{where}.name")
    quality = read_quality_table(
        _resolve(_as_str(_require(table, "quality", where), f"{where}.quality"), base_dir)
    )
    mode = default_mode
    if "reward_mode" in table:
        mode = _as_str(table["reward_mode"], f"{where}.reward_mode")
        if mode not in REWARD_MODES:
            raise ConfigurationError(f"{where}.reward_mode: unknown mode {mode!r}")
    sigma = default_sigma
    if "reward_noise_sigma" in table:
        sigma = _as_float(table["reward_noise_sigma"], f"{where}.reward_noise_sigma")
    return RewardSignal(
        name=name, quality=quality, reward_mode=mode, reward_noise_sigma=sigma
    )


def _resolve(path: str, base_dir: str) -> str:
    if os.path.isabs(path):
        return path
    return os.path.join(base_dir, path)


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an experiment TOML file.

    File references inside the config (score tables, quality tables) are
    resolved relative to the config file's directory.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML: {exc}") from None
    base_dir = os.path.dirname(os.path.abspath(path))

    _check_unknown(
        raw,
        (
            "experiment",
            "environment",
            "logging_pbm",
            "target_pbm",
            "generator",
            "target_generator",
            "logging_ranker",
            "target_ranker",
            "drift",
            "online",
            "estimator",
            "sensitivity",
        ),
        path,
    )

    exp = _as_table(_require(raw, "experiment", path), "[experiment]")
    _check_unknown(
        exp,
        ("seed", "days", "trajectories_per_day", "alpha", "m_grid"),
        "[experiment]",
    )
    seed = _as_int(_require(exp, "seed", "[experiment]"), "[experiment].seed")
    if seed < 0:
        raise ConfigurationError("[experiment].seed: must be >= 0")
    days = _as_int(_require(exp, "days", "[experiment]"), "[experiment].days")
    if days < 1:
        raise ConfigurationError("[experiment].days: must be >= 1")
    n_per_day = _as_int(
        _require(exp, "trajectories_per_day", "[experiment]"),
        "[experiment].trajectories_per_day",
    )
    if n_per_day < 0:
        raise ConfigurationError("[experiment].trajectories_per_day: must be >= 0")
    alpha = 0.05
    if "alpha" in exp:
        alpha = _as_float(exp["alpha"], "[experiment].alpha")
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("[experiment].alpha: must be in (0, 1)")
    m_grid = DEFAULT_M_GRID
    if "m_grid" in exp:
        m_grid = _parse_m_grid(exp["m_grid"], "[experiment]")

    env = _as_table(_require(raw, "environment", path), "[environment]")
    _check_unknown(
        env,
        (
            "actions",
            "contexts",
            "context_probs",
            "quality",
            "reward_mode",
            "reward_noise_sigma",
        ),
        "[environment]",
    )
    actions_raw = _require(env, "actions", "[environment]")
    if not isinstance(actions_raw, list) or not actions_raw:
        raise ConfigurationError("[environment].actions: expected a non-empty array")
    actions = tuple(
        _as_str(a, f"[environment].actions[{i}]") for i, a in enumerate(actions_raw)
    )
    catalog = Catalog(actions)
    contexts_raw = _require(env, "contexts", "[environment]")
    if not isinstance(contexts_raw, list) or not contexts_raw:
        raise ConfigurationError("[environment].contexts: expected a non-empty array")
    contexts = tuple(
        _as_str(c, f"[environment].contexts[{i}]") for i, c in enumerate(contexts_raw)
    )
    if "context_probs" in env:
        probs_raw = env["context_probs"]
        if not isinstance(probs_raw, list):
            raise ConfigurationError("[environment].context_probs: expected an array")
        context_probs = tuple(
            _as_float(p, f"[environment].context_probs[{i}]")
            for i, p in enumerate(probs_raw)
        )
    else:
        context_probs = (1.0 / len(contexts),) * len(contexts)
    quality = read_quality_table(
        _resolve(
            _as_str(_require(env, "quality", "[environment]"), "[environment].quality"),
            base_dir,
        )
    )
    reward_mode = "binary"
    if "reward_mode" in env:
        reward_mode = _as_str(env["reward_mode"], "[environment].reward_mode")
        if reward_mode not in REWARD_MODES:
            raise ConfigurationError(
                f"[environment].reward_mode: unknown mode {reward_mode!r}"
            )
    reward_noise_sigma = 0.25
    if "reward_noise_sigma" in env:
        reward_noise_sigma = _as_float(
            env["reward_noise_sigma"], "[environment].reward_noise_sigma"
        )

    logging_pbm = _parse_pbm(
        _as_table(_require(raw, "logging_pbm", path), "[logging_pbm]"), "[logging_pbm]"
    )
    target_pbm = logging_pbm
    if "target_pbm" in raw:
        target_pbm = _parse_pbm(_as_table(raw["target_pbm"], "[target_pbm]"), "[target_pbm]")

    generator = _parse_generator(
        _as_table(_require(raw, "generator", path), "[generator]"), "[generator]", base_dir
    )
    target_generator = generator
    if "target_generator" in raw:
        target_generator = _parse_generator(
            _as_table(raw["target_generator"], "[target_generator]"),
            "[target_generator]",
            base_dir,
        )

    logging_ranker = _parse_ranker(
        _as_table(_require(raw, "logging_ranker", path), "[logging_ranker]"),
        "[logging_ranker]",
        base_dir,
    )
    target_ranker = _parse_ranker(
        _as_table(_require(raw, "target_ranker", path), "[target_ranker]"),
        "[target_ranker]",
        base_dir,
    )

    drift = None
    if "drift" in raw:
        dtab = _as_table(raw["drift"], "[drift]")
        _check_unknown(dtab, ("factors", "noise_amplitude"), "[drift]")
        factors_raw = _require(dtab, "factors", "[drift]")
        if not isinstance(factors_raw, list):
            raise ConfigurationError("[drift].factors: expected an array")
        factors = tuple(
            _as_float(f, f"[drift].factors[{i}]") for i, f in enumerate(factors_raw)
        )
        if len(factors) != days:
            raise ConfigurationError(
                f"[drift].factors: expected {days} entries (one per day),"
                f" got {len(factors)}"
            )
        noise_amplitude = 0.0
        if "noise_amplitude" in dtab:
            noise_amplitude = _as_float(
                dtab["noise_amplitude"], "[drift].noise_amplitude"
            )
        try:
            drift = DriftSchedule(
                days=days, factors=factors, noise_amplitude=noise_amplitude
            )
        except ConfigurationError as exc:
            raise ConfigurationError(f"[drift]: {exc}") from None

    online_mode = "mc"
    online_trajectories = None
    if "online" in raw:
        otab = _as_table(raw["online"], "[online]")
        _check_unknown(otab, ("mode", "trajectories"), "[online]")
        if "mode" in otab:
            online_mode = _as_str(otab["mode"], "[online].mode")
            if online_mode not in ONLINE_MODES:
                raise ConfigurationError(f"[online].mode: unknown mode {online_mode!r}")
        if "trajectories" in otab:
            online_trajectories = _as_int(
                otab["trajectories"], "[online].trajectories"
            )
            if online_trajectories < 1:
                raise ConfigurationError("[online].trajectories: must be >= 1")

    estimators: list[EstimatorSpec] = []
    if "estimator" in raw:
        etabs = raw["estimator"]
        if not isinstance(etabs, list):
            raise ConfigurationError("[[estimator]]: expected an array of tables")
        for i, etab in enumerate(etabs):
            estimators.append(
                _parse_estimator(_as_table(etab, f"[[estimator]] #{i + 1}"), i, target_pbm)
            )
    names = [spec.name for spec in estimators]
    if len(set(names)) != len(names):
        raise ConfigurationError("[[estimator]]: names must be unique")

    sensitivity_n_per_arm = None
    signals: list[RewardSignal] = []
    if "sensitivity" in raw:
        stab = _as_table(raw["sensitivity"], "[sensitivity]")
        _check_unknown(stab, ("n_per_arm", "signal"), "[sensitivity]")
        sensitivity_n_per_arm = _as_int(
            _require(stab, "n_per_arm", "[sensitivity]"), "[sensitivity].n_per_arm"
        )
        if sensitivity_n_per_arm < 2:
            raise ConfigurationError("[sensitivity].n_per_arm: must be >= 2")
        if "signal" in stab:
            sigtabs = stab["signal"]
            if not isinstance(sigtabs, list):
                raise ConfigurationError(
                    "[[sensitivity.signal]]: expected an array of tables"
                )
            for i, sigtab in enumerate(sigtabs):
                signals.append(
                    _parse_signal(
                        _as_table(sigtab, f"[[sensitivity.signal]] #{i + 1}"),
                        i,
                        base_dir,
                        reward_mode,
                        reward_noise_sigma,
                    )
                )
        sig_names = [s.name for s in signals]
        if len(set(sig_names)) != len(sig_names):
            raise ConfigurationError("[[sensitivity.signal]]: names must be unique")

    config = ExperimentConfig(
        seed=seed,
        days=days,
        trajectories_per_day=n_per_day,
        alpha=alpha,
        m_grid=m_grid,
        catalog=catalog,
        contexts=contexts,
        context_probs=context_probs,
        quality=quality,
        reward_mode=reward_mode,
        reward_noise_sigma=reward_noise_sigma,
        logging_pbm=logging_pbm,
        target_pbm=target_pbm,
        generator=generator,
        target_generator=target_generator,
        logging_ranker=logging_ranker,
        target_ranker=target_ranker,
        drift=drift,
        online_mode=online_mode,
        online_trajectories=online_trajectories,
        estimators=tuple(estimators),
        sensitivity_n_per_arm=sensitivity_n_per_arm,
        reward_signals=tuple(signals),
    )
    # Fail fast on inconsistent environments (quality completeness, probs, ...).
    config.environment()
    for signal in config.reward_signals:
        config.environment(signal)
    return config
