"""Command-line interface.

Every subcommand reads an experiment TOML file (where one is needed),
runs entirely from the given seed, and writes its results as CSV/JSONL
files into the --out directory.  Outputs are byte-deterministic: the
same config and seed always produce identical files, floats are written
with repr() round-tripping, and files are written atomically (temp file
plus rename) so interrupted runs never leave partial results behind.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

from . import __version__
from .config import ExperimentConfig, RewardSignal, load_config
from .consistency import (
    disagreement_report,
    read_metric_table,
    reproduce_table1,
    run_single_sample_trials,
    search_counterexample,
    verify_counterexample,
)
from .domain import read_dataset, validate_dataset, write_dataset
from .errors import ConfigurationError, DatasetError, DcgEvalError, UndefinedStatisticError
from .estimators import (
    ESTIMATE_HEADER,
    EstimatorConfig,
    estimate_csv_row,
    evaluate,
    evaluate_m_grid,
    format_clip_m,
)
from .kernels import BACKEND
from .simulator import (
    drifted_quality,
    monte_carlo_policy_value,
    simulate_dataset,
    simulate_experiment_series,
    true_policy_value,
)
from .stats import (
    COMPARISON_HEADER,
    compare_means,
    comparison_csv_row,
    pearson_p_two_tailed,
    pearson_r,
    sensitivity_summary,
)

ONLINE_HEADER = "day,online_value,online_std_err"
VALUE_HEADER = "policy,true_value,mc_value,mc_std_err"
CORRELATION_HEADER = "variant,r,p"
DAY_SERIES_HEADER = "day,variant,offline_mean,online_value,online_std_err"
SENSITIVITY_HEADER = "metric,m,tpr,sign_agreement,mean_p"
DISAGREEMENT_HEADER = "n_models,pearson,kendall,inversion_rate,n_pairs_used"
LEMMA_HEADER = "n_trials,n_consistent,n_skipped,n_failures"
TABLE1_HEADER = "context,policy,dcg,ndcg"

# Seed-namespace tag for sensitivity arm datasets, kept distinct from the
# tags the simulator appends for datasets / online rollouts / drift.
_TAG_SENSITIVITY = 3


def _write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header: str, rows) -> None:
    _write_text(path, "\n".join([header, *rows]) + "\n")


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _load(args) -> tuple[ExperimentConfig, int]:
    if args.config is None:
        raise ConfigurationError("this command requires --config")
    cfg = load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    return cfg, seed


def cmd_simulate(args) -> int:
    cfg, seed = _load(args)
    env = cfg.environment()
    if cfg.trajectories_per_day == 0:
        print("warning: trajectories_per_day is 0; datasets will be empty", file=sys.stderr)
    series = simulate_experiment_series(
        env,
        cfg.target_ranker,
        cfg.target_generator,
        cfg.target_pbm,
        cfg.drift_or_flat(),
        cfg.trajectories_per_day,
        seed,
        online_mode=cfg.online_mode,
        n_online=cfg.online_trajectories,
    )
    rows = []
    for result in series:
        name = f"dataset_day{result.day:02d}.jsonl"
        write_dataset(result.dataset, _out_path(args, name))
        rows.append(
            f"{result.day},{result.online_value!r},{result.online_std_err!r}"
        )
        print(
            f"day {result.day}: {len(result.dataset)} trajectories,"
            f" online value {result.online_value:.6g}"
            f" (std err {result.online_std_err:.3g}) -> {name}"
        )
    _write_csv(_out_path(args, "online.csv"), ONLINE_HEADER, rows)
    print(f"wrote {len(series)} datasets and online.csv to {args.out} [{BACKEND} backend]")
    return 0


def cmd_value(args) -> int:
    cfg, seed = _load(args)
    env = cfg.environment()
    n_mc = cfg.online_trajectories or cfg.trajectories_per_day
    if n_mc < 1:
        raise ConfigurationError(
            "policy values need sessions to roll out; set [online].trajectories"
            " or trajectories_per_day to at least 1"
        )
    arms = [
        ("logging", cfg.logging_ranker, cfg.generator, cfg.logging_pbm, 0),
        ("target", cfg.target_ranker, cfg.target_generator, cfg.target_pbm, 1),
    ]
    rows = []
    for name, ranker, generator, pbm, tag in arms:
        true_v = true_policy_value(env, ranker, generator, pbm)
        mc_v, mc_se = monte_carlo_policy_value(env, ranker, generator, pbm, n_mc, [seed, tag])
        rows.append(f"{name},{true_v!r},{mc_v!r},{mc_se!r}")
        print(
            f"{name}: exact value {true_v:.6g},"
            f" monte-carlo {mc_v:.6g} +/- {mc_se:.3g} ({n_mc} sessions)"
        )
    _write_csv(_out_path(args, "value.csv"), VALUE_HEADER, rows)
    return 0


def cmd_estimate(args) -> int:
    cfg, _ = _load(args)
    if not cfg.estimators:
        raise ConfigurationError("config defines no [[estimator]] tables")
    dataset = read_dataset(args.dataset)
    problems = validate_dataset(dataset, cfg.catalog)
    if problems:
        raise DatasetError(f"{args.dataset}: {problems[0]}")
    rows = []
    for spec in cfg.estimators:
        report = evaluate(
            dataset, cfg.target_ranker, cfg.target_generator, spec.config, cfg.catalog
        )
        rows.append(estimate_csv_row(spec.name, spec.config, report))
        print(
            f"{spec.name}: mean {report.mean:.6g}, std {report.std:.6g},"
            f" n {report.n_trajectories}, skipped {report.skipped}"
        )
    _write_csv(_out_path(args, "estimates.csv"), ESTIMATE_HEADER, rows)
    return 0


def cmd_correlate(args) -> int:
    cfg, seed = _load(args)
    if not cfg.estimators:
        raise ConfigurationError("config defines no [[estimator]] tables")
    if cfg.days < 3:
        raise ConfigurationError(
            f"correlation over days needs at least 3 days, config has {cfg.days}"
        )
    env = cfg.environment()
    series = simulate_experiment_series(
        env,
        cfg.target_ranker,
        cfg.target_generator,
        cfg.target_pbm,
        cfg.drift_or_flat(),
        cfg.trajectories_per_day,
        seed,
        online_mode=cfg.online_mode,
        n_online=cfg.online_trajectories,
    )
    online = [r.online_value for r in series]
    if not all(math.isfinite(v) for v in online):
        raise ConfigurationError(
            "online series contains undefined values; correlation needs online"
            " ground truth (set [online].trajectories or use exact mode)"
        )
    offline: dict[str, list[float]] = {}
    for spec in cfg.estimators:
        offline[spec.name] = [
            evaluate(
                r.dataset, cfg.target_ranker, cfg.target_generator, spec.config, cfg.catalog
            ).mean
            for r in series
        ]
    correlation_rows = []
    for spec in cfg.estimators:
        try:
            r = pearson_r(offline[spec.name], online)
            p = pearson_p_two_tailed(r, len(online))
            correlation_rows.append(f"{spec.name},{r!r},{p!r}")
            print(f"{spec.name}: r {r:.6g}, two-tailed p {p:.6g} over {len(online)} days")
        except UndefinedStatisticError as exc:
            correlation_rows.append(f"{spec.name},NA,NA")
            print(f"{spec.name}: correlation undefined ({exc})")
    day_rows = []
    for i, result in enumerate(series):
        for spec in cfg.estimators:
            day_rows.append(
                f"{result.day},{spec.name},{offline[spec.name][i]!r},"
                f"{result.online_value!r},{result.online_std_err!r}"
            )
    _write_csv(_out_path(args, "correlation.csv"), CORRELATION_HEADER, correlation_rows)
    _write_csv(_out_path(args, "day_series.csv"), DAY_SERIES_HEADER, day_rows)
    return 0


def _sensitivity_signals(cfg: ExperimentConfig) -> tuple[RewardSignal, ...]:
    if cfg.reward_signals:
        return cfg.reward_signals
    return (
        RewardSignal(
            name="base",
            quality=cfg.quality,
            reward_mode=cfg.reward_mode,
            reward_noise_sigma=cfg.reward_noise_sigma,
        ),
    )


def cmd_sensitivity(args) -> int:
    cfg, seed = _load(args)
    if cfg.sensitivity_n_per_arm is None:
        raise ConfigurationError("config has no [sensitivity] table")
    n_per_arm = cfg.sensitivity_n_per_arm
    signals = _sensitivity_signals(cfg)

    # Refuse unless every signal is a verified true positive: the target
    # policy must beat the logging policy in exact expectation, otherwise
    # the detection-rate summary below would be meaningless.
    for signal in signals:
        env_s = cfg.environment(signal)
        v_log = true_policy_value(env_s, cfg.logging_ranker, cfg.generator, cfg.logging_pbm)
        v_tgt = true_policy_value(
            env_s, cfg.target_ranker, cfg.target_generator, cfg.target_pbm
        )
        if not v_tgt > v_log:
            raise ConfigurationError(
                f"signal {signal.name!r}: target policy does not beat the logging"
                f" policy in exact expectation ({v_tgt!r} <= {v_log!r});"
                " detection rates would be meaningless"
            )
        print(
            f"signal {signal.name}: exact logging value {v_log:.6g},"
            f" target value {v_tgt:.6g} (true positive)"
        )

    norms = {"dcg": "none", "ndcg": "per_trajectory"}
    config_a = {
        metric: EstimatorConfig(
            discount_kind="pbm", labels="debiased", normalization=norm, pbm=cfg.logging_pbm
        )
        for metric, norm in norms.items()
    }
    config_b = {
        metric: EstimatorConfig(
            discount_kind="pbm", labels="debiased", normalization=norm, pbm=cfg.target_pbm
        )
        for metric, norm in norms.items()
    }

    results: dict[tuple[str, float], list] = {
        (metric, m): [] for metric in norms for m in cfg.m_grid
    }
    comparison_rows = []
    for day in range(cfg.days):
        for sig_idx, signal in enumerate(signals):
            env_s = cfg.environment(signal)
            if cfg.drift is not None:
                env_s = replace(env_s, quality=drifted_quality(env_s, cfg.drift, day, seed))
            ds_a = simulate_dataset(env_s, n_per_arm, day, [seed, _TAG_SENSITIVITY, sig_idx, 0])
            ds_b = simulate_dataset(env_s, n_per_arm, day, [seed, _TAG_SENSITIVITY, sig_idx, 1])
            for metric in norms:
                reports_a = evaluate_m_grid(
                    ds_a,
                    cfg.logging_ranker,
                    cfg.generator,
                    config_a[metric],
                    cfg.catalog,
                    m_grid=cfg.m_grid,
                )
                reports_b = evaluate_m_grid(
                    ds_b,
                    cfg.target_ranker,
                    cfg.target_generator,
                    config_b[metric],
                    cfg.catalog,
                    m_grid=cfg.m_grid,
                )
                for m in cfg.m_grid:
                    label = f"{signal.name}_day{day}_{metric}_m{format_clip_m(m)}"
                    result = compare_means(
                        reports_a[m].per_trajectory_values,
                        reports_b[m].per_trajectory_values,
                        cfg.alpha,
                        label=label,
                    )
                    results[(metric, m)].append(result)
                    comparison_rows.append(comparison_csv_row(result))

    summary_rows = []
    for metric in norms:
        for m in cfg.m_grid:
            summary = sensitivity_summary(results[(metric, m)], all_true_positive=True)
            summary_rows.append(
                f"{metric},{format_clip_m(m)},{summary.tpr!r},"
                f"{summary.sign_agreement!r},{summary.mean_p!r}"
            )
            print(
                f"{metric} m={format_clip_m(m)}: tpr {summary.tpr:.3f},"
                f" sign agreement {summary.sign_agreement:.3f},"
                f" mean one-sided p {summary.mean_p:.4g}"
                f" over {summary.n_comparisons} comparisons"
            )
    _write_csv(_out_path(args, "comparisons.csv"), COMPARISON_HEADER, comparison_rows)
    _write_csv(_out_path(args, "sensitivity.csv"), SENSITIVITY_HEADER, summary_rows)
    return 0


def cmd_counterexample(args) -> int:
    table1 = reproduce_table1()
    table1_rows = []
    print("pinned two-context instance (per-sample, then means):")
    for policy in table1.policies:
        for context in table1.contexts:
            dcg = table1.per_sample_dcg[(context, policy)]
            ndcg = table1.per_sample_ndcg[(context, policy)]
            table1_rows.append(f"{context},{policy},{dcg!r},{ndcg!r}")
        dcg_mean = table1.dcg_means[policy]
        ndcg_mean = table1.ndcg_means[policy]
        table1_rows.append(f"mean,{policy},{dcg_mean!r},{ndcg_mean!r}")
        print(f"  {policy}: mean DCG {dcg_mean:.2f}, mean normalized DCG {ndcg_mean:.2f}")
    print(f"  per-sample orderings consistent: {table1.per_sample_consistent}")
    print(f"  aggregate orderings inverted:    {table1.aggregates_inverted}")
    _write_csv(_out_path(args, "table1.csv"), TABLE1_HEADER, table1_rows)

    ce = search_counterexample(
        max_contexts=args.max_contexts, max_actions=args.max_actions
    )
    rows = []
    if ce is None:
        rows.append("found,false")
        print(
            f"no aggregate inversion exists within {args.max_contexts} contexts"
            f" x {args.max_actions} actions on the binary quality grid"
        )
    else:
        verified = verify_counterexample(ce)
        rows.append("found,true")
        rows.append(f"n_contexts,{len(ce.contexts)}")
        rows.append(f"n_actions,{len(ce.actions)}")
        rows.append(f"contexts,{'|'.join(ce.contexts)}")
        rows.append(f"actions,{'|'.join(ce.actions)}")
        rows.append(f"ranking_a,{'|'.join(ce.ranking_a)}")
        rows.append(f"ranking_b,{'|'.join(ce.ranking_b)}")
        rows.append(f"log_cutoff,{ce.log_cutoff}")
        for context in ce.contexts:
            for action in ce.actions:
                rows.append(f"quality.{context}.{action},{ce.quality[(context, action)]!r}")
        rows.append(f"dcg_mean_a,{ce.dcg_mean_a!r}")
        rows.append(f"dcg_mean_b,{ce.dcg_mean_b!r}")
        rows.append(f"ndcg_mean_a,{ce.ndcg_mean_a!r}")
        rows.append(f"ndcg_mean_b,{ce.ndcg_mean_b!r}")
        rows.append(f"verified,{'true' if verified else 'false'}")
        print(
            f"smallest aggregate inversion found: {len(ce.contexts)} contexts,"
            f" {len(ce.actions)} actions"
        )
        print(f"  ranking_a {ce.ranking_a} vs ranking_b {ce.ranking_b}")
        print(
            f"  mean DCG {ce.dcg_mean_a:.4f} vs {ce.dcg_mean_b:.4f};"
            f" mean nDCG {ce.ndcg_mean_a:.4f} vs {ce.ndcg_mean_b:.4f}"
        )
        print(f"  independently verified: {verified}")
    _write_csv(_out_path(args, "counterexample.csv"), "key,value", rows)
    return 0


def cmd_lemma_check(args) -> int:
    report = run_single_sample_trials(args.trials, args.seed if args.seed is not None else 0)
    failures = report.n_trials - report.n_consistent - report.n_skipped
    _write_csv(
        _out_path(args, "lemma.csv"),
        LEMMA_HEADER,
        [f"{report.n_trials},{report.n_consistent},{report.n_skipped},{failures}"],
    )
    checked = report.n_trials - report.n_skipped
    print(
        f"single-sample ordering agreement: {report.n_consistent}/{checked} consistent"
        f" ({report.n_skipped} zero-ideal samples skipped, {failures} failures)"
    )
    return 1 if failures else 0


def cmd_disagree(args) -> int:
    model_ids, dcg, ndcg = read_metric_table(args.table)
    report = disagreement_report(dcg, ndcg)
    row = (
        f"{report.n_models},{report.pearson!r},{report.kendall!r},"
        f"{report.inversion_rate!r},{report.n_pairs_used}"
    )
    _write_csv(_out_path(args, "disagreement.csv"), DISAGREEMENT_HEADER, [row])
    print(
        f"{report.n_models} models: pearson {report.pearson:.4f},"
        f" kendall tau-b {report.kendall:.4f},"
        f" pairwise inversion rate {report.inversion_rate:.4f}"
        f" over {report.n_pairs_used} comparable pairs"
    )
    return 0


def _add_common(parser, *, config=True, seed=True) -> None:
    if config:
        parser.add_argument("--config", help="experiment TOML file")
    if seed:
        parser.add_argument(
            "--seed", type=int, help="override the config seed (unsigned integer)"
        )
    parser.add_argument(
        "--out", default="out", help="output directory (default: ./out)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcgeval",
        description=(
            "Offline evaluation of top-n ranking policies from position-biased"
            " logged feedback: simulation, inverse-propensity DCG estimation,"
            " and consistency/sensitivity analyses."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "simulate", help="generate per-day logged datasets plus online ground truth"
    )
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "value", help="exact and monte-carlo values of the logging and target policies"
    )
    _add_common(p)
    p.set_defaults(func=cmd_value)

    p = sub.add_parser(
        "estimate", help="run the configured estimator variants on a logged dataset"
    )
    _add_common(p)
    p.add_argument("--dataset", required=True, help="logged dataset (JSONL)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser(
        "correlate",
        help="pearson correlation of per-day offline estimates against online values",
    )
    _add_common(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser(
        "sensitivity",
        help="detection rates for a known improvement across clipping thresholds",
    )
    _add_common(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser(
        "counterexample",
        help="reproduce the aggregate DCG/normalized-DCG inversion and search for"
        " the smallest instance",
    )
    _add_common(p, config=False, seed=False)
    p.add_argument("--max-contexts", type=int, default=3, help="search bound (default 3)")
    p.add_argument("--max-actions", type=int, default=3, help="search bound (default 3)")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser(
        "lemma-check",
        help="randomized single-sample ordering-agreement trials",
    )
    _add_common(p, config=False)
    p.add_argument("--trials", type=int, default=1000, help="number of trials (default 1000)")
    p.set_defaults(func=cmd_lemma_check)

    p = sub.add_parser(
        "disagree", help="DCG vs normalized-DCG disagreement across a model-score table"
    )
    _add_common(p, config=False, seed=False)
    p.add_argument("--table", required=True, help="CSV with header model_id,dcg,ndcg")
    p.set_defaults(func=cmd_disagree)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DcgEvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
