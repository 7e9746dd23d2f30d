"""Command-line interface.

Subcommands: ``power`` (replication planning / OC tables), ``synth``
(synthetic cohort generation), ``anova`` (between-subjects table),
``posthoc`` (Scheffe comparisons and homogeneous subsets), ``diagnose``
(residual diagnostics and transform recommendation), and ``report`` (the
full pipeline into an output directory).

Exit codes: 0 on success, 1 for input or validation problems, 2 for a
numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .anova import significance_summary, type3_anova
from .diagnostics import (
    apply_transform,
    pp_plot,
    residual_histogram,
    residual_vs_fitted,
    sd_mean_regression,
)
from .errors import LosanovaError, NumericalError, ValidationError
from .ingest import ingest_csv, write_csv
from .linmod import build_design, full_factorial_terms, ols_fit, significant_model
from .model import FactorLayout, cell_stats, frequency_table
from .posthoc import homogeneous_subsets, marginal_means, scheffe_pairwise
from .power import (
    effect_label,
    min_replications,
    oc_table,
    parse_effect,
    plan_all_effects,
)
from .report import (
    ReportBundle,
    anova_rows,
    power_rows,
    render_report,
    scheffe_rows,
    subset_rows,
    transform_rows,
    write_report_dir,
    _table_text,
)
from .synth import reference_cohort_spec, generate

# factor names assumed for bare --levels lists of length three, matching the
# planning convention season x gender x age_group
_DEFAULT_PLANNING_FACTORS = ("season", "gender", "age_group")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _planning_layout(levels_text: str, factors_text: str | None) -> FactorLayout:
    try:
        counts = [int(part) for part in levels_text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse --levels {levels_text!r}") from None
    if len(counts) < 1:
        raise ValidationError("--levels needs at least one factor")
    if factors_text:
        names = [part.strip() for part in factors_text.split(",") if part.strip()]
        if len(names) != len(counts):
            raise ValidationError("--factors and --levels disagree on factor count")
    elif len(counts) == 3:
        names = list(_DEFAULT_PLANNING_FACTORS)
    else:
        names = [f"factor{i + 1}" for i in range(len(counts))]
    return FactorLayout(
        [(name, tuple(str(j + 1) for j in range(k))) for name, k in zip(names, counts)]
    )


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse {flag} {text!r}") from None


def _cmd_power(args) -> int:
    layout = _planning_layout(args.levels, args.factors)
    if args.all_effects:
        plan = plan_all_effects(
            layout, args.min_diff, args.sigma2, args.alpha, args.target_power
        )
        headers = ["effect", "n", "phi", "NFD", "DFD", "beta", "power"]
        rows = [
            [p.label, str(p.result.n), f"{p.result.phi:.4f}", str(p.result.nu1),
             str(p.result.nu2), f"{p.result.beta:.4f}", f"{p.result.power:.4f}"]
            for p in plan.effects
        ]
        print(_table_text(headers, rows), end="")
        print(f"\noverall replications required (max over effects): {plan.max_n}")
        return 0

    if not args.effect:
        raise ValidationError("pass --effect NAME or --all-effects")
    effect = parse_effect(layout, args.effect)
    if args.n:
        ns = _parse_int_list(args.n, "--n")
        results = oc_table(layout, effect, args.min_diff, args.sigma2, args.alpha, ns)
        print(_table_text(*power_rows(results)), end="")
    else:
        result = min_replications(
            layout, effect, args.min_diff, args.sigma2, args.alpha, args.target_power
        )
        print(_table_text(*power_rows([result])), end="")
        print(
            f"\nsmallest n with power >= {args.target_power:g} for "
            f"{effect_label(layout, effect)}: {result.n}"
        )
    return 0


def _cmd_synth(args) -> int:
    spec = reference_cohort_spec(n=args.n, seed=args.seed)
    dataset = generate(spec)
    write_csv(dataset, args.out)
    print(f"wrote {dataset.n} observations to {args.out}")
    return 0


def _load_analysis(args):
    """Shared ingest + transform front end for the analysis subcommands."""
    raw = ingest_csv(args.input, use_date_season=getattr(args, "season_from_date", False))
    rec = None
    if args.transform == "auto":
        rec = sd_mean_regression(cell_stats(raw))
        chosen = rec.transform
    elif args.transform == "log10":
        chosen = "logarithmic"
    else:
        chosen = "none"
    analysis = apply_transform(raw, chosen)
    return raw, analysis, rec, chosen


def _cmd_anova(args) -> int:
    _, analysis, rec, chosen = _load_analysis(args)
    if rec is not None:
        print(f"transform (auto): {chosen} [sd-mean slope {rec.slope:.3f}]")
    else:
        print(f"transform: {chosen}")
    table = type3_anova(analysis, max_order=args.max_order)
    print(f"response: {analysis.response_name}")
    print(_table_text(*anova_rows(table)), end="")
    verdicts = significance_summary(table, args.alpha, max(args.alpha, 0.05))
    significant = [v.source for v in verdicts if v.significant_strict]
    print(f"\nsignificant at alpha={args.alpha:g}: {', '.join(significant) or 'none'}")
    return 0


def _cmd_posthoc(args) -> int:
    _, analysis, _, chosen = _load_analysis(args)
    table = type3_anova(analysis)
    comparisons = scheffe_pairwise(
        analysis, args.factor, table.ms_error, table.df_error, args.alpha
    )
    print(f"transform: {chosen}; response: {analysis.response_name}")
    print(_table_text(*scheffe_rows(comparisons)), end="")
    stats = marginal_means(analysis, args.factor)
    subsets = homogeneous_subsets(comparisons, stats, args.alpha)
    counts = {s.level: s.n for s in stats}
    print()
    print(_table_text(*subset_rows(subsets, counts)), end="")
    return 0


def _fit_reference_model(analysis, alpha):
    design = build_design(analysis, full_factorial_terms(analysis.layout), "reference")
    return ols_fit(design, analysis.responses, alpha=alpha)


def _cmd_diagnose(args) -> int:
    raw, analysis, rec, chosen = _load_analysis(args)
    fit_raw = _fit_reference_model(raw, 0.05)
    spread_raw = residual_vs_fitted(fit_raw.residuals, fit_raw.fitted)
    hist_raw = residual_histogram(fit_raw.residuals)
    print(f"raw-scale model: funnel ratio "
          f"{spread_raw.funnel_ratio:.3f}" if spread_raw.funnel_ratio is not None
          else "raw-scale model: funnel ratio undefined")
    print(f"raw residual histogram: {len(hist_raw.counts)} bins, N={hist_raw.n}")
    if rec is None:
        rec = sd_mean_regression(cell_stats(raw))
    print(_table_text(*transform_rows(rec)), end="")
    if chosen != "none":
        fit_t = _fit_reference_model(analysis, 0.05)
        spread_t = residual_vs_fitted(fit_t.residuals, fit_t.fitted)
        pp = pp_plot(fit_t.residuals)
        funnel = (
            f"{spread_t.funnel_ratio:.3f}" if spread_t.funnel_ratio is not None else "undefined"
        )
        print(f"\ntransformed model ({analysis.response_name}): funnel ratio {funnel}, "
              f"P-P max deviation {pp.max_abs_deviation:.4f}")
    return 0


def _build_bundle(args) -> ReportBundle:
    raw, analysis, rec, chosen = _load_analysis(args)
    if rec is None:
        rec = sd_mean_regression(cell_stats(raw))

    freq = frequency_table(analysis)
    table = type3_anova(analysis)
    fit = _fit_reference_model(analysis, args.alpha)
    model = significant_model(fit, args.alpha, analysis.response_name)

    fit_raw = _fit_reference_model(raw, args.alpha) if chosen != "none" else fit
    diagnostics = {
        "raw_residual_histogram": residual_histogram(fit_raw.residuals),
        "raw_residual_vs_fitted": residual_vs_fitted(fit_raw.residuals, fit_raw.fitted),
        "residual_histogram": residual_histogram(fit.residuals),
        "residual_vs_fitted": residual_vs_fitted(fit.residuals, fit.fitted),
        "pp_plot": pp_plot(fit.residuals),
    }

    scheffe = {}
    subsets = {}
    marginal_counts = {}
    for name in analysis.layout.names:
        if analysis.layout.n_levels(name) < 3:
            continue
        comparisons = scheffe_pairwise(
            analysis, name, table.ms_error, table.df_error, args.alpha
        )
        stats = marginal_means(analysis, name)
        scheffe[name] = comparisons
        subsets[name] = homogeneous_subsets(comparisons, stats, args.alpha)
        marginal_counts[name] = {s.level: s.n for s in stats}

    parameters = {
        "input": str(args.input),
        "n_observations": analysis.n,
        "alpha": args.alpha,
        "transform_requested": args.transform,
        "transform_applied": chosen,
        "response": analysis.response_name,
        "sd_mean_slope": rec.slope,
        "version": __version__,
    }
    return ReportBundle(
        parameters=parameters,
        frequency=freq,
        anova=table,
        coefficients=fit.coefficients,
        equation=model.equation,
        scheffe=scheffe,
        subsets=subsets,
        marginal_counts=marginal_counts,
        diagnostics=diagnostics,
        transform_rec=rec,
    )


def _cmd_report(args) -> int:
    bundle = _build_bundle(args)
    if args.out:
        artifacts = write_report_dir(bundle, args.out)
        print(f"wrote {len(artifacts)} artifacts to {args.out}")
    else:
        sys.stdout.write(render_report(bundle, args.format).decode())
    return 0


def _add_input_options(parser, with_transform=True):
    parser.add_argument("--input", required=True, help="cohort CSV file")
    parser.add_argument(
        "--season-from-date", action="store_true",
        help="derive season from a 'date' column (meteorological, approximate)",
    )
    if with_transform:
        parser.add_argument(
            "--transform", choices=("auto", "log10", "none"), default="auto",
            help="response transform: auto picks from the sd-mean regression",
        )
    parser.add_argument("--alpha", type=float, default=0.05, help="significance level")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="losanova", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("power", help="power analysis and replication planning")
    p.add_argument("--levels", required=True, help="levels per factor, e.g. 4,2,5")
    p.add_argument("--factors", help="factor names matching --levels (comma separated)")
    p.add_argument("--min-diff", type=float, required=True,
                   help="smallest level-mean difference worth detecting")
    p.add_argument("--sigma2", type=float, required=True, help="error variance estimate")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.add_argument("--effect", help="effect to analyze, e.g. season or gender*season")
    p.add_argument("--all-effects", action="store_true",
                   help="plan every main effect and interaction")
    p.add_argument("--n", help="replication counts for an OC table, e.g. 10,20,30")
    p.add_argument("--target-power", type=float, default=0.95,
                   help="power target for the replication search")
    p.set_defaults(func=_cmd_power)

    p = sub.add_parser("synth", help="generate a synthetic cohort CSV")
    p.add_argument("--n", type=int, required=True, help="number of observations")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("anova", help="Type III between-subjects table")
    _add_input_options(p)
    p.add_argument("--max-order", type=int, default=None,
                   help="highest interaction order (default: full factorial)")
    p.set_defaults(func=_cmd_anova)

    p = sub.add_parser("posthoc", help="Scheffe comparisons and homogeneous subsets")
    _add_input_options(p)
    p.add_argument("--factor", required=True, help="factor to compare")
    p.set_defaults(func=_cmd_posthoc)

    p = sub.add_parser("diagnose", help="residual diagnostics and transform choice")
    _add_input_options(p)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("report", help="full pipeline: tables, plots, manifest")
    _add_input_options(p)
    p.add_argument("--out", help="output directory (omit to print to stdout)")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text",
                   help="stdout format when --out is omitted")
    p.set_defaults(func=_cmd_report)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, LosanovaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_main())
