"""Type III sums-of-squares ANOVA for crossed fixed-effects factorial designs.

Each effect's Type III SS is realized as a reduced-versus-full model
comparison under sum-to-zero (deviation) coding: SS(effect) = SSE(full model
minus that effect's columns) - SSE(full model), with every other term --
including higher-order interactions -- present in both models. The intercept
row likewise removes only the constant column. This reproduces the
between-subjects-table semantics of the major statistics packages on designs
with all cells occupied and is directly checkable against a brute-force
least-squares oracle.

On unbalanced data the individual effect SS do not generally add up to the
corrected-model SS; no such additivity is assumed anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import f_sf
from .errors import ValidationError
from .linmod import Term, build_design, full_factorial_terms, ols_fit
from .model import Dataset, FrequencyTable, frequency_table


@dataclass(frozen=True)
class AnovaRow:
    source: str
    ss: float
    df: int
    ms: float | None = None
    f: float | None = None
    p: float | None = None


@dataclass(frozen=True)
class AnovaTable:
    """Between-subjects test table: one row per source."""

    rows: tuple[AnovaRow, ...]
    response_name: str = "response"

    def row(self, source: str) -> AnovaRow:
        for r in self.rows:
            if r.source == source:
                return r
        raise ValidationError(f"no ANOVA row named {source!r}")

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(r.source for r in self.rows)

    @property
    def effect_rows(self) -> tuple[AnovaRow, ...]:
        skip = {"Corrected Model", "Intercept", "Error", "Total", "Corrected Total"}
        return tuple(r for r in self.rows if r.source not in skip)

    @property
    def ms_error(self) -> float:
        err = self.row("Error")
        return err.ss / err.df

    @property
    def df_error(self) -> int:
        return self.row("Error").df


def _check_occupancy(d: Dataset, terms: Sequence[Term]) -> None:
    """Every marginal cell spanned by a model term must be occupied."""
    freq = frequency_table(d)
    for term in terms:
        marg = freq.marginal(*term.factor_indices)
        for names, count in marg.items():
            if count == 0:
                factors = [d.layout.names[i] for i in term.factor_indices]
                cell = ", ".join(f"{f}={lv}" for f, lv in zip(factors, names))
                raise ValidationError(f"empty cell in the span of a model term: {cell}")


def type3_anova(d: Dataset, max_order: int | None = None) -> AnovaTable:
    """Between-subjects table with Type III SS for all effects up to
    ``max_order`` (defaults to the full factorial)."""
    layout = d.layout
    terms = full_factorial_terms(layout, max_order)
    _check_occupancy(d, terms)

    full = build_design(d, terms, coding="deviation")
    n, p = full.values.shape
    if n - p < 1:
        raise ValidationError(
            f"{n} observations cannot estimate {p} model columns with error df >= 1"
        )
    y = d.responses
    fit_full = ols_fit(full, y)
    sse_full = fit_full.sse
    df_error = fit_full.df_error
    mse = fit_full.mse

    grand_mean = float(y.mean())
    total_ss = float(y @ y)
    corrected_total_ss = float(((y - grand_mean) ** 2).sum())
    corrected_model_ss = corrected_total_ss - sse_full
    corrected_model_df = p - 1

    def f_and_p(ss: float, df: int) -> tuple[float, float, float]:
        ms = ss / df
        f = ms / mse
        return ms, f, f_sf(f, df, df_error)

    rows = []
    ms, f, p_val = f_and_p(corrected_model_ss, corrected_model_df)
    rows.append(AnovaRow("Corrected Model", corrected_model_ss, corrected_model_df, ms, f, p_val))

    intercept_ss = ols_fit(full.drop_term(None), y).sse - sse_full
    ms, f, p_val = f_and_p(intercept_ss, 1)
    rows.append(AnovaRow("Intercept", intercept_ss, 1, ms, f, p_val))

    for term in terms:
        reduced = full.drop_term(term)
        ss = ols_fit(reduced, y).sse - sse_full
        df = len(full.column_indices(term))
        ms, f, p_val = f_and_p(ss, df)
        label = " * ".join(layout.names[i] for i in term.factor_indices)
        rows.append(AnovaRow(label, ss, df, ms, f, p_val))

    rows.append(AnovaRow("Error", sse_full, df_error, mse))
    rows.append(AnovaRow("Total", total_ss, n))
    rows.append(AnovaRow("Corrected Total", corrected_total_ss, n - 1))
    return AnovaTable(tuple(rows), response_name=d.response_name)


def df_check(freq: FrequencyTable, max_order: int | None = None) -> list[tuple[str, int]]:
    """Degrees-of-freedom column computed from cell counts alone.

    Valid when every cell spanned by a model term is occupied (checked);
    rows appear in the same order as ``type3_anova`` output.
    """
    layout = freq.layout
    terms = full_factorial_terms(layout, max_order)
    for term in terms:
        for names, count in freq.marginal(*term.factor_indices).items():
            if count == 0:
                raise ValidationError(
                    f"df formulas need all term cells occupied; empty: {names}"
                )
    n = freq.total
    effect_dfs = [
        (
            " * ".join(layout.names[i] for i in term.factor_indices),
            int(np.prod([layout.n_levels(i) - 1 for i in term.factor_indices])),
        )
        for term in terms
    ]
    model_df = sum(df for _, df in effect_dfs)
    error_df = n - model_df - 1
    if error_df < 1:
        raise ValidationError(f"N = {n} leaves error df {error_df} < 1")
    out = [("Corrected Model", model_df), ("Intercept", 1)]
    out.extend(effect_dfs)
    out.extend([("Error", error_df), ("Total", n), ("Corrected Total", n - 1)])
    return out


@dataclass(frozen=True)
class EffectVerdict:
    source: str
    p: float
    significant_strict: bool
    significant_loose: bool


def significance_summary(
    table: AnovaTable, alpha_strict: float = 0.01, alpha_loose: float = 0.05
) -> list[EffectVerdict]:
    """Label every testable row significant/not at the two alpha levels."""
    if not 0 < alpha_strict <= alpha_loose < 1:
        raise ValidationError("need 0 < alpha_strict <= alpha_loose < 1")
    out = []
    for row in table.rows:
        if row.p is None:
            continue
        out.append(
            EffectVerdict(row.source, row.p, row.p < alpha_strict, row.p < alpha_loose)
        )
    return out
