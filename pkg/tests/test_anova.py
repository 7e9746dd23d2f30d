"""Type III engine against independent least-squares oracles and published
table structure."""

import itertools

import numpy as np
import pytest

from losanova import (
    FactorLayout,
    FrequencyTable,
    ValidationError,
    build_dataset,
    build_design,
    df_check,
    ols_fit,
    significance_summary,
    type3_anova,
)
from losanova.anova import AnovaRow, AnovaTable
from losanova.linmod import Term, full_factorial_terms
from losanova.synth import REFERENCE_CELL_COUNTS

from conftest import random_dataset


# --- independent brute-force oracle (numpy only, own encoder) -----------------

def _dev_main_columns(codes, k):
    return [
        (codes == j).astype(float) - (codes == k - 1).astype(float)
        for j in range(k - 1)
    ]


def _oracle_design(levels, shape, terms):
    n = levels.shape[0]
    mains = [_dev_main_columns(levels[:, f], k) for f, k in enumerate(shape)]
    cols = [np.ones(n)]
    owners = [None]
    for term in terms:
        for combo in itertools.product(*(range(len(mains[f])) for f in term)):
            col = np.ones(n)
            for f, j in zip(term, combo):
                col = col * mains[f][j]
            cols.append(col)
            owners.append(term)
    return np.column_stack(cols), owners


def _oracle_sse(X, y):
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    return float(r @ r)


def brute_force_type3(d):
    shape = d.layout.shape
    terms = [
        combo
        for order in range(1, len(shape) + 1)
        for combo in itertools.combinations(range(len(shape)), order)
    ]
    X_full, owners = _oracle_design(d.level_matrix, shape, terms)
    sse_full = _oracle_sse(X_full, d.responses)
    out = {}
    for term in terms:
        keep = [i for i, owner in enumerate(owners) if owner != term]
        out[term] = _oracle_sse(X_full[:, keep], d.responses) - sse_full
    return out, sse_full


def _sequential_ss(d, terms):
    """Type I SS via incremental fits (balanced-case oracle)."""
    included = []
    sse_prev = ols_fit(build_design(d, [], "deviation"), d.responses).sse
    out = {}
    for term in terms:
        included.append(term)
        sse = ols_fit(build_design(d, included, "deviation"), d.responses).sse
        out[term] = sse_prev - sse
        sse_prev = sse
    return out


def _label(layout, term):
    indices = term.factor_indices if isinstance(term, Term) else term
    return " * ".join(layout.names[i] for i in indices)


# --- core equivalences ---------------------------------------------------------

def test_balanced_type3_equals_sequential(two_by_two):
    rng = np.random.default_rng(1)
    rows = []
    for a in ("a1", "a2"):
        for b in ("b1", "b2"):
            for _ in range(4):
                rows.append(((a, b), float(rng.normal(0, 1) + 5)))
    d = build_dataset(two_by_two, rows)
    table = type3_anova(d)
    seq = _sequential_ss(d, full_factorial_terms(two_by_two))
    for term, ss_seq in seq.items():
        ss3 = table.row(_label(two_by_two, term)).ss
        assert ss3 == pytest.approx(ss_seq, rel=1e-10, abs=1e-10)


def test_unbalanced_2x2_matches_brute_force(two_by_two):
    rows = (
        [(("a1", "b1"), y) for y in (1.0, 2.0, 4.0)]
        + [(("a1", "b2"), y) for y in (2.0, 5.0)]
        + [(("a2", "b1"), y) for y in (3.0, 3.5)]
        + [(("a2", "b2"), 8.0), (("a2", "b2"), 6.0)]
    )
    d = build_dataset(two_by_two, rows)
    table = type3_anova(d)
    oracle, sse_full = brute_force_type3(d)
    for term, ss_ref in oracle.items():
        got = table.row(_label(two_by_two, term)).ss
        assert got == pytest.approx(ss_ref, rel=1e-8, abs=1e-10)
    assert table.row("Error").ss == pytest.approx(sse_full, rel=1e-10)


def test_random_unbalanced_designs_match_oracle():
    layouts = [
        FactorLayout([("a", ("a1", "a2")), ("b", ("b1", "b2"))]),
        FactorLayout([("a", ("a1", "a2")), ("b", ("b1", "b2", "b3")), ("c", ("c1", "c2"))]),
    ]
    rng = np.random.default_rng(99)
    for trial in range(12):
        layout = layouts[trial % 2]
        d = random_dataset(layout, int(rng.integers(30, 61)), seed=1000 + trial,
                           min_per_cell=1)
        table = type3_anova(d)
        oracle, _ = brute_force_type3(d)
        for term, ss_ref in oracle.items():
            got = table.row(_label(layout, term)).ss
            assert got == pytest.approx(ss_ref, rel=1e-8, abs=1e-9)


def test_saturated_responses_zero_error(two_by_two):
    # responses equal their cell means exactly
    rows = (
        [(("a1", "b1"), 2.0)] * 3
        + [(("a1", "b2"), 5.0)] * 2
        + [(("a2", "b1"), 1.0)] * 2
        + [(("a2", "b2"), 4.0)] * 2
    )
    d = build_dataset(two_by_two, rows)
    table = type3_anova(d)
    assert table.row("Error").ss == pytest.approx(0.0, abs=1e-18)


# --- table identities ------------------------------------------------------------

def test_ss_additivity_and_totals(cohort_layout):
    d = random_dataset(cohort_layout, 400, seed=13, min_per_cell=2)
    t = type3_anova(d)
    cm, err, ct = t.row("Corrected Model"), t.row("Error"), t.row("Corrected Total")
    assert cm.ss + err.ss == pytest.approx(ct.ss, rel=1e-8)
    n = d.n
    grand = float(d.responses.mean())
    assert t.row("Total").ss == pytest.approx(ct.ss + n * grand**2, rel=1e-10)
    assert cm.df + err.df == ct.df
    assert cm.df == sum(r.df for r in t.effect_rows)


def test_effect_ss_additivity_only_when_balanced(two_by_two):
    rng = np.random.default_rng(8)
    balanced_rows, unbalanced_rows = [], []
    for a in ("a1", "a2"):
        for b in ("b1", "b2"):
            for _ in range(5):
                balanced_rows.append(((a, b), float(rng.normal(5, 1))))
    counts = {("a1", "b1"): 6, ("a1", "b2"): 2, ("a2", "b1"): 3, ("a2", "b2"): 7}
    for (a, b), c in counts.items():
        for _ in range(c):
            unbalanced_rows.append(((a, b), float(rng.normal(5, 1) + (a == "a2") * 2)))

    bal = type3_anova(build_dataset(two_by_two, balanced_rows))
    gap_balanced = abs(
        sum(r.ss for r in bal.effect_rows) - bal.row("Corrected Model").ss
    )
    assert gap_balanced < 1e-8

    unb = type3_anova(build_dataset(two_by_two, unbalanced_rows))
    gap_unbalanced = abs(
        sum(r.ss for r in unb.effect_rows) - unb.row("Corrected Model").ss
    )
    assert gap_unbalanced > 1e-6  # no additivity off balance


def test_permutation_invariance(cohort_layout):
    d = random_dataset(cohort_layout, 200, seed=17, min_per_cell=2)
    rng = np.random.default_rng(0)
    perm = rng.permutation(d.n)
    shuffled = build_dataset(
        cohort_layout,
        [
            (cohort_layout.cell_names(d.observations[i].level_indices),
             d.observations[i].response)
            for i in perm
        ],
    )
    t1, t2 = type3_anova(d), type3_anova(shuffled)
    for r1, r2 in zip(t1.rows, t2.rows):
        assert r1.source == r2.source
        assert r1.ss == pytest.approx(r2.ss, rel=1e-10, abs=1e-10)


def test_f_and_p_columns(cohort_layout):
    d = random_dataset(cohort_layout, 300, seed=23, min_per_cell=2)
    t = type3_anova(d)
    mse = t.ms_error
    for r in t.rows:
        if r.f is not None:
            assert r.ms == pytest.approx(r.ss / r.df, rel=1e-12)
            assert r.f == pytest.approx(r.ms / mse, rel=1e-12)
            assert 0.0 <= r.p <= 1.0


# --- guards ----------------------------------------------------------------------

def test_empty_cell_is_named(two_by_two):
    rows = [
        (("a1", "b1"), 1.0), (("a1", "b1"), 2.0),
        (("a1", "b2"), 3.0), (("a2", "b1"), 4.0),
        (("a2", "b1"), 4.5), (("a1", "b2"), 2.0),
    ]
    d = build_dataset(two_by_two, rows)
    with pytest.raises(ValidationError, match="a=a2, b=b2"):
        type3_anova(d)
    # without the interaction the margins are all occupied
    table = type3_anova(d, max_order=1)
    assert {r.source for r in table.effect_rows} == {"a", "b"}


def test_zero_error_df_refused(two_by_two):
    rows = [(("a1", "b1"), 1.0), (("a1", "b2"), 2.0), (("a2", "b1"), 3.0),
            (("a2", "b2"), 4.0)]
    with pytest.raises(ValidationError, match="error df"):
        type3_anova(build_dataset(two_by_two, rows))


# --- df column from counts alone ---------------------------------------------------

def test_df_check_reference_counts(anova_layout):
    counts = {
        (a, s, g): c for (g, s, a), c in REFERENCE_CELL_COUNTS.items()
    }
    freq = FrequencyTable.from_cell_counts(anova_layout, counts)
    got = df_check(freq)
    assert [df for _, df in got] == [39, 1, 4, 3, 1, 12, 4, 3, 12, 82678, 82718, 82717]
    assert [src for src, _ in got] == [
        "Corrected Model", "Intercept", "age_group", "season", "gender",
        "age_group * season", "age_group * gender", "season * gender",
        "age_group * season * gender", "Error", "Total", "Corrected Total",
    ]


def test_df_check_single_factor():
    layout = FactorLayout([("f", ("x", "y"))])
    freq = FrequencyTable.from_cell_counts(layout, {("x",): 6, ("y",): 4})
    got = df_check(freq)
    assert [df for _, df in got] == [1, 1, 1, 8, 10, 9]


def test_df_check_rejects_empty_cell():
    layout = FactorLayout([("f", ("x", "y"))])
    freq = FrequencyTable.from_cell_counts(layout, {("x",): 10, ("y",): 0})
    with pytest.raises(ValidationError, match="occupied"):
        df_check(freq)


# --- narrative significance summary --------------------------------------------------

def _published_anova_table():
    rows = [
        AnovaRow("Corrected Model", 513.847, 39, 13.176, 60.866, 1e-6),
        AnovaRow("Intercept", 21676.552, 1, 21676.552, 100137.437, 1e-12),
        AnovaRow("age_group", 300.734, 4, 75.183, 347.319, 1e-9),
        AnovaRow("season", 12.165, 3, 4.055, 18.733, 1e-9),
        AnovaRow("gender", 46.741, 1, 46.741, 215.926, 1e-9),
        AnovaRow("age_group * season", 4.456, 12, 0.371, 1.715, 0.057),
        AnovaRow("age_group * gender", 50.402, 4, 12.600, 58.209, 1e-9),
        AnovaRow("season * gender", 1.783, 3, 0.594, 2.745, 0.041),
        AnovaRow("age_group * season * gender", 2.354, 12, 0.196, 0.906, 0.540),
        AnovaRow("Error", 17897.142, 82678, 0.216),
        AnovaRow("Total", 50201.596, 82718),
        AnovaRow("Corrected Total", 18410.989, 82717),
    ]
    return AnovaTable(tuple(rows), response_name="logstay")


def test_significance_summary_reference_pattern():
    verdicts = significance_summary(_published_anova_table(), 0.01, 0.05)
    strict = {v.source for v in verdicts if v.significant_strict}
    loose = {v.source for v in verdicts if v.significant_loose}
    assert strict == {
        "Corrected Model", "Intercept", "age_group", "season", "gender",
        "age_group * gender",
    }
    assert loose == strict | {"season * gender"}  # p = .041 clears 0.05 only
    assert {v.source for v in verdicts if not v.significant_loose} == {
        "age_group * season", "age_group * season * gender",
    }


def test_significance_summary_nothing_significant():
    rows = [AnovaRow("f", 1.0, 1, 1.0, 0.5, 1.0), AnovaRow("Error", 10.0, 10, 1.0)]
    verdicts = significance_summary(AnovaTable(tuple(rows)), 0.01, 0.05)
    assert all(not v.significant_loose for v in verdicts)


def test_published_f_column_consistency():
    # with MSE = 17897.142/82678, every published F equals its MS / MSE
    mse = 17897.142 / 82678
    table = _published_anova_table()
    for row in table.rows:
        if row.f is not None:
            assert row.ms / mse == pytest.approx(row.f, rel=0.005)
