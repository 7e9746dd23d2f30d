"""Shared fixtures: reference-cohort layouts and small synthetic datasets."""

import numpy as np
import pytest

from losanova import FactorLayout, build_dataset
from losanova.synth import REFERENCE_CELL_COUNTS, default_layout


@pytest.fixture
def cohort_layout():
    """gender(2) x season(4) x age_group(5), the data-schema order."""
    return default_layout()


@pytest.fixture
def anova_layout():
    """age_group(5) x season(4) x gender(2), the between-subjects-table order."""
    return FactorLayout(
        [
            ("age_group", ("1", "2", "3", "4", "5")),
            ("season", ("spring", "summer", "autumn", "winter")),
            ("gender", ("male", "female")),
        ]
    )


@pytest.fixture
def reference_counts():
    return REFERENCE_CELL_COUNTS


def random_dataset(layout, n, seed, effects=None, sd=1.0, positive_shift=None,
                   min_per_cell=0):
    """Unbalanced random dataset with optional additive cell effects.

    ``min_per_cell`` seeds that many observations into every cell first, so
    full-factorial designs stay estimable.
    """
    rng = np.random.default_rng(seed)
    shape = layout.shape
    cells = []
    for cell in layout.cells():
        cells.extend([cell] * min_per_cell)
    while len(cells) < n:
        cells.append(tuple(int(rng.integers(k)) for k in shape))
    rows = []
    for cell in cells[:n]:
        mu = effects(cell) if effects is not None else 0.0
        y = rng.normal(mu, sd)
        rows.append((layout.cell_names(cell), y))
    if positive_shift is None:
        lowest = min(y for _, y in rows)
        positive_shift = max(0.0, 1.0 - lowest)
    rows = [(names, y + positive_shift) for names, y in rows]
    return build_dataset(layout, rows)


@pytest.fixture
def two_by_two():
    return FactorLayout([("a", ("a1", "a2")), ("b", ("b1", "b2"))])
