"""CSV ingestion and emission for the length-of-stay schema.

Input files are UTF-8, comma-separated, with a header row. Expected columns:
``gender`` (male/female), ``season`` (spring/summer/autumn/winter), exactly
one of ``age`` (integer years, >= 1) or ``age_group`` (1-5), and ``los``
(positive days). An ``id`` column is carried along but ignored analytically.
Header names and level values are normalized by trimming and lowercasing.

A bad row aborts the run with its line number rather than being skipped:
silently dropping rows would bias the cell counts the whole unbalanced
analysis depends on.
"""

from __future__ import annotations

import csv
import datetime as _dt
from pathlib import Path

from .errors import ValidationError
from .model import Dataset, build_dataset
from .synth import default_layout

_GENDERS = ("male", "female")
_SEASONS = ("spring", "summer", "autumn", "winter")
_AGE_GROUPS = ("1", "2", "3", "4", "5")

# closed age-group bins; ages below 1 are rejected (undefined by the grouping)
_AGE_BINS = ((1, 10, "1"), (11, 25, "2"), (26, 40, "3"), (41, 60, "4"))


def bin_age(age: int) -> str:
    """Age in whole years to age-group label: 1-10, 11-25, 26-40, 41-60, >=61."""
    if age < 1:
        raise ValidationError(f"age {age} is below 1; the first age group starts at 1")
    for lo, hi, group in _AGE_BINS:
        if lo <= age <= hi:
            return group
    return "5"


def season_from_date(value: str) -> str:
    """Meteorological season (northern hemisphere) of an ISO date.

    Only an approximation of any particular admission calendar; enable it
    explicitly via ``use_date_season``.
    """
    try:
        month = _dt.date.fromisoformat(value.strip()).month
    except ValueError:
        raise ValidationError(f"cannot parse date {value!r} (expected YYYY-MM-DD)") from None
    if month in (3, 4, 5):
        return "spring"
    if month in (6, 7, 8):
        return "summer"
    if month in (9, 10, 11):
        return "autumn"
    return "winter"


def _norm(value: str) -> str:
    return value.strip().lower()


def ingest_csv(path: str | Path, use_date_season: bool = False) -> Dataset:
    """Read a cohort CSV into a Dataset on the raw (days) scale.

    Every error message carries the 1-based file line number of the offending
    row; the header is line 1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            raw_header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        header = [_norm(h) for h in raw_header]
        if len(set(header)) != len(header):
            raise ValidationError(f"{path}: duplicate column names in header")
        cols = {name: i for i, name in enumerate(header)}

        for required in ("gender", "los"):
            if required not in cols:
                raise ValidationError(f"{path}: missing required column {required!r}")
        has_age = "age" in cols
        has_group = "age_group" in cols
        if has_age == has_group:
            raise ValidationError(
                f"{path}: exactly one of 'age' or 'age_group' must be present"
            )
        if use_date_season:
            if "date" not in cols:
                raise ValidationError(f"{path}: season-from-date requires a 'date' column")
        elif "season" not in cols:
            raise ValidationError(f"{path}: missing required column 'season'")

        rows = []
        for record in reader:
            line_num = reader.line_num
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise ValidationError(
                    f"{path}:{line_num}: expected {len(header)} fields, got {len(record)}"
                )

            def cell(name: str) -> str:
                return _norm(record[cols[name]])

            gender = cell("gender")
            if gender not in _GENDERS:
                raise ValidationError(
                    f"{path}:{line_num}: unknown gender {gender!r} (male/female)"
                )
            if use_date_season:
                season = season_from_date(record[cols["date"]])
            else:
                season = cell("season")
                if season not in _SEASONS:
                    raise ValidationError(
                        f"{path}:{line_num}: unknown season {season!r} "
                        f"({'/'.join(_SEASONS)})"
                    )
            if has_age:
                raw_age = cell("age")
                try:
                    age = int(raw_age)
                except ValueError:
                    raise ValidationError(
                        f"{path}:{line_num}: unparseable age {raw_age!r}"
                    ) from None
                try:
                    group = bin_age(age)
                except ValidationError as exc:
                    raise ValidationError(f"{path}:{line_num}: {exc}") from None
            else:
                group = cell("age_group")
                if group not in _AGE_GROUPS:
                    raise ValidationError(
                        f"{path}:{line_num}: unknown age_group {group!r} (1-5)"
                    )
            raw_los = record[cols["los"]].strip()
            try:
                los = float(raw_los)
            except ValueError:
                raise ValidationError(
                    f"{path}:{line_num}: unparseable los {raw_los!r}"
                ) from None
            if not los > 0:
                raise ValidationError(
                    f"{path}:{line_num}: los must be > 0 days, got {raw_los}"
                )
            rows.append(((gender, season, group), los))

    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return build_dataset(default_layout(), rows, response_name="los")


def write_csv(d: Dataset, path: str | Path) -> None:
    """Emit a dataset in the ingestion schema; responses round-trip exactly."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*d.layout.names, d.response_name])
        for obs in d.observations:
            names = d.layout.cell_names(obs.level_indices)
            writer.writerow([*names, repr(obs.response)])
