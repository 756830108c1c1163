"""Reading and writing death records and life tables.

Death records use the IDL/GRG-like CSV schema
`id,birth_date,death_date,country,validated` with ISO-8601 dates; ages at
death are derived from the dates as exact Gregorian day counts divided by
365.2425, so fractional ages are bit-stable across implementations.  Life
tables use the HMD-like schema `age,qx`.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import warnings
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence

from . import MradlabError, __version__

DAYS_PER_YEAR = 365.2425
RECORD_CSV_HEADER = ("id", "birth_date", "death_date", "country", "validated")
LIFE_TABLE_CSV_HEADER = ("age", "qx")


class ParseError(MradlabError):
    """Input could not be parsed; carries the offending row and column."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = ""
        if row is not None:
            location = f"row {row}"
            if column is not None:
                location += f", column {column}"
            location = f" ({location})"
        super().__init__(message + location)
        self.row = row
        self.column = column


def age_at_death(birth: date, death: date) -> float:
    """Exact age in years: Gregorian day count divided by 365.2425."""
    if death < birth:
        raise ValueError(f"death date {death} precedes birth date {birth}")
    return (death - birth).days / DAYS_PER_YEAR


@dataclass(frozen=True)
class LifeRecord:
    """One validated death record."""

    record_id: str
    birth_date: date
    death_date: date
    country: str
    validated: bool

    def __post_init__(self) -> None:
        if self.death_date < self.birth_date:
            raise ValueError(
                f"record {self.record_id}: death date {self.death_date} "
                f"precedes birth date {self.birth_date}"
            )

    @property
    def age_at_death(self) -> float:
        return age_at_death(self.birth_date, self.death_date)

    @property
    def death_year(self) -> int:
        return self.death_date.year


@dataclass(frozen=True)
class LifeTable:
    """Annual death probabilities by integer age; contiguous ages."""

    rows: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise ValueError("life table must have at least one row")
        ages = [age for age, _ in self.rows]
        if ages != list(range(ages[0], ages[0] + len(ages))):
            raise ValueError("life-table ages must be contiguous integers")
        for age, q in self.rows:
            if not 0.0 <= q <= 1.0:
                raise ValueError(f"q outside [0, 1] at age {age}")

    def as_hazard_model(self):
        from .hazards import life_table_scenario

        return life_table_scenario(self.rows)


def _parse_date(text: str, row: int, column: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise ParseError(f"malformed date {text!r}: {exc}", row=row, column=column) from exc


def _parse_validated(text: str, row: int) -> bool:
    lowered = text.strip().lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    raise ParseError(f"validated flag must be true or false, got {text!r}",
                     row=row, column="validated")


def parse_records(text: str | IO[str]) -> list[LifeRecord]:
    """Parse a death-record CSV stream; every row parses or raises a positioned error."""
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input, expected header row", row=1) from None
    if tuple(h.strip() for h in header) != RECORD_CSV_HEADER:
        raise ParseError(
            f"expected header {','.join(RECORD_CSV_HEADER)!r}, got {','.join(header)!r}",
            row=1,
        )
    records: list[LifeRecord] = []
    seen_ids: set[str] = set()
    for row_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, got {len(row)}", row=row_number)
        record_id, birth_text, death_text, country, validated_text = (f.strip() for f in row)
        birth = _parse_date(birth_text, row_number, "birth_date")
        death = _parse_date(death_text, row_number, "death_date")
        if death < birth:
            raise ParseError(f"death {death} precedes birth {birth}",
                             row=row_number, column="death_date")
        if record_id in seen_ids:
            warnings.warn(f"duplicate record id {record_id!r} at row {row_number}",
                          stacklevel=2)
        seen_ids.add(record_id)
        records.append(LifeRecord(record_id, birth, death, country,
                                  _parse_validated(validated_text, row_number)))
    return records


def read_records(path: str | Path) -> list[LifeRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_records(fh)


def write_records(records: Iterable[LifeRecord], fh: IO[str]) -> None:
    """Write records in canonical form (ISO dates, lowercase flags, \\n endings)."""
    fh.write(",".join(RECORD_CSV_HEADER) + "\n")
    for r in records:
        flag = "true" if r.validated else "false"
        fh.write(f"{r.record_id},{r.birth_date.isoformat()},{r.death_date.isoformat()},"
                 f"{r.country},{flag}\n")


def records_to_csv(records: Iterable[LifeRecord]) -> str:
    buffer = io.StringIO()
    write_records(records, buffer)
    return buffer.getvalue()


def parse_life_table(text: str | IO[str]) -> LifeTable:
    """Parse an `age,qx` life-table stream; contiguous integer ages, q in [0, 1]."""
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input, expected header row", row=1) from None
    if tuple(h.strip() for h in header) != LIFE_TABLE_CSV_HEADER:
        raise ParseError(f"expected header 'age,qx', got {','.join(header)!r}", row=1)
    rows: list[tuple[int, float]] = []
    for row_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", row=row_number)
        age_text, q_text = (f.strip() for f in row)
        try:
            age = int(age_text)
        except ValueError:
            raise ParseError(f"age must be an integer, got {age_text!r}",
                             row=row_number, column="age") from None
        try:
            q = float(q_text)
        except ValueError:
            raise ParseError(f"qx must be a number, got {q_text!r}",
                             row=row_number, column="qx") from None
        if not 0.0 <= q <= 1.0:
            raise ParseError(f"qx {q} outside [0, 1]", row=row_number, column="qx")
        rows.append((age, q))
    if not rows:
        raise ParseError("life table has no data rows", row=2)
    ages = [a for a, _ in rows]
    if ages != list(range(ages[0], ages[0] + len(ages))):
        raise ParseError("life-table ages must be contiguous and increasing")
    return LifeTable(tuple(rows))


def read_life_table(path: str | Path) -> LifeTable:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_life_table(fh)


def write_life_table(table: LifeTable, fh: IO[str]) -> None:
    fh.write(",".join(LIFE_TABLE_CSV_HEADER) + "\n")
    for age, q in table.rows:
        fh.write(f"{age},{q!r}\n")


# -- result envelopes ----------------------------------------------------------


def hash_inputs(paths: Sequence[str | Path] = (), params: Optional[dict] = None) -> str:
    """SHA-256 over input file bytes (in order) and canonical parameter JSON."""
    digest = hashlib.sha256()
    for path in paths:
        digest.update(Path(path).read_bytes())
    if params is not None:
        digest.update(json.dumps(params, sort_keys=True, default=str).encode("utf-8"))
    return digest.hexdigest()


def result_envelope(command: str, inputs_hash: str, result) -> dict:
    """Canonical JSON envelope wrapping any analysis result."""
    return {
        "tool_version": __version__,
        "command": command,
        "inputs_hash": inputs_hash,
        "result": result,
    }
