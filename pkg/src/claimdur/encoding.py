"""Claim records, hierarchical code consolidation and one-hot input encoding.

Ten categorical predictors describe a claim.  Four injury codes (NOI, POB,
SOI, TOA) are 5-digit strings and two workplace codes (SIC, OCC) are 4-digit
strings in which trailing detail can be zeroed to reach a coarser parent
category; the postal region CPC is a 3-character prefix truncated one
character at a time.  AGE and PAY are quantitative and get binned into
empirical quartiles; SEX passes through.  Under-represented codes are rolled
up the hierarchy until each surviving category meets a frequency floor.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

# Canonical variable order; also the column order of the claims file.
VARIABLES = ("NOI", "POB", "SOI", "TOA", "AGE", "SEX", "SIC", "OCC", "PAY", "CPC")

# kind -> how raw tokens resolve to categories
DIGIT_LENGTHS = {"NOI": 5, "POB": 5, "SOI": 5, "TOA": 5, "SIC": 4, "OCC": 4}
PREFIX_VARIABLES = ("CPC",)
QUARTILE_VARIABLES = ("AGE", "PAY")
LABEL_VARIABLES = ("SEX",)

QUARTILE_CATEGORIES = ("Q1", "Q2", "Q3", "Q4")

# Reserved per-variable fallback node so novel prediction-time codes never fail.
UNKNOWN_CATEGORY = "(unknown)"

DEFAULT_MIN_COUNT = 10

CLAIMS_COLUMNS = tuple(v.lower() for v in VARIABLES) + (
    "duration_weeks",
    "event",
    "open_date",
)


class ClaimsFileError(ValueError):
    """Malformed claims file; message carries the 1-based line number."""


class CodebookError(ValueError):
    """Invalid input while building or applying a codebook."""


@dataclass(frozen=True)
class ClaimRecord:
    """One claim: covariate tokens, observed duration and censoring status."""

    covariates: Mapping[str, str]
    duration_weeks: float
    event: bool
    open_date: dt.date

    def __post_init__(self):
        if self.duration_weeks < 0:
            raise ValueError(f"duration_weeks must be >= 0, got {self.duration_weeks}")
        unknown = set(self.covariates) - set(VARIABLES)
        if unknown:
            raise ValueError(f"unknown covariate names: {sorted(unknown)}")


def variable_kind(name: str) -> str:
    if name in DIGIT_LENGTHS:
        return "digit"
    if name in PREFIX_VARIABLES:
        return "prefix"
    if name in QUARTILE_VARIABLES:
        return "quartile"
    if name in LABEL_VARIABLES:
        return "label"
    raise CodebookError(f"not a claim variable: {name!r}")


def rollup_parent(variable: str, code: str) -> str | None:
    """One step up the code hierarchy, or None when `code` is the root.

    Digit codes zero their lowest-order nonzero digit; prefix codes drop the
    last character.  The root is the all-zero string (digit) or "" (prefix).
    """
    kind = variable_kind(variable)
    if kind == "digit":
        digits = list(code)
        for i in range(len(digits) - 1, -1, -1):
            if digits[i] != "0":
                digits[i] = "0"
                return "".join(digits)
        return None
    if kind == "prefix":
        return code[:-1] if code else None
    raise CodebookError(f"{variable} has no code hierarchy")


def _code_depth(variable: str, code: str) -> int:
    if variable_kind(variable) == "digit":
        return sum(1 for c in code if c != "0")
    return len(code)


def _validate_code(variable: str, code: str, where: str) -> None:
    kind = variable_kind(variable)
    if kind == "digit":
        want = DIGIT_LENGTHS[variable]
        if not code.isdigit() or len(code) != want:
            raise CodebookError(
                f"{where}: {variable} code {code!r} is not a {want}-digit string"
            )
    elif kind == "prefix":
        if len(code) != 3 or not code.isalnum():
            raise CodebookError(
                f"{where}: {variable} code {code!r} is not a 3-character prefix"
            )


def quartile_bin(value: float, boundaries: Sequence[float]) -> int:
    """Quartile index in 1..4; boundary values go to the lower bin."""
    b1, b2, b3 = boundaries
    if not (b1 < b2 < b3):
        raise ValueError(f"boundaries must be strictly increasing, got {boundaries}")
    if value <= b1:
        return 1
    if value <= b2:
        return 2
    if value <= b3:
        return 3
    return 4


def _consolidate_codes(
    variable: str, counts: Mapping[str, int], min_count: int
) -> dict[str, str]:
    """Roll under-represented codes up the hierarchy; returns raw -> category.

    Nodes are pooled deepest-first: a node keeps the mass of everything merged
    into it, and moves one level up whenever its pooled mass is still below
    `min_count`.  The hierarchy root is kept regardless of mass.
    """
    parent_of: dict[str, str | None] = {}
    for code in counts:
        node: str | None = code
        while node is not None and node not in parent_of:
            parent_of[node] = rollup_parent(variable, node)
            node = parent_of[node]
    pooled = {node: 0 for node in parent_of}
    for code, c in counts.items():
        pooled[code] += c

    merged_into: dict[str, str] = {}
    for node in sorted(pooled, key=lambda c: (-_code_depth(variable, c), c)):
        parent = parent_of[node]
        if parent is None:
            continue  # root always survives
        if pooled[node] < min_count:
            merged_into[node] = parent
            pooled[parent] += pooled[node]

    def resolve(code: str) -> str:
        while code in merged_into:
            code = merged_into[code]
        return code

    return {raw: resolve(raw) for raw in counts}


@dataclass(frozen=True)
class VariableCoding:
    """How one variable's raw tokens map to consolidated categories."""

    name: str
    categories: tuple[str, ...]  # ordered; UNKNOWN_CATEGORY is always last
    consolidation: Mapping[str, str] = field(default_factory=dict)
    boundaries: tuple[float, float, float] | None = None

    def resolve(self, token: str) -> str:
        """Consolidated category for a raw token; never fails."""
        kind = variable_kind(self.name)
        if kind == "quartile":
            if token in QUARTILE_CATEGORIES:
                return token
            try:
                value = float(token)
            except ValueError:
                return UNKNOWN_CATEGORY
            return QUARTILE_CATEGORIES[quartile_bin(value, self.boundaries) - 1]
        if kind == "label":
            return token if token in self.categories else UNKNOWN_CATEGORY
        mapped = self.consolidation.get(token)
        if mapped is not None:
            return mapped
        try:
            _validate_code(self.name, token, "resolve")
        except CodebookError:
            return UNKNOWN_CATEGORY  # malformed token: no hierarchy walk possible
        known = set(self.categories)
        node: str | None = token
        while node is not None:
            if node in known:
                return node
            node = rollup_parent(self.name, node)
        return UNKNOWN_CATEGORY


@dataclass(frozen=True)
class Codebook:
    """Per-variable category inventories plus the one-hot input layout."""

    variables: tuple[str, ...]
    codings: Mapping[str, VariableCoding]

    @property
    def n_inputs(self) -> int:
        return sum(len(self.codings[v].categories) for v in self.variables)

    def input_index(self, variable: str, category: str) -> int:
        offset = 0
        for v in self.variables:
            cats = self.codings[v].categories
            if v == variable:
                return offset + cats.index(category)
            offset += len(cats)
        raise CodebookError(f"variable {variable!r} not in codebook")

    def layout(self) -> list[tuple[str, str]]:
        """(variable, category) per input node, in index order."""
        out = []
        for v in self.variables:
            out.extend((v, c) for c in self.codings[v].categories)
        return out

    def resolve(self, variable: str, token: str) -> str:
        if variable not in self.codings:
            raise CodebookError(f"variable {variable!r} not in codebook")
        return self.codings[variable].resolve(token)


def build_codebook(
    records: Sequence[ClaimRecord],
    min_count: int = DEFAULT_MIN_COUNT,
    variables: Sequence[str] | None = None,
) -> Codebook:
    """Build category inventories, consolidation maps and quartile boundaries.

    Every raw code seen in `records` maps to a consolidated category whose
    training frequency is at least `min_count` (hierarchy roots excepted).
    AGE/PAY boundaries are the empirical quartiles of the training values,
    nearest-rank (lower) convention.
    """
    if not records:
        raise CodebookError("cannot build a codebook from zero records")
    if min_count < 1:
        raise CodebookError(f"min_count must be positive, got {min_count}")
    if variables is None:
        variables = [v for v in VARIABLES if any(v in r.covariates for r in records)]
    else:
        bad = set(variables) - set(VARIABLES)
        if bad:
            raise CodebookError(f"unknown variables requested: {sorted(bad)}")
        variables = [v for v in VARIABLES if v in set(variables)]
    if not variables:
        raise CodebookError("no variables present in the records")

    codings: dict[str, VariableCoding] = {}
    for var in variables:
        kind = variable_kind(var)
        tokens: list[str] = []
        for i, rec in enumerate(records):
            tok = rec.covariates.get(var)
            if tok is None:
                continue
            if kind in ("digit", "prefix"):
                _validate_code(var, tok, f"record {i}")
            tokens.append(tok)
        if kind == "quartile":
            values = []
            for i, rec in enumerate(records):
                tok = rec.covariates.get(var)
                if tok is None:
                    continue
                try:
                    values.append(float(tok))
                except ValueError:
                    raise CodebookError(
                        f"record {i}: {var} value {tok!r} is not numeric"
                    ) from None
            if not values:
                raise CodebookError(f"no values for quantitative variable {var}")
            b = np.percentile(np.asarray(values, dtype=float), [25, 50, 75],
                              method="lower")
            b = _separate_boundaries(tuple(float(x) for x in b))
            codings[var] = VariableCoding(
                name=var,
                categories=QUARTILE_CATEGORIES + (UNKNOWN_CATEGORY,),
                boundaries=b,
            )
        elif kind == "label":
            cats = tuple(sorted(set(tokens)))
            codings[var] = VariableCoding(
                name=var, categories=cats + (UNKNOWN_CATEGORY,)
            )
        else:
            if not tokens:
                raise CodebookError(f"no values for variable {var}")
            counts: dict[str, int] = {}
            for tok in tokens:
                counts[tok] = counts.get(tok, 0) + 1
            consolidation = _consolidate_codes(var, counts, min_count)
            cats = tuple(sorted(set(consolidation.values())))
            codings[var] = VariableCoding(
                name=var,
                categories=cats + (UNKNOWN_CATEGORY,),
                consolidation=consolidation,
            )
    return Codebook(variables=tuple(variables), codings=codings)


def _separate_boundaries(b: tuple[float, float, float]) -> tuple[float, float, float]:
    """Nudge tied quartile boundaries apart so quartile_bin stays total."""
    b1, b2, b3 = b
    if b2 <= b1:
        b2 = np.nextafter(b1, np.inf)
    if b3 <= b2:
        b3 = np.nextafter(b2, np.inf)
    return (float(b1), float(b2), float(b3))


def encode(record: ClaimRecord, codebook: Codebook) -> np.ndarray:
    """One-hot input vector (length codebook.n_inputs, no bias entry)."""
    x = np.zeros(codebook.n_inputs, dtype=float)
    for var in codebook.variables:
        token = record.covariates.get(var)
        if token is None:
            continue
        category = codebook.resolve(var, token)
        x[codebook.input_index(var, category)] = 1.0
    return x


def encode_many(records: Sequence[ClaimRecord], codebook: Codebook) -> np.ndarray:
    return np.vstack([encode(r, codebook) for r in records]) if records else \
        np.zeros((0, codebook.n_inputs))


def consolidated_categories(record: ClaimRecord, codebook: Codebook) -> dict[str, str]:
    """Consolidated category per codebook variable present in the record."""
    out = {}
    for var in codebook.variables:
        token = record.covariates.get(var)
        if token is not None:
            out[var] = codebook.resolve(var, token)
    return out


# ---------------------------------------------------------------------------
# claims file format: CSV, one record per line, fixed lowercase columns
# ---------------------------------------------------------------------------

def _parse_event(token: str, line: int) -> bool:
    t = token.strip().lower()
    if t in ("1", "true", "t", "yes"):
        return True
    if t in ("0", "false", "f", "no"):
        return False
    raise ClaimsFileError(f"line {line}: bad event flag {token!r}")


def read_claims(path) -> list[ClaimRecord]:
    """Read the delimited claims file; raises ClaimsFileError with line numbers."""
    records: list[ClaimRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ClaimsFileError("empty claims file")
        missing = set(CLAIMS_COLUMNS) - set(reader.fieldnames)
        if missing:
            raise ClaimsFileError(f"missing columns: {sorted(missing)}")
        for row in reader:
            line = reader.line_num
            covariates = {}
            for var in VARIABLES:
                token = (row.get(var.lower()) or "").strip()
                if token:
                    covariates[var] = token
            try:
                duration = float(row["duration_weeks"])
            except ValueError:
                raise ClaimsFileError(
                    f"line {line}: bad duration_weeks {row['duration_weeks']!r}"
                ) from None
            if duration < 0:
                raise ClaimsFileError(f"line {line}: negative duration {duration}")
            event = _parse_event(row["event"], line)
            try:
                open_date = dt.date.fromisoformat(row["open_date"].strip())
            except ValueError:
                raise ClaimsFileError(
                    f"line {line}: bad open_date {row['open_date']!r}"
                ) from None
            records.append(
                ClaimRecord(
                    covariates=covariates,
                    duration_weeks=duration,
                    event=event,
                    open_date=open_date,
                )
            )
    return records


def write_claims(path, records: Iterable[ClaimRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CLAIMS_COLUMNS)
        for rec in records:
            row = [rec.covariates.get(v, "") for v in VARIABLES]
            row += [repr(rec.duration_weeks), "1" if rec.event else "0",
                    rec.open_date.isoformat()]
            writer.writerow(row)


def modelling_extract(records: Sequence[ClaimRecord]) -> list[ClaimRecord]:
    """Drop zero-duration claims (no time loss; excluded from model fitting)."""
    return [r for r in records if r.duration_weeks > 0]


# ---------------------------------------------------------------------------
# codebook serialization: self-describing JSON with stable key order
# ---------------------------------------------------------------------------

def codebook_to_dict(codebook: Codebook) -> dict:
    doc: dict = {"variables": list(codebook.variables), "codings": {}}
    for var in codebook.variables:
        coding = codebook.codings[var]
        entry: dict = {"categories": list(coding.categories)}
        if coding.consolidation:
            entry["consolidation"] = dict(sorted(coding.consolidation.items()))
        if coding.boundaries is not None:
            entry["boundaries"] = list(coding.boundaries)
        doc["codings"][var] = entry
    return doc


def codebook_from_dict(doc: dict) -> Codebook:
    codings = {}
    for var, entry in doc["codings"].items():
        codings[var] = VariableCoding(
            name=var,
            categories=tuple(entry["categories"]),
            consolidation=dict(entry.get("consolidation", {})),
            boundaries=tuple(entry["boundaries"]) if "boundaries" in entry else None,
        )
    return Codebook(variables=tuple(doc["variables"]), codings=codings)


def save_codebook(path, codebook: Codebook) -> None:
    with open(path, "w") as fh:
        json.dump(codebook_to_dict(codebook), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_codebook(path) -> Codebook:
    with open(path) as fh:
        return codebook_from_dict(json.load(fh))
