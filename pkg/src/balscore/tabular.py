"""Categorical spaces, count tables and exact-rational joint distributions of (X, Z, Y).

Z (treatment) and Y (outcome) are binary; X is a finite categorical confounder.
Cells are stored as nested tuples indexed ``[x][z][y]``. All probabilities are
``fractions.Fraction`` so equalities between conditionals are decided exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import EmptyInput, InvalidValue, PositivityViolation

Record = tuple[str, int, int]
Stratum = Union[int, str]
Number = Union[Fraction, int, float, str]

CSV_HEADER = "x,z,y"


def as_fraction(value: Number) -> Fraction:
    """Coerce to an exact rational. Floats are read by their shortest decimal repr,
    so ``0.401`` becomes ``401/1000`` rather than the binary expansion."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidValue(f"boolean is not a probability: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidValue(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidValue(f"cannot parse rational {value!r}") from exc
    raise InvalidValue(f"unsupported numeric type {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    """Serialize as ``num/den`` in lowest terms (integers keep ``/1``)."""
    return f"{q.numerator}/{q.denominator}"


def format_decimal(q: Fraction) -> str:
    return format(float(q), ".17g")


@dataclass(frozen=True)
class CategoricalSpace:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise InvalidValue("a categorical space needs at least one label")
        for label in labels:
            if not isinstance(label, str) or not label:
                raise InvalidValue(f"stratum labels must be non-empty strings, got {label!r}")
        if len(set(labels)) != len(labels):
            raise InvalidValue(f"duplicate stratum labels in {labels}")

    @property
    def cardinality(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, x: Stratum) -> int:
        if isinstance(x, int) and not isinstance(x, bool):
            if not 0 <= x < len(self.labels):
                raise IndexError(f"stratum index {x} out of range")
            return x
        try:
            return self.labels.index(x)
        except ValueError:
            raise KeyError(f"unknown stratum {x!r}") from None


def _check_binary(value, name: str, line: int | None = None) -> int:
    if isinstance(value, bool) or value not in (0, 1):
        raise InvalidValue(f"{name} must be 0 or 1, got {value!r}", line)
    return int(value)


@dataclass(frozen=True)
class ContingencyTable:
    """Observed counts n(x, z, y)."""

    x_space: CategoricalSpace
    counts: tuple[tuple[tuple[int, int], tuple[int, int]], ...]

    def __post_init__(self):
        counts = tuple(
            tuple(tuple(int(c) for c in row[z]) for z in (0, 1)) for row in self.counts
        )
        object.__setattr__(self, "counts", counts)
        if len(counts) != len(self.x_space):
            raise InvalidValue("counts do not match the size of the stratum space")
        if any(c < 0 for row in counts for arm in row for c in arm):
            raise InvalidValue("counts must be non-negative")

    @classmethod
    def from_counts(
        cls, counts: Mapping[tuple[str, int, int], int], labels: Sequence[str] | None = None
    ) -> "ContingencyTable":
        """Build from a sparse ``{(label, z, y): count}`` mapping."""
        space = CategoricalSpace(tuple(labels) if labels is not None else sorted({k[0] for k in counts}))
        cells = [[[0, 0], [0, 0]] for _ in space.labels]
        for (label, z, y), c in counts.items():
            cells[space.index(label)][_check_binary(z, "z")][_check_binary(y, "y")] += c
        return cls(space, cells)

    @property
    def total(self) -> int:
        return sum(c for row in self.counts for arm in row for c in arm)

    def n(self, x: Stratum, z: int, y: int) -> int:
        return self.counts[self.x_space.index(x)][z][y]

    def n_xz(self, x: Stratum, z: int) -> int:
        return sum(self.counts[self.x_space.index(x)][z])

    def n_x(self, x: Stratum) -> int:
        row = self.counts[self.x_space.index(x)]
        return sum(row[0]) + sum(row[1])

    def items(self):
        for i, label in enumerate(self.x_space.labels):
            for z in (0, 1):
                for y in (0, 1):
                    yield (label, z, y), self.counts[i][z][y]


@dataclass(frozen=True)
class Distribution:
    """Exact joint distribution p(x, z, y)."""

    x_space: CategoricalSpace
    p: tuple[tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]], ...]

    def __post_init__(self):
        p = tuple(
            tuple(tuple(as_fraction(v) for v in row[z]) for z in (0, 1)) for row in self.p
        )
        object.__setattr__(self, "p", p)
        if len(p) != len(self.x_space):
            raise InvalidValue("probabilities do not match the size of the stratum space")
        if any(v < 0 for row in p for arm in row for v in arm):
            raise InvalidValue("probabilities must be non-negative")
        total = sum(v for row in p for arm in row for v in arm)
        if total != 1:
            raise InvalidValue(f"probabilities sum to {total}, not 1")

    @classmethod
    def from_factors(
        cls,
        labels: Sequence[str],
        px: Sequence[Number],
        pz1: Sequence[Number],
        py1: Sequence[tuple[Number, Number]],
    ) -> "Distribution":
        """Assemble p(x) p(z|x) p(y|x,z).

        ``pz1[i]`` is p(Z=1|x_i); ``py1[i]`` is the pair
        (p(Y=1|x_i, Z=0), p(Y=1|x_i, Z=1)).
        """
        if not len(labels) == len(px) == len(pz1) == len(py1):
            raise InvalidValue("factor vectors must all have one entry per stratum")
        cells = []
        for w, t, (q0, q1) in zip(px, pz1, py1):
            w, t = as_fraction(w), as_fraction(t)
            arms = []
            for z, q in ((0, as_fraction(q0)), (1, as_fraction(q1))):
                pz = t if z == 1 else 1 - t
                arms.append((w * pz * (1 - q), w * pz * q))
            cells.append(tuple(arms))
        for v in (*map(as_fraction, px), *map(as_fraction, pz1), *(as_fraction(q) for pair in py1 for q in pair)):
            if not 0 <= v <= 1:
                raise InvalidValue(f"factor {v} outside [0, 1]")
        return cls(CategoricalSpace(tuple(labels)), tuple(cells))

    def prob(self, x: Stratum, z: int, y: int) -> Fraction:
        return self.p[self.x_space.index(x)][z][y]

    def p_xz(self, x: Stratum, z: int) -> Fraction:
        return sum(self.p[self.x_space.index(x)][z], Fraction(0))

    def p_x(self, x: Stratum) -> Fraction:
        i = self.x_space.index(x)
        return self.p_xz(i, 0) + self.p_xz(i, 1)

    def to_array(self) -> np.ndarray:
        """Float copy with shape (n_strata, 2, 2); for reporting and float cross-checks."""
        return np.array([[[float(v) for v in arm] for arm in row] for row in self.p], dtype=float)


def from_records(records: Iterable[tuple[str, int, int]]) -> ContingencyTable:
    counter: Counter = Counter()
    for rec in records:
        if len(rec) != 3:
            raise InvalidValue(f"record must be (x, z, y), got {rec!r}")
        label, z, y = rec
        if not isinstance(label, str) or not label:
            raise InvalidValue(f"x label must be a non-empty string, got {label!r}")
        counter[(label, _check_binary(z, "z"), _check_binary(y, "y"))] += 1
    if not counter:
        raise EmptyInput("no records")
    return ContingencyTable.from_counts(counter)


def to_distribution(table: ContingencyTable) -> Distribution:
    total = table.total
    if total == 0:
        raise EmptyInput("table has no observations")
    cells = tuple(
        tuple(tuple(Fraction(c, total) for c in arm) for arm in row) for row in table.counts
    )
    return Distribution(table.x_space, cells)


def table_from_distribution(dist: Distribution) -> ContingencyTable:
    """Smallest integer table whose relative frequencies equal ``dist`` exactly."""
    denoms = [v.denominator for row in dist.p for arm in row for v in arm]
    scale = reduce(math.lcm, denoms, 1)
    cells = tuple(
        tuple(tuple(int(v * scale) for v in arm) for arm in row) for row in dist.p
    )
    g = reduce(math.gcd, (c for row in cells for arm in row for c in arm), 0)
    if g > 1:
        cells = tuple(tuple(tuple(c // g for c in arm) for arm in row) for row in cells)
    return ContingencyTable(dist.x_space, cells)


CONDITIONAL_TARGETS = ("Z|X", "Y|X", "Y|XZ", "X")


def conditional(dist: Distribution, target: str) -> dict:
    """Exact conditionals of the event "= 1".

    ``"X"``    -> {label: p(X=x)}
    ``"Z|X"``  -> {label: p(Z=1 | X=x)}
    ``"Y|X"``  -> {label: p(Y=1 | X=x)}
    ``"Y|XZ"`` -> {(label, z): p(Y=1 | X=x, Z=z)}

    Raises PositivityViolation when a conditioning margin is zero.
    """
    labels = dist.x_space.labels
    if target == "X":
        return {label: dist.p_x(i) for i, label in enumerate(labels)}
    if target in ("Z|X", "Y|X"):
        out = {}
        for i, label in enumerate(labels):
            px = dist.p_x(i)
            if px == 0:
                raise PositivityViolation(label)
            if target == "Z|X":
                out[label] = dist.p_xz(i, 1) / px
            else:
                out[label] = (dist.p[i][0][1] + dist.p[i][1][1]) / px
        return out
    if target == "Y|XZ":
        out = {}
        for i, label in enumerate(labels):
            for z in (0, 1):
                pxz = dist.p_xz(i, z)
                if pxz == 0:
                    raise PositivityViolation(label, z)
                out[(label, z)] = dist.p[i][z][1] / pxz
        return out
    raise ValueError(f"unknown conditional target {target!r}; expected one of {CONDITIONAL_TARGETS}")


def read_csv(path: str | Path) -> list[Record]:
    """Parse the ``x,z,y`` record format. Errors carry 1-based line numbers."""
    with open(path, encoding="utf-8-sig", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise EmptyInput(f"{path}: empty file")
    if lines[0].strip() != CSV_HEADER:
        raise InvalidValue(f"expected header {CSV_HEADER!r}, got {lines[0]!r}", 1)
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise InvalidValue(f"expected 3 comma-separated fields, got {len(fields)}", lineno)
        label, z, y = (f.strip() for f in fields)
        if not label or '"' in label:
            raise InvalidValue(f"bad x label {label!r}", lineno)
        if z not in ("0", "1"):
            raise InvalidValue(f"z must be 0 or 1, got {z!r}", lineno)
        if y not in ("0", "1"):
            raise InvalidValue(f"y must be 0 or 1, got {y!r}", lineno)
        records.append((label, int(z), int(y)))
    if not records:
        raise EmptyInput(f"{path}: no data rows")
    return records


def write_csv(records: Iterable[Record], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for label, z, y in records:
            if "," in label:
                raise InvalidValue(f"x label {label!r} contains a comma")
            fh.write(f"{label},{z},{y}\n")
