"""Exception hierarchy. Every error raised by the package derives from BalscoreError."""

from __future__ import annotations


class BalscoreError(ValueError):
    pass


class EmptyInput(BalscoreError):
    pass


class InvalidValue(BalscoreError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PositivityViolation(BalscoreError):
    """A conditional was requested on an event of probability zero.

    ``arm`` is the treatment arm whose margin vanished, or None when the
    stratum itself has zero mass.
    """

    def __init__(self, stratum: str, arm: int | None = None):
        self.stratum = stratum
        self.arm = arm
        where = f"stratum {stratum!r}" if arm is None else f"stratum {stratum!r}, z={arm}"
        super().__init__(f"positivity violated at {where}")


class InvalidPartition(BalscoreError):
    pass


class InvalidPlan(BalscoreError):
    pass


class DegenerateWeight(BalscoreError):
    def __init__(self, stratum: str, score):
        self.stratum = stratum
        self.score = score
        super().__init__(f"score {score} at stratum {stratum!r} gives an infinite weight")


class InfeasiblePlant(BalscoreError):
    pass


class TooManyStrata(BalscoreError):
    pass
