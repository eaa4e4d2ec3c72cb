"""Named growth schedules for signal levels and direction counts.

Scale sequences (spike levels as a function of n, outlier-direction counts
and variance levels as a function of d) are kept as small declarative
objects so they can round-trip through JSON configs.
"""

from dataclasses import dataclass

from .errors import ConfigurationError

_KINDS = ("constant", "power", "linear_over")


@dataclass(frozen=True)
class Schedule:
    """A scalar function of an integer size.

    kind:
      constant    -> coef
      power       -> coef * x**exponent
      linear_over -> coef * x / divisor(x)   (divisor is another Schedule)
    """

    kind: str
    coef: float = 1.0
    exponent: float = 1.0
    divisor: "Schedule | None" = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "linear_over" and self.divisor is None:
            raise ConfigurationError("linear_over schedule needs a divisor schedule")

    def __call__(self, x: int) -> float:
        if self.kind == "constant":
            return self.coef
        if self.kind == "power":
            return self.coef * float(x) ** self.exponent
        return self.coef * float(x) / self.divisor(x)

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "coef": self.coef}
        if self.kind == "power":
            doc["exponent"] = self.exponent
        if self.kind == "linear_over":
            doc["divisor"] = self.divisor.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Schedule":
        divisor = doc.get("divisor")
        return cls(
            kind=doc["kind"],
            coef=float(doc.get("coef", 1.0)),
            exponent=float(doc.get("exponent", 1.0)),
            divisor=cls.from_json(divisor) if divisor else None,
        )


def constant(value: float) -> Schedule:
    return Schedule("constant", coef=value)


def power(exponent: float, coef: float = 1.0) -> Schedule:
    return Schedule("power", coef=coef, exponent=exponent)


def linear_over(coef: float, divisor: Schedule) -> Schedule:
    """coef * x / divisor(x); used for variance levels tied to a count schedule."""
    return Schedule("linear_over", coef=coef, divisor=divisor)
