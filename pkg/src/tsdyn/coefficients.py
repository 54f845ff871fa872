"""Bounded almost periodic scalar coefficients.

Three forms: constants, finite trigonometric sums c0 + sum(amp * trig(freq*t)),
and tabulated samples.  Trig sums carry exact analytic bounds c0 +/- sum|amp|;
tabulated forms use the table extrema; anything without analytic bounds falls
back to sampling when a grid is supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["TrigTerm", "Coefficient", "Constant", "TrigSum", "Tabulated"]


@dataclass(frozen=True)
class TrigTerm:
    amplitude: float
    frequency: float
    kind: str  # "sin" or "cos"

    def __post_init__(self) -> None:
        if self.kind not in ("sin", "cos"):
            raise ValueError(f"trig kind must be 'sin' or 'cos', got {self.kind!r}")

    def __call__(self, t: float) -> float:
        f = math.sin if self.kind == "sin" else math.cos
        return self.amplitude * f(self.frequency * t)


class Coefficient:
    """Scalar coefficient with optional analytic sup/inf."""

    analytic_sup: float | None = None
    analytic_inf: float | None = None

    def __call__(self, t: float) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def bounds(self, sample_times=None) -> tuple[float, float]:
        """(inf, sup): analytic when available, else sampled over sample_times."""
        if self.analytic_inf is not None and self.analytic_sup is not None:
            return self.analytic_inf, self.analytic_sup
        if sample_times is None:
            raise ValueError("no analytic bounds; supply sample times")
        vals = [self(float(t)) for t in np.asarray(sample_times)]
        return min(vals), max(vals)

    def describe(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


class Constant(Coefficient):
    def __init__(self, value: float):
        self.value = float(value)
        self.analytic_sup = self.value
        self.analytic_inf = self.value

    def __call__(self, t: float) -> float:
        return self.value

    def describe(self) -> dict:
        return {"const": self.value}

    def __repr__(self) -> str:
        return f"Constant({self.value!r})"


class TrigSum(Coefficient):
    """c0 + sum of amp_i * trig_i(freq_i * t).

    The analytic bounds c0 +/- sum|amp_i| are attained in the limit for
    rationally independent frequencies, which is how they are used here.
    """

    def __init__(self, c0: float, terms=()):
        self.c0 = float(c0)
        self.terms = tuple(
            t if isinstance(t, TrigTerm) else TrigTerm(*t) for t in terms
        )
        spread = sum(abs(t.amplitude) for t in self.terms)
        self.analytic_sup = self.c0 + spread
        self.analytic_inf = self.c0 - spread

    def __call__(self, t: float) -> float:
        return self.c0 + sum(term(t) for term in self.terms)

    def describe(self) -> dict:
        return {
            "c0": self.c0,
            "terms": [
                {"amp": t.amplitude, "freq": t.frequency, "trig": t.kind}
                for t in self.terms
            ],
        }

    def __repr__(self) -> str:
        return f"TrigSum({self.c0!r}, {self.terms!r})"


class Tabulated(Coefficient):
    """Linear interpolation through sample points, held constant outside."""

    def __init__(self, times, values):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if len(self.times) != len(self.values) or len(self.times) == 0:
            raise ValueError("need matching, nonempty times and values")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("table times must be strictly increasing")
        self.analytic_sup = float(np.max(self.values))
        self.analytic_inf = float(np.min(self.values))

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))

    def describe(self) -> dict:
        return {"times": self.times.tolist(), "values": self.values.tolist()}

    def __repr__(self) -> str:
        return f"Tabulated(<{len(self.times)} samples>)"
