"""Least-squares slope fitting for log-log scaling estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateFit


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


def fit_line(xs, ys) -> SlopeFit:
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    n = len(xs)
    if n != len(ys) or n < 2:
        raise DegenerateFit("need at least two points to fit a line")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        raise DegenerateFit("x values are all identical")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    ss_res = math.fsum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = math.fsum((y - my) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return SlopeFit(slope=slope, intercept=intercept, r_squared=r2, n_points=n)


def rms_residual(fit: SlopeFit, xs, ys) -> float:
    n = len(xs)
    ss = math.fsum((float(y) - fit.predict(float(x))) ** 2 for x, y in zip(xs, ys))
    return math.sqrt(ss / n)
