"""Exact derivative propagation for the structure function lambda(z).

Everything downstream (connection entries, curvature, biharmonicity
criteria) needs lambda together with its first three z-derivatives at a
point.  A ``Jet3`` stores ``(f, f', f'', f''')`` and pushes the quadruple
through arithmetic with truncated Taylor rules, so no finite differences
enter the geometry pipeline.  Finite differences appear only in
:func:`fd_crosscheck`, which is the independent oracle used by the tests.

Derived coefficient functions built from a family's jet (for example
lambda'/(2 lambda), which requires the jet of lambda') are exact through
second order; their third-order slot would need the fourth derivative of
lambda and is truncated to zero by :func:`derivative`.  Consumers must not
read past the order they can justify; the package never does.
"""

from __future__ import annotations

import bisect
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import mpmath
import numpy as np

__all__ = [
    "Jet3",
    "JetArithmeticError",
    "DomainError",
    "constant",
    "variable",
    "derivative",
    "log",
    "sqrt",
    "recip",
    "power",
    "sin",
    "cos",
    "LambdaFamily",
    "PowerFamily",
    "SqrtLinearFamily",
    "ConstantFamily",
    "TableFamily",
    "fd_crosscheck",
]


class JetArithmeticError(ValueError):
    """Raised for jet operations that leave the algebra (1/0, log of a
    nonpositive value, fractional power of a nonpositive value)."""


class DomainError(ValueError):
    """Raised when a z value falls outside a family's open interval."""


@dataclass(frozen=True, slots=True)
class Jet3:
    """Value and first three derivatives of a scalar function at a point."""

    v0: float
    v1: float = 0.0
    v2: float = 0.0
    v3: float = 0.0

    # -- ring operations -------------------------------------------------

    def __add__(self, other: "Jet3 | float | int") -> "Jet3":
        o = _as_jet(other)
        return Jet3(self.v0 + o.v0, self.v1 + o.v1, self.v2 + o.v2, self.v3 + o.v3)

    __radd__ = __add__

    def __neg__(self) -> "Jet3":
        return Jet3(-self.v0, -self.v1, -self.v2, -self.v3)

    def __sub__(self, other: "Jet3 | float | int") -> "Jet3":
        return self + (-_as_jet(other))

    def __rsub__(self, other: "Jet3 | float | int") -> "Jet3":
        return _as_jet(other) + (-self)

    def __mul__(self, other: "Jet3 | float | int") -> "Jet3":
        o = _as_jet(other)
        # Leibniz rule on derivatives, truncated at order 3.
        return Jet3(
            self.v0 * o.v0,
            self.v0 * o.v1 + self.v1 * o.v0,
            self.v0 * o.v2 + 2.0 * self.v1 * o.v1 + self.v2 * o.v0,
            self.v0 * o.v3 + 3.0 * self.v1 * o.v2 + 3.0 * self.v2 * o.v1 + self.v3 * o.v0,
        )

    __rmul__ = __mul__

    def __truediv__(self, other: "Jet3 | float | int") -> "Jet3":
        return self * recip(_as_jet(other))

    def __rtruediv__(self, other: "Jet3 | float | int") -> "Jet3":
        return _as_jet(other) * recip(self)

    def __pow__(self, exponent: float) -> "Jet3":
        return power(self, exponent)

    # -- helpers ----------------------------------------------------------

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.v0, self.v1, self.v2, self.v3)

    def max_abs(self) -> float:
        return max(abs(self.v0), abs(self.v1), abs(self.v2), abs(self.v3))


def _as_jet(value: "Jet3 | float | int") -> Jet3:
    if isinstance(value, Jet3):
        return value
    return Jet3(float(value))


def constant(value: float) -> Jet3:
    return Jet3(float(value))


def variable(z: float) -> Jet3:
    """Jet of the identity function at z."""
    return Jet3(float(z), 1.0)


def derivative(j: Jet3) -> Jet3:
    """Jet of f' given the jet of f.

    The returned third-order slot is unknowable from a third-order jet of
    f and is set to zero; the result is exact through order 2 only.
    """
    return Jet3(j.v1, j.v2, j.v3, 0.0)


def _compose(g: Jet3, f0: float, f1: float, f2: float, f3: float) -> Jet3:
    # Chain rule (Faa di Bruno) through third order: outer derivatives
    # f1..f3 are evaluated at g.v0.
    return Jet3(
        f0,
        f1 * g.v1,
        f1 * g.v2 + f2 * g.v1 * g.v1,
        f1 * g.v3 + 3.0 * f2 * g.v1 * g.v2 + f3 * g.v1 ** 3,
    )


def recip(j: Jet3) -> Jet3:
    if j.v0 == 0.0:
        raise JetArithmeticError(f"reciprocal of jet with zero value: {j}")
    i = 1.0 / j.v0
    return _compose(j, i, -i * i, 2.0 * i ** 3, -6.0 * i ** 4)


def log(j: Jet3) -> Jet3:
    if j.v0 <= 0.0:
        raise JetArithmeticError(f"log of jet with nonpositive value: {j}")
    i = 1.0 / j.v0
    return _compose(j, math.log(j.v0), i, -i * i, 2.0 * i ** 3)


def sqrt(j: Jet3) -> Jet3:
    if j.v0 <= 0.0:
        raise JetArithmeticError(f"sqrt of jet with nonpositive value: {j}")
    r = math.sqrt(j.v0)
    return _compose(j, r, 0.5 / r, -0.25 / (r * j.v0), 0.375 / (r * j.v0 * j.v0))


def power(j: Jet3, exponent: float) -> Jet3:
    """j raised to a real exponent.

    Integer exponents work for any nonzero value; fractional exponents
    require a positive value.
    """
    p = float(exponent)
    if p == 0.0:
        return Jet3(1.0)
    is_integer = p == int(p)
    if j.v0 == 0.0 and p < 0.0:
        raise JetArithmeticError(f"negative power of jet with zero value: {j}")
    if j.v0 <= 0.0 and not is_integer:
        raise JetArithmeticError(
            f"fractional power {p} of jet with nonpositive value: {j}"
        )
    f0 = j.v0 ** p
    f1 = p * j.v0 ** (p - 1.0) if j.v0 != 0.0 or p >= 1.0 else 0.0
    if j.v0 == 0.0:
        # positive integer power of a zero-valued jet: fall back to repeated
        # multiplication to avoid 0**negative in the derivative factors
        out = Jet3(1.0)
        for _ in range(int(p)):
            out = out * j
        return out
    f2 = p * (p - 1.0) * j.v0 ** (p - 2.0)
    f3 = p * (p - 1.0) * (p - 2.0) * j.v0 ** (p - 3.0)
    return _compose(j, f0, f1, f2, f3)


def sin(j: Jet3) -> Jet3:
    sn, cn = math.sin(j.v0), math.cos(j.v0)
    return _compose(j, sn, cn, -sn, -cn)


def cos(j: Jet3) -> Jet3:
    sn, cn = math.sin(j.v0), math.cos(j.v0)
    return _compose(j, cn, -sn, -cn, sn)


# ---------------------------------------------------------------------------
# lambda families
# ---------------------------------------------------------------------------


class LambdaFamily(ABC):
    """A positive structure function lambda on an open z-interval.

    Concrete kinds evaluate the jet analytically (closed forms) or by
    local polynomial interpolation (tables).  ``jet`` enforces the domain.
    """

    @property
    @abstractmethod
    def domain(self) -> tuple[float, float]:
        """Open interval (lo, hi) of admissible z values."""

    @abstractmethod
    def _jet_unchecked(self, z: float) -> Jet3:
        ...

    @abstractmethod
    def describe(self) -> dict:
        """JSON-compatible description used by config echoes."""

    def contains(self, z: float) -> bool:
        lo, hi = self.domain
        return lo < z < hi

    def require(self, z: float) -> None:
        if not self.contains(z):
            lo, hi = self.domain
            raise DomainError(f"z={z!r} outside the family domain ({lo!r}, {hi!r})")

    def jet(self, z: float) -> Jet3:
        self.require(z)
        return self._jet_unchecked(float(z))

    def value(self, z: float) -> float:
        return self.jet(z).v0

    def value_hp(self, z):
        """High-precision value (mpmath), for the finite-difference oracle.

        Table-backed families have no closed form and raise.
        """
        raise NotImplementedError


@dataclass(frozen=True)
class PowerFamily(LambdaFamily):
    """lambda(z) = z**(-n) on z > 0."""

    n: float

    def __post_init__(self):
        if not math.isfinite(self.n):
            raise ValueError(f"power exponent must be finite, got {self.n}")

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, math.inf)

    def _jet_unchecked(self, z: float) -> Jet3:
        n = self.n
        return Jet3(
            z ** (-n),
            -n * z ** (-n - 1.0),
            n * (n + 1.0) * z ** (-n - 2.0),
            -n * (n + 1.0) * (n + 2.0) * z ** (-n - 3.0),
        )

    def value_hp(self, z):
        return mpmath.mpf(z) ** (-self.n)

    def describe(self) -> dict:
        return {"kind": "power", "n": self.n}


@dataclass(frozen=True)
class SqrtLinearFamily(LambdaFamily):
    """lambda(z) = sqrt(1 - a*z - b) where the radicand is positive."""

    a: float
    b: float

    def __post_init__(self):
        if self.a == 0.0 and 1.0 - self.b <= 0.0:
            raise ValueError(
                f"sqrt_linear with a=0 needs 1-b > 0, got b={self.b}"
            )

    @property
    def domain(self) -> tuple[float, float]:
        if self.a > 0.0:
            return (-math.inf, (1.0 - self.b) / self.a)
        if self.a < 0.0:
            return ((1.0 - self.b) / self.a, math.inf)
        return (-math.inf, math.inf)

    def _jet_unchecked(self, z: float) -> Jet3:
        a = self.a
        u = 1.0 - a * z - self.b
        lam = math.sqrt(u)
        return Jet3(
            lam,
            -a / (2.0 * lam),
            -a * a / (4.0 * lam * u),
            -3.0 * a ** 3 / (8.0 * lam * u * u),
        )

    def value_hp(self, z):
        return mpmath.sqrt(1 - mpmath.mpf(self.a) * z - mpmath.mpf(self.b))

    def describe(self) -> dict:
        return {"kind": "sqrt_linear", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class ConstantFamily(LambdaFamily):
    """Constant positive lambda.

    Geometrically degenerate (no proper biharmonic roots exist); kept for
    exercising the degenerate code paths in tests.
    """

    value_const: float

    def __post_init__(self):
        if not (self.value_const > 0.0 and math.isfinite(self.value_const)):
            raise ValueError(f"constant family needs a positive value, got {self.value_const}")

    @property
    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def _jet_unchecked(self, z: float) -> Jet3:
        return Jet3(self.value_const)

    def value_hp(self, z):
        return mpmath.mpf(self.value_const)

    def describe(self) -> dict:
        return {"kind": "constant", "value": self.value_const}


_STENCIL = 6  # nodes per local interpolation window


@dataclass(frozen=True)
class TableFamily(LambdaFamily):
    """lambda given by samples (z_k, lambda_k), interpolated locally.

    Each evaluation fits a quintic through the six nearest nodes and reads
    the value and first three derivatives off the fitted coefficients.
    Accuracy degrades one power of the grid spacing per derivative order,
    so checks against table-backed families use looser tolerances than the
    closed-form kinds.
    """

    z_grid: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.z_grid) != len(self.values):
            raise ValueError("z_grid and values must have equal length")
        if len(self.z_grid) < _STENCIL:
            raise ValueError(f"table needs at least {_STENCIL} samples")
        zs = self.z_grid
        if any(zs[i] >= zs[i + 1] for i in range(len(zs) - 1)):
            raise ValueError("z_grid must be strictly increasing")
        if any(v <= 0.0 for v in self.values):
            raise ValueError("table values must be positive (lambda > 0)")

    @classmethod
    def from_arrays(cls, zs, lams) -> "TableFamily":
        return cls(tuple(float(z) for z in zs), tuple(float(v) for v in lams))

    @property
    def domain(self) -> tuple[float, float]:
        return (self.z_grid[0], self.z_grid[-1])

    def _window(self, z: float) -> tuple[int, int]:
        idx = bisect.bisect_left(self.z_grid, z)
        lo = min(max(idx - _STENCIL // 2, 0), len(self.z_grid) - _STENCIL)
        return lo, lo + _STENCIL

    def _jet_unchecked(self, z: float) -> Jet3:
        lo, hi = self._window(z)
        zw = np.asarray(self.z_grid[lo:hi])
        vw = np.asarray(self.values[lo:hi])
        h = (zw[-1] - zw[0]) / (_STENCIL - 1)
        t = (zw - z) / h  # centered, scaled abscissae for conditioning
        # fitting the deviation from the window mean keeps the rounding
        # error in the higher coefficients proportional to the local
        # variation rather than to |lambda| (matters once it is divided
        # by h^2 and h^3 below)
        shift = float(vw.mean())
        vander = np.vander(t, _STENCIL, increasing=True)
        coef = np.linalg.solve(vander, vw - shift)
        return Jet3(
            float(coef[0] + shift),
            float(coef[1] / h),
            float(2.0 * coef[2] / h ** 2),
            float(6.0 * coef[3] / h ** 3),
        )

    def interpolation_error_estimate(self) -> dict[int, float]:
        """Crude per-order error bound for the local quintic scheme.

        Estimates max |lambda^(6)| from sixth differences of the samples
        and scales by the window width; intended for sanity reporting, not
        sharp analysis.
        """
        zs = np.asarray(self.z_grid)
        vs = np.asarray(self.values)
        h = float(np.max(np.diff(zs)))
        d6 = np.diff(vs, 6) / h ** 6 if len(vs) > 6 else np.array([0.0])
        f6 = float(np.max(np.abs(d6))) if d6.size else 0.0
        # interpolation error ~ f6/6! * prod|z - z_i|, window spans 5h
        return {k: f6 / 720.0 * (5.0 * h) ** (6 - k) * math.factorial(k) for k in range(4)}

    def describe(self) -> dict:
        return {
            "kind": "table",
            "samples": len(self.z_grid),
            "z_range": [self.z_grid[0], self.z_grid[-1]],
        }


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------


def fd_crosscheck(family: LambdaFamily, z: float, step: float = 1e-4) -> float:
    """Max relative discrepancy between jet derivatives and central
    finite differences of orders 1..3.

    Closed-form families are sampled in extended precision so the
    comparison isolates truncation error of the stencils; in double
    precision the third-difference roundoff (~eps/h^3) would swamp the
    quantity being measured.  Table families fall back to double
    precision and should only be checked against loose tolerances.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    for off in (-3.0, 3.0):
        if not family.contains(z + off * step):
            lo, hi = family.domain
            raise DomainError(
                f"fd_crosscheck needs z +/- 3*step inside ({lo!r}, {hi!r}); "
                f"got z={z!r}, step={step!r}"
            )
    jet = family.jet(z)
    try:
        with mpmath.workdps(50):
            h = mpmath.mpf(step)
            zz = mpmath.mpf(z)
            f = {k: family.value_hp(zz + k * h) for k in (-2, -1, 0, 1, 2)}
            d1 = (f[1] - f[-1]) / (2 * h)
            d2 = (f[1] - 2 * f[0] + f[-1]) / h ** 2
            d3 = (f[2] - 2 * f[1] + 2 * f[-1] - f[-2]) / (2 * h ** 3)
            fd = (float(d1), float(d2), float(d3))
    except NotImplementedError:
        h = float(step)
        f = {k: family.value(z + k * h) for k in (-2, -1, 0, 1, 2)}
        fd = (
            (f[1] - f[-1]) / (2 * h),
            (f[1] - 2 * f[0] + f[-1]) / h ** 2,
            (f[2] - 2 * f[1] + 2 * f[-1] - f[-2]) / (2 * h ** 3),
        )
    worst = 0.0
    for got, want in zip((jet.v1, jet.v2, jet.v3), fd):
        scale = max(1.0, abs(got), abs(want))
        worst = max(worst, abs(got - want) / scale)
    return worst
