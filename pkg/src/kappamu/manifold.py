"""Model spaces on R^2 x I with an orthonormal frame and contact structure.

A space is determined by a positive structure function lambda(z), a sign
choice, and two gauge functions f, h of z.  The frame is

    e1 = d/dx
    e2 = d/dy
    e3 = (+-2y + f(z)) d/dx + (2*lam*x - lam'/(2*lam)*y + h(z)) d/dy + d/dz

declared orthonormal, with Reeb field xi = e1, eta its dual one-form, and
phi e1 = 0, phi e2 = +-e3, phi e3 = -+e2 (upper signs for ``Sign.PLUS``).
The gauge functions drop out of every frame-level quantity; carrying them
through the coordinate computations and watching them cancel is part of
the verification surface.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet3, LambdaFamily

__all__ = [
    "Sign",
    "Gauge",
    "ZeroGauge",
    "PolyGauge",
    "SinGauge",
    "GaugeFunctions",
    "ModelSpace",
    "Point",
    "FrameVector",
    "CoefficientField",
    "frame_fields",
    "frame_at",
    "coordinate_to_frame",
    "frame_to_coordinate",
    "ContactStructure",
    "contact_at",
    "StructureReport",
    "verify_structure",
]

FRAME_DIM = 3


class Sign(enum.Enum):
    """Which of the two model metrics to build (the double sign)."""

    PLUS = "plus"
    MINUS = "minus"

    @property
    def s(self) -> float:
        return 1.0 if self is Sign.PLUS else -1.0

    @classmethod
    def parse(cls, text: str) -> "Sign":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"sign must be 'plus' or 'minus', got {text!r}") from None


# ---------------------------------------------------------------------------
# gauge functions
# ---------------------------------------------------------------------------


class Gauge:
    """A scalar function of z with an exact third-order jet."""

    def jet(self, z: float) -> Jet3:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ZeroGauge(Gauge):
    def jet(self, z: float) -> Jet3:
        return Jet3(0.0)

    def describe(self) -> dict:
        return {"kind": "zero"}


@dataclass(frozen=True)
class PolyGauge(Gauge):
    """Polynomial gauge, coefficients in ascending order."""

    coeffs: tuple[float, ...]

    def jet(self, z: float) -> Jet3:
        zj = jets.variable(z)
        acc = Jet3(0.0)
        for c in reversed(self.coeffs):  # Horner
            acc = acc * zj + c
        return acc

    def describe(self) -> dict:
        return {"kind": "poly", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class SinGauge(Gauge):
    amplitude: float = 1.0

    def jet(self, z: float) -> Jet3:
        return self.amplitude * jets.sin(jets.variable(z))

    def describe(self) -> dict:
        return {"kind": "sin", "amplitude": self.amplitude}


@dataclass(frozen=True)
class GaugeFunctions:
    """The pair (f, h) entering the x- and y-components of e3."""

    f: Gauge = ZeroGauge()
    h: Gauge = ZeroGauge()

    def describe(self) -> dict:
        return {"f": self.f.describe(), "h": self.h.describe()}


# ---------------------------------------------------------------------------
# core value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpace:
    family: LambdaFamily
    sign: Sign
    gauges: GaugeFunctions = field(default_factory=GaugeFunctions)

    @property
    def s(self) -> float:
        return self.sign.s

    def point(self, x: float, y: float, z: float) -> "Point":
        self.family.require(z)
        return Point(float(x), float(y), float(z))

    def describe(self) -> dict:
        return {
            "family": self.family.describe(),
            "sign": self.sign.value,
            "gauges": self.gauges.describe(),
        }


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class FrameVector:
    """A tangent vector by its components in the orthonormal frame."""

    u1: float
    u2: float
    u3: float

    def __add__(self, other: "FrameVector") -> "FrameVector":
        return FrameVector(self.u1 + other.u1, self.u2 + other.u2, self.u3 + other.u3)

    def __sub__(self, other: "FrameVector") -> "FrameVector":
        return FrameVector(self.u1 - other.u1, self.u2 - other.u2, self.u3 - other.u3)

    def __neg__(self) -> "FrameVector":
        return FrameVector(-self.u1, -self.u2, -self.u3)

    def __mul__(self, k: float) -> "FrameVector":
        return FrameVector(k * self.u1, k * self.u2, k * self.u3)

    __rmul__ = __mul__

    def dot(self, other: "FrameVector") -> float:
        return self.u1 * other.u1 + self.u2 * other.u2 + self.u3 * other.u3

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3])

    @classmethod
    def from_array(cls, arr) -> "FrameVector":
        a = np.asarray(arr, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))


FRAME_BASIS = (FrameVector(1, 0, 0), FrameVector(0, 1, 0), FrameVector(0, 0, 1))

ZFn = Callable[[float], Jet3]


@dataclass(frozen=True)
class CoefficientField:
    """A coordinate-component function c(x, y, z) = A(z) + B(z) x + C(z) y.

    Every vector-field component appearing in this package is affine in
    (x, y) with z-dependent coefficients, which makes x/y partials exact
    and z-dependence a jet evaluation.
    """

    fa: ZFn
    fb: ZFn
    fc: ZFn

    def value_jet(self, x: float, y: float, z: float) -> Jet3:
        """Jet in z of the component along the vertical line through (x, y)."""
        return self.fa(z) + self.fb(z) * x + self.fc(z) * y

    def value(self, x: float, y: float, z: float) -> float:
        return self.value_jet(x, y, z).v0

    def dx_jet(self, z: float) -> Jet3:
        return self.fb(z)

    def dy_jet(self, z: float) -> Jet3:
        return self.fc(z)

    @staticmethod
    def const(value: float) -> "CoefficientField":
        j = Jet3(float(value))
        zero = Jet3(0.0)
        return CoefficientField(lambda z: j, lambda z: zero, lambda z: zero)

    @staticmethod
    def combine(
        fields: Sequence["CoefficientField"], weights: Sequence[float]
    ) -> "CoefficientField":
        """Linear combination with constant weights."""
        pairs = [(w, f) for w, f in zip(weights, fields) if w != 0.0]
        if not pairs:
            return CoefficientField.const(0.0)

        def mk(attr: str) -> ZFn:
            def fn(z: float) -> Jet3:
                acc = Jet3(0.0)
                for w, f in pairs:
                    acc = acc + w * getattr(f, attr)(z)
                return acc

            return fn

        return CoefficientField(mk("fa"), mk("fb"), mk("fc"))


FieldTriple = tuple[CoefficientField, CoefficientField, CoefficientField]


# ---------------------------------------------------------------------------
# frame construction
# ---------------------------------------------------------------------------


def frame_fields(space: ModelSpace) -> tuple[FieldTriple, FieldTriple, FieldTriple]:
    """Coordinate components of (e1, e2, e3) as coefficient fields."""
    zero = CoefficientField.const(0.0)
    one = CoefficientField.const(1.0)
    fam = space.family
    s = space.s

    e3_x = CoefficientField(
        fa=space.gauges.f.jet,
        fb=lambda z: Jet3(0.0),
        fc=lambda z: Jet3(2.0 * s),
    )

    def two_lambda(z: float) -> Jet3:
        return 2.0 * fam.jet(z)

    def minus_logderiv_half(z: float) -> Jet3:
        lam = fam.jet(z)
        return -jets.derivative(lam) / (2.0 * lam)

    e3_y = CoefficientField(fa=space.gauges.h.jet, fb=two_lambda, fc=minus_logderiv_half)

    e1 = (one, zero, zero)
    e2 = (zero, one, zero)
    e3 = (e3_x, e3_y, one)
    return (e1, e2, e3)


def frame_at(space: ModelSpace, p: Point) -> np.ndarray:
    """3x3 matrix whose rows are the coordinate components of e1, e2, e3."""
    space.family.require(p.z)
    (e1, e2, e3) = frame_fields(space)
    rows = []
    for triple in (e1, e2, e3):
        rows.append([comp.value(p.x, p.y, p.z) for comp in triple])
    return np.array(rows)


def coordinate_to_frame(space: ModelSpace, p: Point, components) -> FrameVector:
    """Express a vector given in d/dx, d/dy, d/dz components in the frame.

    The frame matrix is unit triangular in the (e3-last) ordering, so the
    conversion is an exact two-step substitution.
    """
    v = np.asarray(components, dtype=float)
    m = frame_at(space, p)
    u3 = v[2]
    u2 = v[1] - u3 * m[2, 1]
    u1 = v[0] - u3 * m[2, 0]
    return FrameVector(float(u1), float(u2), float(u3))


def frame_to_coordinate(space: ModelSpace, p: Point, v: FrameVector) -> np.ndarray:
    m = frame_at(space, p)
    return v.u1 * m[0] + v.u2 * m[1] + v.u3 * m[2]


# ---------------------------------------------------------------------------
# contact structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContactStructure:
    """Reeb field, dual one-form, and phi in frame components."""

    xi: FrameVector
    phi: np.ndarray  # phi[m, j]: (phi u)_m = phi[m, j] u_j

    def eta(self, v: FrameVector) -> float:
        return v.u1

    def apply_phi(self, v: FrameVector) -> FrameVector:
        return FrameVector.from_array(self.phi @ v.as_array())


def contact_at(space: ModelSpace, p: Point | None = None) -> ContactStructure:
    """The contact data; constant in frame components, p is accepted for
    interface symmetry with the other point operations."""
    s = space.s
    phi = np.zeros((3, 3))
    phi[2, 1] = s  # phi e2 = +- e3
    phi[1, 2] = -s  # phi e3 = -+ e2
    return ContactStructure(xi=FrameVector(1.0, 0.0, 0.0), phi=phi)


# ---------------------------------------------------------------------------
# brackets of coefficient fields (used here and by the tensor kernel)
# ---------------------------------------------------------------------------


def bracket_coordinate_jets(
    X: FieldTriple, Y: FieldTriple, x: float, y: float, z: float
) -> tuple[Jet3, Jet3, Jet3]:
    """Coordinate components of [X, Y] as jets in z along the vertical line.

    [X,Y]^k = sum_j X^j dY^k/dj - Y^j dX^k/dj; x/y partials are exact
    coefficient reads and z-partials are jet shifts (exact through order 2).
    """
    xvals = [comp.value_jet(x, y, z) for comp in X]
    yvals = [comp.value_jet(x, y, z) for comp in Y]
    out = []
    for k in range(FRAME_DIM):
        dY = (Y[k].dx_jet(z), Y[k].dy_jet(z), jets.derivative(yvals[k]))
        dX = (X[k].dx_jet(z), X[k].dy_jet(z), jets.derivative(xvals[k]))
        acc = Jet3(0.0)
        for j in range(FRAME_DIM):
            acc = acc + xvals[j] * dY[j] - yvals[j] * dX[j]
        out.append(acc)
    return tuple(out)


def bracket_frame_jets(
    space: ModelSpace, X: FieldTriple, Y: FieldTriple, x: float, y: float, z: float
) -> tuple[Jet3, Jet3, Jet3]:
    """Frame components of [X, Y] as jets in z."""
    w = bracket_coordinate_jets(X, Y, x, y, z)
    _, _, e3 = frame_fields(space)
    a3 = e3[0].value_jet(x, y, z)
    b3 = e3[1].value_jet(x, y, z)
    u3 = w[2]
    u2 = w[1] - u3 * b3
    u1 = w[0] - u3 * a3
    return (u1, u2, u3)


def _phi_image_fields(space: ModelSpace) -> list[FieldTriple]:
    """Coordinate fields of phi(e_i) for the three frame vectors."""
    base = frame_fields(space)
    contact = contact_at(space)
    images = []
    for i in range(FRAME_DIM):
        weights = contact.phi[:, i]  # phi e_i = sum_m phi[m, i] e_m
        triple = tuple(
            CoefficientField.combine([base[m][k] for m in range(FRAME_DIM)], weights)
            for k in range(FRAME_DIM)
        )
        images.append(triple)
    return images


# ---------------------------------------------------------------------------
# structure verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StructureReport:
    """Worst-case residuals of the defining contact-metric relations at a
    point, plus the (expected nonzero) normality defect."""

    eta_xi: float
    phi_square: float
    compatibility: float
    contact_condition: float
    sasakian_defect: float

    def contact_residuals(self) -> dict[str, float]:
        return {
            "eta_xi": self.eta_xi,
            "phi_square": self.phi_square,
            "compatibility": self.compatibility,
            "contact_condition": self.contact_condition,
        }

    def passes(self, tol: float) -> bool:
        return all(r < tol for r in self.contact_residuals().values())


def verify_structure(space: ModelSpace, p: Point, tol: float = 1e-9) -> StructureReport:
    """Check the contact-metric axioms from the coordinate-level frame.

    eta(xi) = 1, phi^2 = -I + eta (x) xi, metric phi-compatibility, and the
    contact condition d eta(X, Y) = g(X, phi Y) with d eta evaluated through
    Lie brackets of the actual coefficient fields.  The normality defect
    [phi, phi] + 2 d eta (x) xi is reported as a magnitude; it is expected
    to stay away from zero for every space built here.
    """
    space.family.require(p.z)
    contact = contact_at(space)
    xi = contact.xi
    phi = contact.phi

    eta_xi = abs(contact.eta(xi) - 1.0)

    phi_square = 0.0
    for i, ei in enumerate(FRAME_BASIS):
        lhs = FrameVector.from_array(phi @ (phi @ ei.as_array()))
        rhs = -ei + contact.eta(ei) * xi
        phi_square = max(phi_square, (lhs - rhs).norm())

    compatibility = 0.0
    for i, ei in enumerate(FRAME_BASIS):
        for j, ej in enumerate(FRAME_BASIS):
            lhs = contact.apply_phi(ei).dot(contact.apply_phi(ej))
            rhs = ei.dot(ej) - contact.eta(ei) * contact.eta(ej)
            compatibility = max(compatibility, abs(lhs - rhs))

    base = frame_fields(space)
    brackets = {}
    for i in range(FRAME_DIM):
        for j in range(FRAME_DIM):
            if i < j:
                jetvals = bracket_frame_jets(space, base[i], base[j], p.x, p.y, p.z)
                brackets[(i, j)] = FrameVector(*(jv.v0 for jv in jetvals))
            elif i == j:
                brackets[(i, j)] = FrameVector(0.0, 0.0, 0.0)
            else:
                brackets[(i, j)] = -brackets[(j, i)]

    def d_eta(i: int, j: int) -> float:
        # (1/2)(X eta(Y) - Y eta(X) - eta([X, Y])); the first two terms
        # vanish because eta of a frame vector is a constant component.
        return -0.5 * contact.eta(brackets[(i, j)])

    contact_condition = 0.0
    for i, ei in enumerate(FRAME_BASIS):
        for j, ej in enumerate(FRAME_BASIS):
            if i == j:
                continue
            contact_condition = max(
                contact_condition, abs(d_eta(i, j) - ei.dot(contact.apply_phi(ej)))
            )

    phi_images = _phi_image_fields(space)

    def frame_bracket(Xt: FieldTriple, Yt: FieldTriple) -> FrameVector:
        jv = bracket_frame_jets(space, Xt, Yt, p.x, p.y, p.z)
        return FrameVector(*(j.v0 for j in jv))

    sasakian_defect = 0.0
    for i in range(FRAME_DIM):
        for j in range(i + 1, FRAME_DIM):
            phi2 = lambda v: FrameVector.from_array(phi @ (phi @ v.as_array()))
            nij = (
                phi2(brackets[(i, j)])
                + frame_bracket(phi_images[i], phi_images[j])
                - contact.apply_phi(frame_bracket(phi_images[i], base[j]))
                - contact.apply_phi(frame_bracket(base[i], phi_images[j]))
                + (2.0 * d_eta(i, j)) * xi
            )
            sasakian_defect = max(sasakian_defect, nij.norm())

    return StructureReport(
        eta_xi=eta_xi,
        phi_square=phi_square,
        compatibility=compatibility,
        contact_condition=contact_condition,
        sasakian_defect=sasakian_defect,
    )
