"""First-jet calculus for algebroid sections.

A jet section is kept in split form: a base section X together with a
correction matrix phi mapping tangent vectors into the algebroid,
``phi[b][i]`` being the e_b-component of phi(d/dx^i).  The prolongation
of X is (X, 0); purely vertical elements are (0, phi).  The bracket is
the semidirect-product formula: fiberwise commutator of the corrections
through the anchor, plus the derivative action of each base on the other
correction.

This module is one of two independent routes to the compatibility
defect of a connection (the other lives in :mod:`cartankit.cartan`);
they are compared against each other in the acceptance battery and must
never be merged.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .algebroid import Algebroid, anchor_apply, bracket
from .bundles import Section, as_expr
from .connections import TMConnection
from .symcore import Const, Expr, canon, diff

__all__ = [
    "JetSection",
    "jet_scale",
    "kappa",
    "jet_bracket",
    "adjoint_action",
    "splitting_from_connection",
    "splitting_curvature",
    "anchor_pushforward",
]


class JetSection:
    """Split-form jet of an algebroid section: (base, correction)."""

    def __init__(self, g: Algebroid, base: Section, correction):
        if base.chart != g.chart or base.rank != g.rank:
            raise ValueError("base section does not fit the algebroid")
        corr = np.array(correction, dtype=object)
        if corr.shape != (g.rank, g.chart.dim):
            raise ValueError(
                f"correction must have shape ({g.rank}, {g.chart.dim}), "
                f"got {corr.shape}"
            )
        out = np.empty(corr.shape, dtype=object)
        for idx in np.ndindex(*corr.shape):
            out[idx] = as_expr(corr[idx], g.chart)
        self.g = g
        self.base = base
        self.correction = out

    @classmethod
    def prolong(cls, g: Algebroid, X: Section) -> "JetSection":
        zero = np.empty((g.rank, g.chart.dim), dtype=object)
        zero[...] = Const(0)
        return cls(g, X, zero)

    @classmethod
    def vertical(cls, g: Algebroid, correction) -> "JetSection":
        return cls(g, g.zero_section(), correction)

    def correction_column(self, i: int) -> Section:
        """phi applied to the i-th coordinate vector field, as a section."""
        return Section(
            self.g.chart, [self.correction[b, i] for b in range(self.g.rank)], "g"
        )

    def apply_correction(self, V: Section) -> Section:
        """phi(V) for a vector field V."""
        if V.frame != "tm":
            raise ValueError("correction applies to vector fields")
        out = []
        for b in range(self.g.rank):
            total = Const(0)
            for i in range(self.g.chart.dim):
                total = total + self.correction[b, i] * V.components[i]
            out.append(total)
        return Section(self.g.chart, out, "g")

    def __add__(self, other: "JetSection") -> "JetSection":
        if other.g is not self.g and (
            other.g.chart != self.g.chart or other.g.rank != self.g.rank
        ):
            raise ValueError("jet sections of different algebroids")
        corr = np.empty(self.correction.shape, dtype=object)
        for idx in np.ndindex(*corr.shape):
            corr[idx] = canon(self.correction[idx] + other.correction[idx])
        return JetSection(self.g, self.base + other.base, corr)

    def __neg__(self) -> "JetSection":
        corr = np.empty(self.correction.shape, dtype=object)
        for idx in np.ndindex(*corr.shape):
            corr[idx] = canon(-self.correction[idx])
        return JetSection(self.g, -self.base, corr)

    def __sub__(self, other: "JetSection") -> "JetSection":
        return self + (-other)

    def __repr__(self):
        return f"<jet base={self.base!r}>"


def jet_scale(J: JetSection, f) -> JetSection:
    """Module structure: f (X, phi) = (f X, f phi - df (x) X).

    The df-term keeps split forms honest: scaling the prolongation of X
    by a non-constant function is no longer a prolongation, and the
    correction absorbs exactly the discrepancy.
    """
    g = J.g
    f = as_expr(f, g.chart)
    corr = np.empty(J.correction.shape, dtype=object)
    for b in range(g.rank):
        for i, name in enumerate(g.chart.coords):
            corr[b, i] = canon(
                f * J.correction[b, i] - diff(f, name) * J.base.components[b]
            )
    return JetSection(g, J.base.scale(f), corr)


def kappa(g: Algebroid, X: Section, phi) -> np.ndarray:
    """Derivative action of a section on a correction matrix.

    (kappa_X phi)(V) = [X, phi(V)] + phi([V, #X]); returned columnwise
    over the coordinate fields V = d/dx^i.
    """
    phi = np.array(phi, dtype=object)
    if phi.shape != (g.rank, g.chart.dim):
        raise ValueError("phi has the wrong shape")
    chart = g.chart
    anchor_X = anchor_apply(g, X)
    out = np.empty(phi.shape, dtype=object)
    for i, name in enumerate(chart.coords):
        col = Section(chart, [phi[b, i] for b in range(g.rank)], "g")
        first = bracket(g, X, col)
        for b in range(g.rank):
            total = first.components[b]
            # [d/dx^i, #X]^k = d_i (#X)^k
            for k in range(chart.dim):
                total = total + phi[b, k] * diff(anchor_X.components[k], name)
            out[b, i] = canon(total)
    return out


def _bob_bracket(g: Algebroid, phi1, phi2) -> np.ndarray:
    """Fiberwise bracket phi2 o # o phi1 - phi1 o # o phi2."""
    r, n = g.rank, g.chart.dim
    out = np.empty((r, n), dtype=object)
    for b in range(r):
        for i in range(n):
            total = Const(0)
            for j in range(n):
                for c in range(r):
                    total = total + phi2[b, j] * g.rho[j, c] * phi1[c, i]
                    total = total - phi1[b, j] * g.rho[j, c] * phi2[c, i]
            out[b, i] = canon(total)
    return out


def jet_bracket(J1: JetSection, J2: JetSection) -> JetSection:
    """Semidirect-product bracket on split jets.

    ([X1,X2], [phi1,phi2]_fib + kappa_{X1} phi2 - kappa_{X2} phi1).
    """
    g = J1.g
    if J2.g is not g and (J2.g.chart != g.chart or J2.g.rank != g.rank):
        raise ValueError("jet sections of different algebroids")
    base = bracket(g, J1.base, J2.base)
    fib = _bob_bracket(g, J1.correction, J2.correction)
    k12 = kappa(g, J1.base, J2.correction)
    k21 = kappa(g, J2.base, J1.correction)
    corr = np.empty(fib.shape, dtype=object)
    for idx in np.ndindex(*fib.shape):
        corr[idx] = canon(fib[idx] + k12[idx] - k21[idx])
    return JetSection(g, base, corr)


def adjoint_action(J: JetSection, Y: Section) -> Section:
    """ad_{(X, phi)} Y = [X, Y] - phi(#Y).

    The minus sign on the vertical part is forced by the requirement
    that this be a representation of the jet algebroid.
    """
    g = J.g
    base_part = bracket(g, J.base, Y)
    vert = J.apply_correction(anchor_apply(g, Y))
    out = [
        canon(base_part.components[b] - vert.components[b])
        for b in range(g.rank)
    ]
    return Section(g.chart, out, "g")


def anchor_pushforward(J: JetSection) -> JetSection:
    """Image of a split jet under the jet prolongation of the anchor.

    Lands in the jet algebroid of TM: base #X, correction # o phi.
    """
    from .algebroid import tangent_algebroid

    g = J.g
    chart = g.chart
    tm = tangent_algebroid(chart)
    base = anchor_apply(g, J.base)
    base = Section(chart, base.components, "g")
    corr = np.empty((chart.dim, chart.dim), dtype=object)
    for k in range(chart.dim):
        for i in range(chart.dim):
            total = Const(0)
            for b in range(g.rank):
                total = total + g.rho[k, b] * J.correction[b, i]
            corr[k, i] = canon(total)
    return JetSection(tm, base, corr)


def splitting_from_connection(
    g: Algebroid, conn: TMConnection, X: Section
) -> JetSection:
    """The jet lift determined by a connection: correction = -(nabla X).

    phi[b][i] = -(d_i X^b + gamma[i,a,b] X^a); parallel sections lift to
    zero-correction jets.
    """
    if conn.chart != g.chart or conn.rank != g.rank:
        raise ValueError("connection does not target the algebroid")
    chart = g.chart
    corr = np.empty((g.rank, chart.dim), dtype=object)
    for b in range(g.rank):
        for i, name in enumerate(chart.coords):
            total = diff(X.components[b], name)
            for a in range(g.rank):
                total = total + conn.gamma[i, a, b] * X.components[a]
            corr[b, i] = canon(-total)
    return JetSection(g, X, corr)


def splitting_curvature(
    g: Algebroid, conn: TMConnection, X: Section, Y: Section
) -> np.ndarray:
    """Bracket defect of the connection's jet lift: [sX, sY] - s[X, Y].

    The base components cancel identically (asserted); the returned
    matrix is the purely vertical part, which vanishes for all section
    pairs exactly when the lift is a morphism of brackets.
    """
    sX = splitting_from_connection(g, conn, X)
    sY = splitting_from_connection(g, conn, Y)
    lhs = jet_bracket(sX, sY)
    rhs = splitting_from_connection(g, conn, bracket(g, X, Y))
    defect = lhs - rhs
    for b in range(g.rank):
        base_defect = canon(defect.base.components[b])
        if base_defect != Const(0):
            raise AssertionError(
                f"splitting curvature has nonzero base component {b}: "
                f"{base_defect}"
            )
    return defect.correction
