"""Lie algebroids over a chart, their axioms, and builder families.

An algebroid is stored as raw frame data: anchor components rho[i][a]
(the vector field attached to frame section e_a has components rho[:,a])
and structure functions structure[a][b][c] with [e_a, e_b] = c^c_{ab} e_c.
Axioms are *checked*, not assumed: ``validate`` returns per-axiom
verdicts so that deliberately broken inputs can be diagnosed instead of
rejected at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .bundles import Section, TensorField, as_expr
from .symcore import (
    Chart,
    Const,
    Expr,
    Sym,
    ZeroPolicy,
    ZeroVerdict,
    canon,
    diff,
    evaluate,
    is_zero,
)

__all__ = [
    "LieAlgebra",
    "Algebroid",
    "AxiomCheck",
    "ValidationReport",
    "OrbitScan",
    "bracket",
    "anchor_apply",
    "validate",
    "tangent_algebroid",
    "build_action_algebroid",
    "build_poisson_algebroid",
    "build_foliation_algebroid",
    "orbit_rank",
    "orbit_scan",
]


class LieAlgebra:
    """Finite-dimensional Lie algebra by structure constants.

    ``structure[a][b][c]`` is the rational coefficient of the c-th basis
    vector in [e_a, e_b].  Antisymmetry and the Jacobi identity are
    verified exactly at construction.
    """

    def __init__(self, dim: int, structure):
        if dim < 1:
            raise ValueError("dimension must be positive")
        f = np.zeros((dim, dim, dim), dtype=object)
        for a in range(dim):
            for b in range(dim):
                for c in range(dim):
                    f[a, b, c] = Fraction(structure[a][b][c])
        for a in range(dim):
            for b in range(dim):
                for c in range(dim):
                    if f[a, b, c] + f[b, a, c] != 0:
                        raise ValueError(
                            f"structure constants not antisymmetric at "
                            f"({a},{b},{c})"
                        )
        for a in range(dim):
            for b in range(dim):
                for c in range(dim):
                    for d in range(dim):
                        total = Fraction(0)
                        for m in range(dim):
                            total += (
                                f[a, b, m] * f[m, c, d]
                                + f[b, c, m] * f[m, a, d]
                                + f[c, a, m] * f[m, b, d]
                            )
                        if total != 0:
                            raise ValueError(
                                f"Jacobi identity fails at ({a},{b},{c},{d})"
                            )
        self.dim = dim
        self.structure = f

    @classmethod
    def abelian(cls, dim: int) -> "LieAlgebra":
        return cls(dim, np.zeros((dim, dim, dim), dtype=int).tolist())

    @classmethod
    def so3(cls) -> "LieAlgebra":
        # [e_a, e_b] = eps_{abc} e_c
        f = np.zeros((3, 3, 3), dtype=int)
        for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            f[a, b, c] = 1
            f[b, a, c] = -1
        return cls(3, f.tolist())

    def __repr__(self):
        return f"<lie-algebra dim={self.dim}>"


class Algebroid:
    """Chart-level Lie algebroid data.

    Construction checks only shapes; use :func:`validate` for the axioms.
    ``origin`` records which builder produced the object ("tangent",
    "action", "poisson", "foliation", or "direct") so that downstream
    verdicts can specialise their commentary.
    """

    def __init__(
        self,
        chart: Chart,
        rank: int,
        rho,
        structure,
        origin: str = "direct",
        lie_algebra: Optional[LieAlgebra] = None,
    ):
        if rank < 1:
            raise ValueError("rank must be positive")
        n = chart.dim
        rho_arr = np.empty((n, rank), dtype=object)
        for i in range(n):
            for a in range(rank):
                rho_arr[i, a] = as_expr(rho[i][a], chart)
        c_arr = np.empty((rank, rank, rank), dtype=object)
        for a in range(rank):
            for b in range(rank):
                for c in range(rank):
                    c_arr[a, b, c] = as_expr(structure[a][b][c], chart)
        self.chart = chart
        self.rank = rank
        self.rho = rho_arr
        self.structure = c_arr
        self.origin = origin
        self.lie_algebra = lie_algebra

    def frame_section(self, a: int) -> Section:
        comps = [Const(1) if b == a else Const(0) for b in range(self.rank)]
        return Section(self.chart, comps, "g")

    def zero_section(self) -> Section:
        return Section(self.chart, [Const(0)] * self.rank, "g")

    def anchor_matrix_at(self, point) -> np.ndarray:
        env = self.chart.env(point)
        out = np.zeros((self.chart.dim, self.rank))
        for i in range(self.chart.dim):
            for a in range(self.rank):
                out[i, a] = evaluate(self.rho[i, a], env)
        return out

    def __repr__(self):
        return (
            f"<algebroid rank={self.rank} dim={self.chart.dim} "
            f"origin={self.origin}>"
        )


def _check_section(g: Algebroid, X: Section, who: str):
    if X.chart != g.chart:
        raise ValueError(f"{who}: chart mismatch")
    if X.rank != g.rank:
        raise ValueError(
            f"{who}: section rank {X.rank} does not match algebroid rank {g.rank}"
        )
    if X.frame == "tm*" and g.origin != "poisson":
        raise ValueError(f"{who}: one-form section on a non-cotangent algebroid")


def bracket(g: Algebroid, X: Section, Y: Section) -> Section:
    """Algebroid bracket in components.

    [X,Y]^c = rho^i_a X^a d_i Y^c - rho^i_a Y^a d_i X^c + c^c_{ab} X^a Y^b,
    the unique Leibniz extension of the frame brackets.
    """
    _check_section(g, X, "bracket")
    _check_section(g, Y, "bracket")
    chart = g.chart
    out = []
    for c in range(g.rank):
        total = Const(0)
        for a in range(g.rank):
            for i, name in enumerate(chart.coords):
                total = total + g.rho[i, a] * X.components[a] * diff(
                    Y.components[c], name
                )
                total = total - g.rho[i, a] * Y.components[a] * diff(
                    X.components[c], name
                )
            for b in range(g.rank):
                total = total + g.structure[a, b, c] * X.components[a] * Y.components[b]
        out.append(total)
    return Section(chart, out, X.frame if X.frame == Y.frame else "g")


def anchor_apply(g: Algebroid, X: Section) -> Section:
    """The vector field rho^i_a X^a attached to a section."""
    _check_section(g, X, "anchor_apply")
    out = []
    for i in range(g.chart.dim):
        total = Const(0)
        for a in range(g.rank):
            total = total + g.rho[i, a] * X.components[a]
        out.append(total)
    return Section(g.chart, out, "tm")


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    ok: bool
    path: str
    witness: Optional[tuple] = None
    value: Optional[float] = None
    detail: Optional[str] = None


@dataclass(frozen=True)
class ValidationReport:
    checks: Tuple[AxiomCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __getitem__(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _axiom_from_verdicts(name, items, chart, policy):
    """Reduce labelled expressions to a single AxiomCheck via is_zero."""
    worst_path = "symbolic"
    for label, e in items:
        verdict = is_zero(e, chart, policy)
        if verdict.path == "probabilistic":
            worst_path = "probabilistic"
        if verdict.path == "undecidable" or not verdict.zero:
            return AxiomCheck(
                name,
                False,
                verdict.path,
                witness=verdict.witness,
                value=verdict.value,
                detail=label,
            )
    return AxiomCheck(name, True, worst_path)


def validate(g: Algebroid, policy: Optional[ZeroPolicy] = None) -> ValidationReport:
    """Per-axiom verdicts: antisymmetry, anchor homomorphism, Jacobi, Leibniz.

    Failures come back as verdicts with witnesses rather than exceptions,
    so perturbed/broken inputs can be reported cleanly.
    """
    policy = policy or ZeroPolicy()
    chart = g.chart
    r, n = g.rank, chart.dim

    anti = []
    for a in range(r):
        for b in range(a, r):
            for c in range(r):
                anti.append(
                    (
                        f"c^{c}_({a},{b}) + c^{c}_({b},{a})",
                        g.structure[a, b, c] + g.structure[b, a, c],
                    )
                )

    hom = []
    for a in range(r):
        for b in range(a + 1, r):
            for j in range(n):
                total = Const(0)
                for c in range(r):
                    total = total + g.rho[j, c] * g.structure[a, b, c]
                for i, name in enumerate(chart.coords):
                    total = total - g.rho[i, a] * diff(g.rho[j, b], name)
                    total = total + g.rho[i, b] * diff(g.rho[j, a], name)
                hom.append((f"anchor-hom defect ({a},{b}) component {j}", total))

    jac = []
    frames = [g.frame_section(a) for a in range(r)]
    for a in range(r):
        for b in range(a + 1, r):
            for c in range(b + 1, r):
                cyc = (
                    bracket(g, bracket(g, frames[a], frames[b]), frames[c])
                    + bracket(g, bracket(g, frames[b], frames[c]), frames[a])
                    + bracket(g, bracket(g, frames[c], frames[a]), frames[b])
                )
                for d in range(r):
                    jac.append(
                        (f"jacobi ({a},{b},{c}) component {d}", cyc.components[d])
                    )

    leib = []
    for a in range(r):
        for b in range(r):
            for name in chart.coords:
                f = Sym(name)
                scaled = bracket(g, frames[a], frames[b].scale(f))
                plain = bracket(g, frames[a], frames[b]).scale(f)
                anchor_term = Const(0)
                for i, cname in enumerate(chart.coords):
                    anchor_term = anchor_term + g.rho[i, a] * diff(f, cname)
                for d in range(r):
                    correction = anchor_term if d == b else Const(0)
                    leib.append(
                        (
                            f"leibniz (e_{a}, {name}*e_{b}) component {d}",
                            scaled.components[d]
                            - plain.components[d]
                            - correction,
                        )
                    )

    checks = (
        _axiom_from_verdicts("antisymmetry", anti, chart, policy),
        _axiom_from_verdicts("anchor_hom", hom, chart, policy),
        _axiom_from_verdicts("jacobi", jac, chart, policy),
        _axiom_from_verdicts("leibniz", leib, chart, policy),
    )
    return ValidationReport(checks)


# ------------------------------------------------------------------ builders


def tangent_algebroid(chart: Chart) -> Algebroid:
    """TM as an algebroid: identity anchor, vanishing structure functions."""
    n = chart.dim
    rho = [[Const(1) if i == a else Const(0) for a in range(n)] for i in range(n)]
    zero = [[[Const(0)] * n for _ in range(n)] for _ in range(n)]
    return Algebroid(chart, n, rho, zero, origin="tangent")


def build_action_algebroid(
    algebra: LieAlgebra,
    action_fields: Sequence[Section],
    policy: Optional[ZeroPolicy] = None,
) -> Algebroid:
    """Action algebroid of an infinitesimal Lie algebra action.

    ``action_fields[a]`` is the vector field through which basis vector
    e_a acts; the assignment must send algebra brackets to vector-field
    brackets, which is verified and rejected with a witness otherwise.
    """
    from .bundles import vf_bracket

    policy = policy or ZeroPolicy()
    if len(action_fields) != algebra.dim:
        raise ValueError(
            f"need {algebra.dim} action fields, got {len(action_fields)}"
        )
    chart = action_fields[0].chart
    for V in action_fields:
        if V.frame != "tm" or V.chart != chart:
            raise ValueError("action fields must be vector fields on one chart")
    for a in range(algebra.dim):
        for b in range(a + 1, algebra.dim):
            lhs = vf_bracket(action_fields[a], action_fields[b])
            rhs = Section(chart, [Const(0)] * chart.dim, "tm")
            for c in range(algebra.dim):
                rhs = rhs + action_fields[c].scale(
                    Const(algebra.structure[a, b, c])
                )
            for j in range(chart.dim):
                verdict = is_zero(
                    lhs.components[j] - rhs.components[j], chart, policy
                )
                if not verdict.zero:
                    raise ValueError(
                        f"not an infinitesimal action: bracket defect for pair "
                        f"({a},{b}) component {j} at {verdict.witness} "
                        f"= {verdict.value}"
                    )
    n, r = chart.dim, algebra.dim
    rho = [[action_fields[a].components[i] for a in range(r)] for i in range(n)]
    structure = [
        [[Const(algebra.structure[a, b, c]) for c in range(r)] for b in range(r)]
        for a in range(r)
    ]
    return Algebroid(
        chart, r, rho, structure, origin="action", lie_algebra=algebra
    )


def build_poisson_algebroid(
    pi: TensorField, policy: Optional[ZeroPolicy] = None
) -> Algebroid:
    """Cotangent algebroid of a Poisson bivector.

    Frame {dx^a}; anchor fixed by <alpha, #beta> = Pi(alpha, beta), so
    (#dx^a)^i = Pi^{ai}; structure functions c^k_{ab} = d_k Pi^{ab}.
    The Schouten (Jacobi) condition is verified first and violations are
    rejected with the failing triple and a witness point.
    """
    policy = policy or ZeroPolicy()
    chart = pi.chart
    n = chart.dim
    if pi.slots != (("upper", "tm"), ("upper", "tm")):
        raise ValueError("poisson tensor must be a (2,0) tangent tensor")
    for i in range(n):
        for j in range(i, n):
            verdict = is_zero(pi[i, j] + pi[j, i], chart, policy)
            if not verdict.zero:
                raise ValueError(
                    f"poisson tensor not antisymmetric at ({i},{j})"
                )
    # the cyclic Jacobi sum is alternating in (i,j,k), so strict triples
    # suffice; for n <= 2 every antisymmetric bivector is Poisson
    for i, j, k in combinations(range(n), 3):
        total = Const(0)
        for l, name in enumerate(chart.coords):
            total = total + pi[i, l] * diff(pi[j, k], name)
            total = total + pi[j, l] * diff(pi[k, i], name)
            total = total + pi[k, l] * diff(pi[i, j], name)
        total = canon(total)
        verdict = is_zero(total, chart, policy)
        if not verdict.zero:
            where = tuple(float(x) for x in verdict.witness)
            raise ValueError(
                f"Pi not Poisson: Jacobi defect for triple ({i},{j},{k}) "
                f"at {where} = {verdict.value}"
            )
    rho = [[pi[a, i] for a in range(n)] for i in range(n)]
    structure = [
        [[diff(pi[a, b], chart.coords[k]) for k in range(n)] for b in range(n)]
        for a in range(n)
    ]
    out = Algebroid(chart, n, rho, structure, origin="poisson")
    out.poisson = pi
    return out


def build_foliation_algebroid(
    frame: Sequence[Section], policy: Optional[ZeroPolicy] = None
) -> Algebroid:
    """Algebroid of an integrable regular distribution spanned by ``frame``.

    The frame must be pointwise independent on the sample box, and each
    pairwise bracket must lie in its span; coefficients are found by a
    symbolic Cramer solve on well-conditioned rows and the remaining rows
    are verified as residuals.
    """
    from .bundles import vf_bracket

    policy = policy or ZeroPolicy()
    if not frame:
        raise ValueError("empty frame")
    chart = frame[0].chart
    k = len(frame)
    n = chart.dim
    if k > n:
        raise ValueError("more frame fields than chart dimensions")
    for V in frame:
        if V.frame != "tm" or V.chart != chart:
            raise ValueError("frame entries must be vector fields on one chart")

    # pointwise independence on the box
    points = chart.sample_points(policy.samples, policy.seed)
    cols = np.empty((n, k), dtype=object)
    for i in range(n):
        for a in range(k):
            cols[i, a] = frame[a].components[i]
    for p in points:
        env = chart.env(p)
        M = np.array(
            [[evaluate(cols[i, a], env) for a in range(k)] for i in range(n)]
        )
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= 1e-9:
            raise ValueError(
                f"frame degenerate at point {tuple(round(float(x), 6) for x in p)}"
            )

    # choose the best-conditioned k rows at the midpoint for the solve
    mid_env = chart.env(chart.midpoint())
    M_mid = np.array(
        [[evaluate(cols[i, a], env=mid_env) for a in range(k)] for i in range(n)]
    )
    best_rows, best_det = None, 0.0
    for rows in combinations(range(n), k):
        d = abs(np.linalg.det(M_mid[list(rows), :]))
        if d > best_det:
            best_rows, best_det = rows, d
    if best_rows is None or best_det <= 1e-9:
        raise ValueError("frame degenerate at the midpoint")

    sub = [[cols[i, a] for a in range(k)] for i in best_rows]
    det = _sym_det(sub)

    structure = [[[Const(0)] * k for _ in range(k)] for _ in range(k)]
    for a in range(k):
        for b in range(a + 1, k):
            w = vf_bracket(frame[a], frame[b])
            coeffs = []
            for col in range(k):
                replaced = [
                    [
                        w.components[best_rows[r]] if cc == col else sub[r][cc]
                        for cc in range(k)
                    ]
                    for r in range(k)
                ]
                coeffs.append(canon(_sym_det(replaced) / det))
            # verify the rows not used in the solve
            for i in range(n):
                residual = w.components[i]
                for c in range(k):
                    residual = residual - coeffs[c] * cols[i, c]
                verdict = is_zero(residual, chart, policy)
                if not verdict.zero:
                    raise ValueError(
                        f"not integrable / brackets do not close: pair "
                        f"({a},{b}) leaves span at component {i}, witness "
                        f"{verdict.witness} = {verdict.value}"
                    )
            for c in range(k):
                structure[a][b][c] = coeffs[c]
                structure[b][a][c] = canon(-coeffs[c])

    rho = [[frame[a].components[i] for a in range(k)] for i in range(n)]
    return Algebroid(chart, k, rho, structure, origin="foliation")


def _sym_det(M: List[List[Expr]]) -> Expr:
    k = len(M)
    if k == 1:
        return M[0][0]
    total = Const(0)
    for col in range(k):
        minor = [row[:col] + row[col + 1 :] for row in M[1:]]
        term = M[0][col] * _sym_det(minor)
        total = total + term if col % 2 == 0 else total - term
    return canon(total)


# ------------------------------------------------------------------- orbits


def orbit_rank(g: Algebroid, point, threshold: float = 1e-9) -> int:
    """Numeric rank of the anchor at a point (singular-value cutoff)."""
    M = g.anchor_matrix_at(point)
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > threshold))


@dataclass(frozen=True)
class OrbitScan:
    ranks: Tuple[int, ...]
    transitive: bool
    regular: bool


def orbit_scan(g: Algebroid, samples: int = 32, seed: int = 0) -> OrbitScan:
    """Rank profile over seeded sample points; transitive = full rank everywhere."""
    points = g.chart.sample_points(samples, seed)
    ranks = tuple(orbit_rank(g, p) for p in points)
    return OrbitScan(
        ranks=ranks,
        transitive=all(r == g.chart.dim for r in ranks),
        regular=len(set(ranks)) == 1,
    )
