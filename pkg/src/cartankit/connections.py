"""Connections on trivialized bundles and their invariants.

Two kinds of differentiation live here.  A :class:`TMConnection`
differentiates along coordinate directions (an affine connection on a
trivialized bundle, the target being either TM itself or an algebroid).
A :class:`GConnection` differentiates along algebroid sections through
the anchor; a flat one is a representation.  The two interact through
the induced representations and the duality/torsion calculus.

Index conventions (fixed across the package):
  gamma[i][a][b]  = coefficient of e_b in (d/dx^i-derivative of e_a)
  A[a][al][be]    = coefficient of f_be in (e_a-derivative of f_al)
  curvature R[i,j,a,b] / R[a,b,al,be]: first two slots are the plane,
  third the argument, last the value index.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .algebroid import Algebroid
from .bundles import LOW, TM, UP, G, Section, TensorField, as_expr
from .symcore import Chart, Const, Expr, ZeroPolicy, canon, diff, is_zero

__all__ = [
    "TMConnection",
    "GConnection",
    "cov_deriv_tm",
    "tensor_cov_deriv",
    "curvature_tm",
    "is_flat_tm",
    "cov_deriv_g",
    "g_tensor_deriv",
    "curvature_g",
    "is_flat_g",
    "dual_connection",
    "torsion_g",
    "dual_pair_defect",
    "induced_rep_on_g",
    "induced_rep_on_tm",
    "check_anchor_equivariance",
    "morphism_curvature",
    "metric_inverse",
    "christoffel",
]


class TMConnection:
    """Affine connection on a trivialized bundle over the chart.

    ``gamma[i][a][b]`` holds the e_b-coefficient of the derivative of
    frame section e_a in coordinate direction i.  ``target`` tags the
    bundle the connection acts on: "tm" for the tangent bundle (so the
    frame is the coordinate frame) or "g" for an algebroid.
    """

    def __init__(self, chart: Chart, gamma, target: str = "g"):
        if target not in ("tm", "g"):
            raise ValueError(f"unknown target {target!r}")
        gamma = np.array(gamma, dtype=object)
        if gamma.ndim != 3 or gamma.shape[0] != chart.dim:
            raise ValueError("gamma must have shape (dim, rank, rank)")
        if gamma.shape[1] != gamma.shape[2]:
            raise ValueError("gamma must be square in the frame indices")
        if target == "tm" and gamma.shape[1] != chart.dim:
            raise ValueError("tangent-target connection must have rank = dim")
        out = np.empty(gamma.shape, dtype=object)
        for idx in np.ndindex(*gamma.shape):
            out[idx] = as_expr(gamma[idx], chart)
        self.chart = chart
        self.gamma = out
        self.rank = gamma.shape[1]
        self.target = target

    @classmethod
    def flat(cls, chart: Chart, rank: int, target: str = "g") -> "TMConnection":
        zero = np.empty((chart.dim, rank, rank), dtype=object)
        zero[...] = Const(0)
        return cls(chart, zero, target)

    def __repr__(self):
        return f"<tm-connection rank={self.rank} target={self.target}>"


class GConnection:
    """Derivative along algebroid sections (anchored operator).

    ``A[a][al][be]`` holds the f_be-coefficient of the e_a-derivative of
    target frame section f_al; on sections the operator is
    X^a (rho^i_a d_i s^be + A^be_{a al} s^al).  ``target`` is "self"
    (the algebroid acting on itself) or "tm".
    """

    def __init__(self, g: Algebroid, A, target: str = "self"):
        if target not in ("self", "tm"):
            raise ValueError(f"unknown target {target!r}")
        m = g.rank if target == "self" else g.chart.dim
        A = np.array(A, dtype=object)
        if A.shape != (g.rank, m, m):
            raise ValueError(
                f"A must have shape ({g.rank}, {m}, {m}), got {A.shape}"
            )
        out = np.empty(A.shape, dtype=object)
        for idx in np.ndindex(*A.shape):
            out[idx] = as_expr(A[idx], g.chart)
        self.g = g
        self.A = out
        self.target = target
        self.target_rank = m

    @classmethod
    def zero(cls, g: Algebroid, target: str = "self") -> "GConnection":
        m = g.rank if target == "self" else g.chart.dim
        A = np.empty((g.rank, m, m), dtype=object)
        A[...] = Const(0)
        return cls(g, A, target)

    @property
    def target_tag(self) -> str:
        return G if self.target == "self" else TM

    def __repr__(self):
        return f"<g-connection rank={self.g.rank} target={self.target}>"


# --------------------------------------------------------- TM differentiation


def cov_deriv_tm(conn: TMConnection, V: Section, sigma: Section) -> Section:
    """V^i (d_i sigma^b + gamma[i,a,b] sigma^a) e_b."""
    if V.frame != "tm":
        raise ValueError("direction must be a vector field")
    if V.chart != conn.chart or sigma.chart != conn.chart:
        raise ValueError("chart mismatch")
    if sigma.rank != conn.rank:
        raise ValueError(
            f"section rank {sigma.rank} does not match connection rank {conn.rank}"
        )
    chart = conn.chart
    out = []
    for b in range(conn.rank):
        total = Const(0)
        for i, name in enumerate(chart.coords):
            piece = diff(sigma.components[b], name)
            for a in range(conn.rank):
                piece = piece + conn.gamma[i, a, b] * sigma.components[a]
            total = total + V.components[i] * piece
        out.append(total)
    return Section(chart, out, sigma.frame)


def tensor_cov_deriv(conn: TMConnection, T: TensorField) -> TensorField:
    """Covariant derivative of a tangent tensor; new lower TM slot last.

    Requires a tangent-target connection and a tensor with only
    TM-tagged slots.
    """
    if conn.target != "tm":
        raise ValueError("tensor_cov_deriv needs a tangent-target connection")
    if T.chart != conn.chart:
        raise ValueError("chart mismatch")
    for variance, tag in T.slots:
        if tag != TM:
            raise ValueError("tensor_cov_deriv only handles tangent-tagged slots")
    chart = conn.chart
    n = chart.dim
    shape = T.shape + (n,)
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*T.shape) if T.ndim else ((),):
        for i, name in enumerate(chart.coords):
            total = diff(T.components[tuple(idx)], name)
            for axis, (variance, tag) in enumerate(T.slots):
                for m in range(n):
                    shifted = list(idx)
                    shifted[axis] = m
                    piece = T.components[tuple(shifted)]
                    if variance == UP:
                        total = total + conn.gamma[i, m, idx[axis]] * piece
                    else:
                        total = total - conn.gamma[i, idx[axis], m] * piece
            out[tuple(idx) + (i,)] = canon(total)
    return TensorField(chart, T.slots + ((LOW, TM),), out)


def curvature_tm(conn: TMConnection) -> TensorField:
    """R[i,j,a,b]: curvature of the coordinate-direction connection.

    R(d_i, d_j) e_a = R[i,j,a,b] e_b with
    R[i,j,a,b] = d_i gamma[j,a,b] - d_j gamma[i,a,b]
                 + sum_c (gamma[i,c,b] gamma[j,a,c] - gamma[j,c,b] gamma[i,a,c]).
    """
    chart = conn.chart
    n, r = chart.dim, conn.rank
    tag = TM if conn.target == "tm" else G
    out = np.empty((n, n, r, r), dtype=object)
    for i in range(n):
        for j in range(n):
            for a in range(r):
                for b in range(r):
                    total = diff(conn.gamma[j, a, b], chart.coords[i]) - diff(
                        conn.gamma[i, a, b], chart.coords[j]
                    )
                    for c in range(r):
                        total = total + (
                            conn.gamma[i, c, b] * conn.gamma[j, a, c]
                            - conn.gamma[j, c, b] * conn.gamma[i, a, c]
                        )
                    out[i, j, a, b] = canon(total)
    return TensorField(
        chart,
        ((LOW, TM), (LOW, TM), (LOW, tag), (UP, tag)),
        out,
        antisymmetric=((0, 1),),
    )


def is_flat_tm(conn: TMConnection, policy: Optional[ZeroPolicy] = None):
    """(flat?, failing index, verdict) for the curvature of ``conn``."""
    idx, verdict = curvature_tm(conn).is_zero_field(policy)
    return idx is None, idx, verdict


# ---------------------------------------------------------- G differentiation


def cov_deriv_g(conn: GConnection, X: Section, sigma: Section) -> Section:
    """X^a (rho^i_a d_i sigma^be + A[a,al,be] sigma^al) f_be."""
    g = conn.g
    if X.chart != g.chart or sigma.chart != g.chart:
        raise ValueError("chart mismatch")
    if X.rank != g.rank:
        raise ValueError("direction section has wrong rank")
    if sigma.rank != conn.target_rank:
        raise ValueError(
            f"section rank {sigma.rank} does not match target rank "
            f"{conn.target_rank}"
        )
    chart = g.chart
    out = []
    for be in range(conn.target_rank):
        total = Const(0)
        for a in range(g.rank):
            piece = Const(0)
            for i, name in enumerate(chart.coords):
                piece = piece + g.rho[i, a] * diff(sigma.components[be], name)
            for al in range(conn.target_rank):
                piece = piece + conn.A[a, al, be] * sigma.components[al]
            total = total + X.components[a] * piece
        out.append(total)
    return Section(chart, out, sigma.frame)


def g_tensor_deriv(
    T: TensorField,
    rep_g: Optional[GConnection] = None,
    rep_tm: Optional[GConnection] = None,
) -> TensorField:
    """Algebroid-direction covariant derivative of a tensor.

    G-tagged slots are differentiated through ``rep_g`` (target "self"),
    TM-tagged slots through ``rep_tm`` (target "tm"); a new lower G slot
    is appended last.  Whichever representation a slot needs must be
    supplied, and they must share one algebroid.
    """
    base = rep_g or rep_tm
    if base is None:
        raise ValueError("need at least one representation")
    g = base.g
    if rep_g is not None and rep_g.target != "self":
        raise ValueError("rep_g must have target 'self'")
    if rep_tm is not None and rep_tm.target != "tm":
        raise ValueError("rep_tm must have target 'tm'")
    if rep_g is not None and rep_tm is not None and rep_tm.g is not rep_g.g:
        raise ValueError("representations act for different algebroids")
    if T.chart != g.chart:
        raise ValueError("chart mismatch")
    for variance, tag in T.slots:
        if tag == G and rep_g is None:
            raise ValueError("tensor has algebroid slots but rep_g is missing")
        if tag == TM and rep_tm is None:
            raise ValueError("tensor has tangent slots but rep_tm is missing")
    chart = g.chart
    shape = T.shape + (g.rank,)
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*T.shape) if T.ndim else ((),):
        for z in range(g.rank):
            total = Const(0)
            for i, name in enumerate(chart.coords):
                total = total + g.rho[i, z] * diff(
                    T.components[tuple(idx)], name
                )
            for axis, (variance, tag) in enumerate(T.slots):
                A = rep_g.A if tag == G else rep_tm.A
                for m in range(T.shape[axis]):
                    shifted = list(idx)
                    shifted[axis] = m
                    piece = T.components[tuple(shifted)]
                    if variance == UP:
                        total = total + A[z, m, idx[axis]] * piece
                    else:
                        total = total - A[z, idx[axis], m] * piece
            out[tuple(idx) + (z,)] = canon(total)
    return TensorField(chart, T.slots + ((LOW, G),), out)


def curvature_g(conn: GConnection) -> TensorField:
    """R[a,b,al,be]: obstruction to ``conn`` being a representation.

    R(e_a, e_b) f_al = R[a,b,al,be] f_be with
    R[a,b,al,be] = rho^i_a d_i A[b,al,be] - rho^i_b d_i A[a,al,be]
                   + sum_ga (A[a,ga,be] A[b,al,ga] - A[b,ga,be] A[a,al,ga])
                   - sum_c c^c_{ab} A[c,al,be].
    """
    g = conn.g
    chart = g.chart
    r, m = g.rank, conn.target_rank
    tag = conn.target_tag
    out = np.empty((r, r, m, m), dtype=object)
    for a in range(r):
        for b in range(r):
            for al in range(m):
                for be in range(m):
                    total = Const(0)
                    for i, name in enumerate(chart.coords):
                        total = total + g.rho[i, a] * diff(
                            conn.A[b, al, be], name
                        )
                        total = total - g.rho[i, b] * diff(
                            conn.A[a, al, be], name
                        )
                    for ga in range(m):
                        total = total + (
                            conn.A[a, ga, be] * conn.A[b, al, ga]
                            - conn.A[b, ga, be] * conn.A[a, al, ga]
                        )
                    for c in range(r):
                        total = total - g.structure[a, b, c] * conn.A[c, al, be]
                    out[a, b, al, be] = canon(total)
    return TensorField(
        chart,
        ((LOW, G), (LOW, G), (LOW, tag), (UP, tag)),
        out,
        antisymmetric=((0, 1),),
    )


def is_flat_g(conn: GConnection, policy: Optional[ZeroPolicy] = None):
    idx, verdict = curvature_g(conn).is_zero_field(policy)
    return idx is None, idx, verdict


# --------------------------------------------------------------------- duality


def _require_self_target(conn: GConnection, who: str):
    if conn.target != "self":
        raise ValueError(f"{who} needs a self-target connection")


def dual_connection(conn: GConnection) -> GConnection:
    """The dual: derivative of X along Y plus their bracket.

    Coefficients A*[a,b,c] = A[b,a,c] + c^c_{ab}; applying twice gives
    back the original coefficients exactly (an algebraic identity, used
    as a regression elsewhere).
    """
    _require_self_target(conn, "dual_connection")
    g = conn.g
    r = g.rank
    out = np.empty((r, r, r), dtype=object)
    for a in range(r):
        for b in range(r):
            for c in range(r):
                out[a, b, c] = canon(conn.A[b, a, c] + g.structure[a, b, c])
    return GConnection(g, out, "self")


def torsion_g(conn: GConnection) -> TensorField:
    """T[a,b,c] = A[a,b,c] - A[b,a,c] - c^c_{ab}; antisymmetric in (a,b)."""
    _require_self_target(conn, "torsion_g")
    g = conn.g
    r = g.rank
    out = np.empty((r, r, r), dtype=object)
    for a in range(r):
        for b in range(r):
            for c in range(r):
                out[a, b, c] = canon(
                    conn.A[a, b, c] - conn.A[b, a, c] - g.structure[a, b, c]
                )
    return TensorField(
        g.chart,
        ((LOW, G), (LOW, G), (UP, G)),
        out,
        antisymmetric=((0, 1),),
    )


def dual_pair_defect(conn: GConnection) -> TensorField:
    """Defect of the curvature exchange identity for a dual pair.

    For D the dual of ``conn``, with R, R* the two curvatures and T* the
    dual torsion:
      defect[a,b,c,d] = R[a,b,c,d] - (D T*)[a,b,d,c]
                        - R*[a,c,b,d] - R*[c,b,a,d]
    which must vanish for every self-target connection.
    """
    _require_self_target(conn, "dual_pair_defect")
    g = conn.g
    r = g.rank
    dual = dual_connection(conn)
    R = curvature_g(conn)
    Rs = curvature_g(dual)
    DTs = g_tensor_deriv(torsion_g(dual), rep_g=dual)
    out = np.empty((r, r, r, r), dtype=object)
    for a in range(r):
        for b in range(r):
            for c in range(r):
                for d in range(r):
                    out[a, b, c, d] = canon(
                        R[a, b, c, d]
                        - DTs[a, b, d, c]
                        - Rs[a, c, b, d]
                        - Rs[c, b, a, d]
                    )
    return TensorField(
        g.chart, ((LOW, G), (LOW, G), (LOW, G), (UP, G)), out
    )


# ------------------------------------------------------ induced representations


def _require_g_target(conn: TMConnection, g: Algebroid, who: str):
    if conn.chart != g.chart:
        raise ValueError(f"{who}: chart mismatch")
    if conn.rank != g.rank:
        raise ValueError(f"{who}: connection rank does not match algebroid")


def induced_rep_on_g(g: Algebroid, conn: TMConnection) -> GConnection:
    """Derivative of X along the anchor of Y, plus the bracket.

    Coefficients Abar[a,b,c] = sum_i rho[i,b] gamma[i,a,c] + c^c_{ab}.
    """
    _require_g_target(conn, g, "induced_rep_on_g")
    r = g.rank
    out = np.empty((r, r, r), dtype=object)
    for a in range(r):
        for b in range(r):
            for c in range(r):
                total = g.structure[a, b, c]
                for i in range(g.chart.dim):
                    total = total + g.rho[i, b] * conn.gamma[i, a, c]
                out[a, b, c] = canon(total)
    return GConnection(g, out, "self")


def induced_rep_on_tm(g: Algebroid, conn: TMConnection) -> GConnection:
    """Companion action on vector fields: push the derivative through
    the anchor and correct by the flow of the anchored direction.

    Coefficients Atm[a,j,k] = sum_b rho[k,b] gamma[j,a,b] - d_j rho[k,a].
    """
    _require_g_target(conn, g, "induced_rep_on_tm")
    chart = g.chart
    n, r = chart.dim, g.rank
    out = np.empty((r, n, n), dtype=object)
    for a in range(r):
        for j in range(n):
            for k in range(n):
                total = -diff(g.rho[k, a], chart.coords[j])
                for b in range(r):
                    total = total + g.rho[k, b] * conn.gamma[j, a, b]
                out[a, j, k] = canon(total)
    return GConnection(g, out, "tm")


def check_anchor_equivariance(
    g: Algebroid, conn: TMConnection, policy: Optional[ZeroPolicy] = None
):
    """Self-test: the anchor intertwines the two induced representations.

    Returns (ok, label, verdict); must pass for *every* input, so a
    failure signals an implementation bug, not bad data.
    """
    policy = policy or ZeroPolicy()
    rep_g = induced_rep_on_g(g, conn)
    rep_tm = induced_rep_on_tm(g, conn)
    chart = g.chart
    n, r = chart.dim, g.rank
    for a in range(r):
        for b in range(r):
            for k in range(n):
                lhs = Const(0)
                for c in range(r):
                    lhs = lhs + g.rho[k, c] * rep_g.A[a, b, c]
                rhs = Const(0)
                for i, name in enumerate(chart.coords):
                    rhs = rhs + g.rho[i, a] * diff(g.rho[k, b], name)
                for j in range(n):
                    rhs = rhs + rep_tm.A[a, j, k] * g.rho[j, b]
                verdict = is_zero(lhs - rhs, chart, policy)
                if not verdict.zero:
                    return False, f"pair ({a},{b}) component {k}", verdict
    return True, None, None


# ------------------------------------------------------------------- morphisms


def morphism_curvature(
    phi,
    g: Algebroid,
    h: Algebroid,
    policy: Optional[ZeroPolicy] = None,
) -> TensorField:
    """Bracket defect of an anchored fiberwise map between algebroids.

    ``phi[al][a]`` maps the g-frame into h.  The anchors must agree
    through phi (checked; rejected with witness).  The result has
    components ([phi e_a, phi e_b]_h - phi [e_a, e_b]_g)^al.
    """
    from .algebroid import bracket

    policy = policy or ZeroPolicy()
    if g.chart != h.chart:
        raise ValueError("algebroids live on different charts")
    chart = g.chart
    phi = np.array(phi, dtype=object)
    if phi.shape != (h.rank, g.rank):
        raise ValueError(f"phi must have shape ({h.rank}, {g.rank})")
    phi_canon = np.empty(phi.shape, dtype=object)
    for idx in np.ndindex(*phi.shape):
        phi_canon[idx] = as_expr(phi[idx], chart)
    phi = phi_canon
    for a in range(g.rank):
        for i in range(chart.dim):
            defect = -g.rho[i, a]
            for al in range(h.rank):
                defect = defect + h.rho[i, al] * phi[al, a]
            verdict = is_zero(defect, chart, policy)
            if not verdict.zero:
                raise ValueError(
                    f"anchor incompatibility at frame {a} component {i}: "
                    f"witness {verdict.witness} = {verdict.value}"
                )
    r = g.rank
    out = np.empty((r, r, h.rank), dtype=object)
    for a in range(r):
        for b in range(r):
            phi_a = Section(chart, [phi[al, a] for al in range(h.rank)], "g")
            phi_b = Section(chart, [phi[al, b] for al in range(h.rank)], "g")
            lhs = bracket(h, phi_a, phi_b)
            for al in range(h.rank):
                pushed = Const(0)
                for c in range(r):
                    pushed = pushed + g.structure[a, b, c] * phi[al, c]
                out[a, b, al] = canon(lhs.components[al] - pushed)
    return TensorField(
        chart, ((LOW, G), (LOW, G), (UP, G)), out, antisymmetric=((0, 1),)
    )


# ------------------------------------------------------------------ riemannian


def _sym_det_np(M) -> Expr:
    k = len(M)
    if k == 1:
        return M[0][0]
    total = Const(0)
    for col in range(k):
        minor = [row[:col] + row[col + 1 :] for row in M[1:]]
        term = M[0][col] * _sym_det_np(minor)
        total = total + term if col % 2 == 0 else total - term
    return canon(total)


def metric_inverse(sigma: TensorField) -> TensorField:
    """Pointwise inverse of a (0,2) tensor via the adjugate.

    Entries are unevaluated quotients cofactor/det; the caller is
    responsible for the determinant being bounded away from zero on the
    box (the pipelines check this and report a witness otherwise).
    """
    if sigma.slots != ((LOW, TM), (LOW, TM)):
        raise ValueError("metric_inverse expects a (0,2) tangent tensor")
    chart = sigma.chart
    n = chart.dim
    M = [[sigma[i, j] for j in range(n)] for i in range(n)]
    det = _sym_det_np(M)
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            minor = [
                [M[r][c] for c in range(n) if c != i]
                for r in range(n)
                if r != j
            ]
            cof = _sym_det_np(minor) if minor else Const(1)
            sign = Const(1) if (i + j) % 2 == 0 else Const(-1)
            out[i, j] = canon(sign * cof / det)
    return TensorField(chart, ((UP, TM), (UP, TM)), out)


def christoffel(sigma: TensorField) -> TMConnection:
    """Levi-Civita coefficients of a metric by the standard formula.

    gamma[i][j][k] = (1/2) g^{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij}).
    """
    inv = metric_inverse(sigma)
    chart = sigma.chart
    n = chart.dim
    half = as_expr("1/2", chart)
    out = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                total = Const(0)
                for l in range(n):
                    total = total + inv[k, l] * (
                        diff(sigma[j, l], chart.coords[i])
                        + diff(sigma[i, l], chart.coords[j])
                        - diff(sigma[i, j], chart.coords[l])
                    )
                out[i, j, k] = canon(half * total)
    return TMConnection(chart, out, target="tm")
