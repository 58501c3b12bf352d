"""Sections and tensor fields over a single chart.

Everything here is frame-based: a vector field is its component list
against the coordinate frame, an algebroid section is its component list
against the declared algebroid frame, and a tensor field is a
multi-indexed array of expressions whose slots are tagged with the bundle
they index (tangent or algebroid) and their variance.  No chart
transitions, no abstract bundles.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .symcore import (
    Chart,
    Const,
    Expr,
    ZeroPolicy,
    canon,
    diff,
    is_zero,
    parse,
)

__all__ = [
    "Section",
    "TensorField",
    "UP",
    "LOW",
    "TM",
    "G",
    "as_expr",
    "vf_bracket",
    "lie_derivative",
    "tensor_contract",
    "tensor_product",
    "zero_tensor",
    "scalar_field",
]

UP = "upper"
LOW = "lower"
TM = "tm"
G = "g"

_FRAMES = ("tm", "tm*", "g")


def as_expr(value, chart: Chart) -> Expr:
    """Coerce strings / numbers / Exprs to a canonical Expr."""
    if isinstance(value, Expr):
        return canon(value)
    if isinstance(value, str):
        return canon(parse(value, chart))
    return canon(Const(value))


def _component_array(chart: Chart, values) -> np.ndarray:
    arr = np.array(values, dtype=object)
    flat = arr.reshape(-1)
    for k in range(flat.size):
        flat[k] = as_expr(flat[k], chart)
    return arr


class Section:
    """A section of a trivialized bundle: components against its frame.

    ``frame`` is "tm" (components against the coordinate vector fields),
    "tm*" (against the coordinate one-forms) or "g" (against the abstract
    algebroid frame).
    """

    def __init__(self, chart: Chart, components, frame: str = "g"):
        if frame not in _FRAMES:
            raise ValueError(f"unknown frame {frame!r}")
        comps = tuple(as_expr(c, chart) for c in components)
        if not comps:
            raise ValueError("a section needs at least one component")
        if frame in ("tm", "tm*") and len(comps) != chart.dim:
            raise ValueError(
                f"{frame} section needs {chart.dim} components, got {len(comps)}"
            )
        self.chart = chart
        self.components = comps
        self.frame = frame

    @property
    def rank(self) -> int:
        return len(self.components)

    def __eq__(self, other):
        return (
            isinstance(other, Section)
            and self.chart == other.chart
            and self.frame == other.frame
            and self.components == other.components
        )

    __hash__ = None

    def __repr__(self):
        body = ", ".join(str(c) for c in self.components)
        return f"<section [{body}] @{self.frame}>"

    def __add__(self, other):
        self._check_peer(other)
        return Section(
            self.chart,
            [a + b for a, b in zip(self.components, other.components)],
            self.frame,
        )

    def __sub__(self, other):
        self._check_peer(other)
        return Section(
            self.chart,
            [a - b for a, b in zip(self.components, other.components)],
            self.frame,
        )

    def __neg__(self):
        return Section(self.chart, [-c for c in self.components], self.frame)

    def scale(self, f) -> "Section":
        """Multiply by a scalar expression."""
        f = as_expr(f, self.chart)
        return Section(self.chart, [f * c for c in self.components], self.frame)

    def as_tensor(self) -> "TensorField":
        """View as a one-slot tensor field."""
        slot = {
            "tm": (UP, TM),
            "tm*": (LOW, TM),
            "g": (UP, G),
        }[self.frame]
        return TensorField(self.chart, (slot,), list(self.components))

    def _check_peer(self, other):
        if not isinstance(other, Section):
            raise TypeError("expected a Section")
        if other.chart != self.chart:
            raise ValueError("chart mismatch")
        if other.frame != self.frame or other.rank != self.rank:
            raise ValueError("section frame mismatch")


class TensorField:
    """Expression-valued tensor with tagged slots.

    ``slots`` is a sequence of (variance, tag) pairs, variance "upper" or
    "lower", tag "tm" or "g".  Tangent-tagged slots must have size equal
    to the chart dimension; algebroid-tagged slots take their size from
    the component array (the algebroid rank).  Declared symmetric /
    antisymmetric index pairs are verified at construction.
    """

    def __init__(
        self,
        chart: Chart,
        slots: Sequence,
        components,
        symmetric: Iterable = (),
        antisymmetric: Iterable = (),
        policy: Optional[ZeroPolicy] = None,
    ):
        slots = tuple((str(v), str(t)) for v, t in slots)
        for variance, tag in slots:
            if variance not in (UP, LOW) or tag not in (TM, G):
                raise ValueError(f"bad slot ({variance!r}, {tag!r})")
        arr = _component_array(chart, components)
        if arr.ndim != len(slots):
            raise ValueError(
                f"component array has {arr.ndim} axes for {len(slots)} slots"
            )
        for axis, (variance, tag) in enumerate(slots):
            if tag == TM and arr.shape[axis] != chart.dim:
                raise ValueError(
                    f"slot {axis} is tangent-tagged but has size {arr.shape[axis]}"
                )
        self.chart = chart
        self.slots = slots
        self.components = arr
        self.symmetric = tuple(tuple(p) for p in symmetric)
        self.antisymmetric = tuple(tuple(p) for p in antisymmetric)
        self._check_declared_pairs(policy or ZeroPolicy())

    @property
    def ndim(self) -> int:
        return len(self.slots)

    @property
    def shape(self):
        return self.components.shape

    def __getitem__(self, idx):
        return self.components[idx]

    def __eq__(self, other):
        return (
            isinstance(other, TensorField)
            and self.chart == other.chart
            and self.slots == other.slots
            and self.shape == other.shape
            and all(
                self.components[idx] == other.components[idx]
                for idx in np.ndindex(*self.shape)
            )
        )

    __hash__ = None

    def __repr__(self):
        sig = ",".join(f"{v[0]}{t}" for v, t in self.slots)
        return f"<tensor ({sig}) shape={self.shape}>"

    def __add__(self, other):
        self._check_peer(other)
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(*self.shape):
            out[idx] = canon(self.components[idx] + other.components[idx])
        return TensorField(self.chart, self.slots, out)

    def __sub__(self, other):
        self._check_peer(other)
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(*self.shape):
            out[idx] = canon(self.components[idx] - other.components[idx])
        return TensorField(self.chart, self.slots, out)

    def __neg__(self):
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(*self.shape):
            out[idx] = canon(-self.components[idx])
        return TensorField(self.chart, self.slots, out)

    def scale(self, f) -> "TensorField":
        f = as_expr(f, self.chart)
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(*self.shape):
            out[idx] = canon(f * self.components[idx])
        return TensorField(self.chart, self.slots, out)

    def map(self, fn) -> "TensorField":
        """Apply ``fn`` to every component (symmetries are dropped)."""
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(*self.shape):
            out[idx] = as_expr(fn(self.components[idx]), self.chart)
        return TensorField(self.chart, self.slots, out)

    def is_zero_field(self, policy: Optional[ZeroPolicy] = None):
        """First failing component's verdict, or the last passing one."""
        policy = policy or ZeroPolicy()
        verdict = None
        for idx in np.ndindex(*self.shape):
            verdict = is_zero(self.components[idx], self.chart, policy)
            if not verdict.zero:
                return idx, verdict
        return None, verdict

    def _check_peer(self, other):
        if not isinstance(other, TensorField):
            raise TypeError("expected a TensorField")
        if other.chart != self.chart:
            raise ValueError("chart mismatch")
        if other.slots != self.slots or other.shape != self.shape:
            raise ValueError("tensor signature mismatch")

    def _check_declared_pairs(self, policy: ZeroPolicy):
        for sign, pairs in ((-1, self.symmetric), (1, self.antisymmetric)):
            for i, j in pairs:
                if not (0 <= i < self.ndim and 0 <= j < self.ndim) or i == j:
                    raise ValueError(f"bad symmetry pair ({i}, {j})")
                if self.slots[i] != self.slots[j]:
                    raise ValueError(
                        f"symmetry pair ({i}, {j}) spans unlike slots"
                    )
                for idx in np.ndindex(*self.shape):
                    if idx[i] > idx[j]:
                        continue
                    swapped = list(idx)
                    swapped[i], swapped[j] = swapped[j], swapped[i]
                    defect = self.components[idx] + sign * self.components[
                        tuple(swapped)
                    ]
                    verdict = is_zero(defect, self.chart, policy)
                    if not verdict.zero:
                        kind = "symmetric" if sign == -1 else "antisymmetric"
                        raise ValueError(
                            f"declared {kind} pair ({i}, {j}) fails at "
                            f"index {idx}: witness {verdict.witness}"
                        )


def zero_tensor(chart: Chart, slots: Sequence, g_rank: Optional[int] = None) -> TensorField:
    """All-zero tensor; ``g_rank`` sizes any algebroid-tagged slots."""
    slots = tuple(slots)
    shape = []
    for variance, tag in slots:
        if tag == TM:
            shape.append(chart.dim)
        else:
            if g_rank is None:
                raise ValueError("g_rank required for algebroid-tagged slots")
            shape.append(g_rank)
    arr = np.empty(tuple(shape), dtype=object)
    arr[...] = Const(0)
    return TensorField(chart, slots, arr)


def scalar_field(chart: Chart, value) -> TensorField:
    """A zero-slot tensor field (a single expression)."""
    arr = np.empty((), dtype=object)
    arr[()] = as_expr(value, chart)
    return TensorField(chart, (), arr)


def vf_bracket(V: Section, W: Section) -> Section:
    """Jacobi-Lie bracket of two vector fields."""
    if V.frame != "tm" or W.frame != "tm":
        raise ValueError("vf_bracket needs tangent sections")
    if V.chart != W.chart:
        raise ValueError("chart mismatch")
    chart = V.chart
    out = []
    for j in range(chart.dim):
        total = Const(0)
        for i, name in enumerate(chart.coords):
            total = total + V.components[i] * diff(W.components[j], name)
            total = total - W.components[i] * diff(V.components[j], name)
        out.append(total)
    return Section(chart, out, "tm")


def lie_derivative(V: Section, T: TensorField) -> TensorField:
    """Lie derivative of a purely tangent-tagged tensor field.

    The scalar case is the directional derivative; one upper slot gives
    the vector-field bracket; on a lower pair (U, W) |-> V(T(U,W)) +
    T([U,V]-correction...) expands to the usual coordinate formula
    V^m d_m T_{jk} + T_{mk} d_j V^m + T_{jm} d_k V^m.
    """
    if V.frame != "tm":
        raise ValueError("lie_derivative needs a tangent direction")
    if V.chart != T.chart:
        raise ValueError("chart mismatch")
    for variance, tag in T.slots:
        if tag != TM:
            raise ValueError("lie_derivative only handles tangent-tagged slots")
    chart = V.chart
    coords = chart.coords
    out = np.empty(T.shape, dtype=object)
    for idx in np.ndindex(*T.shape) if T.ndim else ((),):
        total = Const(0)
        for m, name in enumerate(coords):
            total = total + V.components[m] * diff(T.components[tuple(idx)], name)
        for axis, (variance, tag) in enumerate(T.slots):
            for m in range(chart.dim):
                shifted = list(idx)
                shifted[axis] = m
                piece = T.components[tuple(shifted)]
                if variance == UP:
                    total = total - diff(V.components[idx[axis]], coords[m]) * piece
                else:
                    total = total + diff(V.components[m], coords[idx[axis]]) * piece
        out[tuple(idx)] = canon(total)
    return TensorField(
        chart,
        T.slots,
        out,
        symmetric=T.symmetric,
        antisymmetric=T.antisymmetric,
    )


def tensor_contract(T: TensorField, upper: int, lower: int) -> TensorField:
    """Contract an upper slot with a lower slot of the same tag."""
    if not (0 <= upper < T.ndim and 0 <= lower < T.ndim) or upper == lower:
        raise ValueError("contraction needs two distinct slots")
    uv, ut = T.slots[upper]
    lv, lt = T.slots[lower]
    if uv != UP or lv != LOW:
        raise ValueError(
            f"contraction needs (upper, lower); got ({uv}, {lv})"
        )
    if ut != lt:
        raise ValueError(f"contraction across unlike tags ({ut}, {lt})")
    keep = [k for k in range(T.ndim) if k not in (upper, lower)]
    slots = tuple(T.slots[k] for k in keep)
    shape = tuple(T.shape[k] for k in keep)
    size = T.shape[upper]
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape) if slots else ((),):
        total = Const(0)
        for m in range(size):
            full = [None] * T.ndim
            for pos, k in enumerate(keep):
                full[k] = idx[pos]
            full[upper] = m
            full[lower] = m
            total = total + T.components[tuple(full)]
        out[tuple(idx)] = canon(total)
    remap = {k: pos for pos, k in enumerate(keep)}
    sym = [
        (remap[i], remap[j])
        for i, j in T.symmetric
        if i in remap and j in remap
    ]
    anti = [
        (remap[i], remap[j])
        for i, j in T.antisymmetric
        if i in remap and j in remap
    ]
    return TensorField(T.chart, slots, out, symmetric=sym, antisymmetric=anti)


def tensor_product(T: TensorField, S: TensorField) -> TensorField:
    """Outer product; declared symmetries carry over slotwise."""
    if T.chart != S.chart:
        raise ValueError("chart mismatch")
    slots = T.slots + S.slots
    shape = T.shape + S.shape
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape) if slots else ((),):
        left = idx[: T.ndim]
        right = idx[T.ndim :]
        out[tuple(idx)] = canon(T.components[left] * S.components[right])
    sym = list(T.symmetric) + [(i + T.ndim, j + T.ndim) for i, j in S.symmetric]
    anti = list(T.antisymmetric) + [
        (i + T.ndim, j + T.ndim) for i, j in S.antisymmetric
    ]
    return TensorField(T.chart, slots, out, symmetric=sym, antisymmetric=anti)
