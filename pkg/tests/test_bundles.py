import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cartankit.bundles import (
    LOW,
    TM,
    UP,
    Section,
    TensorField,
    lie_derivative,
    scalar_field,
    tensor_contract,
    tensor_product,
    vf_bracket,
    zero_tensor,
)
from cartankit.symcore import Chart, Const, canon, diff, is_zero, parse

R2 = Chart(("x", "y"), [(-1, 1), (-1, 1)])
R3 = Chart(("x", "y", "z"), [(-1, 1), (-1, 1), (-1, 1)])


def vf(chart, *comps):
    return Section(chart, comps, "tm")


def expr(text, chart=R2):
    return canon(parse(text, chart))


# ---------------------------------------------------------------- brackets


def test_bracket_of_coordinate_and_scaled_field():
    assert vf_bracket(vf(R2, "1", "0"), vf(R2, "x", "0")) == vf(R2, "1", "0")


def test_coordinate_fields_commute():
    assert vf_bracket(vf(R2, "1", "0"), vf(R2, "0", "1")) == vf(R2, "0", "0")


def test_cross_term_bracket():
    # [x dy, y dx] = x dx - y dy, expanded by hand
    got = vf_bracket(vf(R2, "0", "x"), vf(R2, "y", "0"))
    assert got == vf(R2, "x", "-y")


def test_bracket_rejects_chart_mismatch():
    with pytest.raises(ValueError, match="chart"):
        vf_bracket(vf(R2, "1", "0"), vf(R3, "1", "0", "0"))


def test_bracket_rejects_non_tangent_sections():
    alpha = Section(R2, ("1", "0"), "tm*")
    with pytest.raises(ValueError, match="tangent"):
        vf_bracket(alpha, alpha)


# ---------------------------------------------------------- lie derivative


def metric(chart, rows, **kw):
    return TensorField(chart, ((LOW, TM), (LOW, TM)), rows, symmetric=((0, 1),), **kw)


def test_translation_invariance():
    sigma = metric(R2, [["1", "0"], ["0", "1"]])
    got = lie_derivative(vf(R2, "1", "0"), sigma)
    idx, verdict = got.is_zero_field()
    assert idx is None and verdict.zero


def test_dilation_scales_flat_metric():
    dxdx = TensorField(R2, ((LOW, TM), (LOW, TM)), [["1", "0"], ["0", "0"]])
    got = lie_derivative(vf(R2, "x", "0"), dxdx)
    assert got[0, 0] == Const(2)
    assert got[0, 1] == Const(0) and got[1, 1] == Const(0)


def test_rotation_is_killing_for_euclidean_metric():
    sigma = metric(R2, [["1", "0"], ["0", "1"]])
    rot = vf(R2, "-y", "x")
    idx, verdict = lie_derivative(rot, sigma).is_zero_field()
    assert idx is None and verdict.zero


def test_lie_derivative_of_vector_is_bracket():
    V = vf(R2, "x*y", "y^2")
    W = vf(R2, "x+y", "x")
    got = lie_derivative(V, W.as_tensor())
    want = vf_bracket(V, W)
    for j in range(2):
        assert got[j] == want.components[j]


def test_lie_derivative_rejects_algebroid_slots():
    T = TensorField(R2, ((UP, "g"),), ["1", "0", "0"])
    with pytest.raises(ValueError, match="tangent-tagged"):
        lie_derivative(vf(R2, "1", "0"), T)


# --------------------------------------------------------------- contract


def test_trace_of_identity_endomorphism():
    ident = TensorField(R3, ((UP, TM), (LOW, TM)), np.eye(3, dtype=int).tolist())
    tr = tensor_contract(ident, 0, 1)
    assert tr[()] == Const(3)


def test_contraction_is_pairing():
    v = Section(R2, ("x", "y"), "tm").as_tensor()
    alpha = Section(R2, ("y", "1"), "tm*").as_tensor()
    got = tensor_contract(tensor_product(v, alpha), 0, 1)
    assert got[()] == expr("x*y + y")


def test_contracting_two_upper_slots_fails():
    v = Section(R2, ("x", "y"), "tm").as_tensor()
    both = tensor_product(v, v)
    with pytest.raises(ValueError, match="upper, lower"):
        tensor_contract(both, 0, 1)


def test_contraction_across_tags_fails():
    v = Section(R2, ("x", "y"), "tm").as_tensor()
    a = TensorField(R2, ((LOW, "g"),), ["1", "0"])
    with pytest.raises(ValueError, match="tags"):
        tensor_contract(tensor_product(v, a), 0, 1)


# ------------------------------------------------------------ declarations


def test_declared_antisymmetry_is_checked():
    with pytest.raises(ValueError, match="antisymmetric"):
        TensorField(
            R2,
            ((UP, TM), (UP, TM)),
            [["0", "x"], ["x", "0"]],
            antisymmetric=((0, 1),),
        )


def test_declared_symmetry_accepts_symmetric_data():
    metric(R2, [["1", "x*y"], ["x*y", "1+x^2"]])


def test_tm_slot_size_enforced():
    with pytest.raises(ValueError, match="tangent-tagged"):
        TensorField(R2, ((UP, TM),), ["1", "0", "0"])


def test_zero_tensor_shapes():
    z = zero_tensor(R2, ((UP, "g"), (LOW, TM)), g_rank=3)
    assert z.shape == (3, 2)
    idx, verdict = z.is_zero_field()
    assert idx is None


# ------------------------------------------------------------- properties

_coeffs = st.integers(min_value=-2, max_value=2)


def _poly_field(chart, draw_coeffs):
    # degree <= 2 polynomial components from a flat coefficient list
    names = chart.coords
    monos = ["1"] + list(names)
    for i, a in enumerate(names):
        for b in names[i:]:
            monos.append(f"{a}*{b}")
    comps = []
    for _ in range(chart.dim):
        cs = [next(draw_coeffs) for _ in monos]
        text = "+".join(f"({c})*{m}" for c, m in zip(cs, monos) if c) or "0"
        comps.append(text)
    return vf(chart, *comps)


@st.composite
def poly_fields(draw, chart=R2, count=2):
    n_monos = chart.dim + 1 + chart.dim * (chart.dim + 1) // 2
    pool = iter(draw(st.lists(_coeffs, min_size=count * chart.dim * n_monos,
                              max_size=count * chart.dim * n_monos)))
    return [_poly_field(chart, pool) for _ in range(count)]


@settings(max_examples=20, deadline=None)
@given(poly_fields(chart=R2, count=2))
def test_bracket_antisymmetry(fields):
    V, W = fields
    defect = vf_bracket(V, W) + vf_bracket(W, V)
    for c in defect.components:
        assert is_zero(c, R2).zero


@settings(max_examples=10, deadline=None)
@given(poly_fields(chart=R2, count=3))
def test_bracket_jacobi(fields):
    V, W, U = fields
    cyc = (
        vf_bracket(V, vf_bracket(W, U))
        + vf_bracket(W, vf_bracket(U, V))
        + vf_bracket(U, vf_bracket(V, W))
    )
    for c in cyc.components:
        assert is_zero(c, R2).zero


@settings(max_examples=20, deadline=None)
@given(poly_fields(chart=R2, count=1))
def test_scalar_lie_derivative_is_directional(fields):
    (V,) = fields
    f = expr("x^2*y + sin(x)")
    got = lie_derivative(V, scalar_field(R2, f))[()]
    want = sum(
        (V.components[i] * diff(f, n) for i, n in enumerate(R2.coords)),
        Const(0),
    )
    assert is_zero(got - want, R2).zero


@settings(max_examples=10, deadline=None)
@given(poly_fields(chart=R2, count=1))
def test_lie_derivative_leibniz_over_product(fields):
    (V,) = fields
    T = Section(R2, ("x", "y^2"), "tm").as_tensor()
    S = Section(R2, ("y", "x*y"), "tm*").as_tensor()
    lhs = lie_derivative(V, tensor_product(T, S))
    rhs = tensor_product(lie_derivative(V, T), S) + tensor_product(
        T, lie_derivative(V, S)
    )
    defect = lhs - rhs
    idx, verdict = defect.is_zero_field()
    assert idx is None, f"Leibniz fails at {idx}: {verdict}"
