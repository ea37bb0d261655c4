import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from contrapoisson.chart import Bivector, Chart, ChartMismatchError, OneForm, Samples, gradient
from contrapoisson.poisson import (
    anchor_apply,
    is_casimir,
    is_poisson,
    jacobiator,
    koszul_bracket,
    lie_bracket,
    poisson_bracket,
    random_polynomial,
    rank_at,
    rank_batch,
    schouten_bracket,
    schouten_self,
)

from conftest import SO3, SYMPLECTIC, build, draw, maxabs

NON_POISSON_R4 = {"coordinates": ["x1", "x2", "x3", "x4"], "bivector": [["1", "0", "0"], ["0", "0"], ["x1"]]}


def _oneform(c, rng):
    return OneForm(c, [random_polynomial(c, rng, 2, 2) for _ in range(c.dim)])


def test_anchor_examples():
    c, _, pi = build(SYMPLECTIC)
    assert [e.value for e in anchor_apply(pi, c.coframe(0)).comps] == [0.0, 1.0]
    assert [e.value for e in anchor_apply(pi, c.coframe(1)).comps] == [-1.0, 0.0]
    assert anchor_apply(Bivector.zero(c), c.coframe(0)).is_zero


def test_anchor_component_formula_on_so3():
    c, _, pi = build(SO3)
    S = draw(c, 100)
    P = S.field(pi)
    for a in range(3):
        assert maxabs(S.field(anchor_apply(pi, c.coframe(a))) - P[:, a, :]) <= 1e-12


@given(st.integers(0, 10_000))
def test_anchor_defining_relation(seed):
    c, _, pi = build(SO3)
    S = draw(c, 20)
    rng = np.random.default_rng(seed)
    alpha = _oneform(c, rng)
    for b in range(3):
        beta = c.coframe(b)
        lhs = S.eval(beta.pair(anchor_apply(pi, alpha)))
        assert maxabs(lhs - S.eval(pi(alpha, beta))) <= 1e-12 * max(1.0, maxabs(lhs))


def test_bracket_examples():
    c, _, pi = build(SYMPLECTIC)
    assert poisson_bracket(pi, "x", "y").value == 1.0
    c3, _, pi3 = build(SO3)
    S = draw(c3, 30)
    assert maxabs(S.eval(poisson_bracket(pi3, "x", "y")) - S.array[:, 2]) <= 1e-15


@given(st.integers(0, 10_000))
def test_bracket_antisymmetry_and_leibniz(seed):
    c, _, pi = build(SO3)
    S = draw(c, 20)
    rng = np.random.default_rng(seed)
    f, g, h = (random_polynomial(c, rng) for _ in range(3))
    b = lambda u, v: poisson_bracket(pi, u, v)
    assert maxabs(S.eval(b(f, f))) <= 1e-12
    assert maxabs(S.eval(b(f, g) + b(g, f))) <= 1e-12 * max(1.0, maxabs(S.eval(b(f, g))))
    lhs, rhs = S.eval(b(f, g * h)), S.eval(b(f, g) * h + g * b(f, h))
    assert maxabs(lhs - rhs) <= 1e-10 * max(1.0, maxabs(lhs))


def test_schouten_trivial_cases():
    c, _, pi = build(SYMPLECTIC)
    assert schouten_self(pi).is_zero
    c4 = Chart.box("r4", ["a", "b", "c", "d"])
    const_pi = Bivector.from_upper(c4, {(0, 1): "2", (2, 3): "-1", (0, 3): "0.5"})
    assert schouten_self(const_pi).is_zero


def test_schouten_so3_vanishes_and_r4_does_not():
    c, _, pi = build(SO3)
    S = draw(c, 100)
    assert maxabs(S.field(schouten_self(pi))) <= 1e-12
    c4, _, pi4 = build(NON_POISSON_R4)
    S4 = draw(c4, 50)
    T = S4.field(schouten_self(pi4))
    # oracle: the only nonzero cyclic sum has d_1 pi^{34} pi^{12} = 1 at [2,3,1] and its permutations
    assert maxabs(T[:, 2, 3, 1] - 1.0) <= 1e-15
    assert maxabs(T[:, 1, 2, 3] - 1.0) <= 1e-15
    assert maxabs(T[:, 0, 2, 3]) <= 1e-15


def test_schouten_antisymmetric_under_permutations():
    c4, _, pi4 = build({"coordinates": ["a", "b", "c", "d"], "bivector": [["b*c", "1", "a^2"], ["d", "0"], ["a*b"]]})
    S = draw(c4, 30)
    T = S.field(schouten_self(pi4))
    for perm in itertools.permutations(range(3)):
        sign = np.linalg.det(np.eye(3)[list(perm)])
        assert maxabs(np.transpose(T, (0,) + tuple(p + 1 for p in perm)) - sign * T) <= 1e-12


@given(st.integers(0, 10_000))
def test_jacobiator_is_half_the_schouten_bracket(seed):
    c4, _, pi4 = build({"coordinates": ["a", "b", "c", "d"], "bivector": [["b*c", "1", "a^2"], ["d", "0"], ["a*b"]]})
    S = draw(c4, 20)
    rng = np.random.default_rng(seed)
    f, g, h = (random_polynomial(c4, rng) for _ in range(3))
    lhs = S.eval(jacobiator(pi4, f, g, h))
    rhs = 0.5 * S.eval(schouten_bracket(pi4)(gradient(c4, f), gradient(c4, g), gradient(c4, h)))
    assert maxabs(lhs - rhs) <= 1e-9 * max(1.0, maxabs(lhs))


def test_is_poisson_examples():
    c, _, pi = build(SYMPLECTIC)
    assert is_poisson(pi, draw(c, 20)).passed
    c3, _, pi3 = build(SO3)
    assert is_poisson(pi3, draw(c3, 50)).passed
    c4, _, pi4 = build(NON_POISSON_R4)
    rep = is_poisson(pi4, draw(c4, 50))
    assert rep.status == "fail"
    assert rep["jacobiator_random_triples"].max_residual > 1e-3
    assert rep["schouten_cyclic_sum"].max_residual > 1e-3


def test_koszul_examples():
    c4 = Chart.box("r4", ["a", "b", "c", "d"])
    const_pi = Bivector.from_upper(c4, {(0, 1): "2", (2, 3): "-1"})
    for i in range(4):
        for j in range(4):
            assert koszul_bracket(const_pi, c4.coframe(i), c4.coframe(j)).is_zero


@given(st.integers(0, 10_000))
def test_koszul_on_exact_forms_and_anchor_morphism(seed):
    c, _, pi = build(SO3)
    S = draw(c, 100)
    rng = np.random.default_rng(seed)
    f, g = random_polynomial(c, rng), random_polynomial(c, rng)
    lhs = S.field(koszul_bracket(pi, gradient(c, f), gradient(c, g)))
    rhs = S.field(gradient(c, poisson_bracket(pi, f, g)))
    assert maxabs(lhs - rhs) <= 1e-9 * max(1.0, maxabs(lhs))
    a, b = _oneform(c, rng), _oneform(c, rng)
    k = S.field(koszul_bracket(pi, a, b))
    assert maxabs(k + S.field(koszul_bracket(pi, b, a))) <= 1e-9 * max(1.0, maxabs(k))
    lhs = S.field(anchor_apply(pi, koszul_bracket(pi, a, b)))
    rhs = S.field(lie_bracket(anchor_apply(pi, a), anchor_apply(pi, b)))
    assert maxabs(lhs - rhs) <= 1e-9 * max(1.0, maxabs(lhs))


def test_casimir_examples():
    c, _, pi = build(SO3)
    S = draw(c, 50)
    assert is_casimir(pi, "3", S).passed
    assert is_casimir(pi, "x^2+y^2+z^2", S).passed
    assert not is_casimir(pi, "x", S).passed
    c2, _, pi2 = build(SYMPLECTIC)
    assert is_casimir(pi2, "x", draw(c2, 10)).status == "fail"


def test_rank_examples():
    c, _, pi = build(SYMPLECTIC)
    assert rank_at(pi, {"x": 0.3, "y": -0.2}) == 2
    assert rank_at(Bivector.zero(c), {"x": 0.3, "y": -0.2}) == 0
    c3, _, pi3 = build(SO3)
    assert rank_at(pi3, {"x": 1.0, "y": 0.0, "z": 0.0}) == 2
    assert rank_at(pi3, {"x": 0.0, "y": 0.0, "z": 0.0}) == 0


@given(st.integers(0, 10_000))
def test_rank_is_even(seed):
    c4, _, pi4 = build({"coordinates": ["a", "b", "c", "d"], "bivector": [["b*c", "1", "a^2"], ["d", "0"], ["a*b"]]})
    S = Samples.draw(c4, 10, seed)
    assert np.all(rank_batch(pi4, S) % 2 == 0)


def test_chart_mismatch():
    c, _, pi = build(SYMPLECTIC)
    other = Chart.box("o", ["u", "v"])
    with pytest.raises(ChartMismatchError):
        anchor_apply(pi, other.coframe(0))
