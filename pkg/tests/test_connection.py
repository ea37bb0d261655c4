import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from contrapoisson.chart import Bivector, Chart, ChartMismatchError, Cometric, OneForm, VectorField, j_field
from contrapoisson.connection import (
    ContraConnection,
    DegeneratePlaneError,
    curvature,
    curvature_apply,
    curvature_on,
    d_endomorphism,
    d_form,
    d_multivector,
    d_oneform,
    d_vector,
    hessian,
    hessian_first,
    hessian_second,
    levi_civita,
    nabla_pi,
    nabla_R,
    nabla_R_apply,
    ricci,
    scalar_curv,
    sectional,
    sectional_batch,
    torsion,
    tri_left,
    tri_left_coordinate,
    tri_right,
    tri_right_apply,
)
from contrapoisson.forms import Form, wedge
from contrapoisson.poisson import anchor_apply, random_polynomial

from conftest import SO3, build, draw, maxabs

RIEMANN3 = {"name": "r3", "coordinates": ["x", "y", "z"], "domain": {"x": [0.5, 1.5], "y": [0.5, 1.5], "z": [0.5, 1.5]},
            "cometric": [["1+x^2", "0.2*y", "0"], ["2+z", "0.1"], ["1+y^2"]],
            "bivector": [["x*z", "y"], ["1+x*y"]]}
# so(3)* bracket with a non-flat cometric: Poisson, so curvature is antisymmetric in its last pair
POISSON3 = {**RIEMANN3, "name": "p3", "bivector": SO3["bivector"]}
HYPERBOLIC = {"name": "hyp", "coordinates": ["x", "y"], "domain": {"x": [-1, 1], "y": [0.5, 2]},
              "cometric": [["y^2", "0"], ["y^2"]], "bivector": [["y^2"]]}


def _oneform(c, rng):
    return OneForm(c, [random_polynomial(c, rng, 2, 2) for _ in range(c.dim)])


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return maxabs(a - b) / max(1.0, maxabs(a), maxabs(b))


def _fd_field(S, t, h=1e-5):
    """Central finite differences of a tensor field's values: shape (N, n, *t.shape)."""
    c = S.chart
    out = []
    for k, name in enumerate(c.coords):
        up = [dict(p, **{name: p[name] + h}) for p in S.points]
        dn = [dict(p, **{name: p[name] - h}) for p in S.points]
        Su, Sd = type(S)(c, up), type(S)(c, dn)
        out.append((Su.field(t) - Sd.field(t)) / (2 * h))
    return np.stack(out, axis=1)


def test_levi_civita_trivial_cases():
    c = Chart.box("r2", ["x", "y"])
    D = levi_civita(Cometric.diagonal(c, ["2", "3"]), Bivector.from_upper(c, {(0, 1): "5"}))
    assert all(e.is_zero for e in D.gamma.flat)
    c3, g3, pi3 = build(SO3)
    D = levi_civita(Cometric.identity(c3), Bivector.zero(c3))
    assert all(e.is_zero for e in D.gamma.flat)


@pytest.mark.parametrize("defn", [SO3, RIEMANN3])
def test_levi_civita_matches_numeric_koszul_system(defn):
    c, g, pi = build(defn)
    S = draw(c, 40)
    D = levi_civita(g, pi)
    G, P = S.field(g), S.field(pi)
    dG, dP = _fd_field(S, g), _fd_field(S, pi)
    n = c.dim
    sdg = np.einsum("nil,nljk->nijk", P, dG)  # #dx^i g^{jk}
    kos = np.einsum("nkij,nkm->nijm", dP, G)  # g([dx^i, dx^j], dx^m)
    # 2 g(D_a b, c) = #a g(b,c) + #b g(a,c) - #c g(a,b) + g([a,b],c) - g([b,c],a) + g([c,a],b)
    rhs = np.empty((len(S), n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                rhs[:, i, j, k] = 0.5 * (sdg[:, i, j, k] + sdg[:, j, i, k] - sdg[:, k, i, j]
                                         + kos[:, i, j, k] - kos[:, j, k, i] + kos[:, k, i, j])
    # Gamma^{ij}_m g^{mk} = rhs[i, j, k]  ->  Gamma = rhs G^{-1}
    oracle = np.einsum("nijk,nkm->nijm", rhs, np.linalg.inv(G))
    gamma = S.field(D.gamma)
    assert _rel(gamma, oracle) <= 1e-6


@pytest.mark.parametrize("defn", [SO3, RIEMANN3])
def test_metric_parallel_and_torsion_free(defn):
    c, g, pi = build(defn)
    S = draw(c, 100)
    D = levi_civita(g, pi)
    assert maxabs(S.field(torsion(D))) <= 1e-9
    rng = np.random.default_rng(0)
    for _ in range(3):
        a, b, cc = (_oneform(c, rng) for _ in range(3))
        lhs = S.eval(anchor_apply(pi, a).apply(g(b, cc)))
        rhs = S.eval(g(d_oneform(D, a, b), cc) + g(b, d_oneform(D, a, cc)))
        assert _rel(lhs, rhs) <= 1e-9


def test_derivative_examples_with_flat_coefficients():
    c, _, pi = build({"coordinates": ["x", "y"], "bivector": [["1"]]})
    D = ContraConnection.flat(pi)
    a = OneForm(c, ["x", "y^2"])
    assert d_oneform(D, a, c.coframe(1)).is_zero
    phi = c.parse("x*y")
    S = draw(c, 20)
    lhs = d_oneform(D, a, c.coframe(1) * phi)
    rhs = c.coframe(1) * anchor_apply(pi, a).apply(phi)
    assert _rel(S.field(lhs), S.field(rhs)) <= 1e-14
    assert d_vector(D, a, VectorField(c, ["2", "-1"])).is_zero


@given(st.integers(0, 10_000))
def test_derivation_axioms_on_so3(seed):
    c, g, pi = build(SO3)
    S = draw(c, 30)
    D = levi_civita(g, pi)
    rng = np.random.default_rng(seed)
    a, b = _oneform(c, rng), _oneform(c, rng)
    phi = random_polynomial(c, rng)
    lhs = S.field(d_oneform(D, a, b * phi))
    rhs = S.field(b * anchor_apply(pi, a).apply(phi) + d_oneform(D, a, b) * phi)
    assert _rel(lhs, rhs) <= 1e-9
    assert _rel(S.field(d_oneform(D, a * phi, b)), S.field(d_oneform(D, a, b) * phi)) <= 1e-9


@given(st.integers(0, 10_000))
def test_vector_multivector_and_form_derivatives_agree(seed):
    c, g, pi = build(SO3)
    S = draw(c, 30)
    D = levi_civita(g, pi)
    rng = np.random.default_rng(seed)
    a, b = _oneform(c, rng), _oneform(c, rng)
    X = VectorField(c, [random_polynomial(c, rng, 2, 2) for _ in range(3)])
    # r = 1 multivector path equals the vector path
    assert _rel(S.field(d_multivector(D, a, X)), S.field(d_vector(D, a, X))) <= 1e-12
    # duality: #a(b(X)) = (D_a b)(X) + b(D_a X)
    lhs = S.eval(anchor_apply(pi, a).apply(b.pair(X)))
    rhs = S.eval(d_oneform(D, a, b).pair(X) + b.pair(d_vector(D, a, X)))
    assert _rel(lhs, rhs) <= 1e-9
    # forms: degree one agrees with d_oneform and D_a is a derivation of the wedge product
    fb = Form.from_oneform(b)
    assert _rel(d_form(D, a, fb).dense(S), Form.from_oneform(d_oneform(D, a, b)).dense(S)) <= 1e-12
    e = Form.from_oneform(_oneform(c, rng))
    lhs = d_form(D, a, wedge(fb, e)).dense(S)
    rhs = (wedge(d_form(D, a, fb), e) + wedge(fb, d_form(D, a, e))).dense(S)
    assert _rel(lhs, rhs) <= 1e-9
    # bivector derivative agrees with the pairing rule
    Q = d_multivector(D, a, pi)
    lhs = S.eval(Q(b, c.coframe(0)))
    rhs = S.eval(anchor_apply(pi, a).apply(pi(b, c.coframe(0))) - pi(d_oneform(D, a, b), c.coframe(0))
                 - pi(b, d_oneform(D, a, c.coframe(0))))
    assert _rel(lhs, rhs) <= 1e-9


def test_curvature_zero_for_flat_constant():
    c, _, pi = build({"coordinates": ["x", "y", "z"], "bivector": [["1", "0"], ["2"]]})
    assert curvature(ContraConnection.flat(pi)).is_zero


@pytest.mark.parametrize("defn", [SO3, RIEMANN3])
def test_curvature_table_matches_composition(defn):
    c, g, pi = build(defn)
    S = draw(c, 20)
    D = levi_civita(g, pi)
    R = curvature(D)
    Rv = S.field(R)
    assert maxabs(Rv + np.swapaxes(Rv, 1, 2)) <= 1e-9 * max(1.0, maxabs(Rv))
    if defn is SO3:
        rng = np.random.default_rng(1)
        a, b, cc = (_oneform(c, rng) for _ in range(3))
        assert _rel(S.field(curvature_on(R, a, b, cc)), S.field(curvature_apply(D, a, b, cc))) <= 1e-9
    for i in range(c.dim):
        for j in range(c.dim):
            for k in range(c.dim):
                comp = S.field(curvature_apply(D, c.coframe(i), c.coframe(j), c.coframe(k)))
                if defn is SO3:
                    assert _rel(Rv[:, i, j, k, :], comp) <= 1e-9


def test_nabla_pi_formula_oracle_and_trivial_case():
    c, g, pi = build({"coordinates": ["x", "y"], "bivector": [["1"]]})
    assert nabla_pi(levi_civita(g, pi)).is_zero
    c, g, pi = build(SO3)
    S = draw(c, 30)
    D = levi_civita(g, pi)
    DP = S.field(nabla_pi(D))
    cf = [c.coframe(i) for i in range(3)]
    for a in range(3):
        for b in range(3):
            for k in range(3):
                oracle = (anchor_apply(pi, cf[a]).apply(pi(cf[b], cf[k])) - pi(d_oneform(D, cf[a], cf[b]), cf[k])
                          - pi(cf[b], d_oneform(D, cf[a], cf[k])))
                assert _rel(DP[:, a, b, k], S.eval(oracle)) <= 1e-9


def test_nabla_R_trivial_and_composition_oracle():
    c, _, pi = build({"coordinates": ["x", "y"], "bivector": [["1"]]})
    assert nabla_R(ContraConnection.flat(pi)).is_zero
    c, g, pi = build(SO3)
    S = draw(c, 10)
    D = levi_civita(g, pi)
    DR = S.field(nabla_R(D))
    cf = [c.coframe(i) for i in range(3)]
    for a, b, cc, d in [(0, 1, 2, 0), (2, 0, 1, 1), (1, 1, 2, 2)]:
        assert _rel(DR[:, a, b, cc, d, :], S.field(nabla_R_apply(D, cf[a], cf[b], cf[cc], cf[d]))) <= 1e-9


def _orthonormal_coframe(G):
    """Columns are coframe vectors e_a with e_a^T G e_b = delta_ab (Gram-Schmidt on the standard basis)."""
    n = G.shape[0]
    basis = []
    for i in range(n):
        v = np.eye(n)[i]
        for e in basis:
            v = v - (e @ G @ v) * e
        basis.append(v / np.sqrt(v @ G @ v))
    return np.array(basis).T


def test_ricci_and_scalar_against_orthonormal_coframe():
    c, g, pi = build(RIEMANN3)
    S = draw(c, 10)
    D = levi_civita(g, pi)
    R = curvature(D)
    Rv, Gv = S.field(R), S.field(g)
    rv, sv = S.field(ricci(g, D, R)), S.eval(scalar_curv(g, D, R))
    for p in range(len(S)):
        E = _orthonormal_coframe(Gv[p])
        # r(dx^a, dx^b) = sum_e g(R(dx^a, e) e, dx^b)
        Re = np.einsum("aijm,ie,je->aem", Rv[p], E, E).sum(axis=1)
        oracle = Re @ Gv[p]
        assert _rel(rv[p], oracle) <= 1e-9
        s_oracle = sum(E[:, e] @ oracle @ E[:, e] for e in range(3))
        assert abs(sv[p] - s_oracle) <= 1e-9 * max(1.0, abs(s_oracle))


def test_flat_traces_vanish():
    c, g, pi = build({"coordinates": ["x", "y"], "bivector": [["1"]]})
    D = levi_civita(g, pi)
    assert ricci(g, D).is_zero
    assert scalar_curv(g, D).is_zero


@given(st.integers(0, 10_000))
def test_sectional_symmetry_and_scale_invariance(seed):
    c, g, pi = build(POISSON3)
    S = draw(c, 20)
    D = levi_civita(g, pi)
    R = curvature(D)
    rng = np.random.default_rng(seed)
    a, b = _oneform(c, rng), _oneform(c, rng)
    try:
        k = sectional_batch(g, D, a, b, S, R)
    except DegeneratePlaneError:
        return
    assert _rel(k, sectional_batch(g, D, b, a, S, R)) <= 1e-9
    assert _rel(k, sectional_batch(g, D, a * 2.0, b, S, R)) <= 1e-9


def test_sectional_flat_and_degenerate():
    c, g, pi = build({"coordinates": ["x", "y"], "bivector": [["1"]]})
    D = levi_civita(g, pi)
    assert sectional(g, D, c.coframe(0), c.coframe(1), {"x": 0.1, "y": 0.2}) == 0.0
    with pytest.raises(DegeneratePlaneError):
        sectional(g, D, c.coframe(0), c.coframe(0) * 2.0, {"x": 0.1, "y": 0.2})


def test_hessian_flat_pattern():
    c, g, pi = build({"coordinates": ["x", "y", "z"], "bivector": [["1", "2"], ["-1"]]})
    D = levi_civita(g, pi)
    S = draw(c, 10)
    P = S.field(pi)[0]
    hess_phi = np.zeros((3, 3))
    hess_phi[0, 0] = 2.0  # phi = x^2
    oracle = P @ hess_phi @ P.T
    H1, H2 = hessian(g, pi, D, "x^2")
    assert maxabs(S.field(H1) - oracle) <= 1e-12
    assert maxabs(S.field(H2) - oracle) <= 1e-12
    assert hessian_first(D, "3").is_zero


@pytest.mark.parametrize("defn", [SO3, RIEMANN3])
def test_hessian_dual_formula_and_symmetry(defn):
    c, g, pi = build(defn)
    S = draw(c, 50)
    D = levi_civita(g, pi)
    J = j_field(g, pi)
    for phi in ("x^2+y^2+z^2", "x*y+z^3", "exp(0.2*x)*y"):
        H1, H2 = S.field(hessian_first(D, phi)), S.field(hessian_second(g, D, phi, J))
        assert _rel(H1, H2) <= 1e-9
        if defn is SO3:
            assert _rel(H1, np.swapaxes(H1, 1, 2)) <= 1e-9


def test_casimir_hessian_first_expression_vanishes():
    c, g, pi = build(SO3)
    S = draw(c, 30)
    D = levi_civita(g, pi)
    # the anchor of a Casimir differential vanishes, and so does every term of the first Hessian
    H = S.field(hessian_first(D, "x^2+y^2+z^2"))
    assert maxabs(H) <= 1e-12


def test_trace_operators():
    c, g, pi = build(SO3)
    S = draw(c, 100)
    D = levi_civita(g, pi)
    assert tri_right_apply(D, "2").is_zero
    assert maxabs(S.eval(tri_left(g, pi, D, "5"))) == 0.0
    rng = np.random.default_rng(3)
    f, h = random_polynomial(c, rng), random_polynomial(c, rng)
    lhs = S.eval(tri_right_apply(D, f * h))
    rhs = S.eval(f * tri_right_apply(D, h) + h * tri_right_apply(D, f))
    assert _rel(lhs, rhs) <= 1e-9
    assert _rel(S.eval(tri_right(D).apply(f)), S.eval(tri_right_apply(D, f))) <= 1e-12
    # g = identity and the contracted coefficients vanish on so(3)*: the coordinate formula applies
    assert maxabs(S.field(tri_right(D))) <= 1e-12
    for phi in (f, h, c.parse("x*y*z")):
        assert _rel(S.eval(tri_left(g, pi, D, phi)), S.eval(tri_left_coordinate(pi, phi))) <= 1e-9


def test_dj_vanishes_on_riemannian_poisson_structure():
    c, g, pi = build(HYPERBOLIC)
    S = draw(c, 50)
    D = levi_civita(g, pi)
    assert maxabs(S.field(nabla_pi(D))) <= 1e-9
    J = j_field(g, pi)
    for a in range(2):
        assert maxabs(S.field(d_endomorphism(D, c.coframe(a), J))) <= 1e-9


def test_chart_mismatch():
    c, g, pi = build(SO3)
    D = levi_civita(g, pi)
    other = Chart.box("o", ["u", "v", "w"])
    with pytest.raises(ChartMismatchError):
        d_oneform(D, other.coframe(0), other.coframe(1))
