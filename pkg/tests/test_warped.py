import numpy as np
import pytest

from contrapoisson.chart import Chart, OneForm, VectorField, gradient, parse_chart_def
from contrapoisson.connection import (
    curvature,
    curvature_apply,
    d_oneform,
    levi_civita,
    nabla_pi,
    ricci,
    scalar_curv,
    sectional_batch,
    torsion_apply,
)
from contrapoisson.forms import Form, wedge
from contrapoisson.poisson import anchor_apply, is_poisson, koszul_bracket, lie_bracket, random_polynomial
from contrapoisson.verify import get_fixture
from contrapoisson.warped import (
    FactorMismatchError,
    ProductChart,
    anchor_block,
    connection_block,
    curvature_block,
    dmu_connection,
    dmu_curvature_block,
    dmu_curvature_block_corrected,
    dmu_torsion_block,
    dpi_block,
    koszul_on_product,
    lambda_tensor,
    parse_warped_def,
    ricci_block,
    scalar_block,
    sectional_block,
    warped_levi_civita,
    wedge_tensor,
)

from conftest import maxabs


def _ws(name):
    return parse_warped_def(get_fixture(name).definition)


def _rel(a, b, *terms):
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = max([1.0, maxabs(a), maxabs(b)] + [maxabs(np.asarray(t, float)) for t in terms])
    return maxabs(a - b) / scale


def _oneform(c, rng):
    return OneForm(c, [random_polynomial(c, rng, 2, 2) for _ in range(c.dim)])


def _pairs(ws, rng, k=3):
    return [(_oneform(ws.base, rng), _oneform(ws.fiber, rng)) for _ in range(k)]


@pytest.fixture(scope="module")
def generic():
    ws = _ws("warpedGeneric")
    return ws, ws.samples(24, 5)


@pytest.fixture(scope="module")
def noncasimir():
    ws = _ws("warpedNonCasimirMu")
    return ws, ws.samples(24, 5)


def test_lifts_commute_with_calculus(generic):
    ws, S = generic
    rng = np.random.default_rng(0)
    phi = random_polynomial(ws.base, rng)
    X = VectorField(ws.base, [random_polynomial(ws.base, rng, 2, 2) for _ in range(3)])
    Y = VectorField(ws.base, [random_polynomial(ws.base, rng, 2, 2) for _ in range(3)])
    assert _rel(S.eval(ws.h(X).apply(ws.h(phi))), S.eval(ws.h(X.apply(phi)))) <= 1e-12
    assert _rel(S.field(lie_bracket(ws.h(X), ws.h(Y))), S.field(ws.h(lie_bracket(X, Y)))) <= 1e-12
    psi = random_polynomial(ws.fiber, rng)
    assert ws.h(X).apply(ws.v(psi)).is_zero
    a, b = Form.from_oneform(_oneform(ws.base, rng)), Form.from_oneform(_oneform(ws.base, rng))
    assert _rel(ws.h(wedge(a, b)).dense(S), wedge(ws.h(a), ws.h(b)).dense(S)) <= 1e-12
    assert _rel(ws.h(a.d()).dense(S), ws.h(a).d().dense(S)) <= 1e-12
    assert _rel(S.field(gradient(ws.chart, ws.h(phi))), S.field(ws.h(gradient(ws.base, phi)))) <= 1e-12


def test_lift_rejects_foreign_objects(generic):
    ws, _ = generic
    with pytest.raises(FactorMismatchError):
        ws.h(ws.fiber.coframe(0))
    with pytest.raises(FactorMismatchError):
        ws.v(ws.base.parse("x"))
    with pytest.raises(FactorMismatchError):
        ws.h(Chart.box("o", ["p"]).coframe(0))


def test_block_pairings(generic):
    ws, S = generic
    rng = np.random.default_rng(1)
    (a1, a2), (b1, b2) = _pairs(ws, rng, 2)
    a, b = ws.h(a1) + ws.v(a2), ws.h(b1) + ws.v(b2)
    assert _rel(S.eval(ws.pi_mu(a, b)), S.eval(ws.pi1(a1, b1) + ws.mu * ws.pi2(a2, b2))) <= 1e-12
    assert _rel(S.eval(ws.g_f(a, b)), S.eval(ws.g1(a1, b1) + ws.f * ws.g2(a2, b2))) <= 1e-12
    assert _rel(S.field(anchor_apply(ws.pi_mu, a)), S.field(anchor_block(ws, a1, a2))) <= 1e-12


def test_koszul_bracket_on_product(noncasimir):
    ws, S = noncasimir
    rng = np.random.default_rng(2)
    (a1, a2), (b1, b2) = _pairs(ws, rng, 2)
    lhs = S.field(koszul_bracket(ws.pi_mu, ws.h(a1) + ws.v(a2), ws.h(b1) + ws.v(b2)))
    assert _rel(lhs, S.field(koszul_on_product(ws, a1, a2, b1, b2))) <= 1e-9


@pytest.mark.parametrize("name", ["warpedGeneric", "warpedNonCasimirMu", "warpedRich", "geomCurvedBase"])
def test_block_connection_matches_generic_levi_civita(name):
    ws = _ws(name)
    S = ws.samples(16, 2)
    block = S.field(warped_levi_civita(ws).gamma)
    generic = S.field(levi_civita(ws.g_f, ws.pi_mu).gamma)
    assert _rel(block, generic) <= 1e-9


def test_connection_block_on_mixed_forms(generic):
    ws, S = generic
    D = levi_civita(ws.g_f, ws.pi_mu)
    rng = np.random.default_rng(3)
    (a1, a2), (b1, b2) = _pairs(ws, rng, 2)
    lhs = S.field(d_oneform(D, ws.h(a1) + ws.v(a2), ws.h(b1) + ws.v(b2)))
    assert _rel(lhs, S.field(connection_block(ws, a1, a2, b1, b2))) <= 1e-9


@pytest.mark.parametrize("fixture_name", ["generic", "noncasimir"])
def test_dpi_block_matches_nabla_pi(fixture_name, request):
    ws, S = request.getfixturevalue(fixture_name)
    D = levi_civita(ws.g_f, ws.pi_mu)
    DP = nabla_pi(D)
    rng = np.random.default_rng(4)
    (a1, a2), (b1, b2), (c1, c2) = _pairs(ws, rng, 3)
    lifted = [ws.h(x1) + ws.v(x2) for x1, x2 in ((a1, a2), (b1, b2), (c1, c2))]
    lhs = S.eval(DP(*lifted))
    assert _rel(lhs, S.eval(dpi_block(ws, a1, a2, b1, b2, c1, c2))) <= 1e-9
    literal = S.eval(dpi_block(ws, a1, a2, b1, b2, c1, c2, literal=True))
    if fixture_name == "noncasimir":
        # the literal (h, v, v) block drops pi1(a1, dmu) pi2(b2, c2)
        assert _rel(lhs, literal) > 1e-3
    else:
        assert _rel(lhs, literal) <= 1e-9


def test_curvature_block_matches_composition(generic):
    ws, S = generic
    D = levi_civita(ws.g_f, ws.pi_mu)
    rng = np.random.default_rng(5)
    (a1, a2), (b1, b2), (c1, c2) = _pairs(ws, rng, 3)
    a, b, c = (ws.h(x1) + ws.v(x2) for x1, x2 in ((a1, a2), (b1, b2), (c1, c2)))
    lhs = S.field(curvature_apply(D, a, b, c))
    assert _rel(lhs, S.field(curvature_block(ws, a1, a2, b1, b2, c1, c2))) <= 1e-9
    assert _rel(lhs, S.field(curvature_block(ws, a1, a2, b1, b2, c1, c2, literal=True))) > 1e-3


def test_ricci_scalar_sectional_blocks(generic):
    ws, S = generic
    D = levi_civita(ws.g_f, ws.pi_mu)
    R = curvature(D)
    r = ricci(ws.g_f, D, R)
    rng = np.random.default_rng(6)
    (a1, a2), (b1, b2) = _pairs(ws, rng, 2)
    z1 = OneForm(ws.base, ["0"] * ws.base.dim)
    z2 = OneForm(ws.fiber, ["0"] * ws.fiber.dim)
    assert _rel(S.eval(r(ws.h(a1), ws.h(b1))), S.eval(ricci_block(ws, "hh", a1, b1))) <= 1e-9
    assert _rel(S.eval(r(ws.v(a2), ws.v(b2))), S.eval(ricci_block(ws, "vv", a2, b2))) <= 1e-9
    hv = S.eval(r(ws.h(a1), ws.v(b2)))
    assert _rel(hv, S.eval(ricci_block(ws, "hv", a1, b2))) <= 1e-9
    assert _rel(hv, S.eval(ricci_block(ws, "hv", a1, b2, literal=True))) > 1e-3
    assert _rel(S.eval(scalar_curv(ws.g_f, D, R)), S.eval(scalar_block(ws))) <= 1e-9
    for kind, x, y, lx, ly in (("hh", a1, b1, ws.h(a1), ws.h(b1)), ("hv", a1, b2, ws.h(a1), ws.v(b2)),
                               ("vv", a2, b2, ws.v(a2), ws.v(b2))):
        k = sectional_batch(ws.g_f, D, lx, ly, S, R)
        assert _rel(k, S.eval(sectional_block(ws, kind, x, y))) <= 1e-9
    with pytest.raises(ValueError):
        ricci_block(ws, "vh", z1, z2)


def test_dmu_connection_torsion_and_curvature(generic):
    ws, S = generic
    D = dmu_connection(ws.D1, ws.D2, ws.mu, ws.chart)
    rng = np.random.default_rng(7)
    (a1, a2), (b1, b2), (c1, c2) = _pairs(ws, rng, 3)
    a, b, c = (ws.h(x1) + ws.v(x2) for x1, x2 in ((a1, a2), (b1, b2), (c1, c2)))
    # block rules
    assert _rel(S.field(d_oneform(D, ws.h(a1), ws.h(b1))), S.field(ws.h(d_oneform(ws.D1, a1, b1)))) <= 1e-12
    assert _rel(S.field(d_oneform(D, ws.v(a2), ws.v(b2))),
                S.field(ws.v(d_oneform(ws.D2, a2, b2)) * ws.mu)) <= 1e-12
    assert d_oneform(D, ws.h(a1), ws.v(ws.fiber.coframe(0))).is_zero
    T = S.field(torsion_apply(D, a, b))
    assert _rel(T, S.field(dmu_torsion_block(ws, ws.D1, ws.D2, a1, a2, b1, b2))) <= 1e-9
    Rv = S.field(curvature_apply(D, a, b, c))
    assert _rel(Rv, S.field(dmu_curvature_block_corrected(ws, ws.D1, ws.D2, a1, a2, b1, b2, c1, c2))) <= 1e-9
    assert _rel(Rv, S.field(dmu_curvature_block(ws, ws.D1, ws.D2, a1, a2, b1, b2, c1, c2))) > 1e-3


def test_dmu_connection_short_curvature_holds_for_constant_mu():
    ws = _ws("symplecticProductConst")
    S = ws.samples(16, 3)
    D = dmu_connection(ws.D1, ws.D2, ws.mu, ws.chart)
    rng = np.random.default_rng(8)
    (a1, a2), (b1, b2), (c1, c2) = _pairs(ws, rng, 3)
    a, b, c = (ws.h(x1) + ws.v(x2) for x1, x2 in ((a1, a2), (b1, b2), (c1, c2)))
    lhs = S.field(curvature_apply(D, a, b, c))
    assert _rel(lhs, S.field(dmu_curvature_block(ws, ws.D1, ws.D2, a1, a2, b1, b2, c1, c2))) <= 1e-9


def test_wedge_tensor_and_lambda_tensor():
    ws = _ws("extraTensors")
    S = ws.samples(16, 4)
    assert wedge_tensor(ws, "3", "u").is_zero
    assert is_poisson(wedge_tensor(ws), S).passed
    lam = lambda_tensor(ws, "1", "1", "2", "u")
    plain = ws.h(ws.pi1) + ws.v(ws.pi2)
    assert _rel(S.field(lam), S.field(plain)) <= 1e-14
    assert is_poisson(lambda_tensor(ws), S).passed
    bad = lambda_tensor(ws, "x", "1")
    assert not is_poisson(bad, S).passed
    with pytest.raises(ValueError):
        wedge_tensor(_ws("warpedGeneric"))


def test_parse_warped_def_and_factor_errors():
    d = get_fixture("warpedGeneric").definition
    ws = parse_warped_def(d)
    assert isinstance(ws.chart, ProductChart)
    assert ws.chart.coords == ("x", "y", "z", "u", "v") and ws.chart.m1 == 3 and ws.chart.m2 == 2
    with pytest.raises(FactorMismatchError):
        parse_warped_def({**d, "f": "1+u^2"})
    with pytest.raises(FactorMismatchError):
        parse_warped_def({**d, "mu": "v"})
    with pytest.raises(ValueError):
        parse_warped_def({**d, "fiber": {**d["fiber"], "coordinates": ["x", "w"]}})
    base = parse_chart_def(d["base"])
    with pytest.raises(ValueError):
        ProductChart.of(base.chart, base.chart)
