"""Identity suites.

Each suite computes the left side of an identity with the generic machinery
(poisson, connection and hawkins applied to the chart or product chart) and
the right side from block formulas or defining compositions, then records
the per-point relative residual.  Literal closed forms that turn out not to
hold are recorded as-is; where a corrected form was derived it is recorded
next to it with the suffix ``_derived``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from ..chart import (
    Bivector,
    Chart,
    Cometric,
    Metric,
    OneForm,
    Samples,
    TensorField,
    VectorField,
    cometric_guards,
    esum,
    gradient,
    invert_cometric,
    invert_cometric_numeric,
    j_field,
    sharp_g,
    singular_guards,
)
from ..connection import (
    ContraConnection,
    DegeneratePlaneError,
    curvature,
    curvature_apply,
    curvature_on,
    d_endomorphism,
    d_oneform,
    hessian_first,
    hessian_second,
    levi_civita,
    nabla_pi,
    nabla_R,
    ricci,
    scalar_curv,
    sectional_batch,
    torsion,
    torsion_apply,
    tri_left,
    tri_left_coordinate,
    tri_right,
    tri_right_apply,
)
from ..expr import ZERO, Expr
from ..forms import Form, wedge
from ..hawkins import (
    ROUTES,
    FormBracketContext,
    gen_bracket,
    is_metaflat,
    jacobi_residual,
    metacurvature,
    random_form,
)
from ..poisson import (
    anchor_apply,
    is_casimir,
    is_poisson,
    koszul_bracket,
    lie_bracket,
    poisson_bracket,
    random_polynomial,
    rank_batch,
)
from ..report import DEFAULT_TOL, FAIL_THRESHOLD, CheckReport, relative_residual
from ..warped import (
    WarpedStructure,
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
    ricci_block,
    scalar_block,
    sectional_block,
    warped_levi_civita,
    wedge_tensor,
)
from .fixtures import ALL_SUITES, GEOM_PROPERTIES, WARPED_SUITES, Fixture

__all__ = [
    "SUITES",
    "ANCHORS",
    "UnknownSuiteError",
    "FixtureSuiteMismatch",
    "run_suite",
    "prepare",
    "outcome_matches",
    "property_statuses",
    "Geometry",
]

ANCHORS = {
    "poisson_basics": "Poisson bracket, anchor and Koszul bracket basics",
    "connection_axioms": "Levi-Civita contravariant connection: metric, torsion-free, derivation axioms",
    "operators": "contravariant Hessian and the two trace operators",
    "gen_bracket_axioms": "generalized bracket on forms: antisymmetry, d-derivation, product rule, Jacobi",
    "warped_tensor": "warped bivector is Poisson iff the warping function is Casimir",
    "symplectic_cor": "symplectic factors: warped bivector symplectic iff warping function essentially constant",
    "dmu_torsion_curvature": "torsion and curvature of the block connection D^mu",
    "gen_bracket_lifts": "generalized bracket of D^mu on lifted forms",
    "extra_tensors": "Hamiltonian wedge tensor and the Lambda tensor are Poisson",
    "warped_connection": "Levi-Civita connection of the warped pair in block form",
    "warped_dpi": "covariant derivative of the warped bivector in block form",
    "warped_curvature": "curvature of the warped Levi-Civita connection in block form",
    "ricci_cor": "Ricci curvature of the warped pair in block form",
    "scalar_cor": "scalar curvature of the warped pair",
    "sectional_cor": "sectional curvature of the warped pair in block form",
    "geom_theorems": "f Casimir, mu nonzero constant: product properties iff factor properties",
}


class UnknownSuiteError(KeyError):
    pass


class FixtureSuiteMismatch(ValueError):
    pass


# -- geometry bundle -------------------------------------------------------

class Geometry:
    """A chart with cometric and bivector plus lazily built connection data."""

    def __init__(self, chart: Chart, g: Cometric, pi: Bivector, metric: Optional[Metric] = None):
        self.chart, self.g, self.pi = chart, g, pi
        self._metric = metric

    @cached_property
    def metric(self) -> Metric:
        return self._metric if self._metric is not None else invert_cometric(self.g)

    @cached_property
    def D(self) -> ContraConnection:
        return levi_civita(self.g, self.pi, self.metric)

    @cached_property
    def R(self) -> TensorField:
        return curvature(self.D)

    @cached_property
    def J(self):
        return j_field(self.g, self.pi, self.metric)

    @cached_property
    def brackets(self) -> FormBracketContext:
        return FormBracketContext(self.D)

    def guards(self) -> list:
        return singular_guards(self.g, self.pi) + cometric_guards(self.g)


@dataclass
class _Run:
    fixture: Fixture
    geo: Geometry
    S: Samples
    rng: np.random.Generator
    tol: float
    seed: int
    ws: Optional[WarpedStructure] = None

    @cached_property
    def poisson_ok(self) -> bool:
        return is_poisson(self.geo.pi, self.S, self.tol, seed=self.seed).passed


# -- residual helpers ------------------------------------------------------

def _vals(S: Samples, x) -> np.ndarray:
    if isinstance(x, Form):
        return x.dense(S)
    if isinstance(x, Expr):
        return S.eval(x)
    if isinstance(x, (int, float)):
        return float(x)
    return S.field(x)


def _res(S: Samples, lhs, rhs, *terms) -> np.ndarray:
    a, b = _vals(S, lhs), _vals(S, rhs)
    return relative_residual(a, b, *(_vals(S, t) for t in terms))


def _accumulate(worst: Optional[np.ndarray], r: np.ndarray) -> np.ndarray:
    return r if worst is None else np.maximum(worst, r)


def _rand_poly(chart: Chart, rng) -> Expr:
    return random_polynomial(chart, rng, degree=2, terms=3)


def _rand_oneform(chart: Chart, rng) -> OneForm:
    return OneForm(chart, [random_polynomial(chart, rng, degree=2, terms=2) for _ in range(chart.dim)])


def _rand_vector(chart: Chart, rng) -> VectorField:
    return VectorField(chart, [random_polynomial(chart, rng, degree=2, terms=2) for _ in range(chart.dim)])


def _zero1(chart: Chart) -> OneForm:
    return OneForm(chart, [ZERO] * chart.dim)


def _flag_record(rep: CheckReport, ident: str, lhs: bool, rhs: bool, tol: float, note: str) -> None:
    """Record agreement of two boolean statuses as a 0/1 residual."""
    rep.record(ident, np.array([0.0 if lhs == rhs else 1.0]), tol, note=note)


def _adopt(rep: CheckReport, records, prefix: str = "", rename: Optional[str] = None) -> None:
    """Copy records from a standalone check into a suite report."""
    for r in records:
        rep.add(replace(r, id=rename or f"{prefix}{r.id}"))


def _status(flag: bool) -> str:
    return "pass" if flag else "fail"


def _near_zero(S: Samples, x, tol: float) -> bool:
    return float(np.max(relative_residual(_vals(S, x), 0.0), initial=0.0)) <= tol


# -- chart suites ------------------------------------------------------------

def _poisson_basics(run: _Run, rep: CheckReport) -> None:
    geo, S, rng, tol = run.geo, run.S, run.rng, run.tol
    pi, c = geo.pi, geo.chart
    b = lambda a, d: poisson_bracket(pi, a, d)
    f, h, k = (_rand_poly(c, rng) for _ in range(3))
    rep.record("bracket_antisymmetry", _res(S, b(f, h), -b(h, f)), tol)
    rep.record("bracket_leibniz", _res(S, b(f, h * k), b(f, h) * k + h * b(f, k)), tol)
    alpha, beta = _rand_oneform(c, rng), _rand_oneform(c, rng)
    rep.record("anchor_pairing", _res(S, beta.pair(anchor_apply(pi, alpha)), pi(alpha, beta)), tol)
    rep.record("koszul_on_exact_forms",
               _res(S, koszul_bracket(pi, gradient(c, f), gradient(c, h)), gradient(c, b(f, h))), tol)
    # the anchor is a bracket morphism exactly when pi is Poisson
    lhs = anchor_apply(pi, koszul_bracket(pi, alpha, beta))
    rhs = lie_bracket(anchor_apply(pi, alpha), anchor_apply(pi, beta))
    rep.record("anchor_bracket_morphism", _res(S, lhs, rhs), tol)
    for r in is_poisson(pi, S, tol, seed=run.seed).records:
        rep.add(r)


def _connection_axioms(run: _Run, rep: CheckReport) -> None:
    geo, S, rng, tol = run.geo, run.S, run.rng, run.tol
    c, D, g = geo.chart, geo.D, geo.g
    n = c.dim
    G = D.gamma
    sharp = [anchor_apply(geo.pi, c.coframe(a)) for a in range(n)]
    t1 = np.empty((n, n, n), dtype=object)
    t2 = np.empty((n, n, n), dtype=object)
    t3 = np.empty((n, n, n), dtype=object)
    for a in range(n):
        for bb in range(n):
            for cc in range(n):
                t1[a, bb, cc] = sharp[a].apply(g.comps[bb, cc])
                t2[a, bb, cc] = esum(G[a, bb, m] * g.comps[m, cc] for m in range(n))
                t3[a, bb, cc] = esum(G[a, cc, m] * g.comps[bb, m] for m in range(n))
    v1, v2, v3 = S.field(t1), S.field(t2), S.field(t3)
    rep.record("metric_parallel", relative_residual(v1 - v2 - v3, 0.0, v1, v2, v3), tol)
    T = S.field(torsion(D))
    rep.record("torsion_free", relative_residual(T, 0.0), tol)
    phi = _rand_poly(c, rng)
    alpha, beta = _rand_oneform(c, rng), _rand_oneform(c, rng)
    lhs = d_oneform(D, alpha, beta * phi)
    rhs = beta * anchor_apply(geo.pi, alpha).apply(phi) + d_oneform(D, alpha, beta) * phi
    rep.record("derivation_leibniz", _res(S, lhs, rhs), tol)
    rep.record("function_linear", _res(S, d_oneform(D, alpha * phi, beta), d_oneform(D, alpha, beta) * phi), tol)
    Rv = S.field(geo.R)
    rep.record("curvature_antisymmetry", relative_residual(Rv + np.swapaxes(Rv, 1, 2), 0.0, Rv), tol)
    if run.poisson_ok:
        gamma = _rand_oneform(c, rng)
        rep.record("curvature_table_vs_composition",
                   _res(S, curvature_on(geo.R, alpha, beta, gamma), curvature_apply(D, alpha, beta, gamma)), tol)
    else:
        rep.skip("curvature_table_vs_composition", tol, "bivector is not Poisson, so curvature is not tensorial")


def _identity_cometric(g: Cometric) -> bool:
    n = g.chart.dim
    for i in range(n):
        for j in range(n):
            e = g.comps[i, j]
            if not e.is_const or float(e.value) != (1.0 if i == j else 0.0):
                return False
    return True


def _operators(run: _Run, rep: CheckReport) -> None:
    geo, S, rng, tol = run.geo, run.S, run.rng, run.tol
    c, D, g, pi = geo.chart, geo.D, geo.g, geo.pi
    phis = [_rand_poly(c, rng) for _ in range(3)]
    worst = sym = None
    for phi in phis:
        H1 = S.field(hessian_first(D, phi))
        H2 = S.field(hessian_second(g, D, phi, geo.J))
        worst = _accumulate(worst, relative_residual(H1, H2))
        sym = _accumulate(sym, relative_residual(H1, np.swapaxes(H1, 1, 2)))
    rep.record("hessian_dual_formula", worst, tol)
    if run.poisson_ok:
        rep.record("hessian_symmetric", sym, tol)
    else:
        rep.skip("hessian_symmetric", tol, "symmetry is claimed for Poisson bivectors only")
    f, h = phis[0], phis[1]
    lhs = tri_right_apply(D, f * h)
    rhs = f * tri_right_apply(D, h) + h * tri_right_apply(D, f)
    rep.record("tri_right_leibniz", _res(S, lhs, rhs), tol)
    rep.record("tri_right_vector_field", _res(S, tri_right(D).apply(f), tri_right_apply(D, f)), tol)
    V = tri_right(D)
    if _identity_cometric(g) and _near_zero(S, V, tol):
        worst = None
        for phi in phis:
            worst = _accumulate(worst, _res(S, tri_left(g, pi, D, phi, geo.J), tri_left_coordinate(pi, phi)))
        rep.record("tri_left_coordinate_formula", worst, tol)
    else:
        rep.skip("tri_left_coordinate_formula", tol,
                 "coordinate formula assumes g = identity and vanishing contracted coefficients")
    if _near_zero(S, nabla_pi(D), tol):
        worst = None
        for a in range(c.dim):
            worst = _accumulate(worst, relative_residual(S.field(d_endomorphism(D, c.coframe(a), geo.J)), 0.0))
        rep.record("dj_vanishes_when_dpi_vanishes", worst, tol)
    else:
        rep.skip("dj_vanishes_when_dpi_vanishes", tol, "D pi does not vanish")


def _degree_pairs(dim: int) -> list:
    return [(p, q) for p, q in ((0, 1), (1, 0), (1, 1), (0, 2), (1, 2), (2, 1)) if p + q <= dim]


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


def _form_res(S: Samples, lhs: Form, rhs: Form, *terms: Form) -> np.ndarray:
    a, b = lhs.dense(S), rhs.dense(S)
    if a.shape[1] == 0:
        return np.zeros(len(S))
    return relative_residual(a, b, *(t.dense(S) for t in terms))


def _gen_bracket_axioms(run: _Run, rep: CheckReport) -> None:
    geo, S, rng, tol = run.geo, run.S, run.rng, run.tol
    c, ctx = geo.chart, geo.brackets
    br = lambda x, y, r="first": gen_bracket(ctx, x, y, r)
    pairs = _degree_pairs(c.dim)
    forms = [(random_form(c, p, rng), random_form(c, q, rng)) for p, q in pairs]
    routes = anti = deriv = None
    for w, e in forms:
        ref = br(w, e)
        for r in ROUTES[1:]:
            routes = _accumulate(routes, _form_res(S, ref, br(w, e, r)))
        s = _sign(w.degree * e.degree)
        other = br(e, w)
        anti = _accumulate(anti, _form_res(S, ref, -other if s > 0 else other))
        if w.degree + e.degree + 1 <= c.dim:
            lhs = ref.d()
            t1, t2 = br(w.d(), e), br(w, e.d())
            rhs = t1 + (t2 if _sign(w.degree) > 0 else -t2)
            deriv = _accumulate(deriv, _form_res(S, lhs, rhs, t1, t2))
    rep.record("route_independence", routes, tol)
    rep.record("antisymmetry", anti, tol)
    if deriv is None:
        rep.skip("d_derivation", tol, "no degree pair below the top degree")
    else:
        rep.record("d_derivation", deriv, tol)
    prod = None
    for p, q, r in ((0, 1, 1), (1, 1, 1), (1, 0, 1)):
        if p + q + r > c.dim:
            continue
        w, e, l = random_form(c, p, rng), random_form(c, q, rng), random_form(c, r, rng)
        lhs = br(w, wedge(e, l))
        t1 = wedge(br(w, e), l)
        t2 = wedge(e, br(w, l))
        rhs = t1 + (t2 if _sign(p * q) > 0 else -t2)
        prod = _accumulate(prod, _form_res(S, lhs, rhs, t1, t2))
    rep.record("product_rule", prod, tol)
    flat = _near_zero(S, geo.R, tol)
    if flat:
        worst = None
        for a in range(min(c.dim, 2)):
            al, be = random_form(c, 1, rng), random_form(c, 1, rng)
            phi = c.var(a)
            m1 = metacurvature(ctx, phi, al, be)
            m2 = metacurvature(ctx, phi, be, al)
            worst = _accumulate(worst, _form_res(S, m1, m2))
        rep.record("metacurvature_symmetric", worst, tol)
    else:
        rep.skip("metacurvature_symmetric", tol, "metacurvature is defined for flat connections")
    meta = is_metaflat(ctx, S, tol, R=geo.R, seed=run.seed)
    jac = float(np.max(jacobi_residual(ctx, S, seed=run.seed)))
    jac_ok = jac <= tol
    _flag_record(rep, "jacobi_iff_metaflat", jac_ok, meta.passed, tol,
                 f"graded Jacobi {_status(jac_ok)} (max {jac:.3e}), metaflat {meta.status} "
                 f"(metacurvature max {meta['metacurvature_zero'].max_residual:.3e}, "
                 f"curvature max {meta['curvature_zero'].max_residual:.3e})")


# -- warped suites -------------------------------------------------------------

def _lifted(ws: WarpedStructure, a1: OneForm, a2: OneForm) -> OneForm:
    return ws.h(a1) + ws.v(a2)


def _factor_forms(ws: WarpedStructure, rng, k: int = 3) -> list:
    return [(_rand_oneform(ws.base, rng), _rand_oneform(ws.fiber, rng)) for _ in range(k)]


def _factor_samples(ws: WarpedStructure, S: Samples) -> tuple:
    return S.restrict(ws.base), S.restrict(ws.fiber)


def _warped_tensor(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    S1, S2 = _factor_samples(ws, S)
    # lifts
    X1, Y1, X2 = _rand_vector(ws.base, rng), _rand_vector(ws.base, rng), _rand_vector(ws.fiber, rng)
    phi1, phi2 = _rand_poly(ws.base, rng), _rand_poly(ws.fiber, rng)
    worst = _res(S, ws.h(X1).apply(phi1), ws.h(X1.apply(phi1)))
    worst = np.maximum(worst, _res(S, ws.v(X2).apply(phi2), ws.v(X2.apply(phi2))))
    worst = np.maximum(worst, _res(S, ws.h(X1).apply(phi2), 0.0))
    rep.record("lift_vector_action", worst, tol)
    X = ws.h(X1) + ws.v(X2)
    worst = _res(S, lie_bracket(X, ws.h(Y1)), ws.h(lie_bracket(X1, Y1)))
    rep.record("lift_lie_bracket", worst, tol)
    w1, e1 = random_form(ws.base, 1, rng), random_form(ws.base, 1, rng)
    w2, e2 = random_form(ws.fiber, 1, rng), random_form(ws.fiber, 1, rng)
    worst = _form_res(S, (ws.h(w1) + ws.v(w2)).d(), ws.h(w1.d()) + ws.v(w2.d()))
    worst = np.maximum(worst, _form_res(S, wedge(ws.h(w1) + ws.v(w2), ws.h(e1) + ws.v(e2)),
                                        ws.h(wedge(w1, e1)) + ws.v(wedge(w2, e2))
                                        + wedge(ws.h(w1), ws.v(e2)) + wedge(ws.v(w2), ws.h(e1))))
    rep.record("lift_d_and_wedge", worst, tol,
               note="wedge of sums also carries the mixed terms w1^h ^ e2^v + w2^v ^ e1^h")
    # bivector and cometric blocks
    (a1, a2), (b1, b2) = _factor_forms(ws, rng, 2)
    pm, gf = ws.pi_mu, ws.g_f
    worst = _res(S, pm(ws.h(a1), ws.h(b1)), ws.pi1(a1, b1))
    worst = np.maximum(worst, _res(S, pm(ws.v(a2), ws.v(b2)), ws.mu * ws.pi2(a2, b2)))
    worst = np.maximum(worst, _res(S, pm(ws.h(a1), ws.v(b2)), 0.0))
    rep.record("warped_bivector_pairings", worst, tol)
    worst = _res(S, gf(ws.h(a1), ws.h(b1)), ws.g1(a1, b1))
    worst = np.maximum(worst, _res(S, gf(ws.v(a2), ws.v(b2)), ws.f * ws.g2(a2, b2)))
    worst = np.maximum(worst, _res(S, gf(ws.h(a1), ws.v(b2)), 0.0))
    rep.record("warped_cometric_pairings", worst, tol)
    rep.record("anchor_block", _res(S, anchor_apply(pm, _lifted(ws, a1, a2)), anchor_block(ws, a1, a2)), tol)
    lhs = koszul_bracket(pm, _lifted(ws, a1, a2), _lifted(ws, b1, b2))
    rep.record("koszul_block", _res(S, lhs, koszul_on_product(ws, a1, a2, b1, b2)), tol)
    # cometric sharp, inverse sharp and metric norm against blockwise numeric inverses
    lhs = sharp_g(gf, _lifted(ws, a1, a2))
    rhs = ws.h(sharp_g(ws.g1, a1)) + ws.v(sharp_g(ws.g2, a2)) * ws.f
    rep.record("cometric_sharp_blocks", _res(S, lhs, rhs), tol)
    inv = invert_cometric_numeric(gf, S)
    inv1, inv2 = invert_cometric_numeric(ws.g1, S1), invert_cometric_numeric(ws.g2, S2)
    Xv = S.field(X)
    X1v, X2v = S1.field(X1), S2.field(X2)
    fv = S.eval(ws.f)
    flat_full = np.einsum("nij,nj->ni", inv, Xv)
    flat_blocks = np.concatenate([np.einsum("nij,nj->ni", inv1, X1v),
                                  np.einsum("nij,nj->ni", inv2, X2v) / fv[:, None]], axis=1)
    rep.record("inverse_sharp_blocks", relative_residual(flat_full, flat_blocks), tol)
    n_full = np.einsum("ni,ni->n", flat_full, Xv)
    n_blocks = np.einsum("ni,nij,nj->n", X1v, inv1, X1v) + np.einsum("ni,nij,nj->n", X2v, inv2, X2v) / fv
    rep.record("metric_norm_blocks", relative_residual(n_full, n_blocks), tol)
    # Poisson iff Casimir
    pois = is_poisson(pm, S, tol, seed=run.seed)
    _adopt(rep, pois.records, "warped_")
    cas = is_casimir(ws.pi1, ws.mu, S1, tol)
    _adopt(rep, cas.records, rename="mu_casimir")
    p1 = is_poisson(ws.pi1, S1, tol, seed=run.seed).passed
    p2 = is_poisson(ws.pi2, S2, tol, seed=run.seed).passed
    pi2_nonzero = not _near_zero(S2, ws.pi2, tol)
    if p1 and p2 and pi2_nonzero:
        _flag_record(rep, "poisson_iff_casimir", pois.passed, cas.passed, tol,
                     f"warped bivector Poisson: {pois.status}; mu Casimir: {cas.status}")
    else:
        rep.skip("poisson_iff_casimir", tol, "needs Poisson factors and a nonzero fiber bivector")


def _symplectic_cor(run: _Run, rep: CheckReport) -> None:
    ws, S, tol = run.ws, run.S, run.tol
    S1, S2 = _factor_samples(ws, S)
    full1 = bool(np.all(rank_batch(ws.pi1, S1) == ws.base.dim))
    full2 = bool(np.all(rank_batch(ws.pi2, S2) == ws.fiber.dim))
    muv = S.eval(ws.mu)
    p1 = is_poisson(ws.pi1, S1, tol, seed=run.seed).passed
    p2 = is_poisson(ws.pi2, S2, tol, seed=run.seed).passed
    if not (full1 and full2 and p1 and p2 and np.all(np.abs(muv) > 1e-9)):
        rep.skip_reason = "needs nondegenerate Poisson factors and a nonvanishing warping function"
        return
    ranks = rank_batch(ws.pi_mu, S)
    rep.record("rank_full", (ranks != ws.chart.dim).astype(float), tol)
    symplectic = is_poisson(ws.pi_mu, S, tol, seed=run.seed).passed and bool(np.all(ranks == ws.chart.dim))
    mu_const = _near_zero(S1, ws.dmu, tol)
    _flag_record(rep, "symplectic_iff_mu_constant", symplectic, mu_const, tol,
                 f"product symplectic: {_status(symplectic)}; mu constant: {_status(mu_const)}")


def _dmu_torsion_curvature(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    D1, D2 = ws.D1, ws.D2
    Dm = dmu_connection(D1, D2, ws.mu, ws.chart, ws)
    forms = _factor_forms(ws, rng, 3)
    (a1, a2), (b1, b2), (c1, c2) = forms
    a, b, c = (_lifted(ws, x1, x2) for x1, x2 in forms)
    rules = _res(S, d_oneform(Dm, ws.h(a1), ws.h(b1)), ws.h(d_oneform(D1, a1, b1)))
    rules = np.maximum(rules, _res(S, d_oneform(Dm, ws.v(a2), ws.v(b2)), ws.v(d_oneform(D2, a2, b2)) * ws.mu))
    rules = np.maximum(rules, _res(S, d_oneform(Dm, ws.h(a1), ws.v(b2)), 0.0))
    rules = np.maximum(rules, _res(S, d_oneform(Dm, ws.v(a2), ws.h(b1)), 0.0))
    rep.record("connection_rules", rules, tol)
    rep.record("torsion_block", _res(S, torsion_apply(Dm, a, b), dmu_torsion_block(ws, D1, D2, a1, a2, b1, b2)),
               tol)
    lhs = curvature_apply(Dm, a, b, c)
    rep.record("curvature_block", _res(S, lhs, dmu_curvature_block(ws, D1, D2, a1, a2, b1, b2, c1, c2)), tol)
    rep.record("curvature_block_derived",
               _res(S, lhs, dmu_curvature_block_corrected(ws, D1, D2, a1, a2, b1, b2, c1, c2)), tol,
               note="adds the pi1(., dmu) and pi2(a2, b2) D1_{dmu} terms")


def _lifted_form(ws: WarpedStructure, w: Form, which: str) -> Form:
    return ws.h(w) if which == "h" else ws.v(w)


def _gen_bracket_lifts(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    Dm = dmu_connection(ws.D1, ws.D2, ws.mu, ws.chart, ws)
    cm, c1, c2 = FormBracketContext(Dm), FormBracketContext(ws.D1), FormBracketContext(ws.D2)
    m1, m2 = ws.base.dim, ws.fiber.dim
    hh = vv = hv = None
    # every reduction route is checked: the bracket of D^mu is route dependent when dmu != 0
    for p, q in ((0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1)):
        for r in ROUTES:
            if p + q <= m1:
                w, e = random_form(ws.base, p, rng), random_form(ws.base, q, rng)
                rhs = ws.h(gen_bracket(c1, w, e, r))
                hh = _accumulate(hh, _form_res(S, gen_bracket(cm, ws.h(w), ws.h(e), r), rhs))
            if p + q <= m2:
                w, e = random_form(ws.fiber, p, rng), random_form(ws.fiber, q, rng)
                rhs = ws.v(gen_bracket(c2, w, e, r)).scale(ws.mu)
                vv = _accumulate(vv, _form_res(S, gen_bracket(cm, ws.v(w), ws.v(e), r), rhs))
            if p <= m1 and q <= m2:
                w, e = random_form(ws.base, p, rng), random_form(ws.fiber, q, rng)
                zero = Form(ws.chart, p + q)
                hv = _accumulate(hv, _form_res(S, gen_bracket(cm, ws.h(w), ws.v(e), r), zero))
                hv = np.maximum(hv, _form_res(S, gen_bracket(cm, ws.v(e), ws.h(w), r), zero))
    rep.record("lift_horizontal", hh, tol)
    rep.record("lift_vertical", vv, tol)
    rep.record("lift_mixed", hv, tol)
    # well-definedness of the bracket of D^mu: all reduction routes must agree
    worst = None
    for _ in range(2):
        w = ws.v(random_form(ws.fiber, 1, rng)) + ws.h(random_form(ws.base, 1, rng))
        e = ws.v(random_form(ws.fiber, 1, rng)) + ws.h(random_form(ws.base, 1, rng))
        ref = gen_bracket(cm, w, e)
        for r in ROUTES[1:]:
            worst = _accumulate(worst, _form_res(S, ref, gen_bracket(cm, w, e, r)))
    rep.record("route_independence_dmu", worst, tol,
               note="D^mu has torsion -(dmu)^h pi2^v, so routes can disagree when dmu != 0")
    mu_const = _near_zero(S, gradient(ws.chart, ws.mu), tol)
    mu_nonzero = bool(np.all(np.abs(S.eval(ws.mu)) > 1e-9))
    if mu_const and mu_nonzero:
        S1, S2 = _factor_samples(ws, S)
        jm = float(np.max(jacobi_residual(cm, S, seed=run.seed)))
        j1 = float(np.max(jacobi_residual(c1, S1, seed=run.seed)))
        j2 = float(np.max(jacobi_residual(c2, S2, seed=run.seed)))
        _flag_record(rep, "generalized_poisson_iff_factors", jm <= tol, j1 <= tol and j2 <= tol, tol,
                     f"graded Jacobi max residual: product {jm:.3e}, base {j1:.3e}, fiber {j2:.3e}")
    else:
        rep.skip("generalized_poisson_iff_factors", tol,
                 "needs a nonzero constant mu; otherwise D^mu has torsion and the bracket is not well defined")


def _extra_tensors(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    if ws.f1 is None or ws.f2 is None:
        rep.skip_reason = "fixture defines no f1/f2"
        return
    S1, S2 = _factor_samples(ws, S)
    W = wedge_tensor(ws)
    phi1, phi2 = _rand_poly(ws.base, rng), _rand_poly(ws.fiber, rng)
    lhs = W(gradient(ws.chart, phi1), gradient(ws.chart, phi2))
    rhs = poisson_bracket(ws.pi1, ws.f1, phi1) * poisson_bracket(ws.pi2, ws.f2, phi2)
    worst = _res(S, lhs, rhs)
    psi1 = _rand_poly(ws.base, rng)
    worst = np.maximum(worst, _res(S, W(gradient(ws.chart, phi1), gradient(ws.chart, psi1)), 0.0))
    rep.record("wedge_tensor_pairings", worst, tol)
    _adopt(rep, is_poisson(W, S, tol, seed=run.seed).records, "wedge_")
    if ws.mu1 is None or ws.mu2 is None:
        rep.skip("lambda_schouten_cyclic_sum", tol, "fixture defines no mu1/mu2")
        return
    _adopt(rep, is_casimir(ws.pi1, ws.mu1, S1, tol).records, rename="mu1_casimir")
    _adopt(rep, is_casimir(ws.pi2, ws.mu2, S2, tol).records, rename="mu2_casimir")
    _adopt(rep, is_poisson(lambda_tensor(ws), S, tol, seed=run.seed).records, "lambda_")


def _warped_connection(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    D = run.geo.D
    Dw = warped_levi_civita(ws)
    P = ws.chart
    rep.record("coefficients", relative_residual(S.field(TensorField(P, D.gamma, "uud")),
                                                 S.field(TensorField(P, Dw.gamma, "uud"))), tol)
    z1, z2 = _zero1(ws.base), _zero1(ws.fiber)
    forms = _factor_forms(ws, rng, 2)
    (a1, a2), (b1, b2) = forms
    cases = {
        "rule_hh": ((a1, z2), (b1, z2)),
        "rule_vv": ((z1, a2), (z1, b2)),
        "rule_hv": ((a1, z2), (z1, b2)),
        "rule_vh": ((z1, a2), (b1, z2)),
        "rule_general": ((a1, a2), (b1, b2)),
    }
    for ident, ((x1, x2), (y1, y2)) in cases.items():
        lhs = d_oneform(D, _lifted(ws, x1, x2), _lifted(ws, y1, y2))
        rep.record(ident, _res(S, lhs, connection_block(ws, x1, x2, y1, y2)), tol)


_COMBOS3 = ("hhh", "vvv", "hhv", "hvh", "vhh", "hvv", "vhv", "vvh")


def _args(ws, combo: str, forms) -> tuple:
    """Lifted product forms and the factor-wise block arguments for a combo like ``"hvh"``."""
    z1, z2 = _zero1(ws.base), _zero1(ws.fiber)
    lifted, block = [], []
    for ch, (x1, x2) in zip(combo, forms):
        if ch == "h":
            lifted.append(ws.h(x1))
            block += [x1, z2]
        else:
            lifted.append(ws.v(x2))
            block += [z1, x2]
    return lifted, block


def _warped_dpi(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    DP = nabla_pi(run.geo.D)
    forms = _factor_forms(ws, rng, 3)
    for combo in _COMBOS3:
        lifted, block = _args(ws, combo, forms)
        lhs = DP(*lifted)
        rep.record(f"block_{combo}", _res(S, lhs, dpi_block(ws, *block, literal=True)), tol)
        if combo == "hvv":
            rep.record("block_hvv_derived", _res(S, lhs, dpi_block(ws, *block)), tol,
                       note="adds pi1(a1, dmu) pi2(b2, c2)")


_CURV_COMBOS = ("hhh", "hhv", "hvh", "hvv", "vvh", "vvv")
_CURV_CORRECTED = ("hvh", "hvv", "vvh")


def _warped_curvature(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    D = run.geo.D
    tensorial = is_poisson(ws.pi_mu, S, tol, seed=run.seed).passed
    note = "" if tensorial else "warped bivector not Poisson: compared with the curvature composition"
    forms = _factor_forms(ws, rng, 3)
    for combo in _CURV_COMBOS:
        lifted, block = _args(ws, combo, forms)
        lhs = curvature_on(run.geo.R, *lifted) if tensorial else curvature_apply(D, *lifted)
        rep.record(f"block_{combo}", _res(S, lhs, curvature_block(ws, *block, literal=True)), tol, note=note)
        if combo in _CURV_CORRECTED:
            rep.record(f"block_{combo}_derived", _res(S, lhs, curvature_block(ws, *block)), tol, note=note)


def _mu_casimir(run: _Run) -> bool:
    S1 = run.S.restrict(run.ws.base)
    return is_casimir(run.ws.pi1, run.ws.mu, S1, run.tol).passed


def _ricci_cor(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    if not _mu_casimir(run):
        rep.skip_reason = "mu is not Casimir: the warped bivector is not Poisson and curvature is not tensorial"
        return
    r = ricci(ws.g_f, run.geo.D, run.geo.R, metric=run.geo.metric)
    (a1, a2), (b1, b2) = _factor_forms(ws, rng, 2)
    rep.record("ricci_hh", _res(S, r(ws.h(a1), ws.h(b1)), ricci_block(ws, "hh", a1, b1)), tol)
    lhs = r(ws.h(a1), ws.v(b2))
    rep.record("ricci_hv", _res(S, lhs, ricci_block(ws, "hv", a1, b2, literal=True)), tol)
    rep.record("ricci_hv_derived", _res(S, lhs, ricci_block(ws, "hv", a1, b2)), tol,
               note="fiber trace of the mixed curvature block")
    rep.record("ricci_vh_symmetry", _res(S, r(ws.v(b2), ws.h(a1)), lhs), tol)
    rep.record("ricci_vv", _res(S, r(ws.v(a2), ws.v(b2)), ricci_block(ws, "vv", a2, b2)), tol)


def _scalar_cor(run: _Run, rep: CheckReport) -> None:
    ws, S, tol = run.ws, run.S, run.tol
    if not _mu_casimir(run):
        rep.skip_reason = "mu is not Casimir: the warped bivector is not Poisson and curvature is not tensorial"
        return
    lhs = scalar_curv(ws.g_f, run.geo.D, run.geo.R, metric=run.geo.metric)
    rep.record("scalar", _res(S, lhs, scalar_block(ws)), tol)


def _plane(chart: Chart, rng) -> tuple:
    return _rand_oneform(chart, rng), _rand_oneform(chart, rng)


def _sectional_cor(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    if not _mu_casimir(run):
        rep.skip_reason = "mu is not Casimir: the warped bivector is not Poisson and curvature is not tensorial"
        return
    D, R, gf = run.geo.D, run.geo.R, ws.g_f
    for kind in ("hh", "hv", "vv"):
        ident = f"sectional_{kind}"
        needs = {"hh": ws.base.dim >= 2, "hv": True, "vv": ws.fiber.dim >= 2}[kind]
        if not needs:
            rep.skip(ident, tol, "factor has dimension one")
            continue
        for attempt in range(4):
            a1, b1 = _plane(ws.base, rng)
            a2, b2 = _plane(ws.fiber, rng)
            x, y = {"hh": (a1, b1), "hv": (a1, b2), "vv": (a2, b2)}[kind]
            X = ws.h(x) if kind[0] == "h" else ws.v(x)
            Y = ws.h(y) if kind[1] == "h" else ws.v(y)
            try:
                lhs = sectional_batch(gf, D, X, Y, S, R)
            except DegeneratePlaneError:
                continue
            rep.record(ident, relative_residual(lhs, S.eval(sectional_block(ws, kind, x, y))), tol)
            break
        else:
            rep.skip(ident, tol, "no nondegenerate random plane found")


# -- geometric theorems ---------------------------------------------------------

def _sectional_values(geo: Geometry, S: Samples, rng, extra: int = 2) -> list:
    """Sectional curvature arrays over the coordinate planes and a few random planes."""
    c = geo.chart
    planes = [(c.coframe(i), c.coframe(j)) for i in range(c.dim) for j in range(i + 1, c.dim)]
    planes += [_plane(c, rng) for _ in range(extra)]
    out = []
    for a, b in planes:
        try:
            out.append(sectional_batch(geo.g, geo.D, a, b, S, geo.R))
        except DegeneratePlaneError:
            continue
    return out


def property_statuses(geo: Geometry, S: Samples, tol: float = DEFAULT_TOL, seed: int = 1) -> dict:
    """Pass/fail of each geometric property of ``(chart, g, pi)`` at the sample points."""
    rng = np.random.default_rng(seed)
    out = {}
    out["riemannian_poisson"] = _near_zero(S, nabla_pi(geo.D), tol)
    out["flat"] = _near_zero(S, geo.R, tol)
    out["ricci_flat"] = _near_zero(S, ricci(geo.g, geo.D, geo.R, metric=geo.metric), tol)
    out["locally_symmetric"] = _near_zero(S, nabla_R(geo.D, geo.R), tol)
    ks = _sectional_values(geo, S, rng)
    out["sectional_flat"] = all(float(np.max(np.abs(k))) <= tol for k in ks)
    out["metaflat"] = is_metaflat(geo.brackets, S, tol, R=geo.R, seed=seed).passed
    return {k: _status(v) for k, v in out.items()}


def _factor_geometries(ws: WarpedStructure) -> tuple:
    return (Geometry(ws.base, ws.g1, ws.pi1, ws.metric1), Geometry(ws.fiber, ws.g2, ws.pi2, ws.metric2))


def _geom_theorems(run: _Run, rep: CheckReport) -> None:
    ws, S, rng, tol = run.ws, run.S, run.rng, run.tol
    S1, S2 = _factor_samples(ws, S)
    f_cas = is_casimir(ws.pi1, ws.f, S1, tol).passed
    mu_const = _near_zero(S1, ws.dmu, tol)
    mu_nonzero = bool(np.all(np.abs(S.eval(ws.mu)) > 1e-9))
    if not (f_cas and mu_const and mu_nonzero):
        rep.skip_reason = "needs f Casimir and mu a nonzero constant"
        return
    geo1, geo2 = _factor_geometries(ws)
    prod = property_statuses(run.geo, S, tol, run.seed)
    base = property_statuses(geo1, S1, tol, run.seed)
    fib = property_statuses(geo2, S2, tol, run.seed)
    for p in GEOM_PROPERTIES:
        both = base[p] == "pass" and fib[p] == "pass"
        mode = "forward-tested" if both else "counterexample-tested"
        _flag_record(rep, f"{p}_iff_factors", prod[p] == "pass", both, tol,
                     f"product={prod[p]} base={base[p]} fiber={fib[p]}; {mode}")
    # constant sectional curvature of the product forces it on the factors
    ks = _sectional_values(run.geo, S, rng)
    allk = np.concatenate([k.ravel() for k in ks])
    k0 = float(allk[0])
    if float(np.max(np.abs(allk - k0))) > tol * max(1.0, abs(k0)):
        rep.skip("constant_sectional_factors", tol, "product sectional curvature is not constant")
        return
    # base planes carry k itself; fiber planes carry (f/mu^2) k + |Jdf|^2 / (4 mu^2 f)
    worst = np.zeros(len(S))
    for k1 in _sectional_values(geo1, S1, rng):
        worst = np.maximum(worst, relative_residual(k1, k0))
    mu2 = ws.mu * ws.mu
    target = S.eval(ws.f / mu2 * k0 + ws.g1(ws.Jdf, ws.Jdf) / (mu2 * ws.f * 4.0))
    for k2 in _sectional_values(geo2, S2, rng):
        worst = np.maximum(worst, relative_residual(k2, target))
    rep.record("constant_sectional_factors", worst, tol, note=f"product sectional curvature {k0:.6g}")
    rep.record("casimir_f_constant", relative_residual(S1.field(ws.df), 0.0), tol)


# -- runner ---------------------------------------------------------------------------

SUITES: dict[str, Callable] = {
    "poisson_basics": _poisson_basics,
    "connection_axioms": _connection_axioms,
    "operators": _operators,
    "gen_bracket_axioms": _gen_bracket_axioms,
    "warped_tensor": _warped_tensor,
    "symplectic_cor": _symplectic_cor,
    "dmu_torsion_curvature": _dmu_torsion_curvature,
    "gen_bracket_lifts": _gen_bracket_lifts,
    "extra_tensors": _extra_tensors,
    "warped_connection": _warped_connection,
    "warped_dpi": _warped_dpi,
    "warped_curvature": _warped_curvature,
    "ricci_cor": _ricci_cor,
    "scalar_cor": _scalar_cor,
    "sectional_cor": _sectional_cor,
    "geom_theorems": _geom_theorems,
}
assert set(SUITES) == set(ALL_SUITES)


def prepare(fixture: Fixture, samples: int = 64, seed: int = 1):
    """Build the geometry and draw the sample points once, for reuse across suites."""
    built = fixture.build()
    if fixture.kind == "warped":
        ws = built
        geo = Geometry(ws.chart, ws.g_f, ws.pi_mu)
        S = ws.samples(samples, seed)
        return geo, S, ws
    geo = Geometry(built.chart, built.cometric, built.bivector)
    S = Samples.draw(built.chart, samples, seed, geo.guards())
    return geo, S, None


def run_suite(fixture: Fixture, suite_id: str, samples: int = 64, tol: float = DEFAULT_TOL, seed: int = 1,
              prepared=None) -> CheckReport:
    """Run one suite on one fixture; the report is a deterministic function of the arguments."""
    if suite_id not in SUITES:
        raise UnknownSuiteError(f"unknown suite {suite_id!r}; expected one of {', '.join(ALL_SUITES)}")
    if suite_id in WARPED_SUITES and fixture.kind != "warped":
        raise FixtureSuiteMismatch(f"suite {suite_id} needs a warped fixture, {fixture.name} is a chart")
    t0 = time.perf_counter()
    geo, S, ws = prepared if prepared is not None else prepare(fixture, samples, seed)
    rep = CheckReport(suite_id, ANCHORS[suite_id], seed=seed, samples=len(S))
    # one generator per (suite, seed) so suites do not depend on each other's draws
    rng = np.random.default_rng([seed, ALL_SUITES.index(suite_id)])
    SUITES[suite_id](_Run(fixture, geo, S, rng, tol, seed, ws), rep)
    rep.runtime = time.perf_counter() - t0
    return rep


def outcome_matches(report: CheckReport, expected: str, fail_threshold: float = FAIL_THRESHOLD) -> bool:
    """Expected ``fail`` additionally requires a decisive residual above ``fail_threshold``."""
    if report.status != expected:
        return False
    if expected == "fail":
        return report.max_residual > fail_threshold
    return True
