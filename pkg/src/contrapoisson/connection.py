"""Contravariant connections: Levi-Civita construction, derivatives, torsion, curvature,
curvature traces and the second-order operators built from them."""
from __future__ import annotations

from itertools import product
from typing import Mapping, Optional

import numpy as np

from .chart import (
    Bivector,
    ChartMismatchError,
    Cometric,
    Endomorphism,
    Metric,
    OneForm,
    Samples,
    TensorField,
    VectorField,
    esum,
    gradient,
    invert_cometric,
    j_field,
)
from .expr import ZERO, Expr, differentiate
from .forms import Form
from .poisson import anchor_apply, koszul_bracket

__all__ = [
    "ContraConnection",
    "DegeneratePlaneError",
    "levi_civita",
    "koszul_rhs",
    "d_function",
    "d_oneform",
    "d_vector",
    "d_form",
    "d_multivector",
    "d_endomorphism",
    "torsion",
    "torsion_apply",
    "curvature",
    "curvature_apply",
    "curvature_on",
    "nabla_pi",
    "nabla_R",
    "nabla_R_apply",
    "ricci",
    "scalar_curv",
    "sectional",
    "sectional_batch",
    "hessian",
    "hessian_first",
    "hessian_second",
    "tri_left",
    "tri_left_coordinate",
    "tri_right",
    "tri_right_apply",
]


class DegeneratePlaneError(ArithmeticError):
    pass


class ContraConnection:
    """Coefficients ``gamma[i, j, k]`` with ``D_{dx^i} dx^j = sum_k gamma[i, j, k] dx^k``."""

    def __init__(self, pi: Bivector, gamma):
        n = pi.chart.dim
        self.chart = pi.chart
        self.pi = pi
        self.gamma = TensorField(pi.chart, gamma, "uud").comps
        if self.gamma.shape != (n, n, n):
            raise ValueError("gamma must have shape (n, n, n)")

    @classmethod
    def flat(cls, pi: Bivector) -> "ContraConnection":
        n = pi.chart.dim
        return cls(pi, np.full((n, n, n), ZERO, dtype=object))

    def __repr__(self) -> str:
        nz = sum(1 for c in self.gamma.flat if not c.is_zero)
        return f"ContraConnection({self.chart.name}, nonzero coefficients={nz})"

    def expressions(self) -> list:
        return list(self.gamma.flat)

    def sharp(self, alpha: OneForm) -> VectorField:
        return anchor_apply(self.pi, alpha)

    def apply(self, alpha: OneForm, beta: OneForm) -> OneForm:
        return d_oneform(self, alpha, beta)


def _check(D: ContraConnection, *objs) -> None:
    for o in objs:
        if o.chart != D.chart:
            raise ChartMismatchError(f"{D.chart.name} vs {o.chart.name}")


def _dpi(pi: Bivector) -> np.ndarray:
    """``out[a, i, j] = d_a pi^{ij}``."""
    c = pi.chart
    n = c.dim
    out = np.empty((n, n, n), dtype=object)
    for a, name in enumerate(c.coords):
        for i in range(n):
            for j in range(n):
                out[a, i, j] = differentiate(pi.comps[i, j], name)
    return out


def koszul_rhs(g: Cometric, pi: Bivector) -> np.ndarray:
    """Half of the six-term Koszul right side on the coordinate coframe: ``K[i, j, l]``."""
    c = g.chart
    n = c.dim
    gg, P = g.comps, pi.comps
    dg = np.empty((n, n, n), dtype=object)  # dg[a, j, l] = d_a g^{jl}
    for a, name in enumerate(c.coords):
        for j in range(n):
            for l in range(n):
                dg[a, j, l] = differentiate(gg[j, l], name)
    dP = _dpi(pi)
    K = np.empty((n, n, n), dtype=object)
    half = 0.5
    for i, j, l in product(range(n), repeat=3):
        t = esum(P[i, a] * dg[a, j, l] + P[j, a] * dg[a, i, l] - P[l, a] * dg[a, i, j]
                 + dP[a, i, j] * gg[a, l] + dP[a, l, i] * gg[a, j] + dP[a, l, j] * gg[a, i]
                 for a in range(n))
        K[i, j, l] = t * half
    return K


def levi_civita(g: Cometric, pi: Bivector, metric: Optional[Metric] = None) -> ContraConnection:
    """The torsion-free, metric-parallel contravariant connection of ``(g, pi)``."""
    if g.chart != pi.chart:
        raise ChartMismatchError(f"{g.chart.name} vs {pi.chart.name}")
    gt = (metric if metric is not None else invert_cometric(g)).comps
    K = koszul_rhs(g, pi)
    n = g.chart.dim
    gamma = np.empty((n, n, n), dtype=object)
    for i, j, k in product(range(n), repeat=3):
        gamma[i, j, k] = esum(gt[k, l] * K[i, j, l] for l in range(n))
    return ContraConnection(pi, gamma)


# -- derivatives ---------------------------------------------------------

def d_function(D: ContraConnection, alpha: OneForm, phi) -> Expr:
    return D.sharp(alpha).apply(D.chart.parse(phi))


def d_oneform(D: ContraConnection, alpha: OneForm, beta: OneForm) -> OneForm:
    """``(D_a b)_k = a_i b_j gamma^{ij}_k + #a(b_k)``."""
    _check(D, alpha, beta)
    n = D.chart.dim
    X = D.sharp(alpha)
    comps = []
    for k in range(n):
        t = X.apply(beta.comps[k])
        t = t + esum(alpha.comps[i] * beta.comps[j] * D.gamma[i, j, k]
                     for i in range(n) if not alpha.comps[i].is_zero
                     for j in range(n) if not beta.comps[j].is_zero)
        comps.append(t)
    return OneForm(D.chart, comps)


def d_vector(D: ContraConnection, alpha: OneForm, X: VectorField) -> VectorField:
    """``(D_a X)(b) = #a(b(X)) - (D_a b)(X)`` on the coordinate coframe."""
    _check(D, alpha, X)
    n = D.chart.dim
    S = D.sharp(alpha)
    comps = []
    for k in range(n):
        t = S.apply(X.comps[k])
        t = t - esum(alpha.comps[i] * D.gamma[i, k, m] * X.comps[m]
                     for i in range(n) if not alpha.comps[i].is_zero
                     for m in range(n) if not X.comps[m].is_zero)
        comps.append(t)
    return VectorField(D.chart, comps)


def _coframe_action(D: ContraConnection, alpha: OneForm) -> np.ndarray:
    """``A[j, k] = (D_alpha dx^j)_k = sum_i alpha_i gamma^{ij}_k``."""
    n = D.chart.dim
    A = np.empty((n, n), dtype=object)
    for j in range(n):
        for k in range(n):
            A[j, k] = esum(alpha.comps[i] * D.gamma[i, j, k] for i in range(n) if not alpha.comps[i].is_zero)
    return A


def d_form(D: ContraConnection, alpha: OneForm, w: Form) -> Form:
    """Derivative of an r-form: ``#a(w_J) + sum_s A[m, j_s] w_{..m..}``."""
    _check(D, alpha, w)
    n = D.chart.dim
    S = D.sharp(alpha)
    A = _coframe_action(D, alpha)
    terms = {}
    for J in w.index_set():
        t = S.apply(w.terms.get(J, ZERO))
        for s, js in enumerate(J):
            for m in range(n):
                if A[m, js].is_zero:
                    continue
                c = w.component(J[:s] + (m,) + J[s + 1:])
                if not c.is_zero:
                    t = t + A[m, js] * c
        terms[J] = t
    return Form(D.chart, w.degree, terms)


def d_multivector(D: ContraConnection, alpha: OneForm, Q: TensorField) -> TensorField:
    """Derivative of a contravariant tensor: ``#a(Q^K) - sum_s A[k_s, m] Q^{..m..}``."""
    _check(D, alpha, Q)
    if set(Q.variance) - {"u"}:
        raise ValueError("d_multivector expects a fully contravariant tensor")
    n = D.chart.dim
    S = D.sharp(alpha)
    A = _coframe_action(D, alpha)
    out = np.empty(Q.comps.shape, dtype=object)
    r = Q.rank
    for K in np.ndindex(*Q.comps.shape):
        t = S.apply(Q.comps[K])
        for s in range(r):
            for m in range(n):
                if A[K[s], m].is_zero:
                    continue
                c = Q.comps[K[:s] + (m,) + K[s + 1:]]
                if not c.is_zero:
                    t = t - A[K[s], m] * c
        out[K] = t
    if type(Q) is TensorField:
        return TensorField(Q.chart, out, Q.variance)
    return type(Q)(Q.chart, out)


def d_endomorphism(D: ContraConnection, alpha: OneForm, J: Endomorphism) -> Endomorphism:
    """``(D_a J)(b) = D_a(J b) - J(D_a b)`` as an endomorphism of 1-forms."""
    _check(D, alpha, J)
    n = D.chart.dim
    rows = []
    for j in range(n):
        e = D.chart.coframe(j)
        diff = d_oneform(D, alpha, J.apply(e)) - J.apply(d_oneform(D, alpha, e))
        rows.append(list(diff.comps))
    return Endomorphism(D.chart, rows)


# -- torsion and curvature ----------------------------------------------

def torsion(D: ContraConnection) -> TensorField:
    """``T[i, j, k] = gamma^{ij}_k - gamma^{ji}_k - d_k pi^{ij}``."""
    n = D.chart.dim
    dP = _dpi(D.pi)
    out = np.empty((n, n, n), dtype=object)
    for i, j, k in product(range(n), repeat=3):
        out[i, j, k] = D.gamma[i, j, k] - D.gamma[j, i, k] - dP[k, i, j]
    return TensorField(D.chart, out, "uud")


def torsion_apply(D: ContraConnection, alpha: OneForm, beta: OneForm) -> OneForm:
    """``D_a b - D_b a - [a, b]`` by composition."""
    return d_oneform(D, alpha, beta) - d_oneform(D, beta, alpha) - koszul_bracket(D.pi, alpha, beta)


def curvature(D: ContraConnection) -> TensorField:
    """``R[i, j, k, l]`` with ``R(dx^i, dx^j) dx^k = sum_l R[i, j, k, l] dx^l``."""
    c = D.chart
    n = c.dim
    G = D.gamma
    dP = _dpi(D.pi)
    sharp = [anchor_apply(D.pi, c.coframe(i)) for i in range(n)]
    # dG[i, j, k, l] = #dx^i (gamma^{jk}_l)
    dG = np.empty((n, n, n, n), dtype=object)
    for i, j, k, l in product(range(n), repeat=4):
        dG[i, j, k, l] = sharp[i].apply(G[j, k, l])
    out = np.empty((n, n, n, n), dtype=object)
    for i, j, k, l in product(range(n), repeat=4):
        if i == j:
            out[i, j, k, l] = ZERO
            continue
        t = dG[i, j, k, l] - dG[j, i, k, l]
        t = t + esum(G[j, k, m] * G[i, m, l] - G[i, k, m] * G[j, m, l] - dP[m, i, j] * G[m, k, l]
                     for m in range(n))
        out[i, j, k, l] = t
    return TensorField(c, out, "uuud")


def curvature_on(R: TensorField, alpha: OneForm, beta: OneForm, gamma: OneForm) -> OneForm:
    """Contract the curvature tensor with three 1-forms."""
    n = R.chart.dim
    comps = []
    for l in range(n):
        comps.append(esum(alpha.comps[i] * beta.comps[j] * gamma.comps[k] * R.comps[i, j, k, l]
                          for i in range(n) if not alpha.comps[i].is_zero
                          for j in range(n) if not beta.comps[j].is_zero
                          for k in range(n) if not gamma.comps[k].is_zero))
    return OneForm(R.chart, comps)


def curvature_apply(D: ContraConnection, alpha: OneForm, beta: OneForm, gamma: OneForm) -> OneForm:
    """``D_a D_b c - D_b D_a c - D_[a,b] c`` by composition."""
    br = koszul_bracket(D.pi, alpha, beta)
    return (d_oneform(D, alpha, d_oneform(D, beta, gamma)) - d_oneform(D, beta, d_oneform(D, alpha, gamma))
            - d_oneform(D, br, gamma))


def nabla_pi(D: ContraConnection) -> TensorField:
    """``DPi[a, b, c] = (D_{dx^a} pi)(dx^b, dx^c)``."""
    c = D.chart
    n = c.dim
    G, P = D.gamma, D.pi.comps
    out = np.empty((n, n, n), dtype=object)
    for a in range(n):
        S = anchor_apply(D.pi, c.coframe(a))
        for b in range(n):
            for cc in range(n):
                t = S.apply(P[b, cc])
                t = t - esum(G[a, b, m] * P[m, cc] + G[a, cc, m] * P[b, m] for m in range(n))
                out[a, b, cc] = t
    return TensorField(c, out, "uuu")


def nabla_R(D: ContraConnection, R: Optional[TensorField] = None) -> TensorField:
    """``DR[a, b, c, d, l] = ((D_{dx^a} R)(dx^b, dx^c) dx^d)_l``."""
    c = D.chart
    n = c.dim
    R = curvature(D) if R is None else R
    G = D.gamma
    Rc = R.comps
    out = np.empty((n,) * 5, dtype=object)
    for a in range(n):
        S = anchor_apply(D.pi, c.coframe(a))
        for b, cc, d, l in product(range(n), repeat=4):
            t = S.apply(Rc[b, cc, d, l])
            t = t + esum(Rc[b, cc, d, m] * G[a, m, l] - G[a, b, m] * Rc[m, cc, d, l]
                         - G[a, cc, m] * Rc[b, m, d, l] - G[a, d, m] * Rc[b, cc, m, l] for m in range(n))
            out[a, b, cc, d, l] = t
    return TensorField(c, out, "uuuud")


def nabla_R_apply(D: ContraConnection, alpha, beta, gamma, delta) -> OneForm:
    """Local-symmetry defect by composition of the curvature operator."""
    R = lambda x, y, z: curvature_apply(D, x, y, z)
    return (d_oneform(D, alpha, R(beta, gamma, delta)) - R(d_oneform(D, alpha, beta), gamma, delta)
            - R(beta, d_oneform(D, alpha, gamma), delta) - R(beta, gamma, d_oneform(D, alpha, delta)))


# -- curvature traces ----------------------------------------------------

def ricci(g: Cometric, D: ContraConnection, R: Optional[TensorField] = None,
          metric: Optional[Metric] = None) -> TensorField:
    """``r[a, b] = sum_{i,j} gt_{ij} g(R(dx^a, dx^i) dx^j, dx^b)``."""
    n = g.chart.dim
    R = curvature(D) if R is None else R
    gt = (metric if metric is not None else invert_cometric(g)).comps
    Rc = R.comps
    # contract the middle pair first
    tr = np.empty((n, n), dtype=object)  # tr[a, m] = sum gt_ij R[a,i,j,m]
    for a in range(n):
        for m in range(n):
            tr[a, m] = esum(gt[i, j] * Rc[a, i, j, m] for i in range(n) for j in range(n)
                            if not gt[i, j].is_zero)
    out = np.empty((n, n), dtype=object)
    for a in range(n):
        for b in range(n):
            out[a, b] = esum(tr[a, m] * g.comps[m, b] for m in range(n))
    return TensorField(g.chart, out, "uu")


def scalar_curv(g: Cometric, D: ContraConnection, R: Optional[TensorField] = None,
                metric: Optional[Metric] = None) -> Expr:
    gt = (metric if metric is not None else invert_cometric(g)).comps
    r = ricci(g, D, R, metric=Metric(g.chart, gt)).comps
    n = g.chart.dim
    return esum(gt[a, b] * r[a, b] for a in range(n) for b in range(n) if not gt[a, b].is_zero)


def _sectional_parts(g: Cometric, R: TensorField, alpha: OneForm, beta: OneForm):
    num = g(curvature_on(R, alpha, beta, beta), alpha)
    den = g(alpha, alpha) * g(beta, beta) - g(alpha, beta) * g(alpha, beta)
    return num, den


def sectional_batch(g: Cometric, D: ContraConnection, alpha: OneForm, beta: OneForm, samples: Samples,
                    R: Optional[TensorField] = None, eps: float = 1e-9) -> np.ndarray:
    """Sectional curvature of the plane of ``alpha, beta`` at each sample point."""
    R = curvature(D) if R is None else R
    num, den = _sectional_parts(g, R, alpha, beta)
    nv, dv = samples.eval(num), samples.eval(den)
    scale = np.maximum(1.0, samples.eval(g(alpha, alpha)) * samples.eval(g(beta, beta)))
    bad = np.nonzero(np.abs(dv) < eps * np.abs(scale))[0]
    if bad.size:
        raise DegeneratePlaneError(f"degenerate plane at {samples.points[int(bad[0])]}")
    return nv / dv


def sectional(g: Cometric, D: ContraConnection, alpha: OneForm, beta: OneForm, p: Mapping[str, float],
              R: Optional[TensorField] = None) -> float:
    return float(sectional_batch(g, D, alpha, beta, Samples(g.chart, [p]), R)[0])


# -- second-order operators ---------------------------------------------

def hessian_first(D: ContraConnection, phi) -> TensorField:
    """``H[i, j] = #dx^i(#dx^j(phi)) - #(D_{dx^i} dx^j)(phi)``."""
    c = D.chart
    n = c.dim
    phi = c.parse(phi)
    sharp = [anchor_apply(D.pi, c.coframe(i)) for i in range(n)]
    first = [s.apply(phi) for s in sharp]  # #dx^j(phi)
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            # #(sum_k gamma^{ij}_k dx^k)(phi) = sum_k gamma^{ij}_k #dx^k(phi)
            corr = esum(D.gamma[i, j, k] * first[k] for k in range(n))
            out[i, j] = sharp[i].apply(first[j]) - corr
    return TensorField(c, out, "uu")


def hessian_second(g: Cometric, D: ContraConnection, phi, J: Optional[Endomorphism] = None) -> TensorField:
    """``H[i, j] = -g(D_{dx^i} J dphi, dx^j)``."""
    c = D.chart
    n = c.dim
    J = j_field(g, D.pi) if J is None else J
    Jd = J.apply(gradient(c, phi))
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        w = d_oneform(D, c.coframe(i), Jd)
        for j in range(n):
            out[i, j] = -esum(w.comps[k] * g.comps[k, j] for k in range(n))
    return TensorField(c, out, "uu")


def hessian(g: Cometric, pi: Bivector, D: ContraConnection, phi) -> tuple:
    """Both closed forms of the contravariant Hessian of ``phi``."""
    if pi is not D.pi and pi.chart != D.chart:
        raise ChartMismatchError(f"{pi.chart.name} vs {D.chart.name}")
    return hessian_first(D, phi), hessian_second(g, D, phi)


def tri_left(g: Cometric, pi: Bivector, D: ContraConnection, phi, J: Optional[Endomorphism] = None) -> Expr:
    """Trace of ``alpha -> D_alpha J dphi``; basis-free, so signature-correct."""
    c = D.chart
    J = j_field(g, pi) if J is None else J
    Jd = J.apply(gradient(c, phi))
    return esum(d_oneform(D, c.coframe(i), Jd).comps[i] for i in range(c.dim))


def tri_left_coordinate(pi: Bivector, phi) -> Expr:
    """Coordinate expression of the left trace operator for an orthonormal coordinate coframe
    and a connection whose contracted coefficients ``sum_i gamma^{ik}_i`` vanish."""
    c = pi.chart
    n = c.dim
    phi = c.parse(phi)
    P = pi.comps
    dphi = [differentiate(phi, x) for x in c.coords]
    terms = []
    for i, j, k in product(range(n), repeat=3):
        terms.append(differentiate(P[i, j], c.coords[k]) * P[k, i] * dphi[j])
        terms.append(P[i, j] * P[k, i] * differentiate(dphi[j], c.coords[k]))
    return esum(terms)


def tri_right(D: ContraConnection) -> VectorField:
    """The vector field ``V^j = sum_i gamma^{ij}_i`` whose action is the trace of ``alpha -> D_alpha dphi``."""
    n = D.chart.dim
    return VectorField(D.chart, [esum(D.gamma[i, j, i] for i in range(n)) for j in range(n)])


def tri_right_apply(D: ContraConnection, phi) -> Expr:
    """Trace of ``alpha -> D_alpha dphi`` computed directly."""
    c = D.chart
    dphi = gradient(c, phi)
    return esum(d_oneform(D, c.coframe(i), dphi).comps[i] for i in range(c.dim))
