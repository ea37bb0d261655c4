"""Product charts, horizontal/vertical lifts and the warped constructions on them.

Every ``*_block`` function assembles a closed-form right-hand side from
quantities computed on the two factor charts and lifted to the product.
None of them touch connection or curvature data computed on the product
itself, so they can serve as independent oracles for the generic
machinery run on the product.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .chart import (
    Bivector,
    Chart,
    ChartDefinition,
    Cometric,
    Endomorphism,
    Guard,
    Metric,
    OneForm,
    Samples,
    TensorField,
    VectorField,
    cometric_guards,
    esum,
    gradient,
    invert_cometric,
    j_field,
    parse_chart_def,
    sample_points,
    singular_guards,
)
from .connection import (
    ContraConnection,
    curvature_apply,
    d_oneform,
    levi_civita,
    ricci,
    scalar_curv,
    tri_left,
    tri_right_apply,
)
from .expr import ONE, ZERO, Expr, free_vars
from .forms import Form
from .poisson import anchor_apply, hamiltonian_vector, koszul_bracket

__all__ = [
    "ProductChart",
    "FactorMismatchError",
    "WarpedStructure",
    "lift_h",
    "lift_v",
    "warped_bivector",
    "warped_cometric",
    "anchor_block",
    "koszul_on_product",
    "dmu_connection",
    "dmu_torsion_block",
    "dmu_curvature_block",
    "dmu_curvature_block_corrected",
    "warped_levi_civita",
    "connection_block",
    "dpi_block",
    "curvature_block",
    "ricci_block",
    "scalar_block",
    "sectional_block",
    "wedge_tensor",
    "lambda_tensor",
    "parse_warped_def",
]


class FactorMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ProductChart(Chart):
    """Chart on ``M1 x M2``: base coordinates followed by fiber coordinates."""

    base: Optional[Chart] = None
    fiber: Optional[Chart] = None

    @classmethod
    def of(cls, base: Chart, fiber: Chart, name: Optional[str] = None) -> "ProductChart":
        clash = set(base.coords) & set(fiber.coords)
        if clash:
            raise ValueError(f"factor coordinates overlap: {sorted(clash)}")
        return cls(name or f"{base.name}x{fiber.name}", base.coords + fiber.coords,
                   base.domain + fiber.domain, base, fiber)

    @property
    def m1(self) -> int:
        return self.base.dim

    @property
    def m2(self) -> int:
        return self.fiber.dim


def _offset(P: ProductChart, factor: Chart) -> int:
    if factor == P.base:
        return 0
    if factor == P.fiber:
        return P.m1
    raise FactorMismatchError(f"{factor.name} is not a factor of {P.name}")


def _lift(t, P: ProductChart, factor: Chart):
    off = _offset(P, factor)
    if isinstance(t, Expr):
        extra = free_vars(t) - set(factor.coords)
        if extra:
            raise FactorMismatchError(f"expression uses {sorted(extra)} outside {factor.name}")
        return t
    if t is None:
        return None
    if t.chart != factor:
        raise FactorMismatchError(f"{t.chart.name} is not {factor.name}")
    if isinstance(t, Form):
        return Form(P, t.degree, {tuple(i + off for i in k): v for k, v in t.terms.items()})
    n = P.dim
    comps = np.full((n,) * t.rank, ZERO, dtype=object)
    for idx in np.ndindex(*t.comps.shape):
        comps[tuple(i + off for i in idx)] = t.comps[idx]
    if type(t) is TensorField:
        return TensorField(P, comps, t.variance)
    return type(t)(P, comps)


def lift_h(t, P: ProductChart):
    """Horizontal lift of a base function, form or tensor (block placement)."""
    return _lift(t, P, P.base)


def lift_v(t, P: ProductChart):
    """Vertical lift of a fiber function, form or tensor (block placement)."""
    return _lift(t, P, P.fiber)


class WarpedStructure:
    """Two factors ``(chart, g, pi)``, a warping function ``f > 0`` for the cometric and
    ``mu`` for the bivector, both on the base."""

    def __init__(self, base: ChartDefinition, fiber: ChartDefinition, f="1", mu="1",
                 f1=None, f2=None, mu1=None, mu2=None, name: Optional[str] = None):
        self.base_def, self.fiber_def = base, fiber
        self.chart = ProductChart.of(base.chart, fiber.chart, name)
        self.base, self.fiber = base.chart, fiber.chart
        self.g1, self.g2 = base.cometric, fiber.cometric
        self.pi1, self.pi2 = base.bivector, fiber.bivector
        self.f = self._base_expr(f)
        self.mu = self._base_expr(mu)
        self.f1 = None if f1 is None else self._base_expr(f1)
        self.mu1 = None if mu1 is None else self._base_expr(mu1)
        self.f2 = None if f2 is None else self._fiber_expr(f2)
        self.mu2 = None if mu2 is None else self._fiber_expr(mu2)

    def _base_expr(self, e) -> Expr:
        e = self.chart.parse(e)
        if free_vars(e) - set(self.base.coords):
            raise FactorMismatchError(f"{e} must depend on base coordinates only")
        return e

    def _fiber_expr(self, e) -> Expr:
        e = self.chart.parse(e)
        if free_vars(e) - set(self.fiber.coords):
            raise FactorMismatchError(f"{e} must depend on fiber coordinates only")
        return e

    @property
    def name(self) -> str:
        return self.chart.name

    def h(self, t):
        return lift_h(t, self.chart)

    def v(self, t):
        return lift_v(t, self.chart)

    # factor data
    @cached_property
    def metric1(self) -> Metric:
        return invert_cometric(self.g1)

    @cached_property
    def metric2(self) -> Metric:
        return invert_cometric(self.g2)

    @cached_property
    def D1(self) -> ContraConnection:
        return levi_civita(self.g1, self.pi1, self.metric1)

    @cached_property
    def D2(self) -> ContraConnection:
        return levi_civita(self.g2, self.pi2, self.metric2)

    @cached_property
    def J1(self) -> Endomorphism:
        return j_field(self.g1, self.pi1, self.metric1)

    @cached_property
    def J2(self) -> Endomorphism:
        return j_field(self.g2, self.pi2, self.metric2)

    @cached_property
    def df(self) -> OneForm:
        return gradient(self.base, self.f)

    @cached_property
    def dmu(self) -> OneForm:
        return gradient(self.base, self.mu)

    @cached_property
    def Jdf(self) -> OneForm:
        return self.J1.apply(self.df)

    # product tensors
    @cached_property
    def pi_mu(self) -> Bivector:
        return warped_bivector(self)

    @cached_property
    def g_f(self) -> Cometric:
        return warped_cometric(self)

    def guards(self) -> list:
        objs = [self.f, self.mu, self.g_f, self.pi_mu]
        gs = singular_guards(*objs) + cometric_guards(self.g1) + cometric_guards(self.g2)
        gs.append(Guard(self.f, positive=True))
        return gs

    def samples(self, n: int, seed: int) -> Samples:
        return Samples(self.chart, sample_points(self.chart, n, seed, self.guards()))


def warped_bivector(ws: WarpedStructure) -> Bivector:
    """``pi1^h + mu^h pi2^v``."""
    return Bivector(ws.chart, (ws.h(ws.pi1) + ws.v(ws.pi2) * ws.mu).comps)


def warped_cometric(ws: WarpedStructure) -> Cometric:
    """``g1^h + f^h g2^v``."""
    return Cometric(ws.chart, (ws.h(ws.g1) + ws.v(ws.g2) * ws.f).comps)


def _zero1(chart: Chart) -> OneForm:
    return OneForm(chart, [ZERO] * chart.dim)


def _or0(a: Optional[OneForm], chart: Chart) -> OneForm:
    return _zero1(chart) if a is None else a


# -- bracket-level block formulas ---------------------------------------

def anchor_block(ws: WarpedStructure, a1: OneForm, a2: OneForm) -> VectorField:
    """``[#1 a1]^h + mu^h [#2 a2]^v``."""
    return ws.h(anchor_apply(ws.pi1, a1)) + ws.v(anchor_apply(ws.pi2, a2)) * ws.mu


def koszul_on_product(ws: WarpedStructure, a1: OneForm, a2: OneForm, b1: OneForm, b2: OneForm) -> OneForm:
    """``[a1,b1]^h + mu^h [a2,b2]^v + pi2(a2,b2)^v (dmu)^h``."""
    return (ws.h(koszul_bracket(ws.pi1, a1, b1)) + ws.v(koszul_bracket(ws.pi2, a2, b2)) * ws.mu
            + ws.h(ws.dmu) * ws.pi2(a2, b2))


# -- the connection D^mu ------------------------------------------------

def dmu_connection(D1: ContraConnection, D2: ContraConnection, mu, P: Optional[ProductChart] = None,
                   ws: Optional[WarpedStructure] = None) -> ContraConnection:
    """Block connection: base block from ``D1``, fiber block ``mu * D2``, mixed blocks zero."""
    if P is None:
        P = ProductChart.of(D1.chart, D2.chart)
    mu = P.parse(mu)
    m1, n = P.m1, P.dim
    gamma = np.full((n, n, n), ZERO, dtype=object)
    gamma[:m1, :m1, :m1] = D1.gamma
    gamma[m1:, m1:, m1:] = np.vectorize(lambda c: mu * c, otypes=[object])(D2.gamma)
    pi = Bivector(P, (lift_h(D1.pi, P) + lift_v(D2.pi, P) * mu).comps)
    return ContraConnection(pi, gamma)


def dmu_torsion_block(ws: WarpedStructure, D1: ContraConnection, D2: ContraConnection,
                      a1, a2, b1, b2) -> OneForm:
    """``T1(a1,b1)^h + mu^h T2(a2,b2)^v - pi2(a2,b2)^v (dmu)^h``."""
    from .connection import torsion_apply
    return ws.h(torsion_apply(D1, a1, b1)) + ws.v(torsion_apply(D2, a2, b2)) * ws.mu - ws.h(ws.dmu) * ws.pi2(a2, b2)


def dmu_curvature_block(ws: WarpedStructure, D1, D2, a1, a2, b1, b2, c1, c2) -> OneForm:
    """``[R1(a1,b1)c1]^h + (mu^2)^h [R2(a2,b2)c2]^v``, exact when ``mu`` is constant."""
    return ws.h(curvature_apply(D1, a1, b1, c1)) + ws.v(curvature_apply(D2, a2, b2, c2)) * (ws.mu * ws.mu)


def dmu_curvature_block_corrected(ws: WarpedStructure, D1, D2, a1, a2, b1, b2, c1, c2) -> OneForm:
    """The short block curvature plus the mixed terms that survive when ``dmu != 0``.

    ``D_{a1^h}`` differentiates the factor ``mu^h`` in ``D_{b2^v} c2^v``,
    contributing ``pi1(a1, dmu)^h (D2_{b2} c2)^v`` and, antisymmetrically,
    ``-pi1(b1, dmu)^h (D2_{a2} c2)^v``.  The bracket ``[a2^v, b2^v]`` has
    the horizontal part ``pi2(a2, b2)^v (dmu)^h``, contributing
    ``-pi2(a2, b2)^v (D1_{dmu} c1)^h``.
    """
    base = dmu_curvature_block(ws, D1, D2, a1, a2, b1, b2, c1, c2)
    s1 = ws.pi1(a1, ws.dmu)
    s2 = ws.pi1(b1, ws.dmu)
    return (base + ws.v(d_oneform(D2, b2, c2)) * s1 - ws.v(d_oneform(D2, a2, c2)) * s2
            - ws.h(d_oneform(D1, ws.dmu, c1)) * ws.pi2(a2, b2))


# -- Levi-Civita connection of (g^f, pi^mu) -----------------------------

def connection_block(ws: WarpedStructure, a1, a2, b1, b2) -> OneForm:
    """``D_a b`` for ``a = a1^h + a2^v`` and ``b = b1^h + b2^v`` from the four block rules."""
    f, mu = ws.f, ws.mu
    g1, g2, J2 = ws.g1, ws.g2, ws.J2
    Jdf, dmu = ws.Jdf, ws.dmu
    out = ws.h(d_oneform(ws.D1, a1, b1))
    out = out + ws.v(d_oneform(ws.D2, a2, b2)) * mu
    out = out + ws.h(dmu) * (ws.pi2(a2, b2) * 0.5) + ws.h(Jdf) * (g2(a2, b2) * 0.5)
    k = -ONE / (f * 2.0)

    def mixed(x1, y2):
        return (ws.v(y2) * g1(Jdf, x1) + ws.v(J2.apply(y2)) * g1(dmu, x1)) * k

    return out + mixed(a1, b2) + mixed(b1, a2)


def warped_levi_civita(ws: WarpedStructure) -> ContraConnection:
    """Coefficients of the Levi-Civita connection of ``(g^f, pi^mu)`` from the block rules."""
    P = ws.chart
    m1, n = P.m1, P.dim
    gamma = np.empty((n, n, n), dtype=object)
    z1, z2 = _zero1(ws.base), _zero1(ws.fiber)
    frames = [(ws.base.coframe(i), z2) if i < m1 else (z1, ws.fiber.coframe(i - m1)) for i in range(n)]
    for i in range(n):
        for j in range(n):
            a1, a2 = frames[i]
            b1, b2 = frames[j]
            gamma[i, j, :] = connection_block(ws, a1, a2, b1, b2).comps
    return ContraConnection(ws.pi_mu, gamma)


def _dpi1(ws, a, b, c) -> Expr:
    """``D1 pi1 (a, b, c)`` by its defining formula on the base."""
    D = ws.D1
    return (anchor_apply(ws.pi1, a).apply(ws.pi1(b, c)) - ws.pi1(d_oneform(D, a, b), c)
            - ws.pi1(b, d_oneform(D, a, c)))


def _dpi2(ws, a, b, c) -> Expr:
    D = ws.D2
    return (anchor_apply(ws.pi2, a).apply(ws.pi2(b, c)) - ws.pi2(d_oneform(D, a, b), c)
            - ws.pi2(b, d_oneform(D, a, c)))


def dpi_block(ws: WarpedStructure, a1, a2, b1, b2, c1, c2, literal: bool = False) -> Expr:
    """``D pi^mu (a, b, c)`` summed over the eight horizontal/vertical combinations.

    The ``(h, v, v)`` block includes ``pi1(a1, dmu) pi2(b2, c2)``, which the
    anchor of ``a1^h`` produces from ``mu^h pi2(b2, c2)^v`` and which
    vanishes when ``mu`` is Casimir.  ``literal=True`` leaves it out.
    """
    f, mu = ws.f, ws.mu
    g1, g2, P1, P2, J2 = ws.g1, ws.g2, ws.pi1, ws.pi2, ws.J2
    Jdf, dmu = ws.Jdf, ws.dmu
    half = 0.5
    terms = [
        _dpi1(ws, a1, b1, c1),
        mu * mu * _dpi2(ws, a2, b2, c2),
        (mu / f * g1(Jdf, a1) + (ZERO if literal else P1(a1, dmu))) * P2(b2, c2),
        mu / (f * 2.0) * (P2(a2, c2) * g1(Jdf, b1) - P2(a2, J2.apply(c2)) * g1(dmu, b1))
        + half * (g2(a2, c2) * P1(Jdf, b1) - g2(a2, J2.apply(c2)) * P1(dmu, b1)),
        mu / (f * 2.0) * (P2(a2, J2.apply(b2)) * g1(dmu, c1) - P2(a2, b2) * g1(Jdf, c1))
        + half * (g2(a2, J2.apply(b2)) * P1(dmu, c1) - g2(a2, b2) * P1(Jdf, c1)),
    ]
    return esum(terms)


# -- curvature and its traces --------------------------------------------

def _scaled(form: OneForm, s: Expr) -> OneForm:
    return form * s


def curvature_block(ws: WarpedStructure, a1, a2, b1, b2, c1, c2, literal: bool = False) -> OneForm:
    """``R(a, b) c`` on the product from the five block formulas (and antisymmetry).

    With ``literal=True`` three terms take their literal closed form:
    ``+g1(Jdf,a1) g1(Jdf,c1) / 4f^2`` in ``R(a1^h, b2^v) c1^h``, an extra
    ``-(mu/2f) g1(Jdf,a1) (D2_{b2} c2)^v`` in ``R(a1^h, b2^v) c2^v`` and
    ``-pi2(a2,b2) D1_{dmu} c1 / 2f`` in ``R(a2^v, b2^v) c1^h``.  Expanding
    the connection rules gives ``-g1(Jdf,a1) g1(Jdf,c1) / 4f^2``, no
    ``g1(Jdf,a1) D2_{b2} c2`` term (its two contributions cancel) and
    ``-pi2(a2,b2) D1_{dmu} c1``; that is the default.
    """
    return (_curv_hh(ws, a1, b1, c1, c2) + _curv_hv(ws, a1, b2, c1, c2, literal)
            - _curv_hv(ws, b1, a2, c1, c2, literal) + _curv_vv(ws, a2, b2, c1, c2, literal))


def _dmu_over_2f(ws) -> OneForm:
    return ws.dmu * (ONE / (ws.f * 2.0))


def _curv_hh(ws, a1, b1, c1, c2) -> OneForm:
    D1, g1 = ws.D1, ws.g1
    w = _dmu_over_2f(ws)
    coef = g1(d_oneform(D1, b1, w), a1) - g1(d_oneform(D1, a1, w), b1)
    return ws.h(curvature_apply(D1, a1, b1, c1)) + ws.v(ws.J2.apply(c2)) * coef


def _curv_hv(ws, a1, b2, c1, c2, literal: bool = False) -> OneForm:
    f, mu = ws.f, ws.mu
    D1, D2, g1, g2, P1, P2, J2 = ws.D1, ws.D2, ws.g1, ws.g2, ws.pi1, ws.pi2, ws.J2
    Jdf, dmu = ws.Jdf, ws.dmu
    w = _dmu_over_2f(ws)
    q = ONE / (f * f * 4.0)
    J2b = J2.apply(b2)
    # R(a1^h, b2^v) c1^h
    quad = g1(Jdf, a1) * g1(Jdf, c1) * (1.0 if literal else -1.0)
    part1 = (ws.v(b2) * (q * (quad - f * 2.0 * g1(d_oneform(D1, a1, Jdf), c1)))
             + ws.v(J2b) * (q * (g1(dmu, a1) * g1(Jdf, c1) + g1(Jdf, a1) * g1(dmu, c1)))
             - ws.v(J2b) * g1(d_oneform(D1, a1, w), c1)
             + ws.v(J2.apply(J2b)) * (q * g1(dmu, a1) * g1(dmu, c1)))
    # R(a1^h, b2^v) c2^v
    r = ONE / (f * 4.0)
    D2bc = d_oneform(D2, b2, c2)
    part2 = (ws.h(dmu) * (r * (g1(dmu, a1) * P2(b2, J2.apply(c2)) + g1(Jdf, a1) * P2(b2, c2)))
             + ws.h(Jdf) * (r * (g1(dmu, a1) * g2(b2, J2.apply(c2)) + g1(Jdf, a1) * g2(b2, c2)))
             + (ws.v(d_oneform(D2, b2, J2.apply(c2)) - J2.apply(D2bc)) * g1(dmu, a1)
                - ws.v(D2bc) * (g1(Jdf, a1) if literal else ZERO)) * (mu / (f * 2.0))
             + ws.h(d_oneform(D1, a1, dmu)) * (P2(b2, c2) * 0.5)
             + ws.h(d_oneform(D1, a1, Jdf)) * (g2(b2, c2) * 0.5)
             - ws.v(D2bc) * P1(dmu, a1))
    return part1 + part2


def _curv_vv(ws, a2, b2, c1, c2, literal: bool = False) -> OneForm:
    f, mu = ws.f, ws.mu
    D1, D2, g1, g2, P2, J2 = ws.D1, ws.D2, ws.g1, ws.g2, ws.pi2, ws.J2
    Jdf, dmu = ws.Jdf, ws.dmu
    # R(a2^v, b2^v) c1^h
    inner = dmu * g1(Jdf, c1) * (-1.0) + Jdf * g1(dmu, c1)
    D1dc = d_oneform(D1, dmu, c1)
    if literal:
        inner = inner - D1dc
    part1 = ws.h(inner) * (P2(a2, b2) / (f * 2.0))
    if not literal:
        part1 = part1 - ws.h(D1dc) * P2(a2, b2)
    bracket = (d_oneform(D2, a2, J2.apply(b2)) - d_oneform(D2, b2, J2.apply(a2))
               - J2.apply(koszul_bracket(P2, a2, b2)))
    part1 = part1 - ws.v(bracket) * (mu / (f * 2.0) * g1(dmu, c1))
    # R(a2^v, b2^v) c2^v
    nd = g1(dmu, dmu)
    nJ = g1(Jdf, Jdf)
    cross = g1(dmu, Jdf)
    pcomb = a2 * P2(b2, c2) * (-1.0) + b2 * P2(a2, c2) + c2 * (P2(a2, b2) * 2.0)
    gcomb = b2 * g2(a2, c2) - a2 * g2(b2, c2)
    part2 = (ws.v(curvature_apply(D2, a2, b2, c2)) * (mu * mu)
             + ws.h(dmu) * ((_dpi2(ws, a2, b2, c2) - _dpi2(ws, b2, a2, c2)) * (mu * 0.5))
             + ws.v(J2.apply(pcomb)) * (nd / (f * 4.0))
             + ws.v(gcomb) * (nJ / (f * 4.0))
             + ws.v(pcomb) * (cross / (f * 4.0))
             + ws.v(J2.apply(gcomb)) * (cross / (f * 4.0)))
    return part1 + part2


def _norm_J2_sq(ws) -> Expr:
    """``sum_ij gt2_ij g2(J2 dy^i, J2 dy^j)``, i.e. ``-tr(J2 o J2)``."""
    F = ws.fiber
    gt = ws.metric2.comps
    Jy = [ws.J2.apply(F.coframe(i)) for i in range(F.dim)]
    return esum(gt[i, j] * ws.g2(Jy[i], Jy[j]) for i in range(F.dim) for j in range(F.dim)
                if not gt[i, j].is_zero)


def _trace_fiber(ws, fn) -> Expr:
    """``sum_ij gt2_ij g2(fn(dy^i), dy^j)`` for a map ``fn`` on fiber 1-forms."""
    F = ws.fiber
    gt = ws.metric2.comps
    imgs = [fn(F.coframe(i)) for i in range(F.dim)]
    return esum(gt[i, j] * ws.g2(imgs[i], F.coframe(j)) for i in range(F.dim) for j in range(F.dim)
                if not gt[i, j].is_zero)


def _coframe_trace(ws) -> OneForm:
    """``sum_ij gt2_ij D2_{dy^i} dy^j`` on the fiber coordinate coframe."""
    F = ws.fiber
    gt = ws.metric2.comps
    out = _zero1(F)
    for i in range(F.dim):
        for j in range(F.dim):
            if not gt[i, j].is_zero:
                out = out + d_oneform(ws.D2, F.coframe(i), F.coframe(j)) * gt[i, j]
    return out


def ricci_block(ws: WarpedStructure, kind: str, x, y, literal: bool = False) -> Expr:
    """Block formula for ``r(x, y)``; ``kind`` is ``"hh"``, ``"hv"`` or ``"vv"``.

    For ``"hv"`` the default carries only the terms that survive the
    fiber trace of ``R(a1^h, dy^i) dy^j``: ``(mu/2f) g1(dmu,a1)`` times the
    trace of ``D2 J2`` against ``b2`` and, when ``mu`` is not Casimir,
    ``-pi1(dmu,a1) g2(sum gt2_ij D2_{dy^i} dy^j, b2)`` evaluated on the
    coordinate coframe.  ``literal=True`` gives the literal
    ``(pi1(dmu,a1) + (mu/2f) g1(Jdf,a1)) div b2`` variant instead.
    """
    f, mu = ws.f, ws.mu
    D1, D2, g1, g2, P1, P2, J2 = ws.D1, ws.D2, ws.g1, ws.g2, ws.pi1, ws.pi2, ws.J2
    Jdf, dmu = ws.Jdf, ws.dmu
    n2 = float(ws.fiber.dim)
    if kind == "hh":
        a1, b1 = x, y
        r1 = ricci(ws.g1, D1, metric=ws.metric1)(a1, b1)
        return (r1 + _norm_J2_sq(ws) / (f * f * 4.0) * g1(dmu, a1) * g1(dmu, b1)
                + (g1(Jdf, a1) * g1(Jdf, b1) + f * 2.0 * g1(d_oneform(D1, a1, Jdf), b1)) * (n2 / 4.0) / (f * f))
    if kind == "hv":
        a1, b2 = x, y
        trJ = _trace_fiber(ws, lambda e: J2.apply(d_oneform(D2, e, b2)) - d_oneform(D2, e, J2.apply(b2)))
        div = _trace_fiber(ws, lambda e: d_oneform(D2, e, b2))
        if literal:
            return (mu / (f * 2.0) * g1(dmu, a1) * trJ
                    + (P1(dmu, a1) + mu / (f * 2.0) * g1(Jdf, a1)) * div)
        return mu / (f * 2.0) * g1(dmu, a1) * trJ - P1(dmu, a1) * g2(_coframe_trace(ws), b2)
    if kind == "vv":
        a2, b2 = x, y
        r2 = ricci(ws.g2, D2, metric=ws.metric2)(a2, b2)
        return (mu * mu * r2 - g1(dmu, dmu) / (f * 2.0) * P2(a2, J2.apply(b2))
                - g1(Jdf, Jdf) * (n2 - 2.0) / (f * 4.0) * g2(a2, b2)
                - g1(dmu, Jdf) * n2 / (f * 4.0) * P2(a2, b2)
                + tri_right_apply(D1, mu) * 0.5 * P2(a2, b2)
                + tri_left(ws.g1, ws.pi1, D1, f, ws.J1) * 0.5 * g2(a2, b2))
    raise ValueError(f"unknown block kind {kind!r}")


def scalar_block(ws: WarpedStructure) -> Expr:
    f, mu = ws.f, ws.mu
    n2 = float(ws.fiber.dim)
    S1 = scalar_curv(ws.g1, ws.D1, metric=ws.metric1)
    S2 = scalar_curv(ws.g2, ws.D2, metric=ws.metric2)
    nd = ws.g1(ws.dmu, ws.dmu)
    nJ = ws.g1(ws.Jdf, ws.Jdf)
    return (S1 + mu * mu / f * S2 - nd / (f * f * 4.0) * _norm_J2_sq(ws)
            - (nJ * (n2 * (n2 - 3.0)) / (f * f * 4.0) - tri_left(ws.g1, ws.pi1, ws.D1, f, ws.J1) * n2 / f))


def _sectional_factor(g, D, a, b) -> Expr:
    num = g(curvature_apply(D, a, b, b), a)
    den = g(a, a) * g(b, b) - g(a, b) * g(a, b)
    return num / den


def sectional_block(ws: WarpedStructure, kind: str, x, y) -> Expr:
    """Block formula for the sectional curvature; ``kind`` is ``"hh"``, ``"hv"`` or ``"vv"``."""
    f, mu = ws.f, ws.mu
    g1, g2, P2, J2 = ws.g1, ws.g2, ws.pi2, ws.J2
    Jdf, dmu = ws.Jdf, ws.dmu
    if kind == "hh":
        return _sectional_factor(g1, ws.D1, x, y)
    if kind == "hv":
        a1, b2 = x, y
        na = g1(a1, a1)
        J2b = J2.apply(b2)
        return (g1(dmu, a1) * g1(dmu, a1) / (f * f * 4.0 * na) * (g2(J2b, J2b) / g2(b2, b2))
                + g1(Jdf, a1) * g1(Jdf, a1) / (f * f * 4.0 * na)
                + g1(d_oneform(ws.D1, a1, Jdf), a1) / (f * 2.0 * na))
    if kind == "vv":
        a2, b2 = x, y
        den = g2(a2, a2) * g2(b2, b2) - g2(a2, b2) * g2(a2, b2)
        K2 = _sectional_factor(g2, ws.D2, a2, b2)
        p = P2(a2, b2)
        return (mu * mu / f * K2 - g1(dmu, dmu) / (f * f * 4.0) * (p * p * 3.0 / den)
                - g1(Jdf, Jdf) / (f * f * 4.0)
                + g1(dmu, Jdf) / (f * f * 2.0) * (p * g2(a2, b2) / den))
    raise ValueError(f"unknown block kind {kind!r}")


# -- extra Poisson tensors -----------------------------------------------

def wedge_tensor(ws: WarpedStructure, f1=None, f2=None) -> Bivector:
    """``X_{f1}^h ^ X_{f2}^v``."""
    f1 = ws.f1 if f1 is None else ws._base_expr(f1)
    f2 = ws.f2 if f2 is None else ws._fiber_expr(f2)
    if f1 is None or f2 is None:
        raise ValueError("wedge_tensor needs f1 and f2")
    X = ws.h(hamiltonian_vector(ws.pi1, f1)).comps
    Y = ws.v(hamiltonian_vector(ws.pi2, f2)).comps
    n = ws.chart.dim
    comps = [[X[i] * Y[j] - X[j] * Y[i] for j in range(n)] for i in range(n)]
    return Bivector(ws.chart, comps)


def lambda_tensor(ws: WarpedStructure, mu1=None, mu2=None, f1=None, f2=None) -> Bivector:
    """``mu2^v pi1^h + mu1^h pi2^v + mu1^h mu2^v X_{f1}^h ^ X_{f2}^v``."""
    mu1 = ws.mu1 if mu1 is None else ws._base_expr(mu1)
    mu2 = ws.mu2 if mu2 is None else ws._fiber_expr(mu2)
    if mu1 is None or mu2 is None:
        raise ValueError("lambda_tensor needs mu1 and mu2")
    W = wedge_tensor(ws, f1, f2)
    comps = (ws.h(ws.pi1) * mu2 + ws.v(ws.pi2) * mu1 + W * (mu1 * mu2)).comps
    return Bivector(ws.chart, comps)


def parse_warped_def(d) -> WarpedStructure:
    """Build a warped structure from a JSON-compatible mapping."""
    base = parse_chart_def(d["base"])
    fiber = parse_chart_def(d["fiber"])
    return WarpedStructure(base, fiber, d.get("f", "1"), d.get("mu", "1"), d.get("f1"), d.get("f2"),
                           d.get("mu1"), d.get("mu2"), d.get("name"))
