"""Generalized bracket on differential forms induced by a contravariant connection,
and its metacurvature."""
from __future__ import annotations

from itertools import combinations, combinations_with_replacement
from typing import Optional

import numpy as np

from .chart import Chart, ChartMismatchError, Samples, TensorField, gradient
from .connection import ContraConnection, curvature, d_form
from .expr import Expr, var
from .forms import Form, wedge
from .report import CheckReport, DEFAULT_TOL, relative_residual

__all__ = [
    "FormBracketContext",
    "ROUTES",
    "gen_bracket",
    "bracket_exact",
    "metacurvature",
    "graded_jacobi",
    "random_form",
    "jacobi_residual",
    "is_metaflat",
]

ROUTES = ("first", "last", "swapped", "derivation")


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


class FormBracketContext:
    """Bivector and connection on one chart, with a cache of coframe brackets."""

    def __init__(self, D: ContraConnection):
        self.D = D
        self.pi = D.pi
        self.chart = D.chart
        self._dxdx: dict = {}

    def dxdx(self, i: int, j: int) -> Form:
        """``{dx^i, dx^j} = d(D_{dx^i} dx^j)``."""
        key = (i, j)
        if key not in self._dxdx:
            c = self.chart
            w = Form(c, 1, {(k,): self.D.gamma[i, j, k] for k in range(c.dim)})
            self._dxdx[key] = w.d()
        return self._dxdx[key]

    def with_function(self, phi: Expr, w: Form) -> Form:
        """``{phi, w} = D_{dphi} w``."""
        return d_form(self.D, gradient(self.chart, phi), w)


class _Reducer:
    def __init__(self, ctx: FormBracketContext, peel_last: bool, derivation: bool = False):
        self.ctx = ctx
        self.c = ctx.chart
        self.peel_last = peel_last
        self.derivation = derivation

    def bracket(self, w: Form, e: Form) -> Form:
        p, q = w.degree, e.degree
        if p + q > self.c.dim:
            return Form(self.c, p + q)
        if p == 0:
            return self.ctx.with_function(w.as_function(), e)
        if q == 0:
            return -self.ctx.with_function(e.as_function(), w)
        out = Form(self.c, p + q)
        for I, a in w.terms.items():
            # {a dx^I, e} = a {dx^I, e} + (-1)^{|I| q} {a, e} ^ dx^I
            out = out + self.basis_left(I, e).scale(a)
            if not a.is_const:
                t = wedge(self.ctx.with_function(a, e), Form.basis(self.c, *I))
                out = out + (t if _sign(p * q) > 0 else -t)
        return out

    def basis_left(self, I: tuple, e: Form) -> Form:
        q = e.degree
        if len(I) == 1:
            return self.dx_right(I[0], e)
        if self.peel_last:
            head, tail = I[:-1], I[-1:]
        else:
            head, tail = I[:1], I[1:]
        # {w ^ l, e} = w ^ {l, e} + (-1)^{deg l * q} {w, e} ^ l
        w_form = Form.basis(self.c, *head)
        l_form = Form.basis(self.c, *tail)
        first = wedge(w_form, self.basis_left(tail, e))
        second = wedge(self.basis_left(head, e), l_form)
        return first + (second if _sign(len(tail) * q) > 0 else -second)

    def dx_right(self, i: int, e: Form) -> Form:
        """``{dx^i, e}`` for a form ``e`` of positive degree."""
        if self.derivation:
            # d{x^i, e} - {x^i, de}
            xi = var(self.c.coords[i])
            return self.ctx.with_function(xi, e).d() - self.ctx.with_function(xi, e.d())
        out = Form(self.c, 1 + e.degree)
        dxi = Form.basis(self.c, i)
        for J, b in e.terms.items():
            # {dx^i, b dx^J} = {dx^i, b} ^ dx^J + b {dx^i, dx^J}
            out = out + self.dx_basis(i, J).scale(b)
            if not b.is_const:
                out = out - wedge(self.ctx.with_function(b, dxi), Form.basis(self.c, *J))
        return out

    def dx_basis(self, i: int, J: tuple) -> Form:
        if len(J) == 1:
            return self.ctx.dxdx(i, J[0])
        if self.peel_last:
            # {dx^i, e ^ l} = {dx^i, e} ^ l + (-1)^{deg e} e ^ {dx^i, l}
            head, tail = J[:-1], J[-1:]
            first = wedge(self.dx_basis(i, head), Form.basis(self.c, *tail))
            second = wedge(Form.basis(self.c, *head), self.dx_basis(i, tail))
            return first + (second if _sign(len(head)) > 0 else -second)
        head, tail = J[:1], J[1:]
        first = wedge(self.dx_basis(i, head), Form.basis(self.c, *tail))
        second = wedge(Form.basis(self.c, *head), self.dx_basis(i, tail))
        return first - second


def gen_bracket(ctx: FormBracketContext, w: Form, e: Form, route: str = "first") -> Form:
    """Generalized bracket of two homogeneous forms.

    ``route`` picks the reduction order: ``"first"`` peels leading wedge
    factors, ``"last"`` peels trailing ones, ``"swapped"`` brackets the
    arguments in reverse order and applies graded antisymmetry, and
    ``"derivation"`` reduces ``{dx^i, e}`` through ``d{x^i, e} - {x^i, de}``
    instead of peeling ``e``.  All routes agree when the connection is
    torsion-free.
    """
    for f in (w, e):
        if f.chart != ctx.chart:
            raise ChartMismatchError(f"{f.chart.name} vs {ctx.chart.name}")
    if route == "first":
        return _Reducer(ctx, False).bracket(w, e)
    if route == "last":
        return _Reducer(ctx, True).bracket(w, e)
    if route == "derivation":
        return _Reducer(ctx, False, derivation=True).bracket(w, e)
    if route == "swapped":
        r = _Reducer(ctx, False).bracket(e, w)
        return r if _sign(w.degree * e.degree) < 0 else -r
    raise ValueError(f"unknown route {route!r}; expected one of {ROUTES}")


def bracket_exact(ctx: FormBracketContext, phi, e: Form, route: str = "first") -> Form:
    """``{dphi, e}`` via the derivation rule ``d{phi, e} - {phi, de}``."""
    phi = ctx.chart.parse(phi)
    f = Form.function(ctx.chart, phi)
    return gen_bracket(ctx, f, e, route).d() - gen_bracket(ctx, f, e.d(), route)


def metacurvature(ctx: FormBracketContext, phi, alpha: Form, beta: Form, route: str = "first") -> Form:
    """``{phi, {a, b}} - {{phi, a}, b} - {{phi, b}, a}`` as a 2-form."""
    f = Form.function(ctx.chart, phi)
    br = lambda x, y: gen_bracket(ctx, x, y, route)
    return br(f, br(alpha, beta)) - br(br(f, alpha), beta) - br(br(f, beta), alpha)


def graded_jacobi(ctx: FormBracketContext, w: Form, e: Form, l: Form, route: str = "first") -> tuple:
    """The three terms of the graded Jacobi identity; their sum should vanish."""
    br = lambda x, y: gen_bracket(ctx, x, y, route)
    s = _sign(w.degree * e.degree)
    t1 = br(br(w, e), l)
    t2 = -br(w, br(e, l))
    t3 = br(e, br(w, l))
    return t1, t2, (t3 if s > 0 else -t3)


def random_form(chart: Chart, degree: int, rng: np.random.Generator, terms: int = 2) -> Form:
    """A form with small random polynomial coefficients."""
    from .poisson import random_polynomial
    idxs = list(combinations(range(chart.dim), degree))
    out = {}
    picks = rng.choice(len(idxs), size=min(terms, len(idxs)), replace=False)
    for k in picks:
        out[idxs[int(k)]] = random_polynomial(chart, rng, degree=2, terms=2)
    return Form(chart, degree, out)


def _form_residual(samples: Samples, total: Form, parts) -> np.ndarray:
    vals = total.dense(samples)
    if vals.shape[1] == 0:
        return np.zeros(len(samples))
    return relative_residual(vals, 0.0, *(p.dense(samples) for p in parts))


JACOBI_DEGREES = ((0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 0), (1, 1, 1))


def jacobi_residual(ctx: FormBracketContext, samples: Samples, triples: int = 5, seed: int = 0) -> np.ndarray:
    """Worst graded-Jacobi residual per point over random low-degree triples."""
    rng = np.random.default_rng(seed)
    degs = [d for d in JACOBI_DEGREES if sum(d) <= ctx.chart.dim][:triples]
    worst = np.zeros(len(samples))
    for d in degs:
        w, e, l = (random_form(ctx.chart, k, rng) for k in d)
        parts = graded_jacobi(ctx, w, e, l)
        total = parts[0] + parts[1] + parts[2]
        worst = np.maximum(worst, _form_residual(samples, total, parts))
    return worst


def is_metaflat(ctx: FormBracketContext, samples: Samples, tol: float = DEFAULT_TOL,
                R: Optional[TensorField] = None, seed: int = 0) -> CheckReport:
    """Flatness plus vanishing metacurvature on coordinate triples.

    The graded Jacobi identity on random triples is reported alongside as a
    cross-check in the note of the metacurvature record.
    """
    rep = CheckReport("is_metaflat", "flat connection with vanishing metacurvature", samples=len(samples))
    c = ctx.chart
    R = curvature(ctx.D) if R is None else R
    rvals = samples.field(R)
    rep.record("curvature_zero", relative_residual(rvals, 0.0), tol)
    worst = np.zeros(len(samples))
    for a in range(c.dim):
        phi = var(c.coords[a])
        f = Form.function(c, phi)
        for b, cc in combinations_with_replacement(range(c.dim), 2):
            al, be = Form.basis(c, b), Form.basis(c, cc)
            br = lambda x, y: gen_bracket(ctx, x, y)
            parts = (br(f, br(al, be)), -br(br(f, al), be), -br(br(f, be), al))
            total = parts[0] + parts[1] + parts[2]
            worst = np.maximum(worst, _form_residual(samples, total, parts))
    jac = float(np.max(jacobi_residual(ctx, samples, seed=seed)))
    rep.record("metacurvature_zero", worst, tol, note=f"graded Jacobi cross-check max residual {jac:.3e}")
    return rep
