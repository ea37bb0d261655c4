"""Poisson calculus on a chart: anchor, brackets, Schouten self-bracket, diagnostics."""
from __future__ import annotations

from typing import Mapping

import numpy as np

from .chart import (
    Bivector,
    ChartMismatchError,
    OneForm,
    Samples,
    Trivector,
    VectorField,
    esum,
    gradient,
)
from .expr import ZERO, Expr, Evaluator, const, differentiate, var
from .report import CheckReport, DEFAULT_TOL, relative_residual

__all__ = [
    "anchor_apply",
    "hamiltonian_vector",
    "poisson_bracket",
    "schouten_terms",
    "schouten_self",
    "schouten_bracket",
    "jacobiator",
    "is_poisson",
    "lie_bracket",
    "lie_derivative_oneform",
    "koszul_bracket",
    "is_casimir",
    "rank_at",
    "rank_batch",
    "random_polynomial",
]


def _same_chart(*fields) -> None:
    charts = {f.chart for f in fields}
    if len(charts) > 1:
        raise ChartMismatchError(" vs ".join(sorted(c.name for c in charts)))


def anchor_apply(pi: Bivector, alpha: OneForm) -> VectorField:
    """The vector field with ``beta(anchor(alpha)) = pi(alpha, beta)``."""
    _same_chart(pi, alpha)
    n = pi.chart.dim
    return VectorField(pi.chart, [esum(alpha.comps[i] * pi.comps[i, l] for i in range(n)) for l in range(n)])


def hamiltonian_vector(pi: Bivector, phi) -> VectorField:
    return anchor_apply(pi, gradient(pi.chart, phi))


def poisson_bracket(pi: Bivector, phi, psi) -> Expr:
    c = pi.chart
    return pi(gradient(c, phi), gradient(c, psi))


def schouten_terms(pi: Bivector) -> tuple:
    """The three cyclic pieces ``sum_l d_l pi^{ij} pi^{lk}`` and its rotations."""
    c = pi.chart
    n = c.dim
    dpi = np.empty((n, n, n), dtype=object)  # dpi[l, i, j] = d_l pi^{ij}
    for l, name in enumerate(c.coords):
        for i in range(n):
            for j in range(n):
                dpi[l, i, j] = differentiate(pi.comps[i, j], name)
    base = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                base[i, j, k] = esum(dpi[l, i, j] * pi.comps[l, k] for l in range(n))
    t1 = base
    t2 = np.transpose(base, (1, 2, 0))  # A_{jki} placed at [i,j,k]
    t3 = np.transpose(base, (2, 0, 1))  # A_{kij}
    return t1, t2, t3


def schouten_self(pi: Bivector) -> Trivector:
    """Cyclic sum ``A_{ijk} + A_{jki} + A_{kij}`` with ``A_{ijk} = sum_l d_l pi^{ij} pi^{lk}``.

    This equals the Jacobiator of the bracket on coordinate functions,
    i.e. one half of the Schouten bracket ``[pi, pi]`` in the usual
    normalization.
    """
    t1, t2, t3 = schouten_terms(pi)
    return Trivector(pi.chart, t1 + t2 + t3)


def schouten_bracket(pi: Bivector) -> Trivector:
    """``[pi, pi]`` in the normalization where the Jacobiator is half of it."""
    return schouten_self(pi) * 2


def jacobiator(pi: Bivector, phi, psi, chi) -> Expr:
    b = lambda a, c: poisson_bracket(pi, a, c)
    return b(b(phi, psi), chi) + b(b(psi, chi), phi) + b(b(chi, phi), psi)


def random_polynomial(chart, rng: np.random.Generator, degree: int = 2, terms: int = 4) -> Expr:
    """A small integer-coefficient polynomial in the chart coordinates."""
    out = ZERO
    for _ in range(terms):
        coef = float(rng.integers(-3, 4)) or 1.0
        mono = const(coef)
        for _ in range(int(rng.integers(1, degree + 1))):
            mono = mono * var(chart.coords[int(rng.integers(chart.dim))])
        out = out + mono
    return out


def is_poisson(pi: Bivector, samples: Samples, tol: float = DEFAULT_TOL, triples: int = 5,
               seed: int = 0) -> CheckReport:
    """Schouten cyclic-sum check plus a Jacobiator cross-check on random triples."""
    rep = CheckReport("is_poisson", "cyclic-sum condition and Jacobi identity", samples=len(samples))
    t1, t2, t3 = schouten_terms(pi)
    a1, a2, a3 = (samples.field(t) for t in (t1, t2, t3))
    rep.record("schouten_cyclic_sum", relative_residual(a1 + a2 + a3, 0.0, a1, a2, a3), tol)
    rng = np.random.default_rng(seed)
    worst = np.zeros(len(samples))
    b = lambda a, c: poisson_bracket(pi, a, c)
    for _ in range(triples):
        f, g, h = (random_polynomial(pi.chart, rng) for _ in range(3))
        parts = [samples.eval(b(b(f, g), h)), samples.eval(b(b(g, h), f)), samples.eval(b(b(h, f), g))]
        worst = np.maximum(worst, relative_residual(sum(parts), 0.0, *parts))
    rep.record("jacobiator_random_triples", worst, tol)
    return rep


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y]^k = X(Y^k) - Y(X^k)``."""
    _same_chart(X, Y)
    return VectorField(X.chart, [X.apply(yk) - Y.apply(xk) for xk, yk in zip(X.comps, Y.comps)])


def lie_derivative_oneform(X: VectorField, beta: OneForm) -> OneForm:
    """``(L_X beta)_j = X^k d_k beta_j + beta_k d_j X^k``."""
    _same_chart(X, beta)
    c = X.chart
    n = c.dim
    comps = []
    for j, name in enumerate(c.coords):
        t = X.apply(beta.comps[j])
        t = t + esum(beta.comps[k] * differentiate(X.comps[k], name) for k in range(n))
        comps.append(t)
    return OneForm(c, comps)


def koszul_bracket(pi: Bivector, alpha: OneForm, beta: OneForm) -> OneForm:
    """``L_{#a} b - L_{#b} a - d(pi(a, b))``."""
    _same_chart(pi, alpha, beta)
    a_sharp = anchor_apply(pi, alpha)
    b_sharp = anchor_apply(pi, beta)
    return (lie_derivative_oneform(a_sharp, beta) - lie_derivative_oneform(b_sharp, alpha)
            - gradient(pi.chart, pi(alpha, beta)))


def is_casimir(pi: Bivector, phi, samples: Samples, tol: float = DEFAULT_TOL) -> CheckReport:
    rep = CheckReport("is_casimir", "Hamiltonian vector field vanishes", samples=len(samples))
    phi = pi.chart.parse(phi)
    X = hamiltonian_vector(pi, phi)
    vals = samples.field(X)
    # scale by the largest contributing product pi^{il} d_i phi
    dphi = samples.field(gradient(pi.chart, phi))
    pis = samples.field(pi)
    scale = np.abs(dphi)[:, :, None] * np.abs(pis)
    rep.record("hamiltonian_vector_zero", relative_residual(vals, 0.0, scale.max(axis=1)), tol)
    return rep


def _rank_of(mat: np.ndarray) -> int:
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > 1e-9 * s[0]))


def rank_at(pi: Bivector, p: Mapping[str, float]) -> int:
    """Numeric rank of ``pi(p)`` with singular-value cutoff ``1e-9 * ||pi(p)||``."""
    pi.chart.validate_point(p)
    ev = Evaluator(dict(p))
    mat = np.array([[float(ev.eval(c)) for c in row] for row in pi.comps])
    return _rank_of(mat)


def rank_batch(pi: Bivector, samples: Samples) -> np.ndarray:
    vals = samples.field(pi)
    return np.array([_rank_of(m) for m in vals], dtype=int)
