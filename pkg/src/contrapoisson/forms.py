"""Differential forms on a chart, stored by increasing coordinate multi-indices."""
from __future__ import annotations

from itertools import combinations
from typing import Mapping, Optional

import numpy as np

from .chart import Chart, ChartMismatchError, OneForm, Samples
from .expr import ZERO, Expr, const, differentiate

__all__ = ["Form", "sort_sign", "wedge", "exterior_d"]


def sort_sign(idx: tuple):
    """Sort a multi-index, returning ``(sorted, sign)`` or ``(None, 0)`` on repeats."""
    if len(set(idx)) != len(idx):
        return None, 0
    arr = list(idx)
    sign = 1
    # insertion sort counting transpositions
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1] > arr[j]:
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            sign = -sign
            j -= 1
    return tuple(arr), sign


class Form:
    """Homogeneous differential form ``sum_I c_I dx^I`` with ``I`` increasing.

    Degree-0 forms are functions and use the empty multi-index.  Forms of
    degree above the chart dimension are the zero form.
    """

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms: Optional[Mapping[tuple, object]] = None):
        if degree < 0:
            raise ValueError("negative degree")
        self.chart = chart
        self.degree = degree
        out: dict = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise ValueError(f"index {idx} does not match degree {degree}")
            if any(not 0 <= i < chart.dim for i in idx):
                raise IndexError(f"index {idx} out of range")
            key, sign = sort_sign(idx)
            if key is None:
                continue
            c = c if isinstance(c, Expr) else const(c)
            if sign < 0:
                c = -c
            out[key] = out[key] + c if key in out else c
        self.terms = {k: v for k, v in out.items() if not v.is_zero}

    # -- constructors
    @classmethod
    def function(cls, chart: Chart, phi) -> "Form":
        return cls(chart, 0, {(): chart.parse(phi)})

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "Form":
        return cls(chart, degree)

    @classmethod
    def basis(cls, chart: Chart, *idx: int, coeff=None) -> "Form":
        c = const(1) if coeff is None else chart.parse(coeff)
        return cls(chart, len(idx), {tuple(idx): c})

    @classmethod
    def from_oneform(cls, alpha: OneForm) -> "Form":
        return cls(alpha.chart, 1, {(i,): c for i, c in enumerate(alpha.comps)})

    def to_oneform(self) -> OneForm:
        if self.degree != 1:
            raise ValueError("not a 1-form")
        return OneForm(self.chart, [self.component((i,)) for i in range(self.chart.dim)])

    def as_function(self) -> Expr:
        if self.degree != 0:
            raise ValueError("not a function")
        return self.terms.get((), ZERO)

    # -- access
    def component(self, idx: tuple) -> Expr:
        """Signed coefficient for any (not necessarily sorted) multi-index."""
        key, sign = sort_sign(tuple(idx))
        if key is None:
            return ZERO
        c = self.terms.get(key, ZERO)
        return -c if sign < 0 else c

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def index_set(self) -> list:
        return list(combinations(range(self.chart.dim), self.degree))

    def __repr__(self) -> str:
        if not self.terms:
            return f"Form({self.chart.name}, deg={self.degree}, 0)"
        names = self.chart.coords
        parts = []
        for idx, c in sorted(self.terms.items()):
            basis = "^".join("d" + names[i] for i in idx)
            parts.append(f"({c})" + (f"*{basis}" if basis else ""))
        return " + ".join(parts)

    # -- algebra
    def _check(self, other: "Form") -> None:
        if other.chart != self.chart:
            raise ChartMismatchError(f"{self.chart.name} vs {other.chart.name}")
        if other.degree != self.degree:
            raise ValueError(f"degree {self.degree} vs {other.degree}")

    def __add__(self, other: "Form") -> "Form":
        self._check(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms[k] + v if k in terms else v
        return Form(self.chart, self.degree, terms)

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def __neg__(self) -> "Form":
        return Form(self.chart, self.degree, {k: -v for k, v in self.terms.items()})

    def scale(self, s) -> "Form":
        s = s if isinstance(s, Expr) else const(s)
        if s.is_zero:
            return Form(self.chart, self.degree)
        return Form(self.chart, self.degree, {k: s * v for k, v in self.terms.items()})

    def __mul__(self, s):
        if isinstance(s, Form):
            return NotImplemented
        return self.scale(s)

    __rmul__ = __mul__

    def __xor__(self, other: "Form") -> "Form":
        return wedge(self, other)

    def d(self) -> "Form":
        return exterior_d(self)

    def map(self, fn) -> "Form":
        return Form(self.chart, self.degree, {k: fn(v) for k, v in self.terms.items()})

    def expressions(self) -> list:
        return list(self.terms.values())

    def dense(self, samples: Samples) -> np.ndarray:
        """Coefficients over all increasing multi-indices; shape ``(N, C)``."""
        idxs = self.index_set()
        comps = np.empty(len(idxs), dtype=object)
        for k, idx in enumerate(idxs):
            comps[k] = self.terms.get(idx, ZERO)
        if len(idxs) == 0:
            return np.zeros((len(samples), 0))
        return samples.field(comps)


def wedge(a: Form, b: Form) -> Form:
    if a.chart != b.chart:
        raise ChartMismatchError(f"{a.chart.name} vs {b.chart.name}")
    deg = a.degree + b.degree
    if deg > a.chart.dim:
        return Form(a.chart, deg)
    terms: dict = {}
    for i, ci in a.terms.items():
        for j, cj in b.terms.items():
            key, sign = sort_sign(i + j)
            if key is None:
                continue
            c = ci * cj
            if sign < 0:
                c = -c
            terms[key] = terms[key] + c if key in terms else c
    return Form(a.chart, deg, terms)


def exterior_d(w: Form) -> Form:
    chart = w.chart
    deg = w.degree + 1
    if deg > chart.dim:
        return Form(chart, deg)
    terms: dict = {}
    for idx, c in w.terms.items():
        for k, name in enumerate(chart.coords):
            if k in idx:
                continue
            dc = differentiate(c, name)
            if dc.is_zero:
                continue
            key, sign = sort_sign((k,) + idx)
            if sign < 0:
                dc = -dc
            terms[key] = terms[key] + dc if key in terms else dc
    return Form(chart, deg, terms)
