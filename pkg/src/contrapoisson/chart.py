"""Coordinate charts, tensor fields with Expr components, metric duality and sampling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .expr import (
    ONE,
    ZERO,
    DomainError,
    Evaluator,
    Expr,
    const,
    differentiate,
    parse_expr,
    var,
    walk,
)

__all__ = [
    "Chart",
    "Point",
    "Guard",
    "Samples",
    "SingularityError",
    "DomainTooSingularError",
    "ChartMismatchError",
    "TensorField",
    "ScalarField",
    "OneForm",
    "VectorField",
    "Bivector",
    "Cometric",
    "Metric",
    "Trivector",
    "Endomorphism",
    "ChartDefinition",
    "esum",
    "gradient",
    "invert_cometric",
    "invert_cometric_numeric",
    "determinant",
    "sharp_g",
    "flat_g",
    "j_field",
    "sample_points",
    "singular_guards",
    "cometric_guards",
    "parse_chart_def",
]

Point = dict  # coordinate name -> float
ScalarField = Expr


class SingularityError(ArithmeticError):
    pass


class DomainTooSingularError(RuntimeError):
    pass


class ChartMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    name: str
    coords: tuple
    domain: tuple  # ((lo, hi), ...) aligned with coords

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        if not coords:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(coords)) != len(coords):
            raise ValueError(f"duplicate coordinate names in {coords}")
        dom = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        if len(dom) != len(coords):
            raise ValueError("domain must give one interval per coordinate")
        for c, (lo, hi) in zip(coords, dom):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"bad interval for {c}: [{lo}, {hi}]")
        object.__setattr__(self, "domain", dom)

    @classmethod
    def box(cls, name: str, coords: Sequence[str], lo: float = -1.0, hi: float = 1.0) -> "Chart":
        return cls(name, tuple(coords), tuple((lo, hi) for _ in coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def var(self, i: Union[int, str]) -> Expr:
        return var(self.coords[i] if isinstance(i, int) else i)

    @property
    def vars(self) -> list:
        return [var(c) for c in self.coords]

    def parse(self, text) -> Expr:
        if isinstance(text, Expr):
            return text
        if isinstance(text, (int, float)):
            return const(text)
        return parse_expr(str(text), self.coords)

    def coframe(self, i: int) -> "OneForm":
        comps = [ZERO] * self.dim
        comps[i] = ONE
        return OneForm(self, comps)

    def frame(self, i: int) -> "VectorField":
        comps = [ZERO] * self.dim
        comps[i] = ONE
        return VectorField(self, comps)

    def validate_point(self, p: Mapping[str, float]) -> None:
        if set(p) != set(self.coords):
            raise ValueError(f"point coordinates {sorted(p)} do not match chart {self.coords}")
        if not all(np.isfinite(float(v)) for v in p.values()):
            raise ValueError("point has non-finite coordinates")


def esum(terms: Iterable) -> Expr:
    total = ZERO
    for t in terms:
        total = total + t
    return total


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return const(x)


def _object_array(comps, shape: tuple, chart: Optional["Chart"] = None) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    src = np.empty(shape, dtype=object)
    if isinstance(comps, np.ndarray) and comps.dtype == object and comps.shape == shape:
        src = comps
    else:
        src[...] = _nested(comps, shape)
    for idx in np.ndindex(*shape):
        x = src[idx]
        arr[idx] = chart.parse(x) if chart is not None and isinstance(x, str) else _as_expr(x)
    return arr


def _nested(comps, shape):
    # np.array on lists of Expr would try to iterate them; build explicitly.
    if not shape:
        return comps
    out = np.empty(shape, dtype=object)
    comps = list(comps)
    if len(comps) != shape[0]:
        raise ValueError(f"expected {shape[0]} components, got {len(comps)}")
    for i, c in enumerate(comps):
        out[i] = _nested(c, shape[1:]) if len(shape) > 1 else c
    return out


class TensorField:
    """Dense component array of expressions.

    ``variance`` is a string with one letter per slot: ``"u"`` for a
    contravariant slot (eats a 1-form) and ``"d"`` for a covariant slot
    (eats a vector field).
    """

    variance: str = ""

    def __init__(self, chart: Chart, comps, variance: Optional[str] = None):
        variance = type(self).variance if variance is None else variance
        shape = (chart.dim,) * len(variance)
        self.chart = chart
        self.variance = variance
        self.comps = _object_array(comps, shape, chart)

    @property
    def rank(self) -> int:
        return len(self.variance)

    def __getitem__(self, idx) -> Expr:
        return self.comps[idx]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.chart.name}, {self.comps.tolist()!s})"

    def _like(self, comps) -> "TensorField":
        if type(self) is TensorField:
            return TensorField(self.chart, comps, self.variance)
        return type(self)(self.chart, comps)

    def _check(self, other: "TensorField") -> None:
        if other.chart != self.chart:
            raise ChartMismatchError(f"{self.chart.name} vs {other.chart.name}")
        if other.variance != self.variance:
            raise ValueError(f"variance {self.variance} vs {other.variance}")

    def __add__(self, other):
        self._check(other)
        return self._like(self.comps + other.comps)

    def __sub__(self, other):
        self._check(other)
        return self._like(self.comps - other.comps)

    def __neg__(self):
        return self._like(-self.comps)

    def __mul__(self, scalar):
        s = _as_expr(scalar)
        return self._like(np.vectorize(lambda c: s * c, otypes=[object])(self.comps))

    __rmul__ = __mul__

    def map(self, fn) -> "TensorField":
        return self._like(np.vectorize(fn, otypes=[object])(self.comps))

    def evaluate(self, samples: "Samples") -> np.ndarray:
        return samples.field(self)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.comps.flat)

    def expressions(self) -> list:
        return list(self.comps.flat)

    def __call__(self, *args) -> Expr:
        """Full contraction: 1-forms into ``u`` slots, vector fields into ``d`` slots."""
        if len(args) != self.rank:
            raise ValueError(f"expected {self.rank} arguments")
        for a, v in zip(args, self.variance):
            want = OneForm if v == "u" else VectorField
            if not isinstance(a, want):
                raise TypeError(f"slot {v!r} takes a {want.__name__}")
            if a.chart != self.chart:
                raise ChartMismatchError(f"{self.chart.name} vs {a.chart.name}")
        n = self.chart.dim
        terms = []
        for idx in np.ndindex(*((n,) * self.rank)):
            c = self.comps[idx]
            if c.is_zero:
                continue
            t = c
            for a, i in zip(args, idx):
                t = t * a.comps[i]
                if t.is_zero:
                    break
            terms.append(t)
        return esum(terms)


class OneForm(TensorField):
    variance = "d"

    def pair(self, X: "VectorField") -> Expr:
        return esum(a * x for a, x in zip(self.comps, X.comps))

    def as_form(self):
        from .forms import Form
        return Form.from_oneform(self)


class VectorField(TensorField):
    variance = "u"

    def apply(self, phi: Expr) -> Expr:
        """Directional derivative X(phi)."""
        return esum(x * differentiate(phi, c) for x, c in zip(self.comps, self.chart.coords) if not x.is_zero)


class _Symmetric2(TensorField):
    variance = "uu"

    def apply(self, alpha: OneForm, beta: OneForm) -> Expr:
        return self(alpha, beta)

    def as_matrix(self) -> np.ndarray:
        return self.comps


class Bivector(_Symmetric2):
    """Antisymmetric contravariant 2-tensor; ``Bivector.from_upper`` fills the rest."""

    @classmethod
    def from_upper(cls, chart: Chart, upper: Mapping[tuple, object]) -> "Bivector":
        n = chart.dim
        comps = np.empty((n, n), dtype=object)
        comps[...] = ZERO
        for (i, j), v in upper.items():
            e = chart.parse(v)
            comps[i, j] = e
            comps[j, i] = -e
        return cls(chart, comps)

    @classmethod
    def zero(cls, chart: Chart) -> "Bivector":
        return cls(chart, np.full((chart.dim, chart.dim), ZERO, dtype=object))


class Cometric(_Symmetric2):
    """Symmetric nondegenerate contravariant 2-tensor (inverse metric)."""

    @classmethod
    def identity(cls, chart: Chart) -> "Cometric":
        n = chart.dim
        return cls(chart, [[ONE if i == j else ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, chart: Chart, entries: Sequence) -> "Cometric":
        n = chart.dim
        ents = [chart.parse(e) for e in entries]
        return cls(chart, [[ents[i] if i == j else ZERO for j in range(n)] for i in range(n)])


class Metric(TensorField):
    variance = "dd"


class Trivector(TensorField):
    variance = "uuu"


class Endomorphism(TensorField):
    """Linear map on 1-forms: ``(J alpha)_a = sum_j alpha_j J[j, a]``."""

    variance = "ud"

    def apply(self, alpha: OneForm) -> OneForm:
        n = self.chart.dim
        return OneForm(self.chart, [esum(alpha.comps[j] * self.comps[j, a] for j in range(n)) for a in range(n)])

    def compose(self, other: "Endomorphism") -> "Endomorphism":
        """``self o other``."""
        n = self.chart.dim
        comps = [[esum(other.comps[j, b] * self.comps[b, a] for b in range(n)) for a in range(n)] for j in range(n)]
        return Endomorphism(self.chart, comps)


def gradient(chart: Chart, phi) -> OneForm:
    """The differential d(phi) as a 1-form."""
    phi = chart.parse(phi)
    return OneForm(chart, [differentiate(phi, c) for c in chart.coords])


# -- sampling ------------------------------------------------------------

@dataclass(frozen=True)
class Guard:
    """Rejection criterion: ``|expr| >= eps`` (or ``expr >= eps`` if positive)."""

    expr: Expr
    positive: bool = False

    def ok(self, value: float, eps: float = 1e-6) -> bool:
        return value >= eps if self.positive else abs(value) >= eps


def _guard(g) -> Guard:
    return g if isinstance(g, Guard) else Guard(g)


def sample_points(chart: Chart, n: int, seed: int, guards: Sequence = (), eps: float = 1e-6,
                  max_retries: int = 1000) -> list:
    """``n`` seeded uniform points in the chart box satisfying every guard."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gs = [_guard(g) for g in guards]
    rng = np.random.default_rng(seed)
    lo = np.array([d[0] for d in chart.domain])
    hi = np.array([d[1] for d in chart.domain])
    points = []
    for _ in range(n):
        for _attempt in range(max_retries):
            x = lo + (hi - lo) * rng.random(chart.dim)
            p = {c: float(v) for c, v in zip(chart.coords, x)}
            if not gs:
                break
            ev = Evaluator(p)
            try:
                if all(g.ok(float(ev.eval(g.expr)), eps) for g in gs):
                    break
            except DomainError:
                continue
        else:
            raise DomainTooSingularError(
                f"could not find an admissible point on {chart.name} after {max_retries} tries"
            )
        points.append(p)
    return points


class Samples:
    """A batch of sample points with a shared evaluation cache."""

    def __init__(self, chart: Chart, points: Sequence[Mapping[str, float]]):
        self.chart = chart
        self.points = [dict(p) for p in points]
        for p in self.points:
            chart.validate_point(p)
        self.array = np.array([[p[c] for c in chart.coords] for p in self.points], dtype=float)
        self.ev = Evaluator({c: self.array[:, i] for i, c in enumerate(chart.coords)})

    @classmethod
    def draw(cls, chart: Chart, n: int, seed: int, guards: Sequence = ()) -> "Samples":
        return cls(chart, sample_points(chart, n, seed, guards))

    def __len__(self) -> int:
        return len(self.points)

    def eval(self, e) -> np.ndarray:
        if not isinstance(e, Expr):
            e = const(e)
        return self.ev.eval(e)

    def field(self, t) -> np.ndarray:
        comps = t.comps if hasattr(t, "comps") else np.asarray(t, dtype=object)
        return self.ev.eval_many(comps)

    def restrict(self, chart: Chart) -> "Samples":
        """The same points seen by a chart whose coordinates are a subset."""
        return Samples(chart, [{c: p[c] for c in chart.coords} for p in self.points])


def singular_guards(*objs) -> list:
    """Guards for every denominator, ln/sqrt argument and negative power in ``objs``."""
    seen: set[int] = set()
    out = []

    def add(e: Expr, positive: bool):
        key = (id(e), positive)
        if key in seen or e.op == "const":
            return
        seen.add(key)
        out.append(Guard(e, positive))

    roots = []
    for o in objs:
        if isinstance(o, Expr):
            roots.append(o)
        elif hasattr(o, "comps"):
            roots.extend(o.comps.flat)
        elif hasattr(o, "terms"):
            roots.extend(o.terms.values())
        else:
            roots.extend(o)
    visited: set[int] = set()
    for r in roots:
        for node in walk(r):
            if id(node) in visited:
                continue
            visited.add(id(node))
            if node.op == "div":
                add(node.args[1], False)
            elif node.op in ("ln", "sqrt"):
                add(node.args[0], True)
            elif node.op == "pow":
                if not float(node.value).is_integer():
                    add(node.args[0], True)
                elif node.value < 0:
                    add(node.args[0], False)
    return out


# -- metric duality ------------------------------------------------------

def _blocks(mat: np.ndarray) -> list:
    """Connected components of the structural nonzero pattern."""
    n = mat.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(n):
            if i != j and not (mat[i, j].is_zero and mat[j, i].is_zero):
                parent[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def determinant(mat: np.ndarray) -> Expr:
    """Symbolic determinant by cofactor expansion (small matrices only)."""
    n = mat.shape[0]
    if n == 1:
        return mat[0, 0]
    if n == 2:
        return mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    terms = []
    for j in range(n):
        if mat[0, j].is_zero:
            continue
        minor = np.delete(np.delete(mat, 0, axis=0), j, axis=1)
        t = mat[0, j] * determinant(minor)
        terms.append(t if j % 2 == 0 else -t)
    return esum(terms)


MAX_SYMBOLIC_BLOCK = 4


def _invert_block(sub: np.ndarray) -> np.ndarray:
    k = sub.shape[0]
    if all(c.is_const for c in sub.flat):
        num = np.array([[c.value for c in row] for row in sub], dtype=float)
        if abs(np.linalg.det(num)) < 1e-12 * max(1.0, np.abs(num).max()) ** k:
            raise SingularityError("constant cometric block is singular")
        inv = np.linalg.inv(num)
        return np.vectorize(const, otypes=[object])(inv)
    if k > MAX_SYMBOLIC_BLOCK:
        raise NotImplementedError(
            f"symbolic inversion limited to blocks of size {MAX_SYMBOLIC_BLOCK}; use invert_cometric_numeric"
        )
    det = determinant(sub)
    if det.is_zero:
        raise SingularityError("cometric block is structurally singular")
    out = np.empty((k, k), dtype=object)
    if k == 1:
        out[0, 0] = ONE / det
        return out
    for i in range(k):
        for j in range(k):
            minor = np.delete(np.delete(sub, i, axis=0), j, axis=1)
            cof = determinant(minor)
            if (i + j) % 2:
                cof = -cof
            out[j, i] = cof / det
    return out


def invert_cometric(g: Cometric) -> Metric:
    """The covariant metric whose inverse is ``g``.

    Works block by block on the structural sparsity pattern; every block must
    be constant or of size at most four.
    """
    n = g.chart.dim
    inv = np.full((n, n), ZERO, dtype=object)
    for block in _blocks(g.comps):
        sub = g.comps[np.ix_(block, block)]
        ib = _invert_block(sub)
        for a, i in enumerate(block):
            for b, j in enumerate(block):
                inv[i, j] = ib[a, b]
    return Metric(g.chart, inv)


def cometric_guards(g: Cometric) -> list:
    """Nonvanishing-determinant guards, one per non-constant block."""
    out = []
    for block in _blocks(g.comps):
        sub = g.comps[np.ix_(block, block)]
        if all(c.is_const for c in sub.flat) or len(block) > MAX_SYMBOLIC_BLOCK:
            continue
        out.append(Guard(determinant(sub)))
    return out


def invert_cometric_numeric(g: Cometric, samples: Samples) -> np.ndarray:
    """Per-point inverse of ``g``; shape ``(N, n, n)``."""
    vals = samples.field(g)
    n = g.chart.dim
    dets = np.linalg.det(vals)
    scale = np.maximum(1.0, np.abs(vals).reshape(len(vals), -1).max(axis=1)) ** n
    bad = np.nonzero(np.abs(dets) < 1e-12 * scale)[0]
    if bad.size:
        raise SingularityError(f"cometric singular at {samples.points[int(bad[0])]}")
    return np.linalg.inv(vals)


def sharp_g(g: Cometric, alpha: OneForm) -> VectorField:
    n = g.chart.dim
    return VectorField(g.chart, [esum(g.comps[i, j] * alpha.comps[j] for j in range(n)) for i in range(n)])


def flat_g(g: Cometric, X: VectorField, metric: Optional[Metric] = None) -> OneForm:
    gt = metric if metric is not None else invert_cometric(g)
    n = g.chart.dim
    return OneForm(g.chart, [esum(gt.comps[i, j] * X.comps[j] for j in range(n)) for i in range(n)])


def j_field(g: Cometric, pi: Bivector, metric: Optional[Metric] = None) -> Endomorphism:
    """The endomorphism J with ``g(J alpha, beta) = pi(alpha, beta)``."""
    if g.chart != pi.chart:
        raise ChartMismatchError(f"{g.chart.name} vs {pi.chart.name}")
    gt = metric if metric is not None else invert_cometric(g)
    n = g.chart.dim
    comps = [[esum(pi.comps[j, b] * gt.comps[b, a] for b in range(n)) for a in range(n)] for j in range(n)]
    return Endomorphism(g.chart, comps)


# -- definition files ----------------------------------------------------

@dataclass(frozen=True)
class ChartDefinition:
    chart: Chart
    cometric: Cometric
    bivector: Bivector


def _probe_points(chart: Chart, n: int = 5) -> Evaluator:
    rng = np.random.default_rng(12345)
    lo = np.array([a for a, _ in chart.domain])
    hi = np.array([b for _, b in chart.domain])
    pts = lo + (hi - lo) * rng.uniform(0.05, 0.95, size=(n, chart.dim))
    return Evaluator({c: pts[:, k] for k, c in enumerate(chart.coords)})


def _vanishes(e: Expr, ev: Evaluator) -> bool:
    if e.is_zero:
        return True
    with np.errstate(all="ignore"):
        try:
            v = np.asarray(ev.eval(e), dtype=float)
        except DomainError:
            return True
    v = v[np.isfinite(v)]
    return bool(np.all(np.abs(v) <= 1e-12 * np.maximum(1.0, np.abs(v))))


def _square(chart: Chart, rows, symmetric: bool) -> np.ndarray:
    n = chart.dim
    mat = np.full((n, n), ZERO, dtype=object)
    given = np.zeros((n, n), dtype=bool)
    rows = list(rows)
    if len(rows) != n and not (not symmetric and len(rows) == n - 1):
        raise ValueError(f"expected {n} rows, got {len(rows)}")
    for i, row in enumerate(rows):
        row = list(row)
        if len(row) == n:
            cols = range(n)
        elif symmetric and len(row) == n - i:
            cols = range(i, n)
        elif not symmetric and len(row) == n - i - 1:
            cols = range(i + 1, n)
        else:
            raise ValueError(f"row {i} has {len(row)} entries")
        for j, v in zip(cols, row):
            mat[i, j] = chart.parse(v)
            given[i, j] = True
    sign = 1 if symmetric else -1
    for i in range(n):
        for j in range(n):
            if not given[i, j] and given[j, i]:
                mat[i, j] = mat[j, i] if symmetric else -mat[j, i]
    if not symmetric:
        for i in range(n):
            if not given[i, i]:
                mat[i, i] = ZERO
    probe = _probe_points(chart)
    for i in range(n):
        for j in range(i, n):
            if not _vanishes(mat[i, j] - mat[j, i] * sign, probe):
                kind = "symmetric" if symmetric else "antisymmetric"
                raise ValueError(f"entries ({i},{j}) and ({j},{i}) are not {kind}")
    return mat


def parse_chart_def(d: Mapping) -> ChartDefinition:
    """Build a chart, cometric and bivector from a JSON-compatible mapping."""
    coords = tuple(d["coordinates"])
    dom = d.get("domain", {})
    domain = tuple(tuple(dom.get(c, (-1.0, 1.0))) for c in coords)
    chart = Chart(d.get("name", "chart"), coords, domain)
    if "cometric" in d:
        g = Cometric(chart, _square(chart, d["cometric"], True))
    else:
        g = Cometric.identity(chart)
    if "bivector" in d:
        pi = Bivector(chart, _square(chart, d["bivector"], False))
    else:
        pi = Bivector.zero(chart)
    return ChartDefinition(chart, g, pi)
