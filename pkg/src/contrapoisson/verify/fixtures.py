"""Built-in fixture gallery with declared expected outcomes."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..chart import parse_chart_def
from ..warped import parse_warped_def

__all__ = [
    "Fixture",
    "CHART_SUITES",
    "WARPED_SUITES",
    "ALL_SUITES",
    "GEOM_PROPERTIES",
    "builtin_fixtures",
    "get_fixture",
    "fixture_from_file",
]

CHART_SUITES = ("poisson_basics", "connection_axioms", "operators", "gen_bracket_axioms")
WARPED_SUITES = (
    "warped_tensor",
    "symplectic_cor",
    "dmu_torsion_curvature",
    "gen_bracket_lifts",
    "extra_tensors",
    "warped_connection",
    "warped_dpi",
    "warped_curvature",
    "ricci_cor",
    "scalar_cor",
    "sectional_cor",
    "geom_theorems",
)
ALL_SUITES = CHART_SUITES + WARPED_SUITES
GEOM_PROPERTIES = ("riemannian_poisson", "flat", "ricci_flat", "locally_symmetric", "sectional_flat", "metaflat")
OUTCOMES = ("pass", "fail", "skip")


@dataclass(frozen=True)
class Fixture:
    """A chart or warped definition plus the outcome each suite is expected to produce.

    ``properties`` maps a geometric property to the expected
    ``(product, base, fiber)`` statuses for the fixtures of the
    ``geom_theorems`` matrix.
    """

    name: str
    kind: str  # "chart" | "warped"
    definition: Mapping
    expected: Mapping[str, str] = field(default_factory=dict)
    description: str = ""
    properties: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("chart", "warped"):
            raise ValueError(f"unknown fixture kind {self.kind!r}")
        for suite, outcome in self.expected.items():
            if suite not in ALL_SUITES:
                raise ValueError(f"{self.name}: unknown suite {suite!r}")
            if suite in WARPED_SUITES and self.kind != "warped":
                raise ValueError(f"{self.name}: suite {suite} needs a warped fixture")
            if outcome not in OUTCOMES:
                raise ValueError(f"{self.name}: bad outcome {outcome!r} for {suite}")

    @property
    def suites(self) -> tuple:
        return CHART_SUITES + (WARPED_SUITES if self.kind == "warped" else ())

    def build(self):
        """A :class:`ChartDefinition` or a :class:`WarpedStructure`."""
        d = copy.deepcopy(dict(self.definition))
        if self.kind == "chart":
            d.setdefault("name", self.name)
            return parse_chart_def(d)
        d.setdefault("name", self.name)
        return parse_warped_def(d)


# -- factor definitions ---------------------------------------------------

SYMPLECTIC_R2 = {"name": "symplecticR2", "coordinates": ["x", "y"], "bivector": [["1"]]}
SO3_STAR = {
    "name": "so3star",
    "coordinates": ["x", "y", "z"],
    "domain": {"x": [1, 2], "y": [1, 2], "z": [1, 2]},
    "bivector": [["z", "-y"], ["x"]],
}
NON_POISSON_R4 = {
    "name": "nonPoissonR4",
    "coordinates": ["a", "b", "c", "d"],
    "bivector": [["1", "0", "0"], ["0", "0"], ["a"]],
}
CURVED_R2 = {"name": "curvedR2", "coordinates": ["x", "y"], "cometric": [["1+x^2", "0"], ["1"]], "bivector": [["1"]]}
NON_METAFLAT = {"name": "nonmetaflat", "coordinates": ["x", "y"], "bivector": [["exp(x)"]]}
HYPERBOLIC_R2 = {
    "name": "hyperbolicR2",
    "coordinates": ["x", "y"],
    "domain": {"x": [-1, 1], "y": [1, 2]},
    "cometric": [["y^2", "0"], ["y^2"]],
    "bivector": [["y^2"]],
}
RICH_BASE = {
    "name": "so3tilted",
    "coordinates": ["x", "y", "z"],
    "cometric": [["1+y^2", "0", "0"], ["1", "0.3*x"], ["1"]],
    "bivector": [["z", "-y"], ["x"]],
}
RICH_FIBER = {
    "name": "R2tilted",
    "coordinates": ["u", "v"],
    "cometric": [["1+u^2", "0.2*v"], ["1+v^2"]],
    "bivector": [["1+u^2"]],
}

SYMPLECTIC_UV = {"name": "symplecticR2_uv", "coordinates": ["u", "v"], "bivector": [["1"]]}
NON_METAFLAT_UV = {"name": "nonmetaflat_uv", "coordinates": ["u", "v"], "bivector": [["exp(u)"]]}
HYPERBOLIC_UV = {
    "name": "hyperbolicR2_uv",
    "coordinates": ["u", "v"],
    "domain": {"u": [-1, 1], "v": [1, 2]},
    "cometric": [["v^2", "0"], ["v^2"]],
    "bivector": [["v^2"]],
}


def _warped(base: Mapping, fiber: Mapping, f="1", mu="1", **extra) -> dict:
    out = {"base": copy.deepcopy(dict(base)), "fiber": copy.deepcopy(dict(fiber)), "f": f, "mu": mu}
    out.update(extra)
    return out


_CHART_PASS = {s: "pass" for s in CHART_SUITES}


def _expect(**kw) -> dict:
    out = dict(_CHART_PASS)
    out.update({k: v for k, v in kw.items()})
    return out


def _warped_expect(**kw) -> dict:
    out = _expect()
    out.update({s: "pass" for s in WARPED_SUITES})
    out.update(kw)
    return out


def _geom(**props) -> dict:
    table = {"pass": "pass", "fail": "fail"}
    return {k: tuple(table[x] for x in v.split("/")) for k, v in props.items()}


def builtin_fixtures() -> list:
    """The fixture gallery; every entry declares an outcome for every applicable suite."""
    sym_uv, hyp_uv, nmf_uv = SYMPLECTIC_UV, HYPERBOLIC_UV, NON_METAFLAT_UV
    casimir = "x^2+y^2+z^2"

    fx = [
        Fixture("symplecticR2", "chart", SYMPLECTIC_R2, _expect(),
                "Constant symplectic structure on the plane with the Euclidean cometric."),
        Fixture("so3star", "chart", SO3_STAR, _expect(),
                "Lie-Poisson structure of so(3)* on the box [1,2]^3, Euclidean cometric."),
        Fixture("nonPoissonR4", "chart", NON_POISSON_R4, _expect(poisson_basics="fail"),
                "Bivector dx1^dx2 + a dx3^dx4 whose Jacobiator is nonzero."),
        Fixture("curvedR2", "chart", CURVED_R2, _expect(),
                "Symplectic plane with the non-flat cometric diag(1+x^2, 1)."),
        Fixture("nonmetaflat", "chart", NON_METAFLAT, _expect(),
                "exp(x) dx^dy with the Euclidean cometric: flat Levi-Civita connection with nonzero metacurvature."),
        Fixture("hyperbolicR2", "chart", HYPERBOLIC_R2, _expect(),
                "Half-plane cometric y^2 I with pi = y^2 dx^dy, a Riemannian Poisson structure."),
        # warped products
        Fixture("flatProduct", "warped", _warped(SYMPLECTIC_R2, sym_uv),
                _warped_expect(extra_tensors="skip"),
                "Two symplectic planes, f = 1, mu = 1.",
                _geom(riemannian_poisson="pass/pass/pass", flat="pass/pass/pass", ricci_flat="pass/pass/pass",
                      locally_symmetric="pass/pass/pass", sectional_flat="pass/pass/pass",
                      metaflat="pass/pass/pass")),
        Fixture("warpedGeneric", "warped", _warped(SO3_STAR, sym_uv, f="1+x^2", mu=casimir),
                _warped_expect(symplectic_cor="skip", dmu_torsion_curvature="fail", gen_bracket_lifts="fail",
                               extra_tensors="skip", warped_curvature="fail", ricci_cor="fail",
                               geom_theorems="skip"),
                "so(3)* x symplectic plane with non-Casimir f = 1+x^2 and Casimir mu = x^2+y^2+z^2."),
        Fixture("warpedCasimirF", "warped", _warped(SO3_STAR, sym_uv, f=casimir, mu="2"),
                _warped_expect(symplectic_cor="skip", extra_tensors="skip"),
                "so(3)* x symplectic plane with Casimir f = x^2+y^2+z^2 and mu = 2.",
                _geom(riemannian_poisson="fail/fail/pass", flat="fail/fail/pass", ricci_flat="fail/fail/pass",
                      locally_symmetric="pass/pass/pass", sectional_flat="fail/fail/pass",
                      metaflat="fail/fail/pass")),
        Fixture("warpedUnitMu", "warped", _warped(SO3_STAR, sym_uv, f="1+x^2", mu="1"),
                _warped_expect(symplectic_cor="skip", extra_tensors="skip", warped_curvature="fail",
                               ricci_cor="fail", geom_theorems="skip"),
                "so(3)* x symplectic plane with non-Casimir f = 1+x^2 and mu = 1."),
        Fixture("warpedNonCasimirMu", "warped", _warped(SO3_STAR, sym_uv, f="1+x^2", mu="x"),
                _warped_expect(warped_tensor="fail", symplectic_cor="skip", dmu_torsion_curvature="fail",
                               gen_bracket_lifts="fail", extra_tensors="skip", warped_dpi="fail",
                               warped_curvature="fail", ricci_cor="skip", scalar_cor="skip", sectional_cor="skip",
                               geom_theorems="skip", poisson_basics="fail"),
                "so(3)* x symplectic plane with mu = x, which is not a Casimir function."),
        Fixture("warpedRich", "warped", _warped(RICH_BASE, RICH_FIBER, f="1+x^2", mu=casimir),
                _warped_expect(symplectic_cor="skip", dmu_torsion_curvature="fail", gen_bracket_lifts="fail",
                               extra_tensors="skip", warped_curvature="fail", ricci_cor="fail",
                               geom_theorems="skip"),
                "Tilted so(3)* base and a fiber with non-constant cometric and bivector."),
        Fixture("extraTensors", "warped",
                _warped(SO3_STAR, sym_uv, f1="x^2", f2="u", mu1=casimir, mu2="1"),
                _warped_expect(symplectic_cor="skip"),
                "Extra Poisson tensors on so(3)* x symplectic plane with Casimir mu1."),
        Fixture("extraTensorsNonCasimir", "warped",
                _warped(SO3_STAR, sym_uv, f1="x^2", f2="u", mu1="x", mu2="1"),
                _warped_expect(symplectic_cor="skip", extra_tensors="fail"),
                "As extraTensors but with the non-Casimir mu1 = x."),
        Fixture("symplecticProductMu", "warped", _warped(SYMPLECTIC_R2, sym_uv, mu="1+x^2"),
                _warped_expect(warped_tensor="fail", dmu_torsion_curvature="fail", gen_bracket_lifts="fail",
                               extra_tensors="skip", warped_dpi="fail", warped_curvature="fail",
                               ricci_cor="skip", scalar_cor="skip", sectional_cor="skip",
                               geom_theorems="skip", poisson_basics="fail"),
                "Symplectic planes with the nonvanishing, non-constant mu = 1+x^2."),
        Fixture("symplecticProductConst", "warped", _warped(SYMPLECTIC_R2, sym_uv, f="2", mu="3"),
                _warped_expect(extra_tensors="skip"),
                "Symplectic planes with constant f = 2, mu = 3.",
                _geom(riemannian_poisson="pass/pass/pass", flat="pass/pass/pass", ricci_flat="pass/pass/pass",
                      locally_symmetric="pass/pass/pass", sectional_flat="pass/pass/pass",
                      metaflat="pass/pass/pass")),
        # geometric-theorem matrix: f Casimir, mu nonzero constant
        Fixture("geomNonmetaflatBase", "warped", _warped(NON_METAFLAT, sym_uv, f="3", mu="1"),
                _warped_expect(extra_tensors="skip"),
                "Flat but non-metaflat base times a symplectic plane.",
                _geom(riemannian_poisson="fail/fail/pass", flat="pass/pass/pass", ricci_flat="pass/pass/pass",
                      locally_symmetric="pass/pass/pass", sectional_flat="pass/pass/pass",
                      metaflat="fail/fail/pass")),
        Fixture("geomNonmetaflatFiber", "warped", _warped(SYMPLECTIC_R2, nmf_uv, f="1", mu="2"),
                _warped_expect(extra_tensors="skip"),
                "Symplectic plane times a flat but non-metaflat fiber.",
                _geom(riemannian_poisson="fail/pass/fail", flat="pass/pass/pass", ricci_flat="pass/pass/pass",
                      locally_symmetric="pass/pass/pass", sectional_flat="pass/pass/pass",
                      metaflat="fail/pass/fail")),
        Fixture("geomHyperbolicFiber", "warped", _warped(SYMPLECTIC_R2, hyp_uv, f="2", mu="1.5"),
                _warped_expect(extra_tensors="skip"),
                "Symplectic plane times the hyperbolic Riemannian Poisson plane.",
                _geom(riemannian_poisson="pass/pass/pass", flat="fail/pass/fail", ricci_flat="fail/pass/fail",
                      locally_symmetric="pass/pass/pass", sectional_flat="fail/pass/fail",
                      metaflat="fail/pass/fail")),
        Fixture("geomCurvedBase", "warped", _warped(CURVED_R2, sym_uv, f="1", mu="1"),
                _warped_expect(extra_tensors="skip"),
                "Non-flat, non-symmetric curvedR2 base times a symplectic plane.",
                _geom(riemannian_poisson="fail/fail/pass", flat="fail/fail/pass", ricci_flat="fail/fail/pass",
                      locally_symmetric="fail/fail/pass", sectional_flat="fail/fail/pass",
                      metaflat="fail/fail/pass")),
        Fixture("geomHyperbolicBoth", "warped", _warped(HYPERBOLIC_R2, hyp_uv, f="1", mu="-1"),
                _warped_expect(extra_tensors="skip"),
                "Two hyperbolic planes with mu = -1.",
                _geom(riemannian_poisson="pass/pass/pass", flat="fail/fail/fail", ricci_flat="fail/fail/fail",
                      locally_symmetric="pass/pass/pass", sectional_flat="fail/fail/fail",
                      metaflat="fail/fail/fail")),
    ]
    return fx


def get_fixture(name: str) -> Fixture:
    for fx in builtin_fixtures():
        if fx.name == name:
            return fx
    raise KeyError(f"no built-in fixture named {name!r}")


def fixture_from_file(path) -> Fixture:
    """Load a user definition file (JSON).  Files with ``base`` and ``fiber`` keys are warped."""
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = "warped" if "base" in d and "fiber" in d else "chart"
    name = d.get("name", Path(path).stem)
    return Fixture(name, kind, d, {}, f"user definition {Path(path).name}")
