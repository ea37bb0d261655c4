"""Contravariant pseudo-Riemannian Poisson geometry on coordinate charts, with
numerical verification of warped Poisson structure identities."""
from .chart import Bivector, Chart, Cometric, OneForm, Samples, VectorField, parse_chart_def
from .connection import ContraConnection, curvature, levi_civita, ricci, scalar_curv
from .expr import Expr, differentiate, parse_expr, simplify
from .forms import Form, wedge
from .hawkins import FormBracketContext, gen_bracket, is_metaflat, metacurvature
from .poisson import is_casimir, is_poisson, poisson_bracket, schouten_self
from .report import DEFAULT_TOL, TOOL_VERSION, CheckReport, RunReport, emit_report, load_report
from .warped import WarpedStructure, parse_warped_def

__version__ = TOOL_VERSION

__all__ = [
    "Bivector", "Chart", "Cometric", "OneForm", "Samples", "VectorField", "parse_chart_def",
    "ContraConnection", "curvature", "levi_civita", "ricci", "scalar_curv",
    "Expr", "differentiate", "parse_expr", "simplify",
    "Form", "wedge",
    "FormBracketContext", "gen_bracket", "is_metaflat", "metacurvature",
    "is_casimir", "is_poisson", "poisson_bracket", "schouten_self",
    "DEFAULT_TOL", "TOOL_VERSION", "CheckReport", "RunReport", "emit_report", "load_report",
    "WarpedStructure", "parse_warped_def",
]
