"""Tolerances, residuals and check reports shared by every module."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "FAIL_THRESHOLD",
    "relative_residual",
    "IdentityRecord",
    "CheckReport",
    "RunReport",
    "emit_report",
    "load_report",
    "TOOL_VERSION",
]

TOOL_VERSION = "0.1.0"
DEFAULT_TOL = 1e-8
# a failing check must exceed this to count as a decisive failure
FAIL_THRESHOLD = 1e-3


@dataclass(frozen=True)
class Tolerance:
    """Relative tolerance policy: ``|a - b| / max(1, |largest term|)``."""

    rel: float = DEFAULT_TOL
    fail_threshold: float = FAIL_THRESHOLD

    def passes(self, residual: float) -> bool:
        return residual <= self.rel

    def decisively_fails(self, residual: float) -> bool:
        return residual > self.fail_threshold


def relative_residual(lhs, rhs=0.0, *scale_terms) -> np.ndarray:
    """Per-point relative residual between two batched arrays.

    Both sides carry the batch axis first; remaining axes are components.
    The scale at each point is ``max(1, max |term|)`` over the components of
    ``lhs``, ``rhs`` and any extra ``scale_terms``.
    """
    a = np.asarray(lhs, dtype=float)
    b = np.asarray(rhs, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    if a.ndim == 0:
        a = a.reshape(1)
        b = b.reshape(1)
    n = a.shape[0]
    diff = np.abs(a - b).reshape(n, -1)
    mags = [np.abs(a).reshape(n, -1), np.abs(b).reshape(n, -1)]
    for t in scale_terms:
        t = np.broadcast_to(np.asarray(t, dtype=float), a.shape)
        mags.append(np.abs(t).reshape(n, -1))
    scale = np.maximum(1.0, np.max(np.concatenate(mags, axis=1), axis=1, initial=0.0))
    return np.max(diff, axis=1, initial=0.0) / scale


@dataclass
class IdentityRecord:
    id: str
    samples: int
    max_residual: float
    mean_residual: float
    tol: float
    status: str  # "pass" | "fail" | "skip"
    note: str = ""

    @classmethod
    def from_residuals(cls, ident: str, residuals, tol: float, note: str = "") -> "IdentityRecord":
        r = np.asarray(residuals, dtype=float).ravel()
        if r.size and not np.all(np.isfinite(r)):
            return cls(ident, int(r.size), float("inf"), float("inf"), tol, "fail", note or "non-finite residual")
        mx = float(r.max()) if r.size else 0.0
        mean = float(r.mean()) if r.size else 0.0
        return cls(ident, int(r.size), mx, mean, tol, "pass" if mx <= tol else "fail", note)

    @classmethod
    def skipped(cls, ident: str, tol: float, reason: str) -> "IdentityRecord":
        return cls(ident, 0, 0.0, 0.0, tol, "skip", reason)

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "tol": self.tol,
            "status": self.status,
            "samples": self.samples,
        }
        if self.note:
            d["note"] = self.note
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "IdentityRecord":
        return cls(d["id"], d.get("samples", 0), d["max_residual"], d["mean_residual"],
                   d["tol"], d["status"], d.get("note", ""))


@dataclass
class CheckReport:
    """Outcome of one suite (or one standalone check) on one structure."""

    suite: str
    anchor: str
    records: list[IdentityRecord] = field(default_factory=list)
    seed: Optional[int] = None
    samples: int = 0
    runtime: float = 0.0
    skip_reason: str = ""

    def add(self, record: IdentityRecord) -> IdentityRecord:
        self.records.append(record)
        return record

    def record(self, ident: str, residuals, tol: float, note: str = "") -> IdentityRecord:
        return self.add(IdentityRecord.from_residuals(ident, residuals, tol, note))

    def skip(self, ident: str, tol: float, reason: str) -> IdentityRecord:
        return self.add(IdentityRecord.skipped(ident, tol, reason))

    def __getitem__(self, ident: str) -> IdentityRecord:
        for r in self.records:
            if r.id == ident:
                return r
        raise KeyError(ident)

    @property
    def status(self) -> str:
        if self.skip_reason:
            return "skip"
        active = [r for r in self.records if r.status != "skip"]
        if not active:
            return "skip" if self.records else "pass"
        return "pass" if all(r.status == "pass" for r in active) else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def max_residual(self) -> float:
        vals = [r.max_residual for r in self.records if r.status != "skip"]
        return max(vals) if vals else 0.0

    def to_dict(self) -> dict:
        d = {
            "id": self.suite,
            "anchor": self.anchor,
            "identities": [r.to_dict() for r in self.records],
            "status": self.status,
        }
        if self.skip_reason:
            d["skip_reason"] = self.skip_reason
        return d

    def summary_lines(self) -> list[str]:
        lines = [f"[{self.status.upper():4}] {self.suite}  ({self.anchor})"]
        for r in self.records:
            extra = f"  -- {r.note}" if r.note else ""
            lines.append(
                f"    {r.status:4} {r.id:48} max={r.max_residual:.3e} mean={r.mean_residual:.3e} "
                f"tol={r.tol:.0e}{extra}"
            )
        if self.skip_reason:
            lines.append(f"    skipped: {self.skip_reason}")
        return lines


@dataclass
class RunReport:
    fixture: str
    seed: int
    samples: int
    suites: list[CheckReport] = field(default_factory=list)
    tool_version: str = TOOL_VERSION

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "fixture": self.fixture,
            "seed": self.seed,
            "samples": self.samples,
            "suites": [s.to_dict() for s in self.suites],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        suites = []
        for s in d["suites"]:
            rep = CheckReport(s["id"], s["anchor"], [IdentityRecord.from_dict(r) for r in s["identities"]],
                              seed=d["seed"], samples=d["samples"], skip_reason=s.get("skip_reason", ""))
            suites.append(rep)
        return cls(d["fixture"], d["seed"], d["samples"], suites, d["tool_version"])


def emit_report(report: RunReport, path) -> None:
    """Write ``report`` as JSON; identical reports give identical bytes."""
    text = json.dumps(report.to_dict(), indent=2, allow_nan=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_report(path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def merge(reports: Iterable[CheckReport], suite: str, anchor: str) -> CheckReport:
    out = CheckReport(suite, anchor)
    for rep in reports:
        out.records.extend(rep.records)
    return out
