"""Command-line front end.

Exit status: 0 when every residual is under tolerance and every verdict
passes, 1 on a verification failure, 2 on a parse or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import SpectralModel, build_laplacian, check_admissibility
from .symbolic import NcPoly, Presentation, check_coproduct, implies
from .verifier import (
    ActionAnsatz,
    AnsatzError,
    ConcreteAction,
    RealizationError,
    derive_relations,
    laplacian_filter,
    verify_coaction_square,
    verify_concrete,
)

TASKS = ("laplacian", "admissibility", "derive", "verify-action", "check-presentation", "equivariance")


class ConfigError(ValueError):
    """Bad flags or unreadable input files."""


@dataclass(frozen=True)
class JobConfig:
    model: str
    task: str
    truncation: int | None = None
    tolerance: float = 1e-8
    out: str | None = None
    action: str | None = None
    presentation: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {', '.join(TASKS)}")
        if self.truncation is not None and self.truncation < 4:
            raise ConfigError("truncation must be at least 4")
        if not (0 < self.tolerance <= 1e-2):
            raise ConfigError("tolerance must lie in (0, 1e-2]")


def _load(ref: str) -> dict:
    path = Path(ref)
    if not path.exists():
        from .models import data_path

        candidate = data_path(ref)
        if candidate.exists():
            path = candidate
        else:
            raise ConfigError(f"file not found: {ref}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{ref}: invalid JSON ({exc})") from exc


def _section(doc: dict, key: str) -> dict:
    return doc[key] if key in doc else doc


def _round(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return float(f"{x:.12g}")
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def render(report: dict) -> str:
    return json.dumps(_round(report), sort_keys=True, indent=2) + "\n"


class Job:
    def __init__(self, cfg: JobConfig):
        self.cfg = cfg
        self.model_doc = _load(cfg.model)
        try:
            self.model = SpectralModel.from_json(_section(self.model_doc, "model"), cfg.truncation)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot read model: {exc}") from exc
        if self.model.truncation < 4:
            raise ConfigError("truncation must be at least 4")
        self.action_doc = _load(cfg.action) if cfg.action else self.model_doc.get("action") and self.model_doc
        self.pres_doc = _load(cfg.presentation) if cfg.presentation else (self.model_doc if "presentation" in self.model_doc else None)

    # inputs ----------------------------------------------------------------
    def presentation(self) -> Presentation:
        if self.pres_doc is None:
            raise ConfigError("this task needs --presentation")
        try:
            return Presentation.from_json(_section(self.pres_doc, "presentation"))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot read presentation: {exc}") from exc

    def concrete_action(self) -> ConcreteAction:
        if not self.action_doc:
            raise ConfigError("this task needs --action")
        try:
            return ConcreteAction.from_json(self.model.spec, _section(self.action_doc, "action"))
        except (KeyError, TypeError, AnsatzError, RealizationError, ValueError) as exc:
            raise ConfigError(f"cannot read action: {exc}") from exc

    def ansatz(self) -> ActionAnsatz:
        doc = self.action_doc or self.model_doc
        try:
            if "ansatz" in doc and "generators" in doc["ansatz"]:
                return ActionAnsatz.from_json(self.model.spec, doc["ansatz"])
            if "generators" in doc:
                return ActionAnsatz.from_json(self.model.spec, doc)
            if "ansatz_radius" in doc:
                return ActionAnsatz.full(self.model.spec, int(doc["ansatz_radius"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"cannot read ansatz: {exc}") from exc
        raise ConfigError("no ansatz found (expected 'ansatz', 'generators' or 'ansatz_radius')")

    def substitution(self) -> dict:
        doc = self.action_doc or self.model_doc
        return {s: NcPoly.from_json(p) for s, p in (doc or {}).get("substitution", {}).items()}

    # tasks -----------------------------------------------------------------
    def run(self) -> dict:
        return getattr(self, "task_" + self.cfg.task.replace("-", "_"))()

    def task_laplacian(self) -> dict:
        lap = build_laplacian(self.model)
        flat = [lam for lam, m in zip(lap.data.eigenvalues, lap.data.multiplicities) for _ in range(m)]
        asym = float(np.linalg.norm(lap.matrix - lap.matrix.conj().T))
        return {
            "eigenvalues": flat,
            "distinct_eigenvalues": lap.data.eigenvalues,
            "multiplicities": lap.data.multiplicities,
            "dimension": lap.dim,
            "residuals": {"self_adjoint": asym},
            "passed": asym < self.cfg.tolerance,
        }

    def task_admissibility(self) -> dict:
        rep = check_admissibility(build_laplacian(self.model), tol=min(self.cfg.tolerance, 1e-9))
        return rep.to_json()

    def task_derive(self) -> dict:
        lap = build_laplacian(self.model)
        filtered = laplacian_filter(self.ansatz(), lap)
        rels = derive_relations(filtered, self.model, 2, lap)
        out = {
            "surviving": {g: [t[1] for t in filtered.terms[g]] for g in filtered.generators},
            "forced_zero": filtered.forced_zero,
            "relations": [repr(r) for r in rels],
            "relation_count": len(rels),
        }
        if self.pres_doc is not None:
            verdicts = implies(self.presentation(), rels, 4, self.substitution() or None)
            out["implied"] = [v.status for v in verdicts]
            out["passed"] = all(v.reduced for v in verdicts)
        else:
            out["passed"] = True
        return out

    def task_verify_action(self) -> dict:
        act = self.concrete_action()
        rep = verify_concrete(act, self.model, tol=self.cfg.tolerance)
        out = {"concrete": rep.to_json()}
        passed = rep.passed
        if self.pres_doc is not None:
            pres = self.presentation()
            if pres.coproduct:
                sq = verify_coaction_square(act, pres, tol=self.cfg.tolerance)
                out["coaction_square"] = sq.to_json()
                passed = passed and sq.passed
            if act.target:
                out["target_relations_residual"] = act.target_presentation_check(pres)
                passed = passed and out["target_relations_residual"] < self.cfg.tolerance
        out["passed"] = passed
        return out

    def task_check_presentation(self) -> dict:
        pres = self.presentation()
        try:
            rep = check_coproduct(pres, 4)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
        out = rep.to_json()
        out["relation_count"] = len(pres.relations)
        out["generators"] = list(pres.table.names)
        return out

    def task_equivariance(self) -> dict:
        from .forms import build_forms, check_equivariance

        act = self.concrete_action()
        spaces = build_forms(self.model, 2)
        rep = check_equivariance(act, spaces, tol=self.cfg.tolerance)
        out = rep.to_json()
        out["dimensions"] = {str(sp.degree): sp.dim for sp in spaces}
        return out


def _summary(task: str, report: dict) -> str:
    status = "PASS" if report.get("passed") else "FAIL"
    lines = [f"task {task}: {status}"]
    for key in ("multiplicities", "kernel_dimension", "relation_count", "equivariance_residual"):
        if key in report:
            lines.append(f"  {key}: {report[key]}")
    return "\n".join(lines)


def run(cfg: JobConfig) -> int:
    try:
        report = Job(cfg).run()
    except (ConfigError, AnsatzError, RealizationError) as exc:
        err = {"error": str(exc), "passed": False, "task": cfg.task}
        if cfg.out:
            Path(cfg.out).write_text(render(err))
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report["task"] = cfg.task
    text = render(report)
    if cfg.out:
        Path(cfg.out).write_text(text)
    print(_summary(cfg.task, report))
    return 0 if report.get("passed") else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qiso", description="Quantum isometry computations on toric spectral triples.")
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--model", required=True, help="model or bundle JSON (or a bundled name: circle, holomorphic, full, disconnected)")
    p.add_argument("--action", help="action or ansatz JSON")
    p.add_argument("--presentation", help="presentation JSON")
    p.add_argument("--truncation", type=int, help="Fourier truncation N (>= 4)")
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--out", help="report path")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = JobConfig(
            model=args.model,
            task=args.task,
            truncation=args.truncation,
            tolerance=args.tolerance,
            out=args.out,
            action=args.action,
            presentation=args.presentation,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
