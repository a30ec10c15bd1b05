"""Batch runs: manifests, expression resolution, and report files.

A run manifest names a problem file, one multiplier-expression source per
player (file, adjugate, template, sos-search, or trivial), configuration
overrides, and an output path.  Reports are flat key-value files; every
field outside the timing section is reproducible bit for bit for a fixed
seed.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fileio import ParseError, collect_indexed, format_keyvalues, parse_keyvalues
from .model import GnepProblem, load_problem, validate
from .lme import (ExpressionError, LagrangeExpression, expression_from_text,
                  find_rational_expression_sos, parametric_template,
                  rational_expression_adjugate, trivial_parametric_expression)
from .solver import (GNE_FOUND, INCONCLUSIVE, NO_KKT_POINTS, SolveReport,
                     SolverConfig, solve_gnep)
from . import sdp

EXIT_GNE = 0
EXIT_INPUT_ERROR = 1
EXIT_NO_KKT = 2
EXIT_INCONCLUSIVE = 3

_OUTCOME_EXIT = {GNE_FOUND: EXIT_GNE, NO_KKT_POINTS: EXIT_NO_KKT,
                 INCONCLUSIVE: EXIT_INCONCLUSIVE}


class ManifestError(ValueError):
    pass


@dataclass
class ExpressionSource:
    source: str                       # file | adjugate | template | sos-search | trivial
    path: str | None = None
    template: str | None = None
    bounds: list | None = None
    num_linear: int | None = None
    degree: int | None = None
    v: list | None = None


@dataclass
class RunManifest:
    problem_path: Path
    sources: list
    config_overrides: dict = field(default_factory=dict)
    out_path: Path | None = None
    base_dir: Path = Path(".")


def load_manifest(path) -> RunManifest:
    path = Path(path)
    try:
        items = parse_keyvalues(path.read_text(), source=str(path))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest: {exc}") from None
    if "problem" not in items:
        raise ManifestError(f"{path}: missing problem key")
    base = path.parent
    sources = []
    for idx, pi in enumerate(collect_indexed(items, "players"), start=1):
        if "source" not in pi:
            raise ManifestError(f"{path}: players[{idx}].source missing")
        src = ExpressionSource(str(pi["source"]))
        if src.source == "file":
            if "expression" not in pi:
                raise ManifestError(f"{path}: players[{idx}].expression missing")
            src.path = str(pi["expression"])
        elif src.source == "template":
            if "template" not in pi:
                raise ManifestError(f"{path}: players[{idx}].template missing")
            src.template = str(pi["template"])
            if "bounds" in pi:
                src.bounds = [float(v) for v in pi["bounds"]]
            if "num_linear" in pi:
                src.num_linear = int(pi["num_linear"])
        elif src.source == "sos-search":
            if "degree" not in pi or "v" not in pi:
                raise ManifestError(f"{path}: sos-search needs degree and v")
            src.degree = int(pi["degree"])
            src.v = [float(t) for t in pi["v"]]
        elif src.source in ("adjugate", "trivial"):
            pass
        else:
            raise ManifestError(f"{path}: unknown source {src.source!r} "
                                f"for players[{idx}]")
        extras = set(pi) - {"source", "expression", "template", "bounds",
                            "num_linear", "degree", "v"}
        if extras:
            raise ManifestError(f"{path}: players[{idx}] has unknown keys {sorted(extras)}")
        sources.append(src)
    overrides = {}
    for key in ("seed", "max_order_increment"):
        if f"config.{key}" in items:
            overrides[key] = int(items[f"config.{key}"])
    for key in ("epsilon", "delta_min", "feas_tol", "rank_tol", "sdp_tol"):
        if f"config.{key}" in items:
            overrides[key] = float(items[f"config.{key}"])
    out = Path(items["out"]) if "out" in items else None
    return RunManifest(base / str(items["problem"]), sources, overrides, out, base)


def make_config(overrides: dict) -> SolverConfig:
    kwargs = dict(overrides)
    sdp_tol = kwargs.pop("sdp_tol", None)
    cfg = SolverConfig(**kwargs)
    if sdp_tol is not None:
        cfg.sdp_options = sdp.SdpOptions(abstol=sdp_tol, reltol=sdp_tol,
                                         feastol=sdp_tol)
    return cfg


def resolve_expressions(problem: GnepProblem, manifest: RunManifest,
                        opts: sdp.SdpOptions | None = None):
    """Turn each player's declared source into a LagrangeExpression."""
    if len(manifest.sources) != problem.num_players:
        raise ManifestError(
            f"{len(manifest.sources)} expression sources for "
            f"{problem.num_players} players")
    out = []
    for i, src in enumerate(manifest.sources):
        if src.source == "file":
            p = manifest.base_dir / src.path
            out.append(expression_from_text(p.read_text(), problem, i, source=str(p)))
        elif src.source == "adjugate":
            out.append(rational_expression_adjugate(problem, i))
        elif src.source == "trivial":
            out.append(trivial_parametric_expression(problem, i))
        elif src.source == "template":
            bounds = None
            if src.bounds is not None:
                flat = src.bounds
                if len(flat) != 2 * problem.players[i].dim:
                    raise ManifestError(
                        f"players[{i + 1}].bounds needs {2 * problem.players[i].dim} "
                        f"numbers (a1, b1, a2, b2, ...)")
                bounds = [(flat[2 * c], flat[2 * c + 1])
                          for c in range(problem.players[i].dim)]
            out.append(parametric_template(problem, i, src.template,
                                           bounds=bounds, num_linear=src.num_linear))
        elif src.source == "sos-search":
            res = find_rational_expression_sos(problem, i, src.degree, src.v,
                                               opts=opts)
            if res.status != "found":
                raise ExpressionError(
                    f"players[{i + 1}]: rational expression search "
                    f"{res.status} at degree {src.degree}")
            out.append(res.expression)
        else:
            raise ManifestError(f"unknown source {src.source!r}")
    return out


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def report_to_text(report: SolveReport, manifest: RunManifest) -> str:
    items: dict[str, object] = {
        "outcome": report.outcome,
        "exit_code": _OUTCOME_EXIT[report.outcome],
        "seed": report.seed,
        "restarts": report.restarts,
        "problem": str(manifest.problem_path),
        "problem_sha256": _sha256(manifest.problem_path),
    }
    for j, src in enumerate(manifest.sources, start=1):
        items[f"expressions[{j}].source"] = src.source
        if src.path:
            p = manifest.base_dir / src.path
            items[f"expressions[{j}].path"] = src.path
            items[f"expressions[{j}].sha256"] = _sha256(p)
    if report.u is not None:
        for j, v in enumerate(report.u, start=1):
            items[f"u[{j}]"] = float(v)
        if report.omega is not None and report.omega.size:
            for j, v in enumerate(report.omega, start=1):
                items[f"omega[{j}]"] = float(v)
        items["feasibility_violation"] = float(report.feasibility)
    for j, v in enumerate(report.q_values, start=1):
        items[f"q[{j}]"] = float(v)
    for i, d in sorted(report.deltas.items()):
        items[f"delta[{i}]"] = float(d) if d is not None else "unresolved"
    if report.certificate is not None:
        items["certificate.order"] = report.certificate_order
        items["certificate.kind"] = report.certificate.get("kind", "")
    items["orders_used"] = list(report.orders_used)
    for si, st in enumerate(report.stages, start=1):
        items[f"stages[{si}].name"] = st.name
        items[f"stages[{si}].status"] = st.outcome.status
        items[f"stages[{si}].orders"] = [r.order for r in st.outcome.records]
        items[f"stages[{si}].sdp_statuses"] = [r.status for r in st.outcome.records]
        for i, c in sorted(st.checks.items()):
            items[f"stages[{si}].delta[{i + 1}]"] = (
                float(c.delta) if c.delta is not None else "unresolved")
    # four-digit display block
    if report.u is not None:
        items["summary.u"] = " ".join(f"{v:.4f}" for v in report.u)
        if report.q_values:
            items["summary.q"] = " ".join(f"{v:.4f}" for v in report.q_values)
    # timing section; excluded from the bitwise reproducibility contract
    items["timing.total_seconds"] = f"{report.total_seconds:.3f}"
    for si, st in enumerate(report.stages, start=1):
        items[f"timing.stages[{si}]"] = f"{st.seconds:.3f}"
        for r in st.outcome.records:
            items[f"timing.stages[{si}].order[{r.order}]"] = f"{r.seconds:.3f}"
    return format_keyvalues(items)


@dataclass
class RunResult:
    exit_code: int
    report: SolveReport | None
    report_text: str | None
    error: str | None = None


def run_manifest(manifest: RunManifest, overrides: dict | None = None,
                 export_dir=None) -> RunResult:
    """Execute a manifest end to end; input problems map to exit code 1."""
    try:
        problem = load_problem(manifest.problem_path)
        diags = validate(problem)
        if diags:
            raise ManifestError("invalid problem: " + "; ".join(diags))
        merged = dict(manifest.config_overrides)
        merged.update(overrides or {})
        config = make_config(merged)
        expressions = resolve_expressions(problem, manifest, config.sdp_options)
    except (OSError, ParseError, ManifestError, ExpressionError, ValueError) as exc:
        return RunResult(EXIT_INPUT_ERROR, None, None, str(exc))
    if export_dir is not None:
        _export_relaxations(problem, expressions, config, Path(export_dir))
    report = solve_gnep(problem, expressions, config)
    text = report_to_text(report, manifest)
    if manifest.out_path is not None:
        out = manifest.out_path
        if not out.is_absolute():
            out = manifest.base_dir / out
        out.write_text(text)
    return RunResult(_OUTCOME_EXIT[report.outcome], report, text)


def _export_relaxations(problem, expressions, config, export_dir: Path):
    from .momentsos import build_kkt_system, build_moment_relaxation
    from .solver import random_theta, theta_polynomial
    from dataclasses import replace

    export_dir.mkdir(parents=True, exist_ok=True)
    sys0 = build_kkt_system(problem, expressions)
    n_s = sys0.space.total_dim
    theta = theta_polynomial(sys0.space, random_theta(config.seed, n_s + 1))
    sys0 = replace(sys0, objective=theta)
    d0 = sys0.base_order()
    for k in range(d0, d0 + config.max_order_increment + 1):
        rel = build_moment_relaxation(sys0, k)
        (export_dir / f"relaxation_k{k}.sdp").write_text(rel.export_text())
