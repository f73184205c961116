"""Scenario files: validated JSON experiment definitions and report emission.

A scenario declares a process with expression-string coefficients, a
grid or a functional descriptor, probe points, and tolerances.  Running
one dispatches to the dual construction, the exact matrix check, the
Monte Carlo estimator, or the self-duality check, and writes a
deterministic report.json / report.csv pair.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import jsonschema
import numpy as np

from .dual_builder import (
    DualReport,
    check_self_dual,
    dual_diffusion,
    dual_drift,
    dual_full_1d,
    dual_jump_multidim,
)
from .errors import DualgenError, SchemaError
from .expressions import parse_expression
from .generator_core import (
    AtomicJumpKernel,
    DensityJumpKernel,
    ProcessSpec,
    discretize,
)
from .matrix_lab import (
    dual_semigroup_via_F,
    dual_stochasticity_check,
    duality_residual,
    semigroup,
)
from .monte_carlo import PathConfig, StableLikeKernel, estimate_duality
from .order_transform import TranslationKernel
from .state_space import (
    Cone,
    Grid,
    build_grid,
    duality_indicator_matrix,
    lightcone_2d,
)

__all__ = [
    "Scenario",
    "load_scenario",
    "serialize",
    "run_scenario",
    "emit_plot_data",
    "SCENARIO_SCHEMA",
]

MODES = ("dual", "verify-matrix", "mc", "self-dual-check")

_EXPR = {"type": "string", "minLength": 1}
_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_POLICY_NAME = {"enum": ["reflect", "absorb", "truncate_mass"]}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "mode", "process"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "mode": {"enum": list(MODES)},
        "process": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dim"],
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "drift": {"type": "array", "items": _EXPR},
                "diffusion": {"type": "array", "items": _EXPR},
                "diffusion_deriv": {"type": "array", "items": _EXPR},
                "jumps": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["displacement", "rate"],
                        "properties": {
                            "displacement": _VEC,
                            "rate": {"anyOf": [_NUM, _EXPR]},
                            "rate_deriv": {"anyOf": [_NUM, _EXPR]},
                        },
                    },
                },
                "jump_density": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["density"],
                    "properties": {"density": _EXPR, "deriv": _EXPR},
                },
                "stable": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["alpha", "amplitude"],
                    "properties": {
                        "alpha": {"type": "number",
                                  "exclusiveMinimum": 0, "maximum": 2},
                        "amplitude": _EXPR,
                    },
                },
                "domain": {"enum": ["full_space", "half_line"]},
                "boundary": {"enum": ["reflect", "absorb", "none"]},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["lower", "upper", "spacing"],
            "properties": {
                "lower": _VEC,
                "upper": _VEC,
                "spacing": _VEC,
                "boundary_policy": {
                    "anyOf": [
                        _POLICY_NAME,
                        {"type": "array",
                         "items": {"anyOf": [
                             _POLICY_NAME,
                             {"type": "array", "items": _POLICY_NAME,
                              "minItems": 2, "maxItems": 2}]}},
                    ],
                },
            },
        },
        "cone": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["pareto", "lightcone", "vectors",
                                  "riesz", "newtonian", "log2d"]},
                "vectors": {"type": "array", "items": _VEC, "minItems": 1},
                "alpha": {"type": "number",
                          "exclusiveMinimum": 0, "maximum": 2},
            },
        },
        "probes": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["x", "y", "t"],
                "properties": {
                    "x": _VEC,
                    "y": _VEC,
                    "t": {"type": "number", "minimum": 0},
                },
            },
        },
        "path_config": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_paths", "dt", "seed"],
            "properties": {
                "n_paths": {"type": "integer", "minimum": 100},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "scheme": {"enum": ["euler_maruyama", "euler_jump_thinning",
                                    "stable_euler"]},
                "tail_truncation_quantile": {
                    "type": "number", "exclusiveMinimum": 0.5, "maximum": 1},
                "rate_bound": {"type": "number", "exclusiveMinimum": 0},
                "bridge_correction": {"type": "boolean"},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "z_max": {"type": "number", "exclusiveMinimum": 0},
                "residual_max": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output_dir": {"type": "string", "minLength": 1},
    },
}

DEFAULT_TOLERANCES = {"z_max": 3.5, "residual_max": 1e-9}


@dataclass(frozen=True)
class Scenario:
    """A validated scenario; `data` is the normalized JSON document and
    carries equality, the remaining fields are the compiled objects."""

    data: dict
    process: ProcessSpec = field(compare=False)
    grid: Optional[Grid] = field(compare=False)
    functional: object = field(compare=False)    # ('cone', Cone) | TranslationKernel
    probes: tuple = field(compare=False)         # ((x, y, t), ...)
    path_config: Optional[PathConfig] = field(compare=False)
    tolerances: dict = field(compare=False)

    @property
    def name(self) -> str:
        return self.data["name"]

    @property
    def mode(self) -> str:
        return self.data["mode"]

    @property
    def output_dir(self) -> str:
        return self.data.get("output_dir", ".")


def serialize(s: Scenario) -> dict:
    """The JSON document of a scenario; load_scenario(serialize(s)) == s."""
    return json.loads(json.dumps(s.data))


def _schema_fail(message: str, pointer: str):
    raise SchemaError(f"{message} (at {pointer or '/'})")


def _unary_coefficient(fn, axis: int, dim: int):
    """Wrap a state expression into a unary callable of coordinate `axis`."""
    def g(s):
        scalar = np.ndim(s) == 0
        s = np.atleast_1d(np.asarray(s, dtype=float))
        X = np.zeros((len(s), dim))
        X[:, axis] = s
        out = np.asarray(fn(X), dtype=float)
        return float(out[0]) if scalar else out
    return g


def _state_rate(fn, dim: int):
    """Wrap a state expression into rate(x) -> float over one state."""
    def g(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(fn(x.reshape(1, dim))[0])
    return g


def _per_axis(exprs, dim: int, what: str):
    if len(exprs) != dim:
        raise SchemaError(
            f"{what} needs {dim} expressions, got {len(exprs)} "
            f"(at /process/{what})")
    out = []
    for j, src in enumerate(exprs):
        out.append(_unary_coefficient(
            parse_expression(src, dim, only_variable=j), j, dim))
    return tuple(out)


def _build_jump_density(cfg: dict, dim: int):
    if dim != 1:
        raise SchemaError("jump_density supports dim = 1 only "
                          "(at /process/jump_density)")
    # variables: x1 = source point, x2 = jump target
    dens = parse_expression(cfg["density"], 2)

    def density(x, W):
        W = np.atleast_2d(np.asarray(W, dtype=float))
        pts = np.column_stack([np.full(len(W), float(np.atleast_1d(x)[0])),
                               W[:, 0]])
        return dens(pts)

    derivs = {}
    if "deriv" in cfg:
        der = parse_expression(cfg["deriv"], 2)

        def d0(x, W):
            W = np.atleast_2d(np.asarray(W, dtype=float))
            pts = np.column_stack([np.full(len(W), float(np.atleast_1d(x)[0])),
                                   W[:, 0]])
            return der(pts)

        derivs[(0,)] = d0
    return DensityJumpKernel(density=density, derivs=derivs, smoothness=1)


def _build_process(proc: dict) -> ProcessSpec:
    dim = proc["dim"]
    drift = _per_axis(proc["drift"], dim, "drift") if "drift" in proc else None
    diff = _per_axis(proc["diffusion"], dim, "diffusion") \
        if "diffusion" in proc else None
    ddiff = _per_axis(proc["diffusion_deriv"], dim, "diffusion_deriv") \
        if "diffusion_deriv" in proc else None

    jump = None
    if "jumps" in proc:
        channels, derivs = [], []
        for ch in proc["jumps"]:
            w = np.asarray(ch["displacement"], dtype=float)
            if len(w) != dim:
                raise SchemaError(
                    f"jump displacement must have {dim} entries "
                    f"(at /process/jumps)")
            r = ch["rate"]
            r = float(r) if isinstance(r, (int, float)) \
                else _state_rate(parse_expression(r, dim), dim)
            channels.append((tuple(w), r))
            dr = ch.get("rate_deriv")
            if dr is not None:
                dr = float(dr) if isinstance(dr, (int, float)) \
                    else _state_rate(parse_expression(dr, dim), dim)
            derivs.append(dr)
        jump = AtomicJumpKernel(jumps=tuple(channels),
                                rate_derivs=tuple(derivs)
                                if any(d is not None for d in derivs) else ())
    elif "jump_density" in proc:
        jump = _build_jump_density(proc["jump_density"], dim)
    elif "stable" in proc:
        st = proc["stable"]
        jump = StableLikeKernel(alpha=float(st["alpha"]),
                                amplitude=parse_expression(st["amplitude"], dim),
                                dim=dim)

    boundary = proc.get("boundary")
    if boundary == "none":
        boundary = None
    return ProcessSpec(
        dim=dim,
        drift_components=drift,
        diffusion_diag=diff,
        diffusion_diag_deriv=ddiff,
        jump=jump,
        domain=proc.get("domain", "full_space"),
        boundary=boundary,
    )


def _build_functional(cfg: Optional[dict], dim: int):
    kind = (cfg or {}).get("type", "pareto")
    if kind == "pareto":
        return ("cone", Cone.pareto(dim))
    if kind == "lightcone":
        if dim != 2:
            raise SchemaError("lightcone cone needs dim = 2 (at /cone)")
        return ("cone", lightcone_2d())
    if kind == "vectors":
        if "vectors" not in cfg:
            raise SchemaError("cone type 'vectors' needs 'vectors' (at /cone)")
        return ("cone", Cone.from_vectors(*cfg["vectors"]))
    if kind == "riesz":
        if "alpha" not in cfg:
            raise SchemaError("riesz kernel needs 'alpha' (at /cone)")
        return TranslationKernel(kind="riesz", d=dim, alpha=float(cfg["alpha"]))
    return TranslationKernel(kind=kind, d=dim)


def load_scenario(source: Union[str, Path, dict]) -> Scenario:
    """Parse and fully validate a scenario file (or pre-parsed document)."""
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"not valid JSON: {exc}") from exc
    else:
        data = json.loads(json.dumps(source))

    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errs = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errs:
        e = errs[0]
        pointer = "/" + "/".join(str(p) for p in e.absolute_path)
        _schema_fail(e.message, pointer)

    process = _build_process(data["process"])
    dim = process.dim

    grid = None
    if "grid" in data:
        g = data["grid"]
        for key in ("lower", "upper", "spacing"):
            if len(g[key]) != dim:
                _schema_fail(f"grid {key} must have {dim} entries",
                             f"/grid/{key}")
        grid = build_grid(g["lower"], g["upper"], g["spacing"],
                          g.get("boundary_policy", "truncate_mass"))

    functional = _build_functional(data.get("cone"), dim)

    probes = []
    for i, p in enumerate(data.get("probes", [])):
        x = np.asarray(p["x"], dtype=float)
        y = np.asarray(p["y"], dtype=float)
        if len(x) != dim or len(y) != dim:
            _schema_fail(f"probe {i} points must have {dim} entries",
                         f"/probes/{i}")
        if grid is not None and not (grid.contains_point(x)
                                     and grid.contains_point(y)):
            _schema_fail(f"probe {i} lies outside the grid box", f"/probes/{i}")
        probes.append((x, y, float(p["t"])))

    path_config = None
    if "path_config" in data:
        pc = data["path_config"]
        t_end = pc.get("t_end")
        if t_end is None:
            t_end = max([t for _, _, t in probes], default=0.0)
            t_end = max(t_end, pc["dt"])
        path_config = PathConfig(
            n_paths=pc["n_paths"], dt=pc["dt"], t_end=float(t_end),
            seed=pc["seed"], scheme=pc.get("scheme", "euler_maruyama"),
            tail_truncation_quantile=pc.get("tail_truncation_quantile", 0.999),
            rate_bound=pc.get("rate_bound"),
            bridge_correction=pc.get("bridge_correction", False))

    mode = data["mode"]
    if mode in ("verify-matrix",) and grid is None:
        _schema_fail("verify-matrix mode needs a grid", "/grid")
    if mode == "mc" and path_config is None:
        _schema_fail("mc mode needs path_config", "/path_config")
    if mode == "mc" and not probes:
        _schema_fail("mc mode needs at least one probe", "/probes")

    tol = dict(DEFAULT_TOLERANCES)
    tol.update(data.get("tolerances", {}))

    return Scenario(data=data, process=process, grid=grid,
                    functional=functional, probes=tuple(probes),
                    path_config=path_config, tolerances=tol)


# ---------------------------------------------------------------------------
# running

def closed_form_dual(spec: ProcessSpec) -> DualReport:
    """Dispatch to the closed-form dual construction matching the spec."""
    if spec.dim == 1:
        return dual_full_1d(spec)
    if spec.has_diffusion():
        return dual_diffusion(spec)
    if spec.jump is not None:
        return dual_jump_multidim(spec.jump)
    return dual_drift(spec)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _run_dual(s: Scenario) -> dict:
    rep = closed_form_dual(s.process)
    rows = []
    if rep.admissible and rep.dual_spec is not None:
        for i, (x, _, _) in enumerate(s.probes):
            d = rep.dual_spec
            rows.append({
                "probe_id": i,
                "x": list(map(float, x)),
                "dual_drift": list(map(float, d.eval_drift(x))),
                "dual_diffusion_diag":
                    list(map(float, np.diag(d.eval_diffusion(x)))),
            })
    return {
        "pass": bool(rep.admissible),
        "results": {
            "admissible": bool(rep.admissible),
            "violated_conditions": [
                {"condition": c[0], "where": _jsonify(c[1]),
                 "value": _jsonify(c[2])}
                for c in rep.violated_conditions],
            "notes": rep.notes,
            "dual_at_probes": rows,
        },
    }


def _run_verify_matrix(s: Scenario) -> dict:
    if not isinstance(s.functional, tuple):
        raise SchemaError("verify-matrix mode needs a cone functional (at /cone)")
    cone = s.functional[1]
    q = discretize(s.process, s.grid)
    fmat = duality_indicator_matrix(s.grid, cone)
    times = sorted({t for _, _, t in s.probes}) or [1.0]
    residual_max = s.tolerances["residual_max"]
    rows = []
    worst = 0.0
    stoch = None
    for t in times:
        T = semigroup(q, t)
        TD = dual_semigroup_via_F(q, s.grid, cone, t)
        r = duality_residual(T, TD, fmat)
        worst = max(worst, r)
        # the dual of a conservative chain may still lose mass at the top
        # of the order, so only rows exceeding 1 count as violations
        rep = dual_stochasticity_check(TD, conservative_expected=False)
        if stoch is None or not rep.passed:
            stoch = rep
        rows.append({"t": float(t), "residual": float(r),
                     "stochastic": bool(rep.passed)})
    ok = worst <= residual_max and stoch.passed
    return {
        "pass": bool(ok),
        "results": {
            "residual": float(worst),
            "stochasticity": {
                "pass": bool(stoch.passed),
                "min_entry": float(stoch.min_entry),
                "max_rowsum_defect": float(stoch.max_rowsum_defect),
                "worst_entry_index": list(stoch.worst_entry_index),
            },
            "per_time": rows,
        },
    }


def _run_mc(s: Scenario) -> dict:
    specX = s.process
    if isinstance(s.functional, tuple):
        rep = closed_form_dual(specX)
        specY, dual_report = rep.dual_spec, rep
        if not rep.admissible:
            return {
                "pass": False,
                "results": {
                    "admissible": False,
                    "violated_conditions": [
                        {"condition": c[0], "where": _jsonify(c[1]),
                         "value": _jsonify(c[2])}
                        for c in rep.violated_conditions],
                    "probes": [],
                },
            }
    else:
        specY, dual_report = specX, None
    z_max = s.tolerances["z_max"]
    rows = []
    ok = True
    for i, (x, y, t) in enumerate(s.probes):
        est = estimate_duality(specX, specY, s.functional, x, y, t,
                               s.path_config, dual_report=dual_report)
        ok = ok and abs(est.z_score) <= z_max
        rows.append({
            "probe_id": i,
            "x": list(map(float, x)), "y": list(map(float, y)), "t": float(t),
            "lhs_mean": est.lhs_mean, "lhs_se": est.lhs_se,
            "rhs_mean": est.rhs_mean, "rhs_se": est.rhs_se,
            "gap": est.gap, "z_score": est.z_score,
            "n_paths": est.n_paths,
            "truncation_level": est.truncation_level,
        })
    return {"pass": bool(ok), "results": {"admissible": True, "probes": rows}}


def _run_self_dual(s: Scenario) -> dict:
    flag, witness = check_self_dual(s.process)
    return {
        "pass": bool(flag),
        "results": {"self_dual": bool(flag), "witness": _jsonify(witness)},
    }


def _jsonify(v):
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_jsonify(u) for u in v]
    return str(v)


_RUNNERS = {
    "dual": _run_dual,
    "verify-matrix": _run_verify_matrix,
    "mc": _run_mc,
    "self-dual-check": _run_self_dual,
}


def _csv_lines(s: Scenario, report: dict):
    mode = s.mode
    res = report["results"]
    if mode == "mc":
        header = ("probe_id,x,y,t,lhs_mean,lhs_se,rhs_mean,rhs_se,gap,"
                  "z_score,n_paths,truncation_level")
        lines = [header]
        for r in res["probes"]:
            lines.append(",".join([
                str(r["probe_id"]),
                ";".join(_fmt(v) for v in r["x"]),
                ";".join(_fmt(v) for v in r["y"]),
                _fmt(r["t"]), _fmt(r["lhs_mean"]), _fmt(r["lhs_se"]),
                _fmt(r["rhs_mean"]), _fmt(r["rhs_se"]), _fmt(r["gap"]),
                _fmt(r["z_score"]), str(r["n_paths"]),
                _fmt(r["truncation_level"])]))
        return lines
    if mode == "verify-matrix":
        lines = ["t,residual,stochastic"]
        for r in res["per_time"]:
            lines.append(",".join([_fmt(r["t"]), _fmt(r["residual"]),
                                   _fmt(r["stochastic"])]))
        return lines
    if mode == "dual":
        lines = ["key,value", f"admissible,{_fmt(res['admissible'])}"]
        for v in res["violated_conditions"]:
            lines.append(f"violated,{v['condition']}")
        return lines
    return ["key,value", f"self_dual,{_fmt(res['self_dual'])}"]


def run_scenario(s: Scenario, out_dir: Optional[str] = None) -> dict:
    """Execute a scenario and write report.json / report.csv.

    The returned report carries 'pass'; the CLI maps it to the exit code.
    All output bytes are deterministic functions of (scenario, seed).
    """
    try:
        report = _RUNNERS[s.mode](s)
    except DualgenError as exc:
        raise type(exc)(f"scenario {s.name!r}: {exc}") from exc
    report = {
        "scenario": s.name,
        "mode": s.mode,
        "tolerances": {k: s.tolerances[k] for k in sorted(s.tolerances)},
        **report,
    }
    out = Path(out_dir if out_dir is not None else s.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out / "report.csv", "w") as fh:
        fh.write("\n".join(_csv_lines(s, report)) + "\n")
    return report


def emit_plot_data(report: dict, path: Union[str, Path]) -> None:
    """Long-format CSV (scenario, probe_id, side, value, se) for plotting."""
    lines = ["scenario,probe_id,side,value,se"]
    name = report.get("scenario", "")
    for r in report.get("results", {}).get("probes", []):
        lines.append(f"{name},{r['probe_id']},lhs,"
                     f"{_fmt(r['lhs_mean'])},{_fmt(r['lhs_se'])}")
        lines.append(f"{name},{r['probe_id']},rhs,"
                     f"{_fmt(r['rhs_mean'])},{_fmt(r['rhs_se'])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
