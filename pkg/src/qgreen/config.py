"""JSON run configuration: parsing, validation with field paths, and echo.

Numeric fields accept plain numbers or constant expressions such as
``"1/3"``; h, f, y_ell are expression strings over their own variables.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DomainError
from .exprdsl import ExprError, compile_expr, evaluate, free_variables, parse
from .greenfn import ProblemSpec
from .measure import StieltjesMeasure
from .qkernel import QParams

DEFAULT_NUMERICS = {
    "trunc_tol": 1e-14,
    "lattice_cap": 200,
    "tol": 1e-10,
    "max_iter": 500,
    "quad_order": 32,
    "grid_n": 100,
}
DEFAULT_OUTPUT = {"dir": "qgreen_out", "format": "csv", "eval_points": 21}
PRESETS = ("example1_case1", "example1_case2", "corollary2")


@dataclass
class RunConfig:
    problem: dict
    numerics: dict = field(default_factory=lambda: dict(DEFAULT_NUMERICS))
    output: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUT))
    source: str = ""

    def to_dict(self):
        return {"problem": self.problem, "numerics": self.numerics, "output": self.output}

    def spec(self) -> ProblemSpec:
        return build_spec(self.problem, self.numerics)


def preset_path(name):
    return resources.files("qgreen") / "presets" / f"{name}.json"


def load_config(path) -> RunConfig:
    """Read ``path`` (or a bundled preset name) and validate it."""
    p = Path(path)
    if not p.exists() and str(path) in PRESETS:
        text = preset_path(str(path)).read_text()
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return config_from_dict(raw, source=str(path))


def config_from_dict(raw, source="") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    unknown = set(raw) - {"problem", "numerics", "output"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    if "problem" not in raw or not isinstance(raw["problem"], dict):
        raise ConfigError("problem", "required object is missing")
    numerics = dict(DEFAULT_NUMERICS)
    numerics.update(_section(raw, "numerics"))
    output = dict(DEFAULT_OUTPUT)
    output.update(_section(raw, "output"))
    cfg = RunConfig(copy.deepcopy(raw["problem"]), numerics, output, source)
    _check_numerics(cfg.numerics)
    _check_output(cfg.output)
    cfg.spec()  # all structural checks happen before any computation
    return cfg


def _section(raw, name):
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be an object")
    allowed = DEFAULT_NUMERICS if name == "numerics" else DEFAULT_OUTPUT
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown key")
    return sec


def number(value, path):
    """A finite float from a JSON number or a constant expression string."""
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number")
    if isinstance(value, (int, float)):
        v = float(value)
    elif isinstance(value, str):
        try:
            tree = parse(value)
            if free_variables(tree):
                raise ConfigError(path, "constant expressions may not use variables")
            v = evaluate(tree)
        except ExprError as exc:
            raise ConfigError(path, f"bad constant expression: {exc}") from None
    else:
        raise ConfigError(path, "expected a number")
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    return v


def _numbers(value, path):
    if not isinstance(value, list):
        raise ConfigError(path, "expected a list")
    return tuple(number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _expr(value, path, context):
    if not isinstance(value, str):
        raise ConfigError(path, "expected an expression string")
    try:
        return compile_expr(value, context)
    except ExprError as exc:
        raise ConfigError(path, str(exc)) from None


def _measure(raw, path):
    if raw is None:
        return StieltjesMeasure()
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object with 'density' and 'atoms'")
    for key in raw:
        if key not in ("density", "atoms"):
            raise ConfigError(f"{path}.{key}", "unknown key")
    dens = _numbers(raw.get("density", []), f"{path}.density")
    atoms = []
    for i, pair in enumerate(raw.get("atoms", [])):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"{path}.atoms[{i}]", "expected [location, mass]")
        atoms.append((number(pair[0], f"{path}.atoms[{i}][0]"), number(pair[1], f"{path}.atoms[{i}][1]")))
    try:
        return StieltjesMeasure(dens, tuple(atoms))
    except DomainError as exc:
        raise ConfigError(f"{path}.atoms", str(exc)) from None


_PROBLEM_KEYS = {
    "alpha", "q", "gammas", "betas", "zetas", "nu", "mu", "lambda", "h", "f", "y_ell", "measure",
}


def build_spec(prob: dict, numerics: dict) -> ProblemSpec:
    for key in prob:
        if key not in _PROBLEM_KEYS:
            raise ConfigError(f"problem.{key}", "unknown key")
    for key in ("alpha", "q", "f"):
        if key not in prob:
            raise ConfigError(f"problem.{key}", "required")
    q = number(prob["q"], "problem.q")
    if not 0 < q < 1:
        raise ConfigError("problem.q", "q must lie in (0, 1)")
    try:
        qp = QParams(q, trunc_tol=float(numerics["trunc_tol"]))
    except (DomainError, ValueError) as exc:
        raise ConfigError("numerics.trunc_tol", str(exc)) from None
    kw = dict(
        alpha=number(prob["alpha"], "problem.alpha"),
        qp=qp,
        gammas=_numbers(prob.get("gammas", []), "problem.gammas"),
        betas=_numbers(prob.get("betas", []), "problem.betas"),
        zetas=_numbers(prob.get("zetas", []), "problem.zetas"),
        nu=number(prob.get("nu", 1.0), "problem.nu"),
        mu=number(prob.get("mu", 0.0), "problem.mu"),
        lam=number(prob.get("lambda", 1.0), "problem.lambda"),
        measure=_measure(prob.get("measure"), "problem.measure"),
        h=_expr(prob.get("h", "1"), "problem.h", "h"),
        f=_expr(prob["f"], "problem.f", "f"),
        y_ell=_expr(prob["y_ell"], "problem.y_ell", "y") if "y_ell" in prob else None,
    )
    # report the first structural breach with its config path
    probe = object.__new__(ProblemSpec)
    for k, v in kw.items():
        object.__setattr__(probe, k, v)
    problems = ProblemSpec.problems(probe)
    if problems:
        name, msg = problems[0]
        raise ConfigError(f"problem.{name}", msg)
    return ProblemSpec(**kw)


def _check_numerics(num):
    for key in ("trunc_tol", "tol"):
        v = num[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 < v < 1:
            raise ConfigError(f"numerics.{key}", "must be a number in (0, 1)")
    for key, lo in (("lattice_cap", 4), ("max_iter", 1), ("quad_order", 2), ("grid_n", 1)):
        v = num[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < lo:
            raise ConfigError(f"numerics.{key}", f"must be an integer >= {lo}")


def _check_output(out):
    if out["format"] not in ("csv", "json"):
        raise ConfigError("output.format", "must be 'csv' or 'json'")
    v = out["eval_points"]
    if isinstance(v, bool) or not isinstance(v, int) or v < 2:
        raise ConfigError("output.eval_points", "must be an integer >= 2")
    if not isinstance(out["dir"], str) or not out["dir"]:
        raise ConfigError("output.dir", "must be a nonempty path")


def apply_overrides(cfg: RunConfig, lam=None, tol=None, max_iter=None, out=None, fmt=None) -> RunConfig:
    """Copy of ``cfg`` with CLI overrides applied and re-validated."""
    raw = copy.deepcopy(cfg.to_dict())
    if lam is not None:
        raw["problem"]["lambda"] = lam
    if tol is not None:
        raw["numerics"]["tol"] = tol
    if max_iter is not None:
        raw["numerics"]["max_iter"] = max_iter
    if out is not None:
        raw["output"]["dir"] = out
    if fmt is not None:
        raw["output"]["format"] = fmt
    return config_from_dict(raw, cfg.source)


def dump_json(obj, path):
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")
