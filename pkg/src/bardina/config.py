"""Run configuration: flat ``key = value`` files, JSON overrides, range checks."""

from __future__ import annotations

import ast
import json
import math
import operator
import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .kolmogorov import region_param_errors


class ConfigError(ValueError):
    """Carries every violation found, each naming its key."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class RunConfig:
    # shared
    seed: int = 0
    out: str = "out"
    quick: bool = False
    # physics
    alpha: float = 1 / 64
    gamma: float = 1.0
    # simulate
    d: int = 2
    M: int = 16
    T: float = 1.0
    dt: float = 1e-3
    every: int = 10
    forcing: str = "kolmogorov"  # or "random"
    forcing_amplitude: float = 1.0
    init_scale: float = 1.0
    # Kolmogorov flow / eigen / lift
    s: int = 8
    lam: float = 10.0
    t_prime: float = 4.0
    r: int = 0
    a: int = 4
    b: int = 0
    # region rectangle and the instability constant (0 means "measure it")
    delta: float = 0.5
    c2: float = 0.05
    c3: float = 0.5
    c4: float = 0.55
    c1: float = 0.0
    s_list: tuple = (8, 16, 32, 64)
    samples: int = 16
    # bounds with explicit forcing norms (0 means "use the Kolmogorov g_s")
    g_norm_sq: float = 0.0
    rot_g_norm_sq: float = 0.0
    # lattice sums
    m_min: float = 1e-2
    m_max: float = 1e2
    m_points: int = 200
    tol: float = 1e-13
    # fuzzing
    trials: int = 500
    pointwise_trials: int = 1_000_000

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {_render(v)}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["s_list"] = list(self.s_list)
        return d


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
DEFAULTS = RunConfig()


def _render(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "e": math.e}


def _eval_number(text: str) -> float:
    """Arithmetic on literals and ``pi``; ``12pi`` means ``12*pi``."""
    src = re.sub(r"(\d|\))\s*(pi)\b", r"\1*\2", text.strip())
    src = src.replace("^", "**")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" and len(node.args) == 1:
            return math.sqrt(ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    return ev(ast.parse(src, mode="eval"))


def _coerce(key: str, raw, violations: list[str]):
    typ = FIELD_TYPES[key]
    try:
        if typ == "bool":
            if isinstance(raw, bool):
                return raw
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if typ == "int":
            v = raw if isinstance(raw, (int, float)) and not isinstance(raw, bool) else _eval_number(str(raw))
            if float(v) != int(v):
                raise ValueError(f"not an integer: {raw!r}")
            return int(v)
        if typ == "float":
            v = raw if isinstance(raw, (int, float)) and not isinstance(raw, bool) else _eval_number(str(raw))
            return float(v)
        if typ == "tuple":
            items = raw if isinstance(raw, (list, tuple)) else [x for x in str(raw).split(",") if x.strip()]
            out = []
            for x in items:
                v = _eval_number(str(x)) if not isinstance(x, (int, float)) else x
                if float(v) != int(v):
                    raise ValueError(f"not an integer: {x!r}")
                out.append(int(v))
            return tuple(out)
        return str(raw).strip()
    except (ValueError, SyntaxError, ZeroDivisionError, TypeError) as exc:
        violations.append(f"{key}: {exc}")
        return None


def _range_errors(c: RunConfig) -> list[str]:
    v = []

    def need(cond, msg):
        if not cond:
            v.append(msg)

    need(c.alpha > 0, f"alpha: must be > 0, got {c.alpha}")
    need(c.gamma > 0, f"gamma: must be > 0, got {c.gamma}")
    need(0 <= c.seed < 2**64, f"seed: must be an unsigned 64-bit integer, got {c.seed}")
    need(c.d in (2, 3), f"d: must be 2 or 3, got {c.d}")
    need(c.M >= 2, f"M: must be >= 2, got {c.M}")
    need(c.T > 0, f"T: must be > 0, got {c.T}")
    need(c.dt > 0, f"dt: must be > 0, got {c.dt}")
    need(c.dt <= c.T, f"dt: must not exceed T, got dt={c.dt}, T={c.T}")
    need(c.every >= 1, f"every: must be >= 1, got {c.every}")
    need(c.forcing in ("kolmogorov", "random"), f"forcing: must be 'kolmogorov' or 'random', got {c.forcing!r}")
    need(c.forcing_amplitude >= 0, f"forcing_amplitude: must be >= 0, got {c.forcing_amplitude}")
    need(c.init_scale >= 0, f"init_scale: must be >= 0, got {c.init_scale}")
    need(c.s >= 1, f"s: must be >= 1, got {c.s}")
    need(c.forcing != "kolmogorov" or c.s <= c.M, f"s: Kolmogorov forcing needs s <= M, got s={c.s}, M={c.M}")
    need(c.lam >= 0, f"lam: must be >= 0, got {c.lam}")
    need(c.t_prime > 0, f"t_prime: must be > 0, got {c.t_prime}")
    need(abs(c.r) < c.s, f"r: must satisfy |r| < s, got r={c.r}, s={c.s}")
    need(c.a > 0, f"a: must be > 0, got {c.a}")
    need(abs(c.b) <= c.a, f"b: must satisfy |b| <= a, got b={c.b}, a={c.a}")
    for msg in region_param_errors(c.delta, c.c2, c.c3, c.c4):
        v.append(f"{_region_key(msg)}: {msg}")
    need(c.c1 >= 0, f"c1: must be >= 0 (0 selects the measured value), got {c.c1}")
    need(len(c.s_list) > 0 and all(x >= 4 for x in c.s_list), f"s_list: needs entries >= 4, got {c.s_list}")
    need(c.samples >= 0, f"samples: must be >= 0, got {c.samples}")
    need(c.g_norm_sq >= 0, f"g_norm_sq: must be >= 0, got {c.g_norm_sq}")
    need(c.rot_g_norm_sq >= 0, f"rot_g_norm_sq: must be >= 0, got {c.rot_g_norm_sq}")
    need(c.m_min > 0, f"m_min: must be > 0, got {c.m_min}")
    need(c.m_max > c.m_min, f"m_max: must exceed m_min, got {c.m_max}")
    need(c.m_points >= 2, f"m_points: must be >= 2, got {c.m_points}")
    need(c.tol >= 1e-14, f"tol: must be >= 1e-14, got {c.tol}")
    need(c.trials >= 1, f"trials: must be >= 1, got {c.trials}")
    need(c.pointwise_trials >= 1, f"pointwise_trials: must be >= 1, got {c.pointwise_trials}")
    return v


def _region_key(msg: str) -> str:
    return msg.split("=", 1)[0] if msg.startswith(("delta", "c2")) else "c3"


def parse_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out, violations = {}, []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        k, v = (x.strip() for x in line.split("=", 1))
        out[k] = v
    if violations:
        raise ConfigError(violations)
    return out


def build_config(values: dict, base: RunConfig = DEFAULTS) -> RunConfig:
    violations = []
    updates = {}
    for k, raw in values.items():
        key = k.replace("-", "_")
        if key not in FIELD_TYPES:
            violations.append(f"{k}: unknown key")
            continue
        v = _coerce(key, raw, violations)
        if v is not None:
            updates[key] = v
    cfg = replace(base, **updates)
    violations += _range_errors(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


def parse_config(path: str | Path | None = None, overrides: dict | None = None, json_override: str | None = None) -> RunConfig:
    """File first, then JSON override, then individual overrides; all checked together."""
    values = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError([f"config: file not found: {p}"])
        values.update(parse_text(p.read_text()))
    if json_override:
        try:
            obj = json.loads(json_override)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"json: {exc}"]) from None
        if not isinstance(obj, dict):
            raise ConfigError(["json: override must be an object"])
        values.update(obj)
    values.update(overrides or {})
    return build_config(values)


CONFIG_KEYS = [f.name for f in fields(RunConfig)]

__all__ = ["RunConfig", "ConfigError", "parse_config", "parse_text", "build_config", "CONFIG_KEYS"]
