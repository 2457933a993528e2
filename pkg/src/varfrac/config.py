"""Experiment configuration files (TOML).

Sections: ``[domain]``, ``[powers.order]``, ``[powers.exponent]``,
``[kernel]``, ``[exterior]``, ``[solver]``, ``[[quantities]]``,
``[[checks]]`` and ``[output]``.  Unknown keys are rejected and every
error message names the offending line.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .exterior import ConstantFar, ExteriorModel, PowerFar, SignFar, ZeroFar
from .mesh import build_mesh
from .powers import (CheckerboardPerturbation, ConstantField, ConstantPerturbation, KernelSpec,
                     LogModulatedField, SeparableField, TabulatedField, UnitPerturbation)
from .solver import SolverConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FIELD_KEYS = {
    "constant": {"kind", "value"},
    "separable": {"kind", "base", "scale", "cap", "center"},
    "log": {"kind", "base", "lam", "center"},
    "tabulated": {"kind", "nodes", "table", "far", "r_pow", "lower", "upper", "symmetrize"},
}
PERTURBATION_KEYS = {
    "none": set(),
    "constant": {"value"},
    "checkerboard": {"width", "low", "high"},
}
FAR_KEYS = {
    "zero": set(),
    "constant": {"value"},
    "power": {"amplitude", "gamma"},
    "sign": {"bound"},
}
CHECK_KEYS = {
    "caccioppoli": {"x0", "rho", "r", "k", "sign", "form"},
    "log_estimate": {"x0", "rho", "r", "d", "a", "b", "shift"},
    "linf_bound": {"x0", "r", "delta"},
    "oscillation": {"x0", "r", "sigma", "length", "min_cells"},
    "alpha_sigma": {"sigma", "r"},
    "minimality": {"trials"},
    "maximum_principle": set(),
}
QUANTITY_KEYS = {
    "energy": set(),
    "seminorm": {"x0", "r", "refine"},
    "crossregion": set(),
    "tail": {"x0", "r", "rho"},
    "tail_space": set(),
}
SECTION_KEYS = {
    "domain": {"lo", "hi", "h", "r_max", "n"},
    "kernel": {"lam", "perturbation", "value", "width", "low", "high"},
    "exterior": {"far", "value", "amplitude", "gamma", "bound", "collar"},
    "solver": {"rtol", "max_iter", "armijo", "backtrack", "init", "max_backtracks"},
    "output": {"dir", "seed"},
}
TOP_KEYS = {"domain", "powers", "kernel", "exterior", "solver", "quantities", "checks", "output"}


class _Lines:
    """Maps (section path, key) to the line where the key is written."""

    _header = re.compile(r"^\s*(\[\[?)\s*([A-Za-z0-9_.\-\s\"']+?)\s*\]\]?\s*(#.*)?$")
    _key = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")

    def __init__(self, text):
        self.sections = {}       # section name -> list of header lines (arrays repeat)
        self.keys = {}           # (section, index, key) -> line
        section, counters = "", {}
        index = 0
        for lineno, line in enumerate(text.splitlines(), start=1):
            m = self._header.match(line)
            if m:
                section = m.group(2).replace(" ", "")
                self.sections.setdefault(section, []).append(lineno)
                index = counters.get(section, 0)
                counters[section] = index + 1
                continue
            k = self._key.match(line)
            if k:
                self.keys.setdefault((section, index, k.group(1)), lineno)

    def of(self, section, key=None, index=0):
        if key is not None and (section, index, key) in self.keys:
            return self.keys[(section, index, key)]
        headers = self.sections.get(section)
        if headers:
            return headers[min(index, len(headers) - 1)]
        return 1


def _fail(lines, section, message, key=None, index=0):
    raise ConfigurationError(f"line {lines.of(section, key, index)}: [{section}] {message}")


def _reject_unknown(lines, section, table, allowed, index=0):
    for key in table:
        if key not in allowed:
            _fail(lines, section, f"unknown key {key!r}", key, index)


def _number(lines, section, table, key, default=None, index=0, integer=False):
    if key not in table:
        if default is None:
            _fail(lines, section, f"missing key {key!r}", None, index)
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(lines, section, f"{key} must be a number", key, index)
    if integer:
        if not isinstance(value, int):
            _fail(lines, section, f"{key} must be an integer", key, index)
        return int(value)
    return float(value)


def _vector(lines, section, table, key, n, default=None, index=0):
    if key not in table:
        if default is None:
            _fail(lines, section, f"missing key {key!r}", None, index)
        return list(default)
    value = table[key]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value] * n if key in ("lo", "hi") else [value]
    if not isinstance(value, list) or len(value) != n or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        _fail(lines, section, f"{key} must be a list of {n} numbers", key, index)
    return [float(v) for v in value]


@dataclass
class ExperimentConfig:
    """Parsed configuration plus the objects it describes."""

    path: str
    mesh: object
    order: object
    exponent: object
    kernel: KernelSpec
    exterior: ExteriorModel
    solver: SolverConfig
    quantities: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    out_dir: str = "out"
    seed: int = 0
    raw: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.mesh.n


def _build_field(lines, role, table, n, r_max):
    section = f"powers.{role}"
    if not isinstance(table, dict):
        _fail(lines, "powers", f"{role} must be a table")
    kind = table.get("kind", "constant")
    if kind not in FIELD_KEYS:
        _fail(lines, section, f"unknown field kind {kind!r}", "kind")
    _reject_unknown(lines, section, table, FIELD_KEYS[kind])
    num = lambda key, default=None: _number(lines, section, table, key, default)  # noqa: E731
    try:
        if kind == "constant":
            fld = ConstantField(role, num("value"))
        elif kind == "separable":
            fld = SeparableField(role, num("base"), num("scale"), num("cap"),
                                 _vector(lines, section, table, "center", n, [0.0] * n), n)
        elif kind == "log":
            fld = LogModulatedField(role, num("base"), num("lam"),
                                    _vector(lines, section, table, "center", n, [0.0] * n), n)
        else:
            fld = TabulatedField(role, table.get("nodes"), table.get("table"), num("far"),
                                 num("r_pow"), table.get("lower"), table.get("upper"),
                                 bool(table.get("symmetrize", True)))
    except (ConfigurationError, ValueError, TypeError) as exc:
        _fail(lines, section, str(exc))
    if fld.r_pow > r_max:
        _fail(lines, section, f"R_pow = {fld.r_pow:g} exceeds R_max = {r_max:g}")
    return fld


def _build_kernel(lines, table, n):
    _reject_unknown(lines, "kernel", table, SECTION_KEYS["kernel"])
    kind = table.get("perturbation", "none")
    if kind not in PERTURBATION_KEYS:
        _fail(lines, "kernel", f"unknown perturbation {kind!r}", "perturbation")
    extra = set(table) - {"lam", "perturbation"} - PERTURBATION_KEYS[kind]
    if extra:
        _fail(lines, "kernel", f"key {sorted(extra)[0]!r} does not apply to {kind!r}",
              sorted(extra)[0])
    num = lambda key, default=None: _number(lines, "kernel", table, key, default)  # noqa: E731
    try:
        if kind == "none":
            pert = UnitPerturbation()
        elif kind == "constant":
            pert = ConstantPerturbation(num("value"))
        else:
            pert = CheckerboardPerturbation(num("width"), num("low"), num("high"))
        return KernelSpec(lam=num("lam", 1.0), perturbation=pert, n=n)
    except (ConfigurationError, ValueError) as exc:
        _fail(lines, "kernel", str(exc))


def _build_far(lines, table):
    kind = table.get("far", "zero")
    if kind not in FAR_KEYS:
        _fail(lines, "exterior", f"unknown far field {kind!r}", "far")
    extra = set(table) - {"far", "collar"} - FAR_KEYS[kind]
    if extra:
        _fail(lines, "exterior", f"key {sorted(extra)[0]!r} does not apply to {kind!r}",
              sorted(extra)[0])
    num = lambda key, default=None: _number(lines, "exterior", table, key, default)  # noqa: E731
    if kind == "zero":
        return ZeroFar()
    if kind == "constant":
        return ConstantFar(num("value"))
    if kind == "power":
        return PowerFar(num("amplitude"), num("gamma"))
    return SignFar(num("bound"))


def _entries(lines, raw, name, allowed):
    items = raw.get(name, [])
    if not isinstance(items, list):
        _fail(lines, name, f"{name} must be an array of tables ([[{name}]])")
    out = []
    for i, item in enumerate(items):
        kind = item.get("kind")
        if kind not in allowed:
            _fail(lines, name, f"unknown {name[:-1]} kind {kind!r}", "kind", i)
        _reject_unknown(lines, name, item, allowed[kind] | {"kind"}, i)
        entry = dict(item)
        entry["_line"] = lines.of(name, None, i)
        out.append(entry)
    return out


def parse_config(text, path="<string>"):
    """Parse configuration text into an :class:`ExperimentConfig`."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    lines = _Lines(text)
    for key in raw:
        if key not in TOP_KEYS:
            _fail(lines, key if isinstance(raw[key], dict) else "", f"unknown section {key!r}", key)
    for name in ("domain", "powers", "kernel", "exterior", "solver", "output"):
        if name in raw and not isinstance(raw[name], dict):
            _fail(lines, "", f"{name} must be a table", name)
    dom = raw.get("domain")
    if dom is None:
        raise ConfigurationError(f"{path}: line 1: missing [domain] section")
    _reject_unknown(lines, "domain", dom, SECTION_KEYS["domain"])
    n = _number(lines, "domain", dom, "n", 1, integer=True)
    lo = _vector(lines, "domain", dom, "lo", n)
    hi = _vector(lines, "domain", dom, "hi", n)
    h = _number(lines, "domain", dom, "h")
    r_max = _number(lines, "domain", dom, "r_max")
    try:
        mesh = build_mesh((lo, hi), h, r_max, n)
    except ConfigurationError as exc:
        _fail(lines, "domain", str(exc))

    powers = raw.get("powers", {})
    _reject_unknown(lines, "powers", powers, {"order", "exponent"})
    order = _build_field(lines, "order", powers.get("order", {"kind": "constant", "value": 0.5}),
                         n, r_max)
    exponent = _build_field(lines, "exponent",
                            powers.get("exponent", {"kind": "constant", "value": 2.0}), n, r_max)
    kernel = _build_kernel(lines, raw.get("kernel", {}), n)

    ext = raw.get("exterior", {})
    _reject_unknown(lines, "exterior", ext, SECTION_KEYS["exterior"])
    far = _build_far(lines, ext)
    collar = ext.get("collar")
    if collar is not None and (isinstance(collar, bool) or not isinstance(collar, (int, float))):
        _fail(lines, "exterior", "collar must be a number", "collar")
    try:
        exterior = ExteriorModel(mesh, far, collar)
    except ConfigurationError as exc:
        _fail(lines, "exterior", str(exc))

    sol = raw.get("solver", {})
    _reject_unknown(lines, "solver", sol, SECTION_KEYS["solver"])
    try:
        defaults = SolverConfig()
        solver = SolverConfig(
            rtol=_number(lines, "solver", sol, "rtol", defaults.rtol),
            max_iter=_number(lines, "solver", sol, "max_iter", defaults.max_iter, integer=True),
            armijo=_number(lines, "solver", sol, "armijo", defaults.armijo),
            backtrack=_number(lines, "solver", sol, "backtrack", defaults.backtrack),
            init=str(sol.get("init", defaults.init)),
            max_backtracks=_number(lines, "solver", sol, "max_backtracks",
                                   defaults.max_backtracks, integer=True))
    except ConfigurationError as exc:
        _fail(lines, "solver", str(exc))
    if solver.init == "user":
        _fail(lines, "solver", "init = 'user' is not available from a config file", "init")

    out = raw.get("output", {})
    _reject_unknown(lines, "output", out, SECTION_KEYS["output"])
    seed = _number(lines, "output", out, "seed", 0, integer=True)
    if seed < 0 or seed >= 2 ** 64:
        _fail(lines, "output", "seed must be an unsigned 64-bit integer", "seed")
    return ExperimentConfig(
        path=path, mesh=mesh, order=order, exponent=exponent, kernel=kernel, exterior=exterior,
        solver=solver, quantities=_entries(lines, raw, "quantities", QUANTITY_KEYS),
        checks=_entries(lines, raw, "checks", CHECK_KEYS), out_dir=str(out.get("dir", "out")),
        seed=seed, raw=raw)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
