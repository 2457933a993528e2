"""Command line front end: ``varfrac run <command> --config <file>``.

Exit status: 0 on success, 1 when a gate or check fails, 2 on
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import sys
import tempfile

import numpy as np

from .calculus import (PairSystem, crossregion_seminorm, gagliardo_seminorm, tail,
                       tail_space_seminorm)
from .config import load_config
from .errors import ConfigurationError, DivergenceError, EmptyBallError
from .mesh import ball_index
from .powers import modulus_profile, validate_power_config
from .solver import minimality_probe, solve_dirichlet
from .verifier import (InequalityReport, alpha_sigma_gates, caccioppoli_check, linf_bound_check,
                       log_estimate_check, oscillation_profile)

COMMANDS = ("validate", "solve", "energy", "tail", "verify", "oscillation", "all")
PIPELINE = {
    "validate": ("validate",),
    "solve": ("validate", "solve"),
    "energy": ("validate", "solve", "energy"),
    "tail": ("validate", "solve", "tail"),
    "verify": ("validate", "solve", "verify"),
    "oscillation": ("validate", "solve", "oscillation"),
    "all": ("validate", "solve", "energy", "tail", "verify", "oscillation"),
}
CHECKS_HEADER = ("check", "params", "lhs", "rhs_terms", "fitted_c", "gates", "status")
TRACE_HEADER = ("iteration", "energy", "grad_norm", "step")
LADDER_HEADER = ("j", "r_j", "theta", "K_j")
MODULUS_HEADER = ("r", "omega_s", "omega_p", "product_log")
QUANTITY_HEADER = ("quantity", "region", "value", "quadrature_part", "analytic_part",
                   "refinement")
MODULUS_RADII = (0.4, 0.2, 0.1, 0.05, 0.025)


def fmt(x):
    return format(float(x), ".17g")


def _coords(mesh):
    return ("x",) if mesh.n == 1 else ("x", "y")


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


class Run:
    """State shared by the pipeline stages of one invocation."""

    def __init__(self, cfg, out_dir):
        self.cfg = cfg
        self.out = out_dir
        self.files = {}
        self.summary = []            # (name, status, detail)
        self.check_rows = []
        self.ladder_rows = []
        self.quantity_rows = []
        self.result = None
        self.failures = []

    def record(self, name, status, detail=""):
        self.summary.append((name, status, detail))
        if status == "FAIL":
            self.failures.append(name)

    # -- stages ------------------------------------------------------------

    def validate(self):
        cfg = self.cfg
        report = validate_power_config(cfg.order, cfg.exponent, cfg.kernel, seed=cfg.seed)
        for name, ok, detail in report.checks:
            self.record(f"validate:{name}", "PASS" if ok else "FAIL", detail)
        mesh = cfg.mesh
        rows = [[i, *[fmt(c) for c in mesh.centers[i]], int(mesh.is_interior[i]),
                 fmt(mesh.measure)] for i in range(mesh.n_cells)]
        self.files["mesh.csv"] = csv_text(("cell_id", *_coords(mesh), "interior", "measure"),
                                          rows)
        radii = [r for r in MODULUS_RADII if r < 0.5 * float(np.min(mesh.hi - mesh.lo))]
        if radii:
            mod = modulus_profile(cfg.order, cfg.exponent, mesh, radii)
            self.files["modulus.csv"] = csv_text(MODULUS_HEADER, [
                [fmt(r), fmt(a), fmt(b), fmt(c)]
                for r, a, b, c in zip(mod.radii, mod.omega_s, mod.omega_p, mod.product_log)])
            self.record("validate:log-hoelder", "INFO", f"c_LH ~ {mod.c_lh:.6g}")
        return report.passed

    def solve(self):
        cfg = self.cfg
        res = solve_dirichlet(cfg.mesh, cfg.order, cfg.exponent, cfg.kernel, cfg.exterior,
                              cfg.solver)
        self.result = res
        mesh = cfg.mesh
        vals = res.solution.values
        self.files["solution.csv"] = csv_text(("cell_id", *_coords(mesh), "value"), [
            [i, *[fmt(c) for c in mesh.centers[i]], fmt(vals[i])] for i in range(mesh.n_cells)])
        self.files["trace.csv"] = csv_text(TRACE_HEADER, [
            [it, fmt(e), fmt(g), fmt(a)] for it, e, g, a in res.trace])
        detail = (f"iterations={res.iterations} energy={fmt(res.energy)} "
                  f"grad_norm={fmt(res.grad_norm)} tol={fmt(res.tolerance)}")
        self.record("solve", "PASS" if res.converged else "FAIL", detail)
        if not res.tail_space_hypothesis:
            self.record("solve:gap-condition", "INFO",
                        "exponent gap condition for tail-space membership not met")
        return res.converged

    def _quantities(self, kinds, defaults):
        cfg = self.cfg
        u = self.result.solution
        entries = [q for q in cfg.quantities if q["kind"] in kinds] or defaults
        for q in entries:
            kind = q["kind"]
            x0 = q.get("x0", [0.0] * cfg.n)
            if kind == "energy":
                system = PairSystem.from_function(u, cfg.order, cfg.exponent, cfg.kernel,
                                                  cfg.solver.n_jobs)
                near, far = system.energy_split(u.interior_values)
                e = system.energy(u.interior_values)
                row = ["energy", "C_Omega", fmt(e), fmt(near), fmt(far), "0"]
            elif kind == "seminorm":
                refine = int(q.get("refine", 0))
                region = None
                label = "Omega"
                if "r" in q:
                    region = ball_index(cfg.mesh, x0, q["r"], cfg.order, cfg.exponent)
                    label = f"B_{fmt(q['r'])}({','.join(fmt(c) for c in x0)})"
                val = gagliardo_seminorm(u, region, cfg.order, cfg.exponent, refine=refine)
                row = ["seminorm", label, fmt(val.value), fmt(val.value), "0", str(refine)]
            elif kind == "crossregion":
                val = crossregion_seminorm(u, cfg.order, cfg.exponent)
                row = ["crossregion", "C_Omega", fmt(val.value), fmt(val.value), "0", "0"]
            elif kind == "tail":
                t = tail(u, x0, q["r"], q.get("rho", q["r"]), cfg.order, cfg.exponent)
                label = f"T({','.join(fmt(c) for c in x0)};{fmt(t.r)},{fmt(t.rho)})"
                row = ["tail", label, fmt(t.value), fmt(t.quadrature_part),
                       fmt(t.analytic_part), "0"]
            else:
                t = tail_space_seminorm(u, cfg.order, cfg.exponent)
                row = ["tail_space", "Omega", fmt(t.value), fmt(t.quadrature_part),
                       fmt(t.analytic_part), "0"]
            self.quantity_rows.append(row)
            self.record(f"{row[0]}:{row[1]}", "INFO", f"value={row[2]}")
        self.files["quantities.csv"] = csv_text(QUANTITY_HEADER, self.quantity_rows)
        return True

    def energy(self):
        return self._quantities({"energy", "seminorm", "crossregion"}, [{"kind": "energy"}])

    def tail(self):
        return self._quantities({"tail", "tail_space"}, [{"kind": "tail_space"}])

    def _run_check(self, entry):
        cfg = self.cfg
        res = self.result
        kind = entry["kind"]
        x0 = entry.get("x0", [0.0] * cfg.n)
        if kind == "caccioppoli":
            return [caccioppoli_check(res, x0, entry["rho"], entry["r"], entry.get("k", 0.0),
                                      entry.get("sign", 1), entry.get("form", "final"))]
        if kind == "log_estimate":
            shift = float(entry.get("shift", 0.0))
            if shift:
                res = dataclasses.replace(res, solution=res.solution + shift)
            return list(log_estimate_check(res, x0, entry["rho"], entry["r"], entry["d"],
                                           entry.get("a"), entry.get("b", np.e)))
        if kind == "linf_bound":
            return [linf_bound_check(res, x0, entry["r"], entry.get("delta", 1.0))]
        if kind == "alpha_sigma":
            return [alpha_sigma_gates(cfg.order, cfg.exponent, entry["sigma"], entry.get("r"),
                                      res if "r" in entry else None)]
        if kind == "minimality":
            probe = minimality_probe(res, trials=int(entry.get("trials", 30)), seed=cfg.seed)
            rep = InequalityReport("minimality", max(0.0, -probe.min_gap),
                                   fixed_terms={"slack": probe.slack},
                                   params={"trials": probe.trials, "seed": cfg.seed})
            rep.gates.append(("no-descent", probe.passed, f"min gap {probe.min_gap:g}"))
            return [rep]
        if kind == "maximum_principle":
            lo, hi = cfg.exterior.value_range()
            u = res.solution.interior_values
            excess = max(0.0, lo - float(u.min()), float(u.max()) - hi)
            rep = InequalityReport("maximum_principle", excess, fixed_terms={"zero": 0.0},
                                   params={"min_g": lo, "max_g": hi})
            rep.gates.append(("min g <= u <= max g", excess == 0.0, ""))
            return [rep]
        raise ConfigurationError(f"check kind {kind!r} is not handled here")

    def _check(self, entry):
        try:
            return self._run_check(entry)
        except (KeyError, ValueError, EmptyBallError, DivergenceError) as exc:
            if isinstance(exc, KeyError):
                msg = f"missing parameter {exc.args[0]!r}"
            else:
                msg = str(exc)
            raise ConfigurationError(f"line {entry['_line']}: [[checks]] {entry['kind']}: {msg}")

    def _add_reports(self, reports):
        for rep in reports:
            row = rep.to_row()
            self.check_rows.append([row[h] for h in CHECKS_HEADER])
            self.record(f"check:{row['check']}", row["status"],
                        f"lhs={row['lhs']} fitted_c={row['fitted_c']}")

    def verify(self):
        for entry in self.cfg.checks:
            if entry["kind"] != "oscillation":
                self._add_reports(self._check(entry))
        self.files["checks.csv"] = csv_text(CHECKS_HEADER, self.check_rows)
        return True

    def oscillation(self):
        for entry in self.cfg.checks:
            if entry["kind"] != "oscillation":
                continue
            try:
                prof = oscillation_profile(self.result, entry.get("x0", [0.0] * self.cfg.n),
                                           entry["r"], entry["sigma"], entry.get("length"),
                                           int(entry.get("min_cells", 4)))
            except (KeyError, ValueError, EmptyBallError) as exc:
                raise ConfigurationError(
                    f"line {entry['_line']}: [[checks]] oscillation: {exc}") from None
            for j, (rj, th, kj) in enumerate(zip(prof.radii, prof.theta, prof.k_j)):
                self.ladder_rows.append([j, fmt(rj), fmt(th), fmt(kj)])
            self._add_reports([prof.to_report()])
        self.files["ladder.csv"] = csv_text(LADDER_HEADER, self.ladder_rows)
        self.files["checks.csv"] = csv_text(CHECKS_HEADER, self.check_rows)
        return True

    def flush(self):
        os.makedirs(self.out, exist_ok=True)
        lines = [f"{name} {status}" + (f" {detail}" if detail else "")
                 for name, status, detail in self.summary]
        self.files["summary.txt"] = "\n".join(lines) + "\n"
        for name in sorted(self.files):
            write_atomic(os.path.join(self.out, name), self.files[name])


def run(command, config_path, out=None, threads=None, seed=None, stderr=None):
    """Execute a pipeline and return the exit status."""
    stderr = sys.stderr if stderr is None else stderr
    if command not in PIPELINE:
        print(f"unknown command {command!r}", file=stderr)
        return 2
    try:
        cfg = load_config(config_path)
        if seed is not None:
            if not 0 <= int(seed) < 2 ** 64:
                raise ConfigurationError("--seed must be an unsigned 64-bit integer")
            cfg.seed = int(seed)
        if threads is not None:
            if int(threads) < 1:
                raise ConfigurationError("--threads must be at least 1")
            cfg.solver = dataclasses.replace(cfg.solver, n_jobs=int(threads))
        state = Run(cfg, out if out is not None else cfg.out_dir)
        for stage in PIPELINE[command]:
            ok = getattr(state, stage)()
            if not ok and stage in ("validate", "solve"):
                break
        state.flush()
    except ConfigurationError as exc:
        print(f"configuration error: {config_path}: {exc}", file=stderr)
        return 2
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=stderr)
        return 2
    if state.failures:
        for name in state.failures:
            print(f"FAIL {name}", file=stderr)
        return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="varfrac",
                                     description="Variable-order fractional p-Laplacian toolkit")
    sub = parser.add_subparsers(dest="action", required=True)
    runp = sub.add_parser("run", help="run a pipeline on a configuration file")
    runp.add_argument("command", choices=COMMANDS)
    runp.add_argument("--config", required=True, help="TOML configuration file")
    runp.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    runp.add_argument("--threads", type=int, default=None, help="worker threads")
    runp.add_argument("--seed", type=int, default=None, help="seed for randomized probes")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.out, args.threads, args.seed)


if __name__ == "__main__":
    sys.exit(main())
