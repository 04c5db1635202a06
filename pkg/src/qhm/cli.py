"""Command line front end: verify | solve | morita.

Config files are flat key=value text; rationals are written "a/b" so the
commensurability-critical parameters stay exact.  Reports are JSON with
sorted keys (byte-identical across runs with the same config and seed);
solve additionally emits plot-ready CSV files with header "x,y,re,im".
Every check in a report carries an anchor string quoting the identity it
measures, so a failure cites the violated equation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from .algebra import AlgebraElement, adjoint, derivation, star, trace_D
from .bimodule import act_left, inner_D, inner_E
from .calculus import (Connection, StructureError, commutator_mult, connect,
                       curvature_closed, extract_f1_f2, mult_element)
from .lattice import (CommensurabilityError, Grid, Params, ScalarField,
                      TorusFunction, make_grid)
from .laplace import laplace_form_residuals, laplace_eigenvalues, verify_critical
from .morita import MoritaGridError, verify_bimodule_preservation
from .projection import build_R, verify_R_conditions
from .random_fields import (battery_bandwidth, make_battery,
                            random_module_vector, random_torus_function)


class ConfigError(ValueError):
    pass


_KNOWN_KEYS = {
    "c", "hbar", "mu", "nu", "su", "sv", "refinement", "seed", "out",
    "morita.sample_count", "morita.broken_u", "morita.refinement",
    "debug.tamper_star", "debug.zero_curvature",
    "tol.exact", "tol.conditions", "tol.curvature", "tol.commutator",
    "tol.poisson", "tol.connection", "tol.morita",
}

_DEFAULT_TOLS = {
    "exact": 1e-12, "conditions": 1e-12, "curvature": 1e-8,
    "commutator": 1e-8, "poisson": 1e-12, "connection": 1e-6,
    "morita": 1e-10,
}


@dataclass(frozen=True)
class RunConfig:
    params: Params
    refinement: int = 2
    seed: int = 0
    out: str = "out"
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(_DEFAULT_TOLS))
    morita_sample_count: int = 20
    morita_broken_u: float = 0.0
    morita_refinement: int = 2
    tamper_star: bool = False
    zero_curvature: bool = False


def _parse_kv(text: str) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def _frac(kv: Dict[str, str], key: str, default: Optional[str]) -> Fraction:
    raw = kv.get(key, default)
    if "." in raw:
        raise ConfigError(f"{key}={raw!r}: write exact rationals as a/b")
    try:
        return Fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{key}={raw!r} is not an exact rational") from exc


def _intval(kv, key, default):
    raw = kv.get(key, None)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}={raw!r} is not an integer") from exc


def _boolval(kv, key):
    raw = kv.get(key, "false").lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}={raw!r} is not a boolean")


def load_config(path: Optional[str], overrides: argparse.Namespace) -> RunConfig:
    kv: Dict[str, str] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                kv = _parse_kv(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    c = _intval(kv, "c", 1)
    hbar = _frac(kv, "hbar", "1")
    if "su" in kv or "sv" in kv:
        su = _frac(kv, "su", "1/4")
        sv = _frac(kv, "sv", "1/4")
        try:
            params = Params.from_steps(c, su, sv, hbar)
        except (ValueError, CommensurabilityError) as exc:
            raise ConfigError(str(exc)) from exc
    else:
        mu = _frac(kv, "mu", "1/8")
        nu = _frac(kv, "nu", "1/8")
        try:
            params = Params(c=c, hbar=hbar, mu=mu, nu=nu)
        except (ValueError, CommensurabilityError) as exc:
            raise ConfigError(str(exc)) from exc
    tols = dict(_DEFAULT_TOLS)
    for name in tols:
        raw = kv.get(f"tol.{name}")
        if raw is not None:
            try:
                tols[name] = float(Fraction(raw)) if "/" in raw else float(raw)
            except ValueError as exc:
                raise ConfigError(f"tol.{name}={raw!r} is not a number") from exc
            if tols[name] <= 0:
                raise ConfigError(f"tol.{name} must be positive")
    cfg = RunConfig(
        params=params,
        refinement=_intval(kv, "refinement", 2),
        seed=_intval(kv, "seed", 0),
        out=kv.get("out", "out"),
        tolerances=tols,
        morita_sample_count=_intval(kv, "morita.sample_count", 20),
        morita_broken_u=float(kv.get("morita.broken_u", "0") or 0),
        morita_refinement=_intval(kv, "morita.refinement", 2),
        tamper_star=_boolval(kv, "debug.tamper_star"),
        zero_curvature=_boolval(kv, "debug.zero_curvature"),
    )
    if overrides.refinement is not None:
        cfg = replace(cfg, refinement=overrides.refinement)
    if overrides.seed is not None:
        cfg = replace(cfg, seed=overrides.seed)
    if overrides.out is not None:
        cfg = replace(cfg, out=overrides.out)
    if cfg.refinement < 1:
        raise ConfigError("refinement must be >= 1")
    return cfg


# report plumbing ----------------------------------------------------------

def _check(name: str, anchor: str, violation: float, tol: float) -> Dict[str, object]:
    violation = float(violation)
    return {"name": name, "anchor": anchor, "violation": violation,
            "tolerance": tol, "pass": bool(violation <= tol)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _write_report(path: str, report: Dict[str, object]):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(report), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_torus_csv(path: str, g: TorusFunction):
    grid = g.grid
    lines = ["x,y,re,im"]
    for i in range(grid.su_steps):
        x = i * grid.hx_f
        for j in range(grid.ny):
            z = g.samples[i, j]
            lines.append(f"{x!r},{j * grid.hy_f!r},{z.real!r},{z.imag!r}")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _tamper(elem: AlgebraElement) -> AlgebraElement:
    """Deliberately wrong product result: negate the top p-component."""
    if not elem.comps:
        return elem
    bad = max(elem.p_support)
    comps = {p: ([-c for c in ch] if p == bad else [c.copy() for c in ch])
             for p, ch in elem.comps.items()}
    return AlgebraElement(elem.flavor, elem.grid, comps)


# verify -------------------------------------------------------------------

def run_verify(cfg: RunConfig) -> Dict[str, object]:
    grid = make_grid(cfg.params, cfg.refinement)
    tol = cfg.tolerances
    checks: List[Dict[str, object]] = []

    R = build_R(cfg.params, grid)
    Q = inner_D(R, R)
    qq = star(Q, Q)
    if cfg.tamper_star:
        qq = _tamper(qq)
    checks.append(_check("projection_idempotent", "Q * Q = Q",
                         (qq - Q).norm_inf(), tol["exact"]))
    checks.append(_check("projection_selfadjoint", "adjoint(Q) = Q",
                         (adjoint(Q) - Q).norm_inf(), tol["exact"]))
    ee = inner_E(R, R)
    ident = AlgebraElement.identity(ee.flavor, grid, depth=0)
    checks.append(_check("module_frame", "<R,R>_E = Id",
                         (ee - ident).norm_inf(), tol["exact"]))
    checks.append(_check("projection_trace", "trace_D(Q) = 2 hbar mu",
                         abs(trace_D(Q) - float(cfg.params.su)), 1e-10))

    for name, dev in sorted(verify_R_conditions(R).items()):
        checks.append(_check(f"condition_{name}",
                             f"projection condition ({name})",
                             dev, tol["conditions"]))

    try:
        theta0 = curvature_closed(R)
        checks.append(_check("curvature_xz_vanishes", "Theta0(X,Z) = 0",
                             theta0.xz.norm_inf(), tol["curvature"]))
        checks.append(_check("curvature_skew", "adjoint(Theta0) = -Theta0",
                             theta0.skew_defect(), tol["curvature"]))
        extract_f1_f2(theta0)
        checks.append(_check(
            "curvature_profiles",
            "Theta0(X,Y), Theta0(Y,Z) = (imaginary x-profile) delta_0",
            0.0, tol["curvature"]))
    except StructureError as exc:
        checks.append(_check("curvature_profiles", str(exc), np.inf,
                             tol["curvature"]))

    rng = np.random.default_rng(cfg.seed)
    ym, mshift = battery_bandwidth(grid)
    f = random_module_vector(grid, rng, y_modes=ym, max_shift_units=mshift)
    nabla0 = Connection(R)
    g = random_torus_function(grid, rng)
    scale = max(f.norm_inf() * g.norm_inf(), 1e-30)
    gx = act_left(mult_element(g.d_dx(), 1), f)
    gy = act_left(mult_element(g.d_dy(), 1), f)
    worst_x = (commutator_mult(nabla0, g, "X", f) + gy).norm_inf() / scale
    worst_y = (commutator_mult(nabla0, g, "Y", f) + gx).norm_inf() / scale
    worst_z = commutator_mult(nabla0, g, "Z", f).norm_inf() / scale
    checks.append(_check("commutator_x", "[nabla0_X, G] = -(dG/dy) as operator",
                         worst_x, tol["commutator"]))
    checks.append(_check("commutator_y", "[nabla0_Y, G] = -(dG/dx) as operator",
                         worst_y, tol["commutator"]))
    checks.append(_check("commutator_z", "[nabla0_Z, G] = 0",
                         worst_z, tol["commutator"]))

    probe = TorusFunction.zeros(grid)
    co = np.zeros((grid.su_steps, grid.ny), complex)
    n0, m0 = 0, 1 % grid.ny
    co[n0, m0] = 1.0
    chi = TorusFunction.from_fft(grid, co)
    lam = laplace_eigenvalues(grid)[n0, m0]
    dev = (chi.d_dx().d_dx() + chi.d_dy().d_dy() - lam * chi).norm_inf()
    checks.append(_check("laplace_eigenfunction",
                         "Laplace(chi_{n,m}) = -4 pi^2 (kx^2 + ky^2) chi",
                         dev / max(abs(lam), 1.0), tol["poisson"]))

    phi = inner_D(R, f)
    lhs = connect(nabla0, "Y", _act_right_field(f, phi))
    # Leibniz along Y: nabla(f Phi) = (nabla f) Phi + f delta(Phi)
    from .bimodule import act_right
    rhs = act_right(connect(nabla0, "Y", f), phi) \
        + act_right(f, derivation("Y", phi))
    lscale = max(lhs.norm_inf(), rhs.norm_inf(), 1e-30)
    checks.append(_check("connection_leibniz",
                         "nabla(f Phi) = (nabla f) Phi + f delta(Phi)",
                         (lhs - rhs).norm_inf() / lscale, tol["connection"]))
    g2 = random_module_vector(grid, rng, y_modes=ym, max_shift_units=mshift)
    met = 0.0
    for w in "XYZ":
        met = max(met, (derivation(w, inner_D(f, g2))
                        - inner_D(connect(nabla0, w, f), g2)
                        - inner_D(f, connect(nabla0, w, g2))).norm_inf())
    mscale = max(inner_D(f, g2).norm_inf(), 1e-30)
    checks.append(_check("metric_compatibility",
                         "delta<f,g>_D = <nabla f, g>_D + <f, nabla g>_D",
                         met / mscale, tol["connection"]))

    return {
        "command": "verify",
        "config": _config_summary(cfg),
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }


def _act_right_field(f: ScalarField, phi: AlgebraElement) -> ScalarField:
    from .bimodule import act_right
    return act_right(f, phi)


def _config_summary(cfg: RunConfig) -> Dict[str, object]:
    p = cfg.params
    return {"c": p.c, "hbar": str(p.hbar), "mu": str(p.mu), "nu": str(p.nu),
            "su": str(p.su), "sv": str(p.sv),
            "refinement": cfg.refinement, "seed": cfg.seed}


# solve --------------------------------------------------------------------

def run_solve(cfg: RunConfig, sweep: bool = False) -> Dict[str, object]:
    if cfg.zero_curvature:
        return {
            "command": "solve",
            "config": _config_summary(cfg),
            "stub": "zero_curvature",
            "ym": 0.0,
            "all_pass": True,
        }
    report: Dict[str, object] = {"command": "solve",
                                 "config": _config_summary(cfg)}
    grid = make_grid(cfg.params, cfg.refinement)
    try:
        R = build_R(cfg.params, grid)
        battery = make_battery(grid, 4, cfg.seed, include=[R])
        rep = verify_critical(R, battery=battery)
    except (StructureError, ValueError) as exc:
        raise PipelineError("critical-point construction", str(exc)) from exc
    pert = rep["perturbation"]
    cor = laplace_form_residuals(rep["f1"], rep["f2"], pert, cfg.params.c)
    report.update({
        "a0": rep["a0"],
        "discarded_zero_mode": rep["discarded_mean"],
        "residuals": rep["residuals"],
        "residuals_grassmannian": rep["residuals_grassmannian"],
        "ym": rep["ym"],
        "ym_grassmannian": rep["ym_grassmannian"],
        "laplace_form": cor,
    })
    report["csv_files"] = ["f1.csv", "f2.csv", "g3.csv", "g1.csv"]
    _write_torus_csv(os.path.join(cfg.out, "f1.csv"), rep["f1"])
    _write_torus_csv(os.path.join(cfg.out, "f2.csv"), rep["f2"])
    _write_torus_csv(os.path.join(cfg.out, "g3.csv"), pert.g3)
    _write_torus_csv(os.path.join(cfg.out, "g1.csv"), pert.g1)
    if sweep:
        rows = []
        for mult in (1, 2, 3):
            ref = cfg.refinement * mult
            sgrid = make_grid(cfg.params, ref)
            sR = build_R(cfg.params, sgrid)
            sbat = make_battery(sgrid, 2, cfg.seed, include=[sR])
            srep = verify_critical(sR, battery=sbat)
            rows.append({"refinement": ref, "hx": sgrid.hx_f,
                         "r1": srep["residuals"]["r1"],
                         "r2": srep["residuals"]["r2"],
                         "r3": srep["residuals"]["r3"],
                         "ym": srep["ym"]})
        report["sweep"] = rows
    report["all_pass"] = True
    return report


class PipelineError(RuntimeError):
    def __init__(self, stage: str, detail: str):
        super().__init__(f"stage '{stage}' failed: {detail}")
        self.stage = stage


# morita -------------------------------------------------------------------

def run_morita(cfg: RunConfig) -> Dict[str, object]:
    grid = make_grid(cfg.params, cfg.morita_refinement)
    try:
        rep = verify_bimodule_preservation(
            grid, cfg.morita_sample_count, seed=cfg.seed,
            broken_u=cfg.morita_broken_u, tol=cfg.tolerances["morita"])
    except MoritaGridError as exc:
        raise PipelineError("morita grid", str(exc)) from exc
    rep["command"] = "morita"
    rep["config"] = _config_summary(cfg)
    anchors = {
        "left_action": "S(phi . f) = H(phi) . S(f)",
        "right_action": "S(f . phi) = S(f) . H(phi)",
        "inner_left": "<S f, S g>_L = H(<f,g>_L)",
        "inner_right": "<S f, S g>_R = H(<f,g>_R)",
        "membership_transport": "S(f) lies in the first spectral subspace",
        "source_membership": "g(x-1, y-sv) = e(c(y - sv/2)) g(x,y)",
    }
    for name, chk in rep["checks"].items():
        chk["anchor"] = anchors[name]
    return rep


# entry point --------------------------------------------------------------

def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qhm",
        description="Projective-module calculus on quantum Heisenberg "
                    "manifolds: verification, critical-point solve, "
                    "equivalence-bimodule checks.")
    parser.add_argument("command", choices=["verify", "solve", "morita"])
    parser.add_argument("--config", default=None, help="key=value config file")
    parser.add_argument("--refinement", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--sweep", action="store_true",
                        help="solve: add a refinement sweep table")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "verify":
            report = run_verify(cfg)
            out_name = "verify_report.json"
        elif args.command == "solve":
            report = run_solve(cfg, sweep=args.sweep)
            out_name = "solve_summary.json"
        else:
            report = run_morita(cfg)
            out_name = "morita_report.json"
    except PipelineError as exc:
        print(str(exc), file=sys.stderr)
        return 1

    _write_report(os.path.join(cfg.out, out_name), report)
    ok = bool(report.get("all_pass", False))
    print(f"{args.command}: {'ok' if ok else 'FAIL'} "
          f"(report: {os.path.join(cfg.out, out_name)})")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
