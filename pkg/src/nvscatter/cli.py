"""Config-driven command line: ``nvscatter --config run.json --out DIR``.

Exit status 0 when the command's checks pass, 1 on a failed check or a
numerical failure, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import denominator_roots, shift_data, soliton_audit
from .eigen import solve_mu, solve_nu
from .fieldio import write_field
from .green import SpectralSample, ZeroProximityError, green_table
from .grid import Grid
from .invert import forward_data, reconstruct_v
from .nv import dyn_crosscheck, nv_evolve
from .potential import PotentialSpec, sample_potential
from .report import report_render
from .scatter import check_delta_symmetry, check_det_dbar, check_mu_dbar, fredholm_delta, scatter_at

log = logging.getLogger("nvscatter")

COMMANDS = ("green", "eigen", "scatter", "determinant", "shift-check", "evolve-check", "dbar-check",
            "reconstruct", "audit", "roots", "nvsim")


class ConfigError(ValueError):
    """Invalid run configuration (exit status 2)."""


def load_defaults() -> dict:
    return json.loads(resources.files("nvscatter").joinpath("defaults.json").read_text())


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        key = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown key '{key}'")
        if isinstance(base[k], dict) and isinstance(v, dict):
            out[k] = _merge(base[k], v, key + ".")
        else:
            out[k] = v
    return out


def config_hash(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _cplx(x, key):
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        return complex(x[0], x[1])
    raise ConfigError(f"'{key}' must be a number or a [re, im] pair")


def validate(cfg: dict) -> dict:
    """Check types and ranges; returns the config unchanged or raises ConfigError naming the key."""
    if cfg["command"] not in COMMANDS:
        raise ConfigError(f"'command': unknown command {cfg['command']!r}; choose from {', '.join(COMMANDS)}")
    g = cfg["grid"]
    try:
        Grid(g["R"], g["N"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"'grid': {exc}") from None
    if cfg["energy"] not in (1, -1):
        raise ConfigError("'energy' must be +1 or -1")
    try:
        _potential_spec(cfg)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"'potential': {exc}") from None
    for k, t in cfg["tolerances"].items():
        if not isinstance(t, (int, float)) or not t > 0:
            raise ConfigError(f"'tolerances.{k}' must be a positive number")
    lam_cfg = cfg["lambdas"]
    if lam_cfg["sweep"] is None:
        if not isinstance(lam_cfg["points"], list):
            raise ConfigError("'lambdas.points' must be a list of [re, im] pairs")
        for i, p in enumerate(lam_cfg["points"]):
            if _cplx(p, f"lambdas.points[{i}]") == 0:
                raise ConfigError(f"'lambdas.points[{i}]' must be nonzero")
    else:
        sw = lam_cfg["sweep"]
        for k in ("rmin", "rmax", "count"):
            if k not in sw:
                raise ConfigError(f"'lambdas.sweep.{k}' is required")
        if not 0 < sw["rmin"] < sw["rmax"] or int(sw["count"]) < 1:
            raise ConfigError("'lambdas.sweep' needs 0 < rmin < rmax and count >= 1")
    p = cfg["params"]
    for k in ("dt", "t_end", "step", "velocity_bound"):
        if not isinstance(p[k], (int, float)) or not p[k] > 0:
            raise ConfigError(f"'params.{k}' must be a positive number")
    _cplx(p["eta"], "params.eta")
    for i, c in enumerate(p["c"]):
        _cplx(c, f"params.c[{i}]")
    return cfg


def _potential_spec(cfg) -> PotentialSpec:
    d = dict(cfg["potential"])
    d["center"] = _cplx(d.get("center", 0), "potential.center")
    return PotentialSpec(**d)


def lambda_set(cfg) -> list[complex]:
    """Explicit points, or a log-radial sweep with golden-angle phases avoiding ``T`` for ``E > 0``."""
    lam_cfg = cfg["lambdas"]
    if lam_cfg["sweep"] is None:
        return [_cplx(p, "lambdas.points") for p in lam_cfg["points"]]
    sw = lam_cfg["sweep"]
    n = int(sw["count"])
    dT = float(sw.get("delta_T", 0.05))
    radii = np.geomspace(sw["rmin"], sw["rmax"], n)
    if cfg["energy"] > 0:
        radii = np.where(np.abs(radii - 1) < dT, np.where(radii < 1, 1 - dT, 1 + dT), radii)
    phases = np.mod(np.arange(n) * np.pi * (3 - np.sqrt(5)), 2 * np.pi)
    return [complex(r * np.exp(1j * t)) for r, t in zip(radii, phases)]


def _pmap(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _lam_cols(lam):
    return {"lam_re": lam.real, "lam_im": lam.imag}


def _setup(cfg):
    grid = Grid(cfg["grid"]["R"], cfg["grid"]["N"])
    spec = _potential_spec(cfg)
    return grid, spec, sample_potential(spec, grid)


# ---- commands: each returns (passed, summary, tables) -------------------------------


def cmd_green(cfg, out, workers):
    grid, _, _ = _setup(cfg)
    tol = cfg["tolerances"]["green_residual"]

    def one(lam):
        t = green_table(SpectralSample(lam, cfg["energy"]), grid, oversample=cfg["params"]["oversample"])
        return {**_lam_cols(lam), "residual_h2": float(t.residual * grid.h**2)}

    rows = _pmap(one, lambda_set(cfg), workers)
    worst = max((r["residual_h2"] for r in rows), default=0.0)
    return worst <= tol, {"max_residual_h2": worst}, {"green": rows}


def cmd_eigen(cfg, out, workers):
    grid, _, v = _setup(cfg)
    tol = cfg["tolerances"]["schrodinger_residual"]

    def one(lam):
        s = SpectralSample(lam, cfg["energy"])
        t = green_table(s, grid)
        rows = []
        for kind, fn in (("mu", solve_mu), ("nu", solve_nu)):
            sol = fn(v, s, t)
            rows.append({**_lam_cols(lam), "kind": kind, "solver_residual": sol.solver_residual,
                         "schrodinger_residual": sol.schrodinger_residual, "exceptional": sol.exceptional})
        return rows

    rows = [r for rs in _pmap(one, lambda_set(cfg), workers) for r in rs]
    worst = max((r["schrodinger_residual"] for r in rows), default=0.0)
    ok = worst <= tol and not any(r["exceptional"] for r in rows)
    return ok, {"max_schrodinger_residual": worst}, {"eigen": rows}


def _quad_row(q):
    return {**_lam_cols(q.sample.lam), **{f"{k}_{p}": getattr(complex(getattr(q, k)), n)
                                          for k in ("a", "b", "alpha", "beta")
                                          for p, n in (("re", "real"), ("im", "imag"))}}


def cmd_scatter(cfg, out, workers):
    grid, _, v = _setup(cfg)
    quads = _pmap(lambda lam: scatter_at(v, SpectralSample(lam, cfg["energy"])), lambda_set(cfg), workers)
    return True, {"count": len(quads), "vhat0": [quads[0].vhat0.real, quads[0].vhat0.imag] if quads else None}, \
        {"quads": [_quad_row(q) for q in quads]}


def cmd_determinant(cfg, out, workers):
    grid, _, v = _setup(cfg)
    tol = cfg["tolerances"]["det_realness"]
    esign = cfg["energy"]

    def one(lam):
        s = SpectralSample(lam, esign)
        d1 = fredholm_delta(v, s)
        d2 = fredholm_delta(v, s.mirror)
        sym = check_delta_symmetry([(d1, d2)])["max_defect"]
        real = abs(d1.delta.imag) / abs(d1.delta) if d1.delta else 0.0
        return {**_lam_cols(lam), "delta_re": d1.delta.real, "delta_im": d1.delta.imag,
                "realness": float(real), "symmetry": float(sym)}

    rows = _pmap(one, lambda_set(cfg), workers)
    worst = max((r["realness"] for r in rows), default=0.0)
    sym = max((r["symmetry"] for r in rows), default=0.0)
    return worst <= tol, {"max_realness": worst, "max_symmetry": sym}, {"determinant": rows}


def cmd_shift(cfg, out, workers):
    grid, spec, v = _setup(cfg)
    eta = _cplx(cfg["params"]["eta"], "params.eta")
    vs = sample_potential(PotentialSpec(spec.family, spec.amplitude, spec.width, spec.center + eta, spec.eps), grid)
    tol = cfg["tolerances"]["shift"]

    def one(lam):
        s = SpectralSample(lam, cfg["energy"])
        t = green_table(s, grid)
        cf, re = shift_data(scatter_at(v, s, t), eta), scatter_at(vs, s, t)
        rows = []
        for k in ("a", "b", "alpha", "beta"):
            x, y = getattr(cf, k), getattr(re, k)
            err = abs(x - y) / max(abs(y), 1e-300) if y else abs(x)
            rows.append({**_lam_cols(lam), "entry": k, "closed_form_re": x.real, "closed_form_im": x.imag,
                         "recomputed_re": y.real, "recomputed_im": y.imag, "rel_error": float(err)})
        return rows

    rows = [r for rs in _pmap(one, lambda_set(cfg), workers) for r in rs]
    worst = max((r["rel_error"] for r in rows), default=0.0)
    return worst <= tol, {"max_rel_error": worst, "eta": [eta.real, eta.imag]}, {"shift": rows}


def cmd_evolve(cfg, out, workers):
    grid, _, v = _setup(cfg)
    rep = dyn_crosscheck(v, lambda_set(cfg), cfg["params"]["dt"], cfg["energy"])
    rows = [{"lam_re": r["lam"][0], "lam_im": r["lam"][1], "law": r["law"],
             "measured_re": r["measured"].real, "measured_im": r["measured"].imag,
             "predicted_re": r["predicted"].real, "predicted_im": r["predicted"].imag,
             "mismatch": r["mismatch"]} for r in rep["rows"]]
    gate = ("da/dt", "dalpha/dt", "d|b|/dt")
    worst = max((rep["worst_by_law"].get(k, 0.0) for k in gate), default=0.0)
    return worst <= cfg["tolerances"]["evolve"], {"worst_by_law": rep["worst_by_law"]}, {"evolve": rows}


def cmd_dbar(cfg, out, workers):
    grid, _, v = _setup(cfg)
    step = cfg["params"]["step"]
    tol = cfg["tolerances"]

    def one(lam):
        # a stencil point next to a frequency node is reported, not fatal
        out = []
        for name, fn, key in (("det", check_det_dbar, "mismatch"), ("mu", check_mu_dbar, "error")):
            try:
                val = float(fn(v, lam, cfg["energy"], step)[key])
            except ZeroProximityError:
                val = float("nan")
            out.append({**_lam_cols(lam), "check": name, "step": step, "mismatch": val})
        return out

    rows = [r for rs in _pmap(one, lambda_set(cfg), workers) for r in rs]
    done = [r for r in rows if np.isfinite(r["mismatch"])]
    det = max((r["mismatch"] for r in done if r["check"] == "det"), default=0.0)
    mu = max((r["mismatch"] for r in done if r["check"] == "mu"), default=0.0)
    ok = bool(done) and det <= tol["det_dbar"] and mu <= tol["mu_dbar"]
    return ok, {"det": det, "mu": mu, "skipped": len(rows) - len(done)}, {"dbar": rows}


def cmd_reconstruct(cfg, out, workers):
    grid, spec, v = _setup(cfg)
    if cfg["energy"] > 0:
        raise ConfigError("'energy': reconstruction is implemented for E = -1 only")
    data = forward_data(v, n_phi=cfg["params"]["n_phi"], radial=spec.center == 0)
    rec = reconstruct_v(data, grid)
    nrm = np.linalg.norm(v.values)
    err = float(np.linalg.norm(rec.v.values - v.values) / nrm) if nrm else float(np.linalg.norm(rec.v.values))
    write_field(out / "reconstructed_v.nvsf", rec.v, {"config_hash": cfg["_hash"], "quantity": "v"})
    tol = cfg["tolerances"]
    summary = {"l2_error": err, "imag_defect": rec.imag_defect, "born_parameter": rec.born_parameter,
               "sweeps": rec.sweeps, "filled_samples": data.filled}
    ok = err <= tol["reconstruct_l2"] and rec.imag_defect <= tol["reconstruct_imag"]
    return ok, summary, {"reconstruct": [{"quantity": k, "value": val} for k, val in sorted(summary.items())]}


def cmd_audit(cfg, out, workers):
    grid, _, v = _setup(cfg)
    c = _cplx(cfg["params"]["c"][0], "params.c[0]")
    rep = soliton_audit(v, c, lambda_set(cfg), cfg["energy"])
    zero = not np.any(v.values)
    # a nonzero potential must never audit as a soliton
    ok = (rep["verdict"] == "consistent") == zero
    summary = {"verdict": rep["verdict"], "dominant_failure": rep["dominant_failure"]}
    return ok, summary, {"audit": rep["steps"]}


def cmd_roots(cfg, out, workers):
    p = cfg["params"]
    cs = [_cplx(c, "params.c") for c in p["c"]]
    n = int(p["random_velocities"])
    if n:
        rng = np.random.default_rng(cfg["_seed"])
        r = p["velocity_bound"] * np.sqrt(rng.random(n))
        cs += list(r * np.exp(2j * np.pi * rng.random(n)))
    rows, worst = [], 6
    for c in cs:
        rs = denominator_roots(c, cfg["energy"])
        worst = min(worst, rs.on_T)
        for z in sorted(rs.roots, key=lambda x: (round(np.angle(x), 12), abs(x))):
            rows.append({"c_re": c.real, "c_im": c.imag, "esign": cfg["energy"], "root_re": z.real,
                         "root_im": z.imag, "modulus": abs(z)})
    return worst >= 2, {"velocities": len(cs), "min_on_T": worst}, {"roots": rows}


def cmd_nvsim(cfg, out, workers):
    grid, _, v = _setup(cfg)
    p = cfg["params"]
    st = nv_evolve(v, p["t_end"], p["dt"], cfg["energy"])
    write_field(out / "v_final.nvsf", st.v, {"config_hash": cfg["_hash"], "t": st.t})
    drift = st.mass_drift()
    rows = [{"step": i, "mass": m} for i, m in enumerate(st.mass)]
    return drift <= cfg["tolerances"]["mass_drift"], {"t": st.t, "mass_drift": drift}, {"mass": rows}


HANDLERS = {"green": cmd_green, "eigen": cmd_eigen, "scatter": cmd_scatter, "determinant": cmd_determinant,
            "shift-check": cmd_shift, "evolve-check": cmd_evolve, "dbar-check": cmd_dbar,
            "reconstruct": cmd_reconstruct, "audit": cmd_audit, "roots": cmd_roots, "nvsim": cmd_nvsim}


def _json_default(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


def run(cfg: dict, out: Path, workers: int = 1, seed: int = 0) -> tuple[int, dict]:
    """Execute one validated config; writes ``report.json``, ``summary.txt`` and CSV tables."""
    cfg = dict(cfg)
    cfg["_seed"] = seed
    h = config_hash({k: v for k, v in cfg.items() if not k.startswith("_")} | {"seed": seed})
    cfg["_hash"] = h
    out.mkdir(parents=True, exist_ok=True)
    try:
        passed, summary, tables = HANDLERS[cfg["command"]](cfg, out, workers)
    except ConfigError:
        raise
    except Exception as exc:  # numerical failure: report and exit 1
        log.error("%s failed: %s", cfg["command"], exc)
        report = {"command": cfg["command"], "config_hash": h, "passed": False,
                  "summary": {"error": f"{type(exc).__name__}: {exc}"}, "tables": {}}
        (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
        return 1, report
    report = json.loads(json.dumps({"command": cfg["command"], "config_hash": h, "passed": bool(passed),
                                    "summary": summary, "tables": tables}, default=_json_default))
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    text, csvs = report_render(report)
    (out / "summary.txt").write_text(text)
    for name, body in csvs.items():
        (out / f"{name}.csv").write_text(body)
    return (0 if passed else 1), report


def parse_config(text: str) -> dict:
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        keys = re.findall(r'"([^"]+)"\s*:', text[:exc.pos])
        near = f" after key '{keys[-1]}'" if keys else ""
        raise ConfigError(f"malformed JSON{near} (line {exc.lineno}, column {exc.colno}): {exc.msg}") from None
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    return validate(_merge(load_defaults(), user))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="nvscatter", description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, help="JSON run config (merged over the packaged defaults)")
    ap.add_argument("--out", type=Path, default=Path("nvscatter-out"), help="output directory")
    ap.add_argument("--workers", type=int, default=1, help="cap on parallel lam workers")
    ap.add_argument("--seed", type=int, default=0, help="RNG seed (u64)")
    ap.add_argument("--command", choices=COMMANDS, help="override the config's command")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text() if args.config else "{}"
        cfg = parse_config(text)
        if args.command:
            cfg["command"] = args.command
        if not 0 <= args.seed < 2**64:
            raise ConfigError("'--seed' must be an unsigned 64-bit integer")
        if args.workers < 1:
            raise ConfigError("'--workers' must be at least 1")
        status, report = run(cfg, args.out, args.workers, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(report_render(report)[0], end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
