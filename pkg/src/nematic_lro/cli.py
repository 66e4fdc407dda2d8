"""Command-line entry point: ``nematic-lro <command> [options]``.

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .lattice import build_torus, dimer, epsilon, reflections
from .report import DEFAULT_TOLERANCES, Report, rows_to_csv, write_atomic

COMMANDS = ("verify-identities", "inequalities", "correlations", "loop-mc", "irb-table", "j1-scan")


class ConfigError(ValueError):
    pass


def _dims(text: str) -> list[int]:
    """``"3..8"`` or ``"3,5,6"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}") from None


def _count(text: str) -> int:
    """Integer that may be written as ``1e6``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value != int(value) or value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(value)


def _seed_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nematic-lro", description="Finite-size certificates for the spin-1 nematic model.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        c = sub.add_parser(name)
        c.add_argument("--d", type=int, default=1, help="lattice dimension")
        c.add_argument("--L", type=int, default=4, help="side length (even)")
        c.add_argument("--lattice", choices=["torus", "dimer"], default="torus")
        c.add_argument("--beta", type=float, nargs="+", default=[1.0])
        c.add_argument("--J1", type=float, nargs="+", default=[0.0])
        c.add_argument("--J2", type=float, default=1.0)
        c.add_argument("--sweeps", type=_count, default=20000)
        c.add_argument("--seeds", type=_count, default=1, help="number of chains, seeds 0..n-1")
        c.add_argument("--seed-list", type=_seed_list, default=None)
        c.add_argument("--seed", type=int, default=0, help="seed for random fields")
        c.add_argument("--threads", type=int, default=1)
        c.add_argument("--draws", type=_count, default=100, help="random field draws")
        c.add_argument("--time-scale", type=float, default=None, help="c in T = c beta J2")
        c.add_argument("--calibrate", action="store_true", help="fit the time scale on a dimer first")
        c.add_argument("--dims", type=_dims, default=list(range(3, 9)))
        c.add_argument("--P", type=float, default=0.25)
        c.add_argument("--method", choices=["auto", "tensor", "qmc"], default="auto")
        c.add_argument("--out", default=None)
        c.add_argument("--format", choices=["json", "csv"], default="json")
        c.add_argument("--tol-override", action="append", default=[], metavar="KEY=VALUE")
    return p


def make_config(args: argparse.Namespace) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    for item in args.tol_override:
        key, sep, val = item.partition("=")
        if not sep or key not in tol:
            raise ConfigError(f"unknown tolerance override {item!r}; keys: {sorted(tol)}")
        try:
            tol[key] = float(val)
        except ValueError:
            raise ConfigError(f"tolerance {key} needs a number, got {val!r}") from None
    if any(b <= 0 for b in args.beta):
        raise ConfigError("beta must be positive")
    if any(j > 0 for j in args.J1):
        raise ConfigError("J1 must be <= 0")
    if args.J2 <= 0:
        raise ConfigError("J2 must be positive")
    if args.lattice == "torus":
        if args.d < 1 or args.L < 2 or args.L % 2:
            raise ConfigError("torus needs d >= 1 and even L >= 2")
        if 3 ** (args.L**args.d) > 6561 and args.command not in ("irb-table",):
            raise ConfigError(f"3^{args.L ** args.d} states exceed the dense-diagonalisation cap")
    if args.threads < 1:
        raise ConfigError("threads must be >= 1")
    if not 0 < args.P <= 1:
        raise ConfigError("P must lie in (0, 1]")
    if args.command == "irb-table" and min(args.dims) < 3:
        raise ConfigError("I_d needs d >= 3")
    seeds = args.seed_list if args.seed_list else list(range(args.seeds))
    return {
        "command": args.command,
        "lattice": {"kind": args.lattice, "d": args.d, "L": args.L},
        "model": {"J1": args.J1, "J2": args.J2, "beta": args.beta},
        "mc": {"sweeps": args.sweeps, "seeds": seeds, "time_scale": args.time_scale, "calibrate": args.calibrate},
        "fields": {"draws": args.draws, "seed": args.seed},
        "quadrature": {"dims": args.dims, "P": args.P, "method": args.method},
        "output": {"format": args.format},
        "tolerances": tol,
    }


def _lattice(cfg):
    lat = cfg["lattice"]
    return dimer() if lat["kind"] == "dimer" else build_torus(lat["d"], lat["L"])


# -- commands ------------------------------------------------------------------


def cmd_verify_identities(cfg, rep: Report, threads: int):
    from .identities import identity_suite
    from .inequalities import double_commutator_check, hamiltonian_parts
    from .model import ModelParams, build_H, neel_state
    from .thermal import diagonalize

    lat = _lattice(cfg)
    tol = cfg["tolerances"]
    for name, value in identity_suite(lat, seed=cfg["fields"]["seed"]).items():
        rep.below(name, "operator identity", value, tol["identity"])
    h01 = build_H(lat, ModelParams(J2=cfg["model"]["J2"]), "J1J2")
    psi = neel_state(lat)
    e_neel = float((psi.conj() @ h01 @ psi).real)
    target = -4 * cfg["model"]["J2"] * lat.n_edges
    rep.below("neel_energy", "Neel trial state", abs(e_neel - target), tol["identity"])
    e0 = float(np.linalg.eigvalsh(h01)[0])
    rep.add("ground_energy_below_neel", "variational bound", e0, target, e0 <= target + tol["identity"])
    if lat.torus:
        J2 = cfg["model"]["J2"]
        parts = hamiltonian_parts(lat, 0.0, J2)
        for beta in cfg["model"]["beta"]:
            state = diagonalize(parts[0], beta)
            worst = max(
                double_commutator_check(lat, beta, k, 0.0, J2, state=state, parts=parts)["residual"]
                for k in lat.kpoints()
            )
            rep.below(f"double_commutator_beta={beta:g}", "double commutator", worst, tol["lemma"])


def cmd_inequalities(cfg, rep: Report, threads: int):
    from .inequalities import (
        FieldFamily,
        falk_bruch_check,
        gaussian_domination_check,
        hamiltonian_parts,
        infrared_bound_check,
        rp_inequality_check,
    )
    from .thermal import diagonalize

    lat = _lattice(cfg)
    if not lat.torus:
        raise ConfigError("inequalities need a torus")
    tol = cfg["tolerances"]["margin"]
    J2 = cfg["model"]["J2"]
    draws = cfg["fields"]["draws"]
    rng = np.random.default_rng(cfg["fields"]["seed"])
    refl = reflections(lat)
    rows = []
    for J1 in cfg["model"]["J1"]:
        fam = FieldFamily(lat, J1, J2)
        parts = hamiltonian_parts(lat, J1, J2)
        for beta in cfg["model"]["beta"]:
            gd = min(
                gaussian_domination_check(lat, beta, rng.normal(size=lat.n_sites), J1, J2, fam)["margin"]
                for _ in range(draws)
            )
            rp = []
            for i in range(draws):
                R = refl[i % len(refl)]
                half = len(R.side1)
                r = rp_inequality_check(lat, beta, rng.normal(size=half), rng.normal(size=half), R, J1, J2, fam)
                rp.append(r["margin"])
            state = diagonalize(parts[0] + parts[1], beta)
            ks = lat.nonzero_modes()
            ir = min(infrared_bound_check(lat, beta, k, J1, J2, state)["margin"] for k in ks)
            fb = [falk_bruch_check(lat, beta, k, J1, J2, state, parts) for k in ks]
            tag = f"J1={J1:g},beta={beta:g}"
            rep.at_least(f"gaussian_domination[{tag}]", "Gaussian domination", gd, tol)
            rep.at_least(f"reflection_positivity[{tag}]", "reflection positivity", min(rp), tol)
            rep.at_least(f"infrared_bound[{tag}]", "infrared bound", ir, tol)
            rep.at_least(f"falk_bruch[{tag}]", "Falk-Bruch inequality", min(f["margin"] for f in fb), tol)
            rep.at_least(f"pointwise_bound[{tag}]", "pointwise correlation bound", min(f["irb2_margin"] for f in fb), tol)
            rows.append({"J1": J1, "beta": beta, "gd": gd, "rp": min(rp), "irb": ir,
                         "fb": min(f["margin"] for f in fb), "irb2": min(f["irb2_margin"] for f in fb)})
    rep.data["margins"] = rows
    return rows


def cmd_correlations(cfg, rep: Report, threads: int):
    from .thermal import correlations, thermal_state

    lat = _lattice(cfg)
    if not lat.torus:
        raise ConfigError("correlations need a torus")
    tol = cfg["tolerances"]
    rows, tables = [], []
    for J1 in cfg["model"]["J1"]:
        for beta in cfg["model"]["beta"]:
            state = thermal_state(lat, beta, J1, cfg["model"]["J2"])
            c = correlations(lat, state)
            tag = f"J1={J1:g},beta={beta:g}"
            for key, val in c.residuals.items():
                rep.below(f"{key}[{tag}]", "Fourier conventions", val, tol["identity"])
            rep.at_least(f"rho_hat_nonnegative[{tag}]", "spectral positivity", float(c.rho_hat.min()), tol["margin"])
            caps = [
                1 / (2 * beta * cfg["model"]["J2"] * epsilon(k)) - dh
                for k, dh in zip(lat.kpoints(), c.duhamel_hat)
                if epsilon(k) > 0
            ]
            rep.at_least(f"duhamel_below_cap[{tag}]", "infrared bound", min(caps), tol["margin"])
            tables.append({"J1": J1, "beta": beta, **c.as_dict(lat)})
            for i, k in enumerate(lat.kpoints()):
                rows.append({"J1": J1, "beta": beta, "site": lat.coords[i].tolist(), "rho": c.rho[i],
                             "k": k.tolist(), "rho_hat": c.rho_hat[i], "duhamel_hat": c.duhamel_hat[i]})
    rep.data["correlations"] = tables
    return rows


def cmd_loop_mc(cfg, rep: Report, threads: int):
    from .loops import TIME_SCALE, calibrate_time_scale, dictionary_check

    lat = _lattice(cfg)
    tol = cfg["tolerances"]
    mc = cfg["mc"]
    J2 = cfg["model"]["J2"]
    c = mc["time_scale"]
    if mc["calibrate"]:
        cal = calibrate_time_scale(sweeps=mc["sweeps"], seed=mc["seeds"][0], J2=J2)
        rep.data["calibration"] = cal.as_dict()
        c = cal.c
    c = TIME_SCALE if c is None else c
    rep.data["time_scale"] = c
    rows = []
    for beta in cfg["model"]["beta"]:
        r = dictionary_check(lat, beta, c, mc["sweeps"], mc["seeds"], threads, J2)
        tag = f"beta={beta:g}"
        for key in ("z_rho", "z_cross", "z_energy"):
            rep.add(f"{key}[{tag}]", "loop dictionary", r[key], tol["z"], abs(r[key]) < tol["z"])
        rows.append({"beta": beta, **{k: v for k, v in r.items() if k != "estimate"}})
        rep.data.setdefault("estimates", []).append({"beta": beta, **r["estimate"]})
    rep.data["dictionary"] = rows
    return rows


def cmd_irb_table(cfg, rep: Report, threads: int):
    from .infrared import bound_table, compute_id

    q = cfg["quadrature"]
    reports = bound_table(q["P"], q["dims"], method=q["method"])
    rows = [r.as_row() for r in reports]
    for r in reports:
        rep.add(f"resolved[d={r.d}]", "lower bound sign", r.bound_value, r.bound_error, r.status != "inconclusive")
    first = next((r.d for r in reports if r.positive), None)
    clean = first is not None and all(r.status == "negative" for r in reports if r.d < first)
    rep.add("threshold_dimension", "dimension threshold", first, None, clean)
    for d in q["dims"]:
        if d > 6:
            continue
        a, b = compute_id(d, "tensor"), compute_id(d, "qmc")
        diff = abs(a.value - b.value)
        comb = a.error_estimate + b.error_estimate
        rep.add(f"methods_agree[d={d}]", "two quadratures", diff, comb, diff <= comb)
    rep.data["table"] = rows
    rep.data["threshold"] = first
    return rows


def cmd_j1_scan(cfg, rep: Report, threads: int):
    from .inequalities import lower_bound_finite
    from .infrared import j1_margin_scan

    lat = _lattice(cfg)
    if not lat.torus:
        raise ConfigError("j1-scan needs a torus")
    grid = sorted(set(cfg["model"]["J1"]) | {0.0}, reverse=True)
    tol = cfg["tolerances"]
    rows = []
    for beta in cfg["model"]["beta"]:
        scan = j1_margin_scan(lat, beta, grid, cfg["model"]["J2"])
        base = lower_bound_finite(lat, beta, 0.0, cfg["model"]["J2"])["bound"]
        zero = next(r for r in scan if r["J1"] == 0.0)
        tag = f"beta={beta:g}"
        rep.below(f"anchor[{tag}]", "J1 = 0 continuity", abs(zero["bound"] - base), tol["identity"])
        for r in scan:
            rep.add(f"direction[{tag},J1={r['J1']:g}]", "finite-volume bound", r["direct"] - r["bound"], tol["margin"], r["ok"])
            rows.append({"beta": beta, **r, "shift": r["bound"] - base})
    rep.data["scan"] = rows
    return rows


HANDLERS = {
    "verify-identities": cmd_verify_identities,
    "inequalities": cmd_inequalities,
    "correlations": cmd_correlations,
    "loop-mc": cmd_loop_mc,
    "irb-table": cmd_irb_table,
    "j1-scan": cmd_j1_scan,
}


def run(cfg: dict, threads: int = 1, timestamp: str | None = None) -> tuple[Report, list, str]:
    """Execute one command; returns the report, its table rows and the rendered text."""
    rep = Report(config=cfg)
    rows = HANDLERS[cfg["command"]](cfg, rep, threads) or []
    if cfg["output"]["format"] == "csv":
        text = rows_to_csv(rows) if rows else rows_to_csv(rep.checks)
    else:
        text = rep.to_json(timestamp)
    return rep, rows, text


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        rep, _, text = run(cfg, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    for name in rep.failed:
        print(f"FAILED: {name}", file=sys.stderr)
    return 1 if rep.failed else 0


if __name__ == "__main__":
    sys.exit(main())
