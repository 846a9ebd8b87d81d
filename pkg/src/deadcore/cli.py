"""Command-line interface.

Commands: ``solve``, ``theorem2``, ``sweep``, ``classify``, ``certify`` and
``export-trajectory``.  Every command accepts the regime and tolerance flags;
``--manifest`` loads a previously written ``manifest.json`` whose values are
overridden by explicit flags.  The effective configuration is written back to
``<out>/manifest.json``.

Exit codes: 0 success, 1 regime error or invalid input, 2 bracketing
failure, 3 at least one certificate failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dynsys import classify_q2, q2_thresholds
from .errors import BracketingFailure, DeadCoreError, DomainError, RegimeError
from .integrate import integrate, trajectory_to_csv, trajectory_to_json
from .manifolds import Orbit, seed_l0, seed_l1
from .params import Parameters, beta_from_k, derive, k_from_beta
from .profile import (ode_residual, profile_to_csv, profile_to_json, reconstruct_origin,
                      trace_origin_orbit)
from .shoot import ShootConfig, default_scan_grid, find_k0, scan_u0, sweep, sweep_to_csv
from .verify import (Certificate, CertTolerances, SolvedBundle, Status, any_fail,
                     certificates_to_json, certify_regime, check_close, solve_regime, tally)

EXIT_OK, EXIT_REGIME, EXIT_BRACKET, EXIT_CERT = 0, 1, 2, 3


@dataclass
class RunConfig:
    """Effective configuration of one CLI run."""

    m: float = 2.0
    q: float = 0.5
    N: int = 3
    rtol: float = 1e-10
    atol: float = 1e-12
    event_tol: float = 1e-10
    bracket_tol: float = 1e-8
    richardson_tol: float = 1e-6
    eps: float = 1e-4
    u_cap: float = 1e30
    max_span: float = 1e15
    max_steps: int = 200_000
    out: str = "."
    format: str = "csv"

    def validate(self) -> None:
        for name in ("rtol", "atol", "event_tol", "bracket_tol", "richardson_tol", "eps",
                     "u_cap", "max_span"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0.0):
                raise DomainError(f"{name} must be positive, got {v!r}")
        if self.max_steps < 1:
            raise DomainError("max_steps must be positive")
        if self.format not in ("csv", "json"):
            raise DomainError(f"format must be csv or json, got {self.format!r}")

    def shoot_config(self) -> ShootConfig:
        return ShootConfig(eps=self.eps, rtol=self.rtol, atol=self.atol, event_tol=self.event_tol,
                           u_cap=self.u_cap, max_span=self.max_span, max_steps=self.max_steps)

    def params(self) -> Parameters:
        return derive(self.m, self.q, self.N)


_CASTS = {"m": float, "q": float, "N": int, "max_steps": int, "out": str, "format": str}


def _add_common(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("regime and tolerances")
    g.add_argument("--m", type=float, help="diffusion exponent (> 1)")
    g.add_argument("--q", type=float, help="absorption exponent in (0, 1)")
    g.add_argument("--N", type=int, help="space dimension (>= 1)")
    g.add_argument("--rtol", type=float, help="relative integration tolerance")
    g.add_argument("--atol", type=float, help="absolute integration tolerance")
    g.add_argument("--event-tol", dest="event_tol", type=float, help="event location tolerance")
    g.add_argument("--bracket-tol", dest="bracket_tol", type=float,
                   help="relative width of the threshold brackets")
    g.add_argument("--richardson-tol", dest="richardson_tol", type=float,
                   help="relative tolerance of the seed-halving checks")
    g.add_argument("--eps", type=float, help="seed distance from the critical points")
    g.add_argument("--u-cap", dest="u_cap", type=float, help="escape bound on u")
    g.add_argument("--max-span", dest="max_span", type=float, help="maximal zeta span")
    g.add_argument("--max-steps", dest="max_steps", type=int, help="maximal solver steps per shot")
    g.add_argument("--out", help="output directory (default: current directory)")
    g.add_argument("--format", choices=("csv", "json"), help="profile/trajectory file format")
    g.add_argument("--manifest", help="manifest.json to start from; flags override it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deadcore",
                                 description="Self-similar dead-core profiles by phase-plane shooting.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="thresholds, K*, beta*, dead-core profile and certificates")
    _add_common(sp)

    sp = sub.add_parser("theorem2", help="origin-supported profile for a given beta >= beta0")
    _add_common(sp)
    sp.add_argument("--beta", type=float, required=True, help="self-similar exponent beta")

    sp = sub.add_parser("sweep", help="U0, U1 and the type of Q2 over a K grid")
    _add_common(sp)
    _add_grid(sp)

    sp = sub.add_parser("classify", help="linear type of Q2 over a K grid")
    _add_common(sp)
    _add_grid(sp)

    sp = sub.add_parser("certify", help="run the certificate suite")
    _add_common(sp)

    sp = sub.add_parser("export-trajectory", help="write one traced orbit")
    _add_common(sp)
    sp.add_argument("--orbit", choices=("l1", "l0"), required=True)
    sp.add_argument("--K", type=float, required=True, help="shooting parameter")
    return ap


def _add_grid(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--k-min", dest="k_min", type=float, help="smallest K (default K_u/100)")
    sp.add_argument("--k-max", dest="k_max", type=float, help="largest K (default 100 K_u)")
    sp.add_argument("--n", type=int, default=32, help="number of log-spaced grid points")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the manifest, then explicit flags."""
    values = asdict(RunConfig())
    if getattr(args, "manifest", None):
        with open(args.manifest) as fh:
            doc = json.load(fh)
        values.update({k: v for k, v in doc.get("config", doc).items() if k in values})
    for k in values:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    for k, cast in _CASTS.items():
        values[k] = cast(values[k])
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _write_manifest(cfg: RunConfig, command: str, extra: dict | None = None) -> None:
    doc = {"command": command, "config": asdict(cfg)}
    if extra:
        doc.update(extra)
    with open(Path(cfg.out) / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2)


def _out(cfg: RunConfig) -> Path:
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _grid(p: Parameters, args) -> np.ndarray:
    default = default_scan_grid(p, args.n)
    lo = args.k_min if args.k_min is not None else default[0]
    hi = args.k_max if args.k_max is not None else default[-1]
    if not (0.0 < lo < hi) or args.n < 2:
        raise DomainError("need 0 < k-min < k-max and n >= 2")
    return np.geomspace(lo, hi, args.n)


def _solve(cfg: RunConfig) -> tuple[SolvedBundle, list[Certificate]]:
    p = cfg.params()
    b = solve_regime(p, tol=cfg.bracket_tol, cfg=cfg.shoot_config())
    certs = certify_regime(p, b, CertTolerances(bracket=cfg.bracket_tol,
                                                richardson=cfg.richardson_tol))
    return b, certs


def _bracket_dict(br) -> dict:
    return {"lo": br.lo, "hi": br.hi, "width": br.width, "rel_width": br.rel_width,
            "lo_label": br.lo_label, "hi_label": br.hi_label}


def _solution_doc(b: SolvedBundle) -> dict:
    th = q2_thresholds(b.params)
    return {
        "params": b.params.as_dict(),
        "K0": _bracket_dict(b.k0), "K_inf": _bracket_dict(b.kinf), "K_star": _bracket_dict(b.kstar),
        "K_u": th.K_u, "K_f": th.K_f, "K_s": th.K_s,
        "beta_star": b.regime.beta, "alpha_star": b.regime.alpha, "beta0": b.beta0.beta,
        "U1_star": b.u1.numeric, "U0_star": b.u0.numeric,
        "xi0_over_xi_star": b.dead_core.support_ratio,
        "report": b.dead_core_report.as_dict(),
    }


def cmd_solve(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    b, certs = _solve(cfg)
    if cfg.format == "csv":
        profile_to_csv(b.dead_core, out / "profile_deadcore.csv")
    else:
        profile_to_json(b.dead_core, out / "profile_deadcore.json", b.dead_core_report)
    with open(out / "solution.json", "w") as fh:
        json.dump(_solution_doc(b), fh, indent=2)
    certificates_to_json(certs, out / "certificates.json")
    _write_manifest(cfg, "solve")
    t = tally(certs)
    print(f"regime (m, q, N) = ({cfg.m:g}, {cfg.q:g}, {cfg.N})")
    print(f"K0      in [{b.k0.lo:.12g}, {b.k0.hi:.12g}]")
    print(f"K*      in [{b.kstar.lo:.12g}, {b.kstar.hi:.12g}]")
    print(f"K_inf   in [{b.kinf.lo:.12g}, {b.kinf.hi:.12g}]")
    print(f"beta*   = {b.regime.beta:.12g}   (beta0 = {b.beta0.beta:.12g})")
    print(f"xi0/xi* = {b.dead_core.support_ratio:.12g}")
    print(f"ODE residual (interior) = {b.dead_core_report.ode_residual_max:.3e}")
    print(f"certificates: {t['Pass']} pass, {t['Fail']} fail, {t['Skipped']} skipped")
    for c in certs:
        if c.status is Status.FAIL:
            print(f"  FAIL {c.name}: measured {c.measured!r}, expected {c.expected!r}, "
                  f"tolerance {c.tolerance!r} {c.detail}")
    return EXIT_CERT if any_fail(certs) else EXIT_OK


def cmd_theorem2(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    p = cfg.params()
    scfg = cfg.shoot_config()
    scan = scan_u0(p, default_scan_grid(p), scfg)
    k0 = find_k0(p, cfg.bracket_tol, scfg, scan)
    beta0 = beta_from_k(p, k0.mid).beta
    beta = float(args.beta)
    if not beta > 0.0:
        raise DomainError("beta must be positive")
    if beta < beta0:
        print(f"beta = {beta!r} is below beta0 = {beta0!r}: no origin-supported profile",
              file=sys.stderr)
        return EXIT_REGIME
    kb = k_from_beta(p, beta)
    tr = trace_origin_orbit(p, kb.K, eps=cfg.eps, rtol=cfg.rtol, atol=cfg.atol)
    prof = reconstruct_origin(p, kb, tr, k0_hi=k0.hi)
    rep = ode_residual(p, kb, prof)
    if cfg.format == "csv":
        profile_to_csv(prof, out / "profile_origin.csv")
    else:
        profile_to_json(prof, out / "profile_origin.json", rep)
    cert = check_close("origin.coefficient", rep.origin_coeff, rep.origin_coeff_expected, 0.01,
                       detail=f"beta = {beta!r}")
    certificates_to_json([cert], out / "certificates.json", {"beta0": beta0, "beta": beta})
    _write_manifest(cfg, "theorem2", {"beta": beta})
    print(f"beta0 = {beta0:.12g}; beta = {beta:.12g} (K = {kb.K:.12g})")
    print(f"origin coefficient {rep.origin_coeff:.12g} (expected {rep.origin_coeff_expected:.12g}): "
          f"{cert.status.value}")
    return EXIT_CERT if cert.status is Status.FAIL else EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    p = cfg.params()
    rows = sweep(p, _grid(p, args), cfg.shoot_config())
    sweep_to_csv(rows, out / "sweep.csv")
    _write_manifest(cfg, "sweep", {"k_min": args.k_min, "k_max": args.k_max, "n": args.n})
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_classify(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    p = cfg.params()
    th = q2_thresholds(p)
    with open(out / "classify.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", "Q2_kind", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im"])
        for K in _grid(p, args):
            c = classify_q2(p, K)
            l1, l2 = c.eigenvalues
            w.writerow([_fmt(K), c.kind.value, _fmt(l1.real), _fmt(l1.imag),
                        _fmt(l2.real), _fmt(l2.imag)])
    _write_manifest(cfg, "classify", {"k_min": args.k_min, "k_max": args.k_max, "n": args.n})
    ks = "none" if th.K_s is None else f"{th.K_s:.12g}"
    print(f"K_u = {th.K_u:.12g}, K_f = {th.K_f:.12g}, K_s = {ks}")
    return EXIT_OK


def cmd_certify(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    b, certs = _solve(cfg)
    certificates_to_json(certs, out / "certificates.json",
                         {"beta_star": b.regime.beta, "params": b.params.as_dict()})
    _write_manifest(cfg, "certify")
    for c in certs:
        print(f"{c.status.value:8s} {c.name}")
    t = tally(certs)
    print(f"{t['Pass']} pass, {t['Fail']} fail, {t['Skipped']} skipped")
    return EXIT_CERT if any_fail(certs) else EXIT_OK


def cmd_export_trajectory(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    p = cfg.params()
    scfg = cfg.shoot_config()
    K = float(args.K)
    if args.orbit == Orbit.L1.value:
        tr = integrate(p, K, seed_l1(p, K, cfg.eps, eps_max=scfg.eps_max), scfg.stop(blowdown=False))
    else:
        tr = integrate(p, K, seed_l0(p, K, cfg.eps, eps_max=scfg.eps_max), scfg.stop(blowdown=True))
    stem = f"trajectory_{args.orbit}_{K:.12g}"
    if cfg.format == "csv":
        trajectory_to_csv(tr, out / f"{stem}.csv")
    else:
        trajectory_to_json(tr, out / f"{stem}.json")
    _write_manifest(cfg, "export-trajectory", {"orbit": args.orbit, "K": K})
    print(f"{len(tr.zeta)} samples, termination {tr.termination.value}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "theorem2": cmd_theorem2,
    "sweep": cmd_sweep,
    "classify": cmd_classify,
    "certify": cmd_certify,
    "export-trajectory": cmd_export_trajectory,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except RegimeError as exc:
        print(f"RegimeError({exc.constraint}): {exc}", file=sys.stderr)
        return EXIT_REGIME
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except BracketingFailure as exc:
        print(f"BracketingFailure: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    except DeadCoreError as exc:
        # any other solver failure is reported like a failed bracket
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BRACKET


if __name__ == "__main__":
    sys.exit(main())
