"""Config-driven command line front end.

Subcommands: bands, density, eigs, check, bound-scan, solve. Outputs are CSV
or JSON files carrying a header with the config hash and tool version; fixed
17-significant-digit float formatting keeps reruns byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .potential import gamma_from_config, potential_from_config

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_CONFIG = 2


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _header(cfg: dict) -> str:
    return f"# stepwave {__version__} config_sha256={_config_hash(cfg)}"


def _load_config(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def _omega_T(cfg: dict) -> tuple[float, object]:
    has_t = "T" in cfg
    has_w = "omega" in cfg
    if has_t == has_w:
        raise ValueError("config needs exactly one of 'T', 'omega'")
    if has_t:
        from fractions import Fraction
        t_raw = cfg["T"]
        T = Fraction(t_raw) if isinstance(t_raw, str) else t_raw
        return 2 * np.pi / float(T), T
    w = float(cfg["omega"])
    return w, 2 * np.pi / w


def _write(path: Path, lines: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def cmd_bands(cfg: dict, out: Path) -> int:
    from .spectrum import band_scan

    pot = potential_from_config(cfg["potential"])
    omega, _ = _omega_T(cfg)
    scan = cfg.get("scan", {})
    k_max = int(scan.get("k_max", 9))
    lam_max = float(scan.get("lambda_max", ((k_max + 4) * omega) ** 2))
    res = scan.get("resolution")
    lines = [_header(cfg), "lambda_lo,lambda_hi,type,side"]
    for side in ("plus", "minus"):
        bs = band_scan(pot, side, lam_max, resolution=res)
        for lo, hi in bs.bands:
            lines.append(f"{fmt(lo)},{fmt(hi)},band,{side}")
        for lo, hi in bs.gaps:
            lines.append(f"{fmt(lo)},{fmt(hi)},gap,{side}")
    _write(out / "bands.csv", lines)
    return EXIT_OK


def cmd_eigs(cfg: dict, out: Path) -> int:
    from .spectrum import band_scan, gap_eigenvalues

    pot = potential_from_config(cfg["potential"])
    omega, _ = _omega_T(cfg)
    scan = cfg.get("scan", {})
    k_max = int(scan.get("k_max", 9))
    lam_max = float(scan.get("lambda_max", ((k_max + 4) * omega) ** 2))
    bs_p = band_scan(pot, "plus", lam_max)
    bs_m = bs_p if pot.is_periodic else band_scan(pot, "minus", lam_max)
    eigs = gap_eigenvalues(pot, bs_p, bs_m)
    lines = [_header(cfg), "lambda,residual,rho_plus,rho_minus,gap_lo,gap_hi,certified"]
    for ev in eigs:
        lines.append(",".join([fmt(ev.lam), fmt(ev.residual), fmt(ev.rho_plus),
                               fmt(ev.rho_minus), fmt(ev.gap[0]), fmt(ev.gap[1]),
                               str(int(ev.certified))]))
    _write(out / "eigenvalues.csv", lines)
    return EXIT_OK


def cmd_density(cfg: dict, out: Path) -> int:
    from .measure import band_quadrature, density, point_mass
    from .spectrum import band_scan, gap_eigenvalues

    pot = potential_from_config(cfg["potential"])
    omega, _ = _omega_T(cfg)
    scan = cfg.get("scan", {})
    k_max = int(scan.get("k_max", 9))
    lam_max = float(scan.get("lambda_max", ((k_max + 4) * omega) ** 2))
    n_per_band = int(scan.get("nodes_per_band", 256))
    bs_p = band_scan(pot, "plus", lam_max)
    bs_m = bs_p if pot.is_periodic else band_scan(pot, "minus", lam_max)
    eigs = [] if pot.is_periodic else gap_eigenvalues(pot, bs_p, bs_m)
    quad = band_quadrature(pot, bs_p, bs_m, eigenvalues=eigs,
                           n_per_band=n_per_band)

    from .measure import density as density_at
    lines = [_header(cfg), "lambda,M11,ReM12,ImM12,M22,sides"]
    lams = np.unique(np.concatenate([t.lam for t in quad.terms]))
    for lam in lams:
        try:
            s = density_at(pot, float(lam))
        except ValueError:
            continue
        flag = "+".join(sorted(s.contributing_sides)) or "none"
        lines.append(",".join([fmt(lam), fmt(s.M[0, 0].real), fmt(s.M[0, 1].real),
                               fmt(s.M[0, 1].imag), fmt(s.M[1, 1].real), flag]))
    _write(out / "density.csv", lines)

    pm_lines = [_header(cfg), "lambda,norm_sq,v0_1,v0_2"]
    for p in quad.point_masses:
        pm_lines.append(",".join([fmt(p.lam), fmt(p.norm_sq),
                                  fmt(p.v0[0]), fmt(p.v0[1])]))
    _write(out / "point_masses.csv", pm_lines)
    return EXIT_OK


def cmd_check(cfg: dict, out: Path) -> int:
    from .assumptions import check_assumptions

    pot = potential_from_config(cfg["potential"])
    omega, T = _omega_T(cfg)
    k_max = int(cfg.get("scan", {}).get("k_max", 9))
    p = cfg.get("p")
    report = check_assumptions(pot, T=T, k_max=k_max, p=p)
    doc = {"config_sha256": _config_hash(cfg), "version": __version__}
    doc.update(report.to_dict())
    text = json.dumps(doc, indent=2, sort_keys=True)
    _write(out / "assumptions.json", [text])
    print(text)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_bound_scan(cfg: dict, out: Path) -> int:
    from .bounds import bound_scan

    pot = potential_from_config(cfg["potential"])
    b = cfg.get("bound", {})
    I = tuple(float(v) for v in b.get("I", (-2.0, 6.0)))
    J = tuple(float(v) for v in b.get("J", (0.0, 2.0)))
    lam_max = float(b.get("lambda_max", 1e4))
    n = int(b.get("n_samples", 2000))
    scan = bound_scan(pot, I, J, lam_max, n)
    lines = [_header(cfg), "lambda,max_ratio,argmax_angle"]
    for lam, r, th in zip(scan.lambda_grid, scan.ratios, scan.argmax_angle):
        lines.append(f"{fmt(lam)},{fmt(r)},{fmt(th)}")
    _write(out / "bound_scan.csv", lines)
    return EXIT_OK


def cmd_solve(cfg: dict, out: Path, seed: int | None = None) -> int:
    from . import breather as br
    from .assumptions import check_assumptions

    pot = potential_from_config(cfg["potential"])
    gamma = gamma_from_config(cfg["gamma"])
    omega, T = _omega_T(cfg)
    p = float(cfg.get("p", 3.0))
    sv = cfg.get("solve", {})
    K = int(sv.get("K", 7))

    report = check_assumptions(pot, T=T, k_max=max(K, 9))
    if not report.passed:
        print("assumption check failed; refusing to solve", file=sys.stderr)
        _write(out / "assumptions.json",
               [json.dumps(report.to_dict(), indent=2, sort_keys=True)])
        return EXIT_CHECK_FAILED

    basis = br.build_basis(pot, sv.get("R"), sv.get("n_grid"), K, omega)
    opts = br.SolveOptions(
        tol_outer=float(sv.get("tol_outer", 3e-7)),
        tol_inner=float(sv.get("tol_inner", 3e-8)),
        n_starts=int(sv.get("n_starts", 5)),
        seed=int(seed if seed is not None else cfg.get("seed", 20240901)),
        max_outer=int(sv.get("max_outer", 400)))
    m_odd = int(sv.get("antiperiodic_m", 1))
    if m_odd == 1:
        coeff, rep = br.ground_state(basis, gamma, p, opts)
        sub = basis
    else:
        sub, coeff, rep = br.ground_state_antiperiodic(basis, m_odd, gamma, p, opts)

    doc = {"config_sha256": _config_hash(cfg), "version": __version__}
    doc.update(rep.to_dict())
    doc["modes"] = list(sub.modes)
    doc["n_spatial_modes"] = len(sub.lam)
    _write(out / "solve_report.json", [json.dumps(doc, indent=2, sort_keys=True)])

    lines = [_header(cfg), "k,m,lambda_m,Re_c,Im_c"]
    for i, k in enumerate(sub.modes):
        for m in range(coeff.shape[1]):
            c = coeff[i, m]
            if abs(c) > 0:
                lines.append(f"{k},{m},{fmt(sub.lam[m])},{fmt(c.real)},{fmt(c.imag)}")
    _write(out / "solution_coefficients.csv", lines)

    u = br.synthesize(sub, coeff)
    field_lines = [_header(cfg), "x," + ",".join(
        f"t{i}" for i in range(u.shape[1]))]
    for j in range(0, len(sub.x), max(1, len(sub.x) // 2000)):
        field_lines.append(",".join([fmt(sub.x[j])] + [fmt(v) for v in u[j]]))
    _write(out / "field.csv", field_lines)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="stepwave",
                                 description="spectral analysis and breather "
                                             "solver for step coefficients")
    ap.add_argument("command", choices=["bands", "density", "eigs", "check",
                                        "bound-scan", "solve"])
    ap.add_argument("--config", required=True, help="JSON config path")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--threads", type=int, default=0,
                    help="BLAS thread cap (0 = leave as-is)")
    ap.add_argument("--seed", type=int, default=None, help="RNG seed override")
    args = ap.parse_args(argv)

    if args.threads > 0:
        import os
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    try:
        cfg = _load_config(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    out = Path(args.out)
    try:
        if args.command == "bands":
            return cmd_bands(cfg, out)
        if args.command == "density":
            return cmd_density(cfg, out)
        if args.command == "eigs":
            return cmd_eigs(cfg, out)
        if args.command == "check":
            return cmd_check(cfg, out)
        if args.command == "bound-scan":
            return cmd_bound_scan(cfg, out)
        if args.command == "solve":
            return cmd_solve(cfg, out, seed=args.seed)
    except (KeyError, ValueError, TypeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
