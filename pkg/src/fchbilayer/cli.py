"""Command line driver: ``fchbilayer <command> [--config PATH] [--out DIR]``.

Every command writes plain CSV/JSON into the output directory.  Numbers are
written with ``repr`` (shortest round-trip form), files carry no time stamps,
and JSON metadata records the SHA-256 of the canonical configuration, so an
identical configuration reproduces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import cached_property
from pathlib import Path

import numpy as np

from . import normalform as nf
from . import tangential as tg
from . import undulation2d as ud
from .config import RunConfig, from_dict, load_config
from .errors import ConfigError, FCHError, RegimeError
from .pearling import (beta0_forms, compute_alpha0, compute_c1, pearling_report,
                       pencil_eigenvalues)
from .potential import validate_well
from .profile1d import solve_bilayer_eps, solve_homoclinic, solve_u1
from .spectral1d import build_operator

log = logging.getLogger("fchbilayer")


def _num(x) -> str:
    return repr(float(x))


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for row in rows:
            out.writerow([_num(x) for x in row])


class Run:
    """Lazily computed quantities shared between commands."""

    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        out.mkdir(parents=True, exist_ok=True)

    @cached_property
    def spec(self):
        return self.cfg.well.spec()

    @cached_property
    def grid(self):
        return self.cfg.grid.half_line()

    @cached_property
    def u0(self):
        self.grid.check_truncation(self.spec.w2_origin)
        return solve_homoclinic(self.spec, self.grid)

    @cached_property
    def S(self):
        return build_operator(self.u0, self.spec)

    @cached_property
    def u1(self):
        return solve_u1(self.S, self.cfg.physics.gamma, self.cfg.physics.eta_d)

    @cached_property
    def alpha0(self) -> float:
        return compute_alpha0(self.S, self.u1, self.cfg.physics.eta_d)

    @cached_property
    def c1(self) -> float:
        return compute_c1(self.S, self.u1, self.cfg.physics.eta1)

    def meta(self, **extra) -> dict:
        d = {"config_sha256": self.cfg.digest(), "config": self.cfg.physics_dict()}
        d.update(extra)
        return d

    def require_undulation(self) -> None:
        if not self.alpha0 < 0:
            raise RegimeError(f"alpha0 = {self.alpha0!r} >= 0: pearling regime, "
                              "undulated bilayers require alpha0 < 0")

    def setup(self, eps: float, delta: float | None = None) -> ud.UndulationSetup:
        c = self.cfg
        delta = c.eps.delta_for(eps) if delta is None else delta
        st = ud.UndulationSetup(self.spec, self.grid, eps, delta, c.physics.gamma, c.physics.eta1,
                                c.physics.eta2_0, c.xi.build(), kappa=c.grid.kappa,
                                points_per_period=c.grid.points_per_period)
        # share the eps-independent pieces
        st.__dict__.update(u0=self.u0, S=self.S)
        return st


# ---------------------------------------------------------------------------
# commands


def cmd_well(run: Run) -> dict:
    rep = validate_well(run.spec)
    d = run.meta(well=run.spec.to_dict(), report=rep.to_dict())
    if not rep.w3_negative_on_interval:
        log.warning("W''' is not negative on (0, u_max): beta0 < 0 is not guaranteed")
    _write_json(run.out / "well.json", d)
    return rep.to_dict()


def cmd_profile(run: Run) -> dict:
    c = run.cfg
    uh = solve_bilayer_eps(run.spec, run.grid, c.eps.value, c.physics.gamma, c.physics.eta1,
                           c.physics.eta_d, run.u0)
    du0 = run.u0.du if run.u0.du is not None else np.zeros_like(run.u0.values)
    _write_rows(run.out / "profiles.csv", ["r", "u0", "du0_dr", "u1", "w0", "u_h"],
                zip(run.grid.r, run.u0.values, du0, run.u1.values, run.u1.w, uh.values))
    summary = {"u0_center": float(run.u0.values[0]), "u_inf": uh.u_inf,
               "newton_residual": uh.params.get("newton_residual", 0.0)}
    _write_json(run.out / "profiles.json", run.meta(summary=summary))
    return summary


def cmd_spectrum(run: Run) -> dict:
    S = run.S
    run.S.to_csv(run.out / "spectrum.csv")
    ev, od = S.even_spectrum, S.odd_spectrum
    summary = {"lam0": S.lam0, "lam1_numeric": S.odd_numeric[0], "essential_edge": S.essential_edge,
               "even_top": [float(x) for x in ev[:4]], "odd_top": [float(x) for x in od[:4]]}
    _write_json(run.out / "spectrum.json", run.meta(summary=summary))
    return summary


def cmd_pearling(run: Run) -> dict:
    c = run.cfg
    rep = pearling_report(run.S, run.u1, c.physics.gamma, c.physics.eta1, c.physics.eta_d,
                          beta0=beta0_forms(run.S))
    for eps in sorted(set(c.eps.pencil)):
        uh = solve_bilayer_eps(run.spec, run.grid, eps, c.physics.gamma, c.physics.eta1,
                               c.physics.eta_d, run.u0)
        S_h = build_operator(uh, run.spec)
        rep.pencil_eigs[eps] = pencil_eigenvalues(S_h, run.S.lam0, eps, c.physics.eta1,
                                                  c.physics.eta_d)
    d = rep.to_dict()
    d.update(run.meta())
    _write_json(run.out / "pearling.json", d)
    rep.tracks_to_csv(run.out / "pencil_tracks.csv")
    return {"alpha0": rep.alpha0, "regime": rep.regime, "beta0": rep.beta0["direct"], "c1": rep.c1}


def cmd_greens(run: Run) -> dict:
    run.require_undulation()
    c = run.cfg
    p = tg.greens_params(c.eps.value, run.c1, run.alpha0)
    xi = c.xi.build()
    beta0 = beta0_forms(run.S)["direct"]
    t = tg.uniform_grid(p, c.grid.kappa, c.grid.greens_h)
    gk = tg.gk0(p, beta0, xi, t)
    closed = tg.closed_form_gk0(p, beta0, tg.xi_fourier(xi), t)
    tg.write_greens_csv(run.out / "greens.csv", p, t, gk, closed)
    err = float(np.max(np.abs(gk - closed)) / np.max(np.abs(gk)))
    summary = {"greens": p.to_dict(), "fourier": tg.xi_fourier(xi).to_dict(),
               "closed_form_relative_error": err}
    _write_json(run.out / "greens.json", run.meta(summary=summary))
    return summary


def cmd_undulate(run: Run) -> dict:
    run.require_undulation()
    c = run.cfg
    st = run.setup(c.eps.value)
    mb = ud.modulated_bilayer(st)
    phi = ud.phi0_linear_solve(st)
    vh = ud.hyperbolic_correction(st, mb) if st.delta > 0 else None
    field = ud.assemble_un(st, mb, phi, vh)
    field.metadata.update(run.meta())
    field.to_csv(run.out / "field.csv", c.grid.field_stride_t, c.grid.field_stride_r)
    field.write_metadata(run.out / "field.meta.json")
    level = 0.5 * run.u0.values[0]
    widths = ud.level_half_width(field.values, st.grid.r, level)
    w_ref = ud.level_half_width(st.uh.values[None, :], st.grid.r, level)[0]
    closed = ud.phi0_closed_form(st) if st.delta > 0 else np.zeros_like(st.t)
    _write_rows(run.out / "undulation.csv",
                ["t", "xi", "phi0", "phi0_closed_form", "half_width", "width_shift"],
                zip(st.t, st.xi(st.t), phi, closed, widths, widths - w_ref))
    summary = {"phi0_peak": float(np.max(np.abs(phi))),
               "psi0_phi0_peak": float(np.max(np.abs(phi)) * np.max(np.abs(st.psi0))),
               "amplitude_prediction": ud.amplitude_prediction(st) if st.delta > 0 else 0.0,
               "envelope_rate_prediction": float(np.sqrt(-st.alpha0 * st.eps)),
               "slices": mb.solves, "nt": int(st.t.size)}
    return summary


def _scaling_worker(args):
    cfg_dict, eps = args
    run = Run(from_dict(cfg_dict), Path("."))
    return ud.scaling_entry(run.setup(eps))


def cmd_residual(run: Run) -> dict:
    run.require_undulation()
    c = run.cfg
    ladder = sorted(set(c.eps.ladder), reverse=True)
    jobs = [(c.to_dict(), e) for e in ladder]
    if c.workers > 1:
        with ProcessPoolExecutor(max_workers=c.workers) as pool:
            rows = list(pool.map(_scaling_worker, jobs))
    else:
        rows = [ud.scaling_entry(run.setup(e)) for e in ladder]
    ud.write_scaling_csv(run.out / "residual_scaling.csv", rows)
    rows = sorted(rows, key=lambda r: r.eps)
    summary = {"rows": len(rows)}
    if len(rows) >= 2:
        x = np.log([r.eps for r in rows])
        summary["assembled_slope"] = float(np.polyfit(x, np.log([r.assembled_sup for r in rows]), 1)[0])
        summary["bare_slope"] = float(np.polyfit(x, np.log([r.bare_sup for r in rows]), 1)[0])
    _write_json(run.out / "residual_scaling.json", run.meta(summary=summary))
    return summary


def cmd_normalform(run: Run) -> dict:
    c = run.cfg
    n = c.normalform
    alpha0 = n.alpha0 if n.alpha0 is not None else run.alpha0
    p = nf.NormalFormParams(c.eps.value, alpha0, n.omega1, n.alpha2, n.alpha7, n.alpha8)
    summary = {"params": p.to_dict()}
    for branch in ("stable", "unstable"):
        tr = nf.manifold_trajectory(p, branch, n.C, n.theta, n.span, n.tol, n.samples)
        tr.to_csv(run.out / f"normalform_{branch}.csv")
        kd, hd = tr.drift()
        summary[branch] = {"K_drift": kd, "H_drift": hd}
    _write_json(run.out / "normalform.json", run.meta(summary=summary))
    return summary


STAGES = ["well", "profile", "spectrum", "pearling", "greens", "undulate", "residual"]
COMMANDS = {
    "well": cmd_well, "profile": cmd_profile, "spectrum": cmd_spectrum, "pearling": cmd_pearling,
    "greens": cmd_greens, "undulate": cmd_undulate, "residual": cmd_residual,
    "normalform": cmd_normalform,
}


def cmd_pipeline(run: Run) -> dict:
    out = {}
    for stage in STAGES:
        try:
            out[stage] = COMMANDS[stage](run)
        except FCHError as exc:
            exc.stage = stage
            raise
        log.info("stage %s done", stage)
    _write_json(run.out / "manifest.json",
                run.meta(files=sorted(p.name for p in run.out.iterdir() if p.is_file()
                                      and p.name != "manifest.json")))
    return out


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fchbilayer",
                                 description="Bilayers and undulated bilayers of the planar FCH equation")
    ap.add_argument("command", choices=sorted([*COMMANDS, "pipeline"]))
    ap.add_argument("--config", type=Path, default=None, help="TOML run configuration")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    ap.add_argument("--eps-ladder", type=str, default=None,
                    help="comma separated eps values overriding eps.ladder")
    ap.add_argument("--workers", type=int, default=None, help="worker processes for the eps ladder")
    ap.add_argument("--quiet", action="store_true")
    return ap


def _configure(args) -> RunConfig:
    cfg = load_config(args.config) if args.config is not None else from_dict({})
    d = cfg.to_dict()
    if args.eps_ladder is not None:
        try:
            d["eps"]["ladder"] = [float(x) for x in args.eps_ladder.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --eps-ladder: {exc}") from exc
    if args.workers is not None:
        d["workers"] = args.workers
    return from_dict(d)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _configure(args)
        run = Run(cfg, args.out)
        fn = cmd_pipeline if args.command == "pipeline" else COMMANDS[args.command]
        summary = fn(run)
    except FCHError as exc:
        stage = getattr(exc, "stage", args.command)
        print(f"error [{stage}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if not args.quiet:
        print(json.dumps(summary, indent=2, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
