# ymlab/cli.py
from __future__ import annotations
import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import asymptotics as asy
from .algebra import Group
from .cone import builtin_field, cylinder_check, density_profile
from .config import RunConfig, load_config
from .errors import (CheckpointError, ConfigError, DegenerateWindow, InsufficientSmoothness, NewtonDivergence,
                     NonConvergence, NotDecaying, PartialResult, QuadratureUnderResolved, WindowTooShort,
                     YMLabError)
from .flow import FlowConfig, FlowOutcomeReport, Outcome, run_flow
from .functional import ZERO_MODE_TOL, indicial_roots, spectrum
from .gauge import PathConnection, standard_form
from .io import (PATH_MAGIC, atomic_write, emit_report_json, emit_trace_csv, read_checkpoint, read_path,
                 read_trace_csv, report_to_dict, write_checkpoint, write_path)
from .lattice import Lattice, LinkField, constant_flux, identity_links, perturb, random_form
from .rng import SplitMix64

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 5
EXIT_SOLVER = 6
EXIT_CHECKPOINT = 7
EXIT_FIT = 8
EXIT_QUADRATURE = 9
EXIT_CONFIG = 64

FLOW_EXIT = {Outcome.CONVERGED: 0, Outcome.ENERGY_DROP: 2, Outcome.TIMEOUT: 3, Outcome.ERROR: 1}


def exit_code(e: BaseException) -> int:
    if isinstance(e, ConfigError):
        return EXIT_CONFIG
    if isinstance(e, PartialResult):
        return EXIT_PARTIAL
    if isinstance(e, (NonConvergence, NewtonDivergence)):
        return EXIT_SOLVER
    if isinstance(e, CheckpointError):
        return EXIT_CHECKPOINT
    if isinstance(e, (WindowTooShort, DegenerateWindow, NotDecaying)):
        return EXIT_FIT
    if isinstance(e, (QuadratureUnderResolved, InsufficientSmoothness)):
        return EXIT_QUADRATURE
    return EXIT_ERROR


# ---------- Helpers ----------
def _lattice(cfg: RunConfig) -> Lattice:
    return Lattice(cfg["lattice.dim"], cfg.extent, cfg["lattice.spacing"])


def _group(cfg: RunConfig) -> Group:
    return Group.parse(cfg["group"])


def _write_json(path: Path, payload) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, allow_nan=False) + "\n"
    atomic_write(path, text)


def unstable_start(lat: Lattice, group: Group, amplitude: float):
    """(U_init, U_ref): one flux quantum in SU2, nudged along its lowest Jacobi eigenform."""
    if group is not Group.SU2:
        raise ConfigError("flow.start", "the unstable start needs group su2")
    U_ref = constant_flux(lat, group, quanta=1)
    rep = spectrum(U_ref, 1)
    if rep.eigenvalues[0] >= -ZERO_MODE_TOL:
        raise YMLabError(f"flux background has no negative mode (lowest eigenvalue {rep.eigenvalues[0]:.3e})")
    phi = rep.eigenforms[0]
    logger.info("unstable start along eigenvalue %.6g", rep.eigenvalues[0])
    return perturb(U_ref, phi * (amplitude / phi.norm())), U_ref


def initial_state(cfg: RunConfig):
    lat, group = _lattice(cfg), _group(cfg)
    start = cfg["flow.start"]
    if start == "unstable":
        return unstable_start(lat, group, cfg["flow.amplitude"])
    U_ref = identity_links(lat, group)
    if start == "flat":
        return U_ref.copy(), U_ref
    a = random_form(lat, group, 1, SplitMix64(cfg["seed"]))
    return perturb(U_ref, a * (cfg["flow.amplitude"] / a.norm())), U_ref


# ---------- Commands ----------
def cmd_flow(cfg: RunConfig) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    U_init, U_ref = initial_state(cfg)
    fcfg = FlowConfig(dt=cfg["flow.dt"], t_max=cfg["flow.t_max"], scheme=cfg["flow.scheme"],
                      grad_tol=cfg["flow.grad_tol"], energy_drop_eps=cfg["flow.energy_drop_eps"],
                      max_steps=cfg["flow.max_steps"], checkpoint_every=cfg["flow.checkpoint_every"])

    def checkpoint(step: int, U: LinkField):
        write_checkpoint(U, out / f"checkpoint-{step:06d}.ymlf")

    trace = run_flow(U_init, U_ref, fcfg, on_checkpoint=checkpoint, record_path=True)
    emit_trace_csv(trace, out / "trace.csv")
    write_checkpoint(trace.final, out / "final.ymlf")
    if trace.path is not None and len(trace.path) >= 2:
        write_path(trace.path.prefix(min(len(trace.path), cfg["gauge.steps"])), out / "flow-path.ymlp")
    _write_json(out / "outcome.json", emit_report_json(FlowOutcomeReport.from_trace(trace)))
    return FLOW_EXIT[trace.outcome]


def _load_gauge_input(cfg: RunConfig) -> PathConnection:
    src = cfg["gauge.input"]
    if not src:
        raise ConfigError("gauge.input", "a checkpoint or path file is required")
    p = Path(src)
    if not p.exists():
        raise ConfigError("gauge.input", f"{src} does not exist")
    with open(p, "rb") as fh:
        magic = fh.read(4)
    if magic == PATH_MAGIC:
        return read_path(p)
    U = read_checkpoint(p)
    return PathConnection.static(U, cfg["flow.dt"] * np.arange(cfg["gauge.steps"]))


def cmd_gauge(cfg: RunConfig) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    path = _load_gauge_input(cfg)
    U0 = path.links[-1] if cfg["gauge.reference"] == "final" else identity_links(path.lattice, path.group)
    try:
        fixed, _, cert = standard_form(path, U0, newton_tol=cfg["gauge.newton_tol"])
    except PartialResult as e:
        if e.path is not None:
            write_path(e.path, out / "standard-path.ymlp")
        _write_json(out / "partial.json", {
            "kind": "partial_result",
            "failed_index": e.failed_index,
            "frames_done": e.failed_index,
            "cause": f"{type(e.cause).__name__}: {e.cause}",
            "certificate": report_to_dict(e.certificate) if e.certificate is not None else None,
        })
        raise
    write_path(fixed, out / "standard-path.ymlp")
    _write_json(out / "certificate.json", emit_report_json(cert))
    if not cert.holds:
        logger.warning("standard-form certificate does not hold (coulomb %.3e, perp %.3e)",
                       cert.coulomb_residual, cert.perp_residual)
        return EXIT_ERROR
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    lat, group = _lattice(cfg), _group(cfg)
    U0 = constant_flux(lat, group) if cfg["spectrum.reference"] == "flux" else identity_links(lat, group)
    rep = spectrum(U0, cfg["spectrum.count"])
    _write_json(out / "spectrum.json", emit_report_json(rep))
    return EXIT_OK


def _observable(cfg: RunConfig, trace):
    t = np.asarray(trace.times, dtype=float)
    if cfg["asymptotics.observable"] == "dist_ref":
        return t, np.asarray(trace.dist_ref, dtype=float)
    d = asy.tail_length(t, trace.grad_norm)
    return t[:-1], d[:-1]


def _optional(what: str, fn: Callable):
    try:
        return fn()
    except (WindowTooShort, DegenerateWindow, NotDecaying) as e:
        logger.warning("%s skipped: %s: %s", what, type(e).__name__, e)
        return None


def cmd_asymptotics(cfg: RunConfig) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    src = cfg["asymptotics.input"]
    if not src:
        raise ConfigError("asymptotics.input", "a trace CSV is required")
    roots = indicial_roots(cfg["asymptotics.mu"], cfg["asymptotics.gamma"])
    gaps = [d for d in (roots.delta1, roots.delta2) if d is not None]
    if len(gaps) == 2 and not cfg["asymptotics.delta"] < 0.25 * min(gaps):
        raise ConfigError("asymptotics.delta", f"must be below min(delta1, delta2)/4 = {0.25 * min(gaps):.6g}")
    trace = read_trace_csv(src)
    t, d = _observable(cfg, trace)
    n = len(t)
    lo, hi = n // 10, n - n // 10
    rate = asy.rate_fit(t[lo:hi], d[lo:hi])
    _write_json(out / "rate.json", emit_report_json(rate))

    E = np.asarray(trace.energy, dtype=float)
    G = np.asarray(trace.grad_norm, dtype=float)
    E0 = cfg["asymptotics.energy_ref"]
    keep = (E - E0 > 0) & (G > 0)
    fit = _optional("lojasiewicz fit", lambda: asy.lojasiewicz_fit(E[keep], G[keep], E0))
    if fit is not None:
        _write_json(out / "lojasiewicz.json", emit_report_json(fit))
    if len(gaps) == 2:
        def regimes():
            S = asy.window_sup_norms(t, d, cfg["asymptotics.window_L"])
            return asy.classify_regimes(S, roots.delta1, roots.delta2, cfg["asymptotics.delta"],
                                        cfg["asymptotics.window_L"])
        reg = _optional("regime classification", regimes)
        if reg is not None:
            _write_json(out / "regimes.json", emit_report_json(reg))
    theta = fit.theta if fit is not None else 0.5
    audit = asy.simon_integral_bound_audit(trace.times, G, E, E0, theta, cfg["asymptotics.epsilon"])
    _write_json(out / "integral_bound.json", emit_report_json(audit))
    return EXIT_OK


def _sphere_points(rng: SplitMix64, n: int, count: int, away_from: Optional[int] = None) -> np.ndarray:
    pts: List[np.ndarray] = []
    while len(pts) < count:
        v = rng.standard_normal((n,))
        v /= np.linalg.norm(v)
        if away_from is None or v[away_from] > -0.5:
            pts.append(v)
    return np.array(pts)


def cmd_cone(cfg: RunConfig) -> int:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    f = builtin_field(cfg["cone.field"], cfg["cone.n"])
    profile = density_profile(f, cfg["cone.radii"])
    _write_json(out / "density.json", emit_report_json(profile))
    away = 0 if f.name == "yang_monopole" else None
    points = _sphere_points(SplitMix64(cfg["seed"]), f.n, 8, away_from=away)
    check = cylinder_check(f, points, [0.0, 0.5])
    _write_json(out / "cylinder.json", emit_report_json(check))
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "flow": cmd_flow,
    "gauge": cmd_gauge,
    "spectrum": cmd_spectrum,
    "asymptotics": cmd_asymptotics,
    "cone": cmd_cone,
}

HELP = {
    "flow": "Run the Yang-Mills gradient flow; writes trace.csv, final.ymlf, outcome.json",
    "gauge": "Put a stored path into standard form; writes standard-path.ymlp and certificate.json",
    "spectrum": "Lowest Jacobi eigenvalues on the Coulomb slice; writes spectrum.json",
    "asymptotics": "Rate, Lojasiewicz and regime fits of a trace CSV",
    "cone": "Density ratios and cylinder checks of a built-in continuum field",
}


# ---------- Entry point ----------
def run_one(cmd: str, cfg: RunConfig) -> int:
    try:
        rc = COMMANDS[cmd](cfg)
    except (YMLabError, ValueError, OSError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return exit_code(e)
    logger.info("%s finished with exit code %d", cmd, rc)
    return rc


def run_jobs(cmd: str, cfg: RunConfig, jobs: int) -> int:
    """Seeds seed..seed+jobs-1 in output.dir/seed-<s>/; 1 if any run errored, else the largest code."""
    base = cfg.output_dir
    seeds = [cfg["seed"] + k for k in range(jobs)]
    configs = [cfg.with_overrides(**{"seed": s, "output.dir": str(base / f"seed-{s}")}) for s in seeds]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        codes = list(pool.map(lambda c: run_one(cmd, c), configs))
    for s, rc in zip(seeds, codes):
        logger.info("seed %d: exit %d", s, rc)
    return EXIT_ERROR if EXIT_ERROR in codes else max(codes)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='configuration file (section.key = value lines)')
    common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE', help='override one key')
    common.add_argument('--jobs', type=int, default=1, help='run this many consecutive seeds in parallel')
    common.add_argument('-v', '--verbose', action='count', default=0)
    ap = argparse.ArgumentParser(prog='ymlab', description='Yang-Mills numerical laboratory')
    sub = ap.add_subparsers(dest='cmd', required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return ap


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose >= 2 else logging.INFO if args.verbose == 1 else logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, args.set)
        if args.jobs < 1:
            raise ConfigError("--jobs", f"must be at least 1, got {args.jobs}")
    except ConfigError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    atomic_write(cfg.output_dir / "config.txt", cfg.to_text())
    if args.jobs > 1:
        return run_jobs(args.cmd, cfg, args.jobs)
    return run_one(args.cmd, cfg)


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
