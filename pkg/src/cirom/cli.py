"""Command-line benchmark harness.

Subcommands: ``offline`` (build and store a reduced model), ``online``
(evaluate a stored reduced model at one parameter/time), ``compare``
(error/time sweeps of the transform route against classical reduced
stepping), ``sigma-lb`` (lower-bound tables at chosen transform points) and
``svd-study`` (snapshot singular-value decay).  Experiments are described by
flat ``key = value`` config files; every run writes CSV tables with a
trailing ``#``-comment block recording the config hash and code version.
"""

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, artifacts, bench, rom, sigma
from .affine import ParameterBox
from .contour import ParabolicContour, build_grid, design_grid
from .errors import CiromError, ConfigError, WindowViolationError
from .fom import TimeWindow, full_solution
from .models import advection, black_scholes, heston
from .util import Stopwatch, median_time

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_WINDOW = 3


@dataclass
class ExperimentConfig:
    model: str = "black-scholes"
    # discretization
    n_h: int = 200
    n_s: int = 16
    n_v: int = 8
    s_max: float = 200.0
    strike: float = 100.0
    v_max: float = 5.0
    rate_foreign: float = 0.0
    # parameter domain and training set
    box_lower: tuple = (0.05, 0.001)
    box_upper: tuple = (0.25, 0.02)
    grid: str = "lattice"
    grid_dims: tuple = (10, 10)
    grid_count: int = 100
    # time window
    t0: float = 1.0
    lam: float = 10.0
    window_samples: int = 10
    # tolerances
    tol: float = 1e-6
    tol_pod: float = 1e-8
    quad_tol: float = 1e-4
    # algorithm selection
    algorithm: str = "pod-greedy"
    train_count: int = 20
    sigma_lb: str = "exact"
    mu_start: tuple = ()
    max_iter: int = 100
    # stepping baseline
    stepper: str = "crank-nicolson"
    dt: float = 1e-4
    dt_train: float = 1e-2
    # contour overrides (nan/0 means automatic)
    a1: float = -1.0
    a2: float = float("nan")
    c: float = float("nan")
    n_nodes: int = 0
    n_cap: int = 1024
    # profile validation
    validate_profile: bool = False
    profile_tol: float = 1e-3
    # studies
    svd_source: str = "trajectories"
    svd_c: float = 0.5
    svd_n: int = 64
    nr_values: tuple = ()
    timing_reps: int = 5
    # run context (filled from flags)
    seed: int = 0
    threads: int = 1
    paper_scale: bool = False


DESK_DEFAULTS = {
    "black-scholes": dict(
        n_h=200, box_lower=(0.05, 0.001), box_upper=(0.25, 0.02),
        grid_dims=(10, 10), t0=1.0, lam=10.0, quad_tol=1e-4, dt=1e-4,
        stepper="crank-nicolson", validate_profile=True,
    ),
    "heston": dict(
        n_s=16, n_v=8,
        box_lower=(0.3, 0.02, 1.2, 0.08, 0.21),
        box_upper=(0.3, 0.02, 3.0, 0.15, 0.21),
        grid_dims=(1, 1, 5, 5, 1), t0=0.5, lam=2.0, quad_tol=1e-5, dt=1e-4,
        stepper="crank-nicolson", validate_profile=True,
    ),
    "advection": dict(
        n_h=200, box_lower=(0.1,), box_upper=(1.0,), grid="random",
        grid_count=30, t0=0.5, lam=1.0, dt=5e-3, dt_train=5e-3,
        stepper="forward-euler", algorithm="plain-pod", train_count=20,
        svd_c=0.5, svd_n=64, validate_profile=False,
    ),
}

PAPER_DEFAULTS = {
    "black-scholes": dict(
        n_h=1000, grid_dims=(20, 20), quad_tol=1e-6, dt=1e-4, dt_train=1e-3,
    ),
    "heston": dict(
        n_s=100, n_v=100, grid_dims=(1, 1, 15, 15, 1), dt=1e-4, dt_train=1e-2,
    ),
    "advection": dict(
        n_h=1000, grid_count=100, dt=1e-3, dt_train=1e-3, timing_reps=100,
    ),
}

_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def parse_config_text(text):
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        raw[key.strip().lower().replace("-", "_")] = value.strip()
    return raw


def _coerce(name, value, like):
    try:
        if isinstance(like, bool):
            return _BOOL[value.lower()]
        if isinstance(like, int):
            return int(value)
        if isinstance(like, float):
            return float(value)
        if isinstance(like, tuple):
            parts = [p for p in value.replace(",", " ").split() if p]
            if all(isinstance(x, int) for x in like) and like:
                return tuple(int(p) for p in parts)
            return tuple(float(p) for p in parts)
        return value
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value for {name!r}: {value!r}") from exc


def load_config(path=None, paper_scale=False, seed=0, threads=1, overrides=None):
    """Resolve defaults (per model and scale), then apply the config file."""
    raw = dict(overrides or {})
    if path is not None:
        raw = {**parse_config_text(Path(path).read_text()), **raw}
    model = raw.get("model", "black-scholes")
    if model not in DESK_DEFAULTS:
        raise ConfigError(f"unknown model {model!r}")
    cfg = ExperimentConfig(model=model)
    for key, val in DESK_DEFAULTS[model].items():
        setattr(cfg, key, val)
    if paper_scale:
        for key, val in PAPER_DEFAULTS[model].items():
            setattr(cfg, key, val)
    known = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, _coerce(key, value, known[key])
                if isinstance(value, str) else value)
    cfg.seed = int(seed)
    cfg.threads = int(threads)
    cfg.paper_scale = bool(paper_scale)
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    lower = np.asarray(cfg.box_lower, dtype=float)
    upper = np.asarray(cfg.box_upper, dtype=float)
    if lower.size != upper.size or lower.size == 0:
        raise ConfigError("box_lower and box_upper must have matching lengths")
    if np.any(lower > upper):
        raise ConfigError("box_lower exceeds box_upper")
    if cfg.t0 <= 0 or cfg.lam < 1.0:
        raise ConfigError("need t0 > 0 and lam >= 1")
    for name in ("tol", "tol_pod", "quad_tol", "dt", "dt_train", "profile_tol"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    if cfg.algorithm not in ("pod-greedy", "local-greedy", "plain-pod"):
        raise ConfigError(f"unknown algorithm {cfg.algorithm!r}")
    if cfg.sigma_lb not in ("exact", "optimize"):
        raise ConfigError(f"unknown sigma_lb mode {cfg.sigma_lb!r}")
    if cfg.stepper not in ("crank-nicolson", "backward-euler", "forward-euler"):
        raise ConfigError(f"unknown stepper {cfg.stepper!r}")
    if cfg.grid not in ("lattice", "random"):
        raise ConfigError(f"unknown grid kind {cfg.grid!r}")
    expected_p = {"black-scholes": 2, "heston": 5, "advection": 1}[cfg.model]
    if lower.size != expected_p:
        raise ConfigError(
            f"{cfg.model} expects {expected_p} parameters, box has {lower.size}"
        )


def config_hash(cfg):
    payload = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    blob = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_model(cfg):
    if cfg.model == "black-scholes":
        return black_scholes(n_h=cfg.n_h, s_max=cfg.s_max, strike=cfg.strike)
    if cfg.model == "heston":
        return heston(n_s=cfg.n_s, n_v=cfg.n_v, strike=cfg.strike,
                      s_max=8 * cfg.strike, v_max=cfg.v_max,
                      rate_foreign=cfg.rate_foreign,
                      feller_box=build_box(cfg))
    return advection(n_h=cfg.n_h)


def build_box(cfg):
    return ParameterBox(np.asarray(cfg.box_lower), np.asarray(cfg.box_upper))


def build_training(cfg, box):
    if cfg.grid == "lattice":
        if len(cfg.grid_dims) != box.n_params:
            raise ConfigError("grid_dims length must match the parameter count")
        return box.lattice(cfg.grid_dims)
    return box.random(cfg.grid_count, cfg.seed)


def build_quadrature(cfg, model, box):
    a2 = None if np.isnan(cfg.a2) else cfg.a2
    c = None if np.isnan(cfg.c) else cfg.c
    n = cfg.n_nodes or None
    if cfg.model == "advection":
        # transport carries delayed content that grows along the left tail,
        # so the doubling certificate cannot converge; snapshot work uses a
        # short fixed truncation near the vertex instead
        return build_grid(ParabolicContour(cfg.a1, a2 if a2 is not None else 0.5),
                          c if c is not None else cfg.svd_c, n or cfg.svd_n)
    return design_grid(model, box, cfg.t0, cfg.quad_tol, a1=cfg.a1, a2=a2,
                       c=c, n=n, n_cap=cfg.n_cap)


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows, cfg, command, extra_comments=()):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    lines.append(f"# command={command}")
    lines.append(f"# config_hash={config_hash(cfg)}")
    lines.append(f"# version={__version__}")
    for comment in extra_comments:
        lines.append(f"# {comment}")
    Path(path).write_text("\n".join(lines) + "\n")


def _mu_header(p):
    return [f"mu_{i}" for i in range(p)]


def cmd_offline(cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(cfg)
    box = build_box(cfg)
    training = build_training(cfg, box)
    window = TimeWindow(cfg.t0, cfg.lam)
    grid = build_quadrature(cfg, model, box)
    comments = [f"grid a1={grid.contour.a1} a2={grid.contour.a2} "
                f"c={grid.c} n={grid.n}"]

    lbs = None
    if cfg.validate_profile:
        report = sigma.validate_profile(
            model, grid, box, window, cfg.profile_tol,
            method="grid" if cfg.sigma_lb == "exact" else "optimize",
            points=training.points, threads=cfg.threads)
        grid = report.grid
        lbs = report.lbs
        comments.append(f"profile accepted in {report.rounds} round(s), "
                        f"err_bound={report.err_bound:.6e}")
    elif cfg.algorithm in ("pod-greedy", "local-greedy"):
        if cfg.sigma_lb == "exact":
            lbs = sigma.lower_bounds_grid(model.operator, grid, training.points,
                                          threads=cfg.threads)
        else:
            lbs = sigma.lower_bounds_optimize(model.operator, grid, box,
                                              threads=cfg.threads)

    ctx = rom.EstimatorContext(grid, window, lbs) if lbs is not None else None
    mu_start = np.asarray(cfg.mu_start) if cfg.mu_start else None
    basis = red = local = None
    log_rows = []
    with Stopwatch() as sw:
        if cfg.algorithm == "pod-greedy":
            basis, red, log = rom.greedy_pod(
                model, grid, ctx, training.points, cfg.tol, cfg.tol_pod,
                mu_start=mu_start, max_iter=cfg.max_iter, threads=cfg.threads)
            log_rows = log.rows
            comments.append(f"greedy stop reason: {log.reason}")
        elif cfg.algorithm == "local-greedy":
            local = rom.greedy_local_all(
                model, grid, ctx, training.points, cfg.tol, mu_start=mu_start,
                max_iter=cfg.max_iter, threads=cfg.threads)
            log_rows = [r for lg in local.logs for r in lg.rows]
            comments.append(f"local sizes: min={local.sizes.min()} "
                            f"max={local.sizes.max()} "
                            f"snapshots={local.snapshots_total}")
        else:
            train = np.linspace(box.lower, box.upper, cfg.train_count)
            pool, origins = [], []
            from .fom import solve_grid as _solve_grid
            for mu in train:
                for snap in _solve_grid(model, grid, mu, threads=cfg.threads):
                    pool.append(snap.uhat)
                    origins.append((snap.z, tuple(mu)))
            basis = rom.pod(np.column_stack(pool), cfg.tol_pod,
                            provenance=origins)
            red = rom.galerkin_project(model, basis)
            log_rows = [rom.GreedyRow(1, train[0], float("nan"),
                                      basis.n_reduced, len(pool), 0.0)]

    if lbs is None:
        lbs = sigma.SigmaLowerBounds(
            per_node=np.ones(grid.n_nodes),
            argmins=np.zeros((grid.n_nodes, box.n_params)), method="none")
    artifact_path = out / "basis.cirom"
    artifacts.save_artifact(
        artifact_path, grid, window, lbs,
        config={f.name: str(getattr(cfg, f.name)) for f in fields(cfg)},
        basis=basis, reduced=red, local=local)
    comments.append(f"offline wall time {sw.elapsed:.3f} s")

    p = model.n_params
    header = ["iteration"] + _mu_header(p) + \
        ["delta_max", "n_reduced", "snapshots_total", "wall_time_s"]
    rows = [[r.iteration, *r.mu, r.delta_max, r.n_reduced, r.snapshots_total,
             r.wall_time] for r in log_rows]
    write_csv(out / "offline_log.csv", header, rows, cfg, "offline", comments)
    return EXIT_OK


def cmd_online(cfg, out_dir, artifact_path, mu, t):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(cfg)
    loaded = artifacts.load_artifact(artifact_path, model)
    window = loaded["window"]
    grid = loaded["grid"]
    if not window.contains(t):
        print(f"error: t={t} outside validated window "
              f"[{window.t0}, {window.t_end}]", file=sys.stderr)
        return EXIT_WINDOW
    mu = np.asarray(mu, dtype=float)
    reps = max(1, cfg.timing_reps)
    if loaded["kind"] == "local":
        local = loaded["local"]
        with Stopwatch() as sw_total:
            solution = rom.online_solution_local(local, grid, mu, [t])[:, 0]
        reduced_time, lift_time = sw_total.elapsed, 0.0
        n_red = int(max(local.sizes))
    else:
        from .fom import contour_sum

        red, basis = loaded["reduced"], loaded["basis"]

        def reduced_phase():
            betas = rom.solve_nodes(red, grid, mu)
            return contour_sum(grid, betas, t)

        reduced_time, combo = median_time(reduced_phase, reps)
        lift_time, lifted = median_time(lambda: rom.lift(basis, combo), reps)
        solution = lifted.real
        n_red = basis.n_reduced
    np.savetxt(out / "solution.txt", solution, fmt="%.17g")
    header = _mu_header(mu.size) + ["t", "n_reduced", "reduced_phase_s",
                                    "lift_s", "total_s"]
    rows = [[*mu, t, n_red, reduced_time, lift_time, reduced_time + lift_time]]
    write_csv(out / "online_timing.csv", header, rows, cfg, "online")
    return EXIT_OK


def _nr_schedule(cfg, available):
    if cfg.nr_values:
        return [int(v) for v in cfg.nr_values if int(v) <= available]
    step = max(1, available // 10)
    vals = list(range(step, available + 1, step))
    if vals[-1] != available:
        vals.append(available)
    return vals


def cmd_compare(cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(cfg)
    box = build_box(cfg)
    training = build_training(cfg, box)
    window = TimeWindow(cfg.t0, cfg.lam)
    times = window.sample(cfg.window_samples)
    grid = build_quadrature(cfg, model, box)
    points = training.points
    comments = [f"grid a1={grid.contour.a1} a2={grid.contour.a2} "
                f"c={grid.c} n={grid.n}"]

    # transform-route basis
    with Stopwatch() as sw_off_l:
        if cfg.algorithm in ("pod-greedy", "local-greedy"):
            if cfg.sigma_lb == "exact":
                lbs = sigma.lower_bounds_grid(model.operator, grid, points,
                                              threads=cfg.threads)
            else:
                lbs = sigma.lower_bounds_optimize(model.operator, grid, box,
                                                  threads=cfg.threads)
            ctx = rom.EstimatorContext(grid, window, lbs)
            basis, red, log = rom.greedy_pod(
                model, grid, ctx, points, cfg.tol, cfg.tol_pod,
                max_iter=cfg.max_iter, threads=cfg.threads)
            snaps_laplace = log.snapshots_total
        else:
            train = np.linspace(box.lower, box.upper, cfg.train_count)
            from .fom import solve_grid as _solve_grid
            pool = []
            for mu in train:
                pool.extend(s.uhat for s in _solve_grid(model, grid, mu,
                                                        threads=cfg.threads))
            snaps_laplace = len(pool)
            basis = rom.pod(np.column_stack(pool), cfg.tol_pod)
            red = rom.galerkin_project(model, basis)

    # classical basis from stepping trajectories
    with Stopwatch() as sw_off_c:
        if cfg.model == "black-scholes":
            v, snaps_classical, _ = rom.classical_greedy_basis(
                model, points[:: max(1, len(points) // 10)], cfg.stepper,
                cfg.dt_train, window.t_end, times, cfg.tol, cfg.tol_pod)
        else:
            train = np.linspace(box.lower, box.upper, cfg.train_count)
            v, traj_snaps = rom.classical_pod_basis(
                model, train, cfg.stepper, cfg.dt_train, window.t_end,
                cfg.tol_pod)
            snaps_classical = traj_snaps.shape[1]
        cred = rom.classical_project(model, v)

    nr_values = _nr_schedule(cfg, min(basis.n_reduced, v.shape[1]))
    mu_timing = box.center()
    if cfg.model == "advection":
        # transport: no stable time-domain reconstruction through the contour;
        # compare how each route's space captures its own snapshot family
        test = points
        from .fom import solve_grid as _solve_grid
        lap_snaps = []
        for mu in test:
            lap_snaps.extend(s.uhat for s in _solve_grid(model, grid, mu,
                                                         threads=cfg.threads))
        lap_snaps = np.column_stack(lap_snaps)
        err_l = bench.projection_errors(lap_snaps, basis.columns, nr_values)
        refs = []
        for mu in test:
            traj = step_reference_cached(model, mu, cfg.stepper, cfg.dt,
                                         window.t_end)
            refs.append(traj)
        time_snaps = np.hstack(refs)
        err_c = bench.projection_errors(time_snaps, v, nr_values)
        comments.append("advection rows report snapshot projection errors")
    else:
        fulls = bench.full_sweep(model, grid, window, points, times,
                                 threads=cfg.threads)
        err_l = bench.reduction_errors(model, grid, window, basis, red,
                                       points, times, nr_values, fulls=fulls)
        err_c = bench.classical_errors(model, cred, points, cfg.stepper,
                                       cfg.dt, window.t_end, times, nr_values)

    rows = []
    for (nr, el), (_, ec) in zip(err_l, err_c):
        tl, _ = bench.time_laplace_online(red.truncate(nr), grid, mu_timing,
                                          times, repeats=cfg.timing_reps)
        tc, _ = bench.time_classical_online(cred.truncate(nr), mu_timing,
                                            cfg.stepper, cfg.dt, window.t_end,
                                            times, repeats=cfg.timing_reps)
        rows.append([nr, el, ec, tl, tc, tc / tl])
    comments.append(f"offline_laplace_s={sw_off_l.elapsed:.3f} "
                    f"offline_classical_s={sw_off_c.elapsed:.3f}")
    comments.append(f"snapshots_laplace={snaps_laplace} "
                    f"snapshots_classical={snaps_classical}")
    header = ["n_reduced", "e_r_laplace", "e_r_classical",
              "online_laplace_s", "online_classical_s", "speedup_ratio"]
    write_csv(out / "compare.csv", header, rows, cfg, "compare", comments)
    return EXIT_OK


def step_reference_cached(model, mu, stepper, dt, t_end):
    from .models import step_reference
    return step_reference(model, mu, stepper, dt, t_end).states


def cmd_sigma_lb(cfg, out_dir, z_values):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(cfg)
    box = build_box(cfg)
    training = build_training(cfg, box)
    rows = []
    for z in z_values:
        with Stopwatch() as sw:
            result = sigma.sigma_lb_optimize(model.operator, z, box,
                                             threads=cfg.threads)
        grid_min = float(np.min(sigma.sigma_min_on_grid(
            model.operator, z, training.points, threads=cfg.threads)))
        rows.append([z.real, z.imag, result.sigma, *result.argmin_mu,
                     result.eigenproblem_count, grid_min, sw.elapsed])
    header = ["z_re", "z_im", "sigma", *_mu_header(box.n_params),
              "eigenproblems", "grid_min", "time_s"]
    write_csv(out / "sigma_lb.csv", header, rows, cfg, "sigma-lb")
    return EXIT_OK


def cmd_svd_study(cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.svd_source == "heaviside":
        mus = np.linspace(0.5, 5.0, 50)
        ts = np.linspace(0.02, 1.0, 50)
        x = np.linspace(0.0, 1.0, 1000)
        grid = build_grid(ParabolicContour(cfg.a1, 0.5), cfg.svd_c, 51)
        sv_time, sv_lap = bench.svd_study_heaviside(mus, ts, x, grid.z)
        comment = "heaviside analytic study"
    else:
        model = build_model(cfg)
        box = build_box(cfg)
        vels = np.linspace(box.lower[0], box.upper[0],
                           cfg.train_count).reshape(-1, 1)
        a2 = 0.5 if np.isnan(cfg.a2) else cfg.a2
        grid = build_grid(ParabolicContour(cfg.a1, a2), cfg.svd_c, cfg.svd_n)
        sv_time, sv_lap = bench.svd_study_model(
            model, vels, cfg.stepper, cfg.dt, cfg.t0 * cfg.lam, grid,
            threads=cfg.threads)
        comment = (f"model={cfg.model} stepper={cfg.stepper} dt={cfg.dt} "
                   f"t_end={cfg.t0 * cfg.lam}")
    n = max(sv_time.size, sv_lap.size)
    rows = []
    for i in range(n):
        rows.append([
            i + 1,
            format(sv_time[i], ".17g") if i < sv_time.size else "",
            format(sv_lap[i], ".17g") if i < sv_lap.size else "",
        ])
    write_csv(out / "svd_study.csv", ["index", "sigma_time", "sigma_laplace"],
              rows, cfg, "svd-study", [comment])
    return EXIT_OK


def _parse_mu(text):
    return [float(v) for v in text.replace(",", " ").split()]


def _parse_z(text):
    return complex(text.replace(" ", "").replace("i", "j"))


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cirom",
        description="Contour-integral reduced-order modeling benchmark harness",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None,
                       help="flat key = value experiment file")
        p.add_argument("--out", type=str, default="out",
                       help="output directory")
        p.add_argument("--paper-scale", action="store_true",
                       help="switch desk-scale defaults to paper-scale ones")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--set", action="append", default=[], metavar="K=V",
                       help="override a single config key")

    p_off = sub.add_parser("offline", help="build and store a reduced model")
    common(p_off)
    p_on = sub.add_parser("online", help="evaluate a stored reduced model")
    common(p_on)
    p_on.add_argument("--artifact", required=True)
    p_on.add_argument("--mu", required=True, help="comma-separated parameter")
    p_on.add_argument("--t", type=float, required=True)
    p_cmp = sub.add_parser("compare", help="sweep reduced sizes, errors, times")
    common(p_cmp)
    p_sig = sub.add_parser("sigma-lb", help="lower-bound table at given z")
    common(p_sig)
    p_sig.add_argument("--z", action="append", required=True,
                       help="transform point, e.g. '0.419+0.0803j' (repeatable)")
    p_svd = sub.add_parser("svd-study", help="snapshot singular-value decay")
    common(p_svd)

    args = parser.parse_args(argv)
    try:
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects K=V, got {item!r}")
            key, _, value = item.partition("=")
            overrides[key.strip().lower().replace("-", "_")] = value.strip()
        cfg = load_config(args.config, paper_scale=args.paper_scale,
                          seed=args.seed, threads=args.threads,
                          overrides=overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "offline":
            return cmd_offline(cfg, args.out)
        if args.command == "online":
            return cmd_online(cfg, args.out, args.artifact,
                              _parse_mu(args.mu), args.t)
        if args.command == "compare":
            return cmd_compare(cfg, args.out)
        if args.command == "sigma-lb":
            return cmd_sigma_lb(cfg, args.out, [_parse_z(z) for z in args.z])
        if args.command == "svd-study":
            return cmd_svd_study(cfg, args.out)
    except WindowViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WINDOW
    except CiromError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
