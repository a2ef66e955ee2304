"""Command-line entry point: ``sparseobs <subcommand> --config FILE ...``.

Every result is a table written as CSV, or as JSON lines when the output
path ends in ``.jsonl``. Floats are written with ``repr`` so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import ConfigError, RunConfig, load_config

log = logging.getLogger("sparseobs")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


class TableWriter:
    """Row sink for CSV or JSON lines, chosen by file suffix; ``None`` means stdout."""

    def __init__(self, path: str | Path | None, columns: Sequence[str]):
        self.columns = list(columns)
        self.jsonl = path is not None and str(path).endswith(".jsonl")
        if path is None:
            self._fh = sys.stdout
            self._own = False
        else:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(path, "w", newline="")
            self._own = True
        if not self.jsonl:
            self._csv = csv.writer(self._fh, lineterminator="\n")
            self._csv.writerow(self.columns)

    def write(self, row: Sequence) -> None:
        if self.jsonl:
            rec = {c: _native(v) for c, v in zip(self.columns, row)}
            self._fh.write(json.dumps(rec) + "\n")
        else:
            self._csv.writerow([_fmt(v) for v in row])
        self._fh.flush()

    def close(self) -> None:
        if self._own:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _native(v):
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_table(path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with TableWriter(path, columns) as w:
        for r in rows:
            w.write(r)


def _sibling(path: str | None, suffix: str) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p.with_name(p.stem + suffix + (p.suffix or ".csv")))


# --------------------------------------------------------------------------
# subcommands


def cmd_forward_ad(cfg: RunConfig, args) -> int:
    from .forward_ad import observe_ad

    spec = cfg.ad_spec()
    est = observe_ad(spec, cfg.seed, cfg.workers)
    rows = [
        (j, t, x[0], x[1], e.mean, e.std_error, e.n_particles, e.n_failed)
        for j, ((t, x), e) in enumerate(zip(spec.observations, est))
    ]
    write_table(args.out, ["obs", "t", "x1", "x2", "mean", "std_error", "n_particles", "n_failed"], rows)
    return EXIT_OK


def cmd_forward_bvp(cfg: RunConfig, args) -> int:
    from .forward_bvp import observe_bvp

    spec = cfg.bvp_spec()
    est = observe_bvp(spec, cfg.seed, cfg.workers)
    rows = [
        (j, x[0], x[1], e.mean, e.std_error, e.mean_exit_time, e.n_particles, e.n_failed)
        for j, (x, e) in enumerate(zip(spec.observations, est))
    ]
    write_table(
        args.out,
        ["obs", "x1", "x2", "mean", "std_error", "mean_exit_time", "n_particles", "n_failed"],
        rows,
    )
    return EXIT_OK


def cmd_reference(cfg: RunConfig, args) -> int:
    from .reference_solvers import fd_solve_bvp, galerkin_solve_ad

    method = args.method or cfg.reference.method
    ref = cfg.reference
    if method == "galerkin":
        spec = cfg.ad_spec()
        dt_ref = ref.dt_ref or spec.step / 10.0
        res = galerkin_solve_ad(spec, ref.L, dt_ref, basis=ref.basis)
        rows = [(j, t, x[0], x[1], v) for j, ((t, x), v) in enumerate(zip(spec.observations, res.values))]
        write_table(args.out, ["obs", "t", "x1", "x2", "value"], rows)
        X, Y, F = res.field_on_grid(-1, ref.output_grid)
        grid_rows = zip(X.ravel(), Y.ravel(), F.ravel())
    else:
        spec = cfg.bvp_spec()
        res = fd_solve_bvp(spec, ref.grid)
        rows = [(j, x[0], x[1], v) for j, (x, v) in enumerate(zip(spec.observations, res.values))]
        write_table(args.out, ["obs", "x1", "x2", "value"], rows)
        stride = max(1, (len(res.x) - 1) // (ref.output_grid - 1))
        xs, ys = res.x[::stride], res.y[::stride]
        th = res.theta[::stride, ::stride]
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        grid_rows = zip(X.ravel(), Y.ravel(), th.ravel())
    if args.out is not None:
        write_table(_sibling(args.out, "_grid"), ["x1", "x2", "theta"], grid_rows)
    return EXIT_OK


def build_likelihood(cfg: RunConfig):
    """Likelihood from config data, or from a synthetic truth drawn from the prior."""
    from .forward_ad import observation_means
    from .inference import LikelihoodSpec, default_noise_std, prior_draw

    if cfg.prior is None or cfg.likelihood is None:
        raise ConfigError("<config>", [(None, "prior/likelihood", "sampling needs both sections")])
    prior = cfg.prior.build()
    lk = cfg.likelihood
    spec = cfg.ad_spec()
    truth = None
    if lk.data is not None:
        data = np.asarray(lk.data, dtype=float)
        noise = lk.noise_std or default_noise_std(data)
    else:
        truth = prior_draw(prior, np.random.default_rng(lk.truth_seed))
        clean = observation_means(spec.with_velocity(prior.field(truth)), lk.forward_seed)
        noise = lk.noise_std or default_noise_std(clean)
        data = clean + noise * np.random.default_rng(lk.truth_seed + 1).standard_normal(clean.size)
    return LikelihoodSpec(data, noise, spec, prior, seed=lk.forward_seed, workers=cfg.workers), truth


def cmd_sample(cfg: RunConfig, args) -> int:
    from .inference import histogram, run_chain

    if args.out is None:
        raise ValueError("sample needs --out DIR")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    likelihood, truth = build_likelihood(cfg)
    prior = likelihood.prior
    ch = cfg.chain
    steps = args.steps if args.steps is not None else ch.steps
    beta = args.beta if args.beta is not None else ch.beta
    dim = prior.dim
    cols = ["iteration", "phi"] + [f"u{i}" for i in range(dim)]
    with TableWriter(out / "samples.csv", cols) as w:
        def record(s):
            it = s.iteration
            if it > ch.burn_in and (it - ch.burn_in) % ch.thin == 0:
                w.write([it, s.phi, *s.u])

        res = run_chain(steps, beta, prior, likelihood, seed=cfg.seed, burn_in=ch.burn_in,
                        thin=ch.thin, callback=record)
    write_table(out / "trace.csv", ["iteration", "phi", "map_objective"],
                ((i + 1, p, m) for i, (p, m) in enumerate(zip(res.phi_trace, res.map_objective_trace))))
    write_table(out / "map.csv", ["component", "value"] + (["truth"] if truth is not None else []),
                ((i, v, *([truth[i]] if truth is not None else [])) for i, v in enumerate(res.map_u)))
    summary = [
        ("steps", steps), ("beta", beta), ("accepted", res.final.accepted),
        ("acceptance_rate", res.acceptance_rate if steps else float("nan")),
        ("failed", res.final.failed), ("kept", len(res.samples)),
        ("map_objective", res.map_objective), ("noise_std", likelihood.noise_std),
    ]
    write_table(out / "summary.csv", ["key", "value"], summary)
    write_table(out / "data.csv", ["obs", "value"], enumerate(likelihood.data))
    if len(res.samples):
        comps = list(range(min(8, dim)))
        rows = []
        for c, h in zip(comps, histogram(res.samples, comps, bins=30)):
            e = h.edges[0]
            rows.extend((c, e[i], e[i + 1], h.counts[i]) for i in range(len(h.counts)))
        write_table(out / "histograms.csv", ["component", "left", "right", "count"], rows)
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, args) -> int:
    from .optimize import ForcingControl, optimize_forcing

    if cfg.optimizer is None:
        raise ConfigError("<config>", [(None, "optimizer", "section missing")])
    o = cfg.optimizer
    spec = cfg.bvp_spec()
    control = ForcingControl(o.centers, o.targets, spec.observations, o.sharpness)
    res = optimize_forcing(control, spec, cfg.seed, o.x0, o.step, o.x_tol, o.f_tol, o.max_iter, cfg.workers)
    n = control.n_controls
    write_table(
        args.out,
        ["iteration"] + [f"f{j + 1}" for j in range(n)] + ["cost"],
        ((it, *x, c) for it, x, c in res.optimizer.trace),
    )
    log.info("F* = %s, cost %.3g, %s", res.amplitudes, res.cost, res.optimizer.reason)
    return EXIT_OK


def cmd_benchmark(cfg: RunConfig, args) -> int:
    from .benchmark import CostModel, benchmark_scaling, predict_cost_ratio

    b = cfg.benchmark
    table = benchmark_scaling(
        b.n_u, b.repetitions, b.velocity_scale, b.kappa, b.final_time, b.n_particles, b.n_obs, b.dt,
        b.reference, cfg.seed, cfg.workers,
    )
    n_steps = max(1, int(np.ceil(b.final_time / b.dt)))
    rows = []
    for r in table.rows:
        model = CostModel(b.n_obs, b.n_particles, n_steps, r.n_u, r.n_u)
        rows.append((r.n_u, r.max_wavenumber, r.particle_time, r.reference_time, r.particle_jitter,
                     r.reference_jitter, int(r.flagged), predict_cost_ratio(model)))
    write_table(args.out, ["n_u", "K", "particle_time", "reference_time", "particle_jitter",
                           "reference_jitter", "jitter_flag", "predicted_ratio"], rows)
    fit = [("particle_slope", table.particle_slope), ("reference_slope", table.reference_slope)]
    if args.out is not None:
        write_table(_sibling(args.out, "_fit"), ["quantity", "value"], fit)
    else:
        write_table(None, ["quantity", "value"], fit)
    return EXIT_OK


COMMANDS = {
    "forward-ad": (cmd_forward_ad, "particle estimates for the time-dependent problem"),
    "forward-bvp": (cmd_forward_bvp, "particle estimates for the Dirichlet problem"),
    "reference": (cmd_reference, "full-field reference solution (Galerkin or finite differences)"),
    "sample": (cmd_sample, "pCN posterior sampling of the velocity coefficients"),
    "optimize": (cmd_optimize, "Nelder-Mead optimal forcing amplitudes"),
    "benchmark": (cmd_benchmark, "wall-time scaling against the velocity dimension"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparseobs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, help="worker threads (0 = all cores)")
        p.add_argument("--out", help="output file (directory for sample); stdout if omitted")
        if name == "reference":
            p.add_argument("--method", choices=["galerkin", "fd"])
        if name == "sample":
            p.add_argument("--steps", type=int)
            p.add_argument("--beta", type=float)
    return parser


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: invalid config\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = cfg.model_copy(update=overrides)
    handler = COMMANDS[args.command][0]
    try:
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"error: invalid config\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, ArithmeticError, NotImplementedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
