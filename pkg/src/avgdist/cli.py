"""Command-line front end.

Subcommands: validate, run, plot, constants, sync-check.
Exit codes: 0 success, 1 validation or assertion failure, 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .categorical import (
    ExactLawFamily,
    SupportGrid,
    align_common_shift,
    equal_up_to_translation,
    read_coeff_csv,
)
from .config import ConfigError, bundled_spec_path, load_mrp, parse_experiment
from .experiments import read_csv_columns, run_experiment
from .mrp import SynchronousSampler, validate
from .operators import OperatorContext, synchronous_backup
from .schedules import iid_constants, markov_two_phase_info, threshold_iteration
from .svgplot import distribution_panels, line_chart


def _resolve_spec(spec_arg: str) -> Path:
    p = Path(spec_arg)
    if p.exists():
        return p
    return bundled_spec_path(spec_arg)


def cmd_validate(args) -> int:
    spec = parse_experiment(_resolve_spec(args.spec), validate_mrp=False)
    violations = validate(spec.mrp)
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return 1
    print(f"spec '{spec.name}' is valid: {len(spec.runs)} runs, "
          f"{spec.mrp.num_states} states, {spec.grid.num_atoms} atoms")
    return 0


def cmd_run(args) -> int:
    spec = parse_experiment(_resolve_spec(args.spec))
    report = run_experiment(
        spec,
        out_dir=args.out,
        num_seeds=args.seeds,
        seed_base=args.seed_base,
        iterations=args.iters,
        include_optional=args.mode or (),
        only_modes=args.only or None,
        threads=args.threads,
    )
    for entry in report.entries:
        final = entry["final"]["residual_G"]["mean"]
        shown = "n/a" if final is None else f"{final:.3e}"
        print(f"run {entry['name']:<16} mode={entry['mode']:<12} seeds={len(entry['seeds'])} "
              f"final mean residual_G={shown} [{entry['wall_clock_s']:.1f}s]")
        for check in entry["checks"]:
            status = "PASS" if check["passed"] else "FAIL"
            print(f"    [{status}] {check['name']} (value {check['value']:.4g})")
    out = Path(args.out or spec.output_dir)
    print(f"traces and summary written to {out}")
    return 0 if report.passed else 1


def _plot_run_dir(rdir: Path, plots: Path) -> None:
    agg = read_csv_columns(rdir / "aggregate.csv")
    for needed in ("k", "mean_residual_G"):
        if needed not in agg:
            raise ConfigError(f"{rdir / 'aggregate.csv'}: missing column '{needed}'")
    ks = agg["k"]
    curves = []
    bands = []
    for col, label in (
        ("mean_residual_G", "residual vs projected operator"),
        ("mean_residual_h", "mean-field residual"),
        ("mean_gain_err", "gain error"),
    ):
        if col in agg and not np.all(np.isnan(agg[col])):
            n = len(curves)
            curves.append({"x": ks, "y": agg[col], "label": label})
            se = agg.get(col.replace("mean_", "stderr_"))
            if se is not None and not np.all(np.isnan(se)):
                bands.append(
                    {"x": ks, "lo": agg[col] - se, "hi": agg[col] + se, "color": "#1f77b4" if n == 0 else "#d62728"}
                )
    if "rate_guide" in agg and not np.all(np.isnan(agg["rate_guide"])):
        guide = agg["rate_guide"]
        ref = next((c for c in curves if c["label"].startswith("mean-field")), curves[0])
        anchor = np.nanargmin(np.abs(ks - 1000)) if len(ks) else 0
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = ref["y"][anchor] / guide[anchor] if guide[anchor] > 0 else 1.0
        if np.isfinite(scale) and scale > 0:
            curves.append(
                {"x": ks, "y": guide * scale, "label": "rate guide", "color": "#777", "dash": "5,4"}
            )
    line_chart(
        plots / f"residuals_{rdir.name}.svg",
        curves,
        title=f"{rdir.name}: residual decay",
        xlabel="iteration k",
        ylabel="sup-Cramer residual",
        bands=bands,
    )


def cmd_plot(args) -> int:
    out = Path(args.out)
    run_dirs = sorted(p for p in out.iterdir() if p.is_dir() and (p / "aggregate.csv").exists()) if out.exists() else []
    if not run_dirs:
        raise ConfigError(f"no run traces found under {out}")
    plots = out / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    for rdir in run_dirs:
        _plot_run_dir(rdir, plots)
    # law panels, aligned to the deterministic reference when present
    families, labels, thetas = [], [], None
    ref = None
    for rdir in run_dirs:
        coeff_files = sorted(rdir.glob("final_coeffs_seed_*.csv"))
        if not coeff_files:
            continue
        fam, theta = read_coeff_csv(coeff_files[0])
        families.append(fam)
        labels.append(rdir.name)
        thetas = theta
        if rdir.name == "exact_km":
            ref = fam
    if families:
        grid = SupportGrid.from_range(float(thetas[0]), float(thetas[-1]), len(thetas))
        means = []
        for fam in families:
            shift = align_common_shift(fam, ref, grid) if ref is not None else 0.0
            means.append(fam @ thetas + shift)
        distribution_panels(
            plots / "distributions.svg",
            thetas,
            families,
            labels,
            title="final categorical laws (dashed: means, shift-aligned)",
            means=means,
        )
    print(f"plots written to {plots}")
    return 0


def cmd_constants(args) -> int:
    grid = SupportGrid.from_range(args.theta_min, args.theta_max, args.atoms)
    T = threshold_iteration(args.a1, args.regime)
    t_shown = str(T) if T < 10 ** 18 else f"~1e{len(str(T)) - 1}"
    if args.regime == "iid":
        c = iid_constants(args.a1, grid, args.states, threshold=T)
        print(f"regime          iid")
        print(f"a1              {args.a1:.12g}")
        print(f"epsilon         {c.epsilon:.17g}")
        print(f"kappa           {c.kappa:.17g}")
        print(f"threshold T     {t_shown}")
        for name, v in (
            ("D", c.D), ("M2", c.M2), ("S", c.S), ("omega", c.omega), ("nu", c.nu),
            ("eta", c.eta_c), ("R", c.R_const), ("K", c.K), ("B_T", c.B_T), ("C_iid", c.C_iid),
        ):
            print(f"{name:<15} {v:.12g}")
    else:
        info = markov_two_phase_info(args.a1, threshold=T)
        print(f"regime          markov")
        print(f"a1              {args.a1:.12g}")
        print(f"epsilon         {info['epsilon']:.17g}")
        print(f"kappa           {info['kappa']:.17g}")
        print(f"threshold T     {t_shown}")
        print(f"gamma_T         {info['gamma']:.12g}")
        print("final constant  not computable (depends on a chain-specific solve)")
    return 0


def cmd_sync_check(args) -> int:
    mrp = load_mrp(args.mrp)
    violations = validate(mrp)
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return 1
    grid = SupportGrid.from_range(args.theta_min, args.theta_max, args.atoms)
    ctx = OperatorContext.create(mrp, grid)
    rng = np.random.Generator(np.random.Philox(args.seed))
    # arbitrary finite-support family to push through the synchronous map
    laws = []
    for _ in range(mrp.num_states):
        n = int(rng.integers(2, 5))
        locs = np.sort(rng.uniform(grid.theta_1, grid.theta_d, size=n))
        mass = rng.dirichlet(np.ones(n))
        laws.append((locs, mass))
    eta = ExactLawFamily(laws)
    sampler = SynchronousSampler(mrp, args.seed + 1)
    for n in range(args.samples):
        sample = sampler.draw()
        g, gp = rng.uniform(0.0, 1.0, size=2)
        out_g = synchronous_backup(eta, sample, g, ctx)
        out_gp = synchronous_backup(eta, sample, gp, ctx)
        shift = equal_up_to_translation(out_g, out_gp, tol=1e-10)
        if shift is None or abs(shift - (g - gp)) > 1e-10:
            print(f"FAIL at sample {n}: {sample} with g={g:.12g}, g'={gp:.12g}, shift={shift}")
            return 1
    print(f"sync-check passed: {args.samples} samples, centering-free up to a common shift")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avgdist",
        description="Distributional bias evaluation for average-reward Markov reward processes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a spec file and its reward process")
    p_val.add_argument("--spec", required=True, help="spec path or bundled spec name")
    p_val.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="execute the runs of a spec across seeds")
    p_run.add_argument("--spec", required=True, help="spec path or bundled spec name")
    p_run.add_argument("--out", default=None, help="output directory (default from spec)")
    p_run.add_argument("--seeds", type=int, default=None, help="number of seeds")
    p_run.add_argument("--seed-base", type=int, default=None, help="first seed value")
    p_run.add_argument("--iters", type=int, default=None, help="override iteration count")
    p_run.add_argument("--mode", action="append", default=None,
                       help="include an optional run by name/mode ('all' for every optional run)")
    p_run.add_argument("--only", action="append", default=None,
                       help="restrict to runs with this mode or name")
    p_run.add_argument("--threads", type=int, default=1, help="worker threads across seeds")
    p_run.set_defaults(func=cmd_run)

    p_plot = sub.add_parser("plot", help="emit SVG plots from written traces")
    p_plot.add_argument("--out", required=True, help="directory previously written by run")
    p_plot.set_defaults(func=cmd_plot)

    p_const = sub.add_parser("constants", help="print the two-phase constant stack")
    p_const.add_argument("--a1", type=float, required=True)
    p_const.add_argument("--regime", choices=("iid", "markov"), required=True)
    p_const.add_argument("--theta-min", type=float, default=-2.0)
    p_const.add_argument("--theta-max", type=float, default=0.6)
    p_const.add_argument("--atoms", type=int, default=51)
    p_const.add_argument("--states", type=int, default=5)
    p_const.set_defaults(func=cmd_constants)

    p_sync = sub.add_parser("sync-check", help="verify the synchronous backup is centering-free")
    p_sync.add_argument("--mrp", required=True, help="reward process TOML file")
    p_sync.add_argument("--theta-min", type=float, default=-2.0)
    p_sync.add_argument("--theta-max", type=float, default=0.6)
    p_sync.add_argument("--atoms", type=int, default=51)
    p_sync.add_argument("--seed", type=int, default=0)
    p_sync.add_argument("--samples", type=int, default=1000)
    p_sync.set_defaults(func=cmd_sync_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # inadmissible parameters surface as validation failures
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
