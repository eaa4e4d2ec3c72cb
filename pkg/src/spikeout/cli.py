"""Command-line surface: generation, spectra, geometry, and theorem checks.

Exit codes: 0 = success (all checks passed, or pure generation succeeded),
1 = at least one check failed (or a run failed mid-way), 2 = configuration
or usage error.  Human-readable summaries go to stdout; machine reports are
written under the output directory (see ``--out`` / SPIKEOUT_OUT_DIR).
"""

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .errors import ConfigurationError, SpikeoutError
from .model import MixtureModelSpec, generate
from .spectra import sample_covariance_spectrum


def _load_config(path: "str | None") -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        with open(p, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    return doc


def _pick(config: dict, key, default, override=None):
    if override is not None:
        return override
    return config.get(key, default)


def _write_scenario(report, args) -> Path:
    out_dir = harness.write_report(report, args.out)
    if args.format == "json":
        for extra in out_dir.iterdir():
            if extra.name != "report.json" and extra.suffix != ".json":
                extra.unlink()
    return out_dir


def _finish(reports, args) -> int:
    failed = 0
    for report in reports:
        out_dir = _write_scenario(report, args)
        print(f"{report.scenario}: report written to {out_dir}")
        for check in report.checks:
            print("  " + check.summary_line())
        if not report.passed:
            failed += 1
    if not reports:
        print("no checks requested")
    return 1 if failed else 0


def _model_from_config(config: dict) -> "tuple[MixtureModelSpec, int, int]":
    if "model" not in config:
        raise ConfigurationError('config needs a "model" object')
    spec = MixtureModelSpec.from_json(config["model"])
    n = config.get("n")
    if n is None:
        raise ConfigurationError('config needs "n"')
    seed = config.get("seed", 0)
    return spec, int(n), int(seed)


def cmd_generate(args) -> int:
    config = _load_config(args.config)
    spec, n, seed = _model_from_config(config)
    if args.seed is not None:
        seed = args.seed
    dataset = generate(spec, n, seed)
    out_dir = Path(args.out or harness.default_out_root()) / "generate"
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset.write_matrix_csv(out_dir / "dataset.csv")
    dataset.write_memberships_json(out_dir / "memberships.json")
    with open(out_dir / "model.json", "w", encoding="ascii") as fh:
        json.dump(spec.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"generated {spec.d} x {n} dataset (seed {seed}) under {out_dir}")
    return 0


def cmd_spectrum(args) -> int:
    config = _load_config(args.config)
    spec, n, seed = _model_from_config(config)
    if args.seed is not None:
        seed = args.seed
    dataset = generate(spec, n, seed)
    decomp = sample_covariance_spectrum(
        dataset.X,
        method=config.get("method"),
        centered=bool(config.get("centered", False)),
    )
    out_dir = Path(args.out or harness.default_out_root()) / "spectrum"
    out_dir.mkdir(parents=True, exist_ok=True)
    decomp.write_eigenvalues_csv(out_dir / "spectrum.csv")
    if args.eigenvectors:
        decomp.write_eigenvectors_csv(out_dir / "eigenvectors.csv")
    print(
        f"spectrum of {spec.d} x {n} dataset ({decomp.method} path): "
        f"top eigenvalue {decomp.eigenvalues[0]:.6g}; written to {out_dir}"
    )
    return 0


def cmd_geometry(args) -> int:
    config = _load_config(args.config)
    report = harness.geometry_limits(
        d=int(config.get("d", 20000)),
        n=int(config.get("n", 30)),
        tau=float(config.get("tau", 9.0)),
        membership_w=float(config.get("membership_w", 0.2)),
        seed=int(_pick(config, "seed", 0, args.seed)),
        replications=int(_pick(config, "replications", 20, args.reps)),
        threads=args.threads,
    )
    return _finish([report], args)


def cmd_verify_eigenvalues(args) -> int:
    config = _load_config(args.config)
    seed = int(_pick(config, "seed", 0, args.seed))
    reps = int(_pick(config, "replications", 20, args.reps))
    ns = tuple(config.get("ns", (100, 400, 1600)))
    reports = [
        harness.noise_bulk(
            d=int(config.get("bulk_d", 500)),
            n=int(config.get("bulk_n", 1000)),
            seed=seed,
            replications=reps,
            threads=args.threads,
        ),
        harness.eigenvalue_sweep("main", ns=ns, seed=seed, replications=reps,
                                 threads=args.threads),
        harness.eigenvalue_sweep("outlier", ns=ns, seed=seed, replications=reps,
                                 w=float(config.get("w", 0.05)), threads=args.threads),
    ]
    return _finish(reports, args)


def cmd_verify_eigenvectors(args) -> int:
    config = _load_config(args.config)
    seed = int(_pick(config, "seed", 0, args.seed))
    reps = int(_pick(config, "replications", 20, args.reps))
    reports = [
        harness.angle_sweep(ns=tuple(config.get("ns", (100, 400, 1600))), seed=seed,
                            replications=reps, threads=args.threads),
        harness.strong_inconsistency(
            n=int(config.get("n", 100)),
            d=int(config.get("d", 50000)),
            spike_level=float(config.get("spike_level", 5.0)),
            seed=seed,
            replications=reps,
            threads=args.threads,
        ),
    ]
    return _finish(reports, args)


def cmd_toy_example(args) -> int:
    print(
        "note: the built-in scenario gives direction 10 the variance pair "
        "(tau1, tau2) = (1, 2000) with weight 0.02 on the large branch, so its "
        "realized eigenvalue level is 0.02 * 2000 = 40."
    )
    report = harness.toy_example(
        seed=args.seed if args.seed is not None else 0,
        replications=args.reps if args.reps is not None else 20,
        threads=args.threads,
    )
    return _finish([report], args)


def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    kind = config.get("kind", "transition")
    seed = int(_pick(config, "seed", 0, args.seed))
    reps = int(_pick(config, "replications", 20, args.reps))
    if kind == "transition":
        report = harness.transition(
            r=float(config.get("r", 5.0)),
            d_values=tuple(config.get("d_values", (500, 2000, 8000))),
            n=int(config.get("n", 200)),
            membership_w=float(config.get("membership_w", 0.5)),
            seed=seed,
            replications=reps,
        )
    elif kind == "eigenvalue":
        report = harness.eigenvalue_sweep(
            variant=config.get("variant", "main"),
            ns=tuple(config.get("ns", (100, 400, 1600))),
            seed=seed,
            replications=reps,
            threads=args.threads,
        )
    elif kind == "angle":
        report = harness.angle_sweep(
            ns=tuple(config.get("ns", (100, 400, 1600))),
            seed=seed,
            replications=reps,
            threads=args.threads,
        )
    else:
        raise ConfigurationError(f"unknown sweep kind {kind!r}")
    return _finish([report], args)


_COMMANDS = {
    "generate": (cmd_generate, "Generate a dataset from a model config and export it"),
    "spectrum": (cmd_spectrum, "Generate a dataset and export its covariance spectrum"),
    "geometry": (cmd_geometry, "Check scaled norms/distances against their limits"),
    "verify-eigenvalues": (
        cmd_verify_eigenvalues,
        "Check bulk edges and spike eigenvalue-ratio convergence",
    ),
    "verify-eigenvectors": (
        cmd_verify_eigenvectors,
        "Check eigenvector angle convergence and strong inconsistency",
    ),
    "toy-example": (cmd_toy_example, "Run the built-in d=3000 reference scenario"),
    "sweep": (cmd_sweep, "Run a convergence sweep from a config"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikeout",
        description="Synthetic high-dimensional outlier models and PCA-limit checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--reps", type=int, help="override the replication count")
        p.add_argument("--out", help="output directory root (default: $SPIKEOUT_OUT_DIR or ./out)")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both",
                       help="machine report formats to keep (report.json is always written)")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for replications (results are thread-count independent)")
        if name == "spectrum":
            p.add_argument("--eigenvectors", action="store_true",
                           help="also export the eigenvector matrix (can be large)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 0 on --help, 2 on usage errors
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command][0](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SpikeoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
