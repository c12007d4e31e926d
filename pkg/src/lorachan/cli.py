"""Command-line front end: fit, validate, generate, report.

Every command takes flags, optionally backed by a JSON/TOML config file
(flags win). All artifacts embed a config echo sufficient to reproduce
the run, and numeric output uses fixed 9-significant-digit formatting so
identical inputs produce byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import InsufficientDataError, LoraChanError, TraceConfigError
from .fading import FadingModel
from .ingest import build_snr_series, load_dataset, load_receiver_config
from .pathloss import PathlossModel
from .pipeline import ScenarioFit, fit_scenario, validate_scenario
from .records import Scenario
from .tracegen import (
    ScenarioModel,
    TraceConfig,
    TraceMode,
    generate,
    write_trace_binary,
    write_trace_csv,
)
from .validation import HATA_OKUMURA_URBAN_EXPONENT, histogram_counts

EXIT_OK = 0
EXIT_IO = 1
EXIT_INSUFFICIENT = 2
EXIT_VALIDATION = 3

_DEFAULTS = {
    "d0": 10.0,
    "delta_d": 10.0,
    "min_bin_count": 3,
    "seed": 0,
    "mode": "ar",
    "out": ".",
    "start_distance": 10.0,
    "n_points": 1000,
    "n_receivers": 4,
}


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _round9(obj):
    """Recursively clamp floats to 9 significant digits for stable artifacts."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    return obj


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(_round9(doc), indent=2, sort_keys=True) + "\n")


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix.lower() == ".toml":
        if sys.version_info >= (3, 11):
            import tomllib as toml
        else:
            import tomli as toml
        return toml.loads(raw.decode("utf-8"))
    return json.loads(raw)


def _merged(args: argparse.Namespace, key: str):
    """Flag value, else config-file value, else default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in args._config:
        return args._config[key]
    return _DEFAULTS.get(key)


def _echo(args: argparse.Namespace, keys: Sequence[str]) -> dict:
    return {k: _merged(args, k) for k in keys}


def _load_series(args: argparse.Namespace):
    dataset = _merged(args, "dataset")
    receivers = _merged(args, "receivers")
    tag = _merged(args, "scenario")
    if dataset is None or receivers is None or tag is None:
        raise LoraChanError("--dataset, --receivers and --scenario are required")
    try:
        scenario = Scenario.from_tag(str(tag))
    except ValueError as exc:
        raise LoraChanError(str(exc)) from exc
    rx_config = load_receiver_config(receivers)
    loaded = load_dataset(dataset, field_map=rx_config.field_map)
    for issue in loaded.issues:
        print(f"warning: {issue}", file=sys.stderr)
    built = build_snr_series(loaded.records, rx_config.positions, scenario)
    if built.n_excluded:
        print(f"warning: excluded {built.n_excluded} records closer than 1 m",
              file=sys.stderr)
    return built.series


def _print_fit_summary(fit: ScenarioFit) -> None:
    p, f = fit.pathloss, fit.fading
    print(f"{'scenario':<12} {'rho0':>8} {'gamma':>7} {'sigma_z':>8} "
          f"{'sigma_x':>8} {'sigma_y':>8} {'phi':>7} {'sigma_eps':>9}")
    print(f"{p.scenario:<12} {p.rho0_db:>8.2f} {p.gamma:>7.2f} "
          f"{p.sigma_z_db:>8.2f} {f.sigma_x_db:>8.2f} {f.sigma_y_db:>8.2f} "
          f"{f.phi:>7.3f} {f.sigma_eps_db:>9.2f}")
    print(f"(n_samples={p.n_samples}, d0={_fmt(p.d0_m)} m, "
          f"delta_d={_fmt(f.delta_d_m)} m)")
    if "nlos" in p.scenario:
        print(f"reference: Hata-Okumura urban exponent "
              f"gamma={HATA_OKUMURA_URBAN_EXPONENT} (extrapolated)")
    if fit.phi_estimate.diagnostic:
        print(f"note: {fit.phi_estimate.diagnostic}")


def cmd_fit(args: argparse.Namespace) -> int:
    out = Path(_merged(args, "out"))
    try:
        series = _load_series(args)
    except (OSError, ValueError, LoraChanError) as exc:
        if isinstance(exc, InsufficientDataError):
            print(f"error: insufficient data: {exc}", file=sys.stderr)
            return EXIT_INSUFFICIENT
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    echo = _echo(args, ("dataset", "receivers", "scenario", "d0", "delta_d",
                        "min_bin_count"))
    try:
        fit = fit_scenario(series,
                           d0=float(_merged(args, "d0")),
                           delta_d=float(_merged(args, "delta_d")),
                           min_bin_count=int(_merged(args, "min_bin_count")))
    except InsufficientDataError as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except LoraChanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT

    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "pathloss.json", {**fit.pathloss.to_dict(), "config": echo})
    _write_json(out / "fading.json", {**fit.fading.to_dict(), "config": echo})

    header = "# " + json.dumps(_round9(echo), sort_keys=True)
    lines = [header, "receiver_id,distance_m,z_db"]
    for s_id in sorted(fit.residuals):
        z = fit.residuals[s_id]
        d = next(s.distances_m for s in series if s.receiver_id == s_id)
        lines.extend(f"{s_id},{_fmt(di)},{_fmt(zi)}" for di, zi in zip(d, z))
    (out / "residuals.csv").write_text("\n".join(lines) + "\n")

    lines = [header, "receiver_id,bin_center_m,y_db,count"]
    for b in fit.bins:
        lines.extend(f"{b.receiver_id},{_fmt(c)},{_fmt(y)},{n}"
                     for c, y, n in zip(b.bin_centers_m, b.y_values_db,
                                        b.bin_counts))
    (out / "bins.csv").write_text("\n".join(lines) + "\n")

    _print_fit_summary(fit)
    return EXIT_OK


def _load_models(args: argparse.Namespace) -> ScenarioModel:
    pathloss_file = _merged(args, "pathloss")
    fading_file = _merged(args, "fading")
    if pathloss_file is None or fading_file is None:
        raise LoraChanError("--pathloss and --fading model files are required")
    return ScenarioModel(pathloss=PathlossModel.load(pathloss_file),
                         fading=FadingModel.load(fading_file))


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        model = _load_models(args)
    except (OSError, KeyError, ValueError, LoraChanError) as exc:
        print(f"error: cannot load models: {exc!r}", file=sys.stderr)
        return EXIT_IO
    try:
        series = _load_series(args)
    except InsufficientDataError as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (OSError, ValueError, LoraChanError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    echo = _echo(args, ("dataset", "receivers", "scenario", "pathloss",
                        "fading", "min_bin_count"))
    try:
        result = validate_scenario(
            series, model.pathloss, model.fading,
            min_bin_count=int(_merged(args, "min_bin_count")))
    except LoraChanError as exc:
        print(f"error: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT

    out = Path(_merged(args, "out"))
    out.mkdir(parents=True, exist_ok=True)
    report_doc = {
        "config": echo,
        "residuals": result.report.to_dict(),
        "whiteness_passed": result.whiteness_passed,
        "sigma_z_data": result.sigma_z_data_db,
        "sigma_z_gap": result.sigma_z_gap_db,
        "sigma_z_passed": result.sigma_z_passed,
        "closure": [{"name": c.name, "passed": c.passed, "gap": c.gap,
                     "tolerance": c.tolerance} for c in result.closure.checks],
        "notes": result.notes,
        "passed": result.passed,
    }
    _write_json(out / "report.json", report_doc)

    header = "# " + json.dumps(_round9(echo), sort_keys=True)
    acf = result.report.acf
    lines = [header, f"# conf_bound={_fmt(acf.conf_bound)}", "lag,correlation"]
    lines.extend(f"{int(l)},{_fmt(c)}"
                 for l, c in zip(acf.lags, acf.correlations))
    (out / "acf.csv").write_text("\n".join(lines) + "\n")

    edges, counts = histogram_counts(result.report.residuals)
    lines = [header, "bin_left,bin_right,count"]
    lines.extend(f"{_fmt(edges[i])},{_fmt(edges[i + 1])},{int(counts[i])}"
                 for i in range(len(counts)))
    (out / "hist.csv").write_text("\n".join(lines) + "\n")

    for check in result.closure.checks:
        print(check)
    print(f"whiteness: {'pass' if result.whiteness_passed else 'FAIL'} "
          f"({result.report.fraction_within_bounds:.1%} of lags within "
          f"+-{_fmt(acf.conf_bound)})")
    print(f"sigma_z match: {'pass' if result.sigma_z_passed else 'FAIL'} "
          f"(data {_fmt(result.sigma_z_data_db)} dB, "
          f"gap {_fmt(result.sigma_z_gap_db)} dB)")
    for note in result.notes:
        print(f"note: {note}")
    return EXIT_OK if result.passed else EXIT_VALIDATION


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        model = _load_models(args)
    except (OSError, KeyError, ValueError, LoraChanError) as exc:
        print(f"error: cannot load models: {exc!r}", file=sys.stderr)
        return EXIT_IO
    try:
        config = TraceConfig(
            model=model,
            start_distance_m=float(_merged(args, "start_distance")),
            n_points=int(_merged(args, "n_points")),
            delta_d_m=float(_merged(args, "delta_d")),
            n_receivers=int(_merged(args, "n_receivers")),
            seed=int(_merged(args, "seed")),
            mode=TraceMode(_merged(args, "mode")),
        )
        trace = generate(config)
    except (TraceConfigError, ValueError) as exc:
        print(f"error: invalid trace parameters: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT

    out = Path(_merged(args, "out"))
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / "traces.csv")
    write_trace_binary(trace, out / "traces.bin")
    print(f"seed={trace.seed} mode={trace.mode.value} "
          f"receivers={len(trace.receiver_ids)} points={config.n_points}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        model = _load_models(args)
    except (OSError, KeyError, ValueError, LoraChanError) as exc:
        print(f"error: cannot load models: {exc!r}", file=sys.stderr)
        return EXIT_IO
    p, f = model.pathloss, model.fading
    print(f"{'scenario':<12} {'rho0':>8} {'gamma':>7} {'sigma_z':>8} "
          f"{'sigma_x':>8} {'sigma_y':>8} {'phi':>7} {'sigma_eps':>9}")
    print(f"{p.scenario:<12} {p.rho0_db:>8.2f} {p.gamma:>7.2f} "
          f"{p.sigma_z_db:>8.2f} {f.sigma_x_db:>8.2f} {f.sigma_y_db:>8.2f} "
          f"{f.phi:>7.3f} {f.sigma_eps_db:>9.2f}")
    print(f"(d0={_fmt(p.d0_m)} m, delta_d={_fmt(f.delta_d_m)} m, "
          f"n_samples={p.n_samples})")
    if "nlos" in p.scenario:
        print(f"reference: Hata-Okumura urban exponent "
              f"gamma={HATA_OKUMURA_URBAN_EXPONENT} (extrapolated)")
    return EXIT_OK


def _add_common(sub: argparse.ArgumentParser, *, dataset: bool = False,
                models: bool = False, trace: bool = False) -> None:
    sub.add_argument("--config", help="JSON or TOML config file; flags win")
    sub.add_argument("--out", help="output directory (default: .)")
    if dataset:
        sub.add_argument("--dataset", help="directory of .sigmf-meta files")
        sub.add_argument("--receivers",
                         help="receiver positions JSON/TOML config")
        sub.add_argument("--scenario",
                         choices=[s.value for s in Scenario],
                         help="scenario tag")
        sub.add_argument("--d0", type=float, help="reference distance, m")
        sub.add_argument("--min-bin-count", dest="min_bin_count", type=int,
                         help="minimum frames per bin")
    if dataset or trace:
        sub.add_argument("--delta-d", dest="delta_d", type=float,
                         help="distance step, m")
    if models:
        sub.add_argument("--pathloss", help="pathloss.json model file")
        sub.add_argument("--fading", help="fading.json model file")
    if trace:
        sub.add_argument("--seed", type=int, help="trace RNG seed")
        sub.add_argument("--mode", choices=[m.value for m in TraceMode],
                         help="generation mode")
        sub.add_argument("--n-points", dest="n_points", type=int)
        sub.add_argument("--n-receivers", dest="n_receivers", type=int)
        sub.add_argument("--start-distance", dest="start_distance", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lorachan",
        description="Fit, validate, and sample an empirical LPWAN "
                    "propagation channel model from SigMF frame datasets.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_fit = subs.add_parser("fit", help="fit pathloss and fading models")
    _add_common(p_fit, dataset=True)
    p_fit.set_defaults(func=cmd_fit)

    p_val = subs.add_parser("validate", help="validate models against data")
    _add_common(p_val, dataset=True, models=True)
    p_val.set_defaults(func=cmd_validate)

    p_gen = subs.add_parser("generate", help="generate synthetic traces")
    _add_common(p_gen, models=True, trace=True)
    p_gen.set_defaults(func=cmd_generate)

    p_rep = subs.add_parser("report", help="print a model summary table")
    _add_common(p_rep, models=True)
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args._config = _load_config_file(getattr(args, "config", None))
    except (OSError, ValueError) as exc:
        print(f"error: cannot read config file: {exc}", file=sys.stderr)
        return EXIT_IO
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
