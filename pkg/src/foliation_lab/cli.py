"""Command line entry point: ``foliation-lab run | validate | plot``.

Exit codes: 0 every check passed, 1 a check failed, errored or was
inconclusive, 2 the config (or another input file) is invalid.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings
from pathlib import Path

from .errors import ConfigError, FoliationLabError
from .leaves import LeafSample

log = logging.getLogger("foliation_lab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _config_error(exc: ConfigError) -> int:
    where = f" at {exc.pointer}" if exc.pointer else ""
    print(f"config error{where}: {exc.message}", file=sys.stderr)
    return EXIT_CONFIG


def defects_csv(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check_id", "anchor", "defect", "tol", "pass"])
    for c in report.checks:
        row = c.to_json()
        w.writerow([c.id, c.anchor, row["defect"], row["tol"], "true" if c.passed else "false"])
    return buf.getvalue()


def summary_text(report) -> str:
    lines = [f"scenario {report.scenario}  suite {report.suite}  seed {report.seed}  config {report.config_hash[:12]}"]
    for c in report.checks:
        row = c.to_json()
        lines.append(f"{c.status.upper():12s} {c.id:40s} defect {row['defect']}  tol {row['tol']}")
    s = report.to_json()["summary"]
    lines.append(f"{s['passed']}/{s['checks']} passed, {s['failed']} failed, "
                 f"{s['inconclusive']} inconclusive, {s['errors']} errors")
    return "\n".join(lines) + "\n"


def write_outputs(report, config, out: Path):
    from .svg import emit_leaf_plot

    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(_dump(report.to_json()), encoding="utf-8")
    (out / "summary.txt").write_text(summary_text(report), encoding="utf-8")
    (out / "defects.csv").write_text(defects_csv(report), encoding="utf-8")
    (out / "timings.json").write_text(_dump({k: round(v, 4) for k, v in sorted(report.timings.items())}),
                                      encoding="utf-8")
    if not config.scenario.plots:
        return
    for name, sample in report.samples.items():
        wrapped = {"config_hash": config.hash, "seed": report.seed, "sample": sample.to_json()}
        (out / f"sample_{name}.json").write_text(_dump(wrapped), encoding="utf-8")
        if len(sample.points):
            svg = emit_leaf_plot(sample, None, config.hash, report.seed)
            (out / f"leaf_{name}.svg").write_text(svg, encoding="utf-8")


def cmd_run(args) -> int:
    from .scenario import load_config
    from .suites import run_suite

    config = load_config(args.config)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = run_suite(config, args.suite, seed=args.seed, threads=args.threads)
    for w in sorted({str(w.message) for w in caught}):
        log.warning("%s", w)
    out = Path(args.out) if args.out else Path("foliation_lab_runs") / config.name
    write_outputs(report, config, out)
    sys.stdout.write(summary_text(report))
    print(f"outputs in {out}")
    return report.exit_code


def cmd_validate(args) -> int:
    from .foliation import rationality_warnings
    from .scenario import load_config

    config = load_config(args.config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        notes = rationality_warnings(config.scenario.fib)
    for note in notes:
        log.warning("%s", note)
    print(f"valid: {config.name} (config hash {config.hash})")
    return EXIT_OK


def read_sample(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"sample file {path} does not exist") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"sample file is not valid JSON: {exc}") from None
    if "sample" in data:
        return LeafSample.from_json(data["sample"]), data.get("config_hash", ""), data.get("seed")
    return LeafSample.from_json(data), "", None


def cmd_plot(args) -> int:
    from .svg import emit_leaf_plot

    try:
        sample, chash, seed = read_sample(args.sample)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"sample file is malformed: {exc}") from None
    svg = emit_leaf_plot(sample, args.proj, chash, seed)
    if args.out:
        Path(args.out).write_text(svg, encoding="utf-8")
    else:
        sys.stdout.write(svg)
    return EXIT_OK


def build_parser():
    from .suites import SUITES

    p = argparse.ArgumentParser(prog="foliation-lab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run verification suites for a scenario")
    r.add_argument("--config", required=True, help="scenario JSON file or builtin:NAME")
    r.add_argument("--suite", default="all", choices=list(SUITES) + ["all"])
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--out", default=None, help="output directory")
    r.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: FOLIATION_LAB_THREADS or the core count)")
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("validate", help="validate a scenario config")
    v.add_argument("--config", required=True)
    v.set_defaults(fn=cmd_validate)

    pl = sub.add_parser("plot", help="SVG projection of a saved leaf sample")
    pl.add_argument("--sample", required=True)
    pl.add_argument("--proj", default=None, help='coordinates, e.g. "v0,v1" or "x0,v0,v1"')
    pl.add_argument("--out", default=None, help="SVG file (default: stdout)")
    pl.set_defaults(fn=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        return _config_error(ConfigError("--threads must be a positive integer", "/threads"))
    try:
        return args.fn(args)
    except ConfigError as exc:
        return _config_error(exc)
    except FoliationLabError as exc:
        if args.command == "plot":
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except Exception as exc:  # noqa: BLE001 - exit codes are limited to 0/1/2
        log.exception("unexpected failure: %s", exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
