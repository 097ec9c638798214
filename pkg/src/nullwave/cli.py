"""Command line entry point: ``nullwave {run,classify,sweep,report}``.

Exit codes: 0 completed, 2 blow-up (an expected outcome for blow-up
scenarios), 1 configuration or runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import yaml

from .asymptotic import ClassifyParams, NonlinearitySyntaxError, classify, parse_nonlinearity
from .config import ConfigError, RunConfig, load_run_config, load_sweep_config
from .io import dumps_json, fmt_float, write_csv
from .pipeline import SUMMARY_FIELDS, run_pipeline, summary_row

log = logging.getLogger("nullwave")

SWEEP_FIELDS = ("epsilon", "exit_code") + tuple(f for f in SUMMARY_FIELDS if f != "epsilon")


def _eps_dir(eps: float) -> str:
    return "eps_" + fmt_float(eps)


def cmd_run(config: str, out: str | None = None) -> int:
    try:
        cfg = load_run_config(config)
    except (ConfigError, OSError) as exc:
        log.error("%s", exc)
        return 1
    out_dir = out if out is not None else cfg.output.directory
    try:
        code, summary = run_pipeline(cfg, out_dir)
    except Exception as exc:  # noqa: BLE001 - any failure is an Error outcome
        log.error("run failed: %s: %s", type(exc).__name__, exc)
        return 1
    log.info("termination %s; summary in %s", summary["termination"], Path(out_dir) / "summary.json")
    if summary["t_star"] is not None:
        log.info("t* = %s, r* = %s", fmt_float(summary["t_star"]), fmt_float(summary["r_star"]))
    return code


def _classify_params(path: str | None) -> ClassifyParams:
    if path is None:
        return ClassifyParams()
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ConfigError("classify parameters must be a mapping", None, path)
    try:
        return ClassifyParams(**data)
    except TypeError as exc:
        raise ConfigError(str(exc), None, path) from None


def cmd_classify(spec: str, params_path: str | None = None, stream=None) -> int:
    stream = stream if stream is not None else sys.stdout
    p = Path(spec)
    text = p.read_text() if p.is_file() else spec
    try:
        nl = parse_nonlinearity(text)
        params = _classify_params(params_path)
    except (NonlinearitySyntaxError, ConfigError, OSError) as exc:
        log.error("%s", exc)
        return 1
    stream.write(dumps_json(classify(nl, params).to_dict()))
    return 0


def _sweep_child(args: tuple[RunConfig, str]) -> tuple[int, dict | None, str | None]:
    cfg, out_dir = args
    try:
        code, summary = run_pipeline(cfg, out_dir)
        return code, summary, None
    except Exception as exc:  # noqa: BLE001
        return 1, None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(config: str, out: str | None = None, parallel: int | None = None) -> int:
    try:
        sw = load_sweep_config(config)
    except (ConfigError, OSError) as exc:
        log.error("%s", exc)
        return 1
    root = Path(out if out is not None else sw.base.output.directory)
    root.mkdir(parents=True, exist_ok=True)
    jobs = [(sw.base.with_epsilon(e), str(root / _eps_dir(e))) for e in sw.epsilons]
    workers = parallel if parallel is not None else sw.parallel
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_child, jobs))
    else:
        results = [_sweep_child(j) for j in jobs]
    rows, failed = [], False
    for e, (code, summary, err) in zip(sw.epsilons, results):
        if summary is None:
            failed = True
            log.error("epsilon %s failed: %s", fmt_float(e), err)
            summary = {"epsilon": e, "termination": "Error"}
        failed |= code == 1
        row = summary_row(summary)
        rows.append([row[0], code] + row[1:])
    write_csv(root / "sweep.csv", SWEEP_FIELDS, rows)
    log.info("sweep table in %s", root / "sweep.csv")
    return 1 if failed else 0


def cmd_report(run_dirs: Sequence[str], out: str) -> int:
    rows = []
    for d in run_dirs:
        p = Path(d) / "summary.json"
        try:
            summary = json.loads(p.read_text())
        except (OSError, ValueError) as exc:
            log.error("cannot read %s: %s", p, exc)
            return 1
        rows.append([str(d)] + summary_row(summary))
    write_csv(out, ("run",) + SUMMARY_FIELDS, rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nullwave", description="Radial quasilinear wave laboratory.")
    ap.add_argument("--quiet", action="store_true", help="only report errors")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one configured scenario")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None, help="output directory (overrides output.directory)")

    c = sub.add_parser("classify", help="classify a quadratic nonlinearity")
    c.add_argument("spec", help="triples 'alpha,beta,coeff' separated by ';' or newlines, or a file holding them")
    c.add_argument("--config", default=None, help="YAML file with classification parameters")

    s = sub.add_parser("sweep", help="run a configuration over several epsilon values")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None)
    s.add_argument("--parallel", type=int, default=None)

    rp = sub.add_parser("report", help="aggregate run directories into one CSV")
    rp.add_argument("runs", nargs="+")
    rp.add_argument("--out", required=True)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s")
    if args.command == "run":
        return cmd_run(args.config, args.out)
    if args.command == "classify":
        return cmd_classify(args.spec, args.config)
    if args.command == "sweep":
        if args.parallel is not None and args.parallel < 1:
            log.error("--parallel must be >= 1")
            return 1
        return cmd_sweep(args.config, args.out, args.parallel)
    return cmd_report(args.runs, args.out)


if __name__ == "__main__":
    sys.exit(main())
