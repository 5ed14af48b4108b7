"""Command line driver: ``q1prep {rate,errors,analytic,logical,compare} --config FILE``.

Rows are buffered and written in grid order once every point is done, so the
output file depends only on the config and the seed.  Grid point ``g`` draws
its Monte-Carlo streams from ``stream(seed, g, chunk)``.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time

from . import __version__
from .analytic import factory_rate_analytic, prep_error_probs_analytic
from .config import ConfigError, ExperimentConfig, load
from .factory import estimate_error_probs_mc, estimate_rate_mc
from .logical import logical_error_rate, steane_input_probs
from .noise import NoiseParams, stream
from .prep import BlockSpec, run_block

log = logging.getLogger("q1prep")

EXIT_CONFIG = 2
EXIT_IO = 3

# keeps decoder streams clear of the (grid point, chunk) keys
_DECODER_KEY = 1 << 32

COLUMNS = {
    "rate": ["p", "T", "rate_mc", "stderr", "rate_analytic"],
    "compare": ["p", "T", "rate_mc", "stderr", "rate_analytic", "rel_dev"],
    "analytic": ["p", "T", "rate_analytic", "p_X_analytic", "p_Z_analytic"],
    "errors": ["p", "T", "p_X_mc", "stderr_X", "p_Z_mc", "stderr_Z",
               "p_X_analytic", "p_Z_analytic", "successes", "weights"],
    "logical": ["p", "p_X_prep", "p_Z_prep", "q_x", "q_z", "P_X_L", "P_Z_L", "P_e_L",
                "mapping", "method", "P_e_L_lower", "P_e_L_upper", "rate_analytic", "prep_source"],
}
TRAILER = ["config_hash", "version"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _grid(cfg: ExperimentConfig):
    g = 0
    for p in cfg.p_grid:
        for T in cfg.T_grid:
            yield g, p, T
            g += 1


def _trace_block(cfg: ExperimentConfig, p: float) -> None:
    code = cfg.code
    spec = BlockSpec.for_code(code, 0, cfg.schedule.levels[0])
    log.debug("trace of one B_{0->%d} run at p=%r", spec.j, p)
    run_block(spec, None, stream(cfg.seed, _DECODER_KEY - 1), NoiseParams(p), trace=log.debug)


def cmd_rate(cfg: ExperimentConfig, compare: bool = False) -> list[list]:
    code, sched = cfg.code, cfg.schedule
    rows = []
    for g, p, T in _grid(cfg):
        t0 = time.perf_counter()
        est = estimate_rate_mc(code, T, sched, p, cfg.trials, cfg.seed, cfg.threads, key=(g,))
        ana = float(factory_rate_analytic(code, sched, p))
        row = [p, T, est.rate, est.stderr, ana]
        if compare:
            row.append(abs(est.rate - ana) / est.rate if est.rate > 0 else None)
        log.info("p=%g T=%d rate_mc=%.5f +- %.5f analytic=%.5f (%.1fs)",
                 p, T, est.rate, est.stderr, ana, time.perf_counter() - t0)
        rows.append(row)
    return rows


def cmd_analytic(cfg: ExperimentConfig) -> list[list]:
    code, sched = cfg.code, cfg.schedule
    rows = []
    for _, p, T in _grid(cfg):
        px, pz = prep_error_probs_analytic(code, p)
        rows.append([p, T, float(factory_rate_analytic(code, sched, p)), float(px), float(pz)])
    return rows


def cmd_errors(cfg: ExperimentConfig) -> list[list]:
    code, sched = cfg.code, cfg.schedule
    rows = []
    for g, p, T in _grid(cfg):
        est = estimate_error_probs_mc(code, T, sched, p, cfg.trials, cfg.seed, cfg.threads,
                                      weights=cfg.weights, key=(g,))
        px, pz = prep_error_probs_analytic(code, p)
        if est.no_sample:
            log.warning("p=%g T=%d: no accepted state, error columns left empty", p, T)
        rows.append([p, T, est.p_X, est.stderr_X, est.p_Z, est.stderr_Z,
                     float(px), float(pz), est.successes, cfg.weights])
    return rows


def cmd_logical(cfg: ExperimentConfig) -> list[list]:
    """Preparation errors, decoder inputs and logical rates for each ``p``.

    Uses the largest factory size of ``T_grid`` for the rate column and, with
    ``prep_source: mc``, for the sampled preparation errors.
    """
    code, sched = cfg.code, cfg.schedule
    T = max(cfg.T_grid)
    rows = []
    for g, p in enumerate(cfg.p_grid):
        if cfg.prep_source == "mc":
            est = estimate_error_probs_mc(code, T, sched, p, cfg.trials, cfg.seed, cfg.threads,
                                          weights=cfg.weights, key=(g,))
            if est.no_sample:
                raise ConfigError(f"no accepted state at p={p}; raise trials or use prep_source: analytic")
            px, pz = est.p_X, est.p_Z
        else:
            px, pz = (float(v) for v in prep_error_probs_analytic(code, p))
        dec = steane_input_probs(p, px, pz, cfg.mapping)
        rng = stream(cfg.seed, _DECODER_KEY + g)
        lr = logical_error_rate(code, dec, cfg.samples, rng, cfg.method)
        lo, hi = lr.bracket
        rate = float(factory_rate_analytic(code, sched, p))
        log.info("p=%g q_x=%.3e q_z=%.3e P_e_L=%.3e [%s]", p, dec.q_x, dec.q_z, lr.P_e_L, lr.method)
        rows.append([p, px, pz, dec.q_x, dec.q_z, lr.P_X_L, lr.P_Z_L, lr.P_e_L,
                     dec.mapping, lr.method, lo, hi, rate, cfg.prep_source])
    return rows


def render_csv(mode: str, rows: list[list], cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS[mode] + TRAILER)
    digest = cfg.digest()
    for r in rows:
        w.writerow([_fmt(v) for v in r] + [digest, __version__])
    return buf.getvalue()


def run(mode: str, cfg: ExperimentConfig) -> str:
    if cfg.verbose >= 2:
        _trace_block(cfg, cfg.p_grid[0])
    if mode in ("rate", "compare"):
        rows = cmd_rate(cfg, compare=mode == "compare")
    elif mode == "analytic":
        rows = cmd_analytic(cfg)
    elif mode == "errors":
        rows = cmd_errors(cfg)
    else:
        rows = cmd_logical(cfg)
    return render_csv(mode, rows, cfg)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="q1prep", description="Quantum polar state preparation experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="mode", required=True)
    helps = {
        "rate": "Monte-Carlo factory rate with the analytic estimate alongside",
        "errors": "Monte-Carlo residual X/Z error probabilities of accepted states",
        "analytic": "closed-form rate and error estimates only",
        "logical": "preparation errors through to logical error rates",
        "compare": "rate mode plus relative deviation of analytic from MC",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=None, help="worker threads for MC chunks")
        sp.add_argument("--out", default=None, help="output CSV (default: config output, else stdout)")
        sp.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v progress, -vv also a fault-by-fault trace of one block")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s", force=True)
    try:
        cfg = load(args.config, seed=args.seed, threads=args.threads, output=args.out,
                   verbose=args.verbose, mode=args.mode)
    except OSError as exc:
        log.error("cannot read config %s: %s", args.config, exc)
        return EXIT_IO
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        text = run(args.mode, cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    if cfg.output:
        try:
            with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            log.error("cannot write %s: %s", cfg.output, exc)
            return EXIT_IO
        log.info("wrote %s", cfg.output)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
