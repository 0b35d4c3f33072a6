"""Run a configured regime grid and write its report."""

import logging
import os
from concurrent.futures import ProcessPoolExecutor

from .bundle import write_atomic
from .config import load_data
from .eval import ExperimentReport, run_regime

log = logging.getLogger(__name__)


def _job(args):
    data, spec, settings = args
    return run_regime(data, spec, settings)


def default_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def run_experiment(cfg, workers=None):
    """Execute every regime row of ``cfg``; results keep config order whatever the worker count."""
    data = load_data(cfg)
    workers = workers or cfg.workers or default_workers()
    jobs = [(data, spec, cfg.settings) for spec in cfg.regimes]
    log.info("running %d regime rows on %d worker(s)", len(jobs), min(workers, len(jobs)))
    if workers <= 1 or len(jobs) <= 1:
        results = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_job, jobs))
    return ExperimentReport.build(results, cfg.baseline)


def write_report(report, out_dir):
    write_atomic(out_dir / "report.json", report.to_json())
    write_atomic(out_dir / "report.txt", report.to_text())
