"""
Compare Service
Aggregates completed runs into one markdown table, best success % first.

GO IN → READ METRICS → TABULATE → GET OUT
"""

from pathlib import Path

from utils import runs
from utils.config import STEP_BUDGET
from utils.errors import ConfigError
from utils.metrics import METRICS_FILE, markdown_table, read_metrics, summarize


def _run_dirs(path: Path) -> list:
    """The directory itself if it holds a run, else its immediate run subdirectories."""
    if not path.is_dir():
        raise ConfigError(f'Not a directory: {path}')
    if (path / METRICS_FILE).exists():
        return [path]
    found = sorted(p for p in path.iterdir() if p.is_dir() and (p / METRICS_FILE).exists())
    if not found:
        raise ConfigError(f'No completed runs in {path} (no {METRICS_FILE})')
    return found


def summarize_run(run_dir: Path) -> dict:
    meta = runs.read_run_json(run_dir)
    budget = meta.get('config', {}).get('run.step_budget', STEP_BUDGET)
    return summarize(read_metrics(run_dir / METRICS_FILE), label=run_dir.name, step_budget=budget)


# ===================
# MAIN HANDLER
# ===================

def process_compare(data):
    """
    data: runs (list of run directories, or parents of run directories), out (optional .md path).
    """
    data = data or {}
    print(f"[compare] === PROCESSING ===")

    try:
        paths = data.get('runs') or []
        if not paths:
            raise ConfigError('No run directories provided')

        run_dirs = [d for p in paths for d in _run_dirs(Path(p))]
        reports = [summarize_run(d) for d in run_dirs]
        table = markdown_table(reports)
        print(f"[compare] Runs: {len(reports)}")

        if data.get('out'):
            Path(data['out']).write_text(table)
            print(f"[compare] Wrote {data['out']}")

        print(f"[compare] === COMPLETE ===")
        return {'success': True, 'table': table, 'reports': reports, 'code': 0}

    except Exception as e:
        return runs.failure('compare', e)
