"""
navlab - Run Utils
Shared plumbing for the service handlers: tagged logging, error-to-result
mapping, and the run.json / report.md artifacts.
"""

import json
import traceback
from pathlib import Path

from utils import config
from utils.errors import NavlabError
from utils.metrics import markdown_table

RUN_FILE = 'run.json'
REPORT_FILE = 'report.md'


# ===================
# LOGGING
# ===================

def log(tag: str, message: str):
    print(f"[{tag}] {message}")


def log_episode(tag: str, message: str, quiet: bool = False):
    """Per-episode progress; silenced by --quiet or NAVLAB_QUIET."""
    if not (quiet or config.QUIET):
        log(tag, message)


# ===================
# RESULTS
# ===================

def failure(tag: str, e: Exception) -> dict:
    """Result dict for a failed handler; code is the CLI exit code."""
    if isinstance(e, NavlabError):
        log(tag, f"{type(e).__name__}: {e}")
        return {'success': False, 'error': str(e), 'kind': type(e).__name__, 'code': e.exit_code}
    log(tag, f"Error: {e}")
    traceback.print_exc()
    return {'success': False, 'error': str(e), 'kind': type(e).__name__, 'code': 1}


# ===================
# ARTIFACTS
# ===================

def write_run_json(out_dir: Path, payload: dict) -> Path:
    path = Path(out_dir) / RUN_FILE
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + '\n')
    return path


def read_run_json(out_dir: Path) -> dict:
    path = Path(out_dir) / RUN_FILE
    if not path.exists():
        return {}
    return json.loads(path.read_text())


def write_report(path: Path, title: str, summary: dict, extra: dict = None) -> Path:
    lines = [f'# {title}', '', markdown_table([summary]), '']
    lines.append(f"- Total steps: {summary['total_steps']}")
    lines.append(f"- Episodes within step budget: {summary['episodes_in_budget']}")
    for key, value in (extra or {}).items():
        lines.append(f'- {key}: {value}')
    path = Path(path)
    path.write_text('\n'.join(lines) + '\n')
    return path
