"""
Plot Service
Learning curve SVG from one metrics CSV, or several overlaid on shared axes.

GO IN → READ CSV(S) → DRAW → GET OUT
"""

from pathlib import Path

from utils import runs
from utils.errors import ConfigError
from utils.metrics import DEFAULT_WINDOW, METRICS_FILE, emit_learning_curve


def _metrics_path(source) -> Path:
    path = Path(source)
    return path / METRICS_FILE if path.is_dir() else path


def process_plot(data):
    """
    data: metrics (CSV path or run directory, or a list of them), labels (one per
    metrics entry, default the run directory names), out (SVG path; defaults
    next to the CSV for a single run and is required for several), window
    (moving average, default 10), average (default true).
    """
    data = data or {}
    print(f"[plot] === PROCESSING ===")

    try:
        source = data.get('metrics')
        if not source:
            raise ConfigError('No metrics CSV provided')
        sources = [source] if isinstance(source, (str, Path)) else list(source)
        metrics = [_metrics_path(s) for s in sources]
        if data.get('out'):
            out = Path(data['out'])
        elif len(metrics) == 1:
            out = metrics[0].with_suffix('.svg')
        else:
            raise ConfigError(f'Plotting {len(metrics)} runs needs an explicit out path')
        window = int(data.get('window') or DEFAULT_WINDOW)
        average = data.get('average', True)

        result = emit_learning_curve(metrics, out, window=window, average=bool(average),
                                     labels=data.get('labels'))
        for run in result['runs']:
            print(f"[plot] {run['label']}: {run['points']} episodes")
        print(f"[plot] {len(result['runs'])} curve(s) -> {out}")
        print(f"[plot] === COMPLETE ===")
        return {'success': True, 'out': str(out), **result, 'code': 0}

    except Exception as e:
        return runs.failure('plot', e)
