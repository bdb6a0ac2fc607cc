"""
navlab - Metrics Utils
Per-episode CSV records, run aggregates, comparison tables and learning curves.

Success: an episode with at least one arrival that did not end in a collision.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from utils.errors import ConfigError  # noqa: E402

# ===================
# CONFIG
# ===================

CSV_HEADER = ['episode', 'cum_reward', 'steps', 'arrivals', 'event', 'wall_ms']
METRICS_FILE = 'metrics.csv'
DEFAULT_WINDOW = 10


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    cum_reward: float
    steps: int
    arrivals: int
    event: str
    wall_ms: int = 0

    @property
    def success(self) -> bool:
        return self.arrivals >= 1 and self.event != 'collided'

    def to_row(self) -> list:
        return [self.episode, f'{self.cum_reward:.6f}', self.steps, self.arrivals, self.event, self.wall_ms]


# ===================
# CSV
# ===================

class MetricsWriter:
    """Writes the header once, then one complete line per finished episode."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, 'w', newline='')
        self._csv = csv.writer(self._fh, lineterminator='\n')
        self._csv.writerow(CSV_HEADER)
        self._fh.flush()
        self.rows = 0

    def write(self, record: EpisodeRecord):
        self._csv.writerow(record.to_row())
        self._fh.flush()
        self.rows += 1

    def close(self):
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path) -> list:
    path = Path(path)
    try:
        with open(path, newline='') as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CSV_HEADER:
                raise ConfigError(f'{path}: unexpected header {reader.fieldnames}')
            return [
                EpisodeRecord(
                    episode=int(row['episode']), cum_reward=float(row['cum_reward']),
                    steps=int(row['steps']), arrivals=int(row['arrivals']),
                    event=row['event'], wall_ms=int(row['wall_ms']),
                )
                for row in reader
            ]
    except OSError as e:
        raise ConfigError(f'Cannot read metrics {path}: {e}')
    except (KeyError, ValueError) as e:
        raise ConfigError(f'{path}: malformed row ({e})')


# ===================
# AGGREGATES
# ===================

def summarize(records: list, label: str = '', step_budget: int = 0) -> dict:
    """Avg. reward, episode count, success %, avg. steps/episode (plus budget view)."""
    if not records:
        raise ConfigError(f'No episodes to summarize for {label or "run"}')
    n = len(records)
    steps = [r.steps for r in records]
    in_budget = int(np.searchsorted(np.cumsum(steps), step_budget, side='right')) if step_budget else n
    return {
        'label': label,
        'avg_reward': float(np.mean([r.cum_reward for r in records])),
        'episodes': n,
        'success_pct': 100.0 * sum(r.success for r in records) / n,
        'avg_steps': float(np.mean(steps)),
        'total_steps': int(sum(steps)),
        'episodes_in_budget': in_budget,
    }


def final_window_success(records: list, window: int = 50) -> float:
    tail = records[-window:]
    return 100.0 * sum(r.success for r in tail) / len(tail) if tail else 0.0


def markdown_table(reports: list) -> str:
    """Rows sorted by success %, highest first."""
    ordered = sorted(reports, key=lambda r: -r['success_pct'])
    lines = [
        '| Run | Avg. Reward | Episodes | Success % | Avg. Steps/Ep | Episodes in budget |',
        '|---|---|---|---|---|---|',
    ]
    for r in ordered:
        lines.append(
            f"| {r['label']} | {r['avg_reward']:.2f} | {r['episodes']} | {r['success_pct']:.2f} "
            f"| {r['avg_steps']:.2f} | {r['episodes_in_budget']} |"
        )
    return '\n'.join(lines) + '\n'


# ===================
# LEARNING CURVES
# ===================

def moving_average(values, window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Trailing full-window means; empty when there are fewer values than the window."""
    values = np.asarray(values, dtype=np.float64)
    if window <= 0:
        raise ConfigError(f'window must be positive, got {window}')
    if len(values) < window:
        return np.zeros(0)
    return np.convolve(values, np.ones(window) / window, mode='valid')


def learning_curve_figure(curves: list, window: int = DEFAULT_WINDOW, average: bool = True, title: str = ''):
    """
    curves: [(label, records), ...]. One run draws the raw reward and its
    moving average; several runs share the axes, one color per run.
    """
    fig, ax = plt.subplots(figsize=(7, 4))
    overlay = len(curves) > 1
    for i, (label, records) in enumerate(curves):
        episodes = np.array([r.episode for r in records])
        rewards = np.array([r.cum_reward for r in records])
        raw_color, avg_color = (f'C{i}', f'C{i}') if overlay else ('tab:blue', 'tab:orange')
        ax.plot(episodes, rewards, color=raw_color, linewidth=1.0, alpha=0.35 if overlay else 1.0,
                label=label if overlay else 'cumulative reward')
        if average:
            smooth = moving_average(rewards, window)
            if len(smooth):
                ax.plot(episodes[window - 1:], smooth, color=avg_color, linewidth=2.0,
                        label=f'{label} ({window})' if overlay else f'moving average ({window})')
    ax.set_xlabel('Episode')
    ax.set_ylabel('Cumulative reward')
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc='best', frameon=False)
    fig.tight_layout()
    return fig


def emit_learning_curve(metrics_paths, out_path, window: int = DEFAULT_WINDOW, average: bool = True,
                        labels: Optional[list] = None) -> dict:
    """
    Write one SVG for one metrics CSV or several overlaid. Labels default to
    the run directory names.
    """
    paths = [Path(metrics_paths)] if isinstance(metrics_paths, (str, Path)) else [Path(p) for p in metrics_paths]
    if not paths:
        raise ConfigError('No metrics CSV provided')
    labels = list(labels) if labels else [p.parent.name or p.stem for p in paths]
    if len(labels) != len(paths):
        raise ConfigError(f'{len(labels)} label(s) for {len(paths)} metrics file(s)')

    curves = []
    for label, path in zip(labels, paths):
        records = read_metrics(path)
        if len(records) < 2:
            raise ConfigError(f'{path}: need at least 2 episodes to plot, got {len(records)}')
        curves.append((label, records))

    title = labels[0] if len(curves) == 1 else 'Learning curves'
    # fixed salt and no date keep the SVG byte-stable
    with plt.rc_context({'svg.hashsalt': 'navlab'}):
        fig = learning_curve_figure(curves, window=window, average=average, title=title)
        fig.savefig(out_path, format='svg', metadata={'Date': None})
    plt.close(fig)

    runs = []
    for label, records in curves:
        smooth = moving_average([r.cum_reward for r in records], window) if average else []
        runs.append({'label': label, 'points': len(records), 'average_points': len(smooth)})
    return {
        'points': sum(r['points'] for r in runs),
        'average_points': sum(r['average_points'] for r in runs),
        'runs': runs,
    }
