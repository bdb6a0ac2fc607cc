"""
Eval Service
Replays a checkpoint with the deterministic policy. No learning.

GO IN → LOAD CHECKPOINT → RUN EPISODES → GET OUT
"""

import csv
from dataclasses import replace
from pathlib import Path

from utils import runs
from utils.agents import RolloutWorker, load_agent
from utils.config import build_run_config, check_request_fields
from utils.errors import ConfigError
from utils.metrics import MetricsWriter, summarize
from utils.worlds import load_world

EVAL_FILE = 'eval.csv'
EVAL_REPORT_FILE = 'eval_report.md'
TRACE_FILE = 'trace.csv'
TRACE_HEADER = ['episode', 'step', 'x', 'y', 'yaw', 'a_lin', 'a_ang']
REQUEST_KEYS = ('checkpoint', 'algo', 'world', 'reward', 'episodes', 'seed', 'out', 'trace')


def _write_trace(path: Path, traces: list):
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(TRACE_HEADER)
        for episode, trace in enumerate(traces, start=1):
            for step, (pose, action) in enumerate(trace, start=1):
                writer.writerow([episode, step, repr(pose.x), repr(pose.y), repr(pose.yaw),
                                 repr(float(action[0])), repr(float(action[1]))])


# ===================
# MAIN HANDLER
# ===================

def process_eval(data):
    """
    Evaluate a checkpoint.

    data: checkpoint (required), world, episodes (>= 1), seed, reward,
    algo (expected architecture), out, trace, quiet, plus env.*/reward.* keys.
    """
    data = dict(data or {})
    quiet = bool(data.pop('quiet', False))

    print(f"[eval] === PROCESSING ===")

    try:
        check_request_fields(data, REQUEST_KEYS)
        checkpoint = data.get('checkpoint')
        if not checkpoint:
            raise ConfigError('No checkpoint provided')
        episodes = data.get('episodes', 10)
        if episodes is None:
            raise ConfigError('eval needs at least 1 episode, got None')

        agent = load_agent(checkpoint, expected_algo=data.get('algo'))
        print(f"[eval] Checkpoint: {checkpoint} ({agent.arch})")

        overrides = {k: v for k, v in data.items() if '.' in k}
        overrides.update({
            'algo': agent.algo,
            'world': data.get('world') or 'simple.world',
            'reward': data.get('reward'),
            'seed': data.get('seed'),
            'episodes': episodes,
        })
        cfg = build_run_config({}, overrides)
        world = load_world(cfg.world)
        env_cfg = cfg.make_env_config(world)

        out_dir = Path(data.get('out') or Path(checkpoint).parent)
        out_dir.mkdir(parents=True, exist_ok=True)
        print(f"[eval] World: {cfg.world} | episodes: {cfg.episodes} | seed: {cfg.seed}")

        worker = RolloutWorker(env_cfg, seed=cfg.seed * 1000)
        records, traces = [], []
        with MetricsWriter(out_dir / EVAL_FILE) as writer:
            for i in range(cfg.episodes):
                trace = [] if data.get('trace') else None
                record = worker.run_greedy_episode(agent, trace)
                record = replace(record, episode=i + 1)
                records.append(record)
                writer.write(record)
                if trace is not None:
                    traces.append(trace)
                runs.log_episode(
                    'eval',
                    f"Episode {record.episode} | reward {record.cum_reward:.2f} | steps {record.steps} "
                    f"| arrivals {record.arrivals} | {record.event}",
                    quiet,
                )

        if data.get('trace'):
            _write_trace(out_dir / TRACE_FILE, traces)

        summary = summarize(records, label=f'eval:{agent.arch}', step_budget=cfg.step_budget)
        runs.write_report(out_dir / EVAL_REPORT_FILE, f'Evaluation: {Path(checkpoint).name}', summary, {
            'Algorithm': agent.arch,
            'World': cfg.world,
            'Seed': cfg.seed,
        })

        print(f"[eval] Success: {summary['success_pct']:.2f}% | avg reward {summary['avg_reward']:.2f}")
        print(f"[eval] === COMPLETE ===")
        return {
            'success': True,
            'out': str(out_dir),
            'episodes': len(records),
            'summary': summary,
            'code': 0,
        }

    except Exception as e:
        return runs.failure('eval', e)
