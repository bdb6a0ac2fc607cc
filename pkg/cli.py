"""
navlab - CLI
Command-line front door to the same handlers app.py serves over HTTP.

    python cli.py train --algo ppo_res --world simple.world --reward basic --seed 1 --episodes 5
    python cli.py eval runs/ppo_res-simple-basic-s1/checkpoint.bin --episodes 20
    python cli.py compare runs/
    python cli.py plot runs/ppo_res-simple-basic-s1
    python cli.py plot runs/ppo_res-complex-basic-s1 runs/ppo_res-complex-advanced-s1 --out rewards.svg
    python cli.py world check complex.world

Exit codes: 0 ok, 1 unexpected failure, 2 config/world/validation error, 3 NaN abort.
"""

import argparse
import sys

from services.compare.handler import process_compare
from services.eval.handler import process_eval
from services.plot.handler import process_plot
from services.train.handler import process_train
from services.world.handler import process_world_check
from utils.config import ALGOS
from utils.rewards import REWARD_KINDS


def _overrides(pairs: list) -> dict:
    """--set key=value pairs as dotted config keys."""
    out = {}
    for pair in pairs or []:
        key, sep, value = pair.partition('=')
        if not sep:
            raise argparse.ArgumentTypeError(f'--set expects key=value, got {pair!r}')
        out[key.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='navlab', description='Mapless navigation lab.')
    sub = parser.add_subparsers(dest='command', required=True)

    train = sub.add_parser('train', help='train one agent')
    train.add_argument('--algo', choices=ALGOS)
    train.add_argument('--world')
    train.add_argument('--reward', choices=REWARD_KINDS)
    train.add_argument('--seed', type=int)
    train.add_argument('--episodes', type=int)
    train.add_argument('--config', help='key = value config file')
    train.add_argument('--out', help='run directory (default under NAVLAB_OUTPUT_ROOT)')
    train.add_argument('--workers', type=int, help='parallel rollout workers (non-deterministic)')
    train.add_argument('--set', action='append', metavar='KEY=VALUE', help='override any config key')
    train.add_argument('--quiet', action='store_true')

    ev = sub.add_parser('eval', help='evaluate a checkpoint with the deterministic policy')
    ev.add_argument('checkpoint')
    ev.add_argument('--algo', choices=ALGOS, help='refuse checkpoints of another architecture')
    ev.add_argument('--world')
    ev.add_argument('--reward', choices=REWARD_KINDS)
    ev.add_argument('--episodes', type=int, default=10)
    ev.add_argument('--seed', type=int)
    ev.add_argument('--out')
    ev.add_argument('--trace', action='store_true', help='also write trace.csv')
    ev.add_argument('--set', action='append', metavar='KEY=VALUE')
    ev.add_argument('--quiet', action='store_true')

    compare = sub.add_parser('compare', help='markdown table over run directories')
    compare.add_argument('runs', nargs='+')
    compare.add_argument('--out')

    plot = sub.add_parser('plot', help='learning curve SVG')
    plot.add_argument('metrics', nargs='+', help='metrics CSV or run directory; several are overlaid')
    plot.add_argument('--label', dest='labels', action='append', help='curve label, once per metrics argument')
    plot.add_argument('--out')
    plot.add_argument('--window', type=int, default=10)
    plot.add_argument('--no-average', dest='average', action='store_false')

    world = sub.add_parser('world', help='world file tools')
    world_sub = world.add_subparsers(dest='world_command', required=True)
    check = world_sub.add_parser('check', help='parse and audit a world file')
    check.add_argument('world')
    check.add_argument('--robot-radius', type=float)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        sets = _overrides(getattr(args, 'set', None))
    except argparse.ArgumentTypeError as e:
        print(f"[cli] {e}", file=sys.stderr)
        return 2

    if args.command == 'train':
        result = process_train({
            'algo': args.algo, 'world': args.world, 'reward': args.reward, 'seed': args.seed,
            'episodes': args.episodes, 'config': args.config, 'out': args.out,
            'workers': args.workers, 'deterministic': False if args.workers and args.workers > 1 else None,
            'quiet': args.quiet, **sets,
        })
    elif args.command == 'eval':
        result = process_eval({
            'checkpoint': args.checkpoint, 'algo': args.algo, 'world': args.world, 'reward': args.reward,
            'episodes': args.episodes, 'seed': args.seed, 'out': args.out, 'trace': args.trace,
            'quiet': args.quiet, **sets,
        })
    elif args.command == 'compare':
        result = process_compare({'runs': args.runs, 'out': args.out})
        if result['success']:
            print(result['table'], end='')
    elif args.command == 'plot':
        result = process_plot({'metrics': args.metrics, 'labels': args.labels, 'out': args.out,
                               'window': args.window, 'average': args.average})
    else:
        result = process_world_check({'world': args.world, 'robot_radius': args.robot_radius})

    if not result['success'] and result.get('error'):
        print(f"[cli] {result['error']}", file=sys.stderr)
    return result.get('code', 0 if result['success'] else 1)


if __name__ == '__main__':
    sys.exit(run())
