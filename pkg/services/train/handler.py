"""
Train Service
Runs one training job: world + algorithm + reward + seed → metrics, checkpoints, report.

GO IN → TRAIN → WRITE ARTIFACTS → GET OUT

Steps:
1. Resolve config (defaults < config file < request fields)
2. Load world, build env config and agent
3. Episode loop (PPO: rollout then update; DDPG: update every step after warmup)
4. Metrics CSV row per episode, checkpoint every N episodes and at the end
5. run.json + report.md
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from utils import runs
from utils.agents import DDPGAgent, PPOAgent, RolloutWorker, build_agent, save_agent
from utils.algos import DDPG_EXPLORE, TrajectoryBuffer
from utils.config import build_run_config, check_request_fields, format_config, load_config
from utils.metrics import METRICS_FILE, MetricsWriter, final_window_success, summarize
from utils.worlds import load_world

CHECKPOINT_FILE = 'checkpoint.bin'
CONFIG_FILE = 'config.conf'
REQUEST_KEYS = ('algo', 'world', 'reward', 'seed', 'episodes', 'out', 'workers', 'deterministic',
                'checkpoint_every', 'step_budget')


# ===================
# EPISODE BOOKKEEPING
# ===================

class _Recorder:
    """Numbers episodes, writes CSV rows, logs, and checkpoints on cadence."""

    def __init__(self, cfg, agent, writer: MetricsWriter, quiet: bool):
        self.cfg = cfg
        self.agent = agent
        self.writer = writer
        self.quiet = quiet
        self.records = []
        self.checkpoint = cfg.out_dir / CHECKPOINT_FILE

    @property
    def remaining(self) -> int:
        return self.cfg.episodes - len(self.records)

    def add(self, record):
        record = replace(record, episode=len(self.records) + 1)
        self.records.append(record)
        self.writer.write(record)
        runs.log_episode(
            'train',
            f"Episode {record.episode} | reward {record.cum_reward:.2f} | steps {record.steps} "
            f"| arrivals {record.arrivals} | {record.event}",
            self.quiet,
        )
        if record.episode % self.cfg.checkpoint_every == 0:
            save_agent(self.checkpoint, self.agent)


# ===================
# LOOPS
# ===================

def _train_ppo(cfg, env_cfg, agent: PPOAgent, recorder: _Recorder) -> list:
    workers = [RolloutWorker(env_cfg, seed=cfg.seed * 1000 + i, record_wall=not cfg.deterministic)
               for i in range(cfg.workers)]
    share = -(-cfg.ppo.rollout // cfg.workers)
    buffer = TrajectoryBuffer()
    updates = []

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        while recorder.remaining > 0:
            if cfg.workers == 1:
                collected = [workers[0].collect_ppo(agent, cfg.ppo.rollout - len(buffer), recorder.remaining)]
            else:
                budget = recorder.remaining
                collected = list(pool.map(lambda w: w.collect_ppo(agent, share, budget), workers))

            for segment, records in collected:
                buffer.extend(segment)
                for record in records[:recorder.remaining]:
                    recorder.add(record)

            if len(buffer) >= cfg.ppo.rollout:
                stats = agent.update(buffer)
                updates.append(stats)
                runs.log_episode(
                    'train',
                    f"PPO update {len(updates)} | ratio {stats['first_mean_ratio']:.4f} "
                    f"| clip {stats['clip_fraction']:.3f} | kl {stats['approx_kl']:.5f}",
                    recorder.quiet,
                )
                buffer = TrajectoryBuffer()
    # a partial buffer at the end of the run is dropped
    return updates


def _train_ddpg(cfg, env_cfg, agent: DDPGAgent, recorder: _Recorder) -> list:
    worker = RolloutWorker(env_cfg, seed=cfg.seed * 1000, record_wall=not cfg.deterministic)
    updates = []
    while recorder.remaining > 0:
        action, _, _ = agent.act(worker.obs, DDPG_EXPLORE, worker.rng)
        transition, record = worker.step(action)
        agent.replay.add(transition)
        if agent.ready:
            updates.append(agent.update())
        if record is not None:
            recorder.add(record)
    return updates


# ===================
# MAIN HANDLER
# ===================

def process_train(data):
    """
    Train one agent.

    data: algo, world, reward, seed, episodes, out, config (file path),
    quiet, workers, deterministic, plus any dotted config key.
    """
    data = dict(data or {})
    quiet = bool(data.pop('quiet', False))
    config_path = data.pop('config', None)

    print(f"[train] === PROCESSING ===")

    try:
        check_request_fields(data, REQUEST_KEYS)
        file_values = load_config(config_path) if config_path else {}
        cfg = build_run_config(file_values, data)

        print(f"[train] Algo: {cfg.algo} | world: {cfg.world} | reward: {cfg.reward} | seed: {cfg.seed}")
        print(f"[train] Episodes: {cfg.episodes} | workers: {cfg.workers} | deterministic: {cfg.deterministic}")

        world = load_world(cfg.world)
        env_cfg = cfg.make_env_config(world)
        agent = build_agent(cfg.algo, cfg.ppo, cfg.ddpg, cfg.nn, cfg.seed)
        body_params = {'actor': agent.actor.body_param_count(), 'critic': agent.critic.body_param_count()}
        print(f"[train] Network: {agent.arch} | body parameters: {body_params}")

        out_dir = cfg.out_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / CONFIG_FILE).write_text(format_config(cfg))
        print(f"[train] Output: {out_dir}")

        with MetricsWriter(out_dir / METRICS_FILE) as writer:
            recorder = _Recorder(cfg, agent, writer, quiet)
            if isinstance(agent, PPOAgent):
                updates = _train_ppo(cfg, env_cfg, agent, recorder)
            else:
                updates = _train_ddpg(cfg, env_cfg, agent, recorder)

        checkpoint = save_agent(recorder.checkpoint, agent)
        records = recorder.records
        summary = summarize(records, label=out_dir.name, step_budget=cfg.step_budget)
        late_success = final_window_success(records)

        runs.write_run_json(out_dir, {
            'kind': 'train',
            'algo': cfg.algo,
            'arch': agent.arch,
            'body_params': body_params,
            'world': cfg.world,
            'reward': cfg.reward,
            'seed': cfg.seed,
            'deterministic': cfg.deterministic and cfg.workers == 1,
            'config': cfg.as_flat(),
            'updates': len(updates),
            'summary': summary,
            'final_window_success_pct': late_success,
        })
        runs.write_report(out_dir / runs.REPORT_FILE, f'Training: {out_dir.name}', summary, {
            'Algorithm': agent.arch,
            'World': cfg.world,
            'Reward': cfg.reward,
            'Seed': cfg.seed,
            'Success % over the final 50 episodes': f'{late_success:.2f}',
        })

        print(f"[train] Success: {summary['success_pct']:.2f}% | avg reward {summary['avg_reward']:.2f}")
        print(f"[train] === COMPLETE ===")
        return {
            'success': True,
            'out': str(out_dir),
            'checkpoint': str(checkpoint),
            'episodes': len(records),
            'updates': len(updates),
            'summary': summary,
            'code': 0,
        }

    except Exception as e:
        return runs.failure('train', e)
