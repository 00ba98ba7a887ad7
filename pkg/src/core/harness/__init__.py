from .config import REQUIRED_KEYS, ExperimentConfig, load_config
from .episode import RegretTrace, default_policy_factory, run_episode
from .replication import (
    ReplicationQueue,
    ReplicationSummary,
    ReplicationTask,
    SweepRow,
    TaskStatus,
    replicate,
    resolve_workers,
    sweep,
)
from .seeding import EpisodeStreams, episode_streams, replication_seed, splitmix64
