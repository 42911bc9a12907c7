"""Reproducible N-way K-shot episode sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import Episode, FeatureDataset


class ProtocolError(ValueError):
    """The dataset cannot support the requested episode shape."""


@dataclass(frozen=True)
class ProtocolConfig:
    n_way: int = 5
    k_shot: int = 1
    q_query: int = 15
    episodes: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.n_way < 2:
            raise ValueError("n_way must be at least 2")
        if self.k_shot < 1 or self.q_query < 1 or self.episodes < 1:
            raise ValueError("k_shot, q_query and episodes must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def check_protocol(dataset: FeatureDataset, cfg: ProtocolConfig) -> None:
    if dataset.n_classes < cfg.n_way:
        raise ProtocolError(f"dataset has {dataset.n_classes} classes, {cfg.n_way}-way episodes need more")
    need = cfg.k_shot + cfg.q_query
    for c in range(dataset.n_classes):
        have = dataset.indices_of(c).size
        if have < need:
            raise ProtocolError(f"class {dataset.classes[c]!r} has {have} records, episodes need {need}")


def episode_rng(seed: int, episode_index: int) -> np.random.Generator:
    """Independent generator for one episode, keyed on ``(seed, episode_index)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, episode_index])))


def partial_shuffle(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """First ``k`` entries of a uniformly random permutation of ``range(n)``."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} of {n} without replacement")
    perm = list(range(n))
    offsets = rng.integers(0, n - np.arange(k)).tolist()
    for i, off in enumerate(offsets):
        j = i + off
        perm[i], perm[j] = perm[j], perm[i]
    return np.array(perm[:k], dtype=np.int64)


def sample_episode(dataset: FeatureDataset, cfg: ProtocolConfig, episode_index: int) -> Episode:
    check_protocol(dataset, cfg)
    return _draw(dataset, cfg, episode_index)


def _draw(dataset: FeatureDataset, cfg: ProtocolConfig, episode_index: int) -> Episode:
    rng = episode_rng(cfg.seed, episode_index)
    n, k, q = cfg.n_way, cfg.k_shot, cfg.q_query
    chosen = partial_shuffle(dataset.n_classes, n, rng)
    support_ids = np.empty(n * k, dtype=np.int64)
    query_ids = np.empty(n * q, dtype=np.int64)
    for c, original in enumerate(chosen):
        members = dataset.indices_of(original)
        picked = members[partial_shuffle(members.size, k + q, rng)]
        support_ids[c * k : (c + 1) * k] = picked[:k]
        query_ids[c * q : (c + 1) * q] = picked[k:]
    return Episode(
        n_way=n,
        k_shot=k,
        q_query=q,
        support_x=dataset.features[support_ids],
        support_y=np.repeat(np.arange(n), k),
        query_x=dataset.features[query_ids],
        query_y=np.repeat(np.arange(n), q),
        class_map=tuple(int(c) for c in chosen),
        support_ids=support_ids,
        query_ids=query_ids,
    )


def sample_batch(dataset: FeatureDataset, cfg: ProtocolConfig) -> list[Episode]:
    check_protocol(dataset, cfg)
    return [_draw(dataset, cfg, t) for t in range(cfg.episodes)]
