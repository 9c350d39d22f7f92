"""Labeled neighborhood construction around the instance to explain.

Two modes: perturbation sampling (draw a flip count uniformly from 1..radius,
then a uniform subset of positions to flip) or filtering a user-provided
dataset by Hamming distance. Both return the instance itself as the first row.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .core import Instance, Label, hamming
from .oracles import Oracle


class VicinityTooSmallError(ValueError):
    pass


@dataclass
class LabeledDataset:
    rows: list[tuple[Instance, Label]]
    n_features: int
    truncated: bool = False  # fewer distinct neighbors exist than requested

    def __post_init__(self):
        if any(x.n != self.n_features for x, _ in self.rows):
            raise ValueError("rows disagree on feature count")

    def __len__(self) -> int:
        return len(self.rows)

    def labels(self) -> list[Label]:
        return [y for _, y in self.rows]

    def is_constant(self) -> bool:
        labels = set(self.labels())
        return len(labels) <= 1


def _ball_size(n: int, radius: int) -> int:
    return sum(math.comb(n, k) for k in range(1, radius + 1))


def sample_vicinity(
    x: Instance, oracle: Oracle, radius: int, count: int, seed: int
) -> LabeledDataset:
    """Sample ``count`` distinct perturbations of x within the Hamming ball.

    When the ball holds fewer than ``count`` distinct instances the whole ball
    is returned and the dataset is flagged truncated.
    """
    n = x.n
    if not 1 <= radius <= n:
        raise ValueError(f"radius must be within 1..{n}, got {radius}")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = random.Random(seed)
    positions = list(range(n))
    reachable = _ball_size(n, radius) if n <= 30 else None
    truncated = False
    samples: list[Instance] = []
    seen = {x.values}
    if reachable is not None and count >= reachable:
        # Exhaust the ball deterministically instead of rejection-sampling.
        truncated = count > reachable
        for values in _enumerate_ball(x, radius):
            samples.append(Instance(values))
        samples.sort(key=lambda inst: inst.values)
    else:
        stall_limit = 200 * count + 1000
        rejects = 0
        while len(samples) < count:
            k = rng.randint(1, radius)
            flips = rng.sample(positions, k)
            z = x.flip(flips)
            if z.values in seen:
                rejects += 1
                if rejects > stall_limit:
                    truncated = True
                    break
                continue
            seen.add(z.values)
            samples.append(z)
    instances = [x] + samples
    labels = oracle.predict_batch(instances)
    rows = list(zip(instances, labels))
    return LabeledDataset(rows, n, truncated=truncated)


def _enumerate_ball(x: Instance, radius: int):
    from itertools import combinations

    for k in range(1, radius + 1):
        for flips in combinations(range(x.n), k):
            yield x.flip(flips).values


def filter_dataset_vicinity(
    x: Instance, dataset: Sequence[Instance], oracle: Oracle, radius: int
) -> LabeledDataset:
    """Keep the dataset rows at Hamming distance <= radius from x, plus x."""
    if any(z.n != x.n for z in dataset):
        raise ValueError("dataset instances disagree with x on feature count")
    kept = [z for z in dataset if hamming(z, x) <= radius]
    if not kept:
        raise VicinityTooSmallError(
            f"no dataset instance within radius {radius}; "
            "increase the radius or use perturbation sampling"
        )
    instances = [x] + kept
    labels = oracle.predict_batch(instances)
    return LabeledDataset(list(zip(instances, labels)), x.n)


def default_radius(n: int, reference: int = 250, reference_n: int = 784) -> int:
    """Dimension-proportional default radius (250 at 784 features)."""
    return max(1, min(n, round(reference * n / reference_n)))


def read_instances(path: str | Path, n_features: int | None = None) -> list[Instance]:
    """Instance file: one '0'/'1' string per line; blank lines skipped."""
    out = []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        inst = Instance.from_string(line)
        if n_features is not None and inst.n != n_features:
            raise ValueError(
                f"{path}:{line_no}: instance has {inst.n} features, expected {n_features}"
            )
        out.append(inst)
    return out
