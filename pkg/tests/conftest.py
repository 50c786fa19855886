import numpy as np
import pytest

from anomex.data import Dataset


class CountingScorer:
    """Wraps a batch scorer and counts per-sample evaluations."""

    def __init__(self, fn):
        self.fn = fn
        self.evaluations = 0

    def __call__(self, batch):
        batch = np.atleast_2d(batch)
        self.evaluations += batch.shape[0]
        return self.fn(batch)


@pytest.fixture
def counting():
    return CountingScorer


def make_dataset(rows, names=None, labels=None):
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[:, None]
    if names is None:
        names = tuple(f"f{j}" for j in range(rows.shape[1]))
    return Dataset(tuple(names), rows, labels)


def random_scorer(rng, d):
    """A random smooth scorer family for fuzzing; higher = more anomalous."""
    kind = rng.integers(4)
    w = rng.normal(size=d)
    b = float(rng.normal())
    if kind == 0:
        return lambda X: X @ w + b
    if kind == 1:
        return lambda X: (X**2) @ np.abs(w) + b
    if kind == 2:
        c = rng.normal(size=d)
        return lambda X: np.abs((X - c) @ w)
    freq = float(rng.uniform(0.5, 3.0))
    return lambda X: np.sin(freq * (X @ w)) + b
