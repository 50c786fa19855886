"""Reference unsupervised anomaly detectors: Isolation Forest and LODA.

Both detectors satisfy the package-wide scoring contract: ``score(X)``
takes an (m, d) batch and returns m finite scores, higher = more
anomalous, deterministic for a fixed seed, and safe to call concurrently
once fitted. Fitted models persist to a versioned JSON document via
``save_model`` / ``load_model``.
"""

from __future__ import annotations

import json
import math
from collections import deque
from pathlib import Path
from typing import Sequence

import numpy as np

from anomex.data import Dataset
from anomex.errors import ModelError


def _as_batch(x: np.ndarray, d: int, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != d:
        raise ModelError(f"{what} expects samples with {d} features, got shape {arr.shape}")
    return arr


def expected_path_length(m: int | np.ndarray) -> np.ndarray:
    """Average unsuccessful-search depth in a random binary search tree of m points.

    Uses exact harmonic numbers, so expected_path_length(2) == 1. Values
    for m <= 1 are 0.
    """
    m_arr = np.atleast_1d(np.asarray(m, dtype=np.int64))
    top = int(m_arr.max(initial=1))
    # harmonic[i] = 1 + 1/2 + ... + 1/i, harmonic[0] = 0
    harmonic = np.concatenate(([0.0], np.cumsum(1.0 / np.arange(1, max(top, 2)))))
    out = np.zeros(m_arr.shape, dtype=np.float64)
    big = m_arr >= 2
    mb = m_arr[big]
    out[big] = 2.0 * harmonic[mb - 1] - 2.0 * (mb - 1) / mb
    return out if np.ndim(m) else out[0]


class IsolationForest:
    """Ensemble of random binary partition trees; anomalies isolate early.

    Each tree grows on an independent uniform subsample of size psi,
    splitting a uniformly chosen non-constant feature at a uniform point
    between the node's min and max, until a single point remains or depth
    ceil(log2 psi) is reached. Truncated leaves credit the expected
    remaining depth of their subtree size.

    ``score`` maps the mean isolation depth h through 2**(-h / c(psi)),
    giving scores in (0, 1).
    """

    def __init__(
        self,
        feature_names: Sequence[str],
        trees: list[dict],
        subsample: int,
        seed: int,
        n_trees: int,
    ) -> None:
        self.feature_names = tuple(feature_names)
        self.trees = trees
        self.subsample = int(subsample)
        self.seed = int(seed)
        self.n_trees = int(n_trees)
        self.normalizer = float(expected_path_length(self.subsample))
        self._pack()

    # -- fitting ---------------------------------------------------------

    @classmethod
    def fit(
        cls,
        data: Dataset,
        trees: int = 100,
        subsample: int = 256,
        seed: int = 0,
    ) -> "IsolationForest":
        """Build ``trees`` isolation trees on subsamples of ``data``.

        Args:
            data: training set, n >= 2 rows.
            trees: ensemble size, >= 1.
            subsample: per-tree sample size psi; clamped to n.
            seed: RNG seed; equal seeds give byte-identical models.
        """
        n, d = data.rows.shape
        if n < 2:
            raise ValueError(f"need at least 2 training rows, got {n}")
        if trees < 1:
            raise ValueError(f"need at least 1 tree, got {trees}")
        if subsample < 2:
            raise ValueError(f"subsample must be >= 2, got {subsample}")
        psi = min(subsample, n)
        depth_limit = math.ceil(math.log2(psi))
        rng = np.random.default_rng(seed)
        grown = []
        for _ in range(trees):
            idx = rng.choice(n, size=psi, replace=False)
            grown.append(_grow_tree(data.rows[idx], rng, depth_limit))
        return cls(data.feature_names, grown, psi, seed, trees)

    # -- scoring ---------------------------------------------------------

    def _pack(self) -> None:
        """Flatten all trees into shared arrays for vectorized traversal.

        Leaves self-loop (child = own index, threshold = +inf), so after
        max-depth propagation steps every walker sits on its leaf and the
        precomputed depth-plus-credit can be gathered in one shot.
        """
        credit = expected_path_length(np.arange(self.subsample + 1))
        feature, threshold, child, h_final = [], [], [], []
        roots = []
        max_depth = 0
        for tree in self.trees:
            base = len(feature)
            roots.append(base)
            t_feat = tree["feature"]
            t_thresh = tree["threshold"]
            t_child = tree["child"]
            t_size = tree["size"]
            t_depth = tree["depth"]
            for i in range(len(t_feat)):
                if t_child[i] < 0:  # leaf
                    feature.append(0)
                    threshold.append(np.inf)
                    child.append(base + i)
                    h_final.append(t_depth[i] + credit[t_size[i]])
                else:
                    feature.append(t_feat[i])
                    threshold.append(t_thresh[i])
                    child.append(base + t_child[i])
                    h_final.append(0.0)
                max_depth = max(max_depth, t_depth[i])
        self._feature = np.asarray(feature, dtype=np.int64)
        self._threshold = np.asarray(threshold, dtype=np.float64)
        self._child = np.asarray(child, dtype=np.int64)
        self._h_final = np.asarray(h_final, dtype=np.float64)
        self._roots = np.asarray(roots, dtype=np.int64)
        self._max_depth = max_depth

    def score(self, x: np.ndarray) -> np.ndarray:
        """Anomaly scores in (0, 1) for a batch of samples."""
        batch = _as_batch(x, len(self.feature_names), "IsolationForest.score")
        m = batch.shape[0]
        rows = np.arange(m)[:, None]
        node = np.broadcast_to(self._roots, (m, self.n_trees)).copy()
        for _ in range(self._max_depth):
            feat = self._feature[node]
            go_right = batch[rows, feat] >= self._threshold[node]
            node = self._child[node] + go_right
        depths = self._h_final[node].mean(axis=1)
        return np.exp2(-depths / self.normalizer)

    # -- persistence ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "subsample": self.subsample,
            "seed": self.seed,
            "n_trees": self.n_trees,
            "trees": [
                {
                    "feature": [int(v) for v in t["feature"]],
                    "threshold": [float(v) for v in t["threshold"]],
                    "child": [int(v) for v in t["child"]],
                    "size": [int(v) for v in t["size"]],
                    "depth": [int(v) for v in t["depth"]],
                }
                for t in self.trees
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IsolationForest":
        return cls(doc["feature_names"], doc["trees"], doc["subsample"], doc["seed"], doc["n_trees"])


def _grow_tree(points: np.ndarray, rng: np.random.Generator, depth_limit: int) -> dict:
    """Grow one isolation tree over ``points`` in breadth-first layout.

    child[i] is the index of node i's left child or -1 for leaves; the
    right child always sits at child[i] + 1. size/depth are stored per
    node so truncated-leaf credits can be recomputed on load.
    """
    feature: list[int] = [0]
    threshold: list[float] = [0.0]
    child: list[int] = [-1]
    size: list[int] = [len(points)]
    depth: list[int] = [0]
    queue: deque[tuple[int, np.ndarray, int]] = deque([(0, np.arange(len(points)), 0)])
    while queue:
        me, idx, level = queue.popleft()
        if len(idx) <= 1 or level >= depth_limit:
            continue
        sub = points[idx]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        splittable = np.nonzero(hi > lo)[0]
        if splittable.size == 0:
            continue
        f = int(splittable[rng.integers(splittable.size)])
        p = rng.uniform(lo[f], hi[f])
        go_left = sub[:, f] < p
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        if left_idx.size == 0 or right_idx.size == 0:  # float edge: split landed on lo
            continue
        feature[me] = f
        threshold[me] = float(p)
        child[me] = len(feature)
        for rows in (left_idx, right_idx):
            feature.append(0)
            threshold.append(0.0)
            child.append(-1)
            size.append(len(rows))
            depth.append(level + 1)
            queue.append((len(feature) - 1, rows, level + 1))
    return {"feature": feature, "threshold": threshold, "child": child, "size": size, "depth": depth}


class Loda:
    """Ensemble of one-dimensional histograms over sparse random projections.

    Each of M projection vectors has ceil(sqrt(d)) non-zero N(0, 1)
    entries. Training values projected onto each vector fill an
    equal-width histogram spanning [min, max] with add-one smoothing, so
    bin probabilities sum to 1. The anomaly score of a sample is the
    negative mean log bin probability across projections (>= 0, higher =
    more anomalous); out-of-range projections use the nearest edge bin.
    """

    def __init__(
        self,
        feature_names: Sequence[str],
        projections: np.ndarray,
        bin_lo: np.ndarray,
        bin_width: np.ndarray,
        bin_probs: list[np.ndarray],
        seed: int,
    ) -> None:
        self.feature_names = tuple(feature_names)
        self.projections = np.asarray(projections, dtype=np.float64)
        self.bin_lo = np.asarray(bin_lo, dtype=np.float64)
        self.bin_width = np.asarray(bin_width, dtype=np.float64)
        self.bin_probs = [np.asarray(p, dtype=np.float64) for p in bin_probs]
        self.seed = int(seed)
        m = self.projections.shape[0]
        self._n_bins = np.asarray([p.size for p in self.bin_probs], dtype=np.int64)
        width = int(self._n_bins.max())
        padded = np.zeros((m, width))
        for i, p in enumerate(self.bin_probs):
            padded[i, : p.size] = p
        self._padded_probs = padded

    @property
    def n_projections(self) -> int:
        return self.projections.shape[0]

    @classmethod
    def fit(
        cls,
        data: Dataset,
        projections: int = 100,
        bins: int = 100,
        seed: int = 0,
    ) -> "Loda":
        """Draw sparse random projections and histogram the projected data.

        A zero-variance projection collapses to a single-bin histogram.
        """
        if projections < 1:
            raise ValueError(f"need at least 1 projection, got {projections}")
        if bins < 1:
            raise ValueError(f"need at least 1 bin, got {bins}")
        n, d = data.rows.shape
        rng = np.random.default_rng(seed)
        nnz = math.ceil(math.sqrt(d))
        w = np.zeros((projections, d))
        for i in range(projections):
            cols = rng.choice(d, size=nnz, replace=False)
            w[i, cols] = rng.normal(size=nnz)
        z = data.rows @ w.T  # (n, M)
        lo = z.min(axis=0)
        hi = z.max(axis=0)
        bin_lo = lo.copy()
        bin_width = np.empty(projections)
        probs: list[np.ndarray] = []
        for i in range(projections):
            if hi[i] == lo[i]:
                bin_width[i] = 1.0
                probs.append(np.asarray([1.0]))
                continue
            bin_width[i] = (hi[i] - lo[i]) / bins
            idx = np.clip((z[:, i] - lo[i]) / bin_width[i], 0, bins - 1).astype(np.int64)
            counts = np.bincount(idx, minlength=bins)
            probs.append((counts + 1.0) / (n + bins))
        return cls(data.feature_names, w, bin_lo, bin_width, probs, seed)

    def score(self, x: np.ndarray) -> np.ndarray:
        """Negative mean log bin probability across projections (>= 0)."""
        batch = _as_batch(x, len(self.feature_names), "Loda.score")
        z = batch @ self.projections.T  # (m, M)
        idx = np.floor((z - self.bin_lo) / self.bin_width).astype(np.int64)
        idx = np.clip(idx, 0, self._n_bins - 1)
        p = self._padded_probs[np.arange(self.n_projections)[None, :], idx]
        return -np.log(p).mean(axis=1)

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "seed": self.seed,
            "projections": [[float(v) for v in row] for row in self.projections],
            "histograms": [
                {
                    "lo": float(self.bin_lo[i]),
                    "width": float(self.bin_width[i]),
                    "probs": [float(v) for v in self.bin_probs[i]],
                }
                for i in range(self.n_projections)
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Loda":
        hists = doc["histograms"]
        return cls(
            doc["feature_names"],
            np.asarray(doc["projections"], dtype=np.float64),
            np.asarray([h["lo"] for h in hists]),
            np.asarray([h["width"] for h in hists]),
            [np.asarray(h["probs"]) for h in hists],
            doc["seed"],
        )


MODEL_FORMAT_VERSION = 1
_MODEL_TYPES = {"iforest": IsolationForest, "loda": Loda}

Detector = IsolationForest | Loda


def save_model(
    detector: Detector,
    threshold: float,
    contamination: float,
    path: str | Path,
) -> None:
    """Persist a fitted detector plus its classification threshold as JSON."""
    for name, klass in _MODEL_TYPES.items():
        if isinstance(detector, klass):
            model_type = name
            break
    else:
        raise ModelError(f"unsupported detector type {type(detector).__name__}")
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "model_type": model_type,
        "threshold": float(threshold),
        "contamination": float(contamination),
        "model": detector.to_dict(),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_model(path: str | Path) -> tuple[Detector, float, float]:
    """Load a model JSON; returns (detector, threshold, contamination)."""
    path = Path(path)
    if not path.is_file():
        raise ModelError(f"no such model file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelError(f"{path}: not a model document")
    if doc["format_version"] != MODEL_FORMAT_VERSION:
        raise ModelError(f"{path}: unsupported format version {doc['format_version']}")
    klass = _MODEL_TYPES.get(doc.get("model_type"))
    if klass is None:
        raise ModelError(f"{path}: unknown model type {doc.get('model_type')!r}")
    detector = klass.from_dict(doc["model"])
    return detector, float(doc["threshold"]), float(doc["contamination"])


def average_precision(labels: np.ndarray, scores: np.ndarray) -> float:
    """Rank-based average precision of ``scores`` against binary ``labels``.

    Ranks descending by score (ties broken by original order); AP is the
    mean, over positives, of precision at each positive's rank.
    """
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape or labels.ndim != 1:
        raise ValueError("labels and scores must be 1-d and the same length")
    n_pos = int((labels == 1).sum())
    if n_pos == 0:
        raise ValueError("average precision is undefined without positive labels")
    order = np.argsort(-scores, kind="stable")
    ranked = labels[order]
    hits = np.cumsum(ranked == 1)
    ranks = np.arange(1, labels.size + 1)
    precision_at_hit = (hits / ranks)[ranked == 1]
    return float(precision_at_hit.sum() / n_pos)
