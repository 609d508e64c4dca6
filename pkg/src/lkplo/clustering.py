"""Stage 2a: k-means over the kernel feature representation.

Lloyd iterations with k-means++ seeding, 10 restarts keeping the
lowest-inertia run, and empty-cluster repair so every surviving
cluster has at least one member (the 1/N_k score weighting requires
N_k >= 1).
"""

from dataclasses import dataclass

import numpy as np

N_INIT = 10
MAX_ITER = 300
SHIFT_TOL = 1e-6


class InvalidKError(ValueError):
    """Raised when k exceeds the number of points."""


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray   # (k, q)
    sizes: np.ndarray       # (k,), all >= 1
    membership: np.ndarray  # (N,) cluster indices
    inertia: float


def _assign(F, centroids):
    """Labels and squared distances to the nearest centroid.

    np.argmin returns the first minimum, which implements the
    lowest-index tie-break.
    """
    d2 = (
        (F * F).sum(axis=1)[:, None]
        + (centroids * centroids).sum(axis=1)[None, :]
        - 2.0 * (F @ centroids.T)
    )
    np.clip(d2, 0.0, None, out=d2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(F)), labels]


def _kmeanspp_init(F, k, rng):
    n = F.shape[0]
    centers = np.empty((k, F.shape[1]))
    chosen = np.zeros(n, dtype=bool)
    first = int(rng.integers(n))
    centers[0] = F[first]
    chosen[first] = True
    d2 = ((F - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            idx = int(rng.choice(n, p=probs))
        else:
            # All remaining distances zero (duplicate points): pick any
            # index not chosen yet so k == n stays feasible.
            idx = int(rng.choice(np.flatnonzero(~chosen)))
        centers[j] = F[idx]
        chosen[idx] = True
        d2 = np.minimum(d2, ((F - centers[j]) ** 2).sum(axis=1))
    return centers


def _repair_empty(F, centers, labels, d2, k):
    """Empty-cluster repair: the farthest point from its centroid (among
    clusters that can spare one) becomes a singleton centroid."""
    for j in range(k):
        if np.any(labels == j):
            continue
        sizes = np.bincount(labels, minlength=k)
        donors = sizes[labels] >= 2
        candidates = np.flatnonzero(donors)
        far = int(candidates[np.argmax(d2[candidates])])
        centers[j] = F[far]
        labels[far] = j
        d2[far] = 0.0


def _lloyd(F, centers, max_iter=MAX_ITER, tol=SHIFT_TOL):
    """One Lloyd run; returns (centroids, labels, inertia, inertia_history)."""
    k = centers.shape[0]
    history = []
    labels, d2 = _assign(F, centers)
    for _ in range(max_iter):
        _repair_empty(F, centers, labels, d2, k)
        history.append(float(d2.sum()))
        new_centers = np.empty_like(centers)
        for j in range(k):
            new_centers[j] = F[labels == j].mean(axis=0)
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        labels, d2 = _assign(F, centers)
        if shift < tol:
            break
    _repair_empty(F, centers, labels, d2, k)
    # Final means so each centroid is exactly its members' mean; labels are
    # kept as-is so the repair cannot be undone by tie reassignment.
    for j in range(k):
        centers[j] = F[labels == j].mean(axis=0)
    inertia = float(((F - centers[labels]) ** 2).sum())
    history.append(inertia)
    return centers, labels, inertia, history


def kmeans_fit(F, k: int, seed: int, n_init: int = N_INIT) -> ClusterModel:
    """Best of n_init k-means++ restarts; deterministic given (F, k, seed)."""
    F = np.asarray(F, dtype=float)
    if F.ndim != 2:
        raise ValueError("F must be 2-D")
    n = F.shape[0]
    if not 1 <= k <= n:
        raise InvalidKError(f"k={k} outside [1, {n}]")

    best = None
    for restart in range(n_init):
        rng = np.random.default_rng(seed + restart)
        centers = _kmeanspp_init(F, k, rng)
        centers, labels, inertia, _ = _lloyd(F, centers)
        if best is None or inertia < best[2]:
            best = (centers, labels, inertia)

    centers, labels, inertia = best
    sizes = np.bincount(labels, minlength=k)
    return ClusterModel(
        k=k,
        centroids=centers,
        sizes=sizes,
        membership=labels,
        inertia=inertia,
    )


def assign_nearest(model: ClusterModel, f) -> int:
    """Index of the nearest centroid; ties break to the lowest index."""
    f = np.asarray(f, dtype=float)
    if f.shape != (model.centroids.shape[1],):
        raise ValueError(
            f"expected vector of length {model.centroids.shape[1]}, got {f.shape}"
        )
    d2 = ((model.centroids - f) ** 2).sum(axis=1)
    return int(np.argmin(d2))
