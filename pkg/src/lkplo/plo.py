"""Projection-based loss outlyingness: direction ensembles, robust
losses, and the three detector variants (linear-global, kernel-global,
kernel-local).

The score of a point is the maximum loss over the stored projection
directions of its nearest cluster, centered at that cluster's centroid
and weighted by the inverse cluster size. Per-direction medians and
MADs are precomputed at fit time; scoring never touches training
features again.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clustering import ClusterModel, assign_nearest, kmeans_fit
from .kernel_feature import KernelParams, KpcaModel, fit_kpca, transform

MAD_CONSISTENCY = 1.4826
# Robust-Z divides by the MAD, which is 0 for constant projections; the
# floor keeps the direction set identical across points.
MAD_FLOOR = 1e-9
DIRECTION_NORM_FLOOR = 1e-12
MODEL_FORMAT = "lkplo-model-v1"

VARIANTS = ("plo", "kplo", "lkplo")
LOSS_KINDS = ("robust_z", "svm_like")


class DegenerateDirectionsError(ValueError):
    """Raised when no usable projection direction can be generated."""


def median(z) -> float:
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ValueError("median of empty sample")
    return float(np.median(z))


def mad(z) -> float:
    """Median absolute deviation with the 1.4826 consistency factor."""
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ValueError("MAD of empty sample")
    return MAD_CONSISTENCY * float(np.median(np.abs(z - np.median(z))))


@dataclass(frozen=True)
class LossSpec:
    kind: str               # "robust_z" or "svm_like"
    c: Optional[float] = None  # margin multiplier, svm_like only

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == "svm_like" and not (self.c is not None and self.c > 0):
            raise ValueError("svm_like loss requires c > 0")


@dataclass(frozen=True)
class DirectionConfig:
    """Ensemble composition; the four direction types are Random, Basis,
    One-Point and Two-Points. n_one_point/n_two_points of None mean
    min(50, available)."""

    n_random: int = 100
    include_basis: bool = True
    n_one_point: Optional[int] = None
    n_two_points: Optional[int] = None


@dataclass(frozen=True)
class ProjectionStats:
    direction: np.ndarray  # unit q-vector
    median_proj: float
    mad_proj: float


@dataclass
class ClusterScorer:
    """Per-cluster scoring record: centroid, size, and the direction
    ensemble with its precomputed projection statistics (arrays aligned
    along the direction axis)."""

    centroid: np.ndarray    # (q,)
    size: int
    directions: np.ndarray  # (D, q), unit rows
    medians: np.ndarray     # (D,)
    mads: np.ndarray        # (D,)

    def stats(self, i: int) -> ProjectionStats:
        return ProjectionStats(
            direction=self.directions[i],
            median_proj=float(self.medians[i]),
            mad_proj=float(self.mads[i]),
        )


@dataclass
class LkploModel:
    variant: str                     # "plo" | "kplo" | "lkplo"
    kpca: Optional[KpcaModel]        # absent for plo
    clusters: ClusterModel
    loss: LossSpec
    per_cluster: list                # list[ClusterScorer]
    direction_config: DirectionConfig
    seed: int
    d: int = 0                       # input dimensionality


@dataclass(frozen=True)
class FitConfig:
    variant: str
    loss: LossSpec
    gamma: float = 1.0
    q: int = 10
    k: int = 1
    direction_config: DirectionConfig = field(default_factory=DirectionConfig)
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


def gen_directions(F_centered, config: DirectionConfig, seed: int) -> np.ndarray:
    """Direction ensemble for one cluster, built from its centered members.

    Random: normalized iid standard normals. Basis: the q canonical unit
    vectors. One-Point: normalized member rows, sampled without
    replacement (with replacement when more are requested than rows
    exist). Two-Points: normalized differences of sampled distinct row
    pairs. Near-zero candidates are resampled up to a retry budget.
    """
    F_centered = np.asarray(F_centered, dtype=float)
    n_k, q = F_centered.shape
    if n_k < 1 or q < 1:
        raise ValueError("need at least one member row and one feature")
    rng = np.random.default_rng(seed)
    out = []

    def norm_rows(rows):
        kept = []
        for r in rows:
            nrm = np.linalg.norm(r)
            if nrm >= DIRECTION_NORM_FLOOR:
                kept.append(r / nrm)
        return kept

    if config.n_random > 0:
        kept = []
        budget = 10
        while len(kept) < config.n_random and budget > 0:
            cand = rng.standard_normal((config.n_random - len(kept), q))
            kept.extend(norm_rows(cand))
            budget -= 1
        out.extend(kept)

    if config.include_basis:
        out.extend(np.eye(q))

    n_one = config.n_one_point
    if n_one is None:
        n_one = min(50, n_k)
    if n_one > 0:
        replace = n_one > n_k
        idx = rng.choice(n_k, size=n_one, replace=replace)
        out.extend(norm_rows(F_centered[idx]))

    n_two = config.n_two_points
    if n_two is None:
        n_two = min(50, n_k * (n_k - 1) // 2)
    if n_two > 0 and n_k >= 2:
        kept = []
        budget = 10
        while len(kept) < n_two and budget > 0:
            need = n_two - len(kept)
            i = rng.integers(n_k, size=need)
            j = rng.integers(n_k, size=need)
            ok = i != j
            kept.extend(norm_rows(F_centered[i[ok]] - F_centered[j[ok]]))
            budget -= 1
        out.extend(kept[:n_two])

    if not out:
        raise DegenerateDirectionsError("no usable projection directions")
    return np.asarray(out)


def robust_z_loss(u, f_prime, stats: ProjectionStats) -> float:
    """|u.f' - median| / MAD with the MAD floored (Stahel-Donoho form)."""
    p = float(np.dot(u, f_prime))
    return abs(p - stats.median_proj) / max(stats.mad_proj, MAD_FLOOR)


def svm_like_loss(u, f_prime, stats: ProjectionStats, c: float) -> float:
    """max(0, |u.f'| - c * MAD): exceedance of a robust margin.

    The projection is of the centroid-centered point, not median-shifted.
    """
    p = float(np.dot(u, f_prime))
    return max(0.0, abs(p) - c * stats.mad_proj)


def _losses(proj, entry: ClusterScorer, loss: LossSpec):
    """Vectorized losses for projections proj of shape (..., D)."""
    if loss.kind == "robust_z":
        return np.abs(proj - entry.medians) / np.maximum(entry.mads, MAD_FLOOR)
    return np.maximum(0.0, np.abs(proj) - loss.c * entry.mads)


def local_score(f_new, entry: ClusterScorer, loss: LossSpec) -> float:
    """Maximum loss over the cluster's direction ensemble (centered at
    the cluster centroid)."""
    f_prime = np.asarray(f_new, dtype=float) - entry.centroid
    proj = entry.directions @ f_prime
    return float(_losses(proj, entry, loss).max())


def _derive_seed(seed: int, *key) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def _build_cluster_scorer(members, centroid, config, seed):
    centered = members - centroid
    directions = gen_directions(centered, config, seed)
    proj = centered @ directions.T  # (n_k, D)
    medians = np.median(proj, axis=0)
    mads = MAD_CONSISTENCY * np.median(
        np.abs(proj - medians[None, :]), axis=0
    )
    return ClusterScorer(
        centroid=centroid,
        size=len(members),
        directions=directions,
        medians=medians,
        mads=mads,
    )


def fit(X, config: FitConfig) -> LkploModel:
    """Fit a detector.

    plo: raw features, one global cluster at the mean. kplo: kernel
    features, one global cluster. lkplo: kernel features partitioned by
    k-means. Directions and projection statistics are built per cluster
    from that cluster's centered members.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X must be 2-D with at least 2 rows")

    kpca = None
    if config.variant == "plo":
        F = X
    else:
        kpca = fit_kpca(X, KernelParams(config.gamma), config.q)
        F = kpca.train_features()

    n = F.shape[0]
    if config.variant == "lkplo":
        clusters = kmeans_fit(F, config.k, config.seed)
    else:
        centroid = F.mean(axis=0)
        clusters = ClusterModel(
            k=1,
            centroids=centroid[None, :],
            sizes=np.array([n]),
            membership=np.zeros(n, dtype=int),
            inertia=float(((F - centroid) ** 2).sum()),
        )

    per_cluster = []
    for j in range(clusters.k):
        members = F[clusters.membership == j]
        per_cluster.append(
            _build_cluster_scorer(
                members,
                clusters.centroids[j],
                config.direction_config,
                _derive_seed(config.seed, j),
            )
        )

    return LkploModel(
        variant=config.variant,
        kpca=kpca,
        clusters=clusters,
        loss=config.loss,
        per_cluster=per_cluster,
        direction_config=config.direction_config,
        seed=config.seed,
        d=X.shape[1],
    )


def score(model: LkploModel, Xnew) -> np.ndarray:
    """Final outlyingness: (1 / N_k) * local score at the nearest cluster."""
    Xnew = np.asarray(Xnew, dtype=float)
    if Xnew.ndim != 2 or Xnew.shape[1] != model.d:
        raise ValueError(f"expected (M, {model.d}) input, got {Xnew.shape}")
    if model.variant == "plo":
        F = Xnew
    else:
        F = transform(model.kpca, Xnew)

    m = F.shape[0]
    out = np.empty(m)
    assign = np.array([assign_nearest(model.clusters, f) for f in F])
    for j, entry in enumerate(model.per_cluster):
        rows = assign == j
        if not np.any(rows):
            continue
        proj = (F[rows] - entry.centroid) @ entry.directions.T
        out[rows] = _losses(proj, entry, model.loss).max(axis=1) / entry.size
    return out


# --- serialization (format "lkplo-model-v1") ---------------------------------


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model: LkploModel) -> dict:
    d = {
        "format": MODEL_FORMAT,
        "variant": model.variant,
        "loss": {"kind": model.loss.kind, "c": model.loss.c},
        "direction_config": {
            "n_random": model.direction_config.n_random,
            "include_basis": model.direction_config.include_basis,
            "n_one_point": model.direction_config.n_one_point,
            "n_two_points": model.direction_config.n_two_points,
        },
        "seed": model.seed,
        "d": model.d,
        "clusters": {
            "k": model.clusters.k,
            "centroids": _arr(model.clusters.centroids),
            "sizes": model.clusters.sizes.tolist(),
            "membership": model.clusters.membership.tolist(),
            "inertia": model.clusters.inertia,
        },
        "per_cluster": [
            {
                "centroid": _arr(e.centroid),
                "size": e.size,
                "directions": _arr(e.directions),
                "medians": _arr(e.medians),
                "mads": _arr(e.mads),
            }
            for e in model.per_cluster
        ],
    }
    if model.kpca is not None:
        d["kpca"] = {
            "train_points": _arr(model.kpca.train_points),
            "gamma": model.kpca.params.gamma,
            "q": model.kpca.q,
            "eigenvalues": _arr(model.kpca.eigenvalues),
            "eigenvectors": _arr(model.kpca.eigenvectors),
            "gram_row_means": _arr(model.kpca.gram_row_means),
            "gram_total_mean": model.kpca.gram_total_mean,
            "kernel": model.kpca.kernel,
        }
    else:
        d["kpca"] = None
    return d


def model_from_dict(d: dict) -> LkploModel:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {d.get('format')!r}")
    kpca = None
    if d["kpca"] is not None:
        kd = d["kpca"]
        kpca = KpcaModel(
            train_points=np.asarray(kd["train_points"], dtype=float),
            params=KernelParams(kd["gamma"]),
            q=kd["q"],
            eigenvalues=np.asarray(kd["eigenvalues"], dtype=float),
            eigenvectors=np.asarray(kd["eigenvectors"], dtype=float),
            gram_row_means=np.asarray(kd["gram_row_means"], dtype=float),
            gram_total_mean=kd["gram_total_mean"],
            kernel=kd["kernel"],
        )
    cd = d["clusters"]
    clusters = ClusterModel(
        k=cd["k"],
        centroids=np.asarray(cd["centroids"], dtype=float),
        sizes=np.asarray(cd["sizes"], dtype=int),
        membership=np.asarray(cd["membership"], dtype=int),
        inertia=cd["inertia"],
    )
    per_cluster = [
        ClusterScorer(
            centroid=np.asarray(e["centroid"], dtype=float),
            size=e["size"],
            directions=np.asarray(e["directions"], dtype=float),
            medians=np.asarray(e["medians"], dtype=float),
            mads=np.asarray(e["mads"], dtype=float),
        )
        for e in d["per_cluster"]
    ]
    dc = d["direction_config"]
    return LkploModel(
        variant=d["variant"],
        kpca=kpca,
        clusters=clusters,
        loss=LossSpec(kind=d["loss"]["kind"], c=d["loss"]["c"]),
        per_cluster=per_cluster,
        direction_config=DirectionConfig(
            n_random=dc["n_random"],
            include_basis=dc["include_basis"],
            n_one_point=dc["n_one_point"],
            n_two_points=dc["n_two_points"],
        ),
        seed=d["seed"],
        d=d["d"],
    )


def save_model(model: LkploModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> LkploModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
