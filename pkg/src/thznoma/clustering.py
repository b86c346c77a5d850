"""Correlation-based user clustering.

Users are grouped by channel-direction similarity so that each cluster can
share one beam. The main scheme is a K-means variant whose initial heads are
spread out by a farthest-point rule on channel correlation; plain K-means,
fixed-head selection, and random grouping serve as baselines. All estimators
follow the scikit-learn fit/predict convention and operate on a complex
(num_users, num_antennas) channel matrix.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .validation import check_channel_matrix


def channel_correlation(h1, h2):
    """|h1^H h2| / (||h1|| ||h2||), in [0, 1]; zero vectors are rejected."""
    h1 = np.asarray(h1, dtype=complex)
    h2 = np.asarray(h2, dtype=complex)
    if h1.shape != h2.shape:
        raise ValueError("channel vectors must have equal length")
    n1 = np.linalg.norm(h1)
    n2 = np.linalg.norm(h2)
    if n1 == 0 or n2 == 0:
        raise ValueError("correlation of a zero channel vector is undefined")
    return float(np.abs(np.vdot(h1, h2)) / (n1 * n2))


def _correlation_to_heads(X, heads):
    """Correlation of every user (rows of X) against every head; (U, N)."""
    head_norms = np.linalg.norm(heads, axis=1)
    if np.any(head_norms == 0):
        raise ValueError("cluster head with zero norm")
    user_norms = np.linalg.norm(X, axis=1)
    inner = np.abs(X.conj() @ heads.T)
    return inner / np.outer(user_norms, head_norms)


def assign_to_heads(X, heads):
    """Assign each user to the head with the largest correlation.

    Ties break toward the lowest cluster index.
    """
    return np.argmax(_correlation_to_heads(X, heads), axis=1)


def farthest_head_init(X, n_clusters, rng):
    """Pick initial heads: a random user first, then repeatedly the user whose
    summed correlation to the already-chosen heads is smallest.

    Returns the selected user indices.
    """
    num_users = X.shape[0]
    if num_users < n_clusters:
        raise ValueError("fewer users than clusters")
    chosen = [int(rng.integers(num_users))]
    for _ in range(1, n_clusters):
        remaining = np.setdiff1d(np.arange(num_users), chosen)
        scores = _correlation_to_heads(X[remaining], X[chosen]).sum(axis=1)
        chosen.append(int(remaining[np.argmin(scores)]))
    return np.array(chosen)


def cluster_means(X, labels, n_clusters, prev_heads=None):
    """Element-wise complex mean of each cluster's channels.

    A cluster that is empty or averages to the zero vector is repaired by
    reseeding its head with the member of the largest cluster least
    correlated with the cluster's previous head; this needs `prev_heads`.
    """
    heads = np.zeros((n_clusters, X.shape[1]), dtype=complex)
    degenerate = []
    for n in range(n_clusters):
        members = X[labels == n]
        if len(members) == 0:
            degenerate.append(n)
            continue
        heads[n] = members.mean(axis=0)
        if np.linalg.norm(heads[n]) == 0:
            degenerate.append(n)
    for n in degenerate:
        if prev_heads is None:
            raise ValueError(
                f"cluster {n} is degenerate and no previous heads were given"
            )
        sizes = np.bincount(labels, minlength=n_clusters)
        donor = int(np.argmax(sizes))
        donor_idx = np.flatnonzero(labels == donor)
        corr = _correlation_to_heads(X[donor_idx], prev_heads[n][None, :])[:, 0]
        heads[n] = X[donor_idx[np.argmin(corr)]]
    return heads


def clustering_mse(X, labels, heads):
    """Mean squared unit-direction distance between users and their heads.

    Directions are compared up to a common phase, so the per-user term is
    2 * (1 - correlation); identical directions score 0, orthogonal ones 2.
    Lower MSE therefore means higher intra-cluster correlation.
    """
    X = check_channel_matrix(X)
    corr = _correlation_to_heads(X, heads)
    per_user = 2.0 * (1.0 - corr[np.arange(X.shape[0]), labels])
    return float(per_user.mean())


class _CorrelationClusteringBase(BaseEstimator):
    """Shared alternating loop: assign by correlation, update heads by mean."""

    def __init__(self, n_clusters=2, max_iter=100, random_state=None):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.random_state = random_state

    def _initial_heads(self, X, rng):
        raise NotImplementedError

    def fit(self, X, y=None):
        X = check_channel_matrix(X, min_rows=self.n_clusters)
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        rng = np.random.default_rng(self.random_state)
        heads = self._initial_heads(X, rng)
        labels = assign_to_heads(X, heads)
        mse_trace = []
        for iteration in range(1, self.max_iter + 1):
            heads = cluster_means(X, labels, self.n_clusters, prev_heads=heads)
            new_labels = assign_to_heads(X, heads)
            mse_trace.append(clustering_mse(X, new_labels, heads))
            self.n_iter_ = iteration
            if np.array_equal(new_labels, labels):
                labels = new_labels
                break
            labels = new_labels
        self.labels_ = labels
        self.cluster_heads_ = heads
        self.cluster_sizes_ = np.bincount(labels, minlength=self.n_clusters)
        self.mse_trace_ = np.array(mse_trace)
        return self

    def predict(self, X):
        if not hasattr(self, "cluster_heads_"):
            raise NotFittedError("estimator must be fitted before predict")
        X = check_channel_matrix(X)
        return assign_to_heads(X, self.cluster_heads_)

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


class EnhancedKMeans(_CorrelationClusteringBase):
    """Correlation K-means with farthest-point head initialization.

    The spread-out initial heads make the loop start near a good partition,
    which converges in fewer iterations than random initialization.
    """

    def _initial_heads(self, X, rng):
        return X[farthest_head_init(X, self.n_clusters, rng)].copy()


class CorrelationKMeans(_CorrelationClusteringBase):
    """Plain correlation K-means: initial heads are random distinct users."""

    def _initial_heads(self, X, rng):
        idx = rng.choice(X.shape[0], size=self.n_clusters, replace=False)
        return X[idx].copy()


class ClusterHeadSelection(BaseEstimator):
    """Fixed-head baseline: heads are the strongest users, no iteration."""

    def __init__(self, n_clusters=2):
        self.n_clusters = n_clusters

    def fit(self, X, y=None):
        X = check_channel_matrix(X, min_rows=self.n_clusters)
        norms = np.linalg.norm(X, axis=1)
        # Strongest users become heads; stable order among equals.
        order = np.argsort(-norms, kind="stable")[: self.n_clusters]
        heads = X[order].copy()
        labels = assign_to_heads(X, heads)
        self.labels_ = labels
        self.cluster_heads_ = heads
        self.cluster_sizes_ = np.bincount(labels, minlength=self.n_clusters)
        self.n_iter_ = 1
        self.mse_trace_ = np.array([clustering_mse(X, labels, heads)])
        return self

    def predict(self, X):
        if not hasattr(self, "cluster_heads_"):
            raise NotFittedError("estimator must be fitted before predict")
        return assign_to_heads(check_channel_matrix(X), self.cluster_heads_)

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


class RandomClustering(BaseEstimator):
    """Random balanced grouping; heads are the resulting cluster means."""

    def __init__(self, n_clusters=2, random_state=None):
        self.n_clusters = n_clusters
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_channel_matrix(X, min_rows=self.n_clusters)
        rng = np.random.default_rng(self.random_state)
        num_users = X.shape[0]
        order = rng.permutation(num_users)
        labels = np.zeros(num_users, dtype=int)
        labels[order] = np.arange(num_users) % self.n_clusters
        heads = cluster_means(X, labels, self.n_clusters, prev_heads=X[: self.n_clusters])
        self.labels_ = labels
        self.cluster_heads_ = heads
        self.cluster_sizes_ = np.bincount(labels, minlength=self.n_clusters)
        self.n_iter_ = 1
        self.mse_trace_ = np.array([clustering_mse(X, labels, heads)])
        return self

    def predict(self, X):
        if not hasattr(self, "cluster_heads_"):
            raise NotFittedError("estimator must be fitted before predict")
        return assign_to_heads(check_channel_matrix(X), self.cluster_heads_)

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


CLUSTERING_SCHEMES = {
    "enhanced": EnhancedKMeans,
    "kmeans": CorrelationKMeans,
    "chs": ClusterHeadSelection,
    "random": RandomClustering,
}


def make_clustering(scheme, n_clusters, random_state=None):
    """Instantiate a clustering estimator by scheme name."""
    try:
        cls = CLUSTERING_SCHEMES[scheme]
    except KeyError:
        raise ValueError(
            f"unknown clustering scheme {scheme!r}; "
            f"expected one of {sorted(CLUSTERING_SCHEMES)}"
        ) from None
    if cls is ClusterHeadSelection:
        return cls(n_clusters=n_clusters)
    return cls(n_clusters=n_clusters, random_state=random_state)
