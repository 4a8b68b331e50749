import math

import numpy as np
from .._rng import make_rng
from .base import BaseClusterer, compact_labels
from .kmeans import lloyd, sse


def _log_joint(W, weights, means, variances):
    # log w_k + sum_d log N(x_d | mu_kd, var_kd), shape (n, k)
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    diff = W[:, None, :] - means[None, :, :]
    quad = np.sum(diff * diff / variances[None, :, :], axis=2)
    norm = np.sum(np.log(2 * math.pi * variances), axis=1)
    return log_w[None, :] - 0.5 * (quad + norm[None, :])


def _logsumexp_rows(a):
    m = a.max(axis=1)
    return m + np.log(np.exp(a - m[:, None]).sum(axis=1))


def _e_step(W, weights, means, variances):
    log_p = _log_joint(W, weights, means, variances)
    lse = _logsumexp_rows(log_p)
    resp = np.exp(log_p - lse[:, None])
    return resp, float(lse.sum())


def _m_step(W, resp, floor, old_means, old_vars):
    nk = resp.sum(axis=0)
    weights = nk / len(W)
    means = old_means.copy()
    variances = old_vars.copy()
    live = nk > 1e-12
    means[live] = (resp[:, live].T @ W) / nk[live, None]
    diff = W[:, None, :] - means[None, :, :]
    spread = np.einsum("nk,nkd->kd", resp, diff * diff)
    variances[live] = spread[live] / nk[live, None]
    variances = np.maximum(variances, floor[None, :])
    return weights, means, variances


class GaussianMixtureEM(BaseClusterer):
    """Diagonal-covariance Gaussian mixture fitted by expectation-maximization.

    Initialization takes the best of ``n_init_kmeans`` k-means runs (smallest
    SSE). Variances are floored at ``1e-6 * range**2`` per attribute. When
    ``n_components`` is None the component count in ``k_range`` with the
    largest BIC is used.
    """

    def __init__(
        self,
        n_components=None,
        k_range=(1, 6),
        normalize=True,
        max_iter=500,
        tol=1e-6,
        n_init_kmeans=10,
        random_state=0,
    ):
        self.n_components = n_components
        self.k_range = k_range
        self.normalize = normalize
        self.max_iter = max_iter
        self.tol = tol
        self.n_init_kmeans = n_init_kmeans
        self.random_state = random_state

    def _initialize(self, W, k):
        best = None
        for r in range(self.n_init_kmeans):
            rows = make_rng(self.random_state, "em-init", k, r).choice(len(W), size=k, replace=False)
            labels, C, _, _ = lloyd(W, W[rows], self.max_iter)
            labels, C = compact_labels(labels, C)
            score = sse(W, labels, C)
            if best is None or score < best[0]:
                best = (score, labels, C)
        _, labels, C = best
        counts = np.bincount(labels, minlength=len(C)).astype(float)
        variances = np.array([W[labels == j].var(axis=0) for j in range(len(C))])
        return counts / len(W), C.copy(), variances

    def _fit_k(self, W, k, floor):
        weights, means, variances = self._initialize(W, k)
        variances = np.maximum(variances, floor[None, :])
        history = []
        iterations = 0
        while True:
            resp, ll = _e_step(W, weights, means, variances)
            history.append(ll)
            if len(history) > 1 and ll - history[-2] < self.tol:
                break
            if iterations >= self.max_iter:
                break
            weights, means, variances = _m_step(W, resp, floor, means, variances)
            iterations += 1
        n, d = W.shape
        kk = len(weights)
        n_params = (kk - 1) + 2 * kk * d
        bic = ll - 0.5 * n_params * math.log(n)
        return {
            "weights": weights,
            "means": means,
            "variances": variances,
            "responsibilities": resp,
            "log_likelihood": ll,
            "log_likelihood_history": history,
            "iterations": iterations,
            "bic": bic,
        }

    def fit(self, X, y=None):
        X, W = self._to_working(X)
        n = len(W)
        rng = W.max(axis=0) - W.min(axis=0)
        floor = 1e-6 * np.where(rng > 0, rng, 1.0) ** 2
        if self.n_components is not None:
            k = self._check_k(self.n_components, n)
            fit = self._fit_k(W, k, floor)
            self.bic_by_k_ = {k: fit["bic"]}
        else:
            lo, hi = self.k_range
            self.bic_by_k_ = {}
            fit = None
            for k in range(max(1, lo), min(hi, n) + 1):
                cand = self._fit_k(W, k, floor)
                self.bic_by_k_[k] = cand["bic"]
                if fit is None or cand["bic"] > fit["bic"]:
                    fit = cand
        hard = np.argmax(fit["responsibilities"], axis=1)
        labels, means = compact_labels(hard, fit["means"])
        self.labels_ = labels
        self.weights_ = fit["weights"]
        self.means_ = fit["means"]
        self.variances_ = fit["variances"]
        self.responsibilities_ = fit["responsibilities"]
        self.log_likelihood_history_ = fit["log_likelihood_history"]
        self.n_iter_ = fit["iterations"]
        self.bic_ = fit["bic"]
        self.cluster_centers_ = self._from_working(means)
        return self

    def predict_proba(self, X):
        resp, _ = _e_step(self._working(X), self.weights_, self.means_, self.variances_)
        return resp

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)
