"""Comparison metrics between binned distributions: total variation,
chi-square, and Kolmogorov-Smirnov on marginals."""

import numpy as np
from scipy import stats

from .errors import ConfigurationError


def tv_distance(p, q):
    """Half the L1 distance between the normalized weight arrays.

    Arrays must share their binning (same shape); each is normalized to unit
    mass first, so under-capture does not masquerade as disagreement.
    """
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    if p.shape != q.shape:
        raise ConfigurationError(f"binning mismatch: {p.shape} vs {q.shape}")
    sp, sq = p.sum(), q.sum()
    if sp <= 0 or sq <= 0:
        return 1.0 if (sp > 0) != (sq > 0) else 0.0
    return 0.5 * float(np.abs(p / sp - q / sq).sum())


def chi_square_pvalue(observed_counts, expected_probs=None, min_expected=5.0):
    """Pearson chi-square p-value of counts against expected probabilities
    (uniform when omitted).  Bins with tiny expectation are pooled."""
    obs = np.asarray(observed_counts, float)
    n = obs.sum()
    if expected_probs is None:
        exp = np.full(obs.shape, n / obs.size)
    else:
        expected_probs = np.asarray(expected_probs, float)
        exp = n * expected_probs / expected_probs.sum()
    obs, exp = obs.ravel(), exp.ravel()
    keep = exp >= min_expected
    if keep.sum() < 2:
        raise ConfigurationError("too few adequately populated bins")
    obs_k = np.append(obs[keep], obs[~keep].sum())
    exp_k = np.append(exp[keep], exp[~keep].sum())
    if exp_k[-1] <= 0:
        obs_k, exp_k = obs_k[:-1], exp_k[:-1]
    # chisquare requires matching totals; rescale expectation to the data
    exp_k *= obs_k.sum() / exp_k.sum()
    return float(stats.chisquare(obs_k, exp_k).pvalue)


def ks_statistic_binned(p, q, edges=None):
    """KS statistic between two binned 1D distributions (same binning)."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    if p.shape != q.shape:
        raise ConfigurationError("binning mismatch")
    cp = np.cumsum(p) / p.sum()
    cq = np.cumsum(q) / q.sum()
    return float(np.max(np.abs(cp - cq)))


def ks_exponential_pvalue(samples, mean):
    """KS test of samples against Exponential(mean)."""
    samples = np.asarray(samples, float)
    return float(stats.kstest(samples, "expon", args=(0, mean)).pvalue)


def loglog_slope(x, y):
    """Least-squares slope of log y against log x, with its standard error."""
    x = np.log(np.asarray(x, float))
    y = np.log(np.asarray(y, float))
    if x.size < 2:
        raise ConfigurationError("need at least two points for a slope")
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = coef
    if x.size > 2:
        dof = x.size - 2
        resid = y - A @ coef
        s2 = float(resid @ resid) / dof
        sx = float(((x - x.mean()) ** 2).sum())
        stderr = np.sqrt(s2 / sx)
    else:
        stderr = 0.0
    return float(slope), float(intercept), float(stderr)
