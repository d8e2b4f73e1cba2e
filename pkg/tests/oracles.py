"""Reference calculations that share no code path with the package."""

import numpy as np
from scipy.special import erfc, erfinv


def std_normal_cdf(z):
    return 0.5 * erfc(-np.asarray(z, dtype=float) / np.sqrt(2.0))


def _antiderivative(t, mu, sigma):
    # d/dt of sigma * (z Phi(z) + phi(z)) is Phi(z) with z = (t - mu) / sigma
    z = (t - mu) / sigma
    return sigma * (z * std_normal_cdf(z) + np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi))


def expected_unfiltered_frequency(t_c, n_bins=20, mu_range=(0.0, 1.0), sigma_range=(0.05, 0.3), horizon=1.0, nodes=400):
    """Per-bin P(positive | observed at t_c, forecast in bin) by quadrature.

    Integrates over mu and sigma with Gauss-Legendre and over t_i in closed
    form. For fixed (mu, sigma) the forecast F(t_i) lands in bin [a, b) exactly
    when t_i lies in [mu + sigma q(a), mu + sigma q(b)), q the normal quantile.
    Given t_i <= t_c the record is always observed and positive w.p. F(t_i);
    given t_i > t_c it is observed only if positive, w.p. F(t_c).
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    mu = 0.5 * (mu_range[1] - mu_range[0]) * (x + 1) + mu_range[0]
    sg = 0.5 * (sigma_range[1] - sigma_range[0]) * (x + 1) + sigma_range[0]
    M, S = np.meshgrid(mu, sg, indexing="ij")
    W = np.outer(w, w)
    F_tc = std_normal_cdf((t_c - M) / S)
    out = []
    for k in range(n_bins):
        a, b = k / n_bins, (k + 1) / n_bins
        qa = -np.inf if a == 0 else np.sqrt(2) * erfinv(2 * a - 1)
        qb = np.inf if b == 1 else np.sqrt(2) * erfinv(2 * b - 1)
        lo = np.clip(M + S * qa, 0.0, horizon)
        hi = np.clip(M + S * qb, 0.0, horizon)
        # part scheduled before t_c, part after
        lo1, hi1 = lo, np.maximum(lo, np.minimum(hi, t_c))
        lo2, hi2 = np.maximum(lo, t_c), np.maximum(np.maximum(lo, t_c), hi)
        num = (_antiderivative(hi1, M, S) - _antiderivative(lo1, M, S)) + F_tc * (hi2 - lo2)
        den = (hi1 - lo1) + F_tc * (hi2 - lo2)
        total = np.sum(W * den)
        out.append(np.sum(W * num) / total if total > 0 else np.nan)
    return np.array(out)


def classify_by_enumeration(occurrence, t_i, t_c):
    """Outcome name from the verbal rules, written out case by case."""
    happened_by_schedule = occurrence is not None and occurrence <= t_i
    happened_by_collection = occurrence is not None and occurrence <= t_c
    schedule_passed = t_i <= t_c
    if happened_by_schedule and happened_by_collection:
        return "POSITIVE"
    if schedule_passed and not happened_by_schedule:
        return "NEGATIVE"
    return "CENSORED"
