"""Closed-form and asymptotic error probabilities for the correlation
detector.

The decision statistic is the ratio xi = y_plus / y_minus of two
independent noncentral chi-square sums, so conditional error rates are
values of the doubly noncentral F distribution:

    Pr(xi <= x) = sum_j sum_k pois(j; lam1/2) pois(k; lam2/2)
                  * I_{x/(1+x)}(nu1/2 + j, nu2/2 + k)

with nu1 = nu2 = m_sc N and lam = m_sc N |h|^2 / sigma_n^2 for the
matching hypothesis half. The regularized-beta table is built once per
evaluation from a single corner value plus the two one-step
recurrences, all in the log domain, and the double series is truncated
to mode-centered Poisson windows.

The noncentrality convention above (Poisson weights in lam/2) was
pinned empirically against a chi-square-ratio sampling oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special as _sp
from scipy import stats as _st

from .specfun import q_func, q_inv


@dataclass(frozen=True)
class SeriesControl:
    """Truncation control for the double Poisson series."""

    rel_tol: float = 1e-12
    max_terms: int = 20000

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must be in (0, 1)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be positive")


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class DetectionParams:
    """Inputs the error-rate formulas need.

    h_on_sq and h_off_sq are the squared composite gain magnitudes in
    the two BD states; noise_power is per subcarrier.
    """

    m_sc: int
    n_chips: int
    h_on_sq: float
    h_off_sq: float
    noise_power: float
    prior_s0: float = 0.5

    def __post_init__(self):
        if self.m_sc < 1 or self.n_chips < 1:
            raise ValueError("m_sc and n_chips must be positive")
        if (self.m_sc * self.n_chips) % 2:
            raise ValueError("m_sc * n_chips must be even")
        if self.h_on_sq < 0.0 or self.h_off_sq < 0.0:
            raise ValueError("squared gains must be non-negative")
        if self.noise_power <= 0.0:
            raise ValueError("noise_power must be positive")
        if not 0.0 <= self.prior_s0 <= 1.0:
            raise ValueError("prior_s0 must be in [0, 1]")


def _poisson_window(half_lam, ctl: SeriesControl):
    """Index window around the Poisson mode holding >= 1 - rel_tol of
    the mass, plus the weights on it."""
    if half_lam <= 0.0:
        return 0, np.array([1.0])
    dist = _st.poisson(half_lam)
    lo = max(int(dist.ppf(ctl.rel_tol / 4.0)) - 2, 0)
    hi = int(dist.isf(ctl.rel_tol / 4.0)) + 2
    while dist.cdf(hi) - (dist.cdf(lo - 1) if lo else 0.0) < 1.0 - ctl.rel_tol:
        if hi - lo + 1 > ctl.max_terms:
            break
        lo = max(lo - 16, 0)
        hi += 16
    if hi - lo + 1 > ctl.max_terms:
        raise RuntimeError(
            "Poisson window needs more than max_terms indices; raise "
            "max_terms or rel_tol")
    k = np.arange(lo, hi + 1, dtype=float)
    logw = k * math.log(half_lam) - half_lam - _sp.gammaln(k + 1.0)
    return lo, np.exp(logw)


def _reg_beta_table(x, a0, b0, nj, nk):
    """I_x(a0 + j, b0 + k) for j < nj, k < nk.

    Built from one betainc corner and the two single-step identities

        I_x(a+1, b) = I_x(a, b) - x^a (1-x)^b G(a+b) / (G(a+1) G(b))
        I_x(a, b+1) = I_x(a, b) + x^a (1-x)^b G(a+b) / (G(a) G(b+1))

    with every step term formed in the log domain. Costs two cumsums
    instead of nj * nk betainc calls.
    """
    la = math.log(x)
    lb = math.log1p(-x)
    corner = float(_sp.betainc(a0, b0, x))
    col = np.empty(nj)
    col[0] = corner
    if nj > 1:
        j = np.arange(nj - 1, dtype=float)
        lt = ((a0 + j) * la + b0 * lb + _sp.gammaln(a0 + j + b0)
              - _sp.gammaln(a0 + j + 1.0) - _sp.gammaln(b0))
        col[1:] = corner - np.cumsum(np.exp(lt))
    if nk == 1:
        return np.clip(col[:, None], 0.0, 1.0)
    j = np.arange(nj, dtype=float)[:, None]
    t = np.arange(nk - 1, dtype=float)[None, :]
    # gammaln(a0 + b0 + j + t) read out of one 1-D array via windows
    s = _sp.gammaln(a0 + b0 + np.arange(nj + nk - 2, dtype=float))
    hank = np.lib.stride_tricks.sliding_window_view(s, nk - 1)
    lt = ((a0 + j) * la + (b0 + t) * lb + hank[:nj]
          - _sp.gammaln(a0 + j) - _sp.gammaln(b0 + t + 1.0))
    out = np.empty((nj, nk))
    out[:, 0] = col
    out[:, 1:] = col[:, None] + np.cumsum(np.exp(lt), axis=1)
    return np.clip(out, 0.0, 1.0)


def doubly_noncentral_f_cdf(x, nu1, nu2, lam1, lam2,
                            ctl: SeriesControl = DEFAULT_CONTROL):
    """CDF of the ratio of two independent noncentral chi-squares,
    each divided by its degrees of freedom being unnecessary here since
    nu1 = nu2 in every use; the ratio is taken raw."""
    if x <= 0.0:
        raise ValueError("x must be positive")
    if nu1 < 2 or nu2 < 2 or nu1 % 2 or nu2 % 2:
        raise ValueError("degrees of freedom must be even and positive")
    if lam1 < 0.0 or lam2 < 0.0:
        raise ValueError("noncentralities must be non-negative")
    jlo, wj = _poisson_window(lam1 / 2.0, ctl)
    klo, wk = _poisson_window(lam2 / 2.0, ctl)
    xb = x / (1.0 + x)
    table = _reg_beta_table(xb, nu1 / 2.0 + jlo, nu2 / 2.0 + klo,
                            wj.size, wk.size)
    val = math.fsum(wj * (table @ wk))
    return min(max(val, 0.0), 1.0)


def exact_ber(p: DetectionParams, ctl: SeriesControl = DEFAULT_CONTROL):
    """Error probability of the correlation detector at threshold
    xi = 1, composed over the two transmit hypotheses."""
    nu = p.m_sc * p.n_chips
    lam_on = nu * p.h_on_sq / p.noise_power
    lam_off = nu * p.h_off_sq / p.noise_power
    err0 = doubly_noncentral_f_cdf(1.0, nu, nu, lam_on, lam_off, ctl)
    err1 = 1.0 - doubly_noncentral_f_cdf(1.0, nu, nu, lam_off, lam_on, ctl)
    return p.prior_s0 * err0 + (1.0 - p.prior_s0) * err1


def gaussian_ber(p: DetectionParams):
    """Large-m_sc asymptote of exact_ber:
    Q(sqrt(N m_sc (h_on^2 - h_off^2)^2 /
    (4 sigma^2 (sigma^2 + h_on^2 + h_off^2))))."""
    s2 = p.noise_power
    num = p.n_chips * p.m_sc * (p.h_on_sq - p.h_off_sq) ** 2
    den = 4.0 * s2 * (s2 + p.h_on_sq + p.h_off_sq)
    return float(q_func(np.sqrt(num / den)))


def fsk_coherent_ber(gamma_b):
    """Coherent binary FSK error rate Q(sqrt(gamma_b))."""
    if gamma_b < 0.0:
        raise ValueError("gamma_b must be non-negative")
    return float(q_func(np.sqrt(gamma_b)))


def ber_vs_iota(iota, gamma, m_sc, n_chips,
                ctl: SeriesControl = DEFAULT_CONTROL, engine: str = "exact"):
    """BER as a function of the scatter ratio at link SNR gamma.

    Maps h_off^2 = gamma sigma^2 and h_on^2 = gamma sigma^2 |1+iota|^2
    (sigma^2 = 1 without loss of generality) and evaluates the chosen
    engine. Depends on iota only through |1 + iota|^2.

    Destructive geometries (|1+iota| < 1) flip the sign of the gain
    difference; the detector tracks the true sign, so under equal
    priors its error rate is the exact_ber of the role-swapped problem.
    The gaussian engine is already even in the gap and needs no swap.
    """
    if not np.isfinite(iota):
        raise ValueError("iota must be finite")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    u = abs(1.0 + iota) ** 2
    big, small = (u, 1.0) if u >= 1.0 else (1.0, u)
    p = DetectionParams(m_sc=m_sc, n_chips=n_chips,
                        h_on_sq=gamma * big, h_off_sq=gamma * small,
                        noise_power=1.0)
    if engine == "gaussian":
        return gaussian_ber(p)
    if engine == "exact":
        return exact_ber(p, ctl)
    raise ValueError(f"unknown engine: {engine}")


def iota_magnitude_for_target(ber_target, gamma, m_sc, n_chips):
    """Smallest |1 + iota|^2 > 1 whose gaussian-engine BER hits
    ber_target at link SNR gamma. Exact inverse of ber_vs_iota with the
    gaussian engine: the round trip reproduces ber_target to working
    precision."""
    if not 0.0 < ber_target <= 0.5:
        raise ValueError("ber_target must be in (0, 0.5]")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    if ber_target == 0.5:
        return 1.0
    z = q_inv(ber_target)
    nm = float(n_chips * m_sc)
    return 1.0 + (2.0 * z * z
                  + 2.0 * z * math.sqrt(z * z + nm * (2.0 * gamma + 1.0))) \
        / (nm * gamma)


def params_for_scheme(p: DetectionParams, scheme: str) -> DetectionParams:
    """Detection parameters for the scheme-equivalent correlation
    problem: the two FSK tones differ on exactly half the chips, so its
    exact BER is the antipodal problem at n_chips / 2."""
    if scheme == "FSK":
        if p.n_chips % 2:
            raise ValueError("FSK needs an even chip count")
        return replace(p, n_chips=p.n_chips // 2)
    return p
