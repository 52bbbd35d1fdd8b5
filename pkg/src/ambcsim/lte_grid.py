"""Sounding-signal resource grid model.

Models the uplink sounding symbol at the fidelity the detection chain
needs: a fixed number of unit-modulus subcarriers per sounding symbol,
a fixed sounding period, and the per-symbol energy statistic

    y[l] = sum_k |S_r[k; l]|^2.

With noise power sigma_n^2 per subcarrier and a frequency-flat gain h,
the normalized statistic 2 y / sigma_n^2 follows a noncentral
chi-square law with 2 m_sc degrees of freedom and noncentrality
2 m_sc |h|^2 / sigma_n^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SrsConfig:
    """Static sounding-signal configuration."""

    num_rb: int = 50
    subcarrier_spacing_hz: float = 15e3
    m_sc: int = 288
    t_srs_s: float = 2e-3
    carrier_freq_hz: float = 782e6
    bandwidth_hz: float = 10e6

    def __post_init__(self):
        if self.m_sc < 24:
            raise ValueError("m_sc must be at least 24")
        if self.num_rb <= 0:
            raise ValueError("num_rb must be positive")
        if self.t_srs_s <= 0.0:
            raise ValueError("t_srs_s must be positive")
        if self.subcarrier_spacing_hz <= 0.0 or self.bandwidth_hz <= 0.0:
            raise ValueError("spacing and bandwidth must be positive")
        if self.carrier_freq_hz <= 0.0:
            raise ValueError("carrier_freq_hz must be positive")

    @property
    def chip_rate_hz(self):
        """Sampling rate the sounding period gives the backscatter link."""
        return 1.0 / self.t_srs_s


@dataclass(frozen=True)
class SrsSymbol:
    res: np.ndarray
    symbol_index: int = 0


@dataclass(frozen=True)
class EnergySample:
    y: float
    noise_power: float
    symbol_index: int = 0


def default_config() -> SrsConfig:
    """Standard configuration: 50 RB, 15 kHz spacing, 288 sounding
    subcarriers, 2 ms period (500 Hz chip rate), 782 MHz carrier,
    10 MHz bandwidth."""
    return SrsConfig()


def gen_srs_symbol(cfg: SrsConfig, l: int, rng) -> SrsSymbol:
    """Draw one transmitted sounding symbol.

    Subcarriers are unit modulus with uniformly random phases. Every
    downstream statistic depends on the sequence only through
    |S_t[k]| = 1, so the exact sequence structure is irrelevant; random
    phases keep the generator trivial and the energies exact.
    """
    if l < 0:
        raise ValueError("symbol index must be non-negative")
    phases = rng.uniform(0.0, _TWO_PI, cfg.m_sc)
    return SrsSymbol(res=np.exp(1j * phases), symbol_index=l)


def receive_symbol(sym: SrsSymbol, h: complex, noise_power: float, rng) -> EnergySample:
    """Pass one sounding symbol through gain h plus white complex noise
    and return its energy statistic."""
    if noise_power <= 0.0:
        raise ValueError("noise_power must be positive")
    m = sym.res.size
    noise = np.sqrt(noise_power / 2.0) * (
        rng.standard_normal(m) + 1j * rng.standard_normal(m))
    rx = h * sym.res + noise
    y = float(np.sum(np.abs(rx) ** 2))
    return EnergySample(y=y, noise_power=noise_power, symbol_index=sym.symbol_index)


def energy_statistic_direct(h: complex, cfg: SrsConfig, noise_power: float, rng) -> EnergySample:
    """Fast path: sample y straight from its chi-square law instead of
    synthesizing subcarriers. Statistically indistinguishable from
    receive_symbol(gen_srs_symbol(...), ...)."""
    y = energy_stream([h], cfg.m_sc, noise_power, rng)
    return EnergySample(y=float(y[0]), noise_power=noise_power)


def energy_stream(h, m_sc: int, noise_power: float, rng, per_re: bool = False):
    """Vector of energy statistics, one per entry of h.

    per_re=False samples each y directly from the noncentral chi-square
    law (the fast path). per_re=True synthesizes every subcarrier, which
    is what the direct path must match distributionally.
    """
    if noise_power <= 0.0:
        raise ValueError("noise_power must be positive")
    if m_sc < 1:
        raise ValueError("m_sc must be positive")
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    if per_re:
        out = np.empty(h.size)
        scale = np.sqrt(noise_power / 2.0)
        # chunked so the (chips x subcarriers) scratch stays small
        step = 4096
        for start in range(0, h.size, step):
            hh = h[start:start + step, None]
            sym = np.exp(1j * rng.uniform(0.0, _TWO_PI, (hh.shape[0], m_sc)))
            noise = scale * (rng.standard_normal((hh.shape[0], m_sc))
                             + 1j * rng.standard_normal((hh.shape[0], m_sc)))
            rx = hh * sym + noise
            out[start:start + step] = np.sum(rx.real ** 2 + rx.imag ** 2, axis=1)
        return out
    nonc = 2.0 * m_sc * np.abs(h) ** 2 / noise_power
    z = np.empty(h.size)
    pos = nonc > 0.0
    if np.any(pos):
        z[pos] = rng.noncentral_chisquare(2 * m_sc, nonc[pos])
    n_zero = int(np.sum(~pos))
    if n_zero:
        z[~pos] = rng.chisquare(2 * m_sc, size=n_zero)
    return (noise_power / 2.0) * z
