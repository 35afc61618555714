"""Transmitter-knowledge policies: channel state -> per-eigenmode powers.

Conventions used throughout:

* ``per_mode`` holds the effective per-eigenmode powers that enter the mutual
  information sum(log2(1 + p_k lambda_k)); for equal-power (temporal) schemes
  that is P_total / M, for spatial schemes (beamforming, optimal) the mode
  powers themselves.
* ``tx_power`` is the physical transmit power drawn from the average-power
  budget; it differs from sum(per_mode) when tx > rx or when only the top
  modes carry data.
* Rates are bits/s/Hz (log base 2).  A scheme targeting rate R over the top
  ``i`` modes uses the inversion constant k = M (2^(R/i) - 1): each served
  mode then clears its R/i share, which is what makes in-bin decoding
  guaranteed for MIMO links as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import special
from .eigdist import EigDistribution, cdf_exponent
from .quantizer import Quantizer
from .randmat import AntennaConfig, sample_eigs
from .tradeoff import g_function  # canonical home; re-exported here for API symmetry

__all__ = [
    "PowerAllocation", "NoCsit", "Beamforming", "TemporalPerfect", "OptimalPerfect",
    "QuantizedTemporal", "JointRatePower", "allocate", "mutual_information",
    "g_function", "temporal_cutoff_perfect", "temporal_cutoff_budget",
    "joint_threshold", "joint_throughput", "csir_full_mux_outage",
    "calibrate_power_cut", "conjecture_region_report", "batch_outage",
    "effective_k", "TemporalCutoff",
]

# Decode margin absorbing float rounding in schemes designed to meet the rate
# with equality (inversion puts the worst served state exactly at rate R).
_RATE_EPS = 1e-9


def effective_k(tx: int, rate_bits: float, modes: int) -> float:
    """Inversion constant M (2^(R/i) - 1) for rate R split over the top i modes."""
    if rate_bits <= 0:
        raise ValueError(f"rate must be positive, got {rate_bits}")
    return tx * (2.0 ** (rate_bits / modes) - 1.0)


@dataclass(frozen=True)
class PowerAllocation:
    per_mode: tuple  # effective per-eigenmode powers (MI weights)
    total: float  # sum of per_mode
    transmitting: bool
    tx_power: float  # physical power drawn from the budget

    @classmethod
    def off(cls, m: int) -> "PowerAllocation":
        return cls((0.0,) * m, 0.0, False, 0.0)


@dataclass(frozen=True)
class NoCsit:
    p_av: float
    rate_bits: float


@dataclass(frozen=True)
class Beamforming:
    p_av: float
    rate_bits: float


@dataclass(frozen=True)
class TemporalPerfect:
    """Truncated inversion on the smallest eigenvalue, equal power per antenna."""

    p_av: float
    rate_bits: float
    gamma0: float
    tx: int
    m: int

    @property
    def k_per_mode(self) -> float:
        return 2.0 ** (self.rate_bits / self.m) - 1.0


@dataclass(frozen=True)
class OptimalPerfect:
    """Long-term-budget optimal power control; transmits while the codeword
    power stays under the calibrated cut."""

    p_av: float
    rate_bits: float
    power_cut: float
    m: int


@dataclass(frozen=True)
class QuantizedTemporal:
    """Feedback bin lookup on eigenvalue ``quant_index``; data on the top
    ``decode_index`` modes.  Always transmits: outage is a decoding failure
    inside bin 0."""

    p_av: float
    rate_bits: float
    quantizer: Quantizer
    tx: int
    m: int
    quant_index: int = 1
    decode_index: int | None = None

    @property
    def decode_modes(self) -> int:
        return self.quant_index if self.decode_index is None else self.decode_index


@dataclass(frozen=True)
class JointRatePower:
    """Two-codebook rate+power control: above gamma_th the variable-rate
    codebook rides alpha * p_av outage-free; below it the remaining feedback
    bins power-control a fixed 1 bit/s/Hz codebook."""

    p_av: float
    alpha: float
    r1: float
    gamma_th: float
    inner: Quantizer
    tx: int
    m: int
    index: int = 1
    fixed_rate_bits: float = 1.0

    @property
    def c1_rate_bits(self) -> float:
        # Capped so states above gamma_th decode by construction; grows like
        # r1 log2(alpha p_av), preserving the multiplexing gain.
        return self.r1 * math.log2(1.0 + self.alpha * self.p_av * self.gamma_th / self.tx)


def allocate(scheme, lambdas) -> PowerAllocation:
    """Per-eigenmode transmit powers for one channel draw (largest-first)."""
    lam = np.asarray(lambdas, dtype=float)
    m = len(lam)
    if isinstance(scheme, NoCsit):
        per = (scheme.p_av / _tx_of(scheme, m),) * m
        return PowerAllocation(per, sum(per), True, scheme.p_av)
    if isinstance(scheme, Beamforming):
        per = (scheme.p_av,) + (0.0,) * (m - 1)
        return PowerAllocation(per, scheme.p_av, True, scheme.p_av)
    if isinstance(scheme, TemporalPerfect):
        if lam[-1] <= scheme.gamma0 or lam[-1] <= 0.0:
            return PowerAllocation.off(m)
        p = scheme.k_per_mode / lam[-1]
        return PowerAllocation((p,) * m, p * m, True, p * scheme.tx)
    if isinstance(scheme, OptimalPerfect):
        if np.any(lam <= 0.0):
            return PowerAllocation.off(m)
        gmean = float(np.exp(np.mean(np.log(lam))))
        base = 2.0 ** (scheme.rate_bits / scheme.m) / gmean
        per = np.clip(base - 1.0 / lam, 0.0, None)
        total = float(np.sum(per))
        if total > scheme.power_cut:
            return PowerAllocation.off(m)
        return PowerAllocation(tuple(per), total, True, total)
    if isinstance(scheme, QuantizedTemporal):
        q = scheme.quantizer
        pj = q.bin_power(lam[scheme.quant_index - 1])
        i = scheme.decode_modes
        eff = pj / scheme.tx
        per = (eff,) * i + (0.0,) * (m - i)
        return PowerAllocation(per, eff * i, True, pj)
    if isinstance(scheme, JointRatePower):
        lam_i = lam[scheme.index - 1]
        if lam_i > scheme.gamma_th:
            eff = scheme.alpha * scheme.p_av / scheme.tx
            per = (eff,) * scheme.index + (0.0,) * (m - scheme.index)
            return PowerAllocation(per, eff * scheme.index, True, scheme.alpha * scheme.p_av)
        pj = scheme.inner.bin_power(lam_i)
        eff = pj / scheme.tx
        per = (eff,) * scheme.index + (0.0,) * (m - scheme.index)
        return PowerAllocation(per, eff * scheme.index, True, pj)
    raise TypeError(f"unknown scheme {scheme!r}")


def _tx_of(scheme, m: int) -> int:
    return getattr(scheme, "tx", m)


def mutual_information(lambdas, alloc: PowerAllocation) -> float:
    """sum_k log2(1 + p_k lambda_k) over the allocated eigenmodes."""
    lam = np.asarray(lambdas, dtype=float)
    per = np.asarray(alloc.per_mode, dtype=float)
    return float(np.sum(np.log2(1.0 + per * lam)))


def target_rate(scheme) -> float:
    """Rate the receiver must decode for the slot to count as served."""
    if isinstance(scheme, JointRatePower):
        return scheme.c1_rate_bits
    return scheme.rate_bits


# --- perfect-CSIT cutoff laws --------------------------------------------------


@dataclass(frozen=True)
class TemporalCutoff:
    gamma0: float
    zero_outage: bool


def temporal_cutoff_perfect(cfg: AntennaConfig, r: float, p_av: float) -> TemporalCutoff:
    """Cutoff of the asymptotic budget equation (theory form).

    Solves Gamma(n-m, gamma0) = Gamma(n-m+1) p^(1-r/m) / m for n > m; once the
    right side reaches Gamma(n-m) the cutoff is zero and the outage vanishes
    (that covers n >= 2m at full multiplexing, the boundary case included).
    For n = m the logarithmic form gamma0 = exp(-p^(1-r/m)/m) applies instead.
    """
    m, n = cfg.m, cfg.n
    if not 0 <= r <= m:
        raise ValueError(f"multiplexing must lie in [0, {m}], got {r}")
    if p_av <= 0:
        raise ValueError(f"p_av must be positive, got {p_av}")
    if n == m:
        return TemporalCutoff(math.exp(-(p_av ** (1.0 - r / m)) / m), False)
    rhs = math.gamma(n - m + 1) / m * p_av ** (1.0 - r / m)
    if rhs >= math.gamma(n - m):
        return TemporalCutoff(0.0, True)
    return TemporalCutoff(special.inverse_upper(n - m, rhs), False)


def temporal_cutoff_budget(cfg: AntennaConfig, rate_bits: float, p_av: float) -> float:
    """Cutoff from the exact finite-SNR budget under the model eigenvalue law.

    Spend(g) = M k_pm E[1/lambda_m; lambda_m > g] with k_pm = 2^(R/m) - 1;
    returns 0 when even full inversion fits the budget.
    """
    m, n = cfg.m, cfg.n
    k_pm = 2.0 ** (rate_bits / m) - 1.0
    scale = cfg.tx * k_pm

    if n > m:
        # E[1/lambda; lambda > g] = Gamma(n-m, g) / Gamma(n-m+1)
        full = scale * math.gamma(n - m) / math.gamma(n - m + 1)
        if full <= p_av:
            return 0.0
        target = p_av * math.gamma(n - m + 1) / scale
        return special.inverse_upper(n - m, target)
    # n == m: spend(g) = scale * E1(g), unbounded as g -> 0
    target = p_av / scale
    lo, hi = -700.0, 5.0
    if target >= special.exp1(math.exp(lo)):
        return 0.0  # cutoff below float range; outage indistinguishable from 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if special.exp1(math.exp(mid)) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return math.exp(0.5 * (lo + hi))


# --- joint rate+power control ---------------------------------------------------


def joint_threshold(cfg: AntennaConfig, i: int, alpha: float, p_av: float) -> float:
    """Vanishing switch threshold (log(alpha p))^(-1/k), k the CDF exponent."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if alpha * p_av <= math.e:
        raise ValueError("SNR too low for joint scheme (alpha * p_av must exceed e)")
    k = cdf_exponent(cfg, i)
    return (math.log(alpha * p_av)) ** (-1.0 / k)


def joint_throughput(cfg: AntennaConfig, i: int, alpha: float, r_factor: float,
                     p_av: float, dist: EigDistribution) -> float:
    """Mean delivered rate of the variable-rate codebook."""
    gth = joint_threshold(cfg, i, alpha, p_av)
    return r_factor * math.log2(1.0 + alpha * p_av * gth) * (1.0 - dist.cdf(gth))


# --- Monte Carlo estimates -------------------------------------------------------


def csir_full_mux_outage(cfg: AntennaConfig, trials: int, rng,
                         p_av: float | None = None) -> tuple[float, float]:
    """Outage at full multiplexing with receiver-only CSI (estimate, stderr).

    Default is the SNR -> infinity limit event prod(lambda) <= M^-m; with
    ``p_av`` the finite-SNR equal-power outage at rate m log2(p_av).
    """
    if trials < 10_000:
        raise ValueError(f"need at least 1e4 trials, got {trials}")
    m = cfg.m
    hits = 0
    done = 0
    chunk = 1 << 18
    while done < trials:
        c = min(chunk, trials - done)
        lam = sample_eigs(cfg, rng, c)
        if p_av is None:
            hits += int(np.sum(np.prod(lam, axis=1) <= cfg.tx ** (-m)))
        else:
            mi = np.sum(np.log2(1.0 + (p_av / cfg.tx) * lam), axis=1)
            hits += int(np.sum(mi < m * math.log2(p_av)))
        done += c
    p = hits / trials
    return p, math.sqrt(max(p * (1.0 - p), 1e-30) / trials)


def calibrate_power_cut(cfg: AntennaConfig, rate_bits: float, p_av: float,
                        samples: int, rng) -> float:
    """Codeword-power cut making the optimal-control average meet the budget.

    The cut is the empirical quantile of the per-codeword power sum at which
    E[sum P_i; sum <= cut] = p_av; found by a partial-sum search over a
    sampled population (bisection on the sorted sums).
    """
    lam = sample_eigs(cfg, rng, samples)
    base = 2.0 ** (rate_bits / cfg.m) / np.exp(np.mean(np.log(lam), axis=1))
    per = np.clip(base[:, None] - 1.0 / lam, 0.0, None)
    sums = np.sort(per.sum(axis=1))
    csum = np.cumsum(sums)
    mean_all = csum[-1] / samples
    if mean_all <= p_av:
        return math.inf
    idx = int(np.searchsorted(csum / samples, p_av, side="right"))
    idx = min(max(idx, 1), samples - 1)
    return float(sums[idx - 1])


def conjecture_region_report(cfg: AntennaConfig, trials: int, rng) -> dict:
    """Monte Carlo probe of the unresolved full-multiplexing region.

    Estimates E[(prod lambda)^(-1/m)] whose comparison against 1/m decides
    whether the constant-outage region is empty; the question stays flagged
    as unresolved either way.
    """
    lam = sample_eigs(cfg, rng, trials)
    vals = np.prod(lam, axis=1) ** (-1.0 / cfg.m)
    est = float(np.mean(vals))
    se = float(np.std(vals) / math.sqrt(trials))
    return {
        "estimate": est,
        "stderr": se,
        "reference": 1.0 / cfg.m,
        "status": "unresolved: zero-or-constant outage",
    }


# --- vectorized evaluation for the sweep engine ----------------------------------


def batch_outage(scheme, lam: np.ndarray):
    """Vectorized outage decision for a batch of eigenvalue draws.

    Returns (no_tx, decode_fail, tx_power): boolean masks for the two outage
    causes plus the physical power of each slot.  Mirrors allocate() +
    mutual_information() exactly; the scalar pair stays the reference
    implementation and the parity is pinned by tests.
    """
    count, m = lam.shape
    rate = target_rate(scheme)
    thresh = rate * (1.0 - _RATE_EPS)
    if isinstance(scheme, NoCsit):
        mi = np.sum(np.log2(1.0 + (scheme.p_av / _tx_of(scheme, m)) * lam), axis=1)
        no_tx = np.zeros(count, dtype=bool)
        fail = mi < thresh
        return no_tx, fail, np.full(count, scheme.p_av)
    if isinstance(scheme, Beamforming):
        mi = np.log2(1.0 + scheme.p_av * lam[:, 0])
        no_tx = np.zeros(count, dtype=bool)
        return no_tx, mi < thresh, np.full(count, scheme.p_av)
    if isinstance(scheme, TemporalPerfect):
        lmin = lam[:, -1]
        no_tx = lmin <= scheme.gamma0
        per = np.where(no_tx, 0.0, scheme.k_per_mode / np.where(lmin > 0, lmin, 1.0))
        mi = np.sum(np.log2(1.0 + per[:, None] * lam), axis=1)
        fail = ~no_tx & (mi < thresh)
        return no_tx, fail, per * scheme.tx
    if isinstance(scheme, OptimalPerfect):
        safe = np.where(lam > 0, lam, 1e-300)
        base = 2.0 ** (scheme.rate_bits / scheme.m) / np.exp(np.mean(np.log(safe), axis=1))
        per = np.clip(base[:, None] - 1.0 / safe, 0.0, None)
        total = per.sum(axis=1)
        no_tx = total > scheme.power_cut
        mi = np.sum(np.log2(1.0 + per * lam), axis=1)
        fail = ~no_tx & (mi < thresh)
        return no_tx, fail, np.where(no_tx, 0.0, total)
    if isinstance(scheme, QuantizedTemporal):
        q = scheme.quantizer
        lam_q = lam[:, scheme.quant_index - 1]
        bins = np.searchsorted(np.asarray(q.thresholds), lam_q, side="right")
        pj = np.asarray(q.powers)[bins]
        i = scheme.decode_modes
        mi = np.sum(np.log2(1.0 + (pj / scheme.tx)[:, None] * lam[:, :i]), axis=1)
        no_tx = np.zeros(count, dtype=bool)
        return no_tx, mi < thresh, pj
    if isinstance(scheme, JointRatePower):
        lam_i = lam[:, scheme.index - 1]
        c1 = lam_i > scheme.gamma_th
        i = scheme.index
        eff = np.where(c1, scheme.alpha * scheme.p_av, np.asarray(scheme.inner.powers)[
            np.searchsorted(np.asarray(scheme.inner.thresholds), lam_i, side="right")])
        mi = np.sum(np.log2(1.0 + (eff / scheme.tx)[:, None] * lam[:, :i]), axis=1)
        rate_c1 = scheme.c1_rate_bits * (1.0 - _RATE_EPS)
        rate_c2 = scheme.fixed_rate_bits * (1.0 - _RATE_EPS)
        fail = np.where(c1, mi < rate_c1, mi < rate_c2)
        no_tx = np.zeros(count, dtype=bool)
        return no_tx, fail, eff
    raise TypeError(f"unknown scheme {scheme!r}")
