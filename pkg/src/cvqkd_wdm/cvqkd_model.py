"""Asymptotic CV-QKD key rate for a Gaussian-modulated coherent-state link.

Excess noise is referred to the channel output and is fully untrusted.
The receiver is ideal (unit efficiency, no electronic noise) and key
extraction uses reverse reconciliation. All variances are in shot-noise
units (SNU).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from .errors import InputDomainError, NumericalDomainError

HOMODYNE = 1
HETERODYNE = 2

V_MIN = 0.01
V_MAX = 100.0
V_TOL = 1e-4

# Symplectic eigenvalues this far below 1 are rounding noise, not a broken state.
NU_SLACK = 1e-9

# Below this Raman noise increment (SNU) the capacity drop is taken from the
# first-order expansion; a direct re-optimisation cannot resolve it in doubles.
LINEAR_DROP_LIMIT = 1e-9

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def dbm_to_w(p_dbm: float) -> float:
    return 1e-3 * 10.0 ** (p_dbm / 10.0)


@dataclass(frozen=True)
class QkdParams:
    """Physical and technological constants of a CV-QKD link."""

    f_sym: float = 1e9
    beta: float = 0.95
    mu: int = HETERODYNE
    xi_0: float = 1e-3
    xi_r: float = 1e-12
    p_opt_w: float = 1e-3
    alpha_0_db: float = 2.0
    alpha_l_db_per_km: float = 0.2

    def __post_init__(self):
        if not self.f_sym > 0:
            raise InputDomainError(f"f_sym must be > 0, got {self.f_sym}")
        if not 0 < self.beta <= 1:
            raise InputDomainError(f"beta must lie in (0, 1], got {self.beta}")
        if self.mu not in (HOMODYNE, HETERODYNE):
            raise InputDomainError(f"mu must be 1 (homodyne) or 2 (heterodyne), got {self.mu}")
        for name in ("xi_0", "xi_r", "p_opt_w", "alpha_0_db", "alpha_l_db_per_km"):
            value = getattr(self, name)
            if not value >= 0:
                raise InputDomainError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class KeyRateResult:
    r: float
    v_mod_opt: float
    key_rate_bps: float
    t: float
    xi: float


def transmittance(length_km: float, params: QkdParams) -> float:
    if length_km < 0:
        raise InputDomainError(f"length_km must be >= 0, got {length_km}")
    loss_db = params.alpha_0_db + params.alpha_l_db_per_km * length_km
    return 10.0 ** (-loss_db / 10.0)


def raman_noise(n_active_channels: int, params: QkdParams) -> float:
    if n_active_channels < 0:
        raise InputDomainError(f"n_active_channels must be >= 0, got {n_active_channels}")
    return params.xi_r * n_active_channels * params.p_opt_w


def excess_noise(n_active_channels: int, params: QkdParams) -> float:
    """Total excess noise at channel output with ``n`` co-propagating WDM channels."""
    return params.xi_0 + raman_noise(n_active_channels, params)


def entropy_g(x: float) -> float:
    """Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue ``x``."""
    if x < 1.0 - NU_SLACK:
        raise NumericalDomainError(f"symplectic eigenvalue {x} < 1")
    if x <= 1.0:
        return 0.0
    p = (x + 1.0) / 2.0
    m = (x - 1.0) / 2.0
    return p * math.log2(p) - m * math.log2(m)


def _holevo_eb(a: float, b: float, c2: float, mu: int) -> float:
    delta = a * a + b * b - 2.0 * c2
    det = a * b - c2
    disc = delta * delta - 4.0 * det * det
    s = math.sqrt(disc) if disc > 0 else 0.0
    nu1_sq = (delta + s) / 2.0
    # product form avoids cancellation when nu2 -> 1
    nu2_sq = det * det / nu1_sq
    if mu == HETERODYNE:
        nu3 = a - c2 / (b + 1.0)
    else:
        nu3 = math.sqrt(a * (a - c2 / b))
    return entropy_g(math.sqrt(nu1_sq)) + entropy_g(math.sqrt(nu2_sq)) - entropy_g(nu3)


def unclamped_secret_fraction(t: float, xi: float, v_mod: float, beta: float, mu: int) -> float:
    v = v_mod + 1.0
    a = v
    b = t * v_mod + 1.0 + xi
    c2 = t * (v * v - 1.0)
    i_ab = (mu / 2.0) * math.log2(1.0 + t * v_mod / (mu + xi))
    return beta * i_ab - _holevo_eb(a, b, c2, mu)


def secret_fraction(t: float, xi: float, v_mod: float, params: QkdParams) -> float:
    """Secret bits per symbol at modulation variance ``v_mod``, clamped at zero."""
    if not 0 < t <= 1:
        raise InputDomainError(f"transmittance must lie in (0, 1], got {t}")
    if xi < 0:
        raise InputDomainError(f"excess noise must be >= 0, got {xi}")
    if not v_mod > 0:
        raise InputDomainError(f"v_mod must be > 0, got {v_mod}")
    return max(0.0, unclamped_secret_fraction(t, xi, v_mod, params.beta, params.mu))


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, tol: float = V_TOL
) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _optimise(t: float, xi: float, params: QkdParams) -> tuple[float, float]:
    """Returns (v_mod, unclamped r) at the optimum."""
    return golden_section_max(
        lambda v: unclamped_secret_fraction(t, xi, v, params.beta, params.mu), V_MIN, V_MAX
    )


def optimal_secret_fraction(t: float, xi: float, params: QkdParams) -> KeyRateResult:
    # run once through the checked path so domain errors surface
    secret_fraction(t, xi, V_MIN, params)
    v_opt, r_raw = _optimise(t, xi, params)
    r = max(0.0, r_raw)
    return KeyRateResult(r=r, v_mod_opt=v_opt, key_rate_bps=params.f_sym * r, t=t, xi=xi)


@lru_cache(maxsize=65536)
def _key_rate_at(length_km: float, n_active: int, params: QkdParams) -> KeyRateResult:
    return optimal_secret_fraction(
        transmittance(length_km, params), excess_noise(n_active, params), params
    )


def _noise_slope(t: float, xi: float, v_mod: float, params: QkdParams) -> float:
    """d r / d xi at fixed modulation variance (envelope of the optimum)."""
    h = 1e-6
    if xi >= h:
        lo, hi = xi - h, xi + h
    else:
        lo, hi = xi, xi + 2 * h
    r_hi = unclamped_secret_fraction(t, hi, v_mod, params.beta, params.mu)
    r_lo = unclamped_secret_fraction(t, lo, v_mod, params.beta, params.mu)
    return (r_hi - r_lo) / (hi - lo)


@lru_cache(maxsize=65536)
def capacity_drop(length_km: float, n_active_channels: int, params: QkdParams) -> float:
    """Key capacity lost (bit/s) when ``n`` classical channels share the link.

    Equal to ``link_key_capacity(L, 0) - link_key_capacity(L, n)`` but stays
    strictly positive for Raman increments far below double resolution of the
    noise variances, where the direct difference collapses to zero.
    """
    base = _key_rate_at(length_km, 0, params)
    delta = raman_noise(n_active_channels, params)
    if base.r == 0.0 or delta == 0.0:
        return 0.0
    if delta <= LINEAR_DROP_LIMIT:
        slope = _noise_slope(base.t, base.xi, base.v_mod_opt, params)
        return min(base.key_rate_bps, max(0.0, -slope * delta * params.f_sym))
    loaded = _key_rate_at(length_km, n_active_channels, params)
    return max(0.0, base.key_rate_bps - loaded.key_rate_bps)


def link_key_capacity(length_km: float, n_active_channels: int, params: QkdParams) -> float:
    """Secure-key capacity (bit/s) of a link of ``length_km`` carrying ``n`` WDM channels."""
    base = _key_rate_at(length_km, 0, params)
    delta = raman_noise(n_active_channels, params)
    if delta > LINEAR_DROP_LIMIT:
        loaded = _key_rate_at(length_km, n_active_channels, params).key_rate_bps
        return min(loaded, base.key_rate_bps)
    return max(0.0, base.key_rate_bps - capacity_drop(length_km, n_active_channels, params))


def sustains(
    length_km: float, n_active_channels: int, carried_bps: float, params: QkdParams
) -> bool:
    """True when a link with ``n`` WDM channels still supports ``carried_bps`` of key.

    The comparison runs on the capacity drop against the n=0 slack so that
    a link loaded to exactly its n=0 capacity fails for any positive drop.
    """
    if carried_bps <= 0:
        return True
    slack = _key_rate_at(length_km, 0, params).key_rate_bps - carried_bps
    return capacity_drop(length_km, n_active_channels, params) <= slack
