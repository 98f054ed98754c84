"""Growth-constant and contraction-factor calculators.

Given a q-growth constant kappa of the original objective, these map it to
the 2-growth constant kappa_hat the smoothed surrogate inherits (per
envelope family), and to the linear contraction factor C1 of uniform
coordinate descent under that growth.  Pure functions of their inputs.
"""

from __future__ import annotations


def _check_q(q):
    if not 1.0 <= q <= 2.0:
        raise ValueError("q must lie in [1, 2]")


def growth_constant_me(q, kappa, gamma, R=None) -> float:
    """Moreau-envelope growth constant.

    q = 2: kappa*gamma/(gamma*kappa + 1); q in [1,2): kappa^2 gamma^2 /
    (kappa*gamma + R^(2-q))^2 with R bounding the surrogate level set.
    """
    _check_q(q)
    if kappa <= 0 or gamma <= 0:
        raise ValueError("kappa and gamma must be positive")
    if q == 2.0:
        return kappa * gamma / (gamma * kappa + 1.0)
    if R is None or R <= 0:
        raise ValueError("R > 0 is required for q < 2")
    return kappa**2 * gamma**2 / (kappa * gamma + R ** (2.0 - q)) ** 2


def growth_constant_fb(q, kappa, gamma, L, L_max, R=None) -> float:
    """Forward-Backward-envelope growth constant (needs gamma*L < 1)."""
    _check_q(q)
    if kappa <= 0 or gamma <= 0 or L_max <= 0:
        raise ValueError("kappa, gamma and L_max must be positive")
    if L < 0 or gamma * L >= 1.0:
        raise ValueError("needs 0 <= L and gamma*L < 1")
    if q == 2.0:
        return kappa * (1.0 - gamma * L) / ((gamma * kappa + 1.0 - gamma * L) * L_max)
    if R is None or R <= 0:
        raise ValueError("R > 0 is required for q < 2")
    num = kappa**2 * gamma * (1.0 - gamma * L)
    den = (kappa * gamma + R ** (2.0 - q) * (1.0 - gamma * L)) ** 2 * L_max
    return num / den


def growth_constant_ns(q, kappa, L_max, R=None) -> float:
    """Smoothed-max growth constant on the high-value set.

    Without R: kappa / (2 q L_max^(q/2)), a q-growth constant in the
    L-weighted norm.  With R (bounded level set): kappa / (q L_max R^(2-q)),
    a 2-growth constant.
    """
    _check_q(q)
    if kappa <= 0 or L_max <= 0:
        raise ValueError("kappa and L_max must be positive")
    if R is None:
        return kappa / (2.0 * q * L_max ** (q / 2.0))
    if R <= 0:
        raise ValueError("R must be positive")
    return kappa / (q * L_max * R ** (2.0 - q))


def contraction_C1(kappa_bar, q_bar, N, Delta0=None) -> float:
    """Per-iteration contraction factor of uniform CD under q_bar-growth.

    C1 = max(1 - kappa_bar * Delta0^((q_bar-2)/2) / (N (1+kappa_bar)),
             1 - eta / (N (1+kappa_bar))) with eta = min(kappa_bar,
    kappa_bar^(2/q_bar)).  Delta0 is ignored when q_bar = 2.
    """
    _check_q(q_bar)
    if kappa_bar <= 0:
        raise ValueError("kappa_bar must be positive")
    if N < 1:
        raise ValueError("N must be >= 1")
    eta = min(kappa_bar, kappa_bar ** (2.0 / q_bar))
    if q_bar == 2.0:
        dfac = 1.0
    else:
        if Delta0 is None or Delta0 <= 0:
            raise ValueError("Delta0 > 0 is required for q_bar < 2")
        dfac = Delta0 ** ((q_bar - 2.0) / 2.0)
    return max(
        1.0 - kappa_bar * dfac / (N * (1.0 + kappa_bar)),
        1.0 - eta / (N * (1.0 + kappa_bar)),
    )
