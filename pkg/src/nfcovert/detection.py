"""Warden detection analysis: radiometer DEP, optimal threshold, leakage budget.

The warden averages received power over an asymptotically long observation
window and compares against a threshold, while its own noise power is only
known up to a bounded multiplicative uncertainty rho (log-uniform on
[nominal/rho, nominal*rho]). All quantities are linear watts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, db_to_linear


@dataclass(frozen=True)
class NoiseUncertainty:
    """Bounded noise-power uncertainty at the warden.

    The exact noise power is log-uniform on [sigma_sq/rho, rho*sigma_sq];
    sample counts never appear because detection assumes an infinite
    observation window.
    """

    sigma_sq: float      # nominal noise power, watts
    rho: float           # uncertainty factor, linear, > 1
    m_w: int             # warden antennas

    def __post_init__(self):
        if self.sigma_sq <= 0:
            raise ValueError(f"nominal noise power must be > 0, got {self.sigma_sq}")
        if self.rho <= 1:
            raise ValueError(f"uncertainty factor must be > 1, got {self.rho}")
        if self.m_w < 1:
            raise ValueError(f"warden antenna count must be >= 1, got {self.m_w}")

    @classmethod
    def from_config(cls, cfg: SystemConfig) -> "NoiseUncertainty":
        return cls(sigma_sq=cfg.sigma_w_sq, rho=cfg.rho, m_w=cfg.m_w)

    @property
    def support(self):
        return (self.sigma_sq / self.rho, self.rho * self.sigma_sq)

    @property
    def z_max(self) -> float:
        """Leakage beyond which the warden detects perfectly: M_W s^2 (rho - 1/rho)."""
        return self.m_w * self.sigma_sq * (self.rho - 1.0 / self.rho)


@dataclass(frozen=True)
class DetectionReport:
    """Detection outcome for one beamforming solution."""

    leakage: float          # z, watts arriving at the warden
    threshold: float        # optimal detection threshold, watts
    min_dep: float          # minimum detection error probability
    p_leak: float           # leakage budget for the configured covertness
    kappa: float            # covertness level

    def __post_init__(self):
        if not (0.0 <= self.min_dep <= 1.0):
            raise ValueError(f"DEP must lie in [0, 1], got {self.min_dep}")


def noise_pdf(x, u: NoiseUncertainty):
    """Density of the warden's noise power: 1/(2 ln(rho) x) on the support."""
    x = np.asarray(x, dtype=float)
    lo, hi = u.support
    inside = (x >= lo) & (x <= hi)
    out = np.zeros_like(x)
    np.divide(1.0, 2.0 * math.log(u.rho) * x, out=out, where=inside)
    if out.ndim == 0:
        return float(out)
    return out


def leakage_power(F: np.ndarray, v_or_theta: np.ndarray, G: np.ndarray,
                  W_RF: np.ndarray, W_BB: np.ndarray) -> float:
    """Average power arriving at the warden: ||F Theta G W_RF W_BB||_F^2."""
    v_or_theta = np.asarray(v_or_theta)
    if v_or_theta.ndim == 1:
        scaled = v_or_theta[:, None] * (G @ (W_RF @ W_BB))
    else:
        scaled = v_or_theta @ (G @ (W_RF @ W_BB))
    return float(np.linalg.norm(F @ scaled, "fro") ** 2)


def optimal_threshold(z: float, u: NoiseUncertainty) -> float:
    """The warden's DEP-minimizing threshold min(M_W s^2/rho + z, rho M_W s^2)."""
    if z < 0:
        raise ValueError(f"leakage must be >= 0, got {z}")
    return min(u.m_w * u.sigma_sq / u.rho + z, u.rho * u.m_w * u.sigma_sq)


def dep(gamma: float, z: float, u: NoiseUncertainty) -> float:
    """Detection error probability at an arbitrary threshold.

    One minus the noise-pdf mass on
    [max((gamma - z)/M_W, s^2/rho), min(gamma/M_W, rho s^2)]; an empty
    interval contributes nothing, so the DEP is exactly 1 there.
    """
    if gamma <= 0:
        raise ValueError(f"threshold must be > 0, got {gamma}")
    lo_supp, hi_supp = u.support
    lower = max((gamma - z) / u.m_w, lo_supp)
    upper = min(gamma / u.m_w, hi_supp)
    if upper <= lower:
        return 1.0
    mass = math.log(upper / lower) / (2.0 * math.log(u.rho))
    return float(min(1.0, max(0.0, 1.0 - mass)))


def min_dep(z: float, u: NoiseUncertainty) -> float:
    """Minimum DEP over thresholds.

    1 - ln(1 + rho z / (M_W s^2)) / (2 ln rho) while the leakage keeps the
    two hypotheses overlapping, 0 once z reaches M_W s^2 (rho - 1/rho).
    """
    if z < 0:
        raise ValueError(f"leakage must be >= 0, got {z}")
    if z >= u.z_max:
        return 0.0
    xi = 1.0 - math.log1p(u.rho * z / (u.m_w * u.sigma_sq)) / (2.0 * math.log(u.rho))
    return float(min(1.0, max(0.0, xi)))


def max_leakage(kappa: float, u: NoiseUncertainty) -> float:
    """Largest leakage keeping the minimum DEP at least 1 - kappa.

    min(M_W s^2 (rho - 1/rho), (e^{2 kappa ln rho} - 1) M_W s^2 / rho);
    monotone nondecreasing in kappa. For kappa < 0.5 the second branch is
    the active one.
    """
    if not (0.0 <= kappa < 1.0):
        raise ValueError(f"covertness level must be in [0, 1), got {kappa}")
    budget = math.expm1(2.0 * kappa * math.log(u.rho)) * u.m_w * u.sigma_sq / u.rho
    return float(min(u.z_max, budget))


def detection_report(z: float, kappa: float, u: NoiseUncertainty) -> DetectionReport:
    return DetectionReport(
        leakage=z,
        threshold=optimal_threshold(z, u),
        min_dep=min_dep(z, u),
        p_leak=max_leakage(kappa, u),
        kappa=kappa,
    )
