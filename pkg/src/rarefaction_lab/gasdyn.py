# src/rarefaction_lab/gasdyn.py
"""
γ-law gas and the exact inviscid 2-rarefaction wave that connects the
vacuum ρ=0 (on the left) to a constant right state (ρ₊, u₊), together
with its cut-off at a small density level μ.

All evaluation functions accept scalars or numpy arrays: a scalar in
gives a float out, an array in gives an array out.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import DomainError

ArrayLike = Union[float, np.ndarray]


def as_output(a: np.ndarray) -> ArrayLike:
    return a.item() if a.ndim == 0 else a


# ─── Gas model ────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class GasModel:
    """Pressure law p(ρ) = ρ^γ/γ with adiabatic exponent γ > 1."""
    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 1.0:
            raise DomainError(f"adiabatic exponent must satisfy gamma > 1, got {self.gamma!r}")

    @property
    def theta(self) -> float:
        """Exponent of the sound speed, c = ρ^θ with θ = (γ-1)/2."""
        return 0.5 * (self.gamma - 1.0)

    @property
    def invariant_factor(self) -> float:
        # ∫^ρ √p'(s)/s ds = (2/(γ-1)) ρ^θ
        return 2.0 / (self.gamma - 1.0)

    @property
    def fan_factor(self) -> float:
        # λ₂ = ξ and Σ₂ fixed give ρ^θ = (γ-1)/(γ+1)·(ξ - Σ₂)
        return (self.gamma - 1.0) / (self.gamma + 1.0)


def _density(rho: ArrayLike, strict: bool = False) -> np.ndarray:
    r = np.asarray(rho, dtype=float)
    if strict:
        if np.any(~(r > 0.0)):
            raise DomainError("density must be positive (characteristic speeds coincide at vacuum)")
    elif np.any(~(r >= 0.0)):
        raise DomainError("density must be non-negative")
    return r


def pressure(gas: GasModel, rho: ArrayLike) -> ArrayLike:
    r = _density(rho)
    return as_output(r ** gas.gamma / gas.gamma)


def pressure_derivative(gas: GasModel, rho: ArrayLike) -> ArrayLike:
    """p'(ρ) = ρ^{γ-1}."""
    r = _density(rho)
    return as_output(r ** (gas.gamma - 1.0))


def sound_speed(gas: GasModel, rho: ArrayLike) -> ArrayLike:
    """√p'(ρ) = ρ^{(γ-1)/2}."""
    r = _density(rho)
    return as_output(r ** gas.theta)


def char_speeds(gas: GasModel, rho: ArrayLike, u: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    r = _density(rho, strict=True)
    c = r ** gas.theta
    v = np.asarray(u, dtype=float)
    return as_output(v - c), as_output(v + c)


def riemann_invariants(gas: GasModel, rho: ArrayLike, u: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    Σ₁ = u + (2/(γ-1)) ρ^θ and Σ₂ = u - (2/(γ-1)) ρ^θ.
    Both reduce to u at vacuum.
    """
    r = _density(rho)
    k = gas.invariant_factor * r ** gas.theta
    v = np.asarray(u, dtype=float)
    return as_output(v + k), as_output(v - k)


def wave_curve(gas: GasModel, anchor_rho: float, anchor_u: float,
               rho: ArrayLike, family: int = 2) -> ArrayLike:
    """
    Velocity along the `family`-rarefaction curve through the anchor
    state, parametrised by density: the invariant Σ_family is held at its
    anchor value.
    """
    if family not in (1, 2):
        raise DomainError(f"wave family must be 1 or 2, got {family!r}")
    s1, s2 = riemann_invariants(gas, anchor_rho, anchor_u)
    r = _density(rho)
    k = gas.invariant_factor * r ** gas.theta
    if family == 1:
        return as_output(s1 - k)
    return as_output(s2 + k)


# ─── Exact vacuum rarefaction ─────────────────────────────────────────────────

@dataclass(frozen=True)
class RightState:
    rho_plus: float
    u_plus:   float

    def __post_init__(self):
        if not self.rho_plus > 0.0:
            raise DomainError(f"right density must be positive, got {self.rho_plus!r}")


@dataclass(frozen=True)
class ExactWave:
    gas:     GasModel
    right:   RightState
    u_minus: float
    sigma2:  float

    @property
    def head_speed(self) -> float:
        """λ₂(ρ₊, u₊), the right edge of the fan."""
        return self.right.u_plus + self.right.rho_plus ** self.gas.theta


def build_exact_wave(gas: GasModel, right: RightState) -> ExactWave:
    _, sigma2 = riemann_invariants(gas, right.rho_plus, right.u_plus)
    # the pressure integral vanishes at ρ=0, so the vacuum edge moves with Σ₂
    return ExactWave(gas=gas, right=right, u_minus=sigma2, sigma2=sigma2)


def _fan(gas: GasModel, sigma2: float, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    c = gas.fan_factor * (xi - sigma2)
    c = np.maximum(c, 0.0)
    return c ** (1.0 / gas.theta), xi - c


def eval_exact_wave(wave: ExactWave, xi: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """
    (ρ, u, m) of the vacuum 2-rarefaction at ξ = x/t. In the vacuum the
    velocity is reported as u₋ and the momentum is 0.
    """
    s = np.asarray(xi, dtype=float)
    rp, up = wave.right.rho_plus, wave.right.u_plus
    rho_fan, u_fan = _fan(wave.gas, wave.sigma2, s)

    vacuum = s < wave.u_minus
    right  = s > wave.head_speed
    rho = np.where(vacuum, 0.0, np.where(right, rp, rho_fan))
    u   = np.where(vacuum, wave.u_minus, np.where(right, up, u_fan))
    m   = np.where(rho > 0.0, rho * u, 0.0)
    return as_output(rho), as_output(u), as_output(m)


# ─── Cut-off wave ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class CutoffWave:
    base: ExactWave
    mu:   float
    u_mu: float

    @property
    def tail_speed(self) -> float:
        """λ₂(μ, u_μ), the left edge of the truncated fan."""
        return self.u_mu + self.mu ** self.base.gas.theta


def u_mu(wave: ExactWave, mu: float) -> float:
    if not 0.0 < mu < wave.right.rho_plus:
        raise DomainError(
            f"cut level must satisfy 0 < mu < rho_plus={wave.right.rho_plus}, got {mu!r}"
        )
    return wave.sigma2 + wave.gas.invariant_factor * mu ** wave.gas.theta


def build_cutoff_wave(wave: ExactWave, mu: float) -> CutoffWave:
    """Truncate the fan at density μ; requires μ ≤ ρ₊/2."""
    if not 0.0 < mu <= 0.5 * wave.right.rho_plus:
        raise DomainError(
            f"cut level must satisfy 0 < mu <= rho_plus/2={0.5 * wave.right.rho_plus}, got {mu!r}"
        )
    return CutoffWave(base=wave, mu=mu, u_mu=u_mu(wave, mu))


def eval_cutoff_wave(cw: CutoffWave, xi: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    s = np.asarray(xi, dtype=float)
    rho, u, m = (np.asarray(a) for a in eval_exact_wave(cw.base, s))
    left = s < cw.tail_speed
    rho = np.where(left, cw.mu, rho)
    u   = np.where(left, cw.u_mu, u)
    m   = np.where(left, cw.mu * cw.u_mu, m)
    return as_output(rho), as_output(u), as_output(m)
