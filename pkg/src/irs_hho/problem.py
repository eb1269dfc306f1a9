"""Joint AP/IRS beamforming as a box-bounded real search problem.

A search vector ``x`` of length ``2M + N`` holds the beamformer magnitudes,
the beamformer arguments and the IRS phase shifts, in that order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, complex_to_pairs, dbm_to_watts, pairs_to_complex

TWO_PI = 2.0 * np.pi
PROJECTION_MARGIN = 1e-12


@dataclass
class ProblemInstance:
    channels: ChannelSet
    p_ap: float
    sigma2: float
    mu: float = 1.0

    def __post_init__(self):
        if self.p_ap <= 0 or self.sigma2 <= 0 or self.mu <= 0:
            raise ValueError("p_ap, sigma2 and mu must be positive")

    @classmethod
    def from_dbm(cls, channels: ChannelSet, p_ap_dbm: float = 5.0, sigma2_dbm: float = -80.0,
                 mu: float = 1.0) -> "ProblemInstance":
        return cls(channels, float(dbm_to_watts(p_ap_dbm)), float(dbm_to_watts(sigma2_dbm)), mu)

    @property
    def M(self) -> int:
        return self.channels.M

    @property
    def N(self) -> int:
        return self.channels.N

    @property
    def dimension(self) -> int:
        return 2 * self.M + self.N


@dataclass
class BeamformingSolution:
    w: np.ndarray
    theta: np.ndarray

    @property
    def reflection(self) -> np.ndarray:
        """Diagonal of the IRS phase-shift matrix."""
        return np.exp(1j * self.theta)

    @property
    def power_used(self) -> float:
        return float(np.vdot(self.w, self.w).real)

    def to_dict(self) -> dict:
        return {"w": complex_to_pairs(self.w), "theta": np.asarray(self.theta, dtype=float).tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "BeamformingSolution":
        return cls(pairs_to_complex(data["w"]).reshape(-1), np.asarray(data["theta"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def split(x, M: int, N: int):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2 * M + N:
        raise ValueError(f"search vector has length {x.shape[-1]}, expected 2M+N = {2 * M + N}")
    return x[..., :M], x[..., M:2 * M], x[..., 2 * M:]


def decode(x, M: int, N: int) -> BeamformingSolution:
    psi, phi, theta = split(x, M, N)
    return BeamformingSolution(psi * np.exp(1j * phi), theta.copy())


def encode(solution: BeamformingSolution) -> np.ndarray:
    """Inverse of ``decode`` with arguments and phases wrapped into [0, 2pi)."""
    w = np.asarray(solution.w, dtype=complex)
    return np.concatenate([np.abs(w), np.mod(np.angle(w), TWO_PI), np.mod(solution.theta, TWO_PI)])


def combined_channel(channels: ChannelSet, theta) -> np.ndarray:
    """Row vector ``h_r^H diag(exp(j theta)) G + h_d^H`` (length M)."""
    return (channels.h_r.conj() * np.exp(1j * np.asarray(theta))) @ channels.G + channels.h_d.conj()


def received_power(channels: ChannelSet, solution: BeamformingSolution) -> float:
    if solution.w.size != channels.M or np.size(solution.theta) != channels.N:
        raise ValueError("solution dimensions do not match the channels")
    return float(np.abs(combined_channel(channels, solution.theta) @ solution.w) ** 2)


def penalty(w, p_ap: float, mu: float = 1.0) -> float:
    """Zero when ``||w||^2 <= p_ap``, otherwise ``-mu * (||w||^2 - p_ap)``."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    used = float(np.vdot(w, w).real)
    return 0.0 if used <= p_ap else -mu * (used - p_ap)


def fitness(x, instance: ProblemInstance) -> float:
    sol = decode(x, instance.M, instance.N)
    return received_power(instance.channels, sol) + penalty(sol.w, instance.p_ap, instance.mu)


def fitness_batch(X, instance: ProblemInstance) -> np.ndarray:
    """Vectorized ``fitness`` over the rows of ``X``."""
    ch = instance.channels
    psi, phi, theta = split(np.atleast_2d(X), instance.M, instance.N)
    w = psi * np.exp(1j * phi)
    rows = (ch.h_r.conj() * np.exp(1j * theta)) @ ch.G + ch.h_d.conj()
    power = np.abs(np.einsum("km,km->k", rows, w)) ** 2
    used = np.sum(psi * psi, axis=-1)
    return power - instance.mu * np.maximum(used - instance.p_ap, 0.0)


def search_bounds(instance: ProblemInstance):
    """Per-coordinate box: magnitudes in [0, sqrt(P_AP)], angles in [0, 2pi]."""
    M, N = instance.M, instance.N
    lb = np.zeros(2 * M + N)
    ub = np.concatenate([np.full(M, np.sqrt(instance.p_ap)), np.full(M + N, TWO_PI)])
    return lb, ub


def mrt_seed(instance: ProblemInstance) -> np.ndarray:
    """Encoded full-power MRT beamformer on the direct link, IRS phases zero."""
    h_d = instance.channels.h_d
    norm = np.linalg.norm(h_d)
    if norm == 0:
        raise ValueError("direct channel is zero; MRT seed undefined")
    w = np.sqrt(instance.p_ap) * h_d / norm
    x = encode(BeamformingSolution(w, np.zeros(instance.N)))
    lb, ub = search_bounds(instance)
    # guard against |w_m| exceeding sqrt(p_ap) by an ulp
    return np.clip(x, lb, ub)


def project_feasible(solution: BeamformingSolution, p_ap: float) -> BeamformingSolution:
    """Scale ``w`` down onto the power ball if it lies outside.

    The scaled point sits a relative 1e-12 inside the sphere so that an
    encode/decode round trip cannot push it back out by rounding.
    """
    used = solution.power_used
    if used <= p_ap:
        return solution
    return BeamformingSolution(solution.w * np.sqrt(p_ap / used * (1 - PROJECTION_MARGIN)), solution.theta)


def snr_db(power_watts: float, sigma2_watts: float) -> float:
    """Receive SNR in dB; ``-inf`` for non-positive power."""
    if sigma2_watts <= 0:
        raise ValueError("noise power must be positive")
    if power_watts <= 0:
        return float("-inf")
    return float(10.0 * np.log10(power_watts / sigma2_watts))
