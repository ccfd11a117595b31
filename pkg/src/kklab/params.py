from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants of the diffusion / Schrödinger problem.

    ``kappa`` is kept real and positive; ``mu2`` is always ``hbar / m``.
    """

    hbar: float = 1.0
    m: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0 or self.m <= 0:
            raise ValueError("hbar and m must be positive")
        if self.kappa <= 0:
            raise ValueError("kappa must be a positive real")

    @property
    def mu2(self) -> float:
        return self.hbar / self.m

    @property
    def diffusion(self) -> float:
        """``mu^2 kappa``, the variance rate of the coordinate noise."""
        return self.mu2 * self.kappa

    @property
    def potential_scale(self) -> float:
        """Prefactor ``1 / (mu^2 kappa m)`` in front of the potential."""
        return 1.0 / (self.mu2 * self.kappa * self.m)
