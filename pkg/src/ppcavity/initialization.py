"""Conversion of an atomic density matrix into fermionic phase-space points.

A valid 2x2 density matrix is represented exactly by a three-point discrete
distribution over (z, w) pairs.  Writing rho11 = p and rho12 = r*exp(i*phi),
the construction uses K = sqrt(1/p - 1) and the weight q = r*(1 + K**2)/K:

    point 1 (weight q):        h(z1) = K e^{-i phi},  htilde(w1) = K e^{i phi}
    point 2 (weight (1-q)/2):  h(z2) = htilde(w2) = K
    point 3 (weight (1-q)/2):  h(z3) = htilde(w3) = -K

Averaging the fermionic projector over these points reproduces the input
density matrix entrywise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisFamily
from .errors import BoundaryPopulationError, CavityError, PositivityError

_RECONSTRUCTION_GUARD = 1e-9


@dataclass(frozen=True)
class AtomicDensity:
    """Two-level density matrix entries in the (lower, upper) basis."""

    rho11: complex
    rho12: complex
    rho21: complex
    rho22: complex

    @classmethod
    def from_upper(cls, rho11, rho12=0j) -> "AtomicDensity":
        """Build a hermitian, trace-one density from rho11 and rho12."""
        rho11 = complex(rho11)
        rho12 = complex(rho12)
        out = cls(rho11, rho12, np.conj(rho12), 1.0 - rho11)
        out.validate()
        return out

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.rho11, self.rho12], [self.rho21, self.rho22]], dtype=complex
        )

    def validate(self, tol=1e-9):
        """Check hermiticity, unit trace, and positive semidefiniteness."""
        self._check_hermitian_trace(tol)
        p = self.rho11.real
        det = p * self.rho22.real - abs(self.rho12) ** 2
        if det < -tol:
            raise ValueError(f"density matrix is not positive semidefinite (det {det:.3e})")

    def _check_hermitian_trace(self, tol=1e-9):
        if abs(self.rho12 - np.conj(self.rho21)) > tol:
            raise ValueError("density matrix is not hermitian: rho12 != conj(rho21)")
        if abs(self.rho11.imag) > tol or abs(self.rho22.imag) > tol:
            raise ValueError("density matrix diagonal must be real")
        if abs(self.rho11 + self.rho22 - 1.0) > tol:
            raise ValueError("density matrix trace must be one")


def fermionic_projector(family: BasisFamily, z, w) -> np.ndarray:
    """Normalized projector onto the pair of family states at (z, w)."""
    h, _, ht, _ = family.eval(z, w)
    denom = 1.0 + h * ht
    return np.array([[1.0, ht], [h, h * ht]], dtype=complex) / denom


@dataclass(frozen=True)
class InitPoint:
    weight: float
    z: complex
    w: complex


@dataclass(frozen=True)
class InitDistribution:
    """Three-point distribution over fermionic phase-space coordinates."""

    points: tuple[InitPoint, ...]

    @property
    def weights(self) -> np.ndarray:
        return np.array([pt.weight for pt in self.points])

    @property
    def zs(self) -> np.ndarray:
        return np.array([pt.z for pt in self.points], dtype=complex)

    @property
    def ws(self) -> np.ndarray:
        return np.array([pt.w for pt in self.points], dtype=complex)

    def reconstruct(self, family: BasisFamily) -> np.ndarray:
        """Weighted projector average; equals the source density matrix."""
        out = np.zeros((2, 2), dtype=complex)
        for pt in self.points:
            out += pt.weight * fermionic_projector(family, pt.z, pt.w)
        return out

    def sample(self, rng: np.random.Generator, count=None):
        """Draw point indices; returns (z, w) arrays (or scalars for count=None)."""
        idx = rng.choice(len(self.points), size=count, p=self.weights)
        return self.zs[idx], self.ws[idx]


def init_points(rho: AtomicDensity, family: BasisFamily) -> InitDistribution:
    """Convert a density matrix into the three-point initial distribution.

    Raises BoundaryPopulationError for rho11 in {0, 1}, PositivityError when
    the computed weight exceeds one (non-positive input), and propagates
    UnreachableTargetError from the family inversion (e.g. K = 1 targets
    under the additive-noise family).
    """
    rho._check_hermitian_trace()
    p = rho.rho11.real
    if not 0.0 < p < 1.0:
        raise BoundaryPopulationError(f"need 0 < rho11 < 1, got {p}")
    r = abs(rho.rho12)
    phi = np.angle(rho.rho12) if r > 0 else 0.0
    big_k = np.sqrt(1.0 / p - 1.0)
    q = r * (1.0 + big_k**2) / big_k
    if q > 1.0 + 1e-9:
        raise PositivityError(
            f"coherence weight q = {q:.6g} > 1; input density is not positive"
        )
    q = min(q, 1.0)

    h_targets = (big_k * np.exp(-1j * phi), big_k, -big_k)
    ht_targets = (big_k * np.exp(1j * phi), big_k, -big_k)
    weights = (q, (1.0 - q) / 2.0, (1.0 - q) / 2.0)
    points = tuple(
        InitPoint(wgt, family.invert_h(th), family.invert_htilde(tht))
        for wgt, th, tht in zip(weights, h_targets, ht_targets)
    )
    dist = InitDistribution(points)

    residual = np.abs(dist.reconstruct(family) - rho.matrix()).max()
    if residual > _RECONSTRUCTION_GUARD:
        raise CavityError(
            f"initialization failed to reconstruct the density (residual {residual:.3e})"
        )
    return dist
