"""Collective polarization rotation channel and its tagged-state parameters.

The channel applies one unknown SU(2) rotation to the polarization of every
photon.  For the tag / rotate / tag pipeline the effect is captured by three
delta parameters with ||d1||^2 + ||d2||^2 + ||d3||^2 = 1; the coincident
(equal time bin) component survives with probability ||(d1 + 1)/2||^2.
Waveplate settings are modeled with standard Jones matrices, and the random
compensation rotation B can be drawn as identity-or-flip or Haar uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SU2_TOL = 1e-12
DELTA_NORM_TOL = 1e-10

Scheme = str
SCHEMES = ("none", "flip_half", "haar")


@dataclass(frozen=True)
class CollectiveRotation:
    """Special-unitary polarization rotation [[a, -conj(b)], [b, conj(a)]]."""

    a: complex
    b: complex

    def __post_init__(self):
        n = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(n - 1.0) > SU2_TOL:
            raise ValueError(f"|a|^2 + |b|^2 = {n!r}, not special-unitary")

    @property
    def matrix(self) -> np.ndarray:
        a, b = complex(self.a), complex(self.b)
        return np.array([[a, -b.conjugate()], [b, a.conjugate()]])

    @classmethod
    def identity(cls) -> "CollectiveRotation":
        return cls(1.0 + 0.0j, 0.0j)

    @classmethod
    def bit_flip(cls) -> "CollectiveRotation":
        """Polarization exchange H <-> V (special-unitary representative)."""
        return cls(0.0j, 1.0 + 0.0j)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "CollectiveRotation":
        """Normalize any 2x2 unitary to determinant 1 by a global phase."""
        m = np.asarray(m, dtype=complex)
        dev = np.max(np.abs(m.conj().T @ m - np.eye(2)))
        if dev > 1e-10:
            raise ValueError(f"matrix is not unitary (deviation {dev:.3e})")
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        m = m / np.sqrt(det)
        return cls(complex(m[0, 0]), complex(m[1, 0]))

    def __matmul__(self, other: "CollectiveRotation") -> "CollectiveRotation":
        return CollectiveRotation.from_matrix(self.matrix @ other.matrix)


@dataclass(frozen=True)
class DeltaParams:
    """Expansion parameters (d1, d2, d3) of the tagged-state evolution."""

    d1: complex
    d2: complex
    d3: complex

    def __post_init__(self):
        n = abs(self.d1) ** 2 + abs(self.d2) ** 2 + abs(self.d3) ** 2
        if abs(n - 1.0) > DELTA_NORM_TOL:
            raise ValueError(f"delta norm identity violated: {n!r}")

    def expansion_coefficients(self) -> tuple[complex, complex, complex, complex]:
        """Coefficients (kept, double-tagged, HH-like, VV-like) of the four-term expansion."""
        return (
            (self.d1 + 1.0) / 2.0,
            (self.d1 - 1.0) / 2.0,
            (self.d2 + self.d3) / 2.0,
            (self.d2 - self.d3) / 2.0,
        )


@dataclass(frozen=True)
class RotatorSetting:
    """Angles (degrees) of the QWP-HWP-QWP polarization rotator."""

    qwp1_deg: float
    hwp_deg: float
    qwp2_deg: float

    def __post_init__(self):
        for name in ("qwp1_deg", "hwp_deg", "qwp2_deg"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def qwp_jones(theta_deg: float) -> np.ndarray:
    """Quarter-wave plate, fast axis at theta from horizontal (retardance pi/2)."""
    t = np.deg2rad(theta_deg)
    return _rot(-t) @ np.diag([1.0, 1.0j]) @ _rot(t)


def hwp_jones(theta_deg: float) -> np.ndarray:
    """Half-wave plate, fast axis at theta from horizontal (retardance pi)."""
    t = np.deg2rad(theta_deg)
    return _rot(-t) @ np.diag([1.0, -1.0]) @ _rot(t)


def from_waveplates(r: RotatorSetting) -> CollectiveRotation:
    """Composite QWP(q1) . HWP(h) . QWP(q2) rotation, det-normalized."""
    m = qwp_jones(r.qwp1_deg) @ hwp_jones(r.hwp_deg) @ qwp_jones(r.qwp2_deg)
    return CollectiveRotation.from_matrix(m)


def sweep_settings(n: int = 5) -> tuple[RotatorSetting, ...]:
    """The n-point noise sweep from identity to a collective bit-flip.

    Both QWPs stay at 0 and the HWP steps from 0 to 45 degrees in equal
    increments, so setting k rotates the polarization frame by k*pi/(2(n-1))
    and the coincident survival at setting k is cos(k*pi/(2(n-1)))**4.  For
    the default n = 5 this gives |a|^2 = cos^2(k*pi/8), k = 0..4.
    """
    if n < 2:
        raise ValueError("a sweep needs at least the identity and bit-flip endpoints")
    step = 45.0 / (n - 1)
    return tuple(RotatorSetting(0.0, step * k, 0.0) for k in range(n))


def haar_sample(rng: np.random.Generator) -> CollectiveRotation:
    """Haar-distributed SU(2) rotation (uniform on the unit 3-sphere).

    The marginal of |a|^2 is uniform on [0, 1], so the mean coincident
    survival |a|^4 over the ensemble is exactly 1/3.
    """
    x = rng.normal(size=4)
    x = x / np.linalg.norm(x)
    return CollectiveRotation(complex(x[0], x[1]), complex(x[2], x[3]))


def delta_params(u: CollectiveRotation) -> DeltaParams:
    """Extract (d1, d2, d3) for the tag / rotate / tag evolution of a pair.

    d1 is real for the special-unitary parametrization; reconstructing the
    four expansion coefficients from these values reproduces the exact
    amplitude-level evolution.
    """
    a, b = complex(u.a), complex(u.b)
    d1 = abs(a) ** 2 - abs(b) ** 2
    d2 = a.conjugate() * b - a * b.conjugate()
    d3 = -(a * b.conjugate() + a.conjugate() * b)
    return DeltaParams(complex(d1), d2, d3)


def survival_probability(u: CollectiveRotation) -> float:
    """Probability ||(d1 + 1)/2||^2 = |a|^4 of keeping the coincident component."""
    return float(abs(u.a) ** 4)


def randomized_survival(u: CollectiveRotation, scheme: Scheme) -> float:
    """Mean coincident survival under the chosen compensation scheme.

    'none' leaves the channel alone, 'flip_half' averages identity and a
    bit-flip with equal weight, and 'haar' averages over uniform SU(2)
    compensations (exactly 1/3 for every channel).
    """
    if scheme == "none":
        return survival_probability(u)
    if scheme == "flip_half":
        return (abs(u.a) ** 4 + abs(u.b) ** 4) / 2.0
    if scheme == "haar":
        return 1.0 / 3.0
    raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
