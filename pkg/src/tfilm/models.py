"""Mobilities, potentials, the sigma-barrier, and the discrete energy.

The barrier turns the base potential G into a convex C^2 function
G_sigma that agrees with G above 2*sigma, blows up like sigma^2/s^2 as
s drops to 0, and is +inf for non-positive heights.  It is what keeps
every iterate of the implicit step strictly positive without explicit
constraints.

Infinite energy is a value, not an error: it is reported through the
``INFINITE_ENERGY`` sentinel (IEEE +inf assigned directly, never reached
by overflowing arithmetic), which compares correctly against any finite
energy.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .grid import gradient, integrate

__all__ = [
    "INFINITE_ENERGY",
    "MobilitySpec",
    "power_mobility",
    "navier_slip_mobility",
    "constant_mobility",
    "PotentialSpec",
    "zero_potential",
    "quadratic_potential",
    "strong_singular_potential",
    "ModifiedPotential",
    "build_modified_potential",
    "unmodified_potential",
    "ModelParams",
    "mobility_face",
    "psi",
    "psi_inverse",
    "EnergyBreakdown",
    "energy",
]

INFINITE_ENERGY = math.inf


# ---------------------------------------------------------------------------
# mobility

@dataclass(frozen=True)
class MobilitySpec:
    """Degenerate mobility m(s): zero for s <= 0, positive for s > 0.

    kinds:
      power        m(s) = s^n                      (n > 0)
      navier_slip  m(s) = lam*s^(alpha+1) + s^(alpha+2)
      constant_one m(s) = 1  (test-only; never degenerates)
    """

    kind: str
    n: float = 0.0
    lam: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("power", "navier_slip", "constant_one"):
            raise ValueError(f"unknown mobility kind {self.kind!r}")
        if self.kind == "power" and self.n <= 0:
            raise ValueError("power mobility needs exponent n > 0")
        if self.kind == "navier_slip" and (self.lam <= 0 or self.alpha <= 0):
            raise ValueError("navier_slip mobility needs lam > 0 and alpha > 0")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant_one":
            return np.ones_like(s)
        pos = s > 0
        out = np.zeros_like(s)
        sp = np.where(pos, s, 1.0)
        if self.kind == "power":
            out[pos] = (sp**self.n)[pos]
        else:
            out[pos] = (self.lam * sp ** (self.alpha + 1) + sp ** (self.alpha + 2))[pos]
        return out


def power_mobility(n):
    return MobilitySpec("power", n=float(n))


def navier_slip_mobility(lam, alpha):
    return MobilitySpec("navier_slip", lam=float(lam), alpha=float(alpha))


def constant_mobility():
    return MobilitySpec("constant_one")


# ---------------------------------------------------------------------------
# base potentials

@dataclass(frozen=True)
class PotentialSpec:
    """Convex non-negative potential G on (0, inf).

    kinds:
      zero            G(s) = 0
      quadratic       G(s) = a s^2 / 2 for s > 0, 0 for s <= 0
      strong_singular G(s) = A / s^2 for s > 0, 0 for s <= 0
    """

    kind: str
    a: float = 0.0
    A: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "quadratic", "strong_singular"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.a < 0 or self.A < 0:
            raise ValueError("potential coefficients must be non-negative")

    def g(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "quadratic":
            return np.where(s > 0, 0.5 * self.a * s * s, 0.0)
        out = np.zeros_like(s)
        pos = s > 0
        sp = np.where(pos, s, 1.0)
        with np.errstate(over="ignore", divide="ignore"):
            out[pos] = (self.A / (sp * sp))[pos]
        return out

    def dg(self, s):
        """G'(s); valid on s > 0 (0 returned elsewhere)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "quadratic":
            return np.where(s > 0, self.a * s, 0.0)
        pos = s > 0
        sp = np.where(pos, s, 1.0)
        out = np.zeros_like(s)
        out[pos] = (-2.0 * self.A / sp**3)[pos]
        return out

    def d2g(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(s)
        if self.kind == "quadratic":
            return np.where(s > 0, self.a, 0.0)
        pos = s > 0
        sp = np.where(pos, s, 1.0)
        out = np.zeros_like(s)
        out[pos] = (6.0 * self.A / sp**4)[pos]
        return out


def zero_potential():
    return PotentialSpec("zero")


def quadratic_potential(a):
    return PotentialSpec("quadratic", a=float(a))


def strong_singular_potential(A):
    return PotentialSpec("strong_singular", A=float(A))


# ---------------------------------------------------------------------------
# sigma-modified potential

@dataclass(frozen=True)
class ModifiedPotential:
    """Barrier-modified potential G_sigma.

    For sigma is None the base potential is used as-is (no barrier);
    this variant exists for linear test oracles only.

    With a barrier, on (0, 2*sigma] the base is replaced by its
    second-order Taylor polynomial at 2*sigma (identical to the base for
    the zero and quadratic kinds) and the convex C^2 glue

        phi(s) = sigma^2/s^2 + a_phi s^2 + b_phi s + c_phi

    is added, with (a_phi, b_phi, c_phi) chosen so that phi and its
    first two derivatives vanish at s = 2*sigma.  phi'' > 0 on
    (0, 2*sigma), so G_sigma stays convex, matches G with C^2 contact at
    2*sigma, and grows like sigma^2/s^2 near zero.
    """

    base: PotentialSpec
    sigma: Optional[float]
    a_phi: float = 0.0
    b_phi: float = 0.0
    c_phi: float = 0.0
    # base Taylor data at 2*sigma
    g0: float = 0.0
    g1: float = 0.0
    g2: float = 0.0

    @property
    def has_barrier(self):
        return self.sigma is not None

    def _base_ext(self, s):
        """Base potential with C^2 Taylor extension below 2*sigma."""
        s = np.asarray(s, dtype=float)
        two_sigma = 2.0 * self.sigma
        out = self.base.g(np.maximum(s, two_sigma))
        low = s < two_sigma
        if np.any(low):
            d = s[low] - two_sigma
            out[low] = self.g0 + self.g1 * d + 0.5 * self.g2 * d * d
        return out

    def _base_ext_d1(self, s):
        s = np.asarray(s, dtype=float)
        two_sigma = 2.0 * self.sigma
        out = self.base.dg(np.maximum(s, two_sigma))
        low = s < two_sigma
        if np.any(low):
            out[low] = self.g1 + self.g2 * (s[low] - two_sigma)
        return out

    def _base_ext_d2(self, s):
        s = np.asarray(s, dtype=float)
        out = self.base.d2g(np.maximum(s, 2.0 * self.sigma))
        out[s < 2.0 * self.sigma] = self.g2
        return out

    def g_sigma(self, s):
        """G_sigma(s); +inf (sentinel) for s <= 0 when a barrier is set."""
        s = np.asarray(s, dtype=float)
        if not self.has_barrier:
            return self.base.g(s)
        out = self._base_ext(s)
        glue = s < 2.0 * self.sigma
        if np.any(glue):
            sg = np.where(s > 0, s, 1.0)
            phi = self.sigma**2 / sg**2 + self.a_phi * sg**2 + self.b_phi * sg + self.c_phi
            out[glue] += phi[glue]
        out[s <= 0] = INFINITE_ENERGY
        return out

    def dg_sigma(self, s):
        """G_sigma'(s) on s > 0."""
        s = np.asarray(s, dtype=float)
        if not self.has_barrier:
            return self.base.dg(s)
        out = self._base_ext_d1(s)
        glue = (s > 0) & (s < 2.0 * self.sigma)
        if np.any(glue):
            sg = s[glue]
            out[glue] += -2.0 * self.sigma**2 / sg**3 + 2.0 * self.a_phi * sg + self.b_phi
        return out

    def d2g_sigma(self, s):
        """G_sigma''(s) on s > 0."""
        s = np.asarray(s, dtype=float)
        if not self.has_barrier:
            return self.base.d2g(s)
        out = self._base_ext_d2(s)
        glue = (s > 0) & (s < 2.0 * self.sigma)
        if np.any(glue):
            sg = s[glue]
            out[glue] += 6.0 * self.sigma**2 / sg**4 + 2.0 * self.a_phi
        return out


def build_modified_potential(base, sigma):
    """Attach the sigma-barrier to a base potential; sigma must lie in (0, 1)."""
    sigma = float(sigma)
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must be in (0, 1), got {sigma}")
    two_sigma = 2.0 * sigma
    return ModifiedPotential(
        base=base,
        sigma=sigma,
        a_phi=-3.0 / (16.0 * sigma**2),
        b_phi=1.0 / sigma,
        c_phi=-1.5,
        g0=float(base.g(np.array([two_sigma]))[0]),
        g1=float(base.dg(np.array([two_sigma]))[0]),
        g2=float(base.d2g(np.array([two_sigma]))[0]),
    )


def unmodified_potential(base):
    """Base potential without barrier (oracle/testing use)."""
    return ModifiedPotential(base=base, sigma=None)


# ---------------------------------------------------------------------------
# model parameters

@dataclass(frozen=True)
class ModelParams:
    """Rheology exponent, mobility, potential, and barrier parameter.

    sigma=None disables the barrier (test oracles only); otherwise
    sigma must lie in (0, 1).
    """

    alpha: float
    mobility: MobilitySpec
    potential: PotentialSpec
    sigma: Optional[float]

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.sigma is not None and not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must be in (0, 1), got {self.sigma}")

    def modified(self):
        if self.sigma is None:
            return unmodified_potential(self.potential)
        return build_modified_potential(self.potential, self.sigma)

    @property
    def p(self):
        """Dissipation exponent (alpha + 1) / alpha."""
        return (self.alpha + 1.0) / self.alpha


# ---------------------------------------------------------------------------
# operations

def mobility_face(m, u, g):
    """Mobility sampled on faces from the previous-time height.

    Interior face f: m of the arithmetic mean of the two neighbour
    cells.  Boundary faces carry m of the adjacent cell; the flux is
    pinned to zero there so the value never enters the dynamics.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty(g.N + 1)
    out[1:-1] = m(0.5 * (u[:-1] + u[1:]))
    out[0] = m(u[:1])[0]
    out[-1] = m(u[-1:])[0]
    return out


def psi(alpha, s):
    """Odd power law |s|^(alpha-1) s with psi(0) = 0 for every alpha."""
    s = np.asarray(s, dtype=float)
    return np.sign(s) * np.abs(s) ** alpha


def psi_inverse(alpha, s):
    """Inverse of psi: |s|^(1/alpha - 1) s."""
    s = np.asarray(s, dtype=float)
    return np.sign(s) * np.abs(s) ** (1.0 / alpha)


class EnergyBreakdown(NamedTuple):
    dirichlet: float
    potential: float
    total: float


def energy(g, u, mp):
    """Discrete energy: 0.5 * int |grad u|^2 + int G_sigma(u).

    Returns the infinite sentinel in `total` (and `potential`) whenever
    the barrier is active and some cell is non-positive.
    """
    u = np.asarray(u, dtype=float)
    du = gradient(g, u)
    dirichlet = 0.5 * float(np.sum(du * du)) * g.dx
    if mp.has_barrier and np.any(u <= 0.0):
        return EnergyBreakdown(dirichlet, INFINITE_ENERGY, INFINITE_ENERGY)
    pot_vals = mp.g_sigma(u)
    if np.any(np.isinf(pot_vals)):
        return EnergyBreakdown(dirichlet, INFINITE_ENERGY, INFINITE_ENERGY)
    potential = integrate(g, pot_vals)
    return EnergyBreakdown(dirichlet, potential, dirichlet + potential)
