"""Mie-series reference for plane-wave scattering by a PEC sphere.

Conventions match the solver: time factor exp(-i w t), radiating kernel
exp(+jkR); incident wave x-polarized, propagating along +z. The far field
is expressed as E_s ~ (exp(jkr)/r) F(u), so the bistatic radar cross
section is 4 pi |F|^2 / |E_inc|^2.

The scattering amplitudes use the standard angular functions pi_n, tau_n
and the PEC coefficients a_n = psi_n'(x)/xi_n'(x), b_n = psi_n(x)/xi_n(x)
with psi_n(x) = x j_n(x) and xi_n(x) = x h1_n(x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import spherical_jn, spherical_yn


@dataclass(frozen=True)
class MieOracle:
    """PEC sphere series with truncation chosen so the tail is negligible."""

    radius: float
    wavenumber: float
    n_terms: int = 0

    def __post_init__(self):
        if self.radius <= 0 or self.wavenumber <= 0:
            raise ValueError("radius and wavenumber must be positive")
        if self.n_terms <= 0:
            # start at ceil(ka) + 15 and grow until the tail is negligible
            n = int(np.ceil(self.ka)) + 15
            object.__setattr__(self, "n_terms", n)
            while not self._tail_converged() and self.n_terms < n + 200:
                object.__setattr__(self, "n_terms", self.n_terms + 5)
        if not self._tail_converged():
            raise ValueError(f"series not converged at {self.n_terms} terms")

    def _tail_converged(self) -> bool:
        a, b = self.coefficients()
        tail = max(abs(a[-1]), abs(b[-1]))
        head = max(abs(a).max(), abs(b).max())
        return tail <= 1e-12 * head

    @property
    def ka(self) -> float:
        return self.wavenumber * self.radius

    def coefficients(self):
        """PEC scattering coefficients a_n, b_n for n = 1..n_terms."""
        x = self.ka
        n = np.arange(1, self.n_terms + 1)
        jn = spherical_jn(n, x)
        jnp = spherical_jn(n, x, derivative=True)
        yn = spherical_yn(n, x)
        ynp = spherical_yn(n, x, derivative=True)
        h1 = jn + 1j * yn
        h1p = jnp + 1j * ynp
        psi = x * jn
        psip = jn + x * jnp
        xi = x * h1
        xip = h1 + x * h1p
        return psip / xip, psi / xi

    def amplitudes(self, cos_theta: np.ndarray):
        """Scattering amplitudes S1, S2 at scattering angles theta."""
        mu = np.atleast_1d(np.asarray(cos_theta, dtype=float))
        a, b = self.coefficients()
        s1 = np.zeros(mu.shape, dtype=complex)
        s2 = np.zeros(mu.shape, dtype=complex)
        pi_prev = np.zeros_like(mu)   # pi_0
        pi_cur = np.ones_like(mu)     # pi_1
        for n in range(1, self.n_terms + 1):
            tau = n * mu * pi_cur - (n + 1) * pi_prev
            fac = (2 * n + 1) / (n * (n + 1))
            s1 += fac * (a[n - 1] * pi_cur + b[n - 1] * tau)
            s2 += fac * (a[n - 1] * tau + b[n - 1] * pi_cur)
            pi_next = ((2 * n + 1) * mu * pi_cur - (n + 1) * pi_prev) / n
            pi_prev, pi_cur = pi_cur, pi_next
        return s1, s2

    def far_field(self, directions: np.ndarray) -> np.ndarray:
        """F(u) as (D, 3) complex vectors for unit observation directions."""
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        ct = np.clip(d[:, 2], -1.0, 1.0)
        s1, s2 = self.amplitudes(ct)
        st = np.sqrt(np.maximum(1.0 - ct**2, 0.0))
        # azimuth of the observation direction; x-polarized incidence
        phi = np.arctan2(d[:, 1], d[:, 0])
        cp, sp_ = np.cos(phi), np.sin(phi)
        theta_hat = np.column_stack([ct * cp, ct * sp_, -st])
        phi_hat = np.column_stack([-sp_, cp, np.zeros_like(sp_)])
        k = self.wavenumber
        f_theta = (1j / k) * cp * s2
        f_phi = -(1j / k) * sp_ * s1
        # the polar frame with atan2(0, 0) = 0 gives the correct x-polarized
        # limit on the z-axis, so no pole special-casing is needed
        return f_theta[:, None] * theta_hat + f_phi[:, None] * phi_hat


def mie_rcs(oracle: MieOracle, directions: np.ndarray) -> np.ndarray:
    """Bistatic RCS (m^2) of the PEC sphere in the given unit directions."""
    f = oracle.far_field(directions)
    return 4.0 * np.pi * np.sum(np.abs(f) ** 2, axis=1)


def rayleigh_backscatter_rcs(radius: float, wavenumber: float) -> float:
    """Small-sphere limit: sigma_back -> 9 (ka)^4 pi a^2."""
    ka = wavenumber * radius
    return 9.0 * ka**4 * np.pi * radius**2
