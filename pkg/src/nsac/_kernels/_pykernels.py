"""Reference numpy implementations of the hot kernels.

Array arguments are flat (one entry per grid point or per Fourier mode);
vector quantities carry the component on the leading axis.
"""

import numpy as np


def closures(rho, sound, gamma):
    """Coefficient functions of the perturbation form at each point.

    Returns ``(h, g, phi, varphi, min(1 + rho))`` with ``sound = a * gamma``,
    i.e. ``p'(1)`` for ``p = a rho^gamma``.
    """
    r1 = 1.0 + rho
    phi = 1.0 / r1
    h = rho * phi
    varphi = rho * (rho + 2.0) * phi * phi
    g = sound * r1 ** (gamma - 2.0) - 1.0
    return h, g, phi, varphi, float(np.min(r1))


def implicit_solve(b_rho, b_u, b_chi, kd, kd2, inv_t, inv_kd2, d_det, c0_det, dt_det, chi_fac, c2):
    """Solve ``(c0 I - dt A(k)) x = b`` mode by mode.

    The velocity splits into a transverse part, damped by ``inv_t``, and a
    longitudinal part coupled to the density through a 2x2 system whose
    inverse is encoded in ``d_det``, ``c0_det`` and ``dt_det``.
    """
    p = np.einsum("jm,jm->m", kd, b_u)
    rho = d_det * b_rho - 1j * dt_det * p
    big_p = c0_det * p - 1j * (dt_det * c2 * kd2) * b_rho
    u = inv_t * b_u + kd * (inv_kd2 * (big_p - inv_t * p))
    chi = chi_fac * b_chi
    return rho, u, chi
