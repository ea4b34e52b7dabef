# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; same contracts as ``_pykernels``."""

import numpy as np

from libc.math cimport pow


def closures(const double[::1] rho, double sound, double gamma):
    cdef Py_ssize_t n = rho.shape[0], i
    h_arr = np.empty(n)
    g_arr = np.empty(n)
    phi_arr = np.empty(n)
    vphi_arr = np.empty(n)
    cdef double[::1] h = h_arr, g = g_arr, phi = phi_arr, vphi = vphi_arr
    cdef double r, r1, ip, lo = 1.0 + rho[0]
    cdef double ex = gamma - 2.0
    for i in range(n):
        r = rho[i]
        r1 = 1.0 + r
        if r1 < lo:
            lo = r1
        ip = 1.0 / r1
        phi[i] = ip
        h[i] = r * ip
        vphi[i] = r * (r + 2.0) * ip * ip
        g[i] = sound * pow(r1, ex) - 1.0
    return h_arr, g_arr, phi_arr, vphi_arr, lo


def implicit_solve(const double complex[::1] b_rho, const double complex[:, ::1] b_u,
                   const double complex[::1] b_chi, const double[:, ::1] kd,
                   const double[::1] kd2, const double[::1] inv_t, const double[::1] inv_kd2,
                   const double[::1] d_det, const double[::1] c0_det, const double[::1] dt_det,
                   const double[::1] chi_fac, double c2):
    cdef Py_ssize_t d = b_u.shape[0], m = b_rho.shape[0], i, j
    rho_arr = np.empty(m, dtype=np.complex128)
    u_arr = np.empty((d, m), dtype=np.complex128)
    chi_arr = np.empty(m, dtype=np.complex128)
    cdef double complex[::1] rho = rho_arr, chi = chi_arr
    cdef double complex[:, ::1] u = u_arr
    cdef double complex p, big_p, corr, br
    cdef double complex I = 1j
    for i in range(m):
        p = 0
        for j in range(d):
            p = p + kd[j, i] * b_u[j, i]
        br = b_rho[i]
        rho[i] = d_det[i] * br - I * (dt_det[i] * p)
        big_p = c0_det[i] * p - I * ((dt_det[i] * c2 * kd2[i]) * br)
        corr = inv_kd2[i] * (big_p - inv_t[i] * p)
        for j in range(d):
            u[j, i] = inv_t[i] * b_u[j, i] + kd[j, i] * corr
        chi[i] = chi_fac[i] * b_chi[i]
    return rho_arr, u_arr, chi_arr
