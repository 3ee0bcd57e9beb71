"""Closed-form time integrals of exponentials."""

import numpy as np


def phi1(w):
    """``(exp(w) - 1) / w`` with the removable singularity filled in."""
    w = np.asarray(w, dtype=complex)
    out = np.ones_like(w)
    nz = w != 0
    out[nz] = np.expm1(w[nz]) / w[nz]
    return out


def exp_integral(z, t):
    """``int_0^t exp(z tau) d tau`` for complex rate ``z``.

    Uses ``expm1`` so nearly resonant rates keep full relative accuracy and
    the resonant case ``z = 0`` returns ``t`` exactly.
    """
    z = np.asarray(z, dtype=complex)
    t = np.asarray(t, dtype=float)
    return t * phi1(z * t)


def osc_integral(mu, t):
    """``int_0^t exp(i mu tau) d tau`` for real frequencies ``mu``."""
    mu = np.asarray(mu, dtype=float)
    t = np.asarray(t, dtype=float)
    return t * np.exp(0.5j * mu * t) * np.sinc(mu * t / (2.0 * np.pi))
