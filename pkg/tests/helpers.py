"""Independent closed-form oracles used to freeze expected test values.

None of these touch the package's Fock-matrix machinery: they evaluate the
regularized traces through scalar generating functions.

Displaced-parity damped sum (geometric/Laguerre generating function):

    sum_n (-1)^n e^{-eps n} e^{-x/2} L_n(x) = (1 + e^{-eps})^{-1}
                                              exp(-(x/2) tanh(eps/2))

Generating-function kernel: with g1 = 2 a1, g2 = 2 a2, g = 2 a and
h = g - g2, rotating the e^{i tau n} insertion through the displacements
gives the scalar form

    K(tau) = (2/pi^2) e^{phi1} e^{phi2(tau)} (1 + e^{i tau})^{-1}
             exp(-(|g1 + h e^{i tau}|^2 / 2) (1 - e^{i tau})/(1 + e^{i tau}))

whose tau = 0 value is the Groenewold phase and whose -d^2/dtau^2 at 0 is
the n^2-inserted trace.
"""

import cmath
import math

import numpy as np

from moyal import PhasePoint


def _pt(x):
    if isinstance(x, PhasePoint):
        return x
    return PhasePoint(*x)


def damped_parity_series(gamma: complex, eps: float) -> float:
    """Abel-damped sum of the displaced-parity diagonal, exact in dim -> inf."""
    x = abs(gamma) ** 2
    return math.exp(-(x / 2.0) * math.tanh(eps / 2.0)) / (1.0 + math.exp(-eps))


def finite_parity_geometric(eps: float, dim: int) -> float:
    """Finite geometric sum sum_{n<dim} (-1)^n e^{-eps n}."""
    r = -math.exp(-eps)
    return (1.0 - r**dim) / (1.0 - r)


def closed_form_tau_kernel(tau: float, x1, x2, x_out) -> complex:
    """Scalar generating-function value of the tau-deformed kernel."""
    x1, x2, x = _pt(x1), _pt(x2), _pt(x_out)
    g1 = 2.0 * x1.alpha
    g2 = 2.0 * x2.alpha
    g = 2.0 * x.alpha
    h = g - g2
    phi1 = (g2.conjugate() * g - g2 * g.conjugate()) / 2.0
    rot = cmath.exp(1j * tau)
    gam = g1 + h * rot
    phi2 = (g1 * (h * rot).conjugate() - g1.conjugate() * h * rot) / 2.0
    w = (1.0 - rot) / (1.0 + rot)
    z = cmath.exp(phi2) / (1.0 + rot) * cmath.exp(-(abs(gam) ** 2 / 2.0) * w)
    return (2.0 / math.pi**2) * cmath.exp(phi1) * z


def closed_form_n2_ratio(x1, x2, x_out, h: float = 1e-4) -> complex:
    """Oracle for K(n^2)/K(1) via a tiny central difference of the closed form."""
    k_plus = closed_form_tau_kernel(h, x1, x2, x_out)
    k_zero = closed_form_tau_kernel(0.0, x1, x2, x_out)
    k_minus = closed_form_tau_kernel(-h, x1, x2, x_out)
    second = (k_plus - 2.0 * k_zero + k_minus) / h**2
    return -second / k_zero


def brute_force_star(fa_field, fb_field, out_points):
    """Direct nested-loop quadrature of the pure-phase kernel (tiny grids only)."""
    grid = fa_field.grid
    qg, pg = grid.meshgrid()
    w = grid.trapezoid_weights()
    q = qg.ravel()
    p = pg.ravel()
    fa = (fa_field.values * w).ravel()
    fb = (fb_field.values * w).ravel()
    out = []
    for (oq, op) in out_points:
        acc = 0j
        for a in range(q.size):
            phase_a = oq * p[a] - q[a] * op
            inner = np.exp(2j * (phase_a + q[a] * p - q * p[a] + q * op - oq * p))
            acc += fa[a] * np.sum(fb * inner)
        out.append(acc / math.pi**2)
    return np.array(out)
