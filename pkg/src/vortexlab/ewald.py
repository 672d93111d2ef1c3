"""Ewald-split evaluation of the periodic Green function.

G solves -Delta G = delta_0 - 1/|O| on the torus with periods (L1, L2),
has zero mean, and behaves like -(1/2pi) ln|x| near the source.  The
lattice sum

    G(x) = (1/4pi) sum_n E1(eta^2 |x - n|^2)
         + (1/|O|) sum_{m != 0} cos(2pi m.x) exp(-pi^2|m|^2/eta^2)
                                / (4pi^2 |m|^2)
         - 1/(4 eta^2 |O|)

(n over the period lattice, m over the dual lattice) converges for any
splitting parameter eta; eta^2 = pi/|O| balances both windows so that
half-width 4-ish terms reach machine precision.  The value is exactly
independent of eta, which the test suite exploits.

Unlike the FFT route, these sums evaluate G and grad G at arbitrary
off-grid points with no truncation ringing near the log singularity.
"""

import numpy as np
from scipy.special import exp1

# E1(38) ~ 8e-19: both window radii are chosen from this cutoff
_Z_CUT = 38.0


def _setup(L1, L2):
    if L1 <= 0 or L2 <= 0:
        raise ValueError("periods must be positive")
    area = L1 * L2
    eta2 = np.pi / area
    r_cut = np.sqrt(_Z_CUT / eta2)
    n1 = int(np.ceil(r_cut / L1 + 0.5))
    n2 = int(np.ceil(r_cut / L2 + 0.5))
    q_cut = np.sqrt(_Z_CUT * eta2) / np.pi
    m1 = int(np.ceil(q_cut * L1))
    m2 = int(np.ceil(q_cut * L2))
    return area, eta2, (n1, n2), (m1, m2)


def _min_image(dx, L):
    return dx - L * np.round(dx / L)


def green_value(dx, dy, L1=1.0, L2=1.0):
    """G(x) - G at displacement (dx, dy) from the source.

    Accepts scalars or arrays (broadcast together).  Returns +inf on
    the source point itself.
    """
    area, eta2, (n1, n2), (m1, m2) = _setup(L1, L2)
    dx = _min_image(np.asarray(dx, dtype=float), L1)
    dy = _min_image(np.asarray(dy, dtype=float), L2)
    out = np.zeros(np.broadcast(dx, dy).shape)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for i in range(-n1, n1 + 1):
            for j in range(-n2, n2 + 1):
                r2 = (dx - i * L1) ** 2 + (dy - j * L2) ** 2
                out = out + np.where(r2 > 0, exp1(eta2 * r2), np.inf)
    out /= 4.0 * np.pi
    for i in range(-m1, m1 + 1):
        for j in range(-m2, m2 + 1):
            if i == 0 and j == 0:
                continue
            q2 = (i / L1) ** 2 + (j / L2) ** 2
            w = np.exp(-np.pi**2 * q2 / eta2) / (4.0 * np.pi**2 * q2 * area)
            out = out + w * np.cos(2.0 * np.pi * (i * dx / L1 + j * dy / L2))
    return out - 1.0 / (4.0 * eta2 * area)


def green_gradient(dx, dy, L1=1.0, L2=1.0):
    """(dG/dx, dG/dy) at displacement (dx, dy); inf at the source."""
    area, eta2, (n1, n2), (m1, m2) = _setup(L1, L2)
    dx = _min_image(np.asarray(dx, dtype=float), L1)
    dy = _min_image(np.asarray(dy, dtype=float), L2)
    shape = np.broadcast(dx, dy).shape
    gx = np.zeros(shape)
    gy = np.zeros(shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(-n1, n1 + 1):
            for j in range(-n2, n2 + 1):
                ax = dx - i * L1
                ay = dy - j * L2
                r2 = ax * ax + ay * ay
                w = np.where(r2 > 0,
                             -np.exp(-eta2 * r2) / (2.0 * np.pi * r2), np.inf)
                gx = gx + w * ax
                gy = gy + w * ay
    for i in range(-m1, m1 + 1):
        for j in range(-m2, m2 + 1):
            if i == 0 and j == 0:
                continue
            q2 = (i / L1) ** 2 + (j / L2) ** 2
            w = -np.sin(2.0 * np.pi * (i * dx / L1 + j * dy / L2)) * \
                np.exp(-np.pi**2 * q2 / eta2) / (2.0 * np.pi * q2 * area)
            gx = gx + w * (i / L1)
            gy = gy + w * (j / L2)
    return gx, gy


def regular_part(L1=1.0, L2=1.0):
    """gamma(p, p) = lim_{x->p} G(x, p) + (1/2pi) ln|x - p|.

    The n = 0 lattice term contributes -(euler + 2 ln eta)/4pi after
    the log subtraction; everything else is evaluated at the source.
    """
    area, eta2, (n1, n2), (m1, m2) = _setup(L1, L2)
    euler = float(np.euler_gamma)
    out = -(euler + np.log(eta2)) / (4.0 * np.pi)
    acc = 0.0
    for i in range(-n1, n1 + 1):
        for j in range(-n2, n2 + 1):
            if i == 0 and j == 0:
                continue
            acc += exp1(eta2 * ((i * L1) ** 2 + (j * L2) ** 2))
    out += acc / (4.0 * np.pi)
    for i in range(-m1, m1 + 1):
        for j in range(-m2, m2 + 1):
            if i == 0 and j == 0:
                continue
            q2 = (i / L1) ** 2 + (j / L2) ** 2
            out += np.exp(-np.pi**2 * q2 / eta2) / (4.0 * np.pi**2 * q2 * area)
    return out - 1.0 / (4.0 * eta2 * area)
