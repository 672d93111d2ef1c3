"""Scalar kernels of the gauged O(3) sigma-model nonlinearity.

The model nonlinearity is

    f_tau(u) = e^u (1 - e^u) / (tau + e^u)^3,   tau > 0,

together with its derivative df_tau and two antiderivatives F1_tau and
F2_tau (normalized so that F1_tau(0) = 0 and F2_tau(-inf) = 0).  The
Chern-Simons-Higgs kernel e^u(1 - e^u) is available as an alternate
nonlinearity for cross-checks; it has only the F1-type antiderivative.

Every kernel is evaluated through the substitution t = e^u on u <= 0 and
s = e^-u on u > 0, so all intermediates stay in [0, 1] and nothing
overflows for |u| up to ~700 (e^-|u| simply underflows to zero beyond
that, which reproduces the exact asymptotic limits).  On the positive
side the rewritten forms are

    f_tau(u)  = s (s - 1) / (tau s + 1)^3
    df_tau(u) = s (tau s^2 - 2(tau+1) s + 1) / (tau s + 1)^4
    F1_tau(u) = -(1 - s)^2 / (2 (tau+1) (tau s + 1)^2)
    F2_tau(u) = ((1 - tau) + 2 tau s) / (2 tau^2 (tau s + 1)^2)

which agree with the t-forms identically and reduce to the leading
asymptotics (e.g. f_tau(u) ~ -e^-u as u -> +inf) without any branch
matching.

All functions accept scalars or numpy arrays and reject non-finite
input.  They are pure and stateless, hence thread-safe.
"""

import numpy as np

__all__ = [
    "f_tau",
    "df_tau",
    "F1_tau",
    "F2_tau",
    "q_tau",
    "f_csh",
    "df_csh",
    "F1_csh",
    "sup_abs_df_tau",
    "sup_abs_f_tau",
]


def _check_tau(tau):
    tau = float(tau)
    if not np.isfinite(tau) or tau <= 0.0:
        raise ValueError("tau must be a finite positive real, got %r" % (tau,))
    return tau


def _checked_u(u):
    # Scalars stay scalars on output; see _restore.
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite input to kernel evaluation")
    return arr


def _restore(result, u):
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(result)
    return result


def f_tau(u, tau):
    """Nonlinearity f_tau(u) = e^u (1 - e^u) / (tau + e^u)^3.

    Positive for u < 0, zero at u = 0, negative for u > 0.  Safe for
    |u| up to ~700.

    Parameters
    ----------
    u : float or ndarray
    tau : positive float

    Returns
    -------
    float or ndarray
    """
    tau = _check_tau(tau)
    arr = _checked_u(u)
    e = np.exp(-np.abs(arr))
    # 1 - e^u = -expm1(u) keeps full relative accuracy near u = 0
    m = -np.expm1(-np.abs(arr))
    neg_form = e * m / (tau + e) ** 3
    pos_form = -e * m / (tau * e + 1.0) ** 3
    return _restore(np.where(arr > 0.0, pos_form, neg_form), u)


def df_tau(u, tau):
    """Derivative of f_tau.

    df_tau(u) = e^u (tau - 2(tau+1) e^u + e^{2u}) / (tau + e^u)^4,
    with df_tau(0) = -1/(tau+1)^3.
    """
    tau = _check_tau(tau)
    arr = _checked_u(u)
    e = np.exp(-np.abs(arr))
    neg_form = e * (tau - 2.0 * (tau + 1.0) * e + e * e) / (tau + e) ** 4
    pos_form = e * (tau * e * e - 2.0 * (tau + 1.0) * e + 1.0) / (tau * e + 1.0) ** 4
    return _restore(np.where(arr > 0.0, pos_form, neg_form), u)


def F1_tau(u, tau):
    """Antiderivative of f_tau vanishing at u = 0.

    F1_tau(u) = -(1 - e^u)^2 / (2 (tau+1) (tau + e^u)^2) <= 0, with
    limits -1/(2(tau+1)tau^2) at -inf and -1/(2(tau+1)) at +inf.
    """
    tau = _check_tau(tau)
    arr = _checked_u(u)
    e = np.exp(-np.abs(arr))
    m = -np.expm1(-np.abs(arr))
    neg_form = -(m * m) / (2.0 * (tau + 1.0) * (tau + e) ** 2)
    pos_form = -(m * m) / (2.0 * (tau + 1.0) * (tau * e + 1.0) ** 2)
    return _restore(np.where(arr > 0.0, pos_form, neg_form), u)


def F2_tau(u, tau):
    """Antiderivative of f_tau vanishing at u = -inf.

    F2_tau(u) = e^u ((1-tau) e^u + 2 tau) / (2 tau^2 (tau + e^u)^2),
    with F2_tau(0) = 1/(2 tau^2 (tau+1)) and limit (1-tau)/(2 tau^2)
    at +inf.
    """
    tau = _check_tau(tau)
    arr = _checked_u(u)
    e = np.exp(-np.abs(arr))
    neg_form = e * ((1.0 - tau) * e + 2.0 * tau) / (2.0 * tau * tau * (tau + e) ** 2)
    pos_form = ((1.0 - tau) + 2.0 * tau * e) / (2.0 * tau * tau * (tau * e + 1.0) ** 2)
    return _restore(np.where(arr > 0.0, pos_form, neg_form), u)


def q_tau(u, tau):
    """Quantization density (1 - e^u)^2 / (tau + e^u)^2.

    Tends to 1/tau^2 as u -> -inf and to 1 as u -> +inf; vanishes
    quadratically at u = 0.  This is the density whose integral over a
    topological vortex profile is quantized.
    """
    tau = _check_tau(tau)
    arr = _checked_u(u)
    e = np.exp(-np.abs(arr))
    m = -np.expm1(-np.abs(arr))
    neg_form = (m / (tau + e)) ** 2
    # (1 - e^u)/(tau + e^u) = (s - 1)/(tau s + 1) after multiplying by s/s
    pos_form = (m / (tau * e + 1.0)) ** 2
    return _restore(np.where(arr > 0.0, pos_form, neg_form), u)


def f_csh(u):
    """Chern-Simons-Higgs alternate kernel e^u (1 - e^u).

    Unbounded below as u -> +inf; intended for u <= 0 profiles.  The
    value overflows IEEE range for u > ~355 and is returned as -inf.
    """
    arr = _checked_u(u)
    with np.errstate(over="ignore"):
        t = np.exp(arr)
        out = t * (1.0 - t)
        out = np.where(np.isinf(t), -np.inf, out)
    return _restore(out, u)


def df_csh(u):
    """Derivative e^u (1 - 2 e^u) of the Chern-Simons-Higgs kernel."""
    arr = _checked_u(u)
    with np.errstate(over="ignore"):
        t = np.exp(arr)
        out = t * (1.0 - 2.0 * t)
        out = np.where(np.isinf(t), -np.inf, out)
    return _restore(out, u)


def F1_csh(u):
    """Antiderivative -(1 - e^u)^2 / 2 of the Chern-Simons-Higgs kernel."""
    arr = _checked_u(u)
    with np.errstate(over="ignore"):
        t = np.exp(arr)
        out = -0.5 * (1.0 - t) ** 2
        out = np.where(np.isinf(t), -np.inf, out)
    return _restore(out, u)


def _df_critical_points(tau):
    # Stationary points of df_tau solve the cubic (in t = e^u, t > 0)
    #   -t^3 + (7 tau + 4) t^2 - tau (4 tau + 7) t + tau^2 = 0
    # obtained from d/du df_tau = 0 after clearing (tau + t)^5.
    coeffs = [-1.0, 7.0 * tau + 4.0, -tau * (4.0 * tau + 7.0), tau * tau]
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) < 1e-9 * (1.0 + np.abs(roots.real))].real
    return real[real > 0.0]


def sup_abs_df_tau(tau):
    """Supremum over u of |df_tau(u)|.

    The extrema of df_tau occur at roots of an explicit cubic in e^u;
    the sup is the largest |df_tau| over those roots (df_tau vanishes
    at both tails).
    """
    tau = _check_tau(tau)
    ts = _df_critical_points(tau)
    if ts.size == 0:
        # cannot happen for tau > 0, but stay safe
        us = np.linspace(-50.0, 50.0, 20001)
        return float(np.max(np.abs(df_tau(us, tau))))
    us = np.log(ts)
    vals = np.abs(df_tau(us, tau))
    # u = 0 is itself a candidate (value 1/(tau+1)^3); include it
    return float(max(np.max(vals), 1.0 / (tau + 1.0) ** 3))


def sup_abs_f_tau(tau):
    """Supremum over u of |f_tau(u)|.

    Extrema of f_tau solve df_tau = 0, i.e. the quadratic
    t^2 - 2(tau+1) t + tau = 0 in t = e^u; both roots are positive.
    """
    tau = _check_tau(tau)
    disc = (tau + 1.0) ** 2 - tau
    ts = np.array([tau + 1.0 - np.sqrt(disc), tau + 1.0 + np.sqrt(disc)])
    ts = ts[ts > 0.0]
    return float(np.max(np.abs(f_tau(np.log(ts), tau))))
