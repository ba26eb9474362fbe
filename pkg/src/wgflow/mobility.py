"""Concave mobility functions and the kinetic action density they induce.

The action density is the integrand of the Benamou-Brenier style functional:
phi(z, v) = v^2 / m(z) on the interior of the mobility's support, extended by
lower semicontinuity to the boundary.  A small eps > 0 added to v^2 turns it
into a barrier that keeps densities strictly inside the support.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# classification of the growth of m, which decides the recession behaviour
TAG_WASSERSTEIN = "W"        # m(z) = mbar * z, unbounded support
TAG_SUBLINEAR = "SL"         # unbounded support, m(z)/z -> 0
TAG_BOUNDED = "bounded"      # support [0, M] with M finite

_TAGS = (TAG_WASSERSTEIN, TAG_SUBLINEAR, TAG_BOUNDED)


@dataclass(frozen=True)
class MobilitySpec:
    """A concave mobility m on (0, M) with m(0+) = 0 (and m(M-) = 0 if M is finite).

    Use the factory functions :func:`linear`, :func:`power`,
    :func:`bounded_support` or :func:`custom` instead of the raw constructor.
    """

    kind: str
    support_max: float          # M; math.inf for unbounded support
    tag: str
    params: tuple = ()
    m_fn: Optional[Callable] = None
    dm_fn: Optional[Callable] = None
    d2m_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ValueError(f"unknown mobility tag {self.tag!r}")
        if not (self.support_max > 0):
            raise ValueError("support_max must be positive")
        if self.tag == TAG_BOUNDED and not math.isfinite(self.support_max):
            raise ValueError("bounded tag requires finite support_max")
        if self.tag != TAG_BOUNDED and math.isfinite(self.support_max):
            raise ValueError("finite support_max requires the bounded tag")


def linear(mbar: float = 1.0) -> MobilitySpec:
    """m(z) = mbar * z on (0, inf); the classical Wasserstein case."""
    if not (mbar > 0):
        raise ValueError("mbar must be positive")
    return MobilitySpec("linear", math.inf, TAG_WASSERSTEIN, (float(mbar),))


def power(c: float, alpha: float) -> MobilitySpec:
    """m(z) = c * z**alpha with alpha in (0, 1); sublinear growth."""
    if not (c > 0):
        raise ValueError("c must be positive")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    return MobilitySpec("power", math.inf, TAG_SUBLINEAR, (float(c), float(alpha)))


def bounded_support(c: float, alpha1: float, alpha2: float, m_max: float) -> MobilitySpec:
    """m(z) = c * z**alpha1 * (M - z)**alpha2 on (0, M), vanishing at both ends."""
    if not (c > 0):
        raise ValueError("c must be positive")
    if not (0.0 < alpha1 <= 1.0 and 0.0 < alpha2 <= 1.0):
        raise ValueError("alpha1, alpha2 must lie in (0, 1]")
    if not (m_max > 0 and math.isfinite(m_max)):
        raise ValueError("m_max must be positive and finite")
    return MobilitySpec("bounded", float(m_max), TAG_BOUNDED,
                        (float(c), float(alpha1), float(alpha2)))


def custom(m_fn: Callable, dm_fn: Callable, d2m_fn: Callable,
           support_max: float = math.inf, tag: Optional[str] = None) -> MobilitySpec:
    """Wrap user-supplied m, m', m''.  All three must accept numpy arrays.

    The second derivative is required explicitly; it is never approximated
    internally.  For unbounded support the growth tag ("W" or "SL") must be
    given since it cannot be inferred from pointwise values.
    """
    if math.isfinite(support_max):
        tag = TAG_BOUNDED
    elif tag not in (TAG_WASSERSTEIN, TAG_SUBLINEAR):
        raise ValueError("unbounded custom mobility needs tag 'W' or 'SL'")
    spec = MobilitySpec("custom", float(support_max), tag,
                        m_fn=m_fn, dm_fn=dm_fn, d2m_fn=d2m_fn)
    validate_mobility(spec)
    return spec


@dataclass(frozen=True)
class ActionParams:
    """Regularization strength of the action density."""

    eps: float = 0.0

    def __post_init__(self):
        if not (self.eps >= 0.0):
            raise ValueError("eps must be nonnegative")


def _check_interior(spec: MobilitySpec, z) -> None:
    z = np.asarray(z)
    if np.any(z <= 0.0) or np.any(z >= spec.support_max):
        raise ValueError("density outside the open support (0, M)")


def mobility_eval(spec: MobilitySpec, z):
    """Return (m(z), m'(z), m''(z)) for z strictly inside (0, M).

    Accepts scalars or arrays; raises ValueError if any entry leaves the
    open support.
    """
    z = np.asarray(z, dtype=float)
    _check_interior(spec, z)
    if spec.kind == "linear":
        (mbar,) = spec.params
        m = mbar * z
        dm = np.full_like(z, mbar)
        d2m = np.zeros_like(z)
    elif spec.kind == "power":
        c, a = spec.params
        m = c * z ** a
        dm = c * a * z ** (a - 1.0)
        d2m = c * a * (a - 1.0) * z ** (a - 2.0)
    elif spec.kind == "bounded":
        c, a1, a2 = spec.params
        M = spec.support_max
        r = M - z
        m = c * z ** a1 * r ** a2
        dm = c * (a1 * z ** (a1 - 1.0) * r ** a2 - a2 * z ** a1 * r ** (a2 - 1.0))
        d2m = c * (a1 * (a1 - 1.0) * z ** (a1 - 2.0) * r ** a2
                   - 2.0 * a1 * a2 * z ** (a1 - 1.0) * r ** (a2 - 1.0)
                   + a2 * (a2 - 1.0) * z ** a1 * r ** (a2 - 2.0))
    elif spec.kind == "custom":
        m = np.asarray(spec.m_fn(z), dtype=float)
        dm = np.asarray(spec.dm_fn(z), dtype=float)
        d2m = np.asarray(spec.d2m_fn(z), dtype=float)
    else:  # pragma: no cover
        raise ValueError(f"unknown mobility kind {spec.kind!r}")
    if z.ndim == 0:
        return float(m), float(dm), float(d2m)
    return m, dm, d2m


def validate_mobility(spec: MobilitySpec, samples: int = 64) -> None:
    """Sampled check of positivity, concavity and the endpoint limits.

    Raises ValueError when a sample violates m > 0 or m'' <= 0 on (0, M),
    or when m does not decay toward zero at the support endpoints.
    """
    M = spec.support_max
    scale = M if math.isfinite(M) else 1.0
    interior = np.linspace(0.05, 0.95, samples) * scale
    m, _, d2m = mobility_eval(spec, interior)
    if np.any(m <= 0.0):
        raise ValueError("mobility must be positive on the open support")
    if np.any(d2m > 1e-12 * max(1.0, np.max(np.abs(m)))):
        raise ValueError("mobility must be concave on the open support")
    lo = scale * 10.0 ** (-np.arange(2.0, 9.0))
    mlo = mobility_eval(spec, lo)[0]
    if not (np.all(np.diff(mlo) <= 0.0) and mlo[-1] < 1e-2 * np.max(m)):
        raise ValueError("mobility must vanish at the lower endpoint")
    if math.isfinite(M):
        mhi = mobility_eval(spec, M - lo)[0]
        if not (np.all(np.diff(mhi) <= 0.0) and mhi[-1] < 1e-2 * np.max(m)):
            raise ValueError("mobility must vanish at the upper endpoint")


def action_density(spec: MobilitySpec, params: ActionParams, z, v):
    """Extended-real action density phi_eps(z, v).

    For eps > 0 the value is (v^2 + eps)/m(z) inside (0, M) and +inf
    everywhere else, boundary included.  For eps = 0 the density is v^2/m(z)
    inside, 0 at a finite support endpoint with v = 0, and +inf otherwise.
    """
    scalar = np.isscalar(z) and np.isscalar(v)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    z_b, v_b = np.broadcast_arrays(z, v)
    out = np.full(z_b.shape, math.inf)
    inside = (z_b > 0.0) & (z_b < spec.support_max)
    if np.any(inside):
        m = _mobility_raw(spec, z_b[inside])
        out[inside] = (v_b[inside] ** 2 + params.eps) / m
    if params.eps == 0.0:
        at_edge = (z_b == 0.0) | (z_b == spec.support_max)
        out[at_edge & (v_b == 0.0)] = 0.0
    if scalar:
        return float(out[0])
    return out


def _mobility_raw(spec: MobilitySpec, z):
    # m(z) alone, for z already known to be interior
    if spec.kind == "linear":
        return spec.params[0] * z
    if spec.kind == "power":
        c, a = spec.params
        return c * z ** a
    if spec.kind == "bounded":
        c, a1, a2 = spec.params
        return c * z ** a1 * (spec.support_max - z) ** a2
    return np.asarray(spec.m_fn(z), dtype=float)


def action_grad_hess(spec: MobilitySpec, params: ActionParams, z, v):
    """Gradient and Hessian of phi_eps in (z, v) strictly inside the support.

    Returns (grad, hess) with trailing shapes (2,) and (2, 2); leading
    dimensions follow the broadcast shape of z and v.  The Hessian is
    positive semidefinite whenever m'' <= 0.
    """
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    z_b, v_b = np.broadcast_arrays(z, v)
    m, dm, d2m = mobility_eval(spec, z_b)
    m = np.asarray(m); dm = np.asarray(dm); d2m = np.asarray(d2m)
    num = v_b ** 2 + params.eps
    gz = -num * dm / m ** 2
    gv = 2.0 * v_b / m
    hzz = num * (2.0 * dm ** 2 - m * d2m) / m ** 3
    hzv = -2.0 * v_b * dm / m ** 2
    hvv = 2.0 / m
    grad = np.stack([gz, gv], axis=-1)
    hess = np.stack([np.stack([hzz, hzv], axis=-1),
                     np.stack([hzv, hvv], axis=-1)], axis=-2)
    if z_b.ndim == 0:
        return grad.reshape(2), hess.reshape(2, 2)
    return grad, hess


def recession(spec: MobilitySpec, z, v):
    """Recession function of the action density; independent of eps.

    Linear growth keeps the density itself (it is 1-homogeneous); sublinear
    growth forces v = 0; a bounded support forces (z, v) = (0, 0).
    """
    scalar = np.isscalar(z) and np.isscalar(v)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if np.any(z < 0.0):
        raise ValueError("recession argument z must be nonnegative")
    if spec.tag == TAG_WASSERSTEIN:
        out = action_density(spec, ActionParams(0.0), z, v)
        return float(np.atleast_1d(out)[0]) if scalar else out
    z_b, v_b = np.broadcast_arrays(z, v)
    out = np.full(z_b.shape, math.inf)
    if spec.tag == TAG_SUBLINEAR:
        out[v_b == 0.0] = 0.0
    else:
        out[(z_b == 0.0) & (v_b == 0.0)] = 0.0
    if scalar:
        return float(out[0])
    return out
