"""Kernels for constant-curvature spaces in gyrovector form.

One curvature ``K`` selects the model:

* ``K < 0``: Poincare ball of radius ``1/sqrt(-K)``
* ``K = 0``: Euclidean space
* ``K > 0``: stereographically projected hypersphere

Points and tangent vectors are arrays whose last axis holds coordinates;
leading axes broadcast. Every kernel is written with numpy ufuncs and
``.sum`` only, so it runs on :class:`dyernie.autodiff.Var` inputs as well
and can be differentiated.
"""

from __future__ import annotations

import logging

import numpy as np

from .autodiff import Var, value

logger = logging.getLogger(__name__)

EPS_BOUND = 1e-5
EPS_DEN = 1e-15
EPS_ANGLE = 1e-4
ARTANH_MAX = 1.0 - 1e-12
MIN_NORM = 1e-15


class DomainError(ValueError):
    """A point lies outside the Poincare ball."""


class SingularAdditionError(ArithmeticError):
    """Mobius addition denominator vanished (antipodal points on the sphere)."""


def _as_input(x):
    return x if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def _dot(x, y):
    return (x * y).sum(axis=-1, keepdims=True)


def _norm(x):
    # floor keeps sqrt differentiable at the origin
    return np.sqrt(np.maximum(_dot(x, x), MIN_NORM * MIN_NORM))


def _check_domain(x, K):
    if K < 0:
        sq = np.sum(value(x) ** 2, axis=-1)
        if np.any(sq >= -1.0 / K):
            raise DomainError(f"point outside the Poincare ball of curvature {K}")


def tan_k(x, K):
    """``tan`` for K > 0, ``tanh`` for K < 0 (applied to the scaled argument)."""
    return np.tan(x) if K > 0 else np.tanh(x)


def artan_k(x, K):
    """Inverse of :func:`tan_k`; the ``artanh`` argument is kept below 1."""
    if K > 0:
        return np.arctan(x)
    return np.arctanh(np.minimum(x, ARTANH_MAX))


def conformal_factor(x, K):
    """lambda_x^K = 2 / (1 + K |x|^2)."""
    x = _as_input(x)
    _check_domain(x, K)
    return 2.0 / (1.0 + K * _dot(x, x))


def clamp_to_domain(x, K, eps=EPS_BOUND):
    """Pull ball points back inside radius ``(1 - eps)/sqrt(|K|)``.

    Only the Poincare ball has a boundary; other curvatures return ``x``.
    """
    x = _as_input(x)
    if K >= 0:
        return x
    max_norm = (1.0 - eps) / np.sqrt(-K)
    norm = _norm(x)
    over = value(norm) >= max_norm
    if not np.any(over):
        return x
    logger.debug("clamped %d point(s) to the ball boundary", int(over.sum()))
    return np.where(over, x / norm * max_norm, x)


def mobius_add(x, y, K):
    """Gyrovector addition ``x (+)_K y``; plain ``x + y`` when K = 0."""
    x, y = _as_input(x), _as_input(y)
    if K == 0:
        return x + y
    xy = _dot(x, y)
    x2 = _dot(x, x)
    y2 = _dot(y, y)
    num = (1.0 - 2.0 * K * xy - K * y2) * x + (1.0 + K * x2) * y
    den = 1.0 - 2.0 * K * xy + K * K * x2 * y2
    if np.any(np.abs(value(den)) < EPS_DEN):
        raise SingularAdditionError("Mobius addition of (near) antipodal points")
    return clamp_to_domain(num / den, K)


def distance(x, y, K):
    """Geodesic distance. For K = 0 the plain Euclidean distance ``|x - y|``.

    Note the curved-space formula tends to ``2|x - y|`` as K -> 0 (the
    origin's conformal factor is 2), so the K = 0 branch is deliberately
    not its limit.
    """
    x, y = _as_input(x), _as_input(y)
    if K == 0:
        return _norm(x - y)[..., 0]
    sk = np.sqrt(abs(K))
    gyro = _norm(mobius_add(-x, y, K))
    return (2.0 / sk * artan_k(sk * gyro, K))[..., 0]


def exp_map(x, v, K):
    """Exponential map at base point ``x``.

    For K > 0 the scaled angle is clamped below ``pi/2 - EPS_ANGLE``.
    """
    x, v = _as_input(x), _as_input(v)
    if K == 0:
        return x + v
    sk = np.sqrt(abs(K))
    vn = _norm(v)
    angle = sk * conformal_factor(x, K) * vn / 2.0
    if K > 0:
        limit = np.pi / 2 - EPS_ANGLE
        if np.any(value(angle) > limit):
            logger.debug("clamped spherical exp angle")
        angle = np.minimum(angle, limit)
    step = tan_k(angle, K) * v / (sk * vn)
    out = mobius_add(x, step, K)
    tiny = value(vn) < MIN_NORM * 1.0000001
    if np.any(tiny):
        out = np.where(tiny, x + 0.0 * v, out)
    return out


def log_map(x, y, K):
    """Logarithmic map at ``x``: the tangent vector pointing to ``y``."""
    x, y = _as_input(x), _as_input(y)
    if K == 0:
        return y - x
    sk = np.sqrt(abs(K))
    u = mobius_add(-x, y, K)
    un = _norm(u)
    lam = conformal_factor(x, K)
    return 2.0 / (sk * lam) * artan_k(sk * un, K) * u / un


def exp0(v, K):
    """Exponential map at the origin (conformal factor 2)."""
    v = _as_input(v)
    if K == 0:
        return v
    sk = np.sqrt(abs(K))
    vn = _norm(v)
    angle = sk * vn
    if K > 0:
        angle = np.minimum(angle, np.pi / 2 - EPS_ANGLE)
    return clamp_to_domain(tan_k(angle, K) * v / (sk * vn), K)


def log0(y, K):
    """Logarithmic map at the origin."""
    y = _as_input(y)
    if K == 0:
        return y
    sk = np.sqrt(abs(K))
    yn = _norm(y)
    return artan_k(sk * yn, K) * y / (sk * yn)


def mobius_matvec(M, x, K):
    """Diagonal Mobius matrix-vector product ``exp0(M * log0(x))``.

    ``M`` holds the diagonal entries and broadcasts against ``x``.
    """
    x = _as_input(x)
    M = _as_input(M)
    if K == 0:
        return M * x
    return exp0(M * log0(x, K), K)
