"""Airy kernel, the shifted kernel K^(tau,-tau), the A-functions and the tacnode kernel.

Everything is written in the original (unrescaled) tacnode variables.  The
functions ``A^tau_u(z)`` are stored stripped of their common factor
``exp(2 tau^3 / 3)``, which cancels between ``A^tau`` and ``A^{-tau}`` in every
product that enters a determinant.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AccuracyError, ParameterError
from .fredholm import (
    DEFAULT_TAIL_TOL,
    KernelFn,
    SemiInfinite,
    log_det_identity_minus,
    resolvent_bundle,
    resolvent_identity_residual,
)
from .quad import IntervalUnion, QuadRule, composite_rule, semi_infinite_rule, tail_cutoff
from .specfun import CBRT2, ScaledReal, airy, airy_scaled

__all__ = [
    "SIGMA_MAX",
    "TAU_MAX",
    "X_MAX",
    "AIRY_KERNEL",
    "TacnodeParams",
    "TacnodeContext",
    "BlockSystem",
    "airy_kernel",
    "airy_kernel_integral",
    "k_tau_tau",
    "script_a",
    "script_a_table",
    "tacnode_context",
    "tacnode_eval",
    "tacnode_matrix",
    "tacnode_kernel_fn",
    "block_system",
]

log = logging.getLogger(__name__)

SIGMA_MAX = 5.0
TAU_MAX = 4.0
X_MAX = 25.0
SIXTH_ROOT2 = 2.0 ** (1.0 / 6.0)
CONFLUENT_GAP = 1e-5
SERIES_GAP = 0.5
_SERIES_TERMS = 48
DEFAULT_AUX_TOL = 1e-12
_W_START = 32
_MAX_DOUBLINGS = 4


@dataclass(frozen=True)
class TacnodeParams:
    """Overlap ``sigma >= 0`` and time ``tau``; ``sigma_tilde = 2^(2/3) sigma``."""

    sigma: float
    tau: float
    sigma_tilde: float = field(init=False)

    def __post_init__(self):
        sigma, tau = float(self.sigma), float(self.tau)
        if not (math.isfinite(sigma) and math.isfinite(tau)):
            raise ParameterError("sigma and tau must be finite")
        if not 0.0 <= sigma <= SIGMA_MAX:
            raise ParameterError(f"sigma must lie in [0, {SIGMA_MAX}], got {sigma}")
        if abs(tau) > TAU_MAX:
            raise ParameterError(f"|tau| must not exceed {TAU_MAX}, got {tau}")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "sigma_tilde", 2.0 ** (2.0 / 3.0) * sigma)

    def reversed(self) -> "TacnodeParams":
        return TacnodeParams(self.sigma, -self.tau)


# --- Airy kernel -------------------------------------------------------------


def _divided_series(z, d, a, b):
    """``K_Ai(z, z + d)`` from Taylor series of ``Ai`` about ``z``.

    With ``S1 = (Ai(z+d) - Ai(z)) / d`` and ``S2 = (Ai'(z+d) - Ai'(z)) / d``
    summed term by term, ``K = Ai'(z) S1 - Ai(z) S2`` and nothing is divided by ``d``.
    """
    # Ai'' = z Ai  =>  c_k = (z c_{k-2} + c_{k-3}) / (k (k - 1))
    c_km3, c_km2, c_km1 = a, b, 0.5 * z * a
    s1 = b + c_km1 * d
    s2 = 2.0 * c_km1
    dp = d
    for k in range(3, _SERIES_TERMS):
        c_k = (z * c_km2 + c_km3) / (k * (k - 1))
        s2 = s2 + k * c_k * dp
        dp = dp * d
        s1 = s1 + c_k * dp
        c_km3, c_km2, c_km1 = c_km2, c_km1, c_k
    return b * s1 - a * s2


def airy_kernel(z, w):
    """``K_Ai(z, w) = (Ai(z) Ai'(w) - Ai'(z) Ai(w)) / (z - w)``.

    For ``|z - w| < 1e-5`` a second-order Taylor expansion about ``z`` replaces
    the divided difference; on the diagonal it is ``Ai'(z)^2 - z Ai(z)^2``.
    Up to ``|z - w| < 0.5`` the divided difference is summed as a series so
    that errors in ``Ai`` are not amplified by ``1 / (z - w)``.
    """
    z, w = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(w, dtype=float))
    scalar = z.ndim == 0
    az, dz = airy(z)
    aw, dw = airy(w)
    d = w - z
    ad = np.abs(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (az * dw - dz * aw) / (z - w)
    mid = (ad >= CONFLUENT_GAP) & (ad < SERIES_GAP)
    if np.any(mid):
        out = np.where(mid, _divided_series(z, d, az, dz), out)
    near = ad < CONFLUENT_GAP
    confluent = (
        (dz * dz - z * az * az)
        - 0.5 * d * az * az
        - (d * d / 6.0) * (az * dz + z * z * az * az - z * dz * dz)
    )
    out = np.where(near, confluent, out)
    return float(out) if scalar else out


AIRY_KERNEL = KernelFn(airy_kernel, symmetric_hint=True, name="airy")


def airy_kernel_integral(z: float, w: float, tol: float = 1e-12) -> float:
    """``int_0^inf Ai(z + u) Ai(w + u) du`` by direct quadrature, doubling nodes."""
    if z < -10 or w < -10:
        raise ParameterError("airy_kernel_integral: z, w must be >= -10")
    if tol < 1e-13:
        raise ParameterError("airy_kernel_integral: tol must be >= 1e-13")
    m = min(z, w)
    prev = None
    n = 32
    for _ in range(_MAX_DOUBLINGS + 1):
        rule = semi_infinite_rule(m, min(tol, 1e-4), n)
        u = rule.nodes - m
        val = rule.integrate(airy(z + u)[0] * airy(w + u)[0])
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
        n *= 2
    raise AccuracyError(f"airy_kernel_integral did not converge at ({z}, {w})")


def k_tau_tau(params: TacnodeParams, x, y, gauge_stripped: bool = False):
    """``K^(tau,-tau)_Ai(sigma - x, sigma - y) = e^{tau (y - x)} K_Ai(sigma - x + tau^2, sigma - y + tau^2)``."""
    s, t = params.sigma, params.tau
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = airy_kernel(s - x + t * t, s - y + t * t)
    if gauge_stripped or t == 0.0:
        return k
    return np.exp(t * (y - x)) * k


# --- A-functions -------------------------------------------------------------


def _w_cutoff_tol(tau: float, shift_min: float, aux_tol: float) -> float:
    """Tail tolerance for the w-rule of ``A``.

    The integrand ``e^{tau cbrt2 w} Ai(c + cbrt2 w) Ai(w + z)`` decays later
    than a bare Airy tail when ``tau > 0``; pick the cutoff from a crude
    log-bound of it instead.
    """
    w = np.linspace(0.0, 40.0, 4001)
    arg = np.maximum(shift_min + CBRT2 * w, 0.0)
    bound = abs(tau) * CBRT2 * w - (2.0 / 3.0) * arg**1.5 - (2.0 / 3.0) * w**1.5
    peak = int(np.argmax(bound))
    below = np.nonzero(bound[peak:] - bound[peak] < math.log(aux_tol) - 2.0)[0]
    t_needed = w[peak + below[0]] if below.size else 40.0
    t_needed = max(t_needed, tail_cutoff(0.0, aux_tol))
    return min(math.exp(-(2.0 / 3.0) * t_needed**1.5), aux_tol)


def _first_term(tau: float, us: np.ndarray, zs: np.ndarray) -> ScaledReal:
    arg = us[:, None] + CBRT2 * zs[None, :]
    ai, _ = airy_scaled(arg + tau * tau)
    return ScaledReal._make(ai.sign, np.asarray(ai.log_mag) + tau * arg)


def _w_integral(tau: float, us: np.ndarray, zs: np.ndarray, rule: QuadRule):
    """The w-integral over ``us x zs`` and the sum of absolute terms (its rounding scale)."""
    w = rule.nodes
    arg = -us[:, None] + CBRT2 * w[None, :]
    ai, _ = airy_scaled(arg + tau * tau)
    growth = ScaledReal._make(ai.sign, np.asarray(ai.log_mag) + tau * arg).to_real()
    decay = airy(w[:, None] + zs[None, :])[0] * rule.weights[:, None]
    return growth @ decay, np.abs(growth) @ np.abs(decay)


def script_a_table(
    tau: float, us: Sequence[float], zs: Sequence[float], aux_tol: float = DEFAULT_AUX_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Table of ``e^{-2tau^3/3} A^tau_u(z)`` over ``us x zs`` and digits lost to cancellation.

    ``A^tau_u(z) = Ai^(tau)(u + cbrt2 z) - int_0^inf Ai^(tau)(-u + cbrt2 w) Ai(w + z) dw``.
    """
    us = np.atleast_1d(np.asarray(us, dtype=float))
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    if us.size == 0 or zs.size == 0:
        return np.zeros((us.size, zs.size)), np.zeros((us.size, zs.size))
    if not 0.0 < aux_tol <= 1e-4:
        raise ParameterError("aux_tol must lie in (0, 1e-4]")
    tol_w = _w_cutoff_tol(tau, float(np.min(-us)) + tau * tau, aux_tol)
    n = _W_START
    prev = None
    for _ in range(_MAX_DOUBLINGS + 1):
        integral, scale = _w_integral(tau, us, zs, semi_infinite_rule(0.0, tol_w, n))
        if prev is not None and np.all(np.abs(integral - prev) <= aux_tol * (1.0 + scale)):
            break
        prev = integral
        n *= 2
    else:
        raise AccuracyError(f"A-function w-integral did not settle (tau={tau})")
    value, lost = _first_term(tau, us, zs).add(-ScaledReal.from_real(integral))
    return value.to_real(), lost


def script_a(params: TacnodeParams, u, z, aux_tol: float = DEFAULT_AUX_TOL) -> ScaledReal:
    """Stripped ``A^tau_u(z)`` (the ``e^{2tau^3/3}`` factor removed) as a ScaledReal."""
    if np.any(np.asarray(z, dtype=float) < params.sigma_tilde - 5.0):
        raise ParameterError("script_a: z must be >= sigma_tilde - 5")
    u_arr = np.asarray(u, dtype=float)
    z_arr = np.asarray(z, dtype=float)
    table, lost = script_a_table(params.tau, u_arr.ravel(), z_arr.ravel(), aux_tol)
    if np.any(lost > 8.0):
        log.warning("A-function lost %.1f digits to cancellation", float(np.max(lost)))
    if u_arr.ndim == 0 and z_arr.ndim == 0:
        return ScaledReal.from_real(table[0, 0])
    return ScaledReal.from_real(table)


# --- tacnode kernel via the resolvent ----------------------------------------


def _check_positions(xs: np.ndarray) -> None:
    if xs.size and not np.all(np.abs(xs) <= X_MAX):
        raise ParameterError(f"positions must satisfy |x| <= {X_MAX}")


@dataclass(frozen=True)
class TacnodeContext:
    """Precomputed pieces of the tacnode kernel at fixed ``(sigma, tau)``.

    ``a_plus[p, k]`` and ``a_minus[p, k]`` hold the stripped ``A^{+tau}``,
    ``A^{-tau}`` at probe ``u = probe_us[p]`` and aux node ``z_k``.
    """

    params: TacnodeParams
    aux_rule: QuadRule
    resolvent: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray
    probe_us: np.ndarray
    log_f2_aux: float
    identity_residual: float
    quality: dict
    _index: dict = field(repr=False, compare=False)

    def lookup(self, u) -> np.ndarray:
        flat = np.asarray(u, dtype=float).ravel()
        try:
            idx = [self._index[float(v)] for v in flat]
        except KeyError as exc:
            raise ParameterError(f"u = {exc.args[0]} is not among the context probes") from None
        return np.asarray(idx, dtype=int).reshape(np.shape(u))


def tacnode_context(
    params: TacnodeParams,
    probe_us: Sequence[float],
    n_aux: int,
    aux_tol: float = DEFAULT_AUX_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> TacnodeContext:
    """Aux rule on ``[sigma_tilde, T]``, the Airy resolvent there and A-tables."""
    if n_aux < 24:
        raise ParameterError("tacnode_context: n_aux must be at least 24")
    us = np.unique(np.asarray(probe_us, dtype=float))
    _check_positions(us + params.sigma)
    bundle = resolvent_bundle(AIRY_KERNEL, SemiInfinite(params.sigma_tilde, tail_tol), n_aux)
    rule = bundle.rule
    sw = np.sqrt(rule.weights)
    a_mat = sw[:, None] * airy_kernel(rule.nodes[:, None], rule.nodes[None, :]) * sw[None, :]
    residual = resolvent_identity_residual(a_mat, bundle.matrix)
    a_plus, lost_p = script_a_table(params.tau, us, rule.nodes, aux_tol)
    a_minus, lost_m = script_a_table(-params.tau, us, rule.nodes, aux_tol)
    max_lost = float(max(np.max(lost_p, initial=0.0), np.max(lost_m, initial=0.0)))
    quality = {"max_digits_lost": max_lost, "cancellation": max_lost > 8.0}
    if quality["cancellation"]:
        log.warning("tacnode context: A-tables lost %.1f digits", max_lost)
    index = {float(u): i for i, u in enumerate(us)}
    return TacnodeContext(
        params, rule, bundle.matrix, a_plus, a_minus, us, bundle.log_det, residual, quality, index
    )


def tacnode_matrix(ctx: TacnodeContext, xs, ys) -> np.ndarray:
    """``K^tac(x_i, y_j)`` on the outer grid ``xs x ys``."""
    p = ctx.params
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    sw = np.sqrt(ctx.aux_rule.weights)
    plus = ctx.a_plus[ctx.lookup(xs - p.sigma)] * sw
    minus = ctx.a_minus[ctx.lookup(ys - p.sigma)] * sw
    # (Id - K)^{-1} = Id + R: the identity part and the resolvent part
    correction = plus @ minus.T + plus @ ctx.resolvent.T @ minus.T
    return k_tau_tau(p, xs[:, None], ys[None, :]) + CBRT2 * correction


def tacnode_eval(ctx: TacnodeContext, x, y):
    """``K^tac(x, y)`` pointwise (broadcasting ``x`` against ``y``)."""
    p = ctx.params
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    sw = np.sqrt(ctx.aux_rule.weights)
    plus = ctx.a_plus[ctx.lookup(x - p.sigma)] * sw
    minus = ctx.a_minus[ctx.lookup(y - p.sigma)] * sw
    ident = np.sum(plus * minus, axis=-1)
    res = np.einsum("...l,kl,...k->...", plus, ctx.resolvent, minus)
    out = k_tau_tau(p, x, y) + CBRT2 * (ident + res)
    return float(out) if np.ndim(out) == 0 else out


def tacnode_kernel_fn(ctx: TacnodeContext) -> KernelFn:
    """The context as a :class:`KernelFn` (only valid on its probe points)."""

    def evaluate(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        if x.ndim == 2 and x.shape[0] > 1 and np.all(x == x[:, :1]) and np.all(y == y[:1, :]):
            return tacnode_matrix(ctx, x[:, 0], y[0, :])
        return tacnode_eval(ctx, x, y)

    return KernelFn(evaluate, symmetric_hint=False, name="tacnode")


# --- block operator ----------------------------------------------------------


@dataclass(frozen=True)
class BlockSystem:
    """Symmetrically weighted Nystrom matrix of the 2x2 block operator.

    The operator acts on ``L2([sigma_tilde, T]) + L2(I)``; ``det(I - matrix)``
    divided by ``det(I - top_left)`` is the tacnode gap probability.
    """

    params: TacnodeParams
    aux_rule: QuadRule
    domain_rule: QuadRule
    top_left: np.ndarray
    top_right: np.ndarray
    bottom_left: np.ndarray
    bottom_right: np.ndarray
    gauge: float = 1.0

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.top_left, self.top_right], [self.bottom_left, self.bottom_right]])

    def log_det(self) -> tuple[int, float]:
        return log_det_identity_minus(self.matrix)

    def log_det_top_left(self) -> tuple[int, float]:
        return log_det_identity_minus(self.top_left)


def block_system(
    params: TacnodeParams,
    domain: IntervalUnion,
    n_dom: int,
    n_aux: int,
    gauge: float = 1.0,
    aux_tol: float = DEFAULT_AUX_TOL,
    tail_tol: float = DEFAULT_TAIL_TOL,
    balance: bool = False,
) -> BlockSystem:
    """Assemble the block operator whose Schur complement is the tacnode kernel.

    Off-diagonal blocks carry ``-2^(1/6) A^{+-tau}``; their product reproduces
    the ``cbrt2`` prefactor of the resolvent term.  ``gauge`` scales them by
    ``(gauge, 1/gauge)``, which leaves the determinant unchanged.  ``balance``
    applies a further diagonal similarity on the domain nodes that equalizes
    each coupling row against its column; at large ``|tau|`` the two differ by
    factors up to ``e^{2 |tau| |x - sigma|}`` and LU loses accuracy without it.
    """
    if gauge == 0.0 or not math.isfinite(gauge):
        raise ParameterError("gauge must be finite and nonzero")
    aux = semi_infinite_rule(params.sigma_tilde, tail_tol, n_aux)
    dom = composite_rule(domain, n_dom)
    _check_positions(dom.nodes)
    z, x = aux.nodes, dom.nodes
    sa, sd = np.sqrt(aux.weights), np.sqrt(dom.weights)
    top_left = sa[:, None] * airy_kernel(z[:, None], z[None, :]) * sa[None, :]
    if x.size:
        us = x - params.sigma
        plus, _ = script_a_table(params.tau, us, z, aux_tol)
        minus, _ = script_a_table(-params.tau, us, z, aux_tol)
        bottom_left = -SIXTH_ROOT2 * gauge * sd[:, None] * plus * sa[None, :]
        top_right = -SIXTH_ROOT2 / gauge * sa[:, None] * minus.T * sd[None, :]
        bottom_right = sd[:, None] * k_tau_tau(params, x[:, None], x[None, :]) * sd[None, :]
        if balance:
            row = np.linalg.norm(bottom_left, axis=1)
            col = np.linalg.norm(top_right, axis=0)
            ok = (row > 0) & (col > 0) & np.isfinite(row) & np.isfinite(col)
            scale = np.ones_like(row)
            scale[ok] = np.sqrt(col[ok] / row[ok])
            bottom_left = scale[:, None] * bottom_left
            top_right = top_right / scale[None, :]
            bottom_right = scale[:, None] * bottom_right / scale[None, :]
    else:
        bottom_left = np.zeros((0, z.size))
        top_right = np.zeros((z.size, 0))
        bottom_right = np.zeros((0, 0))
    return BlockSystem(params, aux, dom, top_left, top_right, bottom_left, bottom_right, gauge)
