"""Nystrom discretization of integral operators: determinants and resolvents."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import (
    DegenerateDeterminantError,
    EvaluationError,
    ParameterError,
    ResolventError,
)
from .quad import IntervalUnion, QuadRule, composite_rule, semi_infinite_rule

__all__ = [
    "DEFAULT_TAIL_TOL",
    "KernelFn",
    "SemiInfinite",
    "NystromSystem",
    "DetResult",
    "ResolventBundle",
    "discretize",
    "nystrom_system",
    "log_det_identity_minus",
    "fredholm_det",
    "resolvent_bundle",
    "endpoint_log_derivative",
    "resolvent_identity_residual",
]

DEFAULT_TAIL_TOL = 1e-16
_MIN_PIVOT = 1e-300
_MIN_RCOND = 1e-13


@dataclass(frozen=True)
class KernelFn:
    """A kernel ``K(x, y)`` evaluated with numpy broadcasting."""

    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]
    symmetric_hint: bool = False
    name: str = "kernel"

    def __call__(self, x, y):
        return self.eval(x, y)


@dataclass(frozen=True)
class SemiInfinite:
    """The half line ``[lo, inf)``, truncated by the Airy tail bound ``tol``."""

    lo: float
    tol: float = DEFAULT_TAIL_TOL


Domain = Union[IntervalUnion, SemiInfinite, QuadRule]


@dataclass(frozen=True)
class NystromSystem:
    rule: QuadRule
    matrix: np.ndarray


@dataclass(frozen=True)
class DetResult:
    """``det(Id - K)``; ``log_value`` is ``log|det|`` and ``sign`` its sign."""

    value: float
    log_value: float
    err_estimate: float
    n_used: int
    sign: int = 1


@dataclass(frozen=True)
class ResolventBundle:
    rule: QuadRule
    matrix: np.ndarray  # discrete (I - A)^{-1} A
    probe_points: np.ndarray
    probes: np.ndarray  # R(p_a, p_b)
    log_det: float  # log det(I - A)


def discretize(domain: Domain, n: int) -> QuadRule:
    """Quadrature rule for ``domain``; ``n`` is per piece for unions."""
    if isinstance(domain, QuadRule):
        return domain
    if isinstance(domain, SemiInfinite):
        return semi_infinite_rule(domain.lo, domain.tol, n)
    if isinstance(domain, IntervalUnion):
        return composite_rule(domain, n)
    raise ParameterError(f"unsupported domain {domain!r}")


def nystrom_system(kernel: KernelFn, rule: QuadRule) -> NystromSystem:
    """``A[i, j] = sqrt(w_i) K(x_i, x_j) sqrt(w_j)``."""
    x = rule.nodes
    sw = np.sqrt(rule.weights)
    k = np.asarray(kernel(x[:, None], x[None, :]), dtype=float)
    if not np.all(np.isfinite(k)):
        raise EvaluationError(f"{kernel.name}: non-finite kernel sample")
    if kernel.symmetric_hint and k.size:
        asym = np.abs(k - k.T) - 1e-12 * (1.0 + np.abs(k))
        if np.max(asym) > 0.0:
            raise ParameterError(f"{kernel.name} is flagged symmetric but is not")
    return NystromSystem(rule, sw[:, None] * k * sw[None, :])


def _lu(a: np.ndarray):
    n = a.shape[0]
    m = np.eye(n) - a
    lu, piv = sla.lu_factor(m, check_finite=False)
    return m, lu, piv


def _sign_log(lu: np.ndarray, piv: np.ndarray) -> tuple[int, float]:
    d = np.diag(lu)
    if d.size and np.min(np.abs(d)) < _MIN_PIVOT:
        raise DegenerateDeterminantError("Id - K is singular to machine precision")
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    sign = -1 if (swaps % 2) else 1
    if np.count_nonzero(d < 0) % 2:
        sign = -sign
    return sign, float(np.sum(np.log(np.abs(d))))


def log_det_identity_minus(a: np.ndarray) -> tuple[int, float]:
    """``(sign, log|det(I - a)|)`` via LU with partial pivoting."""
    if a.size == 0:
        return 1, 0.0
    _, lu, piv = _lu(a)
    return _sign_log(lu, piv)


def _det_once(kernel: KernelFn, domain: Domain, n: int) -> tuple[int, float, int]:
    rule = discretize(domain, n)
    system = nystrom_system(kernel, rule)
    sign, log = log_det_identity_minus(system.matrix)
    return sign, log, len(rule)


def fredholm_det(kernel: KernelFn, domain: Domain, n: int, refine: bool = True) -> DetResult:
    """``det(Id - K)`` on ``domain`` by the Nystrom method.

    Parameters
    ----------
    kernel : KernelFn
    domain : IntervalUnion, SemiInfinite or QuadRule
        ``n`` nodes per piece for unions; a QuadRule is used as given.
    n : int
    refine : bool
        Recompute with ``2n`` nodes and report ``|det_n - det_2n|``.
    """
    if n < 8 and not isinstance(domain, QuadRule):
        raise ParameterError("fredholm_det: n must be at least 8")
    sign, log, used = _det_once(kernel, domain, n)
    value = sign * math.exp(log)
    err = 0.0
    if refine and not isinstance(domain, QuadRule):
        sign2, log2, _ = _det_once(kernel, domain, 2 * n)
        err = abs(value - sign2 * math.exp(log2))
    return DetResult(value, log, err, used, sign)


def resolvent_bundle(
    kernel: KernelFn, domain: Domain, n: int, probe_points: Sequence[float] = ()
) -> ResolventBundle:
    """Discrete resolvent ``(I - A)^{-1} A`` and its Nystrom extension at probes.

    ``R(z, w) = K(z, w) + sum_ij K(z, x_i) sqrt(w_i) [(I - A)^{-1}]_ij sqrt(w_j) K(x_j, w)``.
    """
    rule = discretize(domain, n)
    p = np.asarray(probe_points, dtype=float).ravel()
    if isinstance(domain, SemiInfinite):
        outside = p < domain.lo
    else:
        outside = np.array([x not in rule.domain for x in p], dtype=bool)
    if outside.any():
        raise ParameterError("resolvent probes must lie inside the domain")

    system = nystrom_system(kernel, rule)
    a = system.matrix
    size = a.shape[0]
    m, lu, piv = _lu(a)
    anorm = np.max(np.sum(np.abs(m), axis=0)) if size else 0.0
    if size:
        rcond, info = lapack.dgecon(lu, anorm, norm="1")
        if info != 0 or rcond < _MIN_RCOND:
            raise ResolventError(f"Id - K is numerically singular (rcond={rcond:.3g})")
    sign, log_det = _sign_log(lu, piv)
    if sign <= 0:
        raise ResolventError("det(Id - K) is not positive")
    r_tilde = sla.lu_solve((lu, piv), a, check_finite=False) if size else a.copy()

    if p.size:
        sw = np.sqrt(rule.weights)
        x = rule.nodes
        k_px = np.asarray(kernel(p[:, None], x[None, :]), dtype=float) * sw[None, :]
        k_xp = sw[:, None] * np.asarray(kernel(x[:, None], p[None, :]), dtype=float)
        inv_k_xp = sla.lu_solve((lu, piv), k_xp, check_finite=False)
        probes = np.asarray(kernel(p[:, None], p[None, :]), dtype=float) + k_px @ inv_k_xp
    else:
        probes = np.empty((0, 0))
    return ResolventBundle(rule, r_tilde, p, probes, log_det)


def resolvent_identity_residual(a: np.ndarray, r_tilde: np.ndarray) -> float:
    """``max |(I - A)(I + R) - I|``."""
    eye = np.eye(a.shape[0])
    return float(np.max(np.abs((eye - a) @ (eye + r_tilde) - eye))) if a.size else 0.0


def endpoint_log_derivative(
    kernel: KernelFn, s: float, n: int, tol: float = DEFAULT_TAIL_TOL
) -> float:
    """``d/ds ln det(Id - K|[s, inf))``, i.e. the resolvent kernel at ``(s, s)``."""
    if n < 16:
        raise ParameterError("endpoint_log_derivative: n must be at least 16")
    bundle = resolvent_bundle(kernel, SemiInfinite(s, tol), n, [s])
    return float(bundle.probes[0, 0])
