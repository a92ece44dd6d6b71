"""Fast invariant suite run by ``tacgap check``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fredholm import log_det_identity_minus
from .kernels import (
    TacnodeParams,
    airy_kernel,
    airy_kernel_integral,
    block_system,
    k_tau_tau,
    tacnode_context,
    tacnode_eval,
)
from .probes import f2, hastings_p, tacnode_gap_block, tacnode_gap_direct
from .quad import IntervalUnion, composite_rule, gauss_legendre
from .specfun import airy

__all__ = ["CheckResult", "CHECKS", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    value: float
    threshold: float


def _airy_ode() -> tuple[float, float]:
    # Ai'' = x Ai, with Ai'' from a central difference of Ai'
    x = np.linspace(-8.0, 8.0, 33)
    h = 1e-4
    d2 = (airy(x + h)[1] - airy(x - h)[1]) / (2 * h)
    ai = airy(x)[0]
    return float(np.max(np.abs(d2 - x * ai))), 1e-7


def _gauss_exactness() -> tuple[float, float]:
    rule = gauss_legendre(20)
    return abs(rule.integrate(rule.nodes**38) - 2.0 / 39.0), 1e-14


def _kernel_dual() -> tuple[float, float]:
    pts = [(-3.0, 1.5), (0.0, 1.0), (2.0, 2.0), (-1.0, -4.0)]
    err = max(abs(airy_kernel(z, w) - airy_kernel_integral(z, w, 1e-12)) for z, w in pts)
    return err, 1e-9


def _f2_monotone() -> tuple[float, float]:
    vals = [f2(s, 32, refine=False).value for s in (-6, -4, -2, 0, 2)]
    worst = max(a - b for a, b in zip(vals, vals[1:]))
    return max(worst, 0.0), 1e-12


def _p_two_routes() -> tuple[float, float]:
    return abs(hastings_p(0.0) - hastings_p(0.0, method="finite_diff")), 1e-6


def _time_reversal() -> tuple[float, float]:
    fwd = TacnodeParams(1.0, 0.5)
    us = np.array([0.3, -0.7]) - fwd.sigma
    a = tacnode_context(fwd, us, 48)
    b = tacnode_context(fwd.reversed(), us, 48)
    k1, k2 = tacnode_eval(a, 0.3, -0.7), tacnode_eval(b, -0.7, 0.3)
    return abs(k1 - k2) / (1.0 + abs(k1)), 1e-10


def _two_routes() -> tuple[float, float]:
    p = TacnodeParams(1.0, 0.5)
    dom = IntervalUnion(((-2.0, 2.0),))
    d = tacnode_gap_direct(p, dom, 32, 48, refine=False).value
    b = tacnode_gap_block(p, dom, 32, 48, refine=False).value
    return abs(d - b) / abs(d), 1e-6


def _block_gauge() -> tuple[float, float]:
    p = TacnodeParams(1.0, 0.5)
    dom = IntervalUnion(((-2.0, 2.0),))
    l1 = block_system(p, dom, 24, 48).log_det()[1]
    l10 = block_system(p, dom, 24, 48, gauge=10.0).log_det()[1]
    return abs(l1 - l10), 1e-10


def _k1_gauge() -> tuple[float, float]:
    p = TacnodeParams(1.0, 0.5)
    rule = composite_rule(IntervalUnion(((-2.0, 2.0),)), 32)
    x, sw = rule.nodes, np.sqrt(rule.weights)
    logs = []
    for stripped in (False, True):
        k = k_tau_tau(p, x[:, None], x[None, :], gauge_stripped=stripped)
        logs.append(log_det_identity_minus(sw[:, None] * k * sw[None, :])[1])
    return abs(logs[0] - logs[1]), 1e-10


CHECKS: dict[str, Callable[[], tuple[float, float]]] = {
    "airy_ode_residual": _airy_ode,
    "gauss_legendre_exactness": _gauss_exactness,
    "airy_kernel_dual_forms": _kernel_dual,
    "f2_monotone": _f2_monotone,
    "p_two_routes": _p_two_routes,
    "tacnode_time_reversal": _time_reversal,
    "gap_two_routes": _two_routes,
    "block_gauge": _block_gauge,
    "k1_gauge_stripping": _k1_gauge,
}


def run_checks() -> list[CheckResult]:
    """Run every check; a check that raises counts as failed with value ``nan``."""
    out = []
    for name, fn in CHECKS.items():
        try:
            value, threshold = fn()
            ok = math.isfinite(value) and value <= threshold
        except Exception:  # a crashing invariant is a failed invariant
            value, threshold, ok = float("nan"), float("nan"), False
        out.append(CheckResult(name, ok, value, threshold))
    return out
