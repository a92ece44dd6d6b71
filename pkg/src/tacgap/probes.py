"""Tracy-Widom F2, tacnode gap probabilities, p(s), sweeps and rate fits."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConditioningError, InsufficientDataError, ParameterError
from .fredholm import (
    DEFAULT_TAIL_TOL,
    DetResult,
    SemiInfinite,
    endpoint_log_derivative,
    fredholm_det,
    log_det_identity_minus,
)
from .kernels import (
    AIRY_KERNEL,
    TacnodeParams,
    block_system,
    tacnode_context,
    tacnode_matrix,
)
from .quad import IntervalUnion, composite_rule

__all__ = [
    "WINDOW_K",
    "FD_STEP",
    "f2",
    "tacnode_gap_direct",
    "tacnode_gap_block",
    "hastings_p",
    "WindowCheck",
    "WindowReport",
    "validity_window",
    "SweepConfig",
    "SweepRow",
    "SweepTable",
    "sweep",
    "rate_fit",
]

log = logging.getLogger(__name__)

WINDOW_K = 0.9
FD_STEP = 1e-3
_MIN_F2_AUX = 1e-12


def _as_result(sign: int, log_value: float, err: float, n_used: int) -> DetResult:
    return DetResult(sign * math.exp(log_value), log_value, err, n_used, sign)


def f2(s: float, n: int = 48, refine: bool = True) -> DetResult:
    """Tracy-Widom ``F2(s) = det(Id - K_Ai)`` on ``[s, inf)``."""
    if not s >= -12.0:
        raise ParameterError("f2: s must be >= -12")
    if n < 16:
        raise ParameterError("f2: n must be at least 16")
    return fredholm_det(AIRY_KERNEL, SemiInfinite(float(s)), n, refine=refine)


# --- tacnode gap: two routes -------------------------------------------------


def _direct_once(params: TacnodeParams, domain: IntervalUnion, n_dom: int, n_aux: int):
    rule = composite_rule(domain, n_dom)
    ctx = tacnode_context(params, rule.nodes - params.sigma, n_aux)
    sw = np.sqrt(rule.weights)
    a = sw[:, None] * tacnode_matrix(ctx, rule.nodes, rule.nodes) * sw[None, :]
    sign, logv = log_det_identity_minus(a)
    return sign, logv, len(rule)


def tacnode_gap_direct(
    params: TacnodeParams, domain: IntervalUnion, n_dom: int = 48, n_aux: int = 64, refine: bool = True
) -> DetResult:
    """``det(Id - K^tac)`` on ``domain`` with the resolvent form of the kernel.

    ``err_estimate`` is the change under doubling both ``n_dom`` and ``n_aux``.
    """
    if domain.is_empty:
        return DetResult(1.0, 0.0, 0.0, 0, 1)
    sign, logv, used = _direct_once(params, domain, n_dom, n_aux)
    err = 0.0
    if refine:
        sign2, log2, _ = _direct_once(params, domain, 2 * n_dom, 2 * n_aux)
        err = abs(sign * math.exp(logv) - sign2 * math.exp(log2))
    return _as_result(sign, logv, err, used)


def _block_once(params, domain, n_dom, n_aux, gauge):
    bs = block_system(params, domain, n_dom, n_aux, gauge=gauge, balance=True)
    s_tl, log_tl = bs.log_det_top_left()
    if s_tl <= 0 or log_tl < math.log(_MIN_F2_AUX):
        raise ConditioningError(
            f"F2(sigma_tilde) below {_MIN_F2_AUX:g} at sigma={params.sigma}; block route ill-conditioned"
        )
    s_full, log_full = bs.log_det()
    return s_full, log_full - log_tl, len(bs.domain_rule)


def tacnode_gap_block(
    params: TacnodeParams,
    domain: IntervalUnion,
    n_dom: int = 48,
    n_aux: int = 64,
    gauge: float = 1.0,
    refine: bool = True,
) -> DetResult:
    """Tacnode gap as ``det(Id - block operator) / F2(sigma_tilde)``.

    Both determinants share one aux rule, so truncation errors cancel.
    """
    sign, logv, used = _block_once(params, domain, n_dom, n_aux, gauge)
    err = 0.0
    if refine:
        sign2, log2, _ = _block_once(params, domain, 2 * n_dom, 2 * n_aux, gauge)
        err = abs(sign * math.exp(logv) - sign2 * math.exp(log2))
    return _as_result(sign, logv, err, used)


# --- p(s) ----------------------------------------------------------------------


def hastings_p(s: float, n: int = 48, method: str = "resolvent") -> float:
    """``p(s) = d/ds ln F2(s)``.

    ``method="resolvent"`` reads the resolvent kernel at ``(s, s)``;
    ``method="finite_diff"`` uses a 5-point central difference of ``ln F2``.
    """
    if not s >= -10.0:
        raise ParameterError("hastings_p: s must be >= -10")
    if method == "resolvent":
        return endpoint_log_derivative(AIRY_KERNEL, s, n, DEFAULT_TAIL_TOL)
    if method == "finite_diff":
        h = FD_STEP
        lf = [f2(s + k * h, n, refine=False).log_value for k in (-2, -1, 1, 2)]
        return (lf[0] - 8.0 * lf[1] + 8.0 * lf[2] - lf[3]) / (12.0 * h)
    raise ParameterError(f"hastings_p: unknown method {method!r}")


# --- validity window ---------------------------------------------------------


@dataclass(frozen=True)
class WindowCheck:
    name: str
    ok: bool
    margin: float


@dataclass(frozen=True)
class WindowReport:
    mode: str
    checks: tuple[WindowCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def _between(name: str, value: float, upper: float) -> WindowCheck:
    margin = min(value, upper - value)
    return WindowCheck(name, margin > 0.0, margin)


def validity_window(
    params: TacnodeParams, s: float, t: float, mode: str, k: float = WINDOW_K
) -> WindowReport:
    """Check the endpoint offsets against the asymptotic regime of the chosen limit.

    ``mode="sigma"``: ``s, t < k (sigma + tau^2)``.
    ``mode="tau"``: ``t = 4 tau^2 - d_t`` with ``0 < d_t < (7/3) k tau^2`` and
    ``s = tau^2 + 2 sigma - d_s`` with ``0 < d_s < k (2 sigma + (2/3) tau^2)``.
    """
    sig, tau = params.sigma, params.tau
    if mode == "sigma":
        bound = k * (sig + tau * tau)
        checks = (
            WindowCheck("s_upper", s < bound, bound - s),
            WindowCheck("t_upper", t < bound, bound - t),
        )
    elif mode == "tau":
        d_t = 4.0 * tau * tau - t
        d_s = tau * tau + 2.0 * sig - s
        checks = (
            _between("t_delta", d_t, (7.0 / 3.0) * k * tau * tau),
            _between("s_delta", d_s, k * (2.0 * sig + (2.0 / 3.0) * tau * tau)),
        )
    else:
        raise ParameterError(f"validity_window: unknown mode {mode!r}")
    return WindowReport(mode, checks)


# --- sweeps ------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """One parameter sweep.

    ``mode="sigma"`` sweeps sigma at fixed ``tau``; ``mode="tau"`` sweeps tau at
    fixed ``sigma``.  Both use the interval ``[t - sigma - tau^2, sigma + tau^2 - s]``.
    ``mode="edge"`` fixes exactly one of ``sigma``/``tau``, sweeps the other and
    uses the intervals ``offsets`` shifted by ``-sigma - tau^2``.
    """

    mode: str
    grid: tuple[float, ...]
    sigma: Optional[float] = None
    tau: Optional[float] = None
    s: float = 0.5
    t: float = -0.3
    offsets: Optional[IntervalUnion] = None
    n_dom: int = 48
    n_aux: int = 64

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid:
            raise ParameterError("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ParameterError("sweep grid must be strictly increasing")
        if self.mode == "sigma":
            if self.tau is None:
                raise ParameterError("sigma sweep needs a fixed tau")
        elif self.mode == "tau":
            if self.sigma is None:
                raise ParameterError("tau sweep needs a fixed sigma")
        elif self.mode == "edge":
            if (self.sigma is None) == (self.tau is None):
                raise ParameterError("edge sweep fixes exactly one of sigma, tau")
            if self.offsets is None or self.offsets.is_empty:
                raise ParameterError("edge sweep needs offsets")
        else:
            raise ParameterError(f"unknown sweep mode {self.mode!r}")
        if self.n_dom < 8 or self.n_aux < 24:
            raise ParameterError("sweep needs n_dom >= 8 and n_aux >= 24")

    @property
    def swept(self) -> str:
        if self.mode == "edge":
            return "sigma" if self.sigma is None else "tau"
        return self.mode

    def params_at(self, value: float) -> TacnodeParams:
        if self.swept == "sigma":
            return TacnodeParams(value, self.tau)
        return TacnodeParams(self.sigma, value)


@dataclass(frozen=True)
class SweepRow:
    param: float
    gap: float
    reference: tuple[float, ...]  # (f2_s, f2_t) or (airy_det,)
    ratio: float
    deviation: float
    err_estimate: float
    window_ok: bool


@dataclass(frozen=True)
class SweepTable:
    config: SweepConfig
    rows: tuple[SweepRow, ...]

    @property
    def columns(self) -> tuple[str, ...]:
        ref = ("airy_det",) if self.config.mode == "edge" else ("f2_s", "f2_t")
        return ("param", "gap") + ref + ("ratio", "deviation", "err_estimate", "window_ok")

    def records(self) -> list[tuple]:
        return [
            (r.param, r.gap, *r.reference, r.ratio, r.deviation, r.err_estimate, r.window_ok)
            for r in self.rows
        ]

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([rec[i] for rec in self.records()], dtype=float)


def _references(cfg: SweepConfig):
    """Parameter-independent reference determinants, computed once per sweep."""
    if cfg.mode == "edge":
        return (fredholm_det(AIRY_KERNEL, cfg.offsets, cfg.n_dom),)
    return (f2(cfg.s, cfg.n_dom), f2(cfg.t, cfg.n_dom))


def _row(cfg: SweepConfig, refs, value: float) -> SweepRow:
    p = cfg.params_at(value)
    shift = p.sigma + p.tau * p.tau
    if cfg.mode == "edge":
        domain = cfg.offsets.shifted(-shift)
        window_ok = all(
            validity_window(p, hi, lo, "sigma").ok for lo, hi in cfg.offsets.pieces
        )
    else:
        domain = IntervalUnion(((cfg.t - shift, shift - cfg.s),))
        window_ok = validity_window(p, cfg.s, cfg.t, cfg.mode).ok
    gap = tacnode_gap_direct(p, domain, cfg.n_dom, cfg.n_aux)
    denom = 1.0
    rel_ref_err = 0.0
    for r in refs:
        denom *= r.value
        rel_ref_err += r.err_estimate / abs(r.value)
    ratio = gap.value / denom
    err = gap.err_estimate / abs(denom) + abs(ratio) * rel_ref_err
    if not window_ok:
        log.warning("%s=%g lies outside the validity window", cfg.swept, value)
    return SweepRow(value, gap.value, tuple(r.value for r in refs), ratio, abs(1.0 - ratio), err, window_ok)


def sweep(cfg: SweepConfig, workers: int = 1) -> SweepTable:
    """Gap versus its limiting product along ``cfg.grid``; rows stay in grid order."""
    refs = _references(cfg)
    if workers <= 1:
        rows = [_row(cfg, refs, v) for v in cfg.grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _row(cfg, refs, v), cfg.grid))
    return SweepTable(cfg, tuple(rows))


def rate_fit(table: SweepTable | Sequence[SweepRow]) -> tuple[float, float]:
    """Least-squares ``(slope, intercept)`` of ``log deviation`` against ``log param``.

    Only rows with ``deviation > 10 err_estimate`` and ``param > 0`` are used.
    """
    rows = table.rows if isinstance(table, SweepTable) else tuple(table)
    usable = [r for r in rows if r.param > 0 and r.deviation > 10.0 * r.err_estimate]
    if len(usable) < 3:
        raise InsufficientDataError(
            f"rate_fit needs 3 rows above the noise floor, got {len(usable)}"
        )
    x = np.log([r.param for r in usable])
    y = np.log([r.deviation for r in usable])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)
