"""Airy function Ai, its derivative, the shifted variant and sign/log arithmetic.

Evaluation strategy for real ``x``:

* ``|x| <= X_SWITCH``: a table of (Ai, Ai') at nodes spaced ``0.25`` apart is
  built once from the Maclaurin pair series ``Ai = c1 f - c2 g`` in 60-digit
  decimal arithmetic; between nodes the values are continued by the Taylor
  series generated from the Airy equation ``y'' = x y``.
* ``x > X_SWITCH``: the exponentially small asymptotic expansion, carried in
  log form so that it never underflows.
* ``x < -X_SWITCH``: the oscillatory asymptotic expansion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import AccuracyError, DomainError, ParameterError

__all__ = [
    "CBRT2",
    "X_SWITCH",
    "ScaledReal",
    "airy",
    "airy_scaled",
    "shifted_airy",
]

CBRT2 = 2.0 ** (1.0 / 3.0)
X_SWITCH = 9.0

# Ai(0) and -Ai'(0) = 3^(-2/3)/Gamma(2/3), 3^(-1/3)/Gamma(1/3)
_AI0 = "0.35502805388781723926006318600418317639797917419918"
_MINUS_AIP0 = "0.25881940379280679840518356018920396347909113835493"

_NODE_STEP = 0.25
_N_NODES = int(2 * X_SWITCH / _NODE_STEP) + 1
_TAYLOR_TERMS = 24
_ASYM_TERMS = 30
_LOG_2SQRTPI = math.log(2.0 * math.sqrt(math.pi))
_LN10 = math.log(10.0)


@dataclass(frozen=True)
class ScaledReal:
    """A real number (or array of them) stored as ``sign * exp(log_mag)``.

    ``sign == 0`` encodes an exact zero; ``log_mag`` is then ``-inf``.
    Scalars are held as plain ``int``/``float``; arrays as numpy arrays.
    """

    sign: int | np.ndarray
    log_mag: float | np.ndarray

    @classmethod
    def _make(cls, sign, log_mag) -> "ScaledReal":
        sign = np.asarray(sign)
        log_mag = np.asarray(log_mag, dtype=float)
        sign, log_mag = np.broadcast_arrays(sign, log_mag)
        zero = (sign == 0) | np.isneginf(log_mag)
        sign = np.where(zero, 0, sign).astype(int)
        log_mag = np.where(zero, -np.inf, log_mag)
        if sign.ndim == 0:
            return cls(int(sign), float(log_mag))
        return cls(sign, log_mag)

    @classmethod
    def from_real(cls, value) -> "ScaledReal":
        v = np.asarray(value, dtype=float)
        with np.errstate(divide="ignore"):
            return cls._make(np.sign(v), np.log(np.abs(v)))

    def to_real(self):
        with np.errstate(under="ignore"):
            v = self.sign * np.exp(self.log_mag)
        return float(v) if np.ndim(v) == 0 else v

    def __neg__(self) -> "ScaledReal":
        return ScaledReal._make(-np.asarray(self.sign), self.log_mag)

    def __mul__(self, other: "ScaledReal") -> "ScaledReal":
        other = _coerce(other)
        sign = np.asarray(self.sign) * np.asarray(other.sign)
        with np.errstate(invalid="ignore"):
            log_mag = np.asarray(self.log_mag) + np.asarray(other.log_mag)
        return ScaledReal._make(sign, np.where(sign == 0, -np.inf, log_mag))

    def __truediv__(self, other: "ScaledReal") -> "ScaledReal":
        other = _coerce(other)
        if np.any(np.asarray(other.sign) == 0):
            raise ZeroDivisionError("division by an exact-zero ScaledReal")
        sign = np.asarray(self.sign) * np.asarray(other.sign)
        return ScaledReal._make(sign, np.asarray(self.log_mag) - np.asarray(other.log_mag))

    def add(self, other: "ScaledReal"):
        """Sum with cancellation diagnostics.

        Returns ``(result, digits_lost)`` where ``digits_lost`` is the number
        of decimal digits cancelled, ``log10(max(|a|,|b|) / |a + b|)``.
        """
        other = _coerce(other)
        sa, la, sb, lb = np.broadcast_arrays(
            np.asarray(self.sign), np.asarray(self.log_mag, dtype=float),
            np.asarray(other.sign), np.asarray(other.log_mag, dtype=float),
        )
        a_big = la >= lb
        hi = np.where(a_big, la, lb)
        lo = np.where(a_big, lb, la)
        s_hi = np.where(a_big, sa, sb)
        s_lo = np.where(a_big, sb, sa)
        with np.errstate(invalid="ignore", under="ignore"):
            r = np.where(np.isneginf(hi), 0.0, np.exp(lo - hi))
        same = s_hi * s_lo >= 0
        with np.errstate(divide="ignore"):
            term = np.where(same, np.log1p(r), np.log1p(-r))
        lost = np.where(same, 0.0, -term / _LN10)
        result = ScaledReal._make(s_hi, hi + term)
        lost = float(lost) if lost.ndim == 0 else lost
        return result, lost

    def __add__(self, other: "ScaledReal") -> "ScaledReal":
        return self.add(other)[0]

    def __sub__(self, other: "ScaledReal") -> "ScaledReal":
        return self.add(-_coerce(other))[0]


def _coerce(value) -> ScaledReal:
    if isinstance(value, ScaledReal):
        return value
    return ScaledReal.from_real(value)


# --- Maclaurin table -------------------------------------------------------


def _maclaurin_decimal(x: Decimal):
    """Return (f, f', g, g') of the Maclaurin pair at ``x`` (decimal context)."""
    x3 = x * x * x
    cutoff = Decimal(10) ** -58
    f = t = Decimal(1)
    g = tg = x
    fp = tfp = x * x / 2
    gp = tgp = Decimal(1)
    k = 0
    while True:
        k3 = 3 * k
        t = t * x3 / ((k3 + 2) * (k3 + 3))
        tg = tg * x3 / ((k3 + 3) * (k3 + 4))
        tfp = tfp * x3 / ((k3 + 3) * (k3 + 5))
        tgp = tgp * x3 / ((k3 + 1) * (k3 + 3))
        f += t
        g += tg
        fp += tfp
        gp += tgp
        k += 1
        if k > 4 and max(abs(t), abs(tg), abs(tfp), abs(tgp)) < cutoff:
            return f, fp, g, gp


@lru_cache(maxsize=1)
def _node_table() -> tuple[np.ndarray, np.ndarray]:
    ai = np.empty(_N_NODES)
    aip = np.empty(_N_NODES)
    with localcontext() as ctx:
        ctx.prec = 60
        c1 = Decimal(_AI0)
        c2 = Decimal(_MINUS_AIP0)
        step = Decimal(str(_NODE_STEP))
        for i in range(_N_NODES):
            x = -Decimal(str(X_SWITCH)) + step * i
            f, fp, g, gp = _maclaurin_decimal(x)
            ai[i] = float(c1 * f - c2 * g)
            aip[i] = float(c1 * fp - c2 * gp)
    ai.setflags(write=False)
    aip.setflags(write=False)
    _check_overlap(ai, aip)
    return ai, aip


def _check_overlap(ai: np.ndarray, aip: np.ndarray) -> None:
    # both methods must agree where they meet
    for x, i in ((X_SWITCH, -1), (-X_SWITCH, 0)):
        if x > 0:
            s_a, l_a, s_d, l_d = _positive_asymptotic_log(np.array([x]))
            a_asym, d_asym = math.exp(l_a[0]), -math.exp(l_d[0])
        else:
            a_asym, d_asym = (float(v[0]) for v in _negative_asymptotic(np.array([x])))
        if abs(a_asym - ai[i]) > 1e-12 * abs(ai[i]) or abs(d_asym - aip[i]) > 1e-12 * abs(aip[i]):
            raise AccuracyError(f"Airy series/asymptotic mismatch at x={x}")


def _taylor(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    node_ai, node_aip = _node_table()
    idx = np.rint((x + X_SWITCH) / _NODE_STEP).astype(int)
    np.clip(idx, 0, _N_NODES - 1, out=idx)
    x0 = -X_SWITCH + _NODE_STEP * idx
    h = x - x0
    a_nm1 = node_ai[idx]
    a_n = node_aip[idx]
    a_np1 = 0.5 * x0 * a_nm1
    ai = a_nm1 + a_n * h + a_np1 * h * h
    aip = a_n + 2.0 * a_np1 * h
    hp = h * h
    # y'' = x y  =>  a_{n+2} = (x0 a_n + a_{n-1}) / ((n+1)(n+2))
    for n in range(1, _TAYLOR_TERMS):
        a_np2 = (x0 * a_n + a_nm1) / ((n + 1) * (n + 2))
        aip = aip + (n + 2) * a_np2 * hp
        hp = hp * h
        ai = ai + a_np2 * hp
        a_nm1, a_n, a_np1 = a_n, a_np1, a_np2
    return ai, aip


# --- asymptotic expansions --------------------------------------------------


@lru_cache(maxsize=1)
def _asym_coefficients() -> tuple[np.ndarray, np.ndarray]:
    u = [Fraction(1)]
    for k in range(1, _ASYM_TERMS + 1):
        u.append(u[-1] * Fraction((6 * k - 5) * (6 * k - 3) * (6 * k - 1), (2 * k - 1) * 216 * k))
    v = [Fraction(1)] + [-Fraction(6 * k + 1, 6 * k - 1) * u[k] for k in range(1, _ASYM_TERMS + 1)]
    return np.array([float(c) for c in u]), np.array([float(c) for c in v])


def _positive_asymptotic_log(x: np.ndarray):
    u, v = _asym_coefficients()
    zeta = (2.0 / 3.0) * x * np.sqrt(x)
    inv = -1.0 / zeta
    su = np.ones_like(x)
    sv = np.ones_like(x)
    p = np.ones_like(x)
    for k in range(1, _ASYM_TERMS + 1):
        p = p * inv
        su = su + u[k] * p
        sv = sv + v[k] * p
    quarter = 0.25 * np.log(x)
    log_ai = -zeta - _LOG_2SQRTPI - quarter + np.log(su)
    log_aip = -zeta - _LOG_2SQRTPI + quarter + np.log(sv)
    ones = np.ones_like(x, dtype=int)
    return ones, log_ai, -ones, log_aip


def _negative_asymptotic(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u, v = _asym_coefficients()
    z = -x
    zeta = (2.0 / 3.0) * z * np.sqrt(z)
    inv = 1.0 / zeta
    pu = np.zeros_like(z)
    qu = np.zeros_like(z)
    pv = np.zeros_like(z)
    qv = np.zeros_like(z)
    p = np.ones_like(z)
    for k in range(_ASYM_TERMS + 1):
        sgn = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            pu = pu + sgn * u[k] * p
            pv = pv + sgn * v[k] * p
        else:
            qu = qu + sgn * u[k] * p
            qv = qv + sgn * v[k] * p
        p = p * inv
    phase = zeta - 0.25 * math.pi
    c, s = np.cos(phase), np.sin(phase)
    root = np.sqrt(np.sqrt(z))
    ai = (c * pu + s * qu) / (math.sqrt(math.pi) * root)
    aip = root * (s * pv - c * qv) / math.sqrt(math.pi)
    return ai, aip


def _validate(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Airy function argument must be finite")
    return arr


def _airy_parts(arr: np.ndarray):
    """(sign_ai, log_ai, sign_aip, log_aip, ai, aip) on a flat array.

    ``ai``/``aip`` are exact float values on the table and negative branches;
    on the positive branch they are rebuilt from the logs.
    """
    s_ai = np.empty(arr.shape, dtype=int)
    s_aip = np.empty(arr.shape, dtype=int)
    l_ai = np.empty(arr.shape)
    l_aip = np.empty(arr.shape)
    ai = np.empty(arr.shape)
    aip = np.empty(arr.shape)

    pos = arr > X_SWITCH
    neg = arr < -X_SWITCH
    mid = ~(pos | neg)
    if mid.any():
        ai[mid], aip[mid] = _taylor(arr[mid])
    if neg.any():
        ai[neg], aip[neg] = _negative_asymptotic(arr[neg])
    direct = ~pos
    if direct.any():
        sa = ScaledReal.from_real(ai[direct])
        sd = ScaledReal.from_real(aip[direct])
        s_ai[direct], l_ai[direct] = sa.sign, sa.log_mag
        s_aip[direct], l_aip[direct] = sd.sign, sd.log_mag
    if pos.any():
        s_ai[pos], l_ai[pos], s_aip[pos], l_aip[pos] = _positive_asymptotic_log(arr[pos])
        with np.errstate(under="ignore"):
            ai[pos] = np.exp(l_ai[pos])
            aip[pos] = -np.exp(l_aip[pos])
    return s_ai, l_ai, s_aip, l_aip, ai, aip


def _unwrap(v, scalar: bool):
    return float(v[0]) if scalar else v


def airy(x):
    """Ai(x) and Ai'(x) for real ``x`` (scalar or array).

    Relative accuracy is ~1e-13 on [-15, 30]. Where Ai underflows (x > ~104)
    the result is 0.0; use :func:`airy_scaled` to keep the magnitude.
    """
    arr = _validate(x)
    if np.any(np.abs(arr) > 1000.0):
        raise ParameterError("airy: |x| must not exceed 1000")
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).ravel()
    *_, ai, aip = _airy_parts(flat)
    shape = np.shape(arr)
    return _unwrap(ai, scalar) if scalar else ai.reshape(shape), (
        _unwrap(aip, scalar) if scalar else aip.reshape(shape)
    )


def airy_scaled(x) -> tuple[ScaledReal, ScaledReal]:
    """Ai(x), Ai'(x) as :class:`ScaledReal`, meaningful far past float underflow."""
    arr = _validate(x)
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr).ravel()
    s_ai, l_ai, s_aip, l_aip, _, _ = _airy_parts(flat)
    shape = np.shape(arr)
    if scalar:
        return ScaledReal._make(s_ai[0], l_ai[0]), ScaledReal._make(s_aip[0], l_aip[0])
    return (
        ScaledReal._make(s_ai.reshape(shape), l_ai.reshape(shape)),
        ScaledReal._make(s_aip.reshape(shape), l_aip.reshape(shape)),
    )


def shifted_airy(tau, x) -> ScaledReal:
    """``exp(tau x + 2 tau^3 / 3) Ai(x + tau^2)``.

    This is the form obtained from the contour integral
    ``int dl/(2 i pi) exp(l^3/3 + tau l^2 - x l)`` by shifting ``l -> l - tau``.
    """
    tau_arr = _validate(tau)
    x_arr = _validate(x)
    if np.any(np.abs(tau_arr) > 8.0):
        raise ParameterError("shifted_airy: |tau| must not exceed 8")
    ai, _ = airy_scaled(x_arr + tau_arr * tau_arr)
    log_mag = np.asarray(ai.log_mag) + tau_arr * x_arr + (2.0 / 3.0) * tau_arr**3
    return ScaledReal._make(ai.sign, log_mag)
