"""Adaptive explicit Runge-Kutta integration, Dormand-Prince 5(4) pair.

Embedded 4th-order error estimate drives step control; the free 4th-order
interpolant of the pair provides dense output on accepted steps.  A guard
predicate can veto states (stage values included): a vetoed step is halved
rather than error-controlled, and step underflow raises IntegrationBlowUp
carrying the last valid state.

Characteristics
---------------
order            : 5 (local error estimated by a 4th-order companion)
stages           : 7, first-same-as-last
dense output     : quartic polynomial per step, O(h^5) accurate
step control     : err^(-1/5) with safety 0.9, growth clamped to [0.2, 5]

References
----------
Dormand, Prince, "A family of embedded Runge-Kutta formulae" (1980).
Hairer, Norsett, Wanner, "Solving Ordinary Differential Equations I".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["IntegrationBlowUp", "DenseSolution", "IvpResult", "solve_ivp_dp"]


class IntegrationBlowUp(RuntimeError):
    """Step size underflowed; .t and .y hold the last accepted state."""

    def __init__(self, message: str, t: float, y: np.ndarray):
        super().__init__(message)
        self.t = t
        self.y = y


_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])

_A = (
    np.array([], dtype=float),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)

# 5th-order weights equal row 7 of A (FSAL); error weights = b5 - b4
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])

# dense-output weights for the quartic interpolant
_D = np.array([-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423])

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


@dataclass
class DenseSolution:
    """Piecewise-quartic interpolant over the accepted steps."""

    t0: float
    t1: float
    lefts: np.ndarray          # (nsteps,) left edge of each step
    widths: np.ndarray         # (nsteps,)
    coef: np.ndarray           # (nsteps, 5, dim)

    def __call__(self, t):
        scalar = np.ndim(t) == 0
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = min(self.t0, self.t1), max(self.t0, self.t1)
        if np.any(tq < lo - 1e-12 * (hi - lo + 1.0)) or \
                np.any(tq > hi + 1e-12 * (hi - lo + 1.0)):
            raise ValueError("dense evaluation outside the integrated span")
        idx = np.searchsorted(self.lefts, tq, side="right") - 1
        idx = np.clip(idx, 0, len(self.lefts) - 1)
        theta = (tq - self.lefts[idx]) / self.widths[idx]
        theta = np.clip(theta, 0.0, 1.0)[:, None]
        c = self.coef[idx]
        one = 1.0 - theta
        out = c[:, 0] + theta * (c[:, 1] + one * (c[:, 2] + theta * (c[:, 3] + one * c[:, 4])))
        return out[0] if scalar else out


@dataclass
class IvpResult:
    t: float
    y: np.ndarray
    dense: DenseSolution | None
    nsteps: int
    nfev: int
    rejected: int
    guard_rejections: int


def _initial_step(span: float, max_step: float) -> float:
    return min(span / 100.0, max_step, span)


def solve_ivp_dp(f, t0: float, y0, t1: float, rtol: float = 1e-10,
                 atol: float = 1e-12, guard=None, dense: bool = False,
                 max_step: float = np.inf) -> IvpResult:
    """Integrate y' = f(t, y) from t0 to t1 (t1 > t0).

    guard(y) -> bool returns True when the state is inadmissible.  f is only
    ever called on states that passed the guard, so it may safely evaluate
    inverse powers of components the guard keeps positive.
    """
    y = np.asarray(y0, dtype=float).copy()
    if t1 == t0:
        empty = DenseSolution(t0, t1, np.array([t0]), np.array([1.0]),
                              np.zeros((1, 5, y.size))) if dense else None
        if dense:
            empty.coef[0, 0] = y
            return IvpResult(t0, y, empty, 0, 0, 0, 0)
        return IvpResult(t0, y, None, 0, 0, 0, 0)
    if t1 < t0:
        raise ValueError("backward integration is not supported")
    if guard is not None and guard(y):
        raise IntegrationBlowUp("initial state violates the guard", t0, y)

    span = t1 - t0
    hmin = 1e-14 * span
    h = _initial_step(span, max_step)
    t = t0
    k = np.empty((7, y.size), dtype=float)
    k[0] = f(t, y)
    nfev = 1
    nsteps = rejected = guard_rejections = 0
    lefts, widths, coefs = [], [], []

    while t < t1:
        h = min(h, t1 - t)
        if h < hmin:
            raise IntegrationBlowUp(
                f"step size underflow near t = {t:.12g}", t, y)

        guard_hit = False
        for i in range(1, 7):
            yi = y + h * (_A[i] @ k[:i])
            if guard is not None and guard(yi):
                guard_hit = True
                break
            k[i] = f(t + _C[i] * h, yi)
            nfev += 1
        if guard_hit:
            h *= 0.5
            guard_rejections += 1
            continue
        y_new = yi  # stage 7 state is the 5th-order solution (FSAL)

        err_vec = h * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0:
            if dense:
                dy = y_new - y
                r3 = h * k[0] - dy
                r4 = dy - h * k[6] - r3
                r5 = h * (_D @ k)
                coefs.append(np.stack([y, dy, r3, r4, r5]))
                lefts.append(t)
                widths.append(h)
            t += h
            y = y_new
            k[0] = k[6]
            nsteps += 1
            factor = _MAX_FACTOR if err == 0.0 else min(
                _MAX_FACTOR, _SAFETY * err ** -0.2)
            h = min(h * max(factor, _MIN_FACTOR), max_step)
        else:
            rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)

    sol = None
    if dense:
        sol = DenseSolution(t0, t1, np.asarray(lefts), np.asarray(widths),
                            np.asarray(coefs))
    return IvpResult(t, y, sol, nsteps, nfev, rejected, guard_rejections)
