"""ARIMA(p,d,q) estimation by conditional sum of squares, order selection and forecasting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .series import NO_TRANSFORM, TransformSpec, adf_test, diff_values

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

MAX_P = 5
MAX_D = 2
MAX_Q = 5

_ROOT_MARGIN = 1e-3
# selection refuses candidates whose fitted roots crowd the unit circle;
# such optima are boundary artifacts, not identifiable dynamics
_SELECTION_MIN_ROOT = 1.01


class ConvergenceError(RuntimeError):
    """Raised when the simplex optimizer fails to settle within the restart budget."""


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        for name, value, cap in (("p", self.p, MAX_P), ("d", self.d, MAX_D), ("q", self.q, MAX_Q)):
            if not 0 <= value <= cap:
                raise ValueError(f"order {name}={value} outside 0..{cap}")

    def __iter__(self):
        return iter((self.p, self.d, self.q))


@dataclass
class ArimaFit:
    """Fitted ARIMA model.

    Coefficients follow the sign convention
        w_t = intercept + phi_1 w_{t-1} + ... + eps_t - theta_1 eps_{t-1} - ...
    on the transformed, d-differenced scale; `residuals` and `fitted` live on
    that same scale and reconstruct it exactly (fitted + residuals == w).
    """

    order: ArimaOrder
    phi: np.ndarray
    theta: np.ndarray
    intercept: float
    sigma2: float
    residuals: np.ndarray
    aic: float
    bic: float
    loglik: float
    transform: TransformSpec
    converged: bool
    n_obs: int
    k_params: int
    transformed: np.ndarray = field(repr=False)
    min_root_modulus: float = float("inf")

    @property
    def fitted(self) -> np.ndarray:
        return self._diffed() - self.residuals

    def _diffed(self) -> np.ndarray:
        return diff_values(self.transformed, self.order.d)

    def fitted_transformed(self) -> np.ndarray:
        """One-step in-sample predictions on the transformed (undifferenced) scale.

        The first d points have no prediction and are carried over from the
        data, so actual - fitted is exactly zero there.
        """
        d = self.order.d
        z = self.transformed
        out = z.copy()
        if d == 0:
            out[:] = self.fitted
            return out
        pred_w = self.fitted
        coeffs = [math.comb(d, j) * (-1) ** (j + 1) for j in range(1, d + 1)]
        for t in range(d, len(z)):
            out[t] = pred_w[t - d] + sum(c * z[t - j] for j, c in enumerate(coeffs, start=1))
        return out

    def fitted_level(self) -> np.ndarray:
        """In-sample predictions back on the original level scale."""
        return self.transform.inverse(self.fitted_transformed())

    def to_dict(self) -> dict:
        return {
            "order": {"p": self.order.p, "d": self.order.d, "q": self.order.q},
            "ar_coefficients": [float(v) for v in self.phi],
            "ma_coefficients": [float(v) for v in self.theta],
            "intercept": float(self.intercept),
            "sigma2": float(self.sigma2),
            "aic": float(self.aic),
            "bic": float(self.bic),
            "loglik": float(self.loglik),
            "transform": self.transform.kind,
            "converged": self.converged,
            "n_obs": self.n_obs,
        }


def _values_of(s) -> np.ndarray:
    return np.asarray(getattr(s, "values", s), dtype=float)


def _min_root_modulus(coeffs: np.ndarray) -> float:
    """Smallest root modulus of 1 - c_1 z - ... - c_k z^k (inf when k == 0)."""
    coeffs = np.asarray(coeffs, dtype=float)
    trimmed = np.trim_zeros(coeffs, "b")
    if len(trimmed) == 0:
        return float("inf")
    poly = np.concatenate([[1.0], -trimmed])[::-1]
    roots = np.roots(poly)
    if len(roots) == 0:
        return float("inf")
    return float(np.abs(roots).min())


def _stability_violation(coeffs, limit: float = 1.0 - _ROOT_MARGIN) -> float:
    """Schur-Cohn step-down check for 1 - c_1 z - ... - c_k z^k.

    Zero iff every reflection coefficient stays below `limit` in magnitude,
    which keeps all polynomial roots strictly outside the unit circle;
    otherwise a positive penalty that grows with the excess.
    """
    a = [float(c) for c in coeffs]
    while a and a[-1] == 0.0:
        a.pop()
    for i in range(len(a), 0, -1):
        k = a[i - 1]
        if not math.isfinite(k):
            return 1e6
        if abs(k) >= limit:
            return abs(k) - limit + 1e-9
        denom = 1.0 - k * k
        a = [(a[j] + k * a[i - 2 - j]) / denom for j in range(i - 1)]
    return 0.0


def _css_residuals_numpy(
    w: np.ndarray, phi: np.ndarray, theta: np.ndarray, intercept: float
) -> np.ndarray:
    """Conditional residual recursion with zero pre-sample values."""
    u = w - intercept
    for i in range(1, len(phi) + 1):
        u[i:] -= phi[i - 1] * w[:-i]
    if len(theta):
        u = lfilter([1.0], np.concatenate([[1.0], -theta]), u)
    return u


if HAVE_NUMBA:

    @njit(cache=True)
    def _css_residuals_jit(w, phi, theta, intercept):  # pragma: no cover - thin jit kernel
        n = w.shape[0]
        p = phi.shape[0]
        q = theta.shape[0]
        eps = np.empty(n)
        for t in range(n):
            pred = intercept
            for i in range(p):
                if t - 1 - i >= 0:
                    pred += phi[i] * w[t - 1 - i]
            for j in range(q):
                if t - 1 - j >= 0:
                    pred -= theta[j] * eps[t - 1 - j]
            eps[t] = w[t] - pred
        return eps

    def _css_residuals(w, phi, theta, intercept):
        return _css_residuals_jit(
            np.ascontiguousarray(w),
            np.ascontiguousarray(phi, dtype=np.float64),
            np.ascontiguousarray(theta, dtype=np.float64),
            float(intercept),
        )

else:
    _css_residuals = _css_residuals_numpy


def _objective(
    params: np.ndarray, w: np.ndarray, p: int, q: int, use_intercept: bool, n_cond: int
) -> float:
    idx = 0
    intercept = 0.0
    if use_intercept:
        intercept = params[0]
        idx = 1
    phi = params[idx : idx + p]
    theta = params[idx + p : idx + p + q]
    violation = _stability_violation(phi) + _stability_violation(theta)
    eps = _css_residuals(w, phi, theta, intercept)
    sse = float(np.dot(eps[n_cond:], eps[n_cond:]))
    if violation > 0.0:
        sse = sse * (1.0 + 100.0 * violation) + violation
    return math.log(max(sse, 1e-300))


def _estimate(w: np.ndarray, p: int, q: int, use_intercept: bool, n_cond: int):
    nparams = int(use_intercept) + p + q
    if nparams == 0:
        return np.empty(0), np.empty(0), 0.0, True

    if np.ptp(w) == 0.0 and (use_intercept or w[0] == 0.0):
        intercept = float(w[0]) if use_intercept else 0.0
        return np.zeros(p), np.zeros(q), intercept, True

    def run(x0, maxiter):
        return minimize(
            _objective,
            x0,
            args=(w, p, q, use_intercept, n_cond),
            method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": 1e-4, "fatol": 1e-8},
        )

    budget = 150 + 100 * nparams
    results = [run(np.zeros(nparams), budget)]
    best = results[0]
    for delta in (0.1, -0.1):
        res = run(best.x + delta, budget)
        results.append(res)
        if res.fun < best.fun:
            best = res
    converged = any(r.success for r in results)
    if not converged:
        retry = run(best.x, budget * 4)
        if retry.fun <= best.fun:
            best = retry
        converged = retry.success
        if not converged:
            raise ConvergenceError(
                f"simplex failed to converge for p={p}, q={q} after restart budget"
            )
    idx = 0
    intercept = 0.0
    if use_intercept:
        intercept = float(best.x[0])
        idx = 1
    phi = np.asarray(best.x[idx : idx + p], dtype=float)
    theta = np.asarray(best.x[idx + p : idx + p + q], dtype=float)
    return phi, theta, intercept, converged


def fit_arima(
    s,
    order: ArimaOrder,
    transform: TransformSpec = NO_TRANSFORM,
    *,
    n_condition: int | None = None,
) -> ArimaFit:
    """Estimate an ARIMA(p,d,q) on the transformed, differenced series.

    The conditional likelihood skips the first `n_condition` residuals
    (default p). Order selection passes a common value so that criteria stay
    comparable across grid cells.
    """
    values = _values_of(s)
    p, d, q = order
    n_cond = p if n_condition is None else max(n_condition, p)
    if len(values) - d <= max(p + q, n_cond) + 2:
        raise ValueError(
            f"series of length {len(values)} too short for ARIMA({p},{d},{q}) estimation"
        )
    z = transform.forward(values)
    w = diff_values(z, d)
    use_intercept = d == 0
    phi, theta, intercept, converged = _estimate(w, p, q, use_intercept, n_cond)
    eps = _css_residuals(w, phi, theta, intercept)
    m = len(w)
    n_eff = m - n_cond
    sse = float(np.dot(eps[n_cond:], eps[n_cond:]))
    sigma2 = max(sse / n_eff, 1e-300)
    loglik = -0.5 * n_eff * (math.log(2.0 * math.pi * sigma2) + 1.0)
    k = p + q + 1 + (1 if use_intercept else 0)
    aic = -2.0 * loglik + 2.0 * k
    bic = -2.0 * loglik + k * math.log(n_eff)
    min_root = min(_min_root_modulus(phi), _min_root_modulus(theta))
    return ArimaFit(
        order=order,
        phi=phi,
        theta=theta,
        intercept=intercept,
        sigma2=sigma2,
        residuals=eps,
        aic=aic,
        bic=bic,
        loglik=loglik,
        transform=transform,
        converged=converged,
        n_obs=len(values),
        k_params=k,
        transformed=z,
        min_root_modulus=min_root,
    )


def select_order(
    s,
    transform: TransformSpec = NO_TRANSFORM,
    *,
    max_p: int = MAX_P,
    max_q: int = MAX_Q,
    force_d: int | None = None,
    reject_near_unit_roots: bool = True,
) -> ArimaOrder:
    """Pick d by unit-root testing and (p,q) by an exhaustive AIC grid.

    Ties on AIC break toward fewer coefficients (smaller p+q), then the
    smaller BIC, then smaller p; the ordering is total so the selection is
    independent of grid evaluation order.

    Candidates whose fitted roots crowd the unit circle are discarded by
    default; callers fitting near-periodic components (where boundary AR is
    the honest model) can disable the gate.
    """
    values = _values_of(s)
    if len(values) < 20:
        raise ValueError(f"order selection needs at least 20 observations, got {len(values)}")
    z = transform.forward(values)
    d = force_d if force_d is not None else _select_d(z)

    candidates = []
    failures = []
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            try:
                fit = fit_arima(values, ArimaOrder(p, d, q), transform, n_condition=max_p)
            except (ValueError, ConvergenceError) as exc:
                failures.append((p, q, exc))
                continue
            if reject_near_unit_roots and fit.min_root_modulus < _SELECTION_MIN_ROOT:
                continue
            candidates.append((fit.aic, p + q, fit.bic, p, q))
    if not candidates:
        raise ConvergenceError(f"every (p,q) grid cell failed; first failure: {failures[0][2]}")
    _, _, _, p, q = min(candidates)
    return ArimaOrder(p, d, q)


def _select_d(z: np.ndarray) -> int:
    for d in range(MAX_D + 1):
        w = diff_values(z, d)
        try:
            result = adf_test(w)
        except ValueError:
            # too short to keep testing; stop differencing here
            return d
        if result.reject_unit_root:
            return d
    return MAX_D


def _forecast_diffed(fit: ArimaFit, h: int) -> np.ndarray:
    """h-step recursion on the differenced scale with future shocks set to zero."""
    p, _, q = fit.order
    w = fit._diffed()
    eps = fit.residuals
    hist_w = list(w[-p:]) if p else []
    hist_e = list(eps[-q:]) if q else []
    out = np.empty(h)
    for step in range(h):
        pred = fit.intercept
        for i in range(1, p + 1):
            pred += fit.phi[i - 1] * hist_w[-i]
        for j in range(1, q + 1):
            pred -= fit.theta[j - 1] * hist_e[-j]
        out[step] = pred
        if p:
            hist_w.append(pred)
        if q:
            hist_e.append(0.0)
    return out


def forecast_transformed(fit: ArimaFit, h: int) -> np.ndarray:
    """Forecasts on the transformed (pre-differencing) scale, sign-unconstrained."""
    if h < 1:
        raise ValueError(f"forecast horizon must be positive, got {h}")
    d = fit.order.d
    wf = _forecast_diffed(fit, h)
    if d == 0:
        return wf
    tail = list(fit.transformed[-d:])
    coeffs = [math.comb(d, j) * (-1) ** (j + 1) for j in range(1, d + 1)]
    out = np.empty(h)
    for step in range(h):
        level = wf[step] + sum(c * tail[-j] for j, c in enumerate(coeffs, start=1))
        out[step] = level
        tail.append(level)
    return out


def forecast_arima(fit: ArimaFit, h: int) -> np.ndarray:
    """h point forecasts on the original level scale, clipped at zero."""
    zf = forecast_transformed(fit, h)
    return np.maximum(fit.transform.inverse(zf), 0.0)
