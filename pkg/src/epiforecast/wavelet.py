"""Maximal-overlap discrete wavelet transform (Haar, periodic boundary) and the
wavelet-domain forecaster built on it."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import arima
from .series import NO_TRANSFORM

# Haar filters rescaled for the maximal-overlap transform (h/sqrt(2), g/sqrt(2)).
_HAAR_DETAIL = np.array([0.5, -0.5])
_HAAR_SMOOTH = np.array([0.5, 0.5])

SUBSERIES_MAX_ORDER = 3


def decomposition_level(n: int) -> int:
    """Decomposition depth rule: floor of the natural log of the series length."""
    if n < 8:
        raise ValueError(f"need at least 8 observations to decompose, got {n}")
    return int(math.floor(math.log(n)))


@dataclass(frozen=True)
class ModwtDecomposition:
    """J detail sub-series plus one smooth sub-series, each of input length."""

    details: tuple[np.ndarray, ...]
    smooth: np.ndarray
    levels: int
    boundary: str = "periodic"

    @property
    def n(self) -> int:
        return len(self.smooth)

    def coefficient_matrix(self) -> np.ndarray:
        return np.vstack([*self.details, self.smooth])


def _circular_filter(x: np.ndarray, kernel: np.ndarray, level: int, synthesis: bool) -> np.ndarray:
    n = len(x)
    step = 2 ** (level - 1)
    sign = 1 if synthesis else -1
    idx = (np.arange(n)[:, None] + sign * step * np.arange(len(kernel))[None, :]) % n
    return x[idx] @ kernel


def modwt(values, levels: int) -> ModwtDecomposition:
    """Haar MODWT pyramid with periodic boundary handling."""
    x = np.asarray(getattr(values, "values", values), dtype=float)
    n = len(x)
    if n < 2:
        raise ValueError("series too short for wavelet decomposition")
    if levels < 1:
        raise ValueError(f"levels must be positive, got {levels}")
    max_levels = int(math.floor(math.log2(n)))
    if levels > max_levels:
        raise ValueError(f"levels {levels} exceeds floor(log2({n})) = {max_levels}")
    details = []
    smooth = x
    for j in range(1, levels + 1):
        details.append(_circular_filter(smooth, _HAAR_DETAIL, j, synthesis=False))
        smooth = _circular_filter(smooth, _HAAR_SMOOTH, j, synthesis=False)
    return ModwtDecomposition(details=tuple(details), smooth=smooth, levels=levels)


def imodwt(dec: ModwtDecomposition) -> np.ndarray:
    """Invert the pyramid; exact reconstruction up to floating-point error."""
    smooth = dec.smooth
    for j in range(dec.levels, 0, -1):
        smooth = _circular_filter(dec.details[j - 1], _HAAR_DETAIL, j, synthesis=True) + \
            _circular_filter(smooth, _HAAR_SMOOTH, j, synthesis=True)
    return smooth


def _reconstruct_masked(dec: ModwtDecomposition, keep_detail, keep_smooth: bool) -> np.ndarray:
    zeros = np.zeros(dec.n)
    details = tuple(d if keep_detail(j) else zeros for j, d in enumerate(dec.details, start=1))
    smooth = dec.smooth if keep_smooth else zeros
    return imodwt(ModwtDecomposition(details=details, smooth=smooth, levels=dec.levels))


def mra_components(dec: ModwtDecomposition) -> list[np.ndarray]:
    """Additive multiresolution components: one per detail level plus the smooth.

    Because the inverse transform is linear, the components sum to the
    reconstructed input exactly (within rounding).
    """
    parts = [
        _reconstruct_masked(dec, keep_detail=lambda j, j0=j0: j == j0, keep_smooth=False)
        for j0 in range(1, dec.levels + 1)
    ]
    parts.append(_reconstruct_masked(dec, keep_detail=lambda j: False, keep_smooth=True))
    return parts


def denoise(dec: ModwtDecomposition, drop_levels: int) -> np.ndarray:
    """Reconstruction with the drop_levels finest detail sub-series removed."""
    if not 0 <= drop_levels <= dec.levels:
        raise ValueError(f"drop_levels must be in 0..{dec.levels}, got {drop_levels}")
    return _reconstruct_masked(dec, keep_detail=lambda j: j > drop_levels, keep_smooth=True)


@dataclass
class WbfFit:
    """Per-sub-series ARIMA fits over a wavelet decomposition."""

    levels: int
    n_obs: int
    sub_fits: list[arima.ArimaFit]
    fallbacks: list[int] = field(default_factory=list)

    def sub_series_names(self) -> list[str]:
        return [f"detail_{j}" for j in range(1, self.levels + 1)] + ["smooth"]

    def fitted_values(self) -> np.ndarray:
        """In-sample one-step predictions, summed across sub-series."""
        return np.sum([f.fitted for f in self.sub_fits], axis=0)

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "n_obs": self.n_obs,
            "sub_models": {
                name: fit.to_dict()
                for name, fit in zip(self.sub_series_names(), self.sub_fits)
            },
            "fallback_sub_series": [self.sub_series_names()[i] for i in self.fallbacks],
        }


def wbf_fit(values) -> WbfFit:
    """Decompose and fit one stationary ARIMA per sub-series.

    Sub-series are zero-mean (details) or slowly varying (smooth) by
    construction, so differencing is disabled and orders are capped low. A
    sub-series whose fit fails degrades to a mean-only model and is flagged.
    """
    x = np.asarray(getattr(values, "values", values), dtype=float)
    levels = decomposition_level(len(x))
    dec = modwt(x, levels)
    sub_series = [*dec.details, dec.smooth]
    fits = []
    fallbacks = []
    for i, sub in enumerate(sub_series):
        try:
            # boundary AR is legitimate here: detail sub-series oscillate by
            # construction, so the near-unit-root selection gate stays off
            order = arima.select_order(
                sub,
                NO_TRANSFORM,
                max_p=SUBSERIES_MAX_ORDER,
                max_q=SUBSERIES_MAX_ORDER,
                force_d=0,
                reject_near_unit_roots=False,
            )
            fits.append(arima.fit_arima(sub, order, NO_TRANSFORM))
        except (ValueError, arima.ConvergenceError):
            fallbacks.append(i)
            fits.append(arima.fit_arima(sub, arima.ArimaOrder(0, 0, 0), NO_TRANSFORM))
    return WbfFit(levels=levels, n_obs=len(x), sub_fits=fits, fallbacks=fallbacks)


def wbf_forecast(fit: WbfFit, h: int) -> np.ndarray:
    """Sum of the h-step forecasts of every sub-series model."""
    if h < 1:
        raise ValueError(f"forecast horizon must be positive, got {h}")
    per_sub = wbf_forecast_components(fit, h)
    return per_sub.sum(axis=0)


def wbf_forecast_components(fit: WbfFit, h: int) -> np.ndarray:
    """Per-sub-series forecasts, one row per sub-series (details then smooth)."""
    return np.vstack([arima.forecast_transformed(f, h) for f in fit.sub_fits])


def write_decomposition_csv(dec: ModwtDecomposition, path) -> None:
    """One column per sub-series (detail_1..detail_J, smooth), for plotting."""
    names = [f"detail_{j}" for j in range(1, dec.levels + 1)] + ["smooth"]
    columns = [*dec.details, dec.smooth]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for t in range(dec.n):
            writer.writerow([repr(float(col[t])) for col in columns])
