"""Log-distance pathloss model: fitting, prediction, residuals.

The mean SNR over distance follows ``rho0 - 10*gamma*log10(d/d0)``. One
model is fitted per scenario, pooled over every receiver, by ordinary
least squares in log-distance coordinates. The global deviation around
the fit is the fading term Z with standard deviation ``sigma_z``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InsufficientDataError, SingularDesignError
from .records import SnrSeries

MIN_FIT_SAMPLES = 10
DEFAULT_D0_M = 10.0


@dataclass(frozen=True)
class PathlossModel:
    scenario: str
    rho0_db: float
    gamma: float
    d0_m: float
    sigma_z_db: float
    n_samples: int

    def __post_init__(self):
        if self.d0_m <= 0:
            raise ValueError(f"reference distance {self.d0_m} must be positive")
        if self.sigma_z_db < 0:
            raise ValueError(f"sigma_z {self.sigma_z_db} must be non-negative")
        if not np.isfinite(self.gamma):
            raise ValueError("pathloss exponent must be finite")

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "rho0": self.rho0_db,
                "gamma": self.gamma, "d0": self.d0_m,
                "sigma_z": self.sigma_z_db, "n_samples": self.n_samples}

    @classmethod
    def from_dict(cls, doc: dict) -> "PathlossModel":
        return cls(scenario=doc["scenario"], rho0_db=float(doc["rho0"]),
                   gamma=float(doc["gamma"]), d0_m=float(doc["d0"]),
                   sigma_z_db=float(doc["sigma_z"]),
                   n_samples=int(doc["n_samples"]))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "PathlossModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fit_log_distance(series: Sequence[SnrSeries], d0: float = DEFAULT_D0_M,
                     scenario: Optional[str] = None) -> PathlossModel:
    """Least-squares fit of the log-distance model, pooled over receivers.

    Minimizes ``sum((snr_i - rho0 + 10*gamma*log10(d_i/d0))^2)``. sigma_z
    is the residual standard deviation with an N-2 denominator (two fitted
    parameters).
    """
    if not series:
        raise InsufficientDataError("no series supplied")
    d = np.concatenate([s.distances_m for s in series])
    snr = np.concatenate([s.snr_db for s in series])
    n = len(d)
    if n < MIN_FIT_SAMPLES:
        raise InsufficientDataError(
            f"{n} pooled samples; at least {MIN_FIT_SAMPLES} required")

    u = 10.0 * np.log10(d / d0)
    var_u = float(np.var(u))
    if var_u <= 0 or not np.isfinite(var_u):
        raise SingularDesignError(
            "all samples lie at a single distance; slope is unidentifiable")
    u_mean = u.mean()
    snr_mean = snr.mean()
    # snr = rho0 - gamma * u; slope of snr on u is -gamma
    slope = float(np.dot(u - u_mean, snr - snr_mean) / (n * var_u))
    gamma = -slope
    rho0 = float(snr_mean + gamma * u_mean)
    resid = snr - (rho0 - gamma * u)
    sigma_z = float(np.sqrt(np.dot(resid, resid) / (n - 2)))

    tag = scenario if scenario is not None else series[0].scenario.value
    return PathlossModel(scenario=tag, rho0_db=rho0, gamma=gamma, d0_m=d0,
                         sigma_z_db=sigma_z, n_samples=n)


def predict_mean_snr(model: PathlossModel, d) -> Union[float, np.ndarray]:
    """Deterministic mean SNR at distance d (meters), scalar or array."""
    d_arr = np.asarray(d, dtype=np.float64)
    if np.any(d_arr <= 0):
        raise ValueError("distance must be positive")
    out = model.rho0_db - 10.0 * model.gamma * np.log10(d_arr / model.d0_m)
    return float(out) if np.isscalar(d) or d_arr.ndim == 0 else out


def residuals_z(model: PathlossModel, series: SnrSeries) -> np.ndarray:
    """Deviation of each sample from the fitted mean, order preserved."""
    return series.snr_db - predict_mean_snr(model, series.distances_m)


def fit_gaussian(values) -> tuple[float, float]:
    """Sample mean and standard deviation (N-1 denominator) of dB values."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise InsufficientDataError(
            f"{values.size} values; at least 2 required for a Gaussian fit")
    return float(values.mean()), float(values.std(ddof=1))
