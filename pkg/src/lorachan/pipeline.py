"""End-to-end scenario fitting and validation.

Composes the estimation steps: pooled pathloss fit, per-receiver
residuals, distance binning, small-scale pooling, Yule-Walker phi, and
innovation variance. Two refinements beyond the bare estimators are
applied by default because bin means are noisy estimates of the
large-scale value:

* phi uses the measurement-noise corrected denominator (the plain ratio
  is attenuated by ``sigma_x^2 / (count * sigma_y^2)`` per bin);
* the pooled small-scale deviation uses the within-bin unbiased
  denominator ``sum(count_k - 1)`` instead of N-1, since every bin
  consumes one degree of freedom for its own mean.

Both can be disabled to reproduce the uncorrected estimators exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fading import (
    DEFAULT_DELTA_D_M,
    DEFAULT_MIN_BIN_COUNT,
    FadingModel,
    LargeScaleSeries,
    PhiEstimate,
    SigmaXEstimate,
    derive_sigma_y,
    estimate_phi,
    innovation_variance,
    local_average_bins,
    pool_sigma_x,
    small_scale_residuals,
)
from .pathloss import (
    DEFAULT_D0_M,
    PathlossModel,
    fit_log_distance,
    residuals_z,
)
from .records import SnrSeries
from .validation import (
    ClosureReport,
    ResidualReport,
    closure_report,
    residual_report,
)


@dataclass
class ScenarioFit:
    pathloss: PathlossModel
    fading: FadingModel
    bins: list[LargeScaleSeries]
    residuals: dict[str, np.ndarray]         # per receiver, series order
    sigma_x: SigmaXEstimate
    phi_estimate: PhiEstimate


def fit_scenario(series: Sequence[SnrSeries],
                 d0: float = DEFAULT_D0_M,
                 delta_d: float = DEFAULT_DELTA_D_M,
                 min_bin_count: int = DEFAULT_MIN_BIN_COUNT,
                 noise_corrected_phi: bool = True,
                 within_bin_sigma_x: bool = True) -> ScenarioFit:
    """Fit the pathloss and fading models for one scenario."""
    pathloss = fit_log_distance(series, d0=d0)

    bins = []
    residuals = {}
    xhat = {}
    for s in series:
        z = residuals_z(pathloss, s)
        residuals[s.receiver_id] = z
        b = local_average_bins(s.distances_m, z, delta_d=delta_d,
                               min_bin_count=min_bin_count,
                               receiver_id=s.receiver_id)
        bins.append(b)
        xhat[s.receiver_id] = small_scale_residuals(s.distances_m, z, b)

    sigma_x_est = pool_sigma_x(xhat)
    if within_bin_sigma_x:
        ss = sum(float(np.dot(v, v)) for v in xhat.values())
        dof = sum(len(v) for v in xhat.values()) - sum(len(b) for b in bins)
        if dof > 0:
            sigma_x_est = SigmaXEstimate(
                sigma_x_db=float(np.sqrt(ss / dof)),
                per_receiver_db=sigma_x_est.per_receiver_db)
    sigma_x = sigma_x_est.sigma_x_db

    noise_var = sigma_x ** 2 if noise_corrected_phi else None
    phi_est = estimate_phi(bins, measurement_noise_var=noise_var)

    sigma_y = derive_sigma_y(pathloss.sigma_z_db, sigma_x)
    sigma_eps = float(np.sqrt(innovation_variance(
        phi_est.phi, pathloss.sigma_z_db, sigma_x)))
    fading = FadingModel(scenario=pathloss.scenario, sigma_x_db=sigma_x,
                         sigma_y_db=sigma_y, phi=phi_est.phi,
                         sigma_eps_db=sigma_eps, delta_d_m=delta_d)
    return ScenarioFit(pathloss=pathloss, fading=fading, bins=bins,
                       residuals=residuals, sigma_x=sigma_x_est,
                       phi_estimate=phi_est)


@dataclass
class ScenarioValidation:
    report: ResidualReport
    closure: ClosureReport
    whiteness_passed: bool
    sigma_z_data_db: float
    sigma_z_gap_db: float
    sigma_z_passed: bool
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.whiteness_passed and self.closure.passed
                and self.sigma_z_passed)


def validate_scenario(series: Sequence[SnrSeries],
                      pathloss: PathlossModel,
                      fading: FadingModel,
                      min_bin_count: int = DEFAULT_MIN_BIN_COUNT,
                      max_lag: int = 50,
                      whiteness_fraction: float = 0.9,
                      closure_tolerance: float = 0.02,
                      sigma_z_tolerance_db: float = 0.5,
                      ) -> ScenarioValidation:
    """Check a fitted model against measurement (or generated) series.

    Recomputes residuals and bins with the supplied models, forms the AR
    residuals with the model's phi, and requires: at least
    ``whiteness_fraction`` of ACF lags 1..max_lag inside the 95% bounds,
    parameter closure within ``closure_tolerance``, and the data's global
    deviation matching the model's sigma_z within ``sigma_z_tolerance_db``.
    """
    bins = []
    z_all = []
    for s in series:
        z = residuals_z(pathloss, s)
        z_all.append(z)
        bins.append(local_average_bins(
            s.distances_m, z, delta_d=fading.delta_d_m,
            min_bin_count=min_bin_count, receiver_id=s.receiver_id))

    report = residual_report(bins, fading.phi, max_lag=max_lag)
    whiteness_passed = bool(report.fraction_within_bounds
                            >= whiteness_fraction)

    closure = closure_report(pathloss, fading, tolerance=closure_tolerance)

    pooled_z = np.concatenate(z_all)
    sigma_z_data = float(pooled_z.std(ddof=1))
    sigma_z_gap = abs(sigma_z_data - pathloss.sigma_z_db)
    sigma_z_passed = sigma_z_gap <= sigma_z_tolerance_db

    notes = list(closure.notes)
    if report.n_short_runs:
        notes.append(f"{report.n_short_runs} runs shorter than 2 bins "
                     f"contributed no residuals")
    return ScenarioValidation(report=report, closure=closure,
                              whiteness_passed=whiteness_passed,
                              sigma_z_data_db=sigma_z_data,
                              sigma_z_gap_db=sigma_z_gap,
                              sigma_z_passed=sigma_z_passed, notes=notes)
