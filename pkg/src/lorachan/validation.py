"""Model-vs-data diagnostics: AR residual whiteness, normality, closure.

The large-scale model is judged on its one-step prediction residuals
``eps_hat[n] = Y[(n+1)dd] - phi * Y[n dd]``: if the model fits, they are
white and Gaussian, so their autocorrelation should stay within the 95%
confidence bounds of an uncorrelated process and their histogram should
look normal. Parameter closure ties the fitted quantities together.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateSeriesError, InsufficientDataError
from .fading import FadingModel, LargeScaleSeries, autocovariance
from .pathloss import PathlossModel

# Urban Hata-Okumura exponent, echoed next to fitted NLoS exponents in
# reports as a literature reference point (extrapolated below its nominal
# receiver-height range).
HATA_OKUMURA_URBAN_EXPONENT = 3.64

DEFAULT_MAX_LAG = 50
DEFAULT_HIST_BINS = 41
DEFAULT_HIST_SPAN_SIGMAS = 4.0
MIN_NORMALITY_SAMPLES = 20


@dataclass
class ArResidualResult:
    values: np.ndarray
    n_short_runs: int      # runs under 2 bins contribute nothing


def ar_residuals(series: LargeScaleSeries, phi: float) -> ArResidualResult:
    """One-step AR prediction residuals within each contiguous run."""
    chunks = []
    n_short = 0
    for run in series.runs():
        if len(run) < 2:
            n_short += 1
            continue
        chunks.append(run[1:] - phi * run[:-1])
    values = np.concatenate(chunks) if chunks else np.empty(0)
    return ArResidualResult(values=values, n_short_runs=n_short)


def concat_ar_residuals(series: Sequence[LargeScaleSeries], phi: float
                        ) -> ArResidualResult:
    """Residuals concatenated in receiver order, then distance order."""
    ordered = sorted(series, key=lambda s: s.receiver_id)
    parts = [ar_residuals(s, phi) for s in ordered]
    values = (np.concatenate([p.values for p in parts])
              if parts else np.empty(0))
    return ArResidualResult(values=values,
                            n_short_runs=sum(p.n_short_runs for p in parts))


@dataclass
class AcfResult:
    lags: np.ndarray
    correlations: np.ndarray
    conf_bound: float

    def fraction_within_bounds(self) -> float:
        """Fraction of lags >= 1 whose correlation is inside +-conf_bound."""
        mask = self.lags >= 1
        if not np.any(mask):
            return 1.0
        inside = np.abs(self.correlations[mask]) <= self.conf_bound
        return float(np.mean(inside))


def acf_with_bounds(values: np.ndarray, max_lag: int = DEFAULT_MAX_LAG
                    ) -> AcfResult:
    """Autocorrelation up to max_lag with 95% white-noise confidence bounds.

    correlation(k) = autocovariance(k) / autocovariance(0); the bound is
    1.96 / sqrt(N), the 95% interval for an uncorrelated Gaussian process.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if not 1 <= max_lag < n:
        raise InsufficientDataError(
            f"need N > max_lag >= 1; got N={n}, max_lag={max_lag}")
    r0 = autocovariance(values, 0)
    if r0 <= 0:
        raise DegenerateSeriesError("zero variance; ACF undefined")
    c = values - values.mean()
    corrs = np.empty(max_lag + 1)
    corrs[0] = 1.0
    for k in range(1, max_lag + 1):
        corrs[k] = np.dot(c[:-k], c[k:]) / n / r0
    return AcfResult(lags=np.arange(max_lag + 1), correlations=corrs,
                     conf_bound=1.96 / np.sqrt(n))


@dataclass
class NormalityResult:
    skewness: float
    excess_kurtosis: float
    statistic: float


def normality_stat(values: np.ndarray) -> NormalityResult:
    """Moment-based omnibus normality statistic.

    Sample skewness g1 and excess kurtosis g2 from biased central moments,
    combined as ``N * (g1^2/6 + g2^2/24)``, asymptotically chi-squared
    with two degrees of freedom under normality. Invariant under affine
    transforms of the data.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n < MIN_NORMALITY_SAMPLES:
        raise InsufficientDataError(
            f"{n} values; at least {MIN_NORMALITY_SAMPLES} required")
    c = values - values.mean()
    m2 = np.mean(c ** 2)
    if m2 <= 0:
        raise DegenerateSeriesError("zero variance; normality test undefined")
    g1 = float(np.mean(c ** 3) / m2 ** 1.5)
    g2 = float(np.mean(c ** 4) / m2 ** 2 - 3.0)
    stat = n * (g1 ** 2 / 6.0 + g2 ** 2 / 24.0)
    return NormalityResult(skewness=g1, excess_kurtosis=g2, statistic=float(stat))


def histogram_counts(values: np.ndarray, n_bins: int = DEFAULT_HIST_BINS,
                     span_sigmas: float = DEFAULT_HIST_SPAN_SIGMAS
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Histogram over +-span_sigmas sample deviations around the mean.

    Returns (edges, counts) with len(edges) == len(counts) + 1, for
    external plotting.
    """
    values = np.asarray(values, dtype=np.float64)
    mu = values.mean()
    sd = values.std()
    if sd <= 0:
        raise DegenerateSeriesError("zero variance; histogram span undefined")
    edges = np.linspace(mu - span_sigmas * sd, mu + span_sigmas * sd, n_bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    return edges, counts


@dataclass
class ClosureCheck:
    name: str
    passed: bool
    gap: float
    tolerance: float

    def __str__(self) -> str:
        state = "pass" if self.passed else "FAIL"
        return f"{self.name}: {state} (gap {self.gap:.6g}, tol {self.tolerance:g})"


@dataclass
class ClosureReport:
    checks: list[ClosureCheck]
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def closure_report(pathloss: PathlossModel, fading: FadingModel,
                   tolerance: float = 0.02) -> ClosureReport:
    """Consistency checks between the pathloss and fading parameters.

    Verifies the variance decomposition ``sigma_y = sqrt(sigma_z^2 -
    sigma_x^2)``, the innovation closure ``sigma_eps^2 = (1 - phi^2) *
    sigma_y^2``, and ``sigma_x <= sigma_z``. For NLoS scenarios the report
    notes the Hata-Okumura urban exponent next to the fitted one.
    """
    sz, sx = pathloss.sigma_z_db, fading.sigma_x_db
    sy, phi, se = fading.sigma_y_db, fading.phi, fading.sigma_eps_db

    checks = []
    decomposable = bool(sx <= sz)
    gap_order = abs(sx - sz) if not decomposable else 0.0
    checks.append(ClosureCheck("sigma_x_le_sigma_z", decomposable,
                               float(gap_order), 0.0))
    if decomposable:
        gap_y = abs(sy - np.sqrt(sz ** 2 - sx ** 2))
    else:
        gap_y = float("inf")
    checks.append(ClosureCheck("sigma_y_difference_of_variances",
                               bool(gap_y <= tolerance), float(gap_y),
                               tolerance))
    gap_eps = abs(se ** 2 - (1.0 - phi ** 2) * sy ** 2)
    checks.append(ClosureCheck("innovation_variance_closure",
                               bool(gap_eps <= tolerance), float(gap_eps),
                               tolerance))

    notes = []
    if "nlos" in pathloss.scenario:
        notes.append(
            f"fitted gamma={pathloss.gamma:.3g} vs Hata-Okumura urban "
            f"reference gamma={HATA_OKUMURA_URBAN_EXPONENT} (extrapolated)")
    return ClosureReport(checks=checks, notes=notes)


@dataclass
class ResidualReport:
    """Diagnostics of the concatenated AR residuals for one scenario."""

    residuals: np.ndarray
    acf: AcfResult
    skewness: float
    excess_kurtosis: float
    normality_stat: float
    fraction_within_bounds: float
    n_short_runs: int = 0

    @property
    def conf_bound(self) -> float:
        return self.acf.conf_bound

    def to_dict(self) -> dict:
        return {
            "n_residuals": int(len(self.residuals)),
            "residual_std": float(np.std(self.residuals, ddof=1))
            if len(self.residuals) > 1 else None,
            "conf_bound": self.acf.conf_bound,
            "fraction_within_bounds": self.fraction_within_bounds,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "normality_stat": self.normality_stat,
            "n_short_runs": self.n_short_runs,
        }


def residual_report(series: Sequence[LargeScaleSeries], phi: float,
                    max_lag: int = DEFAULT_MAX_LAG) -> ResidualReport:
    """Build the whiteness/normality report for pooled AR residuals."""
    res = concat_ar_residuals(series, phi)
    if len(res.values) <= max_lag:
        raise InsufficientDataError(
            f"{len(res.values)} residuals; need more than max_lag={max_lag}")
    acf = acf_with_bounds(res.values, max_lag=max_lag)
    norm = normality_stat(res.values)
    return ResidualReport(
        residuals=res.values,
        acf=acf,
        skewness=norm.skewness,
        excess_kurtosis=norm.excess_kurtosis,
        normality_stat=norm.statistic,
        fraction_within_bounds=acf.fraction_within_bounds(),
        n_short_runs=res.n_short_runs,
    )
