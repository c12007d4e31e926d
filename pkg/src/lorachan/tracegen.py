"""Synthetic SNR trace generation over a distance grid.

Two equivalent formulations of the fitted channel: a per-point AR
recursion of the large-scale term plus white small-scale noise, and a
single multivariate-normal draw of the whole SNR vector with mean
``rho0 - 10*gamma*log10(d/d0)`` and covariance ``sigma_z^2`` on the
diagonal and ``sigma_eps^2 / (1 - phi^2) * phi^|m-n|`` elsewhere.
Receivers are generated mutually independently, each from its own
counter-based random stream, so traces are reproducible bit-for-bit for
a given seed regardless of evaluation order.
"""
from __future__ import annotations

import enum
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from ._kernels import ar_scan
from .errors import FactorizationError, TraceConfigError
from .fading import FadingModel, rescale_step
from .pathloss import PathlossModel, predict_mean_snr
from .records import VALID_SPREADING_FACTORS

MAX_MVN_POINTS = 10_000
_TRACE_MAGIC = b"LORATRC1"


@dataclass(frozen=True)
class ScenarioModel:
    """A fitted pathloss model paired with its fading model."""

    pathloss: PathlossModel
    fading: FadingModel

    def __post_init__(self):
        if self.pathloss.scenario != self.fading.scenario:
            raise ValueError(
                f"pathloss scenario {self.pathloss.scenario!r} does not match "
                f"fading scenario {self.fading.scenario!r}")

    @property
    def scenario(self) -> str:
        return self.pathloss.scenario

    @classmethod
    def from_constants(cls, scenario: str, rho0: float, gamma: float,
                       sigma_z: float, sigma_x: float, phi: float,
                       d0: float = 10.0, delta_d: float = 10.0,
                       n_samples: int = 0) -> "ScenarioModel":
        """Assemble a consistent model from (rho0, gamma, sigma_z, sigma_x, phi).

        sigma_y and sigma_eps are derived by difference of variances and
        the innovation closure, so the component invariants hold exactly.
        """
        from .fading import derive_sigma_y, innovation_variance
        sigma_y = derive_sigma_y(sigma_z, sigma_x)
        sigma_eps = float(np.sqrt(innovation_variance(phi, sigma_z, sigma_x)))
        return cls(
            pathloss=PathlossModel(scenario=scenario, rho0_db=rho0,
                                   gamma=gamma, d0_m=d0, sigma_z_db=sigma_z,
                                   n_samples=n_samples),
            fading=FadingModel(scenario=scenario, sigma_x_db=sigma_x,
                               sigma_y_db=sigma_y, phi=phi,
                               sigma_eps_db=sigma_eps, delta_d_m=delta_d))


class TraceMode(str, enum.Enum):
    AR_RECURSION = "ar"
    MULTIVARIATE_NORMAL = "mvn"


@dataclass(frozen=True)
class TraceConfig:
    model: ScenarioModel
    start_distance_m: float
    n_points: int
    delta_d_m: float
    n_receivers: int
    seed: int
    mode: TraceMode = TraceMode.AR_RECURSION

    def __post_init__(self):
        if self.n_points < 1:
            raise TraceConfigError(f"n_points {self.n_points} must be >= 1")
        if self.start_distance_m <= 0:
            raise TraceConfigError(
                f"start_distance {self.start_distance_m} must be positive")
        if self.delta_d_m <= 0:
            raise TraceConfigError(f"delta_d {self.delta_d_m} must be positive")
        if self.n_receivers < 1:
            raise TraceConfigError(
                f"n_receivers {self.n_receivers} must be >= 1")

    def grid(self) -> np.ndarray:
        return self.start_distance_m + np.arange(self.n_points) * self.delta_d_m

    def echo(self) -> dict:
        return {
            "scenario": self.model.scenario,
            "pathloss": self.model.pathloss.to_dict(),
            "fading": self.model.fading.to_dict(),
            "start_distance": self.start_distance_m,
            "n_points": self.n_points,
            "delta_d": self.delta_d_m,
            "n_receivers": self.n_receivers,
            "seed": self.seed,
            "mode": self.mode.value,
        }


@dataclass
class ChannelTrace:
    """Per-receiver simulated SNR over a shared distance grid.

    ``y_db`` holds the large-scale component in AR mode; in MVN mode the
    joint draw does not separate the components, so it holds the total
    deviation from the mean instead.
    """

    receiver_ids: list[str]
    distances_m: np.ndarray
    snr_db: np.ndarray       # shape (n_receivers, n_points)
    y_db: np.ndarray         # shape (n_receivers, n_points)
    seed: int
    mode: TraceMode
    config_echo: dict

    def __post_init__(self):
        if self.snr_db.shape != self.y_db.shape:
            raise ValueError("snr and y arrays must share a shape")
        if self.snr_db.shape != (len(self.receiver_ids), len(self.distances_m)):
            raise ValueError("trace arrays inconsistent with receivers/grid")


def _receiver_rngs(seed: int, n_receivers: int) -> list[np.random.Generator]:
    # One independent counter-based stream per receiver, spawned from the
    # trace seed, so per-receiver draws do not depend on evaluation order.
    children = np.random.SeedSequence(seed).spawn(n_receivers)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _fading_at_step(config: TraceConfig) -> FadingModel:
    fading = config.model.fading
    if abs(config.delta_d_m - fading.delta_d_m) > 1e-12 * fading.delta_d_m:
        fading = rescale_step(fading, config.delta_d_m)
    return fading


def generate_ar(config: TraceConfig) -> ChannelTrace:
    """Generate traces by the AR recursion.

    Per receiver: ``Y[0] ~ N(0, sigma_y^2)``, ``Y[n+1] = phi*Y[n] + eps``
    with ``eps ~ N(0, sigma_eps^2)``, plus i.i.d. ``X[n] ~ N(0, sigma_x^2)``;
    ``snr[n]`` adds both to the log-distance mean. Identical seeds produce
    bit-identical traces.
    """
    fading = _fading_at_step(config)
    grid = config.grid()
    mean = predict_mean_snr(config.model.pathloss, grid)
    n = config.n_points
    snr = np.empty((config.n_receivers, n))
    y_all = np.empty((config.n_receivers, n))
    for r, rng in enumerate(_receiver_rngs(config.seed, config.n_receivers)):
        y0 = rng.normal(0.0, fading.sigma_y_db)
        eps = rng.normal(0.0, fading.sigma_eps_db, n - 1)
        y = ar_scan(y0, fading.phi, eps)
        x = rng.normal(0.0, fading.sigma_x_db, n)
        y_all[r] = y
        snr[r] = mean + x + y
    return ChannelTrace(
        receiver_ids=[f"rx{r}" for r in range(config.n_receivers)],
        distances_m=grid, snr_db=snr, y_db=y_all, seed=config.seed,
        mode=TraceMode.AR_RECURSION, config_echo=config.echo())


def build_mean(model: ScenarioModel, grid: np.ndarray) -> np.ndarray:
    """Mean SNR vector over the distance grid."""
    return predict_mean_snr(model.pathloss, np.asarray(grid, dtype=np.float64))


def build_covariance(model: ScenarioModel, n_points: int, delta_d: float
                     ) -> np.ndarray:
    """SNR covariance matrix over an n-point grid with step delta_d.

    Diagonal entries are the global variance ``sigma_z^2``; off-diagonal
    entries decay as ``sigma_eps^2 / (1 - phi^2) * phi^|m-n|``, keeping
    the published parameters verbatim rather than substituting sigma_y.
    """
    fading = model.fading
    if abs(delta_d - fading.delta_d_m) > 1e-12 * fading.delta_d_m:
        fading = rescale_step(fading, delta_d)
    phi = fading.phi
    if not phi < 1.0:
        raise ValueError(f"phi {phi} must be below 1 for a finite covariance")
    lags = np.abs(np.subtract.outer(np.arange(n_points), np.arange(n_points)))
    off_scale = fading.sigma_eps_db ** 2 / (1.0 - phi ** 2)
    cov = off_scale * np.power(phi, lags.astype(np.float64))
    np.fill_diagonal(cov, model.pathloss.sigma_z_db ** 2)
    return cov


def _cholesky_naming_minor(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    # Bisect for the smallest leading minor that is not positive definite.
    lo, hi = 1, cov.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        try:
            np.linalg.cholesky(cov[:mid, :mid])
            lo = mid + 1
        except np.linalg.LinAlgError:
            hi = mid
    raise FactorizationError(lo)


def generate_mvn(config: TraceConfig) -> ChannelTrace:
    """Generate traces as draws from the multivariate normal SNR vector.

    Each receiver's vector is ``mean + L @ z`` with ``L`` the lower
    Cholesky factor of the covariance and ``z`` standard normal from the
    receiver's own stream. An all-zero covariance (fully deterministic
    model) short-circuits to the mean. Bounded to MAX_MVN_POINTS points
    by the dense factorization.
    """
    if config.n_points > MAX_MVN_POINTS:
        raise TraceConfigError(
            f"n_points {config.n_points} exceeds the dense factorization "
            f"bound {MAX_MVN_POINTS}")
    grid = config.grid()
    mean = build_mean(config.model, grid)
    cov = build_covariance(config.model, config.n_points, config.delta_d_m)
    n = config.n_points
    snr = np.empty((config.n_receivers, n))
    deviation = np.empty((config.n_receivers, n))
    if not np.any(cov):
        for r in range(config.n_receivers):
            snr[r] = mean
            deviation[r] = 0.0
    else:
        factor = _cholesky_naming_minor(cov)
        for r, rng in enumerate(_receiver_rngs(config.seed, config.n_receivers)):
            z = rng.standard_normal(n)
            dev = factor @ z
            deviation[r] = dev
            snr[r] = mean + dev
    return ChannelTrace(
        receiver_ids=[f"rx{r}" for r in range(config.n_receivers)],
        distances_m=grid, snr_db=snr, y_db=deviation, seed=config.seed,
        mode=TraceMode.MULTIVARIATE_NORMAL, config_echo=config.echo())


def generate(config: TraceConfig) -> ChannelTrace:
    if config.mode is TraceMode.AR_RECURSION:
        return generate_ar(config)
    return generate_mvn(config)


def packet_success(snr_db: float, sf: int, thresholds: Mapping[int, float]
                   ) -> bool:
    """Frame success decision: SNR at or above the SF's threshold.

    Thresholds are entirely user supplied; none are asserted as physical
    truth here.
    """
    if sf not in VALID_SPREADING_FACTORS:
        raise ValueError(f"spreading factor {sf} outside 7..12")
    if sf not in thresholds:
        raise KeyError(f"no SNR threshold supplied for SF{sf}")
    return snr_db >= thresholds[sf]


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_trace_csv(trace: ChannelTrace, path: Union[str, Path]) -> None:
    """CSV export (receiver_id, distance, snr, y) with a config echo header."""
    lines = ["# " + json.dumps(trace.config_echo, sort_keys=True),
             "receiver_id,distance_m,snr_db,y_db"]
    for r, rx in enumerate(trace.receiver_ids):
        for j in range(len(trace.distances_m)):
            lines.append(f"{rx},{_fmt(trace.distances_m[j])},"
                         f"{_fmt(trace.snr_db[r, j])},{_fmt(trace.y_db[r, j])}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_trace_binary(trace: ChannelTrace, path: Union[str, Path]) -> None:
    """Columnar binary dump: little-endian float64 columns after a JSON header."""
    header = dict(trace.config_echo)
    header["receiver_ids"] = trace.receiver_ids
    header["layout"] = "distances, then per receiver: snr, y"
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_TRACE_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(trace.distances_m.astype("<f8").tobytes())
        for r in range(len(trace.receiver_ids)):
            fh.write(trace.snr_db[r].astype("<f8").tobytes())
            fh.write(trace.y_db[r].astype("<f8").tobytes())


def read_trace_binary(path: Union[str, Path]) -> ChannelTrace:
    """Read back a binary trace dump written by write_trace_binary."""
    raw = Path(path).read_bytes()
    if raw[:len(_TRACE_MAGIC)] != _TRACE_MAGIC:
        raise ValueError(f"{path}: not a trace dump (bad magic)")
    off = len(_TRACE_MAGIC)
    (hlen,) = struct.unpack_from("<I", raw, off)
    off += 4
    header = json.loads(raw[off:off + hlen].decode("utf-8"))
    off += hlen
    n = int(header["n_points"])
    receiver_ids = list(header["receiver_ids"])
    def take(count):
        nonlocal off
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).copy()
        off += 8 * count
        return arr
    distances = take(n)
    snr = np.empty((len(receiver_ids), n))
    y = np.empty((len(receiver_ids), n))
    for r in range(len(receiver_ids)):
        snr[r] = take(n)
        y[r] = take(n)
    return ChannelTrace(receiver_ids=receiver_ids, distances_m=distances,
                        snr_db=snr, y_db=y, seed=int(header["seed"]),
                        mode=TraceMode(header["mode"]), config_echo=header)
