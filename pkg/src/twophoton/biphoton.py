"""Biphoton amplitudes for type I (oo) and type II (oe, eo) channels.

The amplitude of a channel is

    N * G(nu) * E(K xi_s + K nu xi_d) * sinc(K L_z f / 2) * exp(-i K z_c f)

with ``f`` the dimensionless longitudinal mismatch of that channel. ``N`` is
left at 1; observables normalize numerically where they need to.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigError, EmptyGrid
from .numerics import compensated_sum, sinc, tensor_trapezoid, trapezoid_weights
from .phasematching import (
    F_ANGULAR, F_SUMDIFF, MAX_DETUNING, AngularPoint, CutConfiguration, bandwidth_nm_to_detuning,
)

# -- pump ---------------------------------------------------------------------


class PumpBeam:
    """Plane-wave spectrum ``E(q)`` of the pump, normalized to unit power in q-space."""

    waist: float | None = None

    def amplitude(self, qx, qy):
        raise NotImplementedError

    def intensity(self, qx, qy):
        return np.abs(self.amplitude(qx, qy)) ** 2

    def q_sigma(self) -> tuple[float, float]:
        """RMS width of ``|E(q)|^2`` along x and y (1/um)."""
        raise NotImplementedError

    def q_center(self) -> tuple[float, float]:
        return 0.0, 0.0


@dataclass(frozen=True)
class GaussianPump(PumpBeam):
    """Gaussian beam of waist ``w0`` (um): ``E(q) ~ exp(-w0^2 |q|^2 / 4)``."""

    waist: float = 25.0

    def __post_init__(self):
        if not self.waist > 0:
            raise ConfigError(f"pump waist must be positive, got {self.waist}")

    def amplitude(self, qx, qy):
        w = self.waist
        return w / math.sqrt(2 * math.pi) * np.exp(-w * w * (qx * qx + qy * qy) / 4)

    def intensity(self, qx, qy):
        w = self.waist
        return w * w / (2 * math.pi) * np.exp(-w * w * (qx * qx + qy * qy) / 2)

    def q_sigma(self):
        return 1 / self.waist, 1 / self.waist


class TabulatedPump(PumpBeam):
    """Pump spectrum sampled on a rectangular ``(q_x, q_y)`` grid; zero outside it.

    The table is rescaled so that ``int |E|^2 d^2q = 1`` on its own grid.
    """

    def __init__(self, qx, qy, values):
        self.qx = np.asarray(qx, dtype=float)
        self.qy = np.asarray(qy, dtype=float)
        values = np.asarray(values, dtype=complex)
        if values.shape != (self.qx.size, self.qy.size):
            raise ConfigError("pump table shape does not match its q grids")
        power = tensor_trapezoid(np.abs(values) ** 2, [self.qx, self.qy])
        if not power > 0:
            raise EmptyGrid("pump table carries no power")
        self.values = values / math.sqrt(power)
        opts = dict(bounds_error=False, fill_value=0.0)
        self._re = RegularGridInterpolator((self.qx, self.qy), self.values.real, **opts)
        self._im = RegularGridInterpolator((self.qx, self.qy), self.values.imag, **opts)

    def amplitude(self, qx, qy):
        qx, qy = np.broadcast_arrays(np.asarray(qx, float), np.asarray(qy, float))
        pts = np.stack([qx.ravel(), qy.ravel()], axis=-1)
        out = self._re(pts) + 1j * self._im(pts)
        return out.reshape(qx.shape)

    def _moments(self):
        inten = np.abs(self.values) ** 2
        X, Y = np.meshgrid(self.qx, self.qy, indexing="ij")
        mx = tensor_trapezoid(inten * X, [self.qx, self.qy])
        my = tensor_trapezoid(inten * Y, [self.qx, self.qy])
        vx = tensor_trapezoid(inten * (X - mx) ** 2, [self.qx, self.qy])
        vy = tensor_trapezoid(inten * (Y - my) ** 2, [self.qx, self.qy])
        return mx, my, math.sqrt(vx), math.sqrt(vy)

    def q_center(self):
        return self._moments()[:2]

    def q_sigma(self):
        return self._moments()[2:]

    @classmethod
    def from_file(cls, path: str | Path) -> "TabulatedPump":
        """Read a whitespace table with columns ``q_x q_y Re(E) Im(E)``.

        A comment line ``# units: 1/um`` is required; rows may come in any order
        but must fill a rectangular grid.
        """
        lines = Path(path).read_text().splitlines()
        units = [ln for ln in lines if ln.startswith("#") and "units" in ln.lower()]
        if not units or "1/um" not in units[0].replace(" ", ""):
            raise ConfigError(f"{path}: header must declare '# units: 1/um'")
        data = np.loadtxt(lines, comments="#", ndmin=2)
        if data.shape[1] != 4:
            raise ConfigError(f"{path}: expected 4 columns (q_x q_y Re Im), got {data.shape[1]}")
        qx, ix = np.unique(data[:, 0], return_inverse=True)
        qy, iy = np.unique(data[:, 1], return_inverse=True)
        if qx.size * qy.size != len(data):
            raise ConfigError(f"{path}: rows do not form a rectangular grid")
        values = np.zeros((qx.size, qy.size), dtype=complex)
        values[ix, iy] = data[:, 2] + 1j * data[:, 3]
        return cls(qx, qy, values)

    def to_file(self, path: str | Path):
        X, Y = np.meshgrid(self.qx, self.qy, indexing="ij")
        table = np.column_stack([X.ravel(), Y.ravel(), self.values.real.ravel(), self.values.imag.ravel()])
        np.savetxt(path, table, fmt="%.12e", header="units: 1/um\nq_x q_y re im")


# -- spectral filter ---------------------------------------------------------

class FilterShape(str, Enum):
    GAUSSIAN = "gaussian"
    RECTANGULAR = "rectangular"
    DELTA = "delta"
    NONE = "none"


FOUR_LN2 = 4 * math.log(2)


@dataclass(frozen=True)
class SpectralFilter:
    """Amplitude transmission ``G(nu)`` of the detection filters.

    ``width`` is the full width (FWHM for the Gaussian) in units of ``nu``.
    """

    shape: FilterShape = FilterShape.NONE
    nu0: float = 0.0
    width: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "shape", FilterShape(self.shape))
        if self.shape in (FilterShape.GAUSSIAN, FilterShape.RECTANGULAR) and not self.width > 0:
            raise ConfigError(f"{self.shape.value} filter needs a positive width")
        if abs(self.nu0) >= MAX_DETUNING:
            raise ConfigError(f"filter centre |nu0| must stay below {MAX_DETUNING}")

    @classmethod
    def from_nm(cls, shape, fwhm_nm: float, lambda_deg_um: float, nu0: float = 0.0):
        return cls(shape, nu0, bandwidth_nm_to_detuning(fwhm_nm, lambda_deg_um))

    @property
    def is_delta(self) -> bool:
        return self.shape is FilterShape.DELTA


def filter_value(filt: SpectralFilter, nu):
    """``G(nu) >= 0``. A delta filter evaluates as the indicator of ``nu == nu0``;
    integrators collapse the ``nu`` integral instead of sampling it."""
    nu = np.asarray(nu, dtype=float)
    if filt.shape is FilterShape.GAUSSIAN:
        out = np.exp(-FOUR_LN2 * (nu - filt.nu0) ** 2 / filt.width ** 2)
    elif filt.shape is FilterShape.RECTANGULAR:
        half = filt.width / 2
        out = ((nu >= filt.nu0 - half - 1e-15) & (nu <= filt.nu0 + half + 1e-15)).astype(float)
    elif filt.shape is FilterShape.DELTA:
        out = np.isclose(nu, filt.nu0, rtol=0, atol=1e-12).astype(float)
    else:
        out = np.ones_like(nu)
    return float(out) if out.ndim == 0 else out


# -- detection setup ---------------------------------------------------------

NU_SPAN_DEFAULT = 0.1
NU_POINTS_DEFAULT = 801
NU_LIMIT = 0.149


@dataclass(frozen=True)
class DetectionSetup:
    """Pump, filters and the detuning grid used for ``nu`` integrals.

    ``nu_points`` is the node count used across the default span ``+-nu_span``;
    narrower filter bands keep the same node spacing unless ``nu_points_band``
    is given.
    """

    pump: PumpBeam = field(default_factory=GaussianPump)
    filter: SpectralFilter = field(default_factory=SpectralFilter)
    nu_span: float = NU_SPAN_DEFAULT
    nu_points: int = NU_POINTS_DEFAULT
    nu_points_band: int | None = None

    def nu_nodes(self) -> np.ndarray:
        f = self.filter
        if f.is_delta:
            return np.array([f.nu0])
        step = 2 * self.nu_span / (self.nu_points - 1)
        if f.shape is FilterShape.RECTANGULAR:
            lo, hi = f.nu0 - f.width / 2, f.nu0 + f.width / 2
        elif f.shape is FilterShape.GAUSSIAN:
            lo, hi = f.nu0 - 1.5 * f.width, f.nu0 + 1.5 * f.width
        else:
            lo, hi = -self.nu_span, self.nu_span
        lo, hi = max(lo, -NU_LIMIT), min(hi, NU_LIMIT)
        if f.shape is FilterShape.NONE:
            n = self.nu_points
        elif self.nu_points_band is not None:
            n = self.nu_points_band
        else:
            n = int(math.ceil((hi - lo) / step)) + 1
        return np.linspace(lo, hi, max(n, 3))

    def refined(self, factor: int = 2) -> "DetectionSetup":
        band = None if self.nu_points_band is None else (self.nu_points_band - 1) * factor + 1
        return DetectionSetup(self.pump, self.filter, self.nu_span,
                              (self.nu_points - 1) * factor + 1, band)


# -- amplitudes ----------------------------------------------------------------

MODELS = ("full", "simplified")


def mismatch(cut: CutConfiguration, channel: str, x1, y1, x2, y2, nu, model: str = "full"):
    """Dimensionless mismatch of ``channel`` at the given output angles.

    ``model="full"`` keeps the curvature factors ``b, g, b_bar, g_bar``;
    ``model="simplified"`` sets them to 1 (sum/difference closed forms).
    """
    idx = cut.indices
    if model == "full":
        return F_ANGULAR[channel](idx, x1, y1, x2, y2, nu)
    if model == "simplified":
        return F_SUMDIFF[channel](idx, (x1 + x2) / 2, (y1 + y2) / 2, (x1 - x2) / 2, (y1 - y2) / 2, nu)
    raise ValueError(f"model must be one of {MODELS}, got {model!r}")


def _pump_args(cut, x1, y1, x2, y2, nu):
    K = cut.K
    return (K / 2 * ((x1 + x2) + nu * (x1 - x2)), K / 2 * ((y1 + y2) + nu * (y1 - y2)))


def channel_amplitude(cut: CutConfiguration, setup: DetectionSetup, channel: str,
                      x1, y1, x2, y2, nu, model: str = "full"):
    f = mismatch(cut, channel, x1, y1, x2, y2, nu, model)
    pump = setup.pump.amplitude(*_pump_args(cut, x1, y1, x2, y2, nu))
    G = filter_value(setup.filter, nu)
    return G * pump * sinc(cut.K * cut.L_z / 2 * f) * np.exp(-1j * cut.K * cut.z_c * f)


def channel_intensity(cut: CutConfiguration, setup: DetectionSetup, channel: str,
                      x1, y1, x2, y2, nu, model: str = "full", with_filter: bool = True):
    """``|Phi|^2`` of one channel, computed without forming the complex phase."""
    f = mismatch(cut, channel, x1, y1, x2, y2, nu, model)
    out = setup.pump.intensity(*_pump_args(cut, x1, y1, x2, y2, nu)) * sinc(cut.K * cut.L_z / 2 * f) ** 2
    if with_filter and setup.filter.shape is not FilterShape.NONE:
        out = out * filter_value(setup.filter, nu) ** 2
    return out


def _check_channel(cut: CutConfiguration, channel: str):
    if channel not in cut.family.channels:
        raise ValueError(f"channel {channel!r} does not exist for type {cut.family.value} cuts")


def amplitude(cut: CutConfiguration, setup: DetectionSetup, pt: AngularPoint,
              channel: str, model: str = "full"):
    _check_channel(cut, channel)
    (x1, y1), (x2, y2) = pt.xi1, pt.xi2
    return channel_amplitude(cut, setup, channel, x1, y1, x2, y2, pt.nu, model)


def amplitude_oo(cut, setup, pt, model="full"):
    return amplitude(cut, setup, pt, "oo", model)


def amplitude_oe(cut, setup, pt, model="full"):
    return amplitude(cut, setup, pt, "oe", model)


def amplitude_eo(cut, setup, pt, model="full"):
    return amplitude(cut, setup, pt, "eo", model)


def _cell_weights(axis: np.ndarray) -> np.ndarray:
    return np.ones(1) if axis.size == 1 else trapezoid_weights(axis)


def state_weights(cut: CutConfiguration, setup: DetectionSetup, grid, model: str = "full") -> np.ndarray:
    """Probability of each node of the tensor grid ``(xi1x, xi1y, xi2x, xi2y, nu)``.

    Each node carries ``|Phi|^2`` times its trapezoid cell volume (axes with a
    single node count as 1), normalized to unit sum, so marginals converge at
    second order under refinement. Type II sums the oe and eo channels.

    Raises:
        EmptyGrid: an axis is empty or no grid point carries weight.
    """
    axes = [np.atleast_1d(np.asarray(a, dtype=float)) for a in grid]
    if len(axes) != 5 or any(a.size == 0 for a in axes):
        raise EmptyGrid("state grid needs five non-empty axes (xi1x, xi1y, xi2x, xi2y, nu)")
    mesh = np.meshgrid(*axes, indexing="ij")
    weights = np.zeros(mesh[0].shape)
    for ch in cut.family.channels:
        weights += channel_intensity(cut, setup, ch, *mesh, model=model)
    if setup.filter.is_delta:
        weights = weights * filter_value(setup.filter, mesh[4])
    for k, axis in enumerate(axes):
        shape = [1] * 5
        shape[k] = axis.size
        weights = weights * _cell_weights(axis).reshape(shape)
    total = compensated_sum(weights)
    if not total > 0:
        raise EmptyGrid("no weight on the state grid")
    return weights / total
