"""Measurable quantities built from the biphoton amplitudes.

Coincidence profiles, singles maps, collinear spectra and Hong-Ou-Mandel dips.
Intensities carry the package-wide normalization ``N = 1`` and a pump
spectrum normalized to unit power; type II results are incoherent sums of the
oe and eo channels.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .biphoton import DetectionSetup, FilterShape, channel_intensity, filter_value
from .errors import EmptyGrid, NoRing, TruncationWarning
from .numerics import chunked_map, compensated_sum, integrate_axis, sinc, trapezoid_weights
from .phasematching import (
    MU, CutConfiguration, Family, detuning_to_wavelength, ring_center_x, ring_radius_squared,
)

# -- ring geometry -------------------------------------------------------------

# Squared radii this close below zero are round-off at a beamlike or collinear root.
R2_ROUNDOFF = 1e-12


@dataclass(frozen=True)
class RingGeometry:
    """Emission ring in ``xi_d`` (``xi_s = 0``): radius, centre and outer half-width (rad)."""

    radius: float
    center: tuple
    half_width: float
    radius_squared: float


def ring_geometry(cut: CutConfiguration, nu: float = 0.0, channel: str | None = None) -> RingGeometry:
    """Closed-form ring of one channel.

    Raises:
        NoRing: the squared radius is negative (no phase-matched cone).
    """
    channel = channel or cut.family.channels[0]
    idx = cut.indices
    r2 = float(ring_radius_squared(idx, nu, channel))
    if -R2_ROUNDOFF < r2 < 0:
        r2 = 0.0
    if r2 < 0:
        raise NoRing(f"{channel} ring absent: R^2 = {r2:.3e}")
    radius = math.sqrt(r2)
    half = math.sqrt(r2 + 4 * math.pi * idx.n_bar_o / (cut.K * cut.L_z)) - radius
    return RingGeometry(radius, (float(ring_center_x(idx, nu, channel)), 0.0), half, r2)


def _explicit_nu_gain(setup: DetectionSetup, nu):
    """Filter gain at an explicitly requested ``nu``; a delta filter selects that ``nu``."""
    if setup.filter.shape in (FilterShape.NONE, FilterShape.DELTA):
        return 1.0
    return filter_value(setup.filter, nu)


def ring_profile_closed_form(cut: CutConfiguration, setup: DetectionSetup, xi_dx, xi_dy,
                             nu: float = 0.0, channel: str | None = None):
    """Opposite-scan ring profile ``|G E(0)|^2 sinc^2[K L (R^2 - |xi_d - c|^2) / 4 n]``."""
    channel = channel or cut.family.channels[0]
    idx = cut.indices
    r2 = ring_radius_squared(idx, nu, channel)
    cx = ring_center_x(idx, nu, channel)
    dist2 = (np.asarray(xi_dx) - cx) ** 2 + np.asarray(xi_dy) ** 2
    arg = cut.K * cut.L_z / (4 * idx.n_bar_o) * (r2 - dist2)
    G = _explicit_nu_gain(setup, nu)
    return (G * G) * setup.pump.intensity(0.0, 0.0) * sinc(arg) ** 2


# -- opposite-direction coincidences ---------------------------------------------


@dataclass
class CoincidenceScan:
    """Coincidence profile along a scan; ``channels`` maps channel to ``|Phi|^2``."""

    coords: dict
    channels: dict
    nu: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return sum(self.channels.values())


def _nu_integrated(cut, setup, x1, y1, x2, y2, nu, model):
    """Per-channel ``|Phi|^2`` at fixed ``nu`` or integrated over the setup's band."""
    if nu is not None:
        nodes = np.array([float(nu)])
    else:
        nodes = setup.nu_nodes()
    out = {}
    for ch in cut.family.channels:
        if nodes.size == 1:
            out[ch] = channel_intensity(cut, setup, ch, x1, y1, x2, y2, nodes[0], model,
                                        with_filter=not setup.filter.is_delta)
        else:
            stack = np.stack([channel_intensity(cut, setup, ch, x1, y1, x2, y2, v, model)
                              for v in nodes], axis=-1)
            out[ch] = integrate_axis(stack, nodes)
    return out, nodes


def coincidence_opposite(cut: CutConfiguration, setup: DetectionSetup, xi_dx, xi_dy=0.0,
                         nu: float | None = None, model: str = "full") -> CoincidenceScan:
    """Coincidences with detectors moved in opposite directions (``xi_s = 0``).

    With ``nu=None`` the profile is integrated over the setup's detuning band
    (a delta filter evaluates at its centre).
    """
    dx, dy = np.broadcast_arrays(np.asarray(xi_dx, float), np.asarray(xi_dy, float))
    chans, nodes = _nu_integrated(cut, setup, dx, dy, -dx, -dy, nu, model)
    return CoincidenceScan({"xi_dx": dx, "xi_dy": dy}, chans, nodes)


# -- same-direction coincidences (angular-spectrum transfer) ------------------------


def default_fixed_xi_d(cut: CutConfiguration) -> tuple[float, float]:
    """On-ring difference angle for type I (placed along y), zero for type II."""
    if cut.family is Family.TYPE_II:
        return 0.0, 0.0
    return 0.0, ring_geometry(cut, 0.0, "oo").radius


def coincidence_same(cut: CutConfiguration, setup: DetectionSetup, xi_sx, xi_sy=0.0,
                     fixed_xi_d=None, nu: float | None = None, model: str = "full") -> CoincidenceScan:
    """Coincidences with both detectors moved together at fixed ``xi_d``."""
    dx0, dy0 = default_fixed_xi_d(cut) if fixed_xi_d is None else fixed_xi_d
    sx, sy = np.broadcast_arrays(np.asarray(xi_sx, float), np.asarray(xi_sy, float))
    chans, nodes = _nu_integrated(cut, setup, sx + dx0, sy + dy0, sx - dx0, sy - dy0, nu, model)
    return CoincidenceScan({"xi_sx": sx, "xi_sy": sy}, chans, nodes)


def transfer_closed_form(cut: CutConfiguration, setup: DetectionSetup, xi_sx, xi_sy=0.0,
                         nu: float = 0.0, channel: str | None = None):
    """Monochromatic same-direction profile.

    Type I (on the ring): ``|G E(K xi_s)|^2 sinc^2(K L alpha_p xi_sx / 2)``.
    Type II (``xi_d = 0``): ``|G E(K xi_s)|^2 sinc^2{K L [mu + (alpha_p - alpha_bar/2) xi_sx] / 2}``.
    """
    channel = channel or cut.family.channels[0]
    idx = cut.indices
    sx, sy = np.asarray(xi_sx, float), np.asarray(xi_sy, float)
    if channel == "oo":
        arg = idx.alpha_p * sx
    else:
        arg = MU[channel](idx, nu) + (idx.alpha_p - idx.alpha_bar / 2) * sx
    G = _explicit_nu_gain(setup, nu)
    pump = setup.pump.intensity(cut.K * sx, cut.K * sy)
    return (G * G) * pump * sinc(cut.K * cut.L_z / 2 * arg) ** 2


def walkoff_slope(cut: CutConfiguration) -> float:
    """``m = (2 alpha_p - alpha_bar) / (n_bar_o - eta_bar)``: detuning per unit ``xi_sx``
    at which a type II channel is phase matched for ``xi_d = 0``."""
    idx = cut.indices
    return (2 * idx.alpha_p - idx.alpha_bar) / (idx.n_bar_o - idx.eta_bar)


def transfer_long_crystal(cut: CutConfiguration, setup: DetectionSetup, xi_sx, xi_sy=0.0):
    """Long-crystal limit of the type II band-integrated same-direction profile.

    Each sinc^2 collapses onto the detuning ``nu = -+ m xi_sx`` that phase-matches it,
    leaving ``|E(K xi_s)|^2 [G^2(-m xi_sx) + G^2(m xi_sx)]`` times the common
    factor ``4 pi / (K L (n_bar_o - eta_bar))``, the area of a sinc^2 whose
    argument has slope ``K L (n_bar_o - eta_bar) / 4`` in ``nu``. Assumes a
    collinear (``mu(0) = 0``) cut.
    """
    idx = cut.indices
    m = walkoff_slope(cut)
    sx, sy = np.asarray(xi_sx, float), np.asarray(xi_sy, float)
    g2 = filter_value(setup.filter, -m * sx) ** 2 + filter_value(setup.filter, m * sx) ** 2
    area = 4 * math.pi / (cut.K * cut.L_z * (idx.n_bar_o - idx.eta_bar))
    return setup.pump.intensity(cut.K * sx, cut.K * sy) * g2 * area


# -- singles -----------------------------------------------------------------------


@dataclass
class SinglesMap:
    xi1x: np.ndarray
    xi1y: np.ndarray
    nu: np.ndarray
    intensity: np.ndarray
    per_nu: np.ndarray | None = None
    xi2_points: tuple = (0, 0)
    truncation: float = 0.0


def _xi2_resolution(cut, half_window, xi_max, n_min=15, n_max=161):
    """Node counts for the xi2 window.

    ``sinc^2(u)`` is band-limited to ``|k| <= 2`` in ``u``, so with a local slope
    ``|du/dxi2| <= s`` the trapezoid rule is near exact once the step is below
    ``pi / 2s``; a 0.8 safety factor is applied.
    """
    idx = cut.indices
    curv = xi_max / idx.n_bar_o
    phase = cut.K * cut.L_z / 2
    slopes = (phase * ((abs(idx.alpha_p) + abs(idx.alpha_bar)) / 2 + curv), phase * curv)
    pts = []
    for slope in slopes:
        step = 0.8 * math.pi / (2 * max(slope, 1e-12))
        n = int(math.ceil(2 * half_window / step)) + 1
        pts.append(min(max(n, n_min), n_max) | 1)
    return tuple(pts)


def _singles_kernel(cut, setup, nodes, half_window, n2, model):
    """Return a function mapping a chunk of xi1 points to ``|Phi|^2`` integrated over xi2."""
    K = cut.K
    qcx, qcy = setup.pump.q_center()
    ux = np.linspace(-1.0, 1.0, n2[0])
    uy = np.linspace(-1.0, 1.0, n2[1])

    def kernel(chunk):
        x1 = chunk[:, 0][:, None, None]
        y1 = chunk[:, 1][:, None, None]
        out = np.zeros((len(chunk), nodes.size))
        for k, nu in enumerate(nodes):
            scale = half_window / (1 - nu)
            cx = -((1 + nu) * x1 - 2 * qcx / K) / (1 - nu)
            cy = -((1 + nu) * y1 - 2 * qcy / K) / (1 - nu)
            dxs, dys = ux * scale, uy * scale
            x2 = cx + dxs[None, :, None]
            y2 = cy + dys[None, None, :]
            tot = 0.0
            for ch in cut.family.channels:
                tot = tot + channel_intensity(cut, setup, ch, x1, y1, x2, y2, nu, model,
                                              with_filter=not setup.filter.is_delta)
            w = np.multiply.outer(trapezoid_weights(dxs), trapezoid_weights(dys))
            out[:, k] = np.tensordot(tot, w, axes=([1, 2], [0, 1]))
        return out

    return kernel


def singles_map(cut: CutConfiguration, setup: DetectionSetup, xi1x, xi1y, per_nu: bool = False,
                model: str = "full", window_sigmas: float = 5.0, xi2_points=None,
                workers: int = 1, chunk: int = 64, check_truncation: bool = True) -> SinglesMap:
    """Singles rate ``S(xi1) = int d^2 xi2 int dnu |Phi|^2`` on the grid ``xi1x x xi1y``.

    The pump spectrum pins ``xi2`` near ``-(1+nu) xi1 / (1-nu)``, so the xi2
    integral runs over a window of ``window_sigmas`` pump angular widths around
    that point. The window is checked by doubling it on a subsample of xi1
    points; a mass change above 1% emits :class:`TruncationWarning`.
    """
    xi1x = np.atleast_1d(np.asarray(xi1x, float))
    xi1y = np.atleast_1d(np.asarray(xi1y, float))
    if xi1x.size == 0 or xi1y.size == 0:
        raise EmptyGrid("singles map needs a non-empty xi1 grid")
    nodes = setup.nu_nodes()
    sig_q = max(setup.pump.q_sigma())
    half_window = window_sigmas * 2 * sig_q / cut.K
    xi_max = float(max(np.max(np.abs(xi1x)), np.max(np.abs(xi1y)))) + half_window
    n2 = tuple(xi2_points) if xi2_points is not None else _xi2_resolution(cut, half_window, xi_max)

    X, Y = np.meshgrid(xi1x, xi1y, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    kernel = _singles_kernel(cut, setup, nodes, half_window, n2, model)
    resolved = chunked_map(kernel, pts, chunk=chunk, workers=workers)

    if nodes.size == 1:
        total = resolved[:, 0]
    else:
        total = resolved @ trapezoid_weights(nodes)

    truncation = 0.0
    if check_truncation:
        stride = max(len(pts) // 200, 1)
        sub = pts[::stride]
        wide = _singles_kernel(cut, setup, nodes, 2 * half_window, tuple(2 * n - 1 for n in n2), model)(sub)
        base = resolved[::stride]
        m_base, m_wide = compensated_sum(base), compensated_sum(wide)
        if m_wide > 0:
            truncation = abs(m_wide - m_base) / m_wide
        if truncation > 0.01:
            warnings.warn(f"xi2 window loses {100 * truncation:.2f}% of the singles mass",
                          TruncationWarning, stacklevel=2)
    shape = (xi1x.size, xi1y.size)
    return SinglesMap(xi1x, xi1y, nodes, total.reshape(shape),
                      resolved.reshape(shape + (nodes.size,)) if per_nu else None, n2, truncation)


# -- collinear spectrum ------------------------------------------------------------


@dataclass
class CollinearSpectrum:
    dtheta: np.ndarray
    nu: np.ndarray
    wavelength_um: np.ndarray
    theta_ref: float
    intensity: dict
    loci: dict = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        return sum(self.intensity.values())


def _collinear_loci(idx, channel):
    if channel == "oo":
        ratio = (idx.eta_p - idx.n_bar_o) / (idx.n_bar_o * idx.a)
        if ratio < 0:
            return []
        root = math.sqrt(ratio)
        return [-root, root] if root > 0 else [0.0]
    slope = (idx.n_bar_o - idx.eta_bar) / 2
    mu0 = MU[channel](idx, 0.0)
    return [-mu0 / slope if channel == "oe" else mu0 / slope]


def collinear_spectrum(cut: CutConfiguration, nu_grid, dtheta_grid=(0.0,)) -> CollinearSpectrum:
    """``sinc^2(K L f(0, 0, nu) / 2)`` per channel over ``(delta theta, nu)``.

    ``dtheta_grid`` holds deviations (rad) from ``cut.theta``. ``loci`` maps each
    channel to the detunings where the collinear mismatch vanishes, per row.
    """
    nu = np.asarray(nu_grid, float)
    dth = np.atleast_1d(np.asarray(dtheta_grid, float))
    intensity = {ch: np.zeros((dth.size, nu.size)) for ch in cut.family.channels}
    loci = {ch: [] for ch in cut.family.channels}
    for i, d in enumerate(dth):
        c = cut.with_theta(cut.theta + d)
        for ch in cut.family.channels:
            f = MU[ch](c.indices, nu)
            intensity[ch][i] = sinc(c.K * c.L_z / 2 * f) ** 2
            loci[ch].append(_collinear_loci(c.indices, ch))
    return CollinearSpectrum(dth, nu, detuning_to_wavelength(nu, cut.lambda_p), cut.theta, intensity, loci)


# -- Hong-Ou-Mandel -------------------------------------------------------------


@dataclass
class HomCurve:
    """Coincidence probability vs path-length difference ``delta_l = c delta_tau`` (um)."""

    delays: np.ndarray
    probabilities: np.ndarray
    nu: np.ndarray = None
    spectrum: np.ndarray = None


def default_hom_angles(cut: CutConfiguration):
    """Symmetric collection angles on the degenerate emission ring.

    Type I: ``xi1 = (0, R)``, ``xi2 = -xi1`` (perpendicular to the walk-off plane).
    Type II: ``xi1 = c_oe + (0, R_oe)``, ``xi2 = -xi1``; at the beamlike cut this is
    the centre of the oe spot.
    """
    ch = cut.family.channels[0]
    ring = ring_geometry(cut, 0.0, ch)
    xi1 = (ring.center[0], ring.radius)
    return xi1, (-xi1[0], -xi1[1])


def hom_spectrum(cut: CutConfiguration, setup: DetectionSetup, xi1, xi2, model: str = "full"):
    """Two-photon spectrum ``sum_channels |Phi(xi1, xi2, nu)|^2`` on the setup's nodes."""
    nodes = setup.nu_nodes()
    spectrum = np.zeros(nodes.size)
    for ch in cut.family.channels:
        spectrum += channel_intensity(cut, setup, ch, xi1[0], xi1[1], xi2[0], xi2[1], nodes, model)
    return nodes, spectrum


def hom_dip(cut: CutConfiguration, setup: DetectionSetup, xi1=None, xi2=None, delays=None,
            model: str = "full") -> HomCurve:
    """``P_c(dl) = [1 - Re A(dl) / A(0)] / 2`` with ``A(dl) = int S(nu) exp(i K nu dl) dnu``.

    The correlation of the time-domain amplitude equals the transform of the
    power spectrum, so no time grid is needed and ``P_c(0) = 0`` exactly.
    """
    if xi1 is None or xi2 is None:
        xi1, xi2 = default_hom_angles(cut)
    nodes, spectrum = hom_spectrum(cut, setup, xi1, xi2, model)
    delays = np.asarray(delays if delays is not None else np.linspace(-50, 50, 1001), float)
    if nodes.size == 1:
        weighted = spectrum
    else:
        weighted = spectrum * trapezoid_weights(nodes)
    a0 = compensated_sum(weighted)
    if not a0 > 0:
        raise EmptyGrid("two-photon spectrum vanishes at the chosen collection angles")
    phase = cut.K * np.multiply.outer(delays, nodes)
    corr = np.array([compensated_sum(row) for row in np.cos(phase) * weighted])
    prob = 0.5 * (1 - corr / a0)
    return HomCurve(delays, prob, nodes, spectrum)


# -- profile analysis helpers ----------------------------------------------------


def _parabolic_vertex(x, y, i):
    """Vertex abscissa of the parabola through points ``i-1, i, i+1``."""
    if i <= 0 or i >= len(x) - 1:
        return float(x[i])
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    B = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if A == 0:
        return float(x1)
    return float(-B / (2 * A))


def peak_location(x, y) -> float:
    """Sub-grid location of the global maximum (parabolic interpolation)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    return _parabolic_vertex(x, y, int(np.argmax(y)))


def local_peaks(x, y, rel_height: float = 0.1) -> list[float]:
    """Sub-grid locations of local maxima above ``rel_height * max(y)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    top = rel_height * np.max(y)
    idx = [i for i in range(1, len(y) - 1) if y[i] >= y[i - 1] and y[i] > y[i + 1] and y[i] >= top]
    return [_parabolic_vertex(x, y, i) for i in idx]


def first_minimum_after(x, y, start: float) -> float:
    """First local minimum of ``y`` at ``x > start``, refined by a parabola.

    Near a double zero ``|sinc|^2`` is locally quadratic, so the parabolic
    vertex lands on the zero.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    i = int(np.searchsorted(x, start, side="right"))
    while i < len(y) - 1:
        if y[i] <= y[i - 1] and y[i] <= y[i + 1]:
            return _parabolic_vertex(x, y, i)
        i += 1
    raise EmptyGrid("no local minimum found on the scan")


def fwhm(x, y) -> float:
    """Full width at half maximum of a single-peaked profile (linear interpolation)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    i = int(np.argmax(y))
    half = y[i] / 2
    return _crossing_right(x, y, i, half) - _crossing_left(x, y, i, half)


def _crossing_right(x, y, i, level):
    j = i
    while j < len(y) - 1 and y[j + 1] > level:
        j += 1
    if j == len(y) - 1:
        raise EmptyGrid("profile does not fall below the level on the right")
    return x[j] + (level - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j])


def _crossing_left(x, y, i, level):
    j = i
    while j > 0 and y[j - 1] > level:
        j -= 1
    if j == 0:
        raise EmptyGrid("profile does not fall below the level on the left")
    return x[j - 1] + (level - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])


def right_half_width(x, y, peak: float) -> float:
    """Distance from ``peak`` to the half-maximum crossing on its right."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    j = int(np.argmin(np.abs(x - peak)))
    return float(_crossing_right(x, y, j, y[j] / 2) - peak)


def dip_fwhm(curve: HomCurve) -> float:
    """Full width of the dip at ``P_c = 0.25`` (half depth of an ideal dip)."""
    return fwhm(curve.delays, 0.5 - curve.probabilities)


def gaussian_fit_width(x, y) -> float:
    """RMS width ``sigma`` of the least-squares Gaussian ``A exp(-(x-x0)^2 / 2 sigma^2)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    scale = np.max(y)
    if not scale > 0:
        raise EmptyGrid("cannot fit a Gaussian to an all-zero profile")
    yn = y / scale
    w = compensated_sum(yn)
    x0 = compensated_sum(x * yn) / w
    s0 = math.sqrt(max(compensated_sum((x - x0) ** 2 * yn) / w, (x[1] - x[0]) ** 2))

    def model(xx, amp, mu, sig):
        return amp * np.exp(-(xx - mu) ** 2 / (2 * sig * sig))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, _ = curve_fit(model, x, yn, p0=(1.0, x0, s0), maxfev=20000)
    return abs(float(popt[2]))


def pump_angular_sigma(cut: CutConfiguration, setup: DetectionSetup) -> tuple[float, float]:
    """RMS width (rad) of ``|E(K xi_s)|^2`` along x and y."""
    sx, sy = setup.pump.q_sigma()
    return sx / cut.K, sy / cut.K
