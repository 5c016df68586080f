"""Longitudinal mismatch functions and phase-matching angles.

All mismatch functions are dimensionless (the longitudinal mismatch divided
by the pump wavenumber ``K = 2 pi / lambda_p``) and broadcast over numpy
arrays of angles and detunings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .crystal import CrystalDispersion, DerivedIndexSet, derived_index_set, sellmeier_index
from .errors import NoRoot, NoSignChange, OutOfModel, OutOfRange
from .numerics import find_root, scan_brackets

MAX_DETUNING = 0.15
MAX_ANGLE = 0.3
ROOT_XTOL = 1e-13


class Family(str, Enum):
    TYPE_I = "I"
    TYPE_II = "II"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("TYPE", "").replace("_", "").strip()
        if key in ("I", "1", "OO", "IOO"):
            return cls.TYPE_I
        if key in ("II", "2", "OE", "EO"):
            return cls.TYPE_II
        raise ValueError(f"unknown phase-matching family {value!r}")

    @property
    def channels(self) -> tuple[str, ...]:
        return ("oo",) if self is Family.TYPE_I else ("oe", "eo")


@dataclass(frozen=True)
class CutConfiguration:
    """A crystal slab cut at ``theta`` and pumped at ``lambda_p``.

    Lengths are in micrometres, ``theta`` in radians.
    """

    crystal: CrystalDispersion
    lambda_p: float
    theta: float
    L_z: float
    z_c: float = 0.0
    family: Family = Family.TYPE_I

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if not self.L_z > 0:
            raise OutOfRange(f"crystal length must be positive, got {self.L_z} um")
        if not 0.0 < self.theta < math.pi / 2:
            raise OutOfRange(f"theta must lie in (0, pi/2), got {self.theta}")
        sellmeier_index(self.crystal, "e", self.lambda_p)

    @property
    def K(self) -> float:
        """Pump vacuum wavenumber in 1/um."""
        return 2 * math.pi / self.lambda_p

    @cached_property
    def indices(self) -> DerivedIndexSet:
        return derived_index_set(self.crystal, self)

    def with_theta(self, theta: float) -> "CutConfiguration":
        return CutConfiguration(self.crystal, self.lambda_p, theta, self.L_z, self.z_c, self.family)


def _check_point(nu, *angles):
    if np.any(np.abs(nu) >= MAX_DETUNING):
        raise OutOfModel(f"|nu| must stay below {MAX_DETUNING}")
    for a in angles:
        if np.any(np.abs(a) >= MAX_ANGLE):
            raise OutOfModel(f"output angles must stay below {MAX_ANGLE} rad")


@dataclass(frozen=True)
class AngularPoint:
    """Output angles ``xi1 = (x, y)``, ``xi2 = (x, y)`` in rad and detuning ``nu``.

    Components may be numpy arrays; they broadcast together.
    """

    xi1: tuple
    xi2: tuple
    nu: object = 0.0

    def __post_init__(self):
        _check_point(self.nu, *self.xi1, *self.xi2)

    def to_sumdiff(self) -> "SumDiffPoint":
        (x1, y1), (x2, y2) = self.xi1, self.xi2
        return SumDiffPoint(((x1 + x2) / 2, (y1 + y2) / 2), ((x1 - x2) / 2, (y1 - y2) / 2), self.nu)


@dataclass(frozen=True)
class SumDiffPoint:
    """Half-sum ``xi_s`` and half-difference ``xi_d`` of the two output angles."""

    xi_s: tuple
    xi_d: tuple
    nu: object = 0.0

    def __post_init__(self):
        _check_point(self.nu, *self.xi_s, *self.xi_d)

    def to_angular(self) -> AngularPoint:
        (sx, sy), (dx, dy) = self.xi_s, self.xi_d
        return AngularPoint((sx + dx, sy + dy), (sx - dx, sy - dy), self.nu)


# -- collinear index mismatches ---------------------------------------------

def _mu_oo(idx: DerivedIndexSet, nu):
    return idx.n_bar_o * (1 + idx.a * nu * nu) - idx.eta_p


def _mu_oe(idx: DerivedIndexSet, nu):
    return (idx.n_bar_o + idx.eta_bar) / 2 - idx.eta_p + nu * (idx.n_bar_o - idx.eta_bar) / 2


def _mu_eo(idx: DerivedIndexSet, nu):
    return _mu_oe(idx, -nu)


def mu_oo(cut: CutConfiguration, nu=0.0):
    """Type I collinear index mismatch (even in ``nu``)."""
    return _mu_oo(cut.indices, nu)


def mu_oe(cut: CutConfiguration, nu=0.0):
    return _mu_oe(cut.indices, nu)


def mu_eo(cut: CutConfiguration, nu=0.0):
    return _mu_eo(cut.indices, nu)


MU = {"oo": _mu_oo, "oe": _mu_oe, "eo": _mu_eo}


# -- mismatch in output-angle coordinates ------------------------------------

def _f_oo(idx, x1, y1, x2, y2, nu):
    p, m = 1 + nu, 1 - nu
    sx = p * x1 + m * x2
    sy = p * y1 + m * y2
    quad = p * (x1 * x1 + y1 * y1) + m * (x2 * x2 + y2 * y2) - idx.b / 2 * sx * sx - idx.g / 2 * sy * sy
    return _mu_oo(idx, nu) + idx.alpha_p / 2 * sx - quad / (4 * idx.n_bar_o)


def _f_oe(idx, x1, y1, x2, y2, nu):
    p, m = 1 + nu, 1 - nu
    sx = p * x1 + m * x2
    sy = p * y1 + m * y2
    quad = (p * (x1 * x1 + y1 * y1) + m * (idx.b_bar * x2 * x2 + idx.g_bar * y2 * y2)
            - idx.b / 2 * sx * sx - idx.g / 2 * sy * sy)
    lin = idx.alpha_p / 2 * p * x1 + (idx.alpha_p - idx.alpha_bar) / 2 * m * x2
    return _mu_oe(idx, nu) + lin - quad / (4 * idx.n_bar_o)


def _f_eo(idx, x1, y1, x2, y2, nu):
    p, m = 1 + nu, 1 - nu
    sx = p * x1 + m * x2
    sy = p * y1 + m * y2
    quad = (p * (idx.b_bar * x1 * x1 + idx.g_bar * y1 * y1) + m * (x2 * x2 + y2 * y2)
            - idx.b / 2 * sx * sx - idx.g / 2 * sy * sy)
    lin = (idx.alpha_p - idx.alpha_bar) / 2 * p * x1 + idx.alpha_p / 2 * m * x2
    return _mu_eo(idx, nu) + lin - quad / (4 * idx.n_bar_o)


F_ANGULAR = {"oo": _f_oo, "oe": _f_oe, "eo": _f_eo}


def _unpack(pt: AngularPoint):
    (x1, y1), (x2, y2) = pt.xi1, pt.xi2
    return x1, y1, x2, y2, pt.nu


def f_oo(cut: CutConfiguration, pt: AngularPoint):
    return _f_oo(cut.indices, *_unpack(pt))


def f_oe(cut: CutConfiguration, pt: AngularPoint):
    return _f_oe(cut.indices, *_unpack(pt))


def f_eo(cut: CutConfiguration, pt: AngularPoint):
    return _f_eo(cut.indices, *_unpack(pt))


# -- mismatch in sum/difference coordinates ----------------------------------

def _F_oo(idx, b, g, sx, sy, dx, dy, nu):
    quad = ((1 - b) * sx * sx + (1 - g) * sy * sy + dx * dx + dy * dy
            + (2 - b) * nu * sx * dx + (2 - g) * nu * sy * dy)
    return _mu_oo(idx, nu) + idx.alpha_p * (sx + nu * dx) - quad / (2 * idx.n_bar_o)


def _F_oo_exact(idx, sx, sy, dx, dy, nu):
    return _F_oo(idx, idx.b, idx.g, sx, sy, dx, dy, nu)


def _F_oo_simplified(idx, sx, sy, dx, dy, nu):
    return _F_oo(idx, 1.0, 1.0, sx, sy, dx, dy, nu)


def _F_oe_simplified(idx, sx, sy, dx, dy, nu):
    ap, ab = idx.alpha_p, idx.alpha_bar
    return (_mu_oe(idx, nu) + (ap - (1 + nu) * ab / 2) * sx + (nu * ap + (1 - nu) * ab / 2) * dx
            - (dx * dx + dy * dy) / (2 * idx.n_bar_o))


def _F_eo_simplified(idx, sx, sy, dx, dy, nu):
    ap, ab = idx.alpha_p, idx.alpha_bar
    return (_mu_eo(idx, nu) + (ap - (1 - nu) * ab / 2) * sx + (nu * ap - (1 + nu) * ab / 2) * dx
            - (dx * dx + dy * dy) / (2 * idx.n_bar_o))


F_SUMDIFF = {"oo": _F_oo_simplified, "oe": _F_oe_simplified, "eo": _F_eo_simplified}


def _unpack_sd(pt: SumDiffPoint):
    (sx, sy), (dx, dy) = pt.xi_s, pt.xi_d
    return sx, sy, dx, dy, pt.nu


def F_oo_exact(cut: CutConfiguration, pt: SumDiffPoint):
    """Type I mismatch in sum/difference angles, curvature factors ``b``, ``g`` kept."""
    return _F_oo_exact(cut.indices, *_unpack_sd(pt))


def F_oo_simplified(cut: CutConfiguration, pt: SumDiffPoint):
    """Type I mismatch with ``b = g = 1``; at ``nu = 0`` it is ``mu + alpha_p xi_sx - xi_d^2/2n``."""
    return _F_oo_simplified(cut.indices, *_unpack_sd(pt))


def F_oe_simplified(cut: CutConfiguration, pt: SumDiffPoint):
    return _F_oe_simplified(cut.indices, *_unpack_sd(pt))


def F_eo_simplified(cut: CutConfiguration, pt: SumDiffPoint):
    return _F_eo_simplified(cut.indices, *_unpack_sd(pt))


# -- ring closed forms shared with the beamlike solver ----------------------

def ring_radius_squared(idx: DerivedIndexSet, nu, channel: str):
    """Squared radius of the emission ring in ``xi_d`` for ``xi_s = 0``.

    Completing the square of the simplified mismatch gives
    ``R^2 = 2 n_bar_o mu + |c|^2`` for every channel.
    """
    return 2 * idx.n_bar_o * MU[channel](idx, nu) + ring_center_x(idx, nu, channel) ** 2


def ring_center_x(idx: DerivedIndexSet, nu, channel: str):
    n, ap, ab = idx.n_bar_o, idx.alpha_p, idx.alpha_bar
    if channel == "oo":
        return n * ap * nu
    half = 0.5 if channel == "oe" else -0.5
    return n * ab * (half + nu * (ap / ab - 0.5))


# -- phase-matching angles ----------------------------------------------------

SCAN_LO_DEG, SCAN_HI_DEG, SCAN_STEP_DEG = 5.0, 85.0, 0.5


def _solve_theta(fn, bracket_deg, step_deg, what):
    lo, hi = (math.radians(v) for v in bracket_deg)
    brackets = scan_brackets(fn, lo, hi, math.radians(step_deg))
    if not brackets:
        raise NoRoot(f"no {what} angle in [{bracket_deg[0]}, {bracket_deg[1]}] deg")
    a, b = brackets[0]
    try:
        return find_root(fn, a, b, xtol=ROOT_XTOL)
    except NoSignChange as exc:
        raise NoRoot(str(exc)) from exc


def solve_collinear_angle(crystal: CrystalDispersion, lambda_p: float, family, nu: float = 0.0,
                          bracket_deg=(SCAN_LO_DEG, SCAN_HI_DEG), step_deg: float = SCAN_STEP_DEG) -> float:
    """Optic-axis angle (rad) where the collinear index mismatch vanishes.

    Type I solves ``mu_oo(theta, nu) = 0``; type II solves ``mu_oe(theta, nu) = 0``,
    whose ``nu = 0`` value is the channel-independent part.
    """
    family = Family.parse(family)
    channel = "oo" if family is Family.TYPE_I else "oe"
    base = CutConfiguration(crystal, lambda_p, math.radians(45.0), 1.0, 0.0, family)

    def mismatch(theta):
        return MU[channel](base.with_theta(theta).indices, nu)

    return _solve_theta(mismatch, bracket_deg, step_deg, f"type {family.value} collinear")


def solve_beamlike_angle(crystal: CrystalDispersion, lambda_p: float,
                         bracket_deg=(SCAN_LO_DEG, SCAN_HI_DEG), step_deg: float = SCAN_STEP_DEG) -> float:
    """Type II angle (rad) where both degenerate rings shrink to points."""
    base = CutConfiguration(crystal, lambda_p, math.radians(45.0), 1.0, 0.0, Family.TYPE_II)

    def radius2(theta):
        return ring_radius_squared(base.with_theta(theta).indices, 0.0, "oe")

    return _solve_theta(radius2, bracket_deg, step_deg, "beamlike")


def wavelength_to_detuning(lambda1: float, lambda_p: float):
    """Relative detuning of a down-converted photon of wavelength ``lambda1``."""
    lambda1 = np.asarray(lambda1, dtype=float)
    if np.any(lambda1 <= lambda_p):
        raise OutOfRange("down-converted wavelength must exceed the pump wavelength")
    nu = 2 * lambda_p / lambda1 - 1
    if np.any(np.abs(nu) >= MAX_DETUNING):
        raise OutOfModel(f"|nu| must stay below {MAX_DETUNING}, got {nu}")
    return float(nu) if nu.ndim == 0 else nu


def detuning_to_wavelength(nu, lambda_p: float):
    return 2 * lambda_p / (1 + nu)


def bandwidth_nm_to_detuning(delta_lambda_nm: float, lambda_deg_um: float) -> float:
    """Full width in ``nu`` of a filter of width ``delta_lambda_nm`` at degeneracy."""
    return 2 * (delta_lambda_nm * 1e-3) / lambda_deg_um
