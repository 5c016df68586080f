"""Refractive indices and anisotropy parameters of uniaxial crystals.

Wavelengths are in micrometres and angles in radians. The optic axis lies in
the xz plane at angle ``theta`` from z, tilted towards +x, so the walk-off
``alpha`` is non-negative for negative uniaxial crystals (``n_e < n_o``).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import ConfigError, OutOfRange, ParaxialViolation, PoleProximity, SellmeierRangeWarning

HARD_WINDOW_UM = (0.2, 3.0)
POLE_GUARD = 1e-6
PARAXIAL_LIMIT = 0.2


class SellmeierForm(str, Enum):
    BBO = "BBO-form"          # A + B/(l^2 - C) - D l^2
    LIIO3 = "LiIO3-form"      # A + B l^2/(l^2 - C) - D l^2


class Polarization(str, Enum):
    ORDINARY = "o"
    EXTRAORDINARY = "e"

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("o", "ord", "ordinary"):
            return cls.ORDINARY
        if key in ("e", "ext", "extraordinary"):
            return cls.EXTRAORDINARY
        raise ValueError(f"unknown polarization {value!r}")


class SellmeierCoefficients(NamedTuple):
    A: float
    B: float
    C: float
    D: float


@dataclass(frozen=True)
class CrystalDispersion:
    name: str
    sellmeier_o: SellmeierCoefficients
    sellmeier_e: SellmeierCoefficients
    sellmeier_form: SellmeierForm
    valid_range_um: tuple = (0.3, 1.5)

    def coefficients(self, pol) -> SellmeierCoefficients:
        pol = Polarization.parse(pol)
        return self.sellmeier_o if pol is Polarization.ORDINARY else self.sellmeier_e

    def n_o(self, lam):
        return sellmeier_index(self, Polarization.ORDINARY, lam)

    def n_e(self, lam):
        return sellmeier_index(self, Polarization.EXTRAORDINARY, lam)


# -- database -----------------------------------------------------------------

def _crystal_from_record(rec: dict) -> CrystalDispersion:
    try:
        form = SellmeierForm(rec["form"])
        o = SellmeierCoefficients(*map(float, rec["o"]))
        e = SellmeierCoefficients(*map(float, rec["e"]))
        lo, hi = map(float, rec.get("valid_range_um", (0.3, 1.5)))
        return CrystalDispersion(rec["name"], o, e, form, (lo, hi))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad crystal record {rec.get('name', '?')!r}: {exc}") from exc


def load_crystal_database(path: str | Path | None = None) -> dict[str, CrystalDispersion]:
    """Read a crystal database; keys are lower-cased names and aliases."""
    if path is None:
        text = resources.files("twophoton").joinpath("data/crystals.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"crystal database is not valid JSON: {exc}") from exc
    db = {}
    for rec in doc.get("crystals", []):
        crystal = _crystal_from_record(rec)
        for key in [rec["name"], *rec.get("aliases", [])]:
            db[key.lower()] = crystal
    return db


@lru_cache(maxsize=None)
def _builtin_db():
    return load_crystal_database()


def get_crystal(name: str, database: dict | None = None) -> CrystalDispersion:
    db = database if database is not None else _builtin_db()
    try:
        return db[name.lower()]
    except KeyError:
        known = sorted({c.name for c in db.values()})
        raise ConfigError(f"unknown crystal {name!r}; known: {', '.join(known)}") from None


BBO = get_crystal("BBO")
LIIO3 = get_crystal("LiIO3")


# -- Sellmeier ----------------------------------------------------------------

def _check_wavelength(crystal: CrystalDispersion, coef: SellmeierCoefficients, lam):
    lam = np.asarray(lam, dtype=float)
    lo, hi = HARD_WINDOW_UM
    if np.any((lam <= lo) | (lam >= hi)):
        raise OutOfRange(f"wavelength outside ({lo}, {hi}) um: {lam}")
    if np.any(np.abs(lam * lam - coef.C) < POLE_GUARD):
        raise PoleProximity(f"wavelength within {POLE_GUARD} um^2 of the Sellmeier pole at {coef.C}")
    vlo, vhi = crystal.valid_range_um
    if np.any((lam < vlo) | (lam > vhi)):
        warnings.warn(f"{crystal.name}: wavelength outside validity range [{vlo}, {vhi}] um",
                      SellmeierRangeWarning, stacklevel=3)
    return lam


def _n_squared(form: SellmeierForm, coef: SellmeierCoefficients, lam):
    l2 = lam * lam
    if form is SellmeierForm.BBO:
        return coef.A + coef.B / (l2 - coef.C) - coef.D * l2
    return coef.A + coef.B * l2 / (l2 - coef.C) - coef.D * l2


def _dn_squared_dlam(form: SellmeierForm, coef: SellmeierCoefficients, lam):
    l2 = lam * lam
    denom = (l2 - coef.C) ** 2
    if form is SellmeierForm.BBO:
        return -2 * coef.B * lam / denom - 2 * coef.D * lam
    return -2 * coef.B * coef.C * lam / denom - 2 * coef.D * lam


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def sellmeier_index(crystal: CrystalDispersion, pol, lam):
    """Principal refractive index ``n_o`` or ``n_e`` at vacuum wavelength ``lam`` (um)."""
    coef = crystal.coefficients(pol)
    lam = _check_wavelength(crystal, coef, lam)
    return _scalar(np.sqrt(_n_squared(crystal.sellmeier_form, coef, lam)))


def sellmeier_slope(crystal: CrystalDispersion, pol, lam):
    """Analytic ``dn/dlambda`` in 1/um."""
    coef = crystal.coefficients(pol)
    lam = _check_wavelength(crystal, coef, lam)
    n = np.sqrt(_n_squared(crystal.sellmeier_form, coef, lam))
    return _scalar(_dn_squared_dlam(crystal.sellmeier_form, coef, lam) / (2 * n))


# -- anisotropy ---------------------------------------------------------------

@dataclass(frozen=True)
class AnisotropyParams:
    """Ray-surface parameters of an extraordinary wave propagating along z.

    ``alpha`` is the walk-off slope, ``beta``/``gamma`` the x/y curvature
    factors and ``eta`` the effective extraordinary index.
    """

    alpha: float
    beta: float
    gamma: float
    eta: float
    theta: float
    wavelength: float

    def kappa(self, omega: float) -> float:
        """On-axis wavenumber ``eta*omega/c`` (1/m for ``omega`` in rad/s)."""
        return self.eta * omega / SPEED_OF_LIGHT


def _aniso_from_indices(no, ne, theta):
    s, c = math.sin(theta), math.cos(theta)
    denom = no * no * s * s + ne * ne * c * c
    alpha = (no * no - ne * ne) * s * c / denom
    beta = (no * ne / denom) ** 2
    gamma = no * no / denom
    eta = no * ne / math.sqrt(denom)
    return alpha, beta, gamma, eta


def _check_theta(theta):
    if not 0.0 <= theta <= math.pi / 2 + 1e-15:
        raise OutOfRange(f"optic-axis angle must lie in [0, pi/2] rad, got {theta}")


def anisotropy(crystal: CrystalDispersion, theta: float, lam: float) -> AnisotropyParams:
    _check_theta(theta)
    no = sellmeier_index(crystal, Polarization.ORDINARY, lam)
    ne = sellmeier_index(crystal, Polarization.EXTRAORDINARY, lam)
    alpha, beta, gamma, eta = _aniso_from_indices(no, ne, theta)
    return AnisotropyParams(alpha, beta, gamma, eta, float(theta), float(lam))


def eta_index(crystal: CrystalDispersion, theta: float, lam: float) -> float:
    return anisotropy(crystal, theta, lam).eta


def eta_slope(crystal: CrystalDispersion, theta: float, lam: float) -> float:
    """Analytic ``d eta / d lambda`` at fixed ``theta`` (1/um)."""
    _check_theta(theta)
    no = sellmeier_index(crystal, "o", lam)
    ne = sellmeier_index(crystal, "e", lam)
    dno = sellmeier_slope(crystal, "o", lam)
    dne = sellmeier_slope(crystal, "e", lam)
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    d32 = (no * no * s2 + ne * ne * c2) ** 1.5
    return (ne ** 3 * c2 * dno + no ** 3 * s2 * dne) / d32


def dispersion_factor(crystal: CrystalDispersion, pol_or_eta, lambda_deg: float,
                      theta: float | None = None) -> float:
    """Relative dispersion ``(omega/n) dn/domega`` at the degenerate frequency.

    With ``omega = 2 pi c / lambda`` this equals ``-(lambda/n) dn/dlambda``.
    ``pol_or_eta`` is ``"ordinary"`` for ``a`` or ``"eta"`` for ``a'`` (which
    needs ``theta``).
    """
    if str(pol_or_eta).lower() in ("eta", "eta-at-theta"):
        if theta is None:
            raise ValueError("theta is required for the eta dispersion factor")
        n = eta_index(crystal, theta, lambda_deg)
        dn = eta_slope(crystal, theta, lambda_deg)
    else:
        pol = Polarization.parse(pol_or_eta)
        n = sellmeier_index(crystal, pol, lambda_deg)
        dn = sellmeier_slope(crystal, pol, lambda_deg)
    return -lambda_deg * dn / n


@dataclass(frozen=True)
class DerivedIndexSet:
    """Constants entering the mismatch functions of one crystal cut.

    Barred quantities are evaluated at the degenerate wavelength ``2*lambda_p``,
    ``*_p`` quantities at the pump wavelength.
    """

    n_bar_o: float
    eta_bar: float
    eta_p: float
    a: float
    a_prime: float
    b: float
    g: float
    b_bar: float
    g_bar: float
    alpha_p: float
    alpha_bar: float
    beta_p: float
    gamma_p: float
    beta_bar: float
    gamma_bar: float


def derived_index_set(crystal: CrystalDispersion, cut) -> DerivedIndexSet:
    """Evaluate all cut constants; ``cut`` needs ``lambda_p`` (um) and ``theta`` (rad)."""
    lam_p, theta = cut.lambda_p, cut.theta
    lam_d = 2 * lam_p
    pump = anisotropy(crystal, theta, lam_p)
    down = anisotropy(crystal, theta, lam_d)
    n_bar = sellmeier_index(crystal, "o", lam_d)
    return DerivedIndexSet(
        n_bar_o=n_bar,
        eta_bar=down.eta,
        eta_p=pump.eta,
        a=dispersion_factor(crystal, "ordinary", lam_d),
        a_prime=dispersion_factor(crystal, "eta", lam_d, theta),
        b=pump.beta * n_bar / pump.eta,
        g=pump.gamma * n_bar / pump.eta,
        b_bar=down.beta * n_bar / down.eta,
        g_bar=down.gamma * n_bar / down.eta,
        alpha_p=pump.alpha,
        alpha_bar=down.alpha,
        beta_p=pump.beta,
        gamma_p=pump.gamma,
        beta_bar=down.beta,
        gamma_bar=down.gamma,
    )


def angular_frequency(lam_um):
    return 2 * math.pi * SPEED_OF_LIGHT / (np.asarray(lam_um) * 1e-6)


def paraxial_kz(params: AnisotropyParams, q, omega: float):
    """Paraxial longitudinal wavenumber of an extraordinary plane wave.

    ``q = (q_x, q_y)`` must use the same length unit as ``c/omega`` (1/m for
    ``omega`` in rad/s).
    """
    qx, qy = (np.asarray(v, dtype=float) for v in q)
    kappa = params.kappa(omega)
    if np.any(np.hypot(qx, qy) / kappa > PARAXIAL_LIMIT):
        warnings.warn(f"|q|/kappa exceeds {PARAXIAL_LIMIT}", ParaxialViolation, stacklevel=2)
    kz = kappa - params.alpha * qx - (params.beta * qx * qx + params.gamma * qy * qy) / (2 * kappa)
    return _scalar(kz)
