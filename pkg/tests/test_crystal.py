import json
import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twophoton.crystal import (
    BBO, LIIO3, Polarization, SellmeierForm, anisotropy, angular_frequency, derived_index_set,
    dispersion_factor, eta_index, eta_slope, get_crystal, load_crystal_database, paraxial_kz,
    sellmeier_index, sellmeier_slope,
)
from twophoton.errors import ConfigError, OutOfRange, ParaxialViolation, PoleProximity, SellmeierRangeWarning

LAMBDAS = st.floats(min_value=0.3, max_value=1.5)
THETAS = st.floats(min_value=0.0, max_value=math.pi / 2)


def _mp_index(form, coef, lam):
    """Independent 40-digit evaluation of a Sellmeier form."""
    mpmath.mp.dps = 40
    A, B, C, D = (mpmath.mpf(str(c)) for c in coef)
    L2 = mpmath.mpf(str(lam)) ** 2
    if form == "BBO-form":
        n2 = A + B / (L2 - C) - D * L2
    else:
        n2 = A + B * L2 / (L2 - C) - D * L2
    return float(mpmath.sqrt(n2))


@pytest.mark.parametrize("crystal, pol, form, coef", [
    (BBO, "o", "BBO-form", (2.7359, 0.01878, 0.01822, 0.01354)),
    (BBO, "e", "BBO-form", (2.3753, 0.01224, 0.01667, 0.01516)),
    (LIIO3, "o", "LiIO3-form", (2.083648, 1.332068, 0.035306, 0.008525)),
    (LIIO3, "e", "LiIO3-form", (1.673463, 1.245229, 0.028224, 0.003641)),
])
def test_index_matches_high_precision_oracle(crystal, pol, form, coef):
    assert sellmeier_index(crystal, pol, 0.702) == pytest.approx(_mp_index(form, coef, 0.702), rel=1e-14)


def test_database_coefficients_digit_for_digit():
    assert tuple(BBO.sellmeier_o) == (2.7359, 0.01878, 0.01822, 0.01354)
    assert tuple(LIIO3.sellmeier_e) == (1.673463, 1.245229, 0.028224, 0.003641)
    assert BBO.sellmeier_form is SellmeierForm.BBO
    assert LIIO3.sellmeier_form is SellmeierForm.LIIO3


def test_nm_and_um_inputs_agree_exactly():
    lam_nm = 702.0
    assert sellmeier_index(BBO, "o", lam_nm / 1000.0) == sellmeier_index(BBO, "o", 0.702)


def test_index_is_pure():
    a = sellmeier_index(LIIO3, "e", 0.5123)
    b = sellmeier_index(LIIO3, "e", 0.5123)
    assert a.hex() == b.hex()


@given(LAMBDAS)
def test_indices_real_and_negative_uniaxial(lam):
    for crystal in (BBO, LIIO3):
        no, ne = crystal.n_o(lam), crystal.n_e(lam)
        assert no > 1 and ne > 1
        assert ne < no


@pytest.mark.parametrize("lam", [0.1, 0.2, 3.0, 4.0])
def test_out_of_range(lam):
    with pytest.raises(OutOfRange):
        sellmeier_index(BBO, "o", lam)


@pytest.mark.parametrize("lam", [0.25, 2.0])
def test_validity_window_warns(lam):
    with pytest.warns(SellmeierRangeWarning):
        sellmeier_index(BBO, "o", lam)


def test_pole_proximity(tmp_path):
    rec = {"name": "Polar", "form": "BBO-form", "o": [2.0, 0.01, 0.25, 0.0],
           "e": [2.0, 0.01, 0.25, 0.0], "valid_range_um": [0.3, 1.5]}
    path = tmp_path / "db.json"
    path.write_text(json.dumps({"version": 1, "crystals": [rec]}))
    crystal = get_crystal("polar", load_crystal_database(path))
    with pytest.raises(PoleProximity):
        sellmeier_index(crystal, "o", 0.5)
    assert sellmeier_index(crystal, "o", 0.6) > 1


def test_unknown_crystal():
    with pytest.raises(ConfigError):
        get_crystal("quartz")


def test_aliases_resolve():
    assert get_crystal("bbo") is get_crystal("BBO")
    assert get_crystal("lithium-iodate").name == "LiIO3"


def test_bad_database(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"crystals": [{"name": "X", "form": "nope", "o": [1, 2, 3, 4], "e": [1, 2, 3, 4]}]}))
    with pytest.raises(ConfigError):
        load_crystal_database(path)


@pytest.mark.parametrize("crystal", [BBO, LIIO3])
@pytest.mark.parametrize("pol", ["o", "e"])
@pytest.mark.parametrize("lam", [0.351, 0.702, 1.2])
def test_slope_matches_central_difference(crystal, pol, lam):
    h = 1e-5
    fd = (sellmeier_index(crystal, pol, lam + h) - sellmeier_index(crystal, pol, lam - h)) / (2 * h)
    assert sellmeier_slope(crystal, pol, lam) == pytest.approx(fd, rel=1e-6)


def test_eta_slope_matches_central_difference():
    th, lam, h = math.radians(40), 0.702, 1e-5
    fd = (eta_index(BBO, th, lam + h) - eta_index(BBO, th, lam - h)) / (2 * h)
    assert eta_slope(BBO, th, lam) == pytest.approx(fd, rel=1e-6)


# -- anisotropy ------------------------------------------------------------------

@pytest.mark.parametrize("crystal", [BBO, LIIO3])
@pytest.mark.parametrize("lam", [0.3, 0.351, 0.6])
def test_trivial_angles(crystal, lam):
    no, ne = crystal.n_o(lam), crystal.n_e(lam)
    p0 = anisotropy(crystal, 0.0, lam)
    p90 = anisotropy(crystal, math.pi / 2, lam)
    assert p0.alpha == 0.0
    assert abs(p90.alpha) < 1e-12 * no
    assert p0.eta == pytest.approx(no, rel=1e-12)
    assert p90.eta == pytest.approx(ne, rel=1e-12)
    assert p90.gamma == pytest.approx(1.0, rel=1e-12)
    assert p0.gamma == pytest.approx(no * no / (ne * ne), rel=1e-12)


def test_theta_outside_quadrant():
    with pytest.raises(OutOfRange):
        anisotropy(BBO, -0.1, 0.5)


@settings(max_examples=50)
@given(THETAS, st.sampled_from([0.3, 0.6]))
def test_anisotropy_bounds(theta, lam):
    for crystal in (BBO, LIIO3):
        p = anisotropy(crystal, theta, lam)
        no, ne = crystal.n_o(lam), crystal.n_e(lam)
        assert p.alpha >= 0
        assert min(no, ne) - 1e-15 <= p.eta <= max(no, ne) + 1e-15
        assert all(math.isfinite(v) for v in (p.alpha, p.beta, p.gamma, p.eta))


@pytest.mark.parametrize("crystal", [BBO, LIIO3])
@pytest.mark.parametrize("lam", [0.3, 0.6])
def test_alpha_unimodal_and_eta_monotone(crystal, lam):
    thetas = np.radians(np.linspace(0, 90, 361))
    alpha = np.array([anisotropy(crystal, t, lam).alpha for t in thetas])
    eta = np.array([anisotropy(crystal, t, lam).eta for t in thetas])
    k = int(np.argmax(alpha))
    assert np.all(np.diff(alpha[:k + 1]) > 0) and np.all(np.diff(alpha[k:]) < 0)
    assert 40 < math.degrees(thetas[k]) < 50
    assert np.all(np.diff(eta) < 0)


def test_alpha_reference_values(cut_bbo_I, cut_liio3_I):
    assert cut_bbo_I.indices.alpha_p == pytest.approx(0.0747, abs=5e-4)
    assert cut_liio3_I.indices.alpha_p == pytest.approx(0.0871, abs=5e-4)


@pytest.mark.parametrize("crystal, expected", [(BBO, 0.02), (LIIO3, 0.03)])
def test_dispersion_factor_reference_values(crystal, expected):
    assert dispersion_factor(crystal, "ordinary", 0.702) == pytest.approx(expected, abs=0.005)


def test_dispersion_factor_eta_variant_needs_theta():
    with pytest.raises(ValueError):
        dispersion_factor(BBO, "eta", 0.702)
    a_p = dispersion_factor(BBO, "eta", 0.702, 0.0)
    assert a_p == pytest.approx(dispersion_factor(BBO, "o", 0.702), rel=1e-12)


def test_dispersion_factor_is_omega_derivative():
    """(omega/n) dn/domega via a finite difference in omega."""
    lam = 0.702
    w = 2 * math.pi / lam
    h = 1e-6 * w
    n = lambda ww: sellmeier_index(BBO, "o", 2 * math.pi / ww)
    fd = w / n(w) * (n(w + h) - n(w - h)) / (2 * h)
    assert dispersion_factor(BBO, "o", lam) == pytest.approx(fd, rel=1e-6)


def test_derived_set_reference_values(cut_bbo_I, cut_liio3_I):
    b = cut_bbo_I.indices
    assert (b.b, b.g) == (pytest.approx(1.06, abs=0.01), pytest.approx(1.11, abs=0.01))
    li = cut_liio3_I.indices
    assert (li.b, li.g) == (pytest.approx(0.951, abs=0.01), pytest.approx(1.07, abs=0.01))


def test_derived_set_definitions(cut_bbo_II):
    d = cut_bbo_II.indices
    assert d.b == d.beta_p * d.n_bar_o / d.eta_p
    assert d.g == d.gamma_p * d.n_bar_o / d.eta_p
    assert d.b_bar == d.beta_bar * d.n_bar_o / d.eta_bar
    assert d.g_bar == d.gamma_bar * d.n_bar_o / d.eta_bar
    assert d.a > 0 and d.a_prime > 0


def test_derived_set_at_theta_zero():
    class Cut:
        lambda_p, theta = 0.351, 0.0
    d = derived_index_set(BBO, Cut())
    no, ne = BBO.n_o(0.351), BBO.n_e(0.351)
    assert d.b == pytest.approx(BBO.n_o(0.702) * (no / ne) ** 2 / no, rel=1e-12)


# -- paraxial k_z ------------------------------------------------------------------

def _exact_kz(crystal, theta, lam, qx, qy):
    """Exact extraordinary k_z from the index-ellipsoid quadratic (1/m).

    The optic axis is (-sin theta, 0, cos theta), which is the orientation for
    which k_z = kappa - alpha q_x with alpha >= 0.
    """
    no, ne = crystal.n_o(lam), crystal.n_e(lam)
    k0 = 2 * math.pi / (lam * 1e-6)
    s, c = -math.sin(theta), math.cos(theta)
    A = s * s / ne ** 2 + c * c / no ** 2
    B = 2 * qx * s * c * (1 / no ** 2 - 1 / ne ** 2)
    C = qx * qx * (c * c / ne ** 2 + s * s / no ** 2) + qy * qy / ne ** 2 - k0 * k0
    return (-B + math.sqrt(B * B - 4 * A * C)) / (2 * A)


@pytest.fixture
def bbo_pump():
    lam, theta = 0.351, math.radians(33.5)
    return lam, theta, anisotropy(BBO, theta, lam), float(angular_frequency(lam))


def test_kz_on_axis(bbo_pump):
    lam, theta, p, w = bbo_pump
    assert paraxial_kz(p, (0.0, 0.0), w) == p.kappa(w)


def test_kz_theta_zero():
    lam = 0.5
    p = anisotropy(BBO, 0.0, lam)
    w = float(angular_frequency(lam))
    kap = p.kappa(w)
    qx = 0.01 * kap
    expected = kap - (BBO.n_o(lam) / BBO.n_e(lam)) ** 2 * qx * qx / (2 * kap)
    assert paraxial_kz(p, (qx, 0.0), w) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("direction", [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8), (-1.0, 0.0)])
def test_kz_against_exact_root(bbo_pump, direction):
    lam, theta, p, w = bbo_pump
    kap = p.kappa(w)
    q = (0.05 * kap * direction[0], 0.05 * kap * direction[1])
    exact = _exact_kz(BBO, theta, lam, *q)
    assert abs(paraxial_kz(p, q, w) - exact) / exact < 1e-3


@pytest.mark.parametrize("direction", [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8)])
def test_kz_error_order(bbo_pump, direction):
    lam, theta, p, w = bbo_pump
    kap = p.kappa(w)
    r = np.geomspace(2e-3, 3e-2, 8)
    err = [abs(paraxial_kz(p, (x * kap * direction[0], x * kap * direction[1]), w)
               - _exact_kz(BBO, theta, lam, x * kap * direction[0], x * kap * direction[1])) for x in r]
    slope = np.polyfit(np.log(r), np.log(err), 1)[0]
    assert 3.7 < slope < 4.3


def test_kz_paraxial_violation(bbo_pump):
    lam, theta, p, w = bbo_pump
    with pytest.warns(ParaxialViolation):
        paraxial_kz(p, (0.3 * p.kappa(w), 0.0), w)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        paraxial_kz(p, (0.1 * p.kappa(w), 0.0), w)


def test_polarization_parse():
    assert Polarization.parse("ordinary") is Polarization.ORDINARY
    with pytest.raises(ValueError):
        Polarization.parse("x")
