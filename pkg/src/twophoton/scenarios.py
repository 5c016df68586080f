"""Named, reproducible scenarios: configuration, resolution and execution.

A scenario is a flat ``key = value`` file with a ``[scenario]`` section (cut,
pump, filter, observable) and an optional ``[grid]`` section. Bundled scenarios
live in ``twophoton/scenarios/*.ini``; command-line flags override file values.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import observables as obs
from .biphoton import DetectionSetup, FilterShape, GaussianPump, SpectralFilter, TabulatedPump
from .crystal import anisotropy, get_crystal
from .errors import ConfigError
from .output import write_plot_script, write_table
from .phasematching import (
    CutConfiguration, Family, detuning_to_wavelength, solve_beamlike_angle, solve_collinear_angle,
)

OBSERVABLES = ("aniso", "rings", "spectrum", "collinear-spectrum", "transfer", "hom", "opposite")

_GRID_DEFAULTS = {
    "aniso": {"quantity": "alpha", "crystals": "BBO,LiIO3", "wavelengths_nm": "300,600",
              "theta_points": "181"},
    "rings": {"xi_max": "0.15", "points": "81", "line_points": "601", "xi2_sigmas": "5"},
    "spectrum": {"xi_max": "0.06", "points": "241", "probe_nu": "0.05", "xi2_sigmas": "5"},
    "collinear-spectrum": {"dtheta_max_deg": "0.5", "dtheta_points": "101"},
    "transfer": {"axis": "x", "span_sigmas": "6", "points": "801"},
    "hom": {"delay_max_um": "40", "delay_points": "801"},
    "opposite": {"xi_max": "0.15", "points": "1201", "nu": ""},
}

_INT_KEYS = {"theta_points", "points", "line_points", "dtheta_points", "delay_points"}


@dataclass
class Scenario:
    """Fully specified run; ``theta`` is degrees or ``collinear``/``beamlike``."""

    name: str
    observable: str
    crystal: str = "BBO"
    family: str = "I"
    pump_nm: float = 351.0
    theta: str = "collinear"
    Lz_mm: float = 1.0
    zc_mm: float = 0.0
    waist_um: float = 25.0
    pump_table: str = ""
    filter: str = "none"
    filter_fwhm_nm: float = 0.0
    band: float = 0.0
    nu_span: float = 0.1
    nu_points: int = 801
    nu_points_band: int = 0
    model: str = "full"
    figure: str = ""
    description: str = ""
    grid: dict = field(default_factory=dict)

    def grid_value(self, key: str):
        raw = self.grid.get(key, _GRID_DEFAULTS.get(self.observable, {}).get(key))
        if raw is None:
            raise ConfigError(f"scenario {self.name}: unknown grid key {key!r}")
        if key in _INT_KEYS:
            return int(raw)
        return raw


_FLOAT_FIELDS = {"pump_nm", "Lz_mm", "zc_mm", "waist_um", "filter_fwhm_nm", "band", "nu_span"}
_INT_FIELDS = {"nu_points", "nu_points_band"}
_ALIASES = {"type": "family", "observable": "observable"}


def _coerce(name: str, key: str, value: str):
    try:
        if key in _FLOAT_FIELDS:
            return float(value)
        if key in _INT_FIELDS:
            return int(value)
    except ValueError:
        raise ConfigError(f"scenario {name}: {key} = {value!r} is not a number") from None
    return value.strip()


def scenario_from_mapping(values: dict, grid: dict | None = None) -> Scenario:
    known = set(Scenario.__dataclass_fields__) - {"grid"}
    kwargs = {}
    name = values.get("name", "unnamed")
    for raw_key, raw in values.items():
        key = _ALIASES.get(raw_key, raw_key)
        if key not in known:
            raise ConfigError(f"scenario {name}: unknown key {raw_key!r}")
        kwargs[key] = _coerce(name, key, raw) if isinstance(raw, str) else raw
    if "observable" not in kwargs:
        raise ConfigError(f"scenario {name}: 'observable' is required")
    if kwargs["observable"] not in OBSERVABLES:
        raise ConfigError(f"scenario {name}: observable must be one of {OBSERVABLES}")
    kwargs.setdefault("name", name)
    return Scenario(grid=dict(grid or {}), **kwargs)


def load_scenario(source: str | Path) -> Scenario:
    """Read a scenario file, or a bundled scenario by name."""
    path = Path(source)
    if not path.exists():
        bundled = _bundled_dir() / f"{source}.ini"
        if not bundled.is_file():
            raise ConfigError(f"no scenario file or bundled scenario named {source!r}")
        path = Path(str(bundled))
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(path.read_text())
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc.message if hasattr(exc, 'message') else exc}") from None
    if "scenario" not in parser:
        raise ConfigError(f"{path}: missing [scenario] section")
    values = dict(parser["scenario"])
    values.setdefault("name", path.stem)
    grid = dict(parser["grid"]) if "grid" in parser else {}
    return scenario_from_mapping(values, grid)


def _bundled_dir():
    return resources.files("twophoton") / "scenarios"


def list_scenarios() -> list[str]:
    return sorted(p.name[:-4] for p in _bundled_dir().iterdir() if p.name.endswith(".ini"))


# -- resolution ----------------------------------------------------------------------


@dataclass
class Resolved:
    cut: CutConfiguration
    setup: DetectionSetup
    theta_source: str


def resolve_theta(sc: Scenario, crystal, family: Family, lambda_p: float) -> tuple[float, str]:
    key = str(sc.theta).strip().lower()
    if key == "collinear":
        return solve_collinear_angle(crystal, lambda_p, family), "solved:collinear"
    if key == "beamlike":
        return solve_beamlike_angle(crystal, lambda_p), "solved:beamlike"
    try:
        return math.radians(float(key)), "given"
    except ValueError:
        raise ConfigError(f"theta must be degrees, 'collinear' or 'beamlike', got {sc.theta!r}") from None


def resolve_filter(sc: Scenario, lambda_deg_um: float) -> SpectralFilter:
    if sc.band > 0:
        return SpectralFilter(FilterShape.RECTANGULAR, 0.0, sc.band)
    shape = FilterShape(sc.filter)
    if shape in (FilterShape.NONE, FilterShape.DELTA):
        return SpectralFilter(shape)
    if not sc.filter_fwhm_nm > 0:
        raise ConfigError(f"{shape.value} filter needs filter_fwhm_nm > 0")
    return SpectralFilter.from_nm(shape, sc.filter_fwhm_nm, lambda_deg_um)


def resolve(sc: Scenario, refine: int = 1) -> Resolved:
    """Build the cut and detection setup; ``refine`` scales the detuning grid."""
    try:
        crystal = get_crystal(sc.crystal)
        family = Family.parse(sc.family)
        filt = resolve_filter(sc, 2e-3 * sc.pump_nm)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    lambda_p = sc.pump_nm * 1e-3
    if sc.observable == "aniso":
        return Resolved(None, None, "sweep")
    theta, source = resolve_theta(sc, crystal, family, lambda_p)
    cut = CutConfiguration(crystal, lambda_p, theta, sc.Lz_mm * 1e3, sc.zc_mm * 1e3, family)
    pump = TabulatedPump.from_file(sc.pump_table) if sc.pump_table else GaussianPump(sc.waist_um)
    setup = DetectionSetup(pump, filt, sc.nu_span, sc.nu_points, sc.nu_points_band or None)
    if refine > 1:
        setup = setup.refined(refine)
    return Resolved(cut, setup, source)


# -- execution -------------------------------------------------------------------------


@dataclass
class RunResult:
    columns: dict
    meta: dict
    headline: dict
    plot: tuple = ()
    extra: dict = field(default_factory=dict)


def _n(n: int, refine: int) -> int:
    return (n - 1) * refine + 1


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _run_aniso(sc, res, refine, workers, headline_only):
    qty = sc.grid_value("quantity")
    if qty not in ("alpha", "beta", "gamma", "eta"):
        raise ConfigError(f"aniso quantity must be alpha, beta, gamma or eta, got {qty!r}")
    thetas = np.linspace(0.0, 90.0, _n(sc.grid_value("theta_points"), refine))
    cols = {k: [] for k in ("crystal", "wavelength_nm", "theta_deg", "alpha", "beta", "gamma", "eta")}
    headline = {}
    for name in sc.grid_value("crystals").split(","):
        crystal = get_crystal(name.strip())
        for lam_nm in _floats(sc.grid_value("wavelengths_nm")):
            vals = {k: [] for k in ("alpha", "beta", "gamma", "eta")}
            for th in thetas:
                p = anisotropy(crystal, math.radians(th), lam_nm * 1e-3)
                for k in vals:
                    vals[k].append(getattr(p, k))
            n = len(thetas)
            cols["crystal"] += [crystal.name] * n
            cols["wavelength_nm"] += [lam_nm] * n
            cols["theta_deg"] += list(thetas)
            for k in vals:
                cols[k] += vals[k]
            tag = f"{crystal.name}_{lam_nm:g}nm"
            if qty == "alpha":
                headline[f"alpha_max_theta_deg.{tag}"] = obs.peak_location(thetas, vals["alpha"])
                headline[f"alpha_max.{tag}"] = max(vals["alpha"])
            else:
                headline[f"{qty}_at_45deg.{tag}"] = getattr(
                    anisotropy(crystal, math.radians(45.0), lam_nm * 1e-3), qty)
    return RunResult(cols, {"observable.quantity": qty, "grid.theta_points": len(thetas)}, headline,
                     ("line", "theta_deg", qty))


def _run_rings(sc, res, refine, workers, headline_only):
    cut, setup = res.cut, res.setup
    xi_max = float(sc.grid_value("xi_max"))
    sig = float(sc.grid_value("xi2_sigmas"))
    line = np.linspace(-xi_max, xi_max, _n(sc.grid_value("line_points"), refine))
    xi2_pts = None
    if refine > 1:
        base = obs.singles_map(cut, DetectionSetup(setup.pump, setup.filter), [xi_max], [0.0],
                               window_sigmas=sig, check_truncation=False).xi2_points
        xi2_pts = tuple(_n(n, refine) for n in base)
    cut_line = obs.singles_map(cut, setup, line, [0.0], model=sc.model, window_sigmas=sig,
                               xi2_points=xi2_pts, workers=workers)
    prof = cut_line.intensity[:, 0]
    peaks = obs.local_peaks(line, prof, rel_height=0.2)
    headline = {"ring_peak_count": len(peaks)}
    for i, p in enumerate(peaks):
        headline[f"ring_peak_{i}_rad"] = p
    if peaks:
        headline["outer_half_width_rad"] = obs.right_half_width(line, prof, peaks[-1])
    meta = {"grid.line_points": len(line), "grid.xi2_points": "x".join(map(str, cut_line.xi2_points)),
            "grid.xi2_truncation": cut_line.truncation}
    if headline_only:
        return RunResult({}, meta, headline)
    pts = _n(sc.grid_value("points"), refine)
    axis = np.linspace(-xi_max, xi_max, pts)
    m = obs.singles_map(cut, setup, axis, axis, model=sc.model, window_sigmas=sig,
                        xi2_points=xi2_pts, workers=workers)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    cols = {"xi1x_rad": X.ravel(), "xi1y_rad": Y.ravel(), "singles": m.intensity.ravel()}
    meta.update({"grid.map_points": f"{pts}x{pts}", "grid.map_truncation": m.truncation})
    for ch in cut.family.channels:
        try:
            g = obs.ring_geometry(cut, 0.0, ch)
            meta[f"closed_form.{ch}.radius_rad"] = g.radius
            meta[f"closed_form.{ch}.center_x_rad"] = g.center[0]
            meta[f"closed_form.{ch}.half_width_rad"] = g.half_width
        except Exception:
            meta[f"closed_form.{ch}.radius_rad"] = "none"
    return RunResult(cols, meta, headline, ("map", "xi1x_rad", "singles", "xi1y_rad"))


def _run_spectrum(sc, res, refine, workers, headline_only):
    cut, setup = res.cut, res.setup
    xi_max = float(sc.grid_value("xi_max"))
    sig = float(sc.grid_value("xi2_sigmas"))
    axis = np.linspace(-xi_max, xi_max, _n(sc.grid_value("points"), refine))
    probe = float(sc.grid_value("probe_nu"))
    xi2_pts = None
    if refine > 1:
        base = obs.singles_map(cut, DetectionSetup(setup.pump, SpectralFilter(FilterShape.DELTA)),
                               [xi_max], [0.0], window_sigmas=sig, check_truncation=False).xi2_points
        xi2_pts = tuple(_n(n, refine) for n in base)
    headline = {}
    for nu in (-probe, probe):
        s = DetectionSetup(setup.pump, SpectralFilter(FilterShape.DELTA, nu))
        prof = obs.singles_map(cut, s, axis, [0.0], model=sc.model, window_sigmas=sig,
                               xi2_points=xi2_pts, workers=workers).intensity[:, 0]
        pos = [p for p in obs.local_peaks(axis, prof, 0.2) if p > 0]
        headline[f"branch_angle_rad.nu={nu:+g}"] = pos[-1] if pos else 0.0
    meta = {"grid.points": len(axis), "probe_nu": probe}
    if headline_only:
        return RunResult({}, meta, headline)
    m = obs.singles_map(cut, setup, axis, [0.0], per_nu=True, model=sc.model, window_sigmas=sig,
                        xi2_points=xi2_pts, workers=workers)
    per = m.per_nu[:, 0, :]
    N, X = np.meshgrid(m.nu, axis, indexing="ij")
    cols = {"nu": N.ravel(), "wavelength_nm": 1e3 * detuning_to_wavelength(N.ravel(), cut.lambda_p),
            "xi1x_rad": X.ravel(), "singles": per.T.ravel()}
    meta.update({"grid.nu_points": m.nu.size, "grid.xi2_points": "x".join(map(str, m.xi2_points)),
                 "grid.xi2_truncation": m.truncation})
    return RunResult(cols, meta, headline, ("map", "wavelength_nm", "singles", "xi1x_rad"))


def _run_collinear(sc, res, refine, workers, headline_only):
    cut, setup = res.cut, res.setup
    dmax = math.radians(float(sc.grid_value("dtheta_max_deg")))
    dth = np.linspace(-dmax, dmax, _n(sc.grid_value("dtheta_points"), refine))
    nu = np.linspace(-setup.nu_span, setup.nu_span, setup.nu_points)
    spectrum = obs.collinear_spectrum(cut, nu, dth)
    centre = obs.collinear_spectrum(cut, nu, [0.0])
    width = obs.fwhm(nu, centre.total[0])
    idx = cut.indices
    slope = idx.n_bar_o * idx.a if cut.family is Family.TYPE_I else (idx.n_bar_o - idx.eta_bar) / 2
    headline = {"fwhm_nu_at_dtheta0": width,
                "mismatch_halfwidth": 2 * math.pi / (cut.K * cut.L_z),
                "locus_branches_at_dtheta_min": sum(len(v[0]) for v in spectrum.loci.values()),
                "locus_branches_at_dtheta_max": sum(len(v[-1]) for v in spectrum.loci.values())}
    meta = {"grid.dtheta_points": dth.size, "grid.nu_points": nu.size, "locus_slope": slope}
    cols = {k: [] for k in ("dtheta_deg", "nu", "wavelength_nm", "channel", "intensity")}
    loci = {k: [] for k in ("dtheta_deg", "channel", "nu", "wavelength_nm")}
    lam_nm = 1e3 * spectrum.wavelength_um
    for ch, table in spectrum.intensity.items():
        for i, d in enumerate(dth):
            deg = math.degrees(d)
            cols["dtheta_deg"] += [deg] * nu.size
            cols["nu"] += list(nu)
            cols["wavelength_nm"] += list(lam_nm)
            cols["channel"] += [ch] * nu.size
            cols["intensity"] += list(table[i])
            for v in spectrum.loci[ch][i]:
                if abs(v) < 0.15:
                    loci["dtheta_deg"].append(deg)
                    loci["channel"].append(ch)
                    loci["nu"].append(v)
                    loci["wavelength_nm"].append(1e3 * detuning_to_wavelength(v, cut.lambda_p))
    return RunResult(cols, meta, headline, ("map", "dtheta_deg", "intensity", "wavelength_nm"),
                     {"loci": loci})


def _run_transfer(sc, res, refine, workers, headline_only):
    cut, setup = res.cut, res.setup
    axis_name = sc.grid_value("axis")
    if axis_name not in ("x", "y"):
        raise ConfigError(f"transfer axis must be x or y, got {axis_name!r}")
    sig_pump = obs.pump_angular_sigma(cut, setup)[0 if axis_name == "x" else 1]
    span = float(sc.grid_value("span_sigmas")) * sig_pump
    xs = np.linspace(-span, span, _n(sc.grid_value("points"), refine))
    sx, sy = (xs, 0.0) if axis_name == "x" else (0.0, xs)
    prof = obs.coincidence_same(cut, setup, sx, sy, model=sc.model).total
    mono = obs.transfer_closed_form(cut, DetectionSetup(setup.pump), sx, sy, 0.0)
    pump = setup.pump.intensity(cut.K * np.asarray(sx), cut.K * np.asarray(sy)) * np.ones_like(xs)
    width = obs.gaussian_fit_width(xs, prof)
    headline = {"fitted_sigma_rad": width, "width_ratio_to_pump": width / sig_pump}
    meta = {"grid.points": xs.size, "grid.nu_points": setup.nu_nodes().size,
            "pump_sigma_rad": sig_pump, "scan_axis": axis_name}
    if cut.family is Family.TYPE_I:
        meta["clipping_scale_um"] = cut.L_z * cut.indices.alpha_p / (2 * math.pi)
        meta["sinc_first_zero_rad"] = 2 * math.pi / (cut.K * cut.L_z * cut.indices.alpha_p)
    scale = np.max(prof)
    cols = {"xi_s_rad": xs, "coincidences": prof,
            "pump_profile": pump / np.max(pump) * scale, "monochromatic": mono / np.max(mono) * scale}
    return RunResult(cols, meta, headline, ("line", "xi_s_rad", "coincidences"))


def _run_hom(sc, res, refine, workers, headline_only):
    cut, setup = res.cut, res.setup
    dmax = float(sc.grid_value("delay_max_um"))
    delays = np.linspace(-dmax, dmax, _n(sc.grid_value("delay_points"), refine))
    xi1, xi2 = obs.default_hom_angles(cut)
    curve = obs.hom_dip(cut, setup, xi1, xi2, delays, model=sc.model)
    headline = {"dip_fwhm_um": obs.dip_fwhm(curve), "p_at_max_delay": float(curve.probabilities[-1])}
    meta = {"grid.delay_points": delays.size, "grid.nu_points": curve.nu.size,
            "xi1_rad": f"{xi1[0]:.12g};{xi1[1]:.12g}", "xi2_rad": f"{xi2[0]:.12g};{xi2[1]:.12g}"}
    return RunResult({"delay_um": delays, "p_coinc": curve.probabilities}, meta, headline,
                     ("line", "delay_um", "p_coinc"))


def _run_opposite(sc, res, refine, workers, headline_only):
    cut, setup = res.cut, res.setup
    xi_max = float(sc.grid_value("xi_max"))
    xs = np.linspace(-xi_max, xi_max, _n(sc.grid_value("points"), refine))
    nu_raw = str(sc.grid_value("nu")).strip()
    nu = float(nu_raw) if nu_raw else None
    scan = obs.coincidence_opposite(cut, setup, xs, 0.0, nu=nu, model=sc.model)
    cols = {"xi_dx_rad": xs}
    for ch, v in scan.channels.items():
        cols[f"intensity_{ch}"] = v
    cols["total"] = scan.total
    peaks = obs.local_peaks(xs, scan.total, 0.2)
    headline = {"peak_count": len(peaks)}
    headline.update({f"peak_{i}_rad": p for i, p in enumerate(peaks)})
    return RunResult(cols, {"grid.points": xs.size}, headline, ("line", "xi_dx_rad", "total"))


RUNNERS = {
    "aniso": _run_aniso, "rings": _run_rings, "spectrum": _run_spectrum,
    "collinear-spectrum": _run_collinear, "transfer": _run_transfer, "hom": _run_hom,
    "opposite": _run_opposite,
}


def scenario_meta(sc: Scenario, res: Resolved) -> dict:
    meta = {"tool": f"twophoton {__version__}", "scenario": sc.name}
    if sc.figure:
        meta["figure"] = sc.figure
    meta.update({"observable": sc.observable, "model": sc.model})
    if res.cut is None:
        return meta
    cut, setup = res.cut, res.setup
    meta.update({
        "crystal": cut.crystal.name, "type": cut.family.value,
        "pump_nm": sc.pump_nm, "lambda_p_um": cut.lambda_p,
        "theta_deg": math.degrees(cut.theta), "theta_rad": cut.theta, "theta_source": res.theta_source,
        "Lz_mm": sc.Lz_mm, "Lz_um": cut.L_z, "zc_mm": sc.zc_mm, "zc_um": cut.z_c,
        "pump": "tabulated:" + sc.pump_table if sc.pump_table else "gaussian",
        "waist_um": sc.waist_um,
        "filter_shape": setup.filter.shape.value, "filter_fwhm_nm": sc.filter_fwhm_nm,
        "filter_nu0": setup.filter.nu0, "filter_width_nu": setup.filter.width,
        "nu_span": setup.nu_span, "nu_points": setup.nu_points,
        "nu_nodes": setup.nu_nodes().size,
    })
    return meta


def run_scenario(sc: Scenario, out_dir: str | Path | None = None, refine: int = 1,
                 workers: int = 1, headline_only: bool = False) -> RunResult:
    """Evaluate ``sc``; with ``out_dir`` write ``<name>.csv`` and ``<name>.gp``."""
    res = resolve(sc, refine)
    result = RUNNERS[sc.observable](sc, res, refine, workers, headline_only)
    meta = scenario_meta(sc, res)
    meta.update(result.meta)
    meta.update({f"headline.{k}": v for k, v in result.headline.items()})
    result.meta = meta
    if out_dir is not None and not headline_only:
        out = Path(out_dir)
        csv = write_table(out / f"{sc.name}.csv", result.columns, meta)
        if result.plot:
            kind, x, z, *y = result.plot
            write_plot_script(out / f"{sc.name}.gp", csv.name, kind, list(result.columns), x, z,
                              y[0] if y else None, sc.name)
        if "loci" in result.extra:
            write_table(out / f"{sc.name}.loci.csv", result.extra["loci"], meta)
    return result


def with_overrides(sc: Scenario, **overrides) -> Scenario:
    """Copy of ``sc`` with non-``None`` overrides applied; ``grid`` entries merge."""
    grid = dict(sc.grid)
    grid.update({k: str(v) for k, v in (overrides.pop("grid", None) or {}).items() if v is not None})
    clean = {k: v for k, v in overrides.items() if v is not None}
    return replace(sc, grid=grid, **clean)
