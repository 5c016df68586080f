"""Command-line entry point: ``twophoton <subcommand> ...``.

Angles are given in degrees and wavelengths in nm on the command line; they
are converted to radians and micrometres internally. Exit codes: 0 success,
2 configuration error, 3 numerical failure. Errors print one line on stderr:
``twophoton: error: <kind>: <Exception>: <message>``.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings

from . import __version__
from .crystal import Polarization, anisotropy, get_crystal, sellmeier_index
from .errors import ConfigError, NumericalError, TwoPhotonError
from .phasematching import Family, solve_beamlike_angle, solve_collinear_angle
from .scenarios import Scenario, list_scenarios, load_scenario, run_scenario, with_overrides

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse reports usage errors through the same one-line channel."""

    def error(self, message):
        raise ConfigError(message)


def _cut_flags(p: argparse.ArgumentParser, observable: bool = True):
    p.add_argument("--crystal", default=None, help="crystal name (BBO, LiIO3)")
    p.add_argument("--type", dest="family", choices=["I", "II"], default=None)
    p.add_argument("--pump-nm", type=float, default=None)
    th = p.add_mutually_exclusive_group()
    th.add_argument("--theta-deg", type=float, default=None)
    th.add_argument("--collinear", action="store_true", help="solve theta for collinear phase matching")
    th.add_argument("--beamlike", action="store_true", help="solve theta for beamlike type II")
    if not observable:
        return
    p.add_argument("--Lz-mm", type=float, default=None)
    p.add_argument("--zc-mm", type=float, default=None)
    p.add_argument("--waist-um", type=float, default=None)
    p.add_argument("--pump-table", default=None, help="tabulated pump spectrum (q_x q_y Re Im, 1/um)")
    flt = p.add_mutually_exclusive_group()
    flt.add_argument("--filter-fwhm-nm", type=float, default=None,
                     help="filter width in nm; converted as dnu = 2 dlambda / lambda_deg")
    flt.add_argument("--no-filter", action="store_true")
    flt.add_argument("--band", type=float, default=None, help="flat detuning band of this full width")
    flt.add_argument("--delta-filter", action="store_true", help="monochromatic detection at nu = 0")
    p.add_argument("--filter-shape", choices=["gaussian", "rectangular"], default=None)
    p.add_argument("--model", choices=["full", "simplified"], default=None)
    g = p.add_argument_group("grid controls")
    g.add_argument("--nu-span", type=float, default=None)
    g.add_argument("--nu-points", type=int, default=None)
    g.add_argument("--nu-points-band", type=int, default=None)
    g.add_argument("--points", type=int, default=None)
    g.add_argument("--line-points", type=int, default=None)
    g.add_argument("--xi-max", type=float, default=None, help="angular half-range (rad)")
    g.add_argument("--axis", choices=["x", "y"], default=None)
    g.add_argument("--span-sigmas", type=float, default=None)
    g.add_argument("--delay-max-um", type=float, default=None)
    g.add_argument("--delay-points", type=int, default=None)
    g.add_argument("--dtheta-max-deg", type=float, default=None)
    g.add_argument("--dtheta-points", type=int, default=None)
    g.add_argument("--refine", type=int, default=1, help="multiply grid resolutions by this factor")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--name", default=None, help="output file stem")


def _common_flags(p):
    p.add_argument("--threads", type=int, default=1, help="worker threads for grid evaluation")
    p.add_argument("--seedless", action="store_true", help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twophoton", description="Two-photon states from parametric down-conversion.")
    parser.add_argument("--version", action="version", version=f"twophoton {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("index", help="Sellmeier refractive index")
    p.add_argument("--crystal", default="BBO")
    p.add_argument("--pol", choices=["o", "e", "both"], default="both")
    p.add_argument("--lambda-nm", type=float, nargs="+", required=True)
    _common_flags(p)

    p = sub.add_parser("aniso", help="anisotropy parameters alpha, beta, gamma, eta")
    p.add_argument("--crystal", default="BBO")
    p.add_argument("--theta-deg", type=float, required=True)
    p.add_argument("--lambda-nm", type=float, required=True)
    _common_flags(p)

    p = sub.add_parser("pm-angle", help="collinear phase-matching angle (degrees)")
    _cut_flags(p, observable=False)
    _common_flags(p)

    p = sub.add_parser("beamlike-angle", help="beamlike type II angle (degrees)")
    p.add_argument("--crystal", default="BBO")
    p.add_argument("--pump-nm", type=float, required=True)
    _common_flags(p)

    for name, helptext in (("rings", "singles density map over xi1"),
                           ("spectrum", "singles vs output angle and wavelength (xi1y = 0)"),
                           ("collinear-spectrum", "collinear spectrum vs delta theta"),
                           ("transfer", "same-direction coincidence scan"),
                           ("hom", "Hong-Ou-Mandel dip"),
                           ("opposite", "opposite-direction coincidence scan")):
        p = sub.add_parser(name, help=helptext)
        _cut_flags(p)
        _common_flags(p)

    p = sub.add_parser("scenario", help="bundled or file-based scenarios")
    ssub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    ps = ssub.add_parser("list")
    _common_flags(ps)
    pr = ssub.add_parser("run")
    pr.add_argument("source", help="bundled scenario name or path to a scenario file")
    _cut_flags(pr)
    _common_flags(pr)
    return parser


_GRID_FLAGS = ("points", "line_points", "xi_max", "axis", "span_sigmas", "delay_max_um", "delay_points",
               "dtheta_max_deg", "dtheta_points")


def _scenario_from_args(args, base: Scenario | None) -> Scenario:
    if base is None:
        base = Scenario(name=args.name or args.command, observable=args.command)
    over = {
        "crystal": args.crystal, "family": args.family, "pump_nm": args.pump_nm,
        "Lz_mm": args.Lz_mm, "zc_mm": args.zc_mm, "waist_um": args.waist_um, "pump_table": args.pump_table,
        "nu_span": args.nu_span, "nu_points": args.nu_points, "nu_points_band": args.nu_points_band,
        "model": args.model, "name": args.name,
    }
    if args.theta_deg is not None:
        over["theta"] = str(args.theta_deg)
    elif args.collinear:
        over["theta"] = "collinear"
    elif args.beamlike:
        over["theta"] = "beamlike"
    if args.no_filter:
        over.update(filter="none", band=0.0)
    elif args.delta_filter:
        over.update(filter="delta", band=0.0)
    elif args.band is not None:
        over["band"] = args.band
    elif args.filter_fwhm_nm is not None:
        over.update(filter=args.filter_shape or "gaussian", filter_fwhm_nm=args.filter_fwhm_nm, band=0.0)
    elif args.filter_shape is not None:
        over["filter"] = args.filter_shape
    over["grid"] = {k: getattr(args, k) for k in _GRID_FLAGS}
    return with_overrides(base, **over)


def _run(args) -> int:
    if getattr(args, "seedless", False):
        raise ConfigError("--seedless is reserved: no random numbers are used anywhere")
    if args.command == "index":
        crystal = get_crystal(args.crystal)
        pols = ["o", "e"] if args.pol == "both" else [args.pol]
        for lam in args.lambda_nm:
            vals = " ".join(f"n_{p}={sellmeier_index(crystal, Polarization.parse(p), lam * 1e-3):.10f}"
                            for p in pols)
            print(f"{crystal.name} lambda_nm={lam:g} {vals}")
        return 0
    if args.command == "aniso":
        pr = anisotropy(get_crystal(args.crystal), math.radians(args.theta_deg), args.lambda_nm * 1e-3)
        print(f"alpha={pr.alpha:.10g} beta={pr.beta:.10g} gamma={pr.gamma:.10g} eta={pr.eta:.10g}")
        return 0
    if args.command == "pm-angle":
        if args.pump_nm is None:
            raise ConfigError("--pump-nm is required")
        theta = solve_collinear_angle(get_crystal(args.crystal or "BBO"), args.pump_nm * 1e-3,
                                      Family.parse(args.family or "I"))
        print(f"{math.degrees(theta):.6f}")
        return 0
    if args.command == "beamlike-angle":
        print(f"{math.degrees(solve_beamlike_angle(get_crystal(args.crystal), args.pump_nm * 1e-3)):.6f}")
        return 0
    if args.command == "scenario":
        if args.action == "list":
            for name in list_scenarios():
                print(name)
            return 0
        sc = _scenario_from_args(args, load_scenario(args.source))
    else:
        sc = _scenario_from_args(args, None)
    result = run_scenario(sc, args.out, refine=args.refine, workers=max(args.threads, 1))
    for key, val in result.headline.items():
        print(f"{key} = {val:.10g}" if isinstance(val, float) else f"{key} = {val}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return _run(args)
    except NumericalError as exc:
        kind, code = "numeric", EXIT_NUMERIC
        err = exc
    except (ConfigError, ValueError, KeyError, OSError, TwoPhotonError) as exc:
        kind, code = "config", EXIT_CONFIG
        err = exc
    message = " ".join(str(err).split())
    print(f"twophoton: error: {kind}: {type(err).__name__}: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
