"""Batch command-line interface: calibrate, solve, simulate, decompose, compare.

Configuration is a flat key = value text file (# starts a comment). Every key
is validated before any computation starts; outputs are computed fully in
memory and written at the end, so a failing run leaves no partial files.
Numeric output uses 12 significant digits and the pipeline is deterministic:
identical configuration yields byte-identical files.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .dynamics import IndeterminacyError, IrfSet, impulse_response, solve_model
from .equilibrium import (
    CalibrationTargets,
    FixedParams,
    ModelParams,
    NUM_FORMAT,
    calibrate,
    grid_profile_csv,
    solve_stationary_equilibrium,
    steady_report,
)
from .rfmodel import RFParams, rf_irf, solve_rf
from .stochproc import AR1Spec, LognormalSpec, NonConvergenceError, quarterly_from_annual
from .variants import (
    FreeEntryConfig,
    VariantConfig,
    calibrate_interest_sensitivity,
    recalibrate_variant,
    returns_to_scale_sweep,
    solve_free_entry_stationary,
    with_variant,
)

OUTPUT_DIR_ENV = "NKFIRMS_OUTPUT_DIR"

VARIANT_NAMES = (
    "labor_cost",
    "production_good_cost",
    "delayed_entry",
    "risk_neutral",
    "interest_sensitive",
    "free_entry",
)


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


_FLOAT_KEYS = {
    "beta", "sigma", "kappa0", "kappa1", "gamma", "xi", "phi", "nu", "rho_m",
    "rho_z", "sigma_z", "rho_annual", "sigma_annual",
    "a_z", "mu_c", "sigma_c", "mu_e", "sigma_e", "entrant_mass",
    "target_annual_exit_rate", "target_avg_incumbent_size",
    "target_avg_exiting_size", "target_employment",
    "rate_impact_pp", "variant_alpha_c", "variant_alpha_e", "variant_free_entry_alpha",
}
_INT_KEYS = {"k", "horizon"}
_STR_KEYS = {"output_dir", "variant_cost_denomination"}
_BOOL_KEYS = {"variant_delayed_entry", "variant_risk_neutral"}
_ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | _BOOL_KEYS

_DEFAULTS = {
    "sigma": 1.0, "kappa1": 1.0, "gamma": 6.0, "xi": 50.0, "phi": 1.5,
    "nu": 0.9, "rho_m": 0.5, "k": 50, "horizon": 200, "rate_impact_pp": 1.0,
    "output_dir": "out",
    "variant_cost_denomination": "final_good",
    "variant_delayed_entry": False,
    "variant_risk_neutral": False,
    "variant_alpha_c": 0.0,
    "variant_alpha_e": 0.0,
    "variant_free_entry_alpha": 15.0,
}


@dataclass
class RunConfig:
    """Validated run configuration; mirrors the flat key = value file."""

    values: dict = field(default_factory=dict)

    def __contains__(self, key: str) -> bool:
        return key in self.values

    def get(self, key: str, default=None):
        return self.values.get(key, _DEFAULTS.get(key, default))

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise ConfigError(f"configuration key {key!r} is required for this command")
        return value


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    values: dict = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _ALL_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(value)
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key in _BOOL_KEYS:
                if value.lower() not in ("true", "false"):
                    raise ValueError(value)
                values[key] = value.lower() == "true"
            else:
                values[key] = value
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: cannot parse value for {key!r}: {value!r}") from exc
    if "rho_z" in values and "rho_annual" in values:
        raise ConfigError("specify either (rho_z, sigma_z) or (rho_annual, sigma_annual), not both")
    return RunConfig(values=values)


def productivity_process(config: RunConfig) -> tuple[float, float]:
    if "rho_z" in config:
        if "sigma_z" not in config:
            raise ConfigError("rho_z given without sigma_z")
        return config.get("rho_z"), config.get("sigma_z")
    if "rho_annual" in config:
        if "sigma_annual" not in config:
            raise ConfigError("rho_annual given without sigma_annual")
        return quarterly_from_annual(
            config.get("rho_annual"), config.get("sigma_annual"), config.get("nu")
        )
    raise ConfigError("productivity process missing: set (rho_z, sigma_z) or (rho_annual, sigma_annual)")


def variant_from_config(config: RunConfig, name: str | None = None) -> VariantConfig:
    if name is not None:
        if name not in VARIANT_NAMES:
            raise ConfigError(f"unknown variant {name!r}; expected one of {VARIANT_NAMES}")
        if name == "labor_cost":
            return VariantConfig(cost_denomination="labor")
        if name == "production_good_cost":
            return VariantConfig(cost_denomination="production_good")
        if name == "delayed_entry":
            return VariantConfig(delayed_entry=True)
        if name == "risk_neutral":
            return VariantConfig(risk_neutral=True)
        if name == "interest_sensitive":
            return VariantConfig(
                alpha_c=config.get("variant_alpha_c"), alpha_e=config.get("variant_alpha_e")
            )
        return VariantConfig(
            free_entry=FreeEntryConfig(e_tilde=1.0, alpha=config.get("variant_free_entry_alpha"))
        )
    try:
        return VariantConfig(
            cost_denomination=config.get("variant_cost_denomination"),
            delayed_entry=config.get("variant_delayed_entry"),
            risk_neutral=config.get("variant_risk_neutral"),
            alpha_c=config.get("variant_alpha_c"),
            alpha_e=config.get("variant_alpha_e"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def fixed_params(config: RunConfig, variant: VariantConfig | None = None) -> FixedParams:
    rho_z, sigma_z = productivity_process(config)
    try:
        return FixedParams(
            beta=config.require("beta"),
            sigma=config.get("sigma"),
            kappa1=config.get("kappa1"),
            gamma=config.get("gamma"),
            xi=config.get("xi"),
            phi=config.get("phi"),
            nu=config.get("nu"),
            rho_z=rho_z,
            sigma_z=sigma_z,
            k=config.get("k"),
            rho_m=config.get("rho_m"),
            variant=variant or VariantConfig(),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def targets_from_config(config: RunConfig) -> CalibrationTargets:
    try:
        return CalibrationTargets(
            annual_exit_rate=config.require("target_annual_exit_rate"),
            avg_incumbent_size=config.require("target_avg_incumbent_size"),
            avg_exiting_size=config.require("target_avg_exiting_size"),
            employment=config.require("target_employment"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def params_from_config(config: RunConfig, variant: VariantConfig | None = None) -> ModelParams:
    """Full parameter set from an already-calibrated configuration."""
    rho_z, sigma_z = productivity_process(config)
    try:
        mu_c = config.require("mu_c")
        sigma_c = config.require("sigma_c")
        cost = LognormalSpec(mu=mu_c, sigma=sigma_c)
        entry = LognormalSpec(
            mu=config.get("mu_e", mu_c), sigma=config.get("sigma_e", sigma_c)
        )
        return ModelParams(
            beta=config.require("beta"),
            sigma=config.get("sigma"),
            kappa0=config.require("kappa0"),
            kappa1=config.get("kappa1"),
            gamma=config.get("gamma"),
            xi=config.get("xi"),
            phi=config.get("phi"),
            nu=config.get("nu"),
            entrant_mass=config.require("entrant_mass"),
            productivity=AR1Spec(rho=rho_z, sigma=sigma_z, mean=config.require("a_z")),
            operating_cost=cost,
            entry_cost=entry,
            k=config.get("k"),
            rho_m=config.get("rho_m"),
            variant=variant or variant_from_config(config),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def params_to_config_text(params: ModelParams) -> str:
    pairs = [
        ("beta", params.beta), ("sigma", params.sigma), ("kappa0", params.kappa0),
        ("kappa1", params.kappa1), ("gamma", params.gamma), ("xi", params.xi),
        ("phi", params.phi), ("nu", params.nu), ("rho_m", params.rho_m),
        ("rho_z", params.productivity.rho), ("sigma_z", params.productivity.sigma),
        ("a_z", params.productivity.mean), ("mu_c", params.operating_cost.mu),
        ("sigma_c", params.operating_cost.sigma), ("mu_e", params.entry_cost.mu),
        ("sigma_e", params.entry_cost.sigma), ("entrant_mass", params.entrant_mass),
    ]
    lines = [f"{key} = {NUM_FORMAT % value}" for key, value in pairs]
    lines.append(f"k = {params.k}")
    return "\n".join(lines) + "\n"


def _output_dir(config: RunConfig, override: str | None) -> Path:
    target = override or os.environ.get(OUTPUT_DIR_ENV) or config.get("output_dir")
    return Path(target)


def _write_all(outdir: Path, files: dict[str, str]) -> list[str]:
    outdir.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (outdir / name).write_text(content)
    return sorted(files)


def _irf_summary_text(irf: IrfSet) -> str:
    lines = [f"# normalization: {irf.normalization}"]
    lines.append("series,impact,peak,autocorr_4q")
    for name, stats in irf.summary().items():
        lines.append(
            ",".join(
                [name, NUM_FORMAT % stats["impact"], NUM_FORMAT % stats["peak"],
                 NUM_FORMAT % stats["autocorr_4q"]]
            )
        )
    return "\n".join(lines) + "\n"


def _moment_report(achieved: dict, targets: CalibrationTargets) -> str:
    rows = [
        ("annual_exit_rate", targets.annual_exit_rate),
        ("avg_incumbent_size", targets.avg_incumbent_size),
        ("avg_exiting_size", targets.avg_exiting_size),
        ("employment", targets.employment),
    ]
    lines = ["moment,target,achieved,relative_error"]
    for name, target in rows:
        got = achieved[name]
        lines.append(
            ",".join([name, NUM_FORMAT % target, NUM_FORMAT % got, NUM_FORMAT % (got / target - 1.0)])
        )
    return "\n".join(lines) + "\n"


def _steady_state_moments(params: ModelParams):
    ss = solve_stationary_equilibrium(params)
    agg = ss.aggregates
    return ss, {
        "annual_exit_rate": agg.annual_exit_rate,
        "avg_incumbent_size": agg.avg_incumbent_size,
        "avg_exiting_size": agg.avg_exiting_size,
        "employment": agg.employment,
    }


def cmd_calibrate(config: RunConfig, args) -> dict[str, str]:
    targets = targets_from_config(config)
    if args.check:
        params = params_from_config(config)
        _, achieved = _steady_state_moments(params)
        return {"calibration_check.csv": _moment_report(achieved, targets)}
    result = calibrate(targets, fixed_params(config))
    files = {
        "calibrated_params.cfg": params_to_config_text(result.params),
        "calibration_moments.csv": _moment_report(result.achieved, targets),
    }
    return files


def cmd_steady(config: RunConfig, args) -> dict[str, str]:
    ss = solve_stationary_equilibrium(params_from_config(config))
    return {
        "steady_report.txt": steady_report(ss),
        "steady_profiles.csv": grid_profile_csv(ss),
        "fig4_profiles.csv": analysis.profiles_csv(ss),
        "fig5_sizedist.csv": analysis.size_distribution_csv(ss),
    }


def _rf_params(params: ModelParams) -> RFParams:
    return RFParams(
        beta=params.beta, sigma=params.sigma, kappa1=params.kappa1, nu=params.nu,
        gamma=params.gamma, xi=params.xi, phi=params.phi, rho_m=params.rho_m,
    )


def _hf_irf(params: ModelParams, config: RunConfig) -> tuple:
    ss = solve_stationary_equilibrium(params)
    model = solve_model(ss)
    irf = impulse_response(
        model, horizon=config.get("horizon"), rate_impact_pp=config.get("rate_impact_pp")
    )
    return ss, model, irf


def _variant_steady_state(config: RunConfig, name: str):
    """Stationary equilibrium of a named variant, recalibrated where the
    variant moves the stationary economy."""
    variant = variant_from_config(config, name)
    if name == "free_entry":
        params = params_from_config(config)
        ss, fe_sol = solve_free_entry_stationary(
            params, config.require("target_employment"), variant.free_entry.alpha
        )
        return ss, fe_sol, None
    if name in ("risk_neutral", "interest_sensitive"):
        # Stationary equilibrium coincides with the baseline one.
        ss = solve_stationary_equilibrium(params_from_config(config))
        return with_variant(ss, variant), None, None
    cal = recalibrate_variant(targets_from_config(config), fixed_params(config), variant)
    return solve_stationary_equilibrium(cal.params), None, cal


def cmd_irf(config: RunConfig, args) -> dict[str, str]:
    if args.model == "rf":
        rfp = _rf_params(params_from_config(config))
        irf = rf_irf(
            solve_rf(rfp), rfp, horizon=config.get("horizon"),
            rate_impact_pp=config.get("rate_impact_pp"),
        )
        return {
            "irf_rf.csv": irf.to_csv(),
            "irf_rf.meta.txt": irf.metadata(),
            "irf_rf_summary.csv": _irf_summary_text(irf),
        }
    if args.variant:
        ss, _, _ = _variant_steady_state(config, args.variant)
        model = solve_model(ss)
        irf = impulse_response(
            model, horizon=config.get("horizon"), rate_impact_pp=config.get("rate_impact_pp")
        )
    else:
        _, _, irf = _hf_irf(params_from_config(config), config)
    tag = args.variant if args.variant else None
    stem = f"irf_hf_{args.variant}" if args.variant else "irf_hf"
    return {
        f"{stem}.csv": irf.to_csv(variant_tag=tag),
        f"{stem}.meta.txt": irf.metadata() + (f"variant = {args.variant}\n" if args.variant else ""),
        f"{stem}_summary.csv": _irf_summary_text(irf),
    }


def cmd_decompose(config: RunConfig, args) -> dict[str, str]:
    params = params_from_config(config)
    ss, model, hf = _hf_irf(params, config)
    rfp = _rf_params(params)
    rf = rf_irf(solve_rf(rfp), rfp, horizon=config.get("horizon"), rate_impact_pp=config.get("rate_impact_pp"))
    contribs = analysis.price_contributions(hf, ss, horizon=config.get("horizon"))
    gaps = analysis.employment_gap_rf_prices(rf, hf, ss)
    masses = analysis.irf_mass_path(model, hf)
    deltas = analysis.distribution_shift(masses, ss.measure.mass, [0, 4, 12, 20])
    return {
        "fig6_contributions.csv": analysis.contributions_csv(contribs),
        "fig7_gaps.csv": analysis.gaps_csv(gaps),
        "fig8_distshift.csv": analysis.distribution_shift_csv(ss, deltas),
    }


def cmd_variant(config: RunConfig, args) -> dict[str, str]:
    name = args.name
    files: dict[str, str] = {}
    if name == "interest_sensitive" and "variant_alpha_c" not in config:
        # No sensitivities supplied: target the reported rate responses.
        base_ss = solve_stationary_equilibrium(params_from_config(config))
        alpha_c, alpha_e, achieved = calibrate_interest_sensitivity(base_ss)
        ss = with_variant(base_ss, VariantConfig(alpha_c=alpha_c, alpha_e=alpha_e))
        files["interest_sensitivity.txt"] = (
            f"alpha_c = {NUM_FORMAT % alpha_c}\nalpha_e = {NUM_FORMAT % alpha_e}\n"
            f"exit_impact_bp = {NUM_FORMAT % achieved[0]}\nentry_impact_bp = {NUM_FORMAT % achieved[1]}\n"
        )
    else:
        ss, fe_sol, cal = _variant_steady_state(config, name)
        if fe_sol is not None:
            files["free_entry_report.txt"] = (
                f"entrant_mass = {NUM_FORMAT % fe_sol.entrant_mass}\n"
                f"expected_entrant_value = {NUM_FORMAT % fe_sol.expected_entrant_value}\n"
                f"e_tilde = {NUM_FORMAT % fe_sol.e_tilde}\n"
            )
        if cal is not None:
            files["calibrated_params.cfg"] = params_to_config_text(cal.params)
    model = solve_model(ss)
    irf = impulse_response(model, horizon=config.get("horizon"), rate_impact_pp=config.get("rate_impact_pp"))
    files[f"irf_hf_{name}.csv"] = irf.to_csv(variant_tag=name)
    files[f"irf_hf_{name}_summary.csv"] = _irf_summary_text(irf)
    return files


def cmd_sweep(config: RunConfig, args) -> dict[str, str]:
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse sweep values {args.values!r}") from exc
    if not values or not all(0.0 < v < 1.0 for v in values):
        raise ConfigError("sweep values must be returns-to-scale parameters in (0, 1)")
    if "rho_annual" not in config:
        raise ConfigError("the returns-to-scale sweep needs rho_annual and sigma_annual")
    rows = returns_to_scale_sweep(
        values, targets_from_config(config), fixed_params(config),
        config.require("rho_annual"), config.require("sigma_annual"),
    )
    lines = ["nu,exit_impact_bp,entry_impact_bp,output_impact_pct,output_gap_vs_rf_pp"]
    for row in rows:
        lines.append(
            ",".join(
                NUM_FORMAT % row[key]
                for key in ("nu", "exit_impact_bp", "entry_impact_bp", "output_impact_pct", "output_gap_vs_rf_pp")
            )
        )
    return {"nu_sweep.csv": "\n".join(lines) + "\n"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nkfirms",
        description="Solve, calibrate, and simulate the heterogeneous-firm New Keynesian economy.",
    )
    parser.add_argument("--config", required=True, help="path to the flat key = value configuration")
    parser.add_argument("--output-dir", default=None, help=f"output directory (or ${OUTPUT_DIR_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="match the stationary moments and write parameters")
    p.add_argument("--check", action="store_true", help="only report moments of the given parameters")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("steady", help="solve the stationary equilibrium and write reports")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("irf", help="impulse responses to the monetary shock")
    p.add_argument("--model", choices=("hf", "rf"), default="hf")
    p.add_argument("--variant", choices=VARIANT_NAMES, default=None)
    p.set_defaults(func=cmd_irf)

    p = sub.add_parser("decompose", help="price contributions, employment gaps, distribution shifts")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("variant", help="recalibrate and simulate a model variant")
    p.add_argument("--name", choices=VARIANT_NAMES, required=True)
    p.set_defaults(func=cmd_variant)

    p = sub.add_parser("sweep", help="recalibrate across returns-to-scale values")
    p.add_argument("--values", required=True, help="comma-separated returns-to-scale values")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = parse_config(args.config)
        files = args.func(config, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (IndeterminacyError, NonConvergenceError, np.linalg.LinAlgError, ValueError) as exc:
        category = type(exc).__name__
        print(f"numerical failure [{category}]: {exc}", file=sys.stderr)
        return 1
    written = _write_all(_output_dir(config, args.output_dir), files)
    for name in written:
        print(name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
