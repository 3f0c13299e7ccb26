"""Configuration ingestion, experiment dispatch, and stable serialization.

One JSON config drives every command; frequencies in the file are cyclic
(Hz-like) and converted to angular units exactly once at parse time. Outputs
are CSV files (LF, ``#`` comment header, unit-suffixed columns, shortest
round-trip float formatting) plus a ``manifest.json`` carrying the config
echo, derived scales, regime flags, and per-file checksums, so identical
configs produce identical bytes.

Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 regime violation
under --strict.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import adiabatic_validity, decoherence_report, potential_surfaces, stability_check
from .constants import AMU
from .core.linalg import NonHermitianError, PropagationError
from .core.states import TruncationError
from .model import (
    DerivedScales,
    Environment,
    FieldConfig,
    GeometryError,
    ParticleGeometry,
    RegimeError,
    TrapConfig,
    derive_scales,
    rescaled,
)
from .protocol import (
    alignment_sweep,
    escape_momentum,
    model_crosscheck,
    recurrence_sweep,
    run_interferometer,
    simulate_stabilization,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_REGIME = 4

TWO_PI = 2 * math.pi


class ConfigError(ValueError):
    """Missing file, malformed document, unknown key, or out-of-range value."""


@dataclass
class RunConfig:
    geometry: ParticleGeometry
    trap: TrapConfig
    fields: FieldConfig
    environment: Environment
    t2: float
    simulation: dict
    output: dict
    echo: dict = field(default_factory=dict)


_DEFAULTS = {
    "particle": {"l2_nm": None, "density_kg_m3": 3500.0, "sigma_uC_m2": 3.5},
    "trap": {"U_ac_V": 2500.0, "omega_ac_Hz": 0.5e6, "d0_um": 350.0, "epsilon": 0.0},
    "fields": {"gamma0_GHz_per_T": 28.024, "Dnv_GHz": 2.87},
    "environment": {"T_K": 300.0, "pressure_mbar": 1e-8, "gas_mass_amu": 28.0,
                    "T2_us": 10.0, "A_fl_nT_sqrtHz": 1.0, "alpha_im": 1e-32},
    "simulation": {"fock_dim": 60, "fock_dim_xi": 40, "rotor_L": 0, "rescale": 1.0,
                   "n_periods": 2.0, "n_out": 41, "tau_points": 33,
                   "gamma_points": 721, "pair": "zeeman-term",
                   "gamma_sep": 1e-3, "sweep": {}},
    "output": {"directory": "out", "format": "csv"},
}

_KNOWN = {
    "particle": {"l1_nm", "l2_nm", "l3_nm", "density_kg_m3", "sigma_uC_m2"},
    "trap": {"U_ac_V", "omega_ac_Hz", "d0_um", "epsilon"},
    "fields": {"B_mT", "rotation_Hz", "gamma0_GHz_per_T", "Dnv_GHz"},
    "environment": {"T_K", "pressure_mbar", "gas_mass_amu", "T2_us",
                    "A_fl_nT_sqrtHz", "alpha_im"},
    "simulation": {"fock_dim", "fock_dim_xi", "rotor_L", "rescale", "n_periods",
                   "n_out", "tau_points", "gamma_points", "pair", "gamma_sep",
                   "sweep"},
    "output": {"directory", "format"},
    "sweep": {"B_mT", "T_K", "omega_Hz", "l3_nm", "m", "log"},
}


def _check_keys(section: str, data: dict, known_key: str | None = None):
    allowed = _KNOWN[known_key or section]
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {sorted(unknown)}")


def parse_config(path) -> RunConfig:
    """Load, validate, and convert a JSON run configuration."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")

    merged = {}
    for section, defaults in _DEFAULTS.items():
        data = raw.get(section, {})
        if not isinstance(data, dict):
            raise ConfigError(f"section {section!r} must be an object")
        _check_keys(section, data)
        merged[section] = {**defaults, **data}
    if "sweep" in merged["simulation"]:
        _check_keys("simulation.sweep", merged["simulation"]["sweep"], "sweep")

    part = merged["particle"]
    for req, sec in (("l1_nm", "particle"), ("l3_nm", "particle"),
                     ("B_mT", "fields"), ("rotation_Hz", "fields")):
        if merged[sec].get(req) is None:
            raise ConfigError(f"missing required key {sec}.{req}")
    if part["l2_nm"] is None:
        part["l2_nm"] = part["l1_nm"]

    def positive(value, name):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        return float(value)

    try:
        geometry = ParticleGeometry(
            l1=positive(part["l1_nm"], "particle.l1_nm") * 1e-9,
            l2=positive(part["l2_nm"], "particle.l2_nm") * 1e-9,
            l3=positive(part["l3_nm"], "particle.l3_nm") * 1e-9,
            density=positive(part["density_kg_m3"], "particle.density_kg_m3"),
            surface_charge=float(part["sigma_uC_m2"]) * 1e-6,
        )
        trap = TrapConfig(
            u_ac=positive(merged["trap"]["U_ac_V"], "trap.U_ac_V"),
            omega_ac=TWO_PI * positive(merged["trap"]["omega_ac_Hz"], "trap.omega_ac_Hz"),
            d0=positive(merged["trap"]["d0_um"], "trap.d0_um") * 1e-6,
            asymmetry=float(merged["trap"]["epsilon"]),
        )
        fields = FieldConfig(
            b_field=float(merged["fields"]["B_mT"]) * 1e-3,
            omega=TWO_PI * float(merged["fields"]["rotation_Hz"]),
            gamma0=TWO_PI * positive(merged["fields"]["gamma0_GHz_per_T"],
                                     "fields.gamma0_GHz_per_T") * 1e9,
            d_nv=TWO_PI * positive(merged["fields"]["Dnv_GHz"], "fields.Dnv_GHz") * 1e9,
        )
        env = Environment(
            temperature=float(merged["environment"]["T_K"]),
            gas_pressure=float(merged["environment"]["pressure_mbar"]) * 100.0,
            gas_mass=float(merged["environment"]["gas_mass_amu"]) * AMU,
            t2=float(merged["environment"]["T2_us"]) * 1e-6,
            field_noise=float(merged["environment"]["A_fl_nT_sqrtHz"]) * 1e-9,
            polarizability_im=float(merged["environment"]["alpha_im"]),
        )
    except GeometryError as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        geometry=geometry,
        trap=trap,
        fields=fields,
        environment=env,
        t2=env.t2,
        simulation=merged["simulation"],
        output=merged["output"],
        echo=merged,
    )


# ---------------------------------------------------------------------------
# serialization


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    return repr(v)


def write_csv(path: Path, columns: list[str], rows, comments: list[str]) -> int:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    count = 0
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
        count += 1
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return count


def _scales_payload(scales: DerivedScales) -> dict:
    def clean(x):
        return None if (isinstance(x, float) and not math.isfinite(x)) else x

    return {k: clean(v) for k, v in scales.__dict__.items()}


def _grid(spec, name, scale=1.0, log=False):
    if spec is None:
        raise ConfigError(f"command needs simulation.sweep.{name}")
    if not (isinstance(spec, list) and len(spec) == 3):
        raise ConfigError(f"simulation.sweep.{name} must be [start, stop, count]")
    lo, hi, count = float(spec[0]), float(spec[1]), int(spec[2])
    if count < 1:
        raise ConfigError(f"simulation.sweep.{name} count must be >= 1")
    if log:
        return np.logspace(math.log10(lo), math.log10(hi), count) * scale
    return np.linspace(lo, hi, count) * scale


def _pool_map(fn, items, jobs):
    """Map over sweep points, in deterministic item order regardless of jobs."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _interfere_point(args):
    scales, tau, fock, t2 = args
    try:
        run = run_interferometer(scales, tau, fock_dim=fock, t2=t2)
        return tau, run.p_up_numeric, run.p_up_analytic, run.warnings
    except TruncationError:
        # deep squeezing near rephasing outgrows the basis; keep the closed
        # form and blank the numeric column for this arm length
        from .analytics import interference_probability

        p = interference_probability(scales, tau, t2).p_up if tau > 0 else 1.0
        return tau, math.nan, p, [
            f"numeric echo column truncated at fock_dim={fock} for long arms"
        ]


# ---------------------------------------------------------------------------
# commands (each returns (files, flags, warnings))


def cmd_derive(cfg, out_dir, jobs):
    scales = derive_scales(cfg.geometry, cfg.trap, cfg.fields, cfg.environment)
    flags = {
        "omega_beta_over_omega": scales.omega_beta / scales.omega if scales.omega else None,
        "stability": stability_check(scales),
        "dispersive_detuning_over_g": scales.delta_big / scales.g if scales.g else None,
    }
    return {}, flags, []


def cmd_alignment(cfg, out_dir, jobs):
    sweep = cfg.simulation["sweep"]
    b_grid = _grid(sweep.get("B_mT"), "B_mT", scale=1e-3)
    temps = sweep.get("T_K")
    if temps is None:
        raise ConfigError("alignment needs simulation.sweep.T_K (list of temperatures)")
    m = int(sweep.get("m", 1))
    table = alignment_sweep(cfg.geometry, cfg.trap, cfg.fields, b_grid, temps, m)
    f = out_dir / "alignment.csv"
    n = write_csv(f, ["B_mT", "T_K", "mean_cos_gamma", "variance"], table.rows,
                  [f"steady-state alignment sweep, m={m}",
                   "crossing row constructed at B = rotation/gamma0"])
    return {f: n}, {"m": m}, []


def cmd_surfaces(cfg, out_dir, jobs):
    scales = derive_scales(cfg.geometry, cfg.trap, cfg.fields, cfg.environment)
    n_pts = int(cfg.simulation["gamma_points"])
    gammas = np.linspace(0.0, TWO_PI, n_pts)
    rows = []
    for gm in gammas:
        sp = potential_surfaces(scales.delta, scales.g, gm)
        rows.append((gm, sp.omega_plus, sp.omega_minus))
    f = out_dir / "surfaces.csv"
    n = write_csv(f, ["gamma_rad", "omega_plus_rad_s", "omega_minus_rad_s"], rows,
                  ["adiabatic potential surfaces (angular rates; energy = hbar*omega/2)"])
    chk = stability_check(scales)
    return {f: n}, {"stability": chk}, []


def cmd_stabilize(cfg, out_dir, jobs):
    scales = derive_scales(cfg.geometry, cfg.trap, cfg.fields, cfg.environment)
    scales, _ = rescaled(scales, cfg.fields, float(cfg.simulation["rescale"]))
    if not math.isfinite(scales.sigma_gamma):
        raise RegimeError("stabilization undefined at zero coupling")
    sim = cfg.simulation
    rotor_L = int(sim["rotor_L"])
    if rotor_L <= 0:
        rotor_L = int(1.25 * escape_momentum(scales) + 4.8 / (2 * scales.sigma_gamma))
    n_periods = float(sim["n_periods"])
    t_max = n_periods * TWO_PI / scales.omega_eta
    rows = []
    warnings = []
    for spin in ("+x", "-x"):
        traj = simulate_stabilization(scales, rotor_L, scales.sigma_gamma, spin,
                                      t_max=t_max, n_out=int(sim["n_out"]))
        for i, t in enumerate(traj.times):
            rows.append((t, traj.observables["omega_eta_t"][i],
                         traj.observables["transition_prob"][i],
                         traj.observables["mean_cos_gamma"][i],
                         traj.observables["edge_weight"][i], spin))
    f = out_dir / "stabilize.csv"
    n = write_csv(f, ["time_s", "omega_eta_t", "transition_prob", "mean_cos_gamma",
                      "edge_weight", "spin_init"], rows,
                  [f"avoided-crossing stabilization, rotor_L={rotor_L}",
                   f"packet width sigma_gamma={scales.sigma_gamma!r} rad"])
    chk = stability_check(scales)
    if not chk["stable"]:
        warnings.append(f"stability ratio {chk['ratio']:.3g} >= 0.1: crossing trap marginal")
    return {f: n}, {"stability": chk, "rotor_L": rotor_L}, warnings


def cmd_interfere(cfg, out_dir, jobs):
    scales = derive_scales(cfg.geometry, cfg.trap, cfg.fields, cfg.environment)
    warnings = []
    if not (scales.delta_big > 0 and math.isfinite(scales.omega_gamma)):
        raise RegimeError("interferometer needs the dispersive regime (Delta > 0)")
    if scales.delta_big / scales.g > 0.1:
        warnings.append(
            f"detuning ratio Delta/g = {scales.delta_big / scales.g:.3g} "
            "outside the deep-dispersive regime; closed form degrades"
        )
    sim = cfg.simulation
    taus = np.linspace(0.0, math.pi / scales.omega_gamma, int(sim["tau_points"]))
    fock = int(sim["fock_dim"])
    points = _pool_map(_interfere_point,
                       [(scales, float(tau), fock, cfg.t2) for tau in taus], jobs)
    rows = []
    for (tau, p_num, p_ana, run_warnings) in points:
        warnings.extend(w for w in run_warnings if w not in warnings)
        rows.append((tau, tau * scales.omega_gamma / math.pi, p_num, p_ana))
    f1 = out_dir / "interference_trace.csv"
    n1 = write_csv(f1, ["tau_s", "tau_omega_gamma_over_pi", "p_up_numeric",
                        "p_up_analytic"], rows,
                   [f"echo trace at B={cfg.fields.b_field * 1e3!r} mT, fock_dim={fock}"])

    sweep = cfg.simulation["sweep"]
    files = {f1: n1}
    if "B_mT" in sweep:
        b_grid = _grid(sweep["B_mT"], "B_mT", scale=1e-3)
        table = recurrence_sweep(cfg.geometry, cfg.trap, cfg.fields,
                                 cfg.environment, b_grid, cfg.t2)
        f2 = out_dir / "interference_sweep.csv"
        n2 = write_csv(f2, table.columns, table.rows,
                       ["recurrence at tau = pi/omega_gamma vs field",
                        "t2_exceeds = 1 where T2 > protocol duration"])
        files[f2] = n2
    return files, {"delta_over_g": scales.delta_big / scales.g}, warnings


def cmd_validity(cfg, out_dir, jobs):
    sweep = cfg.simulation["sweep"]
    log = bool(sweep.get("log", True))
    omega_grid = _grid(sweep.get("omega_Hz"), "omega_Hz", scale=TWO_PI, log=log)
    l3_grid = _grid(sweep.get("l3_nm"), "l3_nm", scale=1e-9)
    pts = adiabatic_validity(cfg.geometry, cfg.fields, cfg.environment,
                             omega_grid, l3_grid)
    rows = [(p.omega / TWO_PI, p.l3 * 1e9, p.ratio_p, p.ratio_b, p.valid)
            for p in pts]
    f = out_dir / "validity.csv"
    n = write_csv(f, ["omega_Hz", "l3_nm", "ratio_p", "ratio_b", "valid"], rows,
                  ["adiabatic-elimination validity map (threshold 0.01 on both ratios)"])
    return {f: n}, {"points": len(rows)}, []


def cmd_decoherence(cfg, out_dir, jobs):
    sep = float(cfg.simulation["gamma_sep"])
    rep = decoherence_report(cfg.geometry, cfg.environment, sep,
                             gamma0=cfg.fields.gamma0)
    rows = [(sep, rep.rate_field_noise, rep.rate_collisions, rep.rate_photon,
             rep.loc_blackbody, rep.loc_field_noise)]
    f = out_dir / "decoherence.csv"
    n = write_csv(f, ["gamma_sep_rad", "rate_field_noise_per_s",
                      "rate_collisions_per_s", "rate_photon_per_s",
                      "loc_blackbody_per_s", "loc_field_noise_per_s"], rows,
                  ["environmental decoherence rates"])
    return {f: n}, {"rate_photon_over_2pi_Hz": rep.rate_photon / TWO_PI}, []


def cmd_crosscheck(cfg, out_dir, jobs):
    scales = derive_scales(cfg.geometry, cfg.trap, cfg.fields, cfg.environment)
    fields = cfg.fields
    scales, fields = rescaled(scales, fields, float(cfg.simulation["rescale"]))
    sim = cfg.simulation
    res = model_crosscheck(
        scales, fields, str(sim["pair"]),
        fock_dim_gamma=int(sim["fock_dim"]),
        fock_dim_xi=int(sim["fock_dim_xi"]),
        periods=float(sim["n_periods"]),
        n_out=int(sim["n_out"]),
    )
    rows = []
    for i, t in enumerate(res.times):
        rows.append((t, res.reference.observables["mean_gamma_rad"][i],
                     res.candidate.observables["mean_gamma_rad"][i]))
    f = out_dir / "crosscheck.csv"
    n = write_csv(f, ["time_s", "mean_gamma_reference_rad", "mean_gamma_candidate_rad"],
                  rows,
                  [f"pair: {res.pair}",
                   f"max deviation {res.max_deviation!r} rad "
                   f"({res.normalized_deviation!r} of reference peak-to-peak)"])
    return ({f: n},
            {"pair": res.pair, "normalized_deviation": res.normalized_deviation},
            [])


COMMANDS = {
    "derive": cmd_derive,
    "alignment": cmd_alignment,
    "surfaces": cmd_surfaces,
    "stabilize": cmd_stabilize,
    "interfere": cmd_interfere,
    "validity": cmd_validity,
    "decoherence": cmd_decoherence,
    "crosscheck": cmd_crosscheck,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_command(command: str, cfg: RunConfig, out_dir: Path, jobs: int) -> tuple[dict, list[str]]:
    out_dir.mkdir(parents=True, exist_ok=True)
    files, flags, warnings = COMMANDS[command](cfg, out_dir, jobs)
    scales = derive_scales(cfg.geometry, cfg.trap, cfg.fields, cfg.environment)
    manifest = {
        "artifact_version": __version__,
        "command": command,
        "config": cfg.echo,
        "derived_scales": _scales_payload(scales),
        "flags": flags,
        "warnings": warnings,
        "outputs": {
            f.name: {"sha256": _sha256(f), "rows": n} for f, n in sorted(files.items())
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=float) + "\n",
        encoding="utf-8", newline="\n",
    )
    return manifest, warnings


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gyrospin",
        description="Spin-rotation coupling experiments for levitated nanodiamond rotors",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None, help="output directory (default from config)")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--strict", action="store_true",
                        help="regime warnings become exit code 4")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out) if args.out else Path(cfg.output["directory"])
    try:
        _, warnings = run_command(args.command, cfg, out_dir, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TruncationError, NonHermitianError, PropagationError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RegimeError, GeometryError) as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if warnings and args.strict:
        return EXIT_REGIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
