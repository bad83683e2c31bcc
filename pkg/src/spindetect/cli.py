"""Command-line front end.

Subcommands
-----------

``design``
    Device feasibility report: zero-point current, field at the spin
    location, coupling, Purcell rate, measurement times, kinetic
    inductance; plus a field-map CSV and figure.

``levels``
    Spin level diagram over a field sweep (CSV + figure).

``simulate``
    One matched pair of spin-present / spin-absent measurement records with
    integrated-signal and posterior traces (CSVs + figure).

``ensemble``
    Monte Carlo error-probability curves for both discriminators at one or
    more detector efficiencies (CSVs, manifest, figures).

Every command is a pure function of (config, seed): reruns produce
byte-identical files.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import (
    RunConfig,
    config_from_preset,
    load_config,
    serialize_config,
)
from .constants import TWO_PI
from .detection import (
    bayes_filter,
    bayes_speedup,
    integrate_signal,
    signal_means,
    threshold_value,
    run_ensemble,
)
from .device import ResonatorParams, field_map
from .dynamics import default_sme_dt, generate_record
from .errors import ConfigError, NumericalFailure
from .spins import (
    bi_hamiltonian,
    bi_level_labels,
    nv_hamiltonian,
    nv_level_labels,
    sweep_levels,
)

__all__ = ["main"]

_DURATION_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*(tau1|s)?\s*$")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as config errors."""

    def error(self, message):
        raise ConfigError(message)


def _parse_duration(text: str) -> tuple:
    """Parse ``20tau1`` / ``0.005s`` / ``0`` into (value, unit)."""
    m = _DURATION_RE.match(text)
    if not m:
        raise ConfigError(
            f"--duration: expected NUMBER with suffix 'tau1' or 's', got {text!r}"
        )
    try:
        value = float(m.group(1))
    except ValueError as exc:
        raise ConfigError(f"--duration: {text!r} is not a number") from exc
    unit = m.group(2)
    if unit is None:
        if value != 0.0:
            raise ConfigError(
                f"--duration: {text!r} needs a unit suffix 'tau1' or 's'"
            )
        unit = "s"
    if value < 0:
        raise ConfigError(f"--duration: must be >= 0, got {value}")
    return value, unit


def _parse_eta_list(text: str) -> tuple:
    items = [part.strip() for part in text.split(",") if part.strip()]
    if not items:
        raise ConfigError("--eta: expected a comma-separated list of values")
    out = []
    for item in items:
        try:
            eta = float(item)
        except ValueError as exc:
            raise ConfigError(f"--eta: {item!r} is not a number") from exc
        if not 0 < eta <= 1:
            raise ConfigError(f"--eta: values must lie in (0, 1], got {eta}")
        out.append(eta)
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="spindetect",
        description="Single-spin microwave detection: design, simulation, inference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, default_needs_device: bool):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--config", metavar="PATH",
                           help="JSON run configuration file")
        group.add_argument("--preset", choices=("nv", "bi", "sim"),
                           help="named parameter bundle")
        p.add_argument("--seed", type=int, metavar="U64",
                       help="master random seed (overrides config)")
        p.add_argument("--out", metavar="DIR",
                       help="output directory (overrides config)")
        p.set_defaults(needs_device=default_needs_device)

    p_design = sub.add_parser(
        "design", help="device feasibility report and field map")
    add_common(p_design, True)
    p_design.add_argument("--zr", type=float, metavar="OHM",
                          help="override the resonator impedance (ohm)")

    p_levels = sub.add_parser(
        "levels", help="spin level diagram over a field sweep")
    add_common(p_levels, True)

    p_sim = sub.add_parser(
        "simulate", help="one matched spin/no-spin record pair")
    add_common(p_sim, False)
    p_sim.add_argument("--duration", metavar="VALUE{tau1|s}",
                       help="model time to simulate, e.g. 20tau1 or 0.005s")

    p_ens = sub.add_parser(
        "ensemble", help="Monte Carlo error curves for both discriminators")
    add_common(p_ens, False)
    p_ens.add_argument("--duration", metavar="VALUE{tau1|s}",
                       help="model time per trial, e.g. 20tau1 or 0.005s")
    p_ens.add_argument("--trials", type=int, metavar="N",
                       help="number of trials per hypothesis (overrides config)")
    p_ens.add_argument("--eta", metavar="LIST",
                       help="comma-separated detector efficiencies, e.g. 0.25,0.5,1")

    return parser


def _resolve_config(args) -> RunConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    elif args.preset is not None:
        cfg = config_from_preset(args.preset)
    elif not args.needs_device:
        cfg = config_from_preset("sim")
    else:
        raise ConfigError(
            f"{args.command}: supply --preset nv|bi or --config PATH"
        )

    run = cfg.run
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError(f"--seed: must be an unsigned 64-bit integer, got {args.seed}")
        run = replace(run, master_seed=args.seed)
    if getattr(args, "trials", None) is not None:
        run = replace(run, trials=args.trials)
    if getattr(args, "eta", None) is not None:
        run = replace(run, eta_list=_parse_eta_list(args.eta))
    if getattr(args, "duration", None) is not None:
        value, unit = _parse_duration(args.duration)
        if unit == "s":
            run = replace(run, duration_s=value, duration_tau1=None)
        else:
            run = replace(run, duration_s=None, duration_tau1=value)
    if args.out is not None:
        run = replace(run, out_dir=args.out)
    return replace(cfg, run=run)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(value, spec: str = "%.12g") -> str:
    value = float(value)
    if np.isnan(value):
        return "nan"
    return spec % value


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, document) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _ensure_out(cfg: RunConfig) -> Path:
    out = Path(cfg.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# design
# ---------------------------------------------------------------------------

def cmd_design(cfg: RunConfig, zr_override: float | None = None) -> int:
    from .device import design_report
    from .plotting import plot_field_map

    bundle = cfg.bundle()
    if zr_override is not None:
        if zr_override <= 0:
            raise ConfigError(f"--zr: must be positive, got {zr_override}")
        r = bundle.resonator
        bundle = replace(bundle, resonator=ResonatorParams(
            omega_r=r.omega_r, z_r=zr_override, kappa=r.kappa, kappa_1=r.kappa_1,
        ))

    report = design_report(
        bundle.resonator,
        bundle.geometry,
        bundle.spin_point,
        bundle.element_magnitude,
        bundle.g_nominal,
        bundle.gamma_phi,
        bundle.eta,
        bundle.gamma_dec,
    )
    report["system"] = bundle.name
    report["omega_r_rad_per_s"] = bundle.resonator.omega_r
    report["z_r_ohm"] = bundle.resonator.z_r

    out = _ensure_out(cfg)
    _write_json(out / "design_report.json", report)

    geom = bundle.geometry
    x_values = np.linspace(-3.0 * geom.width, 3.0 * geom.width, 121)
    y_values = np.linspace(-4.0 * geom.thickness, 4.0 * geom.thickness, 81)
    bx, by = field_map(geom, report["delta_i_A"], x_values, y_values)
    rows = []
    for iy, y in enumerate(y_values):
        for ix, x in enumerate(x_values):
            mag = float(np.hypot(bx[iy, ix], by[iy, ix]))
            rows.append((
                _fmt(x), _fmt(y), _fmt(bx[iy, ix]), _fmt(by[iy, ix]), _fmt(mag),
            ))
    _write_csv(out / "fieldmap.csv", ("x_m", "y_m", "Bx_T", "By_T", "|B|_T"), rows)

    plot_field_map(geom, x_values, y_values, bx, by, out / "fieldmap.png",
                   spin_point=bundle.spin_point)

    print(f"system: {bundle.name}")
    print(f"zero-point current: {report['delta_i_A'] * 1e9:.4g} nA")
    print(f"field at spin point: {report['delta_b_T'] * 1e6:.4g} uT")
    print(f"coupling from field: 2pi x {report['g_from_field_rad_per_s'] / TWO_PI / 1e3:.4g} kHz")
    print(f"coupling (nominal): 2pi x {report['g_nominal_rad_per_s'] / TWO_PI / 1e3:.4g} kHz")
    print(f"kinetic inductance: {report['kinetic_inductance_H'] * 1e12:.4g} pH")
    print(f"Purcell rate: {report['gamma_p_per_s']:.6g} 1/s"
          f" (1/gamma_p = {1e6 / report['gamma_p_per_s']:.4g} us)")
    print(f"tau_1: {report['tau_1_s'] * 1e3:.4g} ms")
    print(f"tau_eta (eta = {report['eta']:g}): {report['tau_eta_s'] * 1e3:.4g} ms")
    print(f"wrote {out / 'design_report.json'}, {out / 'fieldmap.csv'}, "
          f"{out / 'fieldmap.png'}")
    return 0


# ---------------------------------------------------------------------------
# levels
# ---------------------------------------------------------------------------

def cmd_levels(cfg: RunConfig) -> int:
    from .plotting import plot_levels

    if cfg.system == "nv":
        params = cfg.nv
        hamiltonian = lambda b0: nv_hamiltonian(params, np.array([0.0, 0.0, b0]))
        label_fn = nv_level_labels
    elif cfg.system == "bi":
        params = cfg.bi
        hamiltonian = lambda b0: bi_hamiltonian(params, np.array([0.0, 0.0, b0]))
        label_fn = lambda eig: bi_level_labels(eig, params.nuclear_spin)
    else:
        raise ConfigError(
            f"levels: system {cfg.system!r} has no level structure; use 'nv' or 'bi'"
        )

    sweep_cfg = cfg.levels
    if sweep_cfg.b_min == sweep_cfg.b_max:
        b0_values = np.array([sweep_cfg.b_min])
    else:
        b0_values = np.linspace(sweep_cfg.b_min, sweep_cfg.b_max, sweep_cfg.steps)

    with warnings.catch_warnings():
        warnings.simplefilter("once")
        sweep = sweep_levels(hamiltonian, b0_values, label_fn)

    out = _ensure_out(cfg)
    rows = []
    n_levels = sweep.energies.shape[1]
    for i, b0 in enumerate(sweep.b0_values):
        for j in range(n_levels):
            rows.append((
                _fmt(b0), str(j), sweep.labels[j],
                _fmt(sweep.energies[i, j] / TWO_PI),
            ))
    _write_csv(out / "levels.csv",
               ("B0_T", "level_index", "label", "energy_over_h_Hz"), rows)
    plot_levels(sweep, out / "levels.png",
                title=f"{cfg.system} energy levels")

    print(f"system: {cfg.system}")
    print(f"sweep: {b0_values[0] * 1e3:g} to {b0_values[-1] * 1e3:g} mT, "
          f"{len(b0_values)} points, {n_levels} levels")
    print(f"wrote {out / 'levels.csv'}, {out / 'levels.png'}")
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_RECORD_HEADER = ("t_s", "dY", "sigma_x", "sigma_y", "sigma_z")


def _record_sidecar(cfg: RunConfig, record, n_steps: int) -> dict:
    from .config import _model_to_dict

    return {
        "schema_version": 1,
        "system": cfg.system,
        "model": _model_to_dict(cfg.model),
        "params_hash": record.params_hash,
        "seed": record.seed,
        "trial_index": record.trial_index,
        "spin_present": record.spin_present,
        "dt_s": record.dt,
        "duration_s": record.duration,
        "n_steps": n_steps,
    }


def _write_record_csv(path: Path, record, traj) -> None:
    times = record.times
    if traj is not None and not np.all(np.isnan(traj.sigma_z)):
        sx, sy, sz = traj.sigma_x, traj.sigma_y, traj.sigma_z
    else:
        nan = np.full(len(times), np.nan)
        sx = sy = sz = nan
    rows = [
        (_fmt(times[k]), _fmt(record.increments[k], "%.17g"),
         _fmt(sx[k]), _fmt(sy[k]), _fmt(sz[k]))
        for k in range(len(times))
    ]
    _write_csv(path, _RECORD_HEADER, rows)


def cmd_simulate(cfg: RunConfig) -> int:
    from .plotting import plot_simulation

    p = cfg.model
    dt = cfg.run.dt_s if cfg.run.dt_s is not None else default_sme_dt(p)
    duration = cfg.run.duration_seconds(p.tau_1)
    seed = cfg.run.master_seed
    out = _ensure_out(cfg)

    record_spin, traj = generate_record(
        p, duration, dt, seed, spin_present=True, trial_index=0, sample_stride=1)
    record_nospin, _ = generate_record(
        p, duration, dt, seed, spin_present=False, trial_index=0, sample_stride=1)

    n_steps = len(record_spin.increments)
    _write_record_csv(out / "record_spin.csv", record_spin, traj)
    _write_record_csv(out / "record_nospin.csv", record_nospin, None)
    _write_json(out / "record_spin.json", _record_sidecar(cfg, record_spin, n_steps))
    _write_json(out / "record_nospin.json", _record_sidecar(cfg, record_nospin, n_steps))

    if n_steps == 0:
        _write_csv(out / "zeta.csv", ("t_s", "zeta_spin", "zeta_nospin"), [])
        _write_csv(out / "posterior.csv", ("t_s", "p_spin", "p_nospin"), [])
        print("duration 0: wrote empty record, zeta and posterior tables")
        return 0

    zeta_spin = integrate_signal(record_spin)
    zeta_nospin = integrate_signal(record_nospin)
    post_spin = bayes_filter(record_spin, p, prior=cfg.run.prior, sample_stride=1)
    post_nospin = bayes_filter(record_nospin, p, prior=cfg.run.prior, sample_stride=1)

    _write_csv(
        out / "zeta.csv", ("t_s", "zeta_spin", "zeta_nospin"),
        [(_fmt(zeta_spin.times[k]), _fmt(zeta_spin.zeta[k]), _fmt(zeta_nospin.zeta[k]))
         for k in range(n_steps)],
    )
    _write_csv(
        out / "posterior.csv", ("t_s", "p_spin", "p_nospin"),
        [(_fmt(post_spin.times[k]), _fmt(post_spin.p_spin[k]), _fmt(post_nospin.p_spin[k]))
         for k in range(len(post_spin.times))],
    )

    mean_nospin, mean_spin = signal_means(p, zeta_spin.times)
    plot_simulation(zeta_spin, zeta_nospin, mean_spin, mean_nospin,
                    post_spin, post_nospin, traj, p.tau_1,
                    out / "simulate.png")

    print(f"simulated {duration * 1e3:.4g} ms ({n_steps} steps of {dt:.6g} s)"
          f" at eta = {p.eta:g}, seed {seed}")
    print(f"final zeta: spin {zeta_spin.zeta[-1]:+.4f}, "
          f"no spin {zeta_nospin.zeta[-1]:+.4f}")
    print(f"final P(spin|record): spin {post_spin.p_spin[-1]:.4f}, "
          f"no spin {post_nospin.p_spin[-1]:.4f}")
    print(f"wrote record_spin.csv, record_nospin.csv, zeta.csv, posterior.csv, "
          f"simulate.png in {out}")
    return 0


# ---------------------------------------------------------------------------
# ensemble
# ---------------------------------------------------------------------------

def cmd_ensemble(cfg: RunConfig) -> int:
    from .plotting import (
        plot_error_curves,
        plot_posterior_snapshots,
        plot_zeta_histograms,
    )

    base = cfg.model
    dt = cfg.run.dt_s if cfg.run.dt_s is not None else default_sme_dt(base)
    duration = cfg.run.duration_seconds(base.tau_1)
    etas = cfg.run.eta_list if cfg.run.eta_list else (base.eta,)
    snapshot_times = None
    if cfg.run.snapshot_times_tau1 is not None:
        snapshot_times = [t * base.tau_1 for t in cfg.run.snapshot_times_tau1]
    out = _ensure_out(cfg)

    fig7_rows = []
    curves = []
    manifest_runs = []
    for eta in etas:
        p = base.with_updates(eta=eta)
        stats = run_ensemble(
            p, cfg.run.trials, duration, dt, cfg.run.master_seed,
            snapshot_times=snapshot_times, prior=cfg.run.prior,
        )
        tag = f"eta{eta:g}"

        final = stats.snapshots[-1]
        alive = final.alive
        _write_csv(
            out / f"fig5b_{tag}.csv", ("zeta", "hypothesis"),
            [(_fmt(z), "spin") for z in final.zeta_spin[alive]]
            + [(_fmt(z), "nospin") for z in final.zeta_nospin[alive]],
        )
        fig6_rows = []
        for snap in stats.snapshots:
            ok = snap.alive
            fig6_rows.extend(
                (_fmt(snap.time), _fmt(pv), "spin")
                for pv in snap.posterior_spin[ok])
            fig6_rows.extend(
                (_fmt(snap.time), _fmt(pv), "nospin")
                for pv in snap.posterior_nospin[ok])
        _write_csv(out / f"fig6_{tag}.csv", ("t_s", "p_spin", "hypothesis"),
                   fig6_rows)

        for k in range(len(stats.times)):
            fig7_rows.append((
                _fmt(eta), _fmt(stats.times[k]),
                _fmt(stats.error_threshold_analytic[k]),
                _fmt(stats.error_threshold[k]),
                _fmt(stats.error_bayes[k]),
            ))
        curves.append({
            "eta": eta,
            "times_tau1": stats.times / stats.tau_1,
            "analytic": stats.error_threshold_analytic,
            "threshold": stats.error_threshold,
            "bayes": stats.error_bayes,
        })

        zc = float(threshold_value(p, final.time))
        plot_zeta_histograms(final.zeta_spin[alive], final.zeta_nospin[alive],
                             zc, eta, out / f"fig5b_{tag}.png")
        plot_posterior_snapshots(stats.snapshots, stats.tau_1, eta,
                                 out / f"fig6_{tag}.png")

        try:
            speedup = bayes_speedup(stats, level=1e-2)
        except ValueError:
            speedup = None
        manifest_runs.append({
            "eta": eta,
            "params_hash": stats.params_hash,
            "excluded_trials": stats.excluded,
            "final_time_s": float(stats.times[-1]),
            "final_error_threshold": float(stats.error_threshold[-1]),
            "final_error_bayes": float(stats.error_bayes[-1]),
            "final_separation": float(stats.separation[-1]),
            "speedup_at_1e-2": speedup,
        })
        print(f"eta = {eta:g}: final errors threshold "
              f"{stats.error_threshold[-1]:.4g} / bayes {stats.error_bayes[-1]:.4g}"
              f" (analytic {stats.error_threshold_analytic[-1]:.4g});"
              f" excluded {stats.excluded}")
        if speedup is not None:
            print(f"eta = {eta:g}: 1e-2 error reached at "
                  f"{speedup['t_threshold'] * 1e3:.3g} ms (threshold) vs "
                  f"{speedup['t_bayes'] * 1e3:.3g} ms (bayes): "
                  f"{speedup['saving'] * 100:.1f}% faster")

    _write_csv(
        out / "fig7.csv",
        ("eta", "t_s", "error_threshold_analytic", "error_threshold_empirical",
         "error_bayes_empirical"),
        fig7_rows,
    )
    plot_error_curves(curves, out / "fig7.png")

    config_doc = serialize_config(cfg)
    config_doc["run"].pop("out_dir", None)
    manifest = {
        "schema_version": 1,
        "config": config_doc,
        "dt_s": dt,
        "duration_s": duration,
        "tau_1_s": base.tau_1,
        "trials": cfg.run.trials,
        "master_seed": cfg.run.master_seed,
        "prior": cfg.run.prior,
        "runs": manifest_runs,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote fig5b/fig6 CSVs and figures per eta, fig7.csv, fig7.png, "
          f"manifest.json in {out}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        cfg = _resolve_config(args)
        if args.command == "design":
            return cmd_design(cfg, zr_override=args.zr)
        if args.command == "levels":
            return cmd_levels(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "ensemble":
            return cmd_ensemble(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
