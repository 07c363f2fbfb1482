"""Pipeline stages behind the command line: simulate, tomo, metrics, report, sweep.

Stages communicate only through files in one output directory, so each one
can be rerun on its own. Every file carries the config echo for replay.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from . import device, reference
from .analyzers import stabilizer_settings, sweep_settings, tomography_plan
from .config import ExperimentConfig, dump_json, parse_config, resolve_noise, resolve_pair_rate
from .counts import CountRecord, RunSeed, read_counts_csv, simulate_records, write_counts_csv
from .hilbert import DensityMatrix
from .metrics import (
    estimate_stabilizers,
    fit_fringe,
    merit_report,
    stabilizer_error,
)
from .state import DOF_LAYOUTS, noisy_he_state
from .tomo import IncompleteDataError, build_input, mc_error, mle_reconstruct

COUNTS_FILE = "counts.csv"
CONFIG_ECHO_FILE = "config_echo.json"
MERIT_FILE = "merit_report.json"
# fixed stream per block, so adding or dropping a block never shifts the others
STREAMS = {"TB": 1, "FB": 2, "stabilizers": 3, "SWEEP:TB": 4, "SWEEP:FB": 5,
           "mc:TB": 11, "mc:FB": 12, "mc:stabilizers": 13}


def reconstruction_file(dof: str) -> str:
    return f"reconstruction_{dof}.json"


def sweep_phases(points: int) -> np.ndarray:
    return 2 * math.pi * np.arange(points) / points


# -- simulate -------------------------------------------------------------------

def simulate(cfg: ExperimentConfig) -> list[CountRecord]:
    noise = resolve_noise(cfg)
    pair_rate = resolve_pair_rate(cfg)
    rho = noisy_he_state(noise)
    seed = RunSeed(cfg.run.seed)
    m = cfg.measurement
    records: list[CountRecord] = []
    for dof in m.dofs:
        plan = tomography_plan(dof, m.realistic_efficiency)
        records += simulate_records(rho, plan, pair_rate, m.integration_time_s,
                                    seed.child(STREAMS[dof]), cfg.car, m.noiseless)
    stab = [s for group in stabilizer_settings(m.realistic_efficiency).values() for s in group]
    records += simulate_records(rho, stab, pair_rate, m.stabilizer_integration_time_s,
                                seed.child(STREAMS["stabilizers"]), cfg.car, m.noiseless)
    if m.sweep is not None:
        records += simulate_sweeps(cfg, rho, pair_rate)
    return records


def simulate_sweeps(cfg: ExperimentConfig, rho: DensityMatrix | None = None,
                    pair_rate: float | None = None) -> list[CountRecord]:
    rho = rho if rho is not None else noisy_he_state(resolve_noise(cfg))
    pair_rate = pair_rate if pair_rate is not None else resolve_pair_rate(cfg)
    m = cfg.measurement
    sweep = m.sweep
    if sweep is None:
        return []
    seed = RunSeed(cfg.run.seed)
    out = []
    for dof in m.dofs:
        settings = sweep_settings(dof, sweep_phases(sweep.points), m.realistic_efficiency)
        out += simulate_records(rho, settings, pair_rate, sweep.integration_time_s,
                                seed.child(STREAMS[f"SWEEP:{dof}"]), cfg.car, m.noiseless)
    return out


def cmd_simulate(cfg: ExperimentConfig, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    records = simulate(cfg)
    path = out_dir / COUNTS_FILE
    write_counts_csv(path, records, header=cfg.echo())
    (out_dir / CONFIG_ECHO_FILE).write_text(dump_json(cfg.echo()))
    return path


# -- tomo -----------------------------------------------------------------------

def load_counts(path: Path) -> tuple[list[CountRecord], ExperimentConfig]:
    if not path.exists():
        raise IncompleteDataError(f"counts file {path} not found")
    records, header = read_counts_csv(path)
    cfg = parse_config(header) if header is not None else ExperimentConfig()
    return records, cfg


def cmd_tomo(counts_path: Path, out_dir: Path) -> list[Path]:
    records, cfg = load_counts(counts_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for dof in cfg.measurement.dofs:
        data = build_input(dof, records, cfg.measurement.realistic_efficiency, cfg.run.subtract_accidentals)
        result = mle_reconstruct(data, cfg.run.tol)
        payload = {"config": cfg.echo(), "dof": dof, "reconstruction": result.to_dict()}
        path = out_dir / reconstruction_file(dof)
        path.write_text(dump_json(payload))
        written.append(path)
    return written


def load_reconstruction(path: Path) -> DensityMatrix:
    if not path.exists():
        raise IncompleteDataError(f"reconstruction {path} not found; run tomo first")
    rec = json.loads(path.read_text())["reconstruction"]
    mat = np.array(rec["rho_real"]) + 1j * np.array(rec["rho_imag"])
    return DensityMatrix.from_unnormalized(mat, DOF_LAYOUTS[json.loads(path.read_text())["dof"]])


# -- metrics --------------------------------------------------------------------

def fringe_records(records: list[CountRecord], dof: str) -> list[CountRecord]:
    return [r for r in records if r.setting_label == f"SWEEP:{dof}"]


def fringe_visibility(records: list[CountRecord], dof: str, subtract: bool = False) -> float | None:
    rows = fringe_records(records, dof)
    if len(rows) < 4:
        return None
    samples = [(float(r.outcome_label), (r.coincidences - (r.accidentals if subtract else 0.0))
                / r.integration_time) for r in rows]
    return fit_fringe(samples)[1]


def compute_merits(records: list[CountRecord], cfg: ExperimentConfig, rhos: dict[str, DensityMatrix]):
    if set(rhos) != {"TB", "FB"}:
        raise IncompleteDataError("the merit report needs reconstructions of both TB and FB")
    realistic = cfg.measurement.realistic_efficiency
    subtract = cfg.run.subtract_accidentals
    seed = cfg.run.seed
    errors = {}
    for dof in ("TB", "FB"):
        data = build_input(dof, records, realistic, subtract)
        errors[dof] = mc_error(data, n_resamples=cfg.run.resamples, seed=RunSeed(seed, STREAMS[f"mc:{dof}"]),
                               workers=cfg.run.workers, tol=cfg.run.tol)
    try:
        stabs = estimate_stabilizers(records, realistic, subtract)
        errors["stabilizers"] = stabilizer_error(records, cfg.run.resamples,
                                                 RunSeed(seed, STREAMS["mc:stabilizers"]), realistic, subtract)
    except KeyError as exc:
        raise IncompleteDataError(str(exc)) from exc
    visibilities = {dof: v for dof in ("TB", "FB") if (v := fringe_visibility(records, dof)) is not None}
    report = merit_report(rhos["TB"], rhos["FB"], errors=errors,
                          stabilizers=[stabs[k] for k in ("S1", "S2", "S3", "S4")],
                          visibilities=visibilities)
    return report, errors


def cmd_metrics(out_dir: Path, counts_path: Path | None = None) -> Path:
    records, cfg = load_counts(counts_path or out_dir / COUNTS_FILE)
    rhos = {dof: load_reconstruction(out_dir / reconstruction_file(dof)) for dof in ("TB", "FB")}
    report, errors = compute_merits(records, cfg, rhos)
    payload = {
        "config": cfg.echo(),
        "merit_report": report.to_dict(),
        "error_estimates": {k: {"std": e.std, "mean": e.mean, "n_resamples": e.n_resamples}
                            for k, e in errors.items()},
    }
    path = out_dir / MERIT_FILE
    path.write_text(dump_json(payload))
    return path


# -- report ---------------------------------------------------------------------

def _pm(value, err, scale=1.0, digits=1) -> str:
    if value is None:
        return "n/a"
    if err is None:
        return f"{value * scale:.{digits}f}"
    return f"{value * scale:.{digits}f} ± {err * scale:.{digits}f}"


def spectra_rows(cfg: ExperimentConfig, span_linewidths: float = 20.0, points: int = 401):
    """Bus transmission through both rings around the idler, pump and signal resonances."""
    r1, r2 = cfg.rings()
    pump = cfg.pump()
    lw1, lw2 = device.linewidth(r1), device.linewidth(r2)
    spacing = pump.rf_frequency_ghz
    span = span_linewidths * max(lw1, lw2) + spacing
    grid = np.linspace(-span, span, points)
    d = cfg.device
    offsets = {"idler": d.detuning_i_ghz or 0.0, "pump": 0.0, "signal": d.detuning_s_ghz or 0.0}
    rows = []
    for region in ("idler", "pump", "signal"):
        # ring 2 sits one bin spacing above ring 1, plus any residual mismatch
        t1 = device.lorentzian_transmission(grid + 0.5 * spacing, lw1)
        t2 = device.lorentzian_transmission(grid - 0.5 * spacing - offsets[region], lw2)
        for x, a, b in zip(grid, t1, t2):
            rows.append((region, float(x), float(a), float(b), float(a * b)))
    return rows


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    path.write_text(buf.getvalue())


def write_fringe_csv(path: Path, records: list[CountRecord]) -> None:
    rows = sorted(records, key=lambda r: float(r.outcome_label))
    samples = [(float(r.outcome_label), r.coincidences / r.integration_time) for r in rows]
    mean, vis, phase0 = fit_fringe(samples)
    _write_csv(path, ("phase_rad", "t_s", "counts", "accidentals", "expected_rate_hz", "fit_rate_hz"),
               [(float(r.outcome_label), r.integration_time, r.coincidences, r.accidentals, r.expected_rate,
                 mean * (1 + vis * math.cos(float(r.outcome_label) + phase0))) for r in rows])


def device_report(cfg: ExperimentConfig) -> dict:
    r1, r2 = cfg.rings()
    summary = device.device_summary(r1, r2, cfg.pump(), cfg.budget(), cfg.device.measured_on_chip_rate_hz)
    d = cfg.device
    if d.detuning_s_ghz is not None and d.detuning_i_ghz is not None:
        summary["spectral_indistinguishability"] = device.spectral_indistinguishability(
            d.detuning_s_ghz, d.detuning_i_ghz, device.linewidth(r1), device.linewidth(r2))
    return summary


def summary_table(report: dict) -> list[dict]:
    rows = []
    for dof in ("FB", "TB"):
        row = report[dof.lower()]
        ref = reference.TABLE[dof]
        rows.append({
            "dof": dof,
            "fidelity": row["fidelity"], "fidelity_std": row["fidelity_std"],
            "purity": row["purity"], "purity_std": row["purity_std"],
            "s_parameter": row["s_parameter"], "s_std": row["s_std"],
            "violation_stds_chsh": row["violation_stds_chsh"],
            "visibility": row["visibility"],
            "reference": {"fidelity": ref[0], "purity": ref[2], "s_parameter": ref[4]},
        })
    return rows


def render_summary(table: list[dict], report: dict, dev: dict) -> str:
    lines = ["Figures of merit of the reduced density matrices", ""]
    lines.append(f"{'DoF':<4} {'Fidelity (%)':<16} {'Purity (%)':<16} {'S-parameter':<18} "
                 f"{'(S-2)/sigma':<12} reference F / P / S")
    for row in table:
        ref = row["reference"]
        viol = row["violation_stds_chsh"]
        lines.append(
            f"{row['dof']:<4} {_pm(row['fidelity'], row['fidelity_std'], 100):<16} "
            f"{_pm(row['purity'], row['purity_std'], 100):<16} "
            f"{_pm(row['s_parameter'], row['s_std'], 1, 3):<18} "
            f"{(f'{viol:.1f}' if viol is not None else 'n/a'):<12} "
            f"{ref['fidelity'] * 100:.1f} / {ref['purity'] * 100:.1f} / {ref['s_parameter']:.3f}")
    lines.append("")
    stds = report.get("stabilizer_stds") or [None] * 4
    for k, (v, e, r) in enumerate(zip(report["stabilizers"], stds, reference.STABILIZERS), start=1):
        lines.append(f"S{k} = {_pm(v, e, 1, 3):<16} reference {r:.3f}")
    w_std = report.get("witness_std")
    lines.append(f"W  = {_pm(report['witness'], w_std, 1, 3):<16} reference {reference.WITNESS:.2f}"
                 f"   hyperentangled: {report['hyperentangled']}")
    if report.get("violation_stds_witness") is not None:
        lines.append(f"|W| / sigma_W = {report['violation_stds_witness']:.1f}")
    lines.append("")
    for row in table:
        if row["visibility"] is not None:
            lines.append(f"{row['dof']} two-photon fringe visibility: {row['visibility'] * 100:.1f} % "
                         f"(reference {reference.VISIBILITY[row['dof']] * 100:.1f} %)")
    lines += [
        "",
        "Device",
        f"  FSR                       {dev['fsr_ghz']:.1f} GHz",
        f"  linewidth (FWHM)          {dev['linewidth_ghz']:.3f} GHz",
        f"  bin spacing / linewidth   {dev['spacing_to_linewidth_ratio']:.1f} "
        f"(claimed ~{dev['claimed_spacing_to_linewidth_ratio']:.0f}: "
        f"{'consistent' if dev['ratio_claim_consistent'] else 'INCONSISTENT'})",
        f"  bin crosstalk             {dev['bin_crosstalk']:.2e}",
        f"  time-bandwidth product    {dev['time_bandwidth_product']:.1f} (distinct DoFs: {dev['dofs_distinct']})",
        f"  generated pair rate       {dev['generated_pair_rate_hz']:.3e} Hz "
        f"(measured on chip {dev['measured_on_chip_rate_hz']:.3e} Hz)",
        f"  detected coincidences     {dev['detected_coincidence_rate_hz']:.3e} Hz",
        f"  rate convention           {dev['rate_convention']}",
    ]
    return "\n".join(lines) + "\n"


def cmd_report(out_dir: Path) -> Path:
    merit_path = out_dir / MERIT_FILE
    if not merit_path.exists():
        raise IncompleteDataError(f"{merit_path} not found; run metrics first")
    payload = json.loads(merit_path.read_text())
    cfg = parse_config(payload["config"])
    report = payload["merit_report"]
    records, _ = load_counts(out_dir / COUNTS_FILE)
    dev = device_report(cfg)
    table = summary_table(report)

    for dof in ("TB", "FB"):
        rho = load_reconstruction(out_dir / reconstruction_file(dof)).matrix
        _write_csv(out_dir / f"rho_{dof}.csv", ("row", "col", "real", "imag"),
                   [(i, j, float(rho[i, j].real), float(rho[i, j].imag)) for i in range(4) for j in range(4)])
        fringe = fringe_records(records, dof)
        if len(fringe) >= 4:
            write_fringe_csv(out_dir / f"fringe_{dof}.csv", fringe)
    _write_csv(out_dir / "spectra.csv", ("region", "detuning_ghz", "t_ring1", "t_ring2", "t_bus"),
               spectra_rows(cfg))
    (out_dir / "device.json").write_text(dump_json(dev))
    summary = {"config": cfg.echo(), "table": table, "merit_report": report, "device": dev,
               "reference": {"stabilizers": list(reference.STABILIZERS), "witness": reference.WITNESS}}
    (out_dir / "summary.json").write_text(dump_json(summary))
    path = out_dir / "summary.txt"
    path.write_text(render_summary(table, report, dev))
    return path


# -- sweep ----------------------------------------------------------------------

def cmd_sweep(cfg: ExperimentConfig, out_dir: Path) -> Path:
    """Phase sweeps alone: fringe CSVs and fitted visibilities."""
    if cfg.measurement.sweep is None:
        cfg = cfg.model_copy(update={"measurement": cfg.measurement.model_copy(
            update={"sweep": type(cfg.measurement).model_fields["sweep"].default})})
    out_dir.mkdir(parents=True, exist_ok=True)
    records = simulate_sweeps(cfg)
    result = {"config": cfg.echo(), "visibility": {}, "visibility_accidentals_subtracted": {}}
    for dof in cfg.measurement.dofs:
        write_fringe_csv(out_dir / f"fringe_{dof}.csv", fringe_records(records, dof))
        result["visibility"][dof] = fringe_visibility(records, dof)
        result["visibility_accidentals_subtracted"][dof] = fringe_visibility(records, dof, subtract=True)
    path = out_dir / "visibility.json"
    path.write_text(dump_json(result))
    return path
