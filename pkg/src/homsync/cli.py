"""Command-line runners: one command per experiment, CSV tables plus a key=value summary.

    homsync <command> --scenario <path-or-bundled-name> [--seed N] [--out DIR]

Exit status 0 on success, 2 when the scenario fails validation, 1 when the
simulation itself fails. Failures print a one-line JSON record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from homsync.budget import COMPOSITION_RULE, compose_budget_breakdown, walkoff_penalty
from homsync.coincidence import run_hom
from homsync.correlator import (
    FitModel,
    analytic_autocorr_fwhm,
    analytic_crosscorr_fwhm,
    fit_fwhm,
    simulate_correlation,
)
from homsync.hom_engine import (
    JitterRatio,
    average_visibility,
    dip_fwhm,
    enumerate_multipair_visibility,
    total_timing_jitter,
)
from homsync.jitterchain import (
    chain_total_jitter,
    compose_quadrature,
    extract_component,
    loss_excess_jitter,
    stabilization_interval,
    thermal_drift,
)
from homsync.pairsource import effective_pump, filtered_coherence
from homsync.scenario import ScenarioFile, SchemaError, load
from homsync.wavepacket import ShapeFamily

COMMANDS = ("xcorr", "autocorr", "hom", "jitter-budget", "vis-budget", "drift", "sweep")

Summary = dict[str, object]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "inf" if math.isinf(v) else f"{v:.10g}"
    return str(value)


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_summary(path: Path, summary: Summary) -> None:
    with open(path, "w") as fh:
        for k, v in summary.items():
            fh.write(f"{k}={_fmt(v)}\n")


def run_xcorr(cfg: ScenarioFile, seed: int, out: Path) -> Summary:
    """Pulse cross-correlation through the sync chain.

    CSV ``xcorr.csv``: delay_ps, counts.
    """
    cfg.require("correlation")
    c = cfg.correlation
    pa, pb = cfg.pulses[c.pulse_a].build(), cfg.pulses[c.pulse_b].build()
    jitter = c.jitter_ps if c.jitter_ps is not None else chain_total_jitter(cfg.chain.build(), cfg.chain.build_loss_model())
    hist = simulate_correlation(pa, pb, jitter, c.delays(), c.shots_per_delay, seed)
    hist.to_csv(out / "xcorr.csv")
    fit = fit_fwhm(hist, c.fit_model)
    sync = extract_component(fit.fwhm, [pa.fwhm, pb.fwhm])
    sync_err = fit.fwhm * fit.fwhm_error / sync if sync > 0 else math.inf
    return {
        "tau_cc_ps": fit.fwhm,
        "tau_cc_error_ps": fit.fwhm_error,
        "reduced_chi2": fit.goodness,
        "sync_jitter_ps": sync,
        "sync_jitter_error_ps": sync_err,
        "input_jitter_ps": jitter,
        "quadrature_tau_cc_ps": analytic_crosscorr_fwhm(pa, pb, jitter),
    }


def run_autocorr(cfg: ScenarioFile, seed: int, out: Path) -> Summary:
    """Intensity autocorrelation of every named pulse.

    CSV ``autocorr_<pulse>.csv`` per pulse: delay_ps, counts. Pulse ``i``
    (in file order) uses seed ``seed + i``.
    """
    cfg.require("autocorrelation")
    if not cfg.pulses:
        raise SchemaError("pulses", "autocorr needs at least one pulse")
    a = cfg.autocorrelation
    summary: Summary = {}
    for i, (name, pcfg) in enumerate(cfg.pulses.items()):
        pulse = pcfg.build()
        if pulse.family is ShapeFamily.DELTA:
            continue
        hist = simulate_correlation(pulse, pulse, 0.0, a.delays(), a.shots_per_delay, seed + i)
        hist.to_csv(out / f"autocorr_{name}.csv")
        model = FitModel.GAUSSIAN if pulse.family is ShapeFamily.GAUSSIAN else FitModel.SECH2_AUTOCORR
        fit = fit_fwhm(hist, model)
        factor = analytic_autocorr_fwhm(pulse) / pulse.fwhm
        summary[f"{name}_autocorr_fwhm_ps"] = fit.fwhm
        summary[f"{name}_autocorr_error_ps"] = fit.fwhm_error
        summary[f"{name}_pulse_fwhm_ps"] = fit.fwhm / factor
        summary[f"{name}_pulse_error_ps"] = fit.fwhm_error / factor
        summary[f"{name}_expected_autocorr_ps"] = analytic_autocorr_fwhm(pulse)
    return summary


def run_hom_command(cfg: ScenarioFile, seed: int, out: Path) -> Summary:
    """Two-source interference dip.

    CSV ``hom.csv``: delay_ps, raw, accidental, net, net_error.
    """
    sc = cfg.hom_scenario(seed)
    result = run_hom(sc)
    result.to_csv(out / "hom.csv")
    summary: Summary = {
        "coherence_ps": sc.coherence,
        "sync_jitter_ps": sc.sync_jitter,
        "total_jitter_ps": sc.total_jitter,
    }
    summary.update(result.summary())
    return summary


def run_jitter_budget(cfg: ScenarioFile, seed: int, out: Path) -> Summary:
    """Per-stage jitter table and, optionally, excess jitter against link loss.

    CSV ``jitter_budget.csv``: component, fwhm_jitter_ps.
    CSV ``loss_sweep.csv`` (with ``chain.loss_sweep``): loss_db, excess_jitter_ps, total_jitter_ps.
    """
    chain = cfg.chain.build()
    model = cfg.chain.build_loss_model()
    rows = [(s.name, s.fwhm_jitter) for s in chain.stages]
    summary: Summary = {f"stage_{s.name}_ps": s.fwhm_jitter for s in chain.stages}
    if chain.link is not None and model is not None:
        excess = loss_excess_jitter(chain.link, model)
        rows.append(("loss_excess", excess))
        summary["link_loss_db"] = chain.link.total_loss_db
        summary["loss_excess_ps"] = excess
    total = chain_total_jitter(chain, model)
    rows.append(("total", total))
    summary["total_jitter_ps"] = total
    _write_rows(out / "jitter_budget.csv", ["component", "fwhm_jitter_ps"], rows)

    sweep = cfg.chain.loss_sweep
    if sweep is not None:
        if model is None:
            raise SchemaError("chain.loss_model", "loss_sweep needs a loss model")
        stage_widths = [s.fwhm_jitter for s in chain.stages]
        n = int(math.floor(sweep.max_db / sweep.step_db + 1e-9))
        losses = sweep.step_db * np.arange(n + 1)
        _write_rows(
            out / "loss_sweep.csv",
            ["loss_db", "excess_jitter_ps", "total_jitter_ps"],
            ((L, model(L), compose_quadrature(stage_widths + [model(L)])) for L in losses),
        )
    return summary


def _budget_inputs(cfg: ScenarioFile) -> tuple[float, float]:
    b = cfg.budget
    base_cap = b.base_cap
    if base_cap is None:
        stats = cfg.sources.a.statistics if cfg.sources is not None else "thermal"
        # penalty entries already carry the finite-p multi-pair loss, so start from the weak-pump limit
        base_cap = enumerate_multipair_visibility(0.0, 0.0, stats, 1.0)
    jv = b.jitter_visibility
    if jv is None:
        if cfg.sources is None:
            raise SchemaError("budget.jitter_visibility", "give a value or a sources section to derive it")
        sa, sb = cfg.sources.a.build(), cfg.sources.b.build()
        coherence = 0.5 * (filtered_coherence(sa) + filtered_coherence(sb))
        sync = chain_total_jitter(cfg.chain.build(), cfg.chain.build_loss_model())
        jitter = total_timing_jitter(effective_pump(sa).fwhm, effective_pump(sb).fwhm, sync)
        jv = average_visibility(JitterRatio.from_widths(jitter, coherence))
    return base_cap, jv


def run_vis_budget(cfg: ScenarioFile, seed: int, out: Path) -> Summary:
    """Multiplicative visibility budget.

    CSV ``vis_budget.csv``: label, factor, running_visibility.
    """
    cfg.require("budget")
    base_cap, jv = _budget_inputs(cfg)
    breakdown = compose_budget_breakdown(cfg.budget.ledger(base_cap), jv)
    (out / "vis_budget.csv").write_text(breakdown.to_csv())
    summary: Summary = {"visibility": breakdown.value, "base_cap": base_cap, "jitter_visibility": jv, "rule": COMPOSITION_RULE}
    ref = cfg.budget.reference_visibility
    if ref is not None:
        summary["reference_visibility"] = ref
        summary["gap_to_reference"] = ref - breakdown.value
    w = cfg.budget.walkoff
    if w is not None:
        coherence = w.coherence_ps
        if coherence is None:
            if cfg.sources is None:
                raise SchemaError("budget.walkoff.coherence_ps", "give a value or a sources section to derive it")
            coherence = filtered_coherence(cfg.sources.a.build())
        summary["walkoff_penalty"] = walkoff_penalty(w.walkoff_ps, coherence)
    return summary


def run_drift(cfg: ScenarioFile, seed: int, out: Path) -> Summary:
    """Thermal drift of the sync link and the resulting re-stabilization intervals.

    CSV ``drift.csv``: label, tolerance_ps, interval_s, max_length_km.
    ``max_length_km`` is the longest link whose drift for ``delta_t_k`` stays inside the tolerance.
    """
    cfg.require("drift")
    if cfg.chain.link is None:
        raise SchemaError("chain.link", "drift needs a fiber link")
    d = cfg.drift
    link = cfg.chain.build().link
    profile = d.profile()
    per_km = thermal_drift(link, d.delta_t_k) / link.length if link.length > 0 else math.nan
    rows = []
    summary: Summary = {
        "link_length_km": link.length,
        "drift_per_kelvin_ps": thermal_drift(link, 1.0),
        "drift_ps": thermal_drift(link, d.delta_t_k),
        "diurnal_amplitude_ps": profile.amplitude(link),
        "max_drift_rate_ps_per_s": profile.max_rate(link),
    }
    for label, tol in d.tolerances_ps.items():
        interval = stabilization_interval(link, tol, profile)
        max_len = tol / abs(per_km) if per_km else math.inf
        rows.append((label, tol, interval, max_len))
        summary[f"interval_{label}_s"] = interval
        summary[f"max_length_{label}_km"] = max_len
    _write_rows(out / "drift.csv", ["label", "tolerance_ps", "interval_s", "max_length_km"], rows)
    return summary


def run_sweep(cfg: ScenarioFile, seed: int, out: Path) -> Summary:
    """Jitter-averaged visibility against the jitter/coherence ratio.

    CSV ``sweep.csv``: r_j, average_visibility, jitter_ps, dip_fwhm_ps.
    """
    cfg.require("sweep")
    s = cfg.sweep
    r = np.linspace(s.r_j_min, s.r_j_max, s.points)
    rows = [(x, average_visibility(x), x * s.coherence_ps, dip_fwhm(s.coherence_ps, x * s.coherence_ps)) for x in r]
    _write_rows(out / "sweep.csv", ["r_j", "average_visibility", "jitter_ps", "dip_fwhm_ps"], rows)
    return {"points": s.points, "coherence_ps": s.coherence_ps, "visibility_first": rows[0][1], "visibility_last": rows[-1][1]}


RUNNERS: dict[str, Callable[[ScenarioFile, int, Path], Summary]] = {
    "xcorr": run_xcorr,
    "autocorr": run_autocorr,
    "hom": run_hom_command,
    "jitter-budget": run_jitter_budget,
    "vis-budget": run_vis_budget,
    "drift": run_drift,
    "sweep": run_sweep,
}


def _fail(kind: str, code: int, message: str, **extra) -> int:
    record = {"error": kind, "exit_code": code, "message": message, **extra}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def run_scenario(scenario: str, command: str, seed: Optional[int] = None, out_dir=None) -> int:
    """Run one command on a scenario; returns the process exit status."""
    if command not in RUNNERS:
        return _fail("schema-invalid", 2, f"unknown command {command!r}", path="<command>")
    try:
        cfg = load(scenario)
        out = Path(out_dir) if out_dir is not None else Path("homsync_out") / cfg.name
        out.mkdir(parents=True, exist_ok=True)
        s = cfg.seed if seed is None else seed
        summary: Summary = {"scenario": cfg.name, "command": command, "seed": s}
        summary.update(RUNNERS[command](cfg, s, out))
    except SchemaError as exc:
        return _fail("schema-invalid", 2, exc.message, path=exc.path or "<root>")
    except Exception as exc:  # any simulation failure maps to exit 1
        return _fail("runtime-failure", 1, str(exc), type=type(exc).__name__)
    _write_summary(out / f"{command.replace('-', '_')}_summary.txt", summary)
    for k, v in summary.items():
        print(f"{k}={_fmt(v)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="homsync", description="HOM interference with synchronized independent sources")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--scenario", required=True, help="scenario YAML path or bundled scenario name")
    ap.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    ap.add_argument("--out", default=None, help="output directory (default homsync_out/<scenario name>)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run_scenario(args.scenario, args.command, args.seed, args.out)


if __name__ == "__main__":
    sys.exit(main())
