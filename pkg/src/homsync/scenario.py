"""Scenario files: YAML schema, validation and conversion to simulator objects.

Every physical quantity carries its unit in the key name. Unknown keys are
rejected. Sections are optional at the schema level; each command checks that
the sections it needs are present.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from homsync.budget import PenaltyLedger
from homsync.coincidence import DetectorModel, HomScenario
from homsync.correlator import FitModel
from homsync.jitterchain import DiurnalProfile, FiberLink, JitterStage, LossJitterModel, SyncChain
from homsync.pairsource import PairStatistics, PhotonSource
from homsync.wavepacket import PulseShape, ShapeFamily, Spectrum


class SchemaError(Exception):
    """Scenario file failed validation; ``path`` locates the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PulseCfg(_Strict):
    family: ShapeFamily
    fwhm_ps: float = Field(ge=0)

    def build(self) -> PulseShape:
        return PulseShape(self.family, self.fwhm_ps)


class StageCfg(_Strict):
    name: str
    fwhm_jitter_ps: float = Field(ge=0)


class LinkCfg(_Strict):
    length_km: float = Field(ge=0)
    loss_db_per_km: float = Field(default=0.0, ge=0)
    thermal_coefficient_per_k: float = Field(default=1e-5, gt=0)


class LossModelCfg(_Strict):
    scale_ps: float = Field(gt=0)


class LossSweepCfg(_Strict):
    max_db: float = Field(gt=0)
    step_db: float = Field(gt=0)


class ChainCfg(_Strict):
    stages: list[StageCfg] = []
    link: Optional[LinkCfg] = None
    loss_model: Optional[LossModelCfg] = None
    loss_sweep: Optional[LossSweepCfg] = None

    def build(self) -> SyncChain:
        link = None
        if self.link is not None:
            link = FiberLink(self.link.length_km, self.link.loss_db_per_km, self.link.thermal_coefficient_per_k)
        return SyncChain(tuple(JitterStage(s.name, s.fwhm_jitter_ps) for s in self.stages), link)

    def build_loss_model(self) -> Optional[LossJitterModel]:
        return None if self.loss_model is None else LossJitterModel(self.loss_model.scale_ps)


class SweepRange(_Strict):
    delay_min_ps: float
    delay_max_ps: float
    delay_step_ps: float = Field(gt=0)

    @model_validator(mode="after")
    def _ordered(self):
        if self.delay_max_ps <= self.delay_min_ps:
            raise ValueError("delay_max_ps must exceed delay_min_ps")
        return self

    def delays(self) -> np.ndarray:
        n = int(round((self.delay_max_ps - self.delay_min_ps) / self.delay_step_ps))
        return self.delay_min_ps + self.delay_step_ps * np.arange(n + 1)


class CorrelationCfg(SweepRange):
    pulse_a: str
    pulse_b: str
    jitter_ps: Optional[float] = Field(default=None, ge=0)  # default: chain total
    shots_per_delay: int = Field(default=20000, ge=1)
    fit_model: FitModel = FitModel.GAUSSIAN


class AutocorrCfg(SweepRange):
    shots_per_delay: int = Field(default=20000, ge=1)


class SourceCfg(_Strict):
    pump_family: ShapeFamily = ShapeFamily.GAUSSIAN
    pump_fwhm_ps: float = Field(ge=0)
    pump_center_nm: float = Field(gt=0)
    pump_filter_pm: float = Field(gt=0)
    signal_center_nm: float = Field(gt=0)
    signal_filter_pm: float = Field(gt=0)
    pair_probability: float = Field(ge=0, lt=0.5)
    statistics: PairStatistics = PairStatistics.THERMAL

    def build(self) -> PhotonSource:
        return PhotonSource(
            pump=PulseShape(self.pump_family, self.pump_fwhm_ps),
            pump_spectrum=Spectrum(self.pump_center_nm, self.pump_filter_pm),
            signal_filter=Spectrum(self.signal_center_nm, self.signal_filter_pm),
            pair_probability=self.pair_probability,
            statistics=self.statistics,
        )


class SourcesCfg(_Strict):
    a: SourceCfg
    b: SourceCfg


class DetectorCfg(_Strict):
    efficiency: float = Field(default=1.0, ge=0, le=1)
    dark_count_prob_per_gate: float = Field(default=0.0, ge=0, le=1)
    tdc_bin_ps: float = Field(default=4.0, gt=0)

    def build(self) -> DetectorModel:
        return DetectorModel(self.efficiency, self.dark_count_prob_per_gate, self.tdc_bin_ps)


class DetectorsCfg(_Strict):
    c: DetectorCfg = DetectorCfg()
    d: DetectorCfg = DetectorCfg()


class HomCfg(SweepRange):
    overlap: float = Field(default=1.0, ge=0, le=1)
    pulses_per_point: int = Field(default=100_000, ge=1)
    repetition_rate_mhz: float = Field(default=76.0, gt=0)
    coincidence_window_ps: Optional[float] = Field(default=None, gt=0)
    fit_center_ps: Optional[float] = 0.0


class BudgetEntryCfg(_Strict):
    label: str
    reduction: float = Field(ge=0, le=1)


class WalkoffCfg(_Strict):
    walkoff_ps: float = Field(ge=0)
    coherence_ps: Optional[float] = Field(default=None, gt=0)  # default: source a coherence


class BudgetCfg(_Strict):
    base_cap: Optional[float] = Field(default=None, gt=0, le=1)  # default: weak-pump limit for the source statistics
    jitter_visibility: Optional[float] = Field(default=None, ge=0, le=1)  # default: from sources + chain
    entries: list[BudgetEntryCfg] = []
    walkoff: Optional[WalkoffCfg] = None
    reference_visibility: Optional[float] = Field(default=None, ge=0, le=1)

    def ledger(self, base_cap: float) -> PenaltyLedger:
        return PenaltyLedger(tuple((e.label, e.reduction) for e in self.entries), base_cap)


class DriftCfg(_Strict):
    delta_t_k: float = 1.0
    tolerances_ps: dict[str, float]
    period_s: float = Field(default=86400.0, gt=0)
    fractional_amplitude: float = Field(default=1e-5, gt=0)

    @model_validator(mode="after")
    def _positive(self):
        for k, v in self.tolerances_ps.items():
            if not v > 0:
                raise ValueError(f"tolerance {k!r} must be > 0")
        return self

    def profile(self) -> DiurnalProfile:
        return DiurnalProfile(self.period_s, self.fractional_amplitude)


class RatioSweepCfg(_Strict):
    r_j_min: float = Field(default=0.0, ge=0)
    r_j_max: float = Field(default=5.0, gt=0)
    points: int = Field(default=101, ge=2)
    coherence_ps: float = Field(default=117.0, gt=0)


class ScenarioFile(_Strict):
    name: str
    seed: int
    description: str = ""
    pulses: dict[str, PulseCfg] = {}
    chain: ChainCfg = ChainCfg()
    correlation: Optional[CorrelationCfg] = None
    autocorrelation: Optional[AutocorrCfg] = None
    sources: Optional[SourcesCfg] = None
    detectors: DetectorsCfg = DetectorsCfg()
    hom: Optional[HomCfg] = None
    budget: Optional[BudgetCfg] = None
    drift: Optional[DriftCfg] = None
    sweep: Optional[RatioSweepCfg] = None

    @model_validator(mode="after")
    def _pulse_refs(self):
        if self.correlation is not None:
            for key in ("pulse_a", "pulse_b"):
                ref = getattr(self.correlation, key)
                if ref not in self.pulses:
                    raise ValueError(f"correlation.{key} refers to unknown pulse {ref!r}")
        return self

    def require(self, *sections: str) -> None:
        for s in sections:
            if getattr(self, s) is None:
                raise SchemaError(s, "section required by this command is missing")

    def hom_scenario(self, seed: Optional[int] = None) -> HomScenario:
        self.require("sources", "hom")
        h = self.hom
        return HomScenario(
            source_a=self.sources.a.build(),
            source_b=self.sources.b.build(),
            delay_sweep=h.delays(),
            chain=self.chain.build(),
            overlap=h.overlap,
            detectors=(self.detectors.c.build(), self.detectors.d.build()),
            pulses_per_point=h.pulses_per_point,
            seed=self.seed if seed is None else seed,
            loss_model=self.chain.build_loss_model(),
            repetition_rate=h.repetition_rate_mhz,
            coincidence_window=h.coincidence_window_ps,
            fit_center=h.fit_center_ps,
        )


def bundled_names() -> list[str]:
    root = resources.files("homsync") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve(path_or_name: str) -> str:
    """Read a scenario file by path, or a bundled scenario by bare name."""
    p = Path(path_or_name)
    if p.is_file():
        return p.read_text()
    if path_or_name in bundled_names():
        return (resources.files("homsync") / "scenarios" / f"{path_or_name}.yaml").read_text()
    raise SchemaError("", f"no scenario file or bundled scenario named {path_or_name!r}")


def _loc(loc) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def parse(text: str) -> ScenarioFile:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("", f"not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError("", "scenario must be a mapping")
    try:
        return ScenarioFile.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        msg = "required key is missing" if err["type"] == "missing" else err["msg"]
        if err["type"] == "extra_forbidden":
            msg = "unknown key"
        raise SchemaError(_loc(err["loc"]), msg) from None


def load(path_or_name: str) -> ScenarioFile:
    return parse(resolve(path_or_name))
