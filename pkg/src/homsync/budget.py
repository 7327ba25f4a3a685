"""Visibility budget: independent distinguishability penalties on top of the multi-pair cap."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from homsync.hom_engine import visibility_at
from homsync.wavepacket import fwhm_to_sigma

COMPOSITION_RULE = "V = base_cap * jitter_visibility * prod(1 - reduction_i)"


@dataclass(frozen=True)
class PenaltyLedger:
    entries: tuple[tuple[str, float], ...] = ()
    base_cap: float = 1.0 / 3.0

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((str(k), float(v)) for k, v in self.entries))
        for label, r in self.entries:
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"reduction {label!r} must be in [0, 1], got {r}")
        if not 0.0 < self.base_cap <= 1.0:
            raise ValueError("base_cap must be in (0, 1]")


@dataclass
class BudgetBreakdown:
    value: float
    rows: list[tuple[str, float, float]] = field(default_factory=list)  # label, factor, running value
    rule: str = COMPOSITION_RULE

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "factor", "running_visibility"])
        for label, factor, running in self.rows:
            w.writerow([label, f"{factor:.6f}", f"{running:.6f}"])
        return buf.getvalue()


def compose_budget_breakdown(ledger: PenaltyLedger, jitter_visibility: float) -> BudgetBreakdown:
    running = ledger.base_cap
    rows = [("base_cap", ledger.base_cap, running)]
    running *= jitter_visibility
    rows.append(("jitter", jitter_visibility, running))
    for label, r in ledger.entries:
        running *= 1.0 - r
        rows.append((label, 1.0 - r, running))
    # fsum over logs keeps the result independent of entry order
    factors = [ledger.base_cap, jitter_visibility] + [1.0 - r for _, r in ledger.entries]
    if any(f == 0.0 for f in factors):
        value = 0.0
    else:
        value = math.exp(math.fsum(math.log(f) for f in factors))
    return BudgetBreakdown(value, rows)


def compose_budget(ledger: PenaltyLedger, jitter_visibility: float) -> float:
    return compose_budget_breakdown(ledger, jitter_visibility).value


def walkoff_penalty(walkoff: float, coherence: float) -> float:
    """Visibility lost to a fixed group-delay walk-off between the photons, 1 - V(walkoff)."""
    if coherence <= 0:
        raise ValueError("coherence must be > 0")
    return float(1.0 - visibility_at(walkoff, fwhm_to_sigma(coherence)))


DEFAULT_LEDGER = PenaltyLedger(
    entries=(
        ("multipair", 0.009),
        ("spectral_mismatch", 0.01),
        ("gvd_walkoff", 0.002),
        ("polarization", 0.03),
    )
)
