"""End-to-end honest protocol rounds at the exact amplitude level.

One round: Alice prepares one of four entangled polarization states in time
bin 0, tags V with the delay T, optionally applies the random compensation
B to both photons, and the channel rotates both polarizations.  Bob applies
a random two-photon phase mask, tags H with the same delay, and keeps only
detections whose arrival-time difference equals the 6 ns pair label (equal
time bins).  Coincident rounds are decoded as same-polarization -> bit 0,
different-polarization -> bit 1 after the basis transform.

Within the coincident sector the phase-mask average leaves no coherence
between the different-polarization subspace S and the HH / VV remainder,
so a round may be sampled as landing inside or outside S first and then
measured inside its block; the resulting statistics are identical to direct
Born sampling for any mask-uniform ensemble.  The inside_S flag produced
this way is diagnostic only and is not revealed to the parties.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import CollectiveRotation
from .hilbert import (
    N_BINS,
    POLS,
    PairState,
    apply_pol_unitary,
    project,
    pure_state,
    tag,
)

_SQRT_HALF = 1.0 / np.sqrt(2.0)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) * _SQRT_HALF
# quarter-wave retardation selecting the circular basis, applied to photon 1
_BASIS_I_TRANSFORM = np.diag([1.0, -1.0j])
_FLIP_B = CollectiveRotation.bit_flip().matrix


class LogicalState(enum.Enum):
    """The four prepared states (|HV> + c |VH>)/sqrt(2), c in {1, -1, i, -i}."""

    PSI_PLUS = 1.0 + 0.0j
    PSI_MINUS = -1.0 + 0.0j
    PSI_PLUS_I = 1.0j
    PSI_MINUS_I = -1.0j

    @property
    def alpha_beta(self) -> tuple[complex, complex]:
        return _SQRT_HALF, _SQRT_HALF * self.value

    @property
    def basis(self) -> "BasisChoice":
        if self in (LogicalState.PSI_PLUS, LogicalState.PSI_MINUS):
            return BasisChoice.PLUS_MINUS
        return BasisChoice.PLUS_MINUS_I

    @property
    def key_bit(self) -> int:
        """Encoded bit: the + state of each basis carries 0, the - state 1."""
        return 0 if self in (LogicalState.PSI_PLUS, LogicalState.PSI_PLUS_I) else 1


class BasisChoice(enum.Enum):
    PLUS_MINUS = "plus_minus"
    PLUS_MINUS_I = "plus_minus_i"


class PhaseMask(enum.Enum):
    """Random two-photon phase diag(1, e^{i phi}) with phi a multiple of pi/2."""

    ZERO = 0
    QUARTER = 1
    HALF = 2
    THREE_QUARTER = 3

    @property
    def phi(self) -> float:
        return self.value * np.pi / 2.0

    @property
    def matrix(self) -> np.ndarray:
        return np.diag([1.0, np.exp(1.0j * self.phi)])


@dataclass(frozen=True)
class RoundOutcome:
    conclusive: bool
    bit: Optional[int]
    basis_used: BasisChoice
    inside_S: bool = False

    def __post_init__(self):
        if self.conclusive != (self.bit is not None):
            raise ValueError("bit must be present exactly when the round is conclusive")


@dataclass
class TallyCounts:
    """Counters from a simulated session; merged associatively with +."""

    rounds: int = 0
    conclusive: int = 0
    sifted: int = 0
    errors: int = 0
    accidental_conclusive: int = 0
    pS_sample_total: int = 0
    pS_sample_inS: int = 0
    duration_s: float = 0.0

    def __post_init__(self):
        counts = (
            self.rounds,
            self.conclusive,
            self.sifted,
            self.errors,
            self.accidental_conclusive,
            self.pS_sample_total,
            self.pS_sample_inS,
        )
        if any(c < 0 for c in counts) or self.duration_s < 0:
            raise ValueError("tally counters must be nonnegative")
        if not (self.errors <= self.sifted <= self.conclusive):
            raise ValueError("tally ordering violated: errors <= sifted <= conclusive")
        if self.pS_sample_inS > self.pS_sample_total:
            raise ValueError("pS sample counters inconsistent")

    def __add__(self, other: "TallyCounts") -> "TallyCounts":
        return TallyCounts(
            rounds=self.rounds + other.rounds,
            conclusive=self.conclusive + other.conclusive,
            sifted=self.sifted + other.sifted,
            errors=self.errors + other.errors,
            accidental_conclusive=self.accidental_conclusive + other.accidental_conclusive,
            pS_sample_total=self.pS_sample_total + other.pS_sample_total,
            pS_sample_inS=self.pS_sample_inS + other.pS_sample_inS,
            duration_s=self.duration_s + other.duration_s,
        )


# every equal-bin mode pair; arrival-time difference exactly the pair label
COINCIDENT_PAIRS = tuple(
    ((p1, b), (p2, b)) for b in range(N_BINS) for p1 in POLS for p2 in POLS
)
# the protected subspace after both tags: different polarizations, both tagged once
S_PAIRS = ((("H", 1), ("V", 1)), (("V", 1), ("H", 1)))

_V = POLS.index("V")
_VCOUNT = np.zeros((2, N_BINS, 2, N_BINS), dtype=int)
_VCOUNT[_V, :, :, :] += 1
_VCOUNT[:, :, _V, :] += 1
_SAME_POL = np.zeros((2, N_BINS, 2, N_BINS), dtype=bool)
for _p in range(2):
    _SAME_POL[_p, :, _p, :] = True

BLOCK_LABELS = {0: "HH", 1: "S", 2: "VV"}


def prepare(l: LogicalState) -> PairState:
    """Normalized two-photon state alpha |H V> + beta |V H| in time bin 0."""
    alpha, beta = l.alpha_beta
    return pure_state({(("H", 0), ("V", 0)): alpha, (("V", 0), ("H", 0)): beta})


def alice_pipeline(s: PairState, b_choice: str, u: CollectiveRotation) -> PairState:
    """Alice's tag of V, the compensation B on both photons, then the channel."""
    out = tag(s, "V")
    if b_choice == "flip":
        out = apply_pol_unitary(out, _FLIP_B, "both")
    elif b_choice != "identity":
        raise ValueError(f"b_choice must be 'identity' or 'flip', got {b_choice!r}")
    return apply_pol_unitary(out, u.matrix, "both")


def bob_pipeline(s: PairState, mask: PhaseMask) -> PairState:
    """Bob's random phase mask on both photons followed by his tag of H."""
    out = apply_pol_unitary(s, mask.matrix, "both")
    return tag(out, "H")


def coincident_split(s: PairState) -> tuple[float, dict[str, float]]:
    """Coincidence probability and its split over the S / HH / VV blocks.

    Weights are absolute (they sum to the coincidence probability).  The
    blocks are the mask-dephased sectors of the coincident part, labeled by
    the number of V-polarized photons.
    """
    kept, p_conc = project(s, COINCIDENT_PAIRS)
    weights: dict[str, float] = {}
    amps = kept.amplitudes
    for n, label in BLOCK_LABELS.items():
        w = float(np.sum(np.abs(np.where(_VCOUNT == n, amps, 0.0)) ** 2))
        if w > 0.0:
            weights[label] = w
    return p_conc, weights


def _bit0_probability(block_amps: np.ndarray, basis: BasisChoice) -> float:
    """P(same polarization) after the basis transform and the Hadamard pair."""
    state = PairState(block_amps / np.sqrt(np.sum(np.abs(block_amps) ** 2)), "normalized")
    if basis is BasisChoice.PLUS_MINUS_I:
        state = apply_pol_unitary(state, _BASIS_I_TRANSFORM, "photon1")
    state = apply_pol_unitary(state, HADAMARD, "both")
    return float(np.sum(np.abs(np.where(_SAME_POL, state.amplitudes, 0.0)) ** 2))


def conclusive_blocks(
    s: PairState, basis: BasisChoice
) -> tuple[float, list[tuple[str, float, float]]]:
    """Exact round statistics: coincidence probability and per-block bit odds.

    Returns (p_conclusive, blocks) where each block is a tuple of
    (label, absolute weight, P(bit = 0 | that block)).
    """
    kept, p_conc = project(s, COINCIDENT_PAIRS)
    blocks: list[tuple[str, float, float]] = []
    if p_conc <= 0.0:
        return 0.0, blocks
    amps = kept.amplitudes
    for n, label in BLOCK_LABELS.items():
        block = np.where(_VCOUNT == n, amps, 0.0)
        w = float(np.sum(np.abs(block) ** 2))
        if w <= 0.0:
            continue
        blocks.append((label, w, _bit0_probability(block, basis)))
    return p_conc, blocks


def measure(s: PairState, basis: BasisChoice, rng: np.random.Generator) -> RoundOutcome:
    """Sample one post-selected measurement of a post-tag state.

    Conclusive means both photons fall in the equal-bin coincident sector;
    the splitting success at the output beam splitter is an apparatus
    efficiency handled by the detection layer, not resampled here.
    """
    p_conc, blocks = conclusive_blocks(s, basis)
    if rng.random() >= p_conc:
        return RoundOutcome(conclusive=False, bit=None, basis_used=basis)
    labels = [b[0] for b in blocks]
    weights = np.array([b[1] for b in blocks])
    idx = rng.choice(len(blocks), p=weights / weights.sum())
    label, _, p_bit0 = blocks[idx]
    bit = 0 if rng.random() < p_bit0 else 1
    return RoundOutcome(conclusive=True, bit=bit, basis_used=basis, inside_S=label == "S")


def sift(
    alice: Sequence[tuple[LogicalState, BasisChoice]], bob: Sequence[RoundOutcome]
) -> TallyCounts:
    """Reconcile bases round by round and count sifted bits and errors."""
    if len(alice) != len(bob):
        raise ValueError(f"length mismatch: {len(alice)} preparations vs {len(bob)} outcomes")
    tally = TallyCounts(rounds=len(bob))
    for (state, basis), outcome in zip(alice, bob):
        if not outcome.conclusive:
            continue
        tally.conclusive += 1
        if outcome.basis_used is not basis:
            continue
        tally.sifted += 1
        if outcome.bit != state.key_bit:
            tally.errors += 1
    return tally


def estimate_pS(states: Sequence[PairState], rng: np.random.Generator) -> float:
    """Estimate the inside-S fraction from a coincident test sample.

    Each state is measured in the tagged H/V basis immediately after the
    tag (no Hadamard); the estimate is the fraction of HV or VH outcomes.
    The sample must consist of states with nonzero coincident weight.
    """
    if len(states) == 0:
        raise ValueError("pS estimation needs a nonempty sample")
    hits = 0
    for s in states:
        p_conc, weights = coincident_split(s)
        if p_conc <= 0.0:
            raise ValueError("pS sample contains a state with no coincident component")
        if rng.random() < weights.get("S", 0.0) / p_conc:
            hits += 1
    return hits / len(states)
