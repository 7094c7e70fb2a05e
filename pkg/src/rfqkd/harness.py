"""Experiment orchestration: seeded sweeps, tabular output, self checks.

A sweep runs one detection session per (rotator setting, scheme) pair from
a single master seed, so repeated runs are byte-identical.  Results are
emitted as CSV or JSON with a fixed column order; when a configuration is
passed along, it is embedded in the output for provenance (CSV comment
lines, or a wrapping object for JSON).
"""

from __future__ import annotations

import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import channel, detection, hilbert, protocol, security
from .channel import RotatorSetting, sweep_settings
from .detection import NoiseConfig, simulate_session
from .protocol import TallyCounts

DEFAULT_SEED = 123456789

CSV_COLUMNS = (
    "setting_index",
    "scheme",
    "conclusive_rate_hz",
    "normalized_coincidence",
    "qber",
    "qber_stderr",
    "p_S",
    "key_rate_fraction",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved configuration of one experiment run."""

    noise: NoiseConfig = field(default_factory=NoiseConfig.four_meter)
    schemes: tuple[str, ...] = ("none", "flip_half")
    settings: tuple[RotatorSetting, ...] = field(default_factory=sweep_settings)
    duration_s: float = 1200.0
    seed: int = DEFAULT_SEED
    mode: str = "sweep"

    def validate(self) -> None:
        if not self.settings:
            raise ValueError("config needs at least one rotator setting")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        for s in self.schemes:
            if s not in channel.SCHEMES:
                raise ValueError(f"unknown scheme {s!r}")
        if self.mode not in ("sweep", "single", "keyrate", "selftest"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "schemes": list(self.schemes),
            "noise": dataclasses.asdict(self.noise),
            "settings": [dataclasses.asdict(s) for s in self.settings],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        kwargs = {}
        if "noise" in data:
            kwargs["noise"] = NoiseConfig(**data["noise"])
        if "schemes" in data:
            schemes = data["schemes"]
            kwargs["schemes"] = (schemes,) if isinstance(schemes, str) else tuple(schemes)
        if "settings" in data:
            kwargs["settings"] = tuple(RotatorSetting(**s) for s in data["settings"])
        for key in ("duration_s", "seed", "mode"):
            if key in data:
                kwargs[key] = data[key]
        return cls(**kwargs)


@dataclass(frozen=True)
class SweepRow:
    setting_index: int
    scheme: str
    conclusive_rate_hz: float
    normalized_coincidence: float
    qber: float
    qber_stderr: float
    p_S: float
    key_rate_fraction: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in CSV_COLUMNS}


def _row_from_tally(index: int, scheme: str, tally: TallyCounts) -> SweepRow:
    rate = tally.conclusive / tally.duration_s
    if tally.sifted > 0:
        qber = tally.errors / tally.sifted
        stderr = math.sqrt(max(qber * (1.0 - qber), 0.0) / tally.sifted)
    else:
        qber = stderr = math.nan
    p_s = (
        tally.pS_sample_inS / tally.pS_sample_total if tally.pS_sample_total > 0 else math.nan
    )
    if math.isfinite(qber) and math.isfinite(p_s) and 0.0 < p_s <= 1.0 and qber <= 0.5:
        rate_fraction = security.key_rate(p_s, qber)
    else:
        rate_fraction = math.nan
    return SweepRow(
        setting_index=index,
        scheme=scheme,
        conclusive_rate_hz=rate,
        normalized_coincidence=math.nan,  # filled in after the whole sweep
        qber=qber,
        qber_stderr=stderr,
        p_S=p_s,
        key_rate_fraction=rate_fraction,
    )


def run_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    """One detection session per (setting, scheme); deterministic given the seed."""
    cfg.validate()
    streams = np.random.SeedSequence(cfg.seed).spawn(len(cfg.schemes) * len(cfg.settings))
    rows: list[SweepRow] = []
    k = 0
    for scheme in cfg.schemes:
        for index, setting in enumerate(cfg.settings):
            rng = np.random.default_rng(streams[k])
            k += 1
            tally = simulate_session(cfg.noise, setting, scheme, cfg.duration_s, rng)
            rows.append(_row_from_tally(index, scheme, tally))
    max_rate = max((r.conclusive_rate_hz for r in rows), default=0.0)
    if max_rate > 0.0:
        rows = [
            dataclasses.replace(r, normalized_coincidence=r.conclusive_rate_hz / max_rate)
            for r in rows
        ]
    return rows


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def emit(
    rows: Sequence[SweepRow],
    format: str = "csv",
    path: Optional[str] = None,
    config: Optional[ExperimentConfig] = None,
) -> str:
    """Serialize sweep rows; returns the text and optionally writes it to path.

    Numbers carry 6 significant digits and the column order is fixed.  When a
    config is given it is embedded for provenance: as '# config: ...' comment
    lines ahead of the CSV header, or as a {"config":..., "rows": [...]}
    object for JSON.  Without a config the CSV is exactly header plus rows
    and the JSON is a bare array.
    """
    if not rows:
        raise ValueError("emit needs at least one row")
    if format == "csv":
        buf = io.StringIO()
        if config is not None:
            buf.write("# config: " + json.dumps(config.to_dict(), sort_keys=True) + "\n")
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            buf.write(",".join(_fmt(getattr(row, c)) for c in CSV_COLUMNS) + "\n")
        text = buf.getvalue()
    elif format == "json":
        def as_number(value):
            return float(_fmt(value)) if isinstance(value, float) else value

        payload = [
            {name: as_number(getattr(row, name)) for name in CSV_COLUMNS} for row in rows
        ]
        obj = {"config": config.to_dict(), "rows": payload} if config is not None else payload
        text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {format!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# self checks: the invariant suites behind the `selftest` command

def suite_delta_norm(rng, n=1000, delta_fn=channel.delta_params):
    """||d1||^2 + ||d2||^2 + ||d3||^2 = 1 for Haar-random rotations."""
    worst = 0.0
    for _ in range(n):
        u = channel.haar_sample(rng)
        d = delta_fn(u)
        norm = abs(d.d1) ** 2 + abs(d.d2) ** 2 + abs(d.d3) ** 2
        worst = max(worst, abs(norm - 1.0))
    return worst <= 1e-10, f"max |norm - 1| = {worst:.3e}"


def four_term_expansion(u: channel.CollectiveRotation, alpha: complex, beta: complex):
    """Reference amplitudes of the tagged pair after the channel, from the
    closed-form four-term expansion (independent of the state pipeline)."""
    a, b = complex(u.a), complex(u.b)
    d1 = abs(a) ** 2 - abs(b) ** 2
    d2 = a.conjugate() * b - a * b.conjugate()
    d3 = -(a * b.conjugate() + a.conjugate() * b)
    c_keep = (d1 + 1.0) / 2.0
    c_double = (d1 - 1.0) / 2.0
    c_hh = (d2 + d3) / 2.0
    c_vv = (d2 - d3) / 2.0
    amps = np.zeros((2, 3, 2, 3), dtype=complex)
    terms = [
        (c_keep, ("H", 1), ("V", 1), ("V", 1), ("H", 1)),
        (c_double, ("V", 0), ("H", 2), ("H", 2), ("V", 0)),
        (c_hh, ("H", 1), ("H", 2), ("H", 2), ("H", 1)),
        (c_vv, ("V", 0), ("V", 1), ("V", 1), ("V", 0)),
    ]
    for coeff, m1a, m2a, m1b, m2b in terms:
        i = hilbert.PhotonMode.parse(m1a).index + hilbert.PhotonMode.parse(m2a).index
        amps[i[0], i[1], i[2], i[3]] += coeff * alpha
        j = hilbert.PhotonMode.parse(m1b).index + hilbert.PhotonMode.parse(m2b).index
        amps[j[0], j[1], j[2], j[3]] += coeff * beta
    return amps


def _evolved_amplitudes(u, alpha, beta):
    s = hilbert.pure_state({(("H", 0), ("V", 0)): alpha, (("V", 0), ("H", 0)): beta})
    evolved = protocol.bob_pipeline(
        protocol.alice_pipeline(s, "identity", u), protocol.PhaseMask.ZERO
    )
    return evolved.amplitudes


def suite_expansion(rng, n=100):
    """Pipeline evolution matches the four-term expansion coefficient-wise."""
    worst = 0.0
    for _ in range(n):
        u = channel.haar_sample(rng)
        for state in protocol.LogicalState:
            alpha, beta = state.alpha_beta
            dev = np.max(np.abs(_evolved_amplitudes(u, alpha, beta)
                                - four_term_expansion(u, alpha, beta)))
            worst = max(worst, float(dev))
    return worst <= 1e-10, f"max coefficient deviation = {worst:.3e}"


def suite_dfs(rng, n=50):
    """The post-selected coincident state carries the logical state intact."""
    worst = 1.0
    for _ in range(n):
        u = channel.haar_sample(rng)
        for state in protocol.LogicalState:
            alpha, beta = state.alpha_beta
            evolved = protocol.bob_pipeline(
                protocol.alice_pipeline(protocol.prepare(state), "identity", u),
                protocol.PhaseMask.ZERO,
            )
            kept, prob = hilbert.project(evolved, protocol.COINCIDENT_PAIRS)
            if prob < 1e-6:
                continue  # survival can vanish at isolated rotations
            reference = hilbert.pure_state(
                {(("H", 1), ("V", 1)): alpha, (("V", 1), ("H", 1)): beta}
            )
            f = hilbert.fidelity(kept.normalized(), reference)
            worst = min(worst, f)
    return abs(worst - 1.0) <= 1e-10, f"min fidelity = {worst:.12f}"


def suite_haar_mean(rng, n=100_000, survival_fn=channel.survival_probability):
    """Mean coincident survival over Haar rotations is 1/3."""
    total = 0.0
    for _ in range(n):
        total += survival_fn(channel.haar_sample(rng))
    mean = total / n
    return abs(mean - 1.0 / 3.0) <= 0.005, f"mean survival = {mean:.5f}"


def suite_dephasing(rng, n=20):
    """Mask averaging kills every S-to-outside coherence of the density matrix."""
    s_pairs = [(("H", 0), ("V", 1)), (("V", 1), ("H", 0))]
    out_pairs = [(("H", 0), ("H", 0)), (("V", 1), ("V", 1))]
    worst = 0.0
    for _ in range(n):
        amps = rng.normal(size=4) + 1j * rng.normal(size=4)
        amps /= np.linalg.norm(amps)
        base = hilbert.pure_state(dict(zip(s_pairs + out_pairs, amps)))
        mixed = hilbert.density_average(
            [
                (hilbert.PairDensity.from_state(
                    hilbert.apply_pol_unitary(base, mask.matrix, "both")), 0.25)
                for mask in protocol.PhaseMask
            ]
        )
        for ket in s_pairs:
            for bra in out_pairs:
                worst = max(worst, abs(mixed.element(ket, bra)), abs(mixed.element(bra, ket)))
    return worst <= 1e-12, f"max residual coherence = {worst:.3e}"


def suite_oracle(rng, n=100):
    """Projection probability of the evolved state equals |a|^4 (and the
    flip-averaged survival stays inside [1/4, 1/2])."""
    worst = 0.0
    for _ in range(n):
        u = channel.haar_sample(rng)
        evolved = protocol.bob_pipeline(
            protocol.alice_pipeline(protocol.prepare(protocol.LogicalState.PSI_PLUS),
                                    "identity", u),
            protocol.PhaseMask.ZERO,
        )
        _, prob = hilbert.project(evolved, protocol.COINCIDENT_PAIRS)
        worst = max(worst, abs(prob - channel.survival_probability(u)))
        avg = channel.randomized_survival(u, "flip_half")
        if not 0.25 - 1e-12 <= avg <= 0.5 + 1e-12:
            return False, f"flip_half survival {avg} escaped [1/4, 1/2]"
    return worst <= 1e-10, f"max |p_project - |a|^4| = {worst:.3e}"


SELFTEST_SUITES: tuple[tuple[str, Callable], ...] = (
    ("delta_norm", suite_delta_norm),
    ("expansion", suite_expansion),
    ("dfs_preservation", suite_dfs),
    ("haar_mean", suite_haar_mean),
    ("dephasing", suite_dephasing),
    ("oracle_agreement", suite_oracle),
)


def selftest(seed: int = DEFAULT_SEED, out: Callable[[str], None] = print) -> bool:
    """Run the invariant suites; prints one timed pass/fail line per suite."""
    all_ok = True
    for index, (name, fn) in enumerate(SELFTEST_SUITES):
        rng = np.random.default_rng(np.random.SeedSequence((seed, index)))
        start = time.perf_counter()
        ok, detail = fn(rng)
        elapsed = time.perf_counter() - start
        out(f"{'PASS' if ok else 'FAIL'}  {name:<18} {elapsed:7.2f} s  {detail}")
        all_ok = all_ok and ok
    return all_ok
