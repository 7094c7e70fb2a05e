"""
The noise budget: losses, accidentals and the analytic error rate
=================================================================

Reproduces the closed-form error model for the bench (4 m) and deployed
(1 km) configurations: fiber transmittance, the accidental-coincidence
floor, the error-rate endpoints with and without the compensation
rotation, and the interferometer visibility envelope.
"""

import numpy as np

from rfqkd.detection import (
    NoiseConfig,
    accidental_error_contribution,
    accidental_rate,
    expected_conclusive_rate,
    expected_qber,
    transmittance,
    visibility_envelope,
)

# --- transmission and coincidence ceilings --------------------------------
for name, cfg in (("4 m", NoiseConfig.four_meter()), ("1 km", NoiseConfig.one_km())):
    t = transmittance(cfg)
    ceiling = cfg.pair_rate_hz * cfg.apparatus_efficiency * t**2
    print(f"{name}: per-photon transmittance {t:.4f}, pair factor {t**2:.4f}, "
          f"coincidence ceiling {ceiling:.2f} Hz")

# --- the accidental floor ---------------------------------------------------
cfg = NoiseConfig.one_km()
print(f"\naccidental rate at {cfg.singles_rate_hz:.0f} Hz singles and "
      f"{cfg.window_ns:.0f} ns window: {accidental_rate(cfg):.3f} Hz")

# --- error-rate endpoints over the sweep -----------------------------------
print("\n1 km accidental error contribution:")
print(f"   full survival:  {accidental_error_contribution(cfg, 1.0)*100:.2f} %")
print(f"   zero survival:  {accidental_error_contribution(cfg, 0.0)*100:.2f} %")
print(f"   flip_half band: {accidental_error_contribution(cfg, 0.5)*100:.2f} % "
      f"to {accidental_error_contribution(cfg, 0.25)*100:.2f} %")

print("\n1 km total expected QBER (source 4% + contrast 2.5% + accidentals):")
for survival in (1.0, 0.5, 0.375, 0.25):
    print(f"   survival {survival:5.3f}: QBER {expected_qber(cfg, survival)*100:6.2f} %, "
          f"conclusive {expected_conclusive_rate(cfg, survival):.3f} Hz")

flip_half_survivals = [
    ((np.cos(k * np.pi / 8) ** 2) ** 2 + (np.sin(k * np.pi / 8) ** 2) ** 2) / 2
    for k in range(5)
]
avg = np.mean([expected_qber(cfg, s) for s in flip_half_survivals])
print(f"   sweep average with flip_half: {avg*100:.2f} %")

# --- visibility envelope of the tag interferometers -------------------------
print("\nvisibility envelope at 702 nm with a 1.6 nm filter "
      f"(coherence length {702.0**2/1.6/1000:.1f} um):")
for dx in (0.0, 25.0, 50.0, 75.0, 100.0, 200.0, 400.0):
    v = visibility_envelope(dx, 1.6, 702.0)
    print(f"   mismatch {dx:5.0f} um: visibility {v:.4f}")
