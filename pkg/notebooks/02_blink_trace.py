# %% [markdown]
# # A blink in the phase trace
#
# Static echoes are removed with a template recorded in the empty room.
# What is left is the face echo.  A brief dip of a few micrometres shows up
# as a single spike in the frame-to-frame phase change.

# %%
import numpy as np

from chirpface import dsp, sim
from chirpface.channel import Scene, distance_to_delay
from chirpface.chirp import ChirpConfig

cfg = ChirpConfig()
rest = distance_to_delay(sim.FACE_DISTANCE_M)
blink_at = 1.4
room = sim.default_room()
scene = Scene(room + [sim.blink_reflector(rest, 0.1, blink_at)])
chain = dsp.FrameChain(cfg)
n = 40

# %%
template = dsp.capture_template(scene.static_only(), cfg, 8, chain)
spec = chain.spectra(sim.record(scene, cfg, n))[:n]
resid = dsp.cancel_static(spec, template)
print(f"residual power before/after cancel: {np.mean(np.abs(spec) ** 2):.3g} / "
      f"{np.mean(np.abs(resid) ** 2):.3g}")

# %%
face_bin = chain.beat_bin(rest)
feats = dsp.extract_features(resid, face_bin, cfg.frame_period)
peaks = dsp.prominent_peaks(feats.d_phase)
print(f"face bin {face_bin}")
for start, stop in peaks:
    print(f"phase spike at frames {start}-{stop - 1}, t = {feats.time_s[start]:.2f} s "
          f"(blink at {blink_at:.2f} s)")

# %%
for i in range(max(0, peaks[0][0] - 3), min(n, peaks[0][1] + 3)):
    print(f"{feats.time_s[i]:5.2f} s  |dphase| {feats.d_phase[i]:.2e}")
