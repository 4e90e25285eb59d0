# %% [markdown]
# # Classifying expressions from amplitude and phase
#
# Record a short session per expression, cancel the room, keep the face bin
# and train the three-member ensemble on (amplitude, phase) pairs.

# %%
import numpy as np

from chirpface import dsp, sim
from chirpface.channel import Scene, distance_to_delay
from chirpface.chirp import ChirpConfig
from chirpface.labels import ExpressionLabel
from chirpface.ml import Dataset, TrainConfig, evaluate, splits, train

cfg = ChirpConfig()
chain = dsp.FrameChain(cfg)
room = sim.default_room()
rest = distance_to_delay(sim.FACE_DISTANCE_M)
template = dsp.capture_template(Scene(room), cfg, 32, chain)
face_bin = chain.beat_bin(rest)
n = 150

# %%
X, y, sess = [], [], []
for s in range(2):
    for label in ExpressionLabel:
        face = sim.face_reflector(label, rest, seed=10 * s + int(label), jitter=1.0)
        scene = Scene(room + [face], out_of_band_noise=sim.in_band_noise(20.0, cfg), seed=s)
        resid = dsp.cancel_static(chain.spectra(sim.record(scene, cfg, n))[:n], template)
        X.append(dsp.extract_features(resid, face_bin).matrix())
        y += [int(label)] * n
        sess += [f"s{s}"] * n
data = Dataset(np.vstack(X), y, sess)
print(f"{len(data)} frames, bin {face_bin}")

# %%
for kind in ("overall", "inter"):
    accs = []
    for tr, te in splits(data, kind, seed=0):
        model = train(data.subset(tr), TrainConfig(n_trees=30, seed=0))
        accs.append(evaluate(model, data.subset(te))["accuracy"])
    print(f"{kind:8s} held-out accuracy {np.mean(accs):.3f}")

# %%
m = evaluate(model, data.subset(te))
print("confusion (rows true, columns predicted):", m["labels"])
print(np.asarray(m["confusion"]))
