# # One channel, every reconstruction
#
# Draw a clustered channel for a 32-antenna ULA base station, feed back a
# PMI over widebeam CSI-RS ports, sound one UE antenna on the uplink, and
# compare the rate each reconstructed channel delivers.

# %%
import numpy as np

from chanrecon import (ArrayConfig, ClusterConfig, NoiseModel, PortConfig, ReconInput,
                       TECHNIQUES, beamforming_matrix, build_dft_codebook, observe_csi_rs,
                       quantize, random_channel, reconstruct, spectral_efficiency, srs_observe,
                       svd_beamformer)
from chanrecon.evaluation import TrialContext, baseline_beamformer

rng = np.random.default_rng(2024)
bs = ArrayConfig.ula(32)
ch = random_channel(ClusterConfig(), bs, 4, rng)
print("H is", ch.h.shape, "with mean |h|^2 =", np.mean(np.abs(ch.h) ** 2))

# %%
# 20 dB downlink, 10 dB uplink; the UE sounds with its first antenna.
noise = NoiseModel.from_db(rho_dl_db=20, rho_ul_db=10)
h_srs = srs_observe(ch, 1, noise, rng)
ports = PortConfig.for_array(32, 8)
p = beamforming_matrix("widebeam", ports)
obs = observe_csi_rs(ch, p, noise, rng)
layers = 2
cb = build_dft_codebook(ports.num_ports, layers)
idx, w = quantize(obs, cb, noise.rho_dl)
print(f"PMI {idx} out of {len(cb)} codewords")

# %%
# Each technique returns an N_BS x L estimate; the SVD of that estimate is
# the downlink beamformer.
inp = ReconInput(w, h_srs, p, 1, bs)
rates = {}
for name in TECHNIQUES:
    out = reconstruct(name, inp, rng, upa_shape=(8, 4))
    rates[name] = spectral_efficiency(ch.h, svd_beamformer(out.h_hat, layers), noise.rho_dl)

ctx = TrialContext(ch.h, obs.h_uq, w, p.p, h_srs, 1, layers, rng)
for src in ("ideal", "type1", "type2", "random"):
    rates[src] = spectral_efficiency(ch.h, baseline_beamformer(src, ctx), noise.rho_dl)

for name, r in sorted(rates.items(), key=lambda kv: -kv[1]):
    print(f"{name:10s} {r:6.2f} bits/s/Hz")
