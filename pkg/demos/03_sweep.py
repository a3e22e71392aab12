# # A small uplink-SNR sweep
#
# Same machinery as `chanrecon run`, at a size that finishes in seconds.

# %%
import numpy as np

from chanrecon.evaluation import ks_distance
from chanrecon.experiment import parse_config, permutation_experiment, run_experiment

cfg = parse_config("""
[sweep]
trials = 30
rho_ul_db = -10, 0, 10, 20
""", preset="fig4")
report = run_experiment(cfg)

sources = report.sources()
print("rho_ul " + " ".join(f"{s:>9s}" for s in sources))
for rho in report.rho_ul_values():
    print(f"{rho:6.0f} " + " ".join(f"{report.values(s, rho).mean():9.2f}" for s in sources))

# %%
# Assuming the wrong sounding antenna permutes the reconstructed columns,
# which the SVD beamformer does not care about.
cfg = parse_config("[sweep]\ntrials = 100\n", preset="fig10")
rep = permutation_experiment(cfg, "pinv-upa", (1, 2, 3, 4))
base = rep.values("pinv-upa@mtx1")
for m in (2, 3, 4):
    print(f"m_tx assumed {m}: KS distance to m_tx 1 = "
          f"{ks_distance(base, rep.values(f'pinv-upa@mtx{m}')):.3f}")
