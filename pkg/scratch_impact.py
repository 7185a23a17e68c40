"""Scratch impact-shape check: throwaway."""
import sys
import time

import numpy as np

from lobsim.book import SELL
from lobsim.execution import MetaOrder, build_uniform_schedule
from lobsim.rng import SeedSet
from lobsim.simulator import run_market

from scratch_tune import build

def cfg(kappa, lam, mu=0.02, alpha=0.22, q=2000, sigma=0.3, beta_h=0.2, beta_l=0.4):
    return (dict(kappa=kappa, beta_h=beta_h, gamma_h=5.0, beta_l=beta_l, gamma_l=0.5,
                 sigma=sigma, lam=lam, alpha=alpha, mu=mu, sigma_v=0.01,
                 minutes=22, dur_lo=150, dur_hi=4500), q)


def cfg2(kappa, lam, mu=0.02, alpha=0.22, q=2000, sigma=0.3, dur_hi=4500,
         dur_lo=150, q_max=12):
    return (dict(kappa=kappa, beta_h=0.2, gamma_h=5.0, beta_l=0.4, gamma_l=0.5,
                 sigma=sigma, lam=lam, alpha=alpha, mu=mu, sigma_v=0.01,
                 minutes=22, dur_lo=dur_lo, dur_hi=dur_hi, q_max=q_max), q)


CONFIGS = {
    "k15": cfg(0.15, 0.02),
    "k15thin": cfg2(0.15, 0.02, dur_hi=2200, dur_lo=100),
    "k15thin2": cfg2(0.15, 0.02, alpha=0.18, dur_hi=2600),
    "k15q3": cfg2(0.15, 0.02, q=3000, dur_hi=2600),
    "k15s": cfg2(0.15, 0.02, sigma=0.25, dur_hi=2600),
}

name = sys.argv[1] if len(sys.argv) > 1 else "v1"
N_PAIRS = int(sys.argv[2]) if len(sys.argv) > 2 else 10
kwargs, Q = CONFIGS[name]
setup = build(**kwargs)

start = 30000                     # 10 min in
horizon = 15000                   # 5 min
interval = 500                    # 10 s
post = 15000
meta = MetaOrder(SELL, Q, start, horizon, "uniform")
sched = build_uniform_schedule(meta, interval)

t0 = time.time()
impacts = []
fracs = []
for run in range(N_PAIRS):
    seeds = SeedSet(777, run)
    base = run_market(setup, seeds)
    cf = run_market(setup, seeds, schedule=sched)
    impacts.append(cf.mid - base.mid)
    fracs.append(cf.execution.executed_fraction)
impacts = np.array(impacts)
mean_imp = impacts.mean(axis=0)

# smooth to 1-second resolution for shape measurement
sec = mean_imp[: (len(mean_imp) // 50) * 50].reshape(-1, 50).mean(axis=1)
s_start, s_end, s_post = start // 50, (start + horizon) // 50, (start + horizon + post) // 50
window = sec[s_start:s_post]
peak_off = int(np.argmax(np.abs(window)))
peak = window[peak_off]
plateau = sec[s_post - 60:s_post].mean()          # last minute of post window
plateau_se = impacts[:, (s_post - 60) * 50:s_post * 50].mean(axis=1).std(ddof=1) / np.sqrt(N_PAIRS)
exec_sec = sec[s_start:s_end]
print(f"[{name}] {N_PAIRS} pairs in {time.time()-t0:.0f}s; executed {np.mean(fracs):.3f}")
print(f"  exec window: neg fraction {np.mean(exec_sec[1:] < 0):.2f}, "
      f"thirds {exec_sec[:100].mean():.2f} {exec_sec[100:200].mean():.2f} {exec_sec[200:].mean():.2f}")
print(f"  peak {peak:.2f} at {peak_off/ (horizon//50):.2f} of horizon; "
      f"end-of-exec {sec[s_end-1]:.2f}")
print(f"  post+1.0h {sec[s_post-1]:.2f}; plateau {plateau:.2f} +- {plateau_se:.2f}; "
      f"decay {(1 - abs(plateau)/abs(peak))*100:.0f}%")
per_run = impacts[:, (s_post - 60) * 50:s_post * 50].mean(axis=1)
print("  per-run plateaus:", " ".join(f"{v:.1f}" for v in per_run))
