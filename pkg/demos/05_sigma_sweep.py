"""How the regularisation strength trades fit for smoothness.

Small sigma lets the flow bend the arms into the band; large sigma makes
motion expensive, the controls stay near zero and accuracy falls back toward
chance.  Accuracy on 10 000 fresh points from the same generator shows that
the warp generalises.  Set SRLM_THREADS to run the rows in parallel.
"""

import math
from pathlib import Path

from srlm.app.experiments import run_sigma_sweep

unit = 1 / (4 * math.pi**2)
config = {
    "family": {"family": "fourier10"},
    "problem": {"spiral": {}, "sigma": unit, "forward_model": "band"},
    "seed": 0,
}
out = Path(__file__).parent / "out" / "sweep"
out.mkdir(parents=True, exist_ok=True)
rows = run_sigma_sweep(config, [f * unit for f in (0.2, 1, 10, 100, 1000)], out)
print("sigma * 4pi^2   train    new      status")
for r in rows:
    print(f"{r.sigma / unit:>12g}   {r.acc_train:.3f}    {r.acc_new:.3f}    {r.status}")
print(f"\ntable written to {out / 'sweep.csv'}")
