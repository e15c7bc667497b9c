"""
Checking hand-written gradients
===============================

The model trains with reverse-mode gradients from a small tape. Before
trusting them we compare against central finite differences on a random
mixed-curvature model.
"""

import numpy as np

from dyernie.data import TimeScale, make_rng
from dyernie.grad import Batch, fd_check, loss
from dyernie.model import ModelConfig, random_params
from dyernie.product import Signature

rng = make_rng(0)
cfg = ModelConfig(Signature.parse("P3@-1,S2@1,E2@0"), "linear_plus_periodic", "cosh",
                  TimeScale.for_timestamps(6))
params = random_params(8, 4, cfg, rng)
quads = np.column_stack([rng.integers(0, 8, 5), rng.integers(0, 4, 5), rng.integers(0, 8, 5),
                         rng.integers(0, 6, 5)])
batch = Batch.from_quads(quads, 4, 8, rng)

print("loss:", loss(params, batch, cfg))
report = fd_check(params, batch, cfg, h=1e-6, tol=1e-4, rng=rng)
print(report)
print("PASS" if report.passed else "FAIL")
