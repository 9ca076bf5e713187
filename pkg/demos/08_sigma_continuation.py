#!/usr/bin/env python3
# Shrinking the barrier: start from the touching parabola (zero height at
# the right edge), lift it by 2*sigma for a decreasing sequence of
# sigmas, and watch the solutions converge into each other while every
# run stays positive and the unmodified energy inequality survives.

from tfilm import (
    Grid, InitialDataSpec, ModelParams, RunConfig, StepParams,
    holder_quotient, parabola_profile, power_mobility, run,
    sigma_continuation, zero_potential,
)

g = Grid(L=1.0, N=128)
u0 = parabola_profile(g, 1.0)
template = RunConfig(
    grid=g,
    model=ModelParams(alpha=1.0, mobility=power_mobility(2.0),
                      potential=zero_potential(), sigma=0.5),
    step=StepParams(h=1e-5, tol_grad=1e-8),
    T=5e-4,
    record_every=10,
    initial=InitialDataSpec("constant"),
)

rep = sigma_continuation(u0, [1e-2, 5e-3, 2.5e-3], template)
for s, mh, drift, slack in zip(rep.sigmas, rep.min_heights,
                               rep.mass_drifts, rep.limit_edi_min_slack):
    print(f"sigma={s:7.4g}: min height {mh:.4f} > 0, mass lift {drift:.4g}, "
          f"unmodified-energy slack {slack:+.2e}")
print("sup distances between consecutive runs:",
      [f"{d:.4g}" for d in rep.sup_distances], "(shrinking with sigma)")

q = holder_quotient(rep.series[-1], 1.0)
print(f"time-Hoelder quotient of the last run: {q:.4f}")
