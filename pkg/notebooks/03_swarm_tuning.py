# %% [markdown]
# # Tuning the DC-voltage PI loop with a particle swarm
#
# The fitness of ``(kp, ki)`` is ``1000 * ITAE(vdc - vdc_ref)`` over the
# 0.1 s scenario. One evaluation is a 5000-step simulation.

# %%
import numpy as np

from dstatcom import SwarmConfig, canonical_scenario, make_fitness, optimize
from dstatcom.benchmarks import rosenbrock

# %% [markdown]
# Sanity check on a known landscape first.

# %%
r = optimize(rosenbrock, SwarmConfig(bounds=[(-5, 5)] * 2, n_iterations=200, seed=0))
print(r.gbest_position, r.gbest_fitness)

# %%
fitness = make_fitness(canonical_scenario())
print("hand-tuned (1, 70):", fitness((1.0, 70.0)))
print("reported swarm result (415.2451, 31.0245):", fitness((415.2451, 31.0245)))

# %%
results = [optimize(fitness, SwarmConfig(seed=s)) for s in range(3)]
for s, res in enumerate(results):
    kp, ki = res.gbest_position
    print(f"seed {s}: kp={kp:.3f} ki={ki:.3f} objective={res.gbest_fitness:.6g} ({res.evaluations} sims)")

# %% [markdown]
# Convergence of the global best for the first seed.

# %%
hist = np.array([h[1] for h in results[0].history])
print(np.round(hist[::5], 7))
