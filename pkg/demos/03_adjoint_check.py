# %% [markdown]
# # Checking the adjoint-state gradient
#
# The PML matrix is complex symmetric, so the adjoint of the solution
# operator is its complex conjugate. That gives the misfit gradient for the
# price of one extra solve per source. Here it is compared with central
# finite differences along random directions.

# %%
import numpy as np

from invmed import InversionConfig, check_adjoint_identity, make_layout, objective_and_gradient, synthesize
from invmed.grid import unit_grid
from invmed.phantoms import normalize_max, sample_gaussian_mixture

k, n = 10.0, 33
grid = unit_grid(n)
q_true = normalize_max(sample_gaussian_mixture(grid, 5)[1], 0.2)
data = synthesize(q_true, make_layout(M=8, N=16), k, n, n)
cfg = InversionConfig(k=k, n=n)

print("adjoint identity defect:", check_adjoint_identity(q_true, cfg))

# %%
q = normalize_max(sample_gaussian_mixture(grid, 6)[1], 0.1)
J, grad, cache = objective_and_gradient(q, data, cfg)
print(f"J = {J:.6f}  ({cache['n_factorizations']} factorization, {cache['n_solves']} solves)")

rng = np.random.default_rng(0)
eps = 1e-6
for _ in range(5):
    v = rng.standard_normal(grid.shape)
    jp = objective_and_gradient(q.with_values(q.values + eps * v), data, cfg)[0]
    jm = objective_and_gradient(q.with_values(q.values - eps * v), data, cfg)[0]
    fd = (jp - jm) / (2 * eps)
    ad = float(np.sum(grad.values * v))
    print(f"finite difference {fd:+.10e}   adjoint {ad:+.10e}   rel. gap {abs(fd - ad) / abs(fd):.1e}")
