# %% [markdown]
# # Two forward solvers, one scattered field
#
# The scattered wave of a weak scatterer is computed twice: once with the
# finite-difference solver padded by an absorbing layer, and once by summing
# the Neumann series of the volume integral operator. Agreement between the
# two is the main sanity check for both.

# %%
import time

import numpy as np

from invmed import GreenKernel, PmlConfig, forward_scatter, neumann_forward, unit_grid
from invmed.grid import ComplexField, grid_norm
from invmed.heatmap import export_heatmap
from invmed.phantoms import normalize_max, sample_gaussian_mixture

k, n = 20.0, 129
grid = unit_grid(n)
_, q = sample_gaussian_mixture(grid, seed=2024)
q = normalize_max(q, 0.05)
X, Y = grid.mesh()
u_inc = ComplexField(grid, np.exp(1j * k * X))

# %% PML finite differences: one sparse LU, one solve
t = time.perf_counter()
(u_pml,) = forward_scatter(q, [u_inc], PmlConfig(k, n))
print(f"PML solve: {time.perf_counter() - t:.2f} s")

# %% Neumann series with 8 terms (FFT convolutions)
t = time.perf_counter()
u_ls, diag = neumann_forward(q, u_inc, GreenKernel(k, grid), L=8)
print(f"Neumann series: {time.perf_counter() - t:.2f} s")
print("term norms:", ", ".join(f"{v:.2e}" for v in diag.term_norms))

# %%
diff = grid_norm(u_pml.with_values(u_pml.values - u_ls.values)) / grid_norm(u_pml)
print(f"relative L2 difference: {diff:.4f}")

export_heatmap(u_pml, "forward_pml_real.pgm", part="real")
export_heatmap(u_ls, "forward_neumann_real.pgm", part="real")
