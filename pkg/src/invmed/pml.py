"""Finite-difference Helmholtz solver with a perfectly matched layer.

The unit square is padded on every side by an absorbing layer in which the
coordinates are complex-stretched by ``e(t) = 1 + i k (d / L)^2`` (``d`` the
depth into the layer).  The stretched equation

    d/dx (e_y/e_x du/dx) + d/dy (e_x/e_y du/dy) + e_x e_y k^2 (1 + q) u = -k^2 f

is discretized with the flux-form five-point stencil, coefficients taken at
half nodes, and homogeneous Dirichlet data on the outer boundary.  The
resulting matrix is complex symmetric (``A == A.T``), which is what makes the
adjoint of the solution operator its complex conjugate.

Time dependence is ``exp(-i omega t)``: outgoing waves behave like
``exp(+i k r)``, matching the ``H0^(1)`` Green's function of the integral
solver.  The stretch therefore has a positive imaginary part; with the
opposite sign the layer would absorb incoming rather than outgoing waves.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import DomainError, IncompatibleGridError, SolverError, SupportViolationError
from .grid import ComplexField, Grid, RealField, unit_grid

__all__ = [
    "PmlConfig",
    "HelmholtzSystem",
    "stretch_coeff",
    "assemble",
    "forward_scatter",
    "solve_source",
]


@dataclass(frozen=True)
class PmlConfig:
    """Discretization of the padded computational square.

    Parameters
    ----------
    k : float
        Wavenumber.
    n : int
        Nodes per side of the interior grid on ``[0, 1]^2``.
    L_pml : float
        Requested layer thickness.  The layer is snapped to a whole number
        of cells (at least one) so that nodes stay aligned with the interior
        grid; :attr:`layer_width` is the thickness actually used.
    """

    k: float
    n: int
    L_pml: float = 0.05

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("wavenumber must be positive")
        if not self.L_pml > 0:
            raise ValueError("PML thickness must be positive")
        if self.n < 3:
            raise ValueError("need at least 3 interior nodes per side")

    @property
    def h(self):
        return 1.0 / (self.n - 1)

    @property
    def n_layer(self):
        return max(1, int(round(self.L_pml / self.h)))

    @property
    def layer_width(self):
        return self.n_layer * self.h

    @property
    def n_total(self):
        return self.n + 2 * self.n_layer

    @property
    def interior_grid(self):
        return unit_grid(self.n)

    @property
    def computational_grid(self):
        w = self.layer_width
        return Grid(self.n_total, -w, -w, 1.0 + w, 1.0 + w)

    @property
    def interior_slice(self):
        s = slice(self.n_layer, self.n_layer + self.n)
        return (s, s)


def stretch_coeff(t, k, L_pml):
    """PML stretching factor at coordinate(s) ``t``.

    Equal to 1 on ``(0, 1]`` and ``1 + i k (d / L_pml)^2`` at depth ``d``
    into the layer on either side.
    """
    t = np.asarray(t, dtype=float)
    tol = 1e-12 * (1.0 + 2 * L_pml)
    if np.any(t < -L_pml - tol) or np.any(t > 1.0 + L_pml + tol):
        raise DomainError(f"coordinate outside the computational interval [-{L_pml}, {1 + L_pml}]")
    depth = np.where(t <= 0.0, -t, np.where(t > 1.0, t - 1.0, 0.0))
    out = np.asarray(1.0 + 1j * k * (depth / L_pml) ** 2)
    if out.ndim == 0:
        return complex(out)
    return out


class HelmholtzSystem:
    """Assembled PML matrix for one scatterer, with a reusable factorization.

    ``n_factorizations`` and ``n_solves`` count the work done so callers can
    check their solver budget.  Solves against an existing factorization are
    read-only and may be issued from several threads.
    """

    def __init__(self, config, q, matrix):
        self.config = config
        self.q = q
        self.matrix = matrix
        self.n_factorizations = 0
        self.n_solves = 0
        self._lu = None

    @property
    def factorization(self):
        if self._lu is None:
            self.factorize()
        return self._lu

    def factorize(self):
        try:
            # symmetric-mode ordering on A + A^T; threshold pivoting kept for safety
            lu = spla.splu(
                self.matrix.tocsc(),
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.1,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise SolverError(f"sparse LU failed: {exc}") from None
        self._lu = lu
        self.n_factorizations += 1
        return lu

    def rhs(self, sources):
        """Right-hand sides ``-k^2 f`` for interior sources ``f`` (shape (P, n, n))."""
        cfg = self.config
        sources = np.asarray(sources, dtype=complex)
        b = np.zeros((sources.shape[0], cfg.n_total, cfg.n_total), dtype=complex)
        b[(slice(None),) + cfg.interior_slice] = -(cfg.k ** 2) * sources
        return b.reshape(sources.shape[0], -1)

    def solve(self, sources, chunk=16, workers=1):
        """Solve for a batch of interior sources; returns interior solutions.

        Parameters
        ----------
        sources : array_like, shape (P, n, n)
        chunk : int
            Right-hand sides per triangular-solve call.
        workers : int
            Threads sharing the factorization.
        """
        sources = np.asarray(sources, dtype=complex)
        if sources.ndim == 2:
            sources = sources[None]
        cfg = self.config
        if sources.shape[1:] != (cfg.n, cfg.n):
            raise IncompatibleGridError(
                f"sources of shape {sources.shape[1:]} do not match interior grid ({cfg.n}, {cfg.n})"
            )
        lu = self.factorization
        out = np.empty_like(sources)
        starts = range(0, sources.shape[0], chunk)

        def run(start):
            block = sources[start:start + chunk]
            b = self.rhs(block)
            x = lu.solve(np.ascontiguousarray(b.T))
            if not np.all(np.isfinite(x)):
                raise SolverError(
                    "non-finite solution from sparse LU", condition_estimate=self.condition_estimate()
                )
            x = x.T.reshape(-1, cfg.n_total, cfg.n_total)
            out[start:start + chunk] = x[(slice(None),) + cfg.interior_slice]

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, starts))
        else:
            for s in starts:
                run(s)
        self.n_solves += sources.shape[0]
        return out

    def solve_full(self, b):
        """Solve ``A x = b`` for a full-length right-hand side (no scaling)."""
        self.n_solves += 1
        return self.factorization.solve(np.asarray(b, dtype=complex))

    def condition_estimate(self):
        """1-norm condition number estimate, ``||A||_1 ||A^-1||_1``."""
        lu = self.factorization
        size = self.matrix.shape[0]
        inv = spla.LinearOperator(
            (size, size), matvec=lu.solve, rmatvec=lambda x: lu.solve(x, trans="H"), dtype=complex
        )
        return spla.onenormest(self.matrix) * spla.onenormest(inv)


def _embed_q(q, config):
    """Interior samples of ``q``, accepting interior or computational grids."""
    if q.grid.n == config.n:
        return np.asarray(q.values, dtype=float)
    if q.grid.n == config.n_total:
        vals = np.asarray(q.values, dtype=float)
        inner = vals[config.interior_slice]
        outside = vals.copy()
        outside[config.interior_slice] = 0.0
        if np.any(outside != 0.0):
            raise SupportViolationError("scatterer is nonzero inside the PML layer")
        return inner
    raise IncompatibleGridError(
        f"scatterer grid has {q.grid.n} points per side; expected {config.n} or {config.n_total}"
    )


def assemble(q, config):
    """Assemble the PML Helmholtz matrix ``A(q)``.

    Boundary nodes carry identity rows; their couplings are dropped from the
    neighbouring rows (the boundary value is zero), which keeps ``A``
    exactly complex symmetric.
    """
    qi = _embed_q(q, config)
    nt, h, k = config.n_total, config.h, config.k
    w = config.layer_width
    t = h * (np.arange(nt) - config.n_layer)
    t_half = t[:-1] + 0.5 * h
    e_node = stretch_coeff(t, k, w)
    e_half = stretch_coeff(t_half, k, w)

    qfull = np.zeros((nt, nt))
    qfull[config.interior_slice] = qi

    # cx[j, i]: coupling across the x-edge (i, j)-(i+1, j); cy[j, i]: y-edge (i, j)-(i, j+1)
    cx = e_node[:, None] / e_half[None, :] / h ** 2
    cy = e_node[None, :] / e_half[:, None] / h ** 2

    diag = (e_node[None, :] * e_node[:, None]) * k ** 2 * (1.0 + qfull)
    diag = diag.astype(complex)
    diag[:, :-1] -= cx
    diag[:, 1:] -= cx
    diag[:-1, :] -= cy
    diag[1:, :] -= cy

    index = np.arange(nt * nt).reshape(nt, nt)
    boundary = np.zeros((nt, nt), dtype=bool)
    boundary[0, :] = boundary[-1, :] = boundary[:, 0] = boundary[:, -1] = True
    inner = ~boundary

    rows, cols, vals = [], [], []
    diag[boundary] = 1.0
    rows.append(index.ravel())
    cols.append(index.ravel())
    vals.append(diag.ravel())

    keep_x = inner[:, :-1] & inner[:, 1:]
    a, b = index[:, :-1][keep_x], index[:, 1:][keep_x]
    c = cx[keep_x]
    rows += [a, b]
    cols += [b, a]
    vals += [c, c]

    keep_y = inner[:-1, :] & inner[1:, :]
    a, b = index[:-1, :][keep_y], index[1:, :][keep_y]
    c = cy[keep_y]
    rows += [a, b]
    cols += [b, a]
    vals += [c, c]

    matrix = sps.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nt * nt, nt * nt),
    )
    qfield = q if q.grid.n == config.n else RealField(config.interior_grid, qi)
    return HelmholtzSystem(config, qfield, matrix)


def _interior_values(field, config):
    n = field.grid.n
    if n == config.n:
        return field.values
    if n == config.n_total:
        return field.values[config.interior_slice]
    raise IncompatibleGridError(
        f"field grid has {n} points per side; expected {config.n} or {config.n_total}"
    )


def forward_scatter(q, incident, config, system=None, workers=1):
    """Scattered fields ``S(q)(q u_inc)`` on the interior grid, one per incident field.

    The matrix is factorized once and reused for every source.
    """
    if system is None:
        system = assemble(q, config)
    qv = system.q.values
    sources = np.stack([qv * _interior_values(u, config) for u in incident])
    sol = system.solve(sources, workers=workers)
    grid = config.interior_grid
    return [ComplexField(grid, s) for s in sol]


def solve_source(q, f, config, system=None):
    """Apply ``S(q)`` to an arbitrary interior source ``f``."""
    if system is None:
        system = assemble(q, config)
    sol = system.solve(_interior_values(f, config)[None])
    return ComplexField(config.interior_grid, sol[0])
