"""Volume-potential operator for the constant-coefficient Helmholtz problem
and the truncated Neumann-series forward solver built on it.

``apply_S_hat`` maps a source ``f`` on the unit square to the outgoing
solution of ``Delta u + k^2 u = -k^2 f``, i.e. ``u = -k^2 (G * f)`` with
``G(r) = -(i/4) H0(k r)``.  The discrete operator is a translation-invariant
convolution evaluated with zero-padded FFTs.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import DomainError, IncompatibleGridError
from .grid import ComplexField, grid_norm
from .special import hankel1

__all__ = [
    "GreenKernel",
    "NeumannDiagnostics",
    "green_kernel",
    "self_cell_integral",
    "apply_S_hat",
    "neumann_forward",
    "estimate_contraction",
]


def green_kernel(k, r):
    """Outgoing Green's function ``-(i/4) H0^(1)(k r)`` for ``r > 0``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("Green's function is singular at r = 0; use the self-cell weight")
    if k <= 0:
        raise DomainError("wavenumber must be positive")
    return -0.25j * hankel1(0, k * r_arr if r_arr.ndim else float(k * r_arr))


def self_cell_integral(k, h):
    """Integral of ``G`` over the disk with the same area as an ``h x h`` cell.

    Uses ``int_0^rho H0(k r) r dr = (rho / k) H1(k rho) + 2i / (pi k^2)``.
    """
    rho = h / np.sqrt(np.pi)
    radial = rho / k * hankel1(1, k * rho) + 2j / (np.pi * k ** 2)
    return -0.25j * 2.0 * np.pi * radial


class GreenKernel:
    """Precomputed convolution stencil of ``-k^2 int_cell G`` on a grid.

    ``weights[dy + n - 1, dx + n - 1]`` is the weight for the index offset
    ``(dx, dy)``.  Off-diagonal weights use the midpoint rule
    ``G(h |offset|) h^2``; the zero offset uses :func:`self_cell_integral`.
    """

    def __init__(self, k, grid):
        if not k > 0:
            raise DomainError("wavenumber must be positive")
        self.k = float(k)
        self.grid = grid
        n, h = grid.n, grid.h
        off = np.arange(-(n - 1), n)
        dx, dy = np.meshgrid(off, off, indexing="xy")
        r = h * np.hypot(dx, dy)
        w = np.empty(r.shape, dtype=complex)
        nz = r > 0
        w[nz] = green_kernel(self.k, r[nz]) * h * h
        w[~nz] = self_cell_integral(self.k, h)
        w *= -self.k ** 2
        w.flags.writeable = False
        self.weights = w
        # circular embedding of size 2n holds every offset in [-(n-1), n-1] exactly once
        size = 2 * n
        wrapped = np.zeros((size, size), dtype=complex)
        idx = off % size
        wrapped[np.ix_(idx, idx)] = w
        self._size = size
        self._hat = sfft.fft2(wrapped)

    @property
    def self_weight(self):
        n = self.grid.n
        return self.weights[n - 1, n - 1]

    def convolve(self, values):
        """Apply the stencil to raw ``(..., n, n)`` arrays."""
        n = self.grid.n
        vals = np.asarray(values, dtype=complex)
        spec = sfft.fft2(vals, s=(self._size, self._size))
        out = sfft.ifft2(spec * self._hat)
        return out[..., :n, :n]


def _values_on(f, kernel):
    if f.grid != kernel.grid:
        raise IncompatibleGridError("field and kernel live on different grids")
    return f.values


def apply_S_hat(f, kernel):
    """Discrete ``S_hat(f) = -k^2 int G(x, y) f(y) dy`` on the kernel grid."""
    return ComplexField(kernel.grid, kernel.convolve(_values_on(f, kernel)))


@dataclass
class NeumannDiagnostics:
    """Convergence record of a truncated Neumann series.

    ``contraction_estimate`` is the geometric mean of successive term-norm
    ratios (0 when the series terminates exactly).
    """

    L: int
    term_norms: list = field(default_factory=list)
    converged: bool = True
    contraction_estimate: float = 0.0


def neumann_forward(q, u_inc, kernel, L, tol=1e-2):
    """Scattered field from the ``L``-term Neumann series.

    ``u0 = u_inc``, ``u(j+1) = S_hat(q u(j))``, result ``sum_{j=1..L} u(j)``.
    ``L = 1`` is the Born approximation.

    The series is flagged as not converged when term norms fail to decrease
    for two consecutive terms, or when the last term is larger than ``tol``
    times the partial sum.  The partial sum is returned either way.
    """
    if L < 1:
        raise ValueError("truncation order L must be >= 1")
    qv = _values_on(q, kernel)
    term = np.asarray(_values_on(u_inc, kernel), dtype=complex)
    total = np.zeros_like(term)
    norms = []
    h = kernel.grid.h
    for _ in range(L):
        term = kernel.convolve(qv * term)
        total += term
        norms.append(float(h * np.sqrt(np.sum(np.abs(term) ** 2))))

    stalled = False
    for j in range(2, len(norms)):
        if norms[j - 1] >= norms[j - 2] and norms[j] >= norms[j - 1] and norms[j] > 0:
            stalled = True
            break
    u = ComplexField(kernel.grid, total)
    total_norm = grid_norm(u)
    converged = (not stalled) and norms[-1] <= tol * total_norm

    if len(norms) > 1 and all(v > 0 for v in norms):
        ratios = np.array(norms[1:]) / np.array(norms[:-1])
        estimate = float(np.exp(np.mean(np.log(ratios))))
    else:
        estimate = 0.0
    diag = NeumannDiagnostics(L=L, term_norms=norms, converged=converged, contraction_estimate=estimate)
    return u, diag


def estimate_contraction(q, kernel, iters=20, seed=0):
    """Power-iteration estimate of the operator norm of ``f -> S_hat(q f)``.

    Iterates on ``B^H B``; the adjoint uses the symmetry of the kernel,
    ``S_hat^H g = conj(S_hat(conj(g)))``.
    """
    if iters < 5:
        raise ValueError("need at least 5 power iterations")
    qv = _values_on(q, kernel)
    if not np.any(qv):
        return 0.0
    rng = np.random.default_rng(seed)
    n = kernel.grid.n
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    x /= np.linalg.norm(x)
    sigma2 = 0.0
    for _ in range(iters):
        bx = kernel.convolve(qv * x)
        y = qv * np.conj(kernel.convolve(np.conj(bx)))
        sigma2 = float(np.real(np.vdot(x, y)))
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
    return float(np.sqrt(max(sigma2, 0.0)))
