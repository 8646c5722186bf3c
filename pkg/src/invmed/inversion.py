"""Data-misfit objective, adjoint-state gradient and L-BFGS reconstruction.

Discrete conventions (fixed by a finite-difference check, not by the
continuum derivation):

* ``J(q) = sum_j 0.5 * ||T u1_j - d_j||^2`` with plain Euclidean norms over
  receivers, ``u1_j = S(q)(q u_inc_j)``.
* ``grad[node] = sum_j Re(u2_j (u_inc_j + u1_j))[node]`` with
  ``u2_j = S(q)(conj(T^T (T u1_j - d_j)))`` -- a plain nodal array, no cell
  area or ``k^2`` factor.  ``T^T`` is the exact transpose of the bilinear
  sampling, and ``S(q) = -k^2 A(q)^-1`` with the complex-symmetric PML
  matrix, so ``S(q)^T = S(q)`` and the formula is the exact derivative of
  the coded ``J``.
"""

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateStartError, IncompatibleGridError
from .grid import RealField, unit_grid
from .measurement import incident_fields, trace_matrix
from .metrics import relative_error
from .pml import PmlConfig, assemble

__all__ = [
    "InversionConfig",
    "InversionState",
    "InverseProblem",
    "objective_and_gradient",
    "minimize_lbfgs",
    "lbfgs_minimize",
    "strong_wolfe",
    "check_adjoint_identity",
    "write_history_csv",
    "HISTORY_COLUMNS",
]

HISTORY_COLUMNS = ("iter", "J", "grad_norm", "rel_err", "n_fev", "elapsed_s")


@dataclass(frozen=True)
class InversionConfig:
    k: float
    n: int
    max_iter: int = 15
    max_linesearch: int = 20
    lbfgs_memory: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    gtol: float = 1e-12
    L_pml: float = 0.05
    regularization: float = 0.0  # Tikhonov weight; off by default
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ConfigError("Wolfe constants must satisfy 0 < c1 < c2 < 1")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.max_linesearch < 1:
            raise ConfigError("max_linesearch must be >= 1")
        if self.lbfgs_memory < 1:
            raise ConfigError("lbfgs_memory must be >= 1")

    @property
    def pml(self):
        return PmlConfig(self.k, self.n, self.L_pml)


class InverseProblem:
    """Objective ``J`` and its gradient for one measurement set.

    Holds the incident fields and trace matrix so repeated evaluations only
    pay for one factorization and ``2M`` solves each.
    """

    def __init__(self, data, config):
        if not math.isclose(data.k, config.k, rel_tol=1e-12):
            raise ConfigError(f"data were recorded at k = {data.k}, config asks for k = {config.k}")
        self.data = data
        self.config = config
        self.grid = unit_grid(config.n)
        self.T = trace_matrix(data.layout, self.grid)
        self.uinc = incident_fields(data.layout, config.k, self.grid)
        self.n_fev = 0
        self.last_counts = None

    def evaluate(self, q):
        """Return ``(J, grad, cache)`` for the nodal array or field ``q``."""
        cfg = self.config
        qv = q.values if isinstance(q, RealField) else np.asarray(q, dtype=float).reshape(self.grid.shape)
        if qv.shape != self.grid.shape:
            raise IncompatibleGridError(f"scatterer shape {qv.shape} != inversion grid {self.grid.shape}")
        qf = RealField(self.grid, qv)
        system = assemble(qf, cfg.pml)
        M = self.data.M
        n2 = self.grid.n * self.grid.n

        u1 = system.solve(qv[None] * self.uinc, workers=cfg.workers)
        resid = (self.T @ u1.reshape(M, n2).T).T - self.data.data
        J = 0.5 * float(np.sum(np.abs(resid) ** 2))
        adj_src = np.conj((self.T.T @ resid.T).T).reshape(M, *self.grid.shape)
        u2 = system.solve(adj_src, workers=cfg.workers)
        grad = np.zeros(self.grid.shape)
        for j in range(M):  # fixed summation order keeps runs bit-reproducible
            grad += np.real(u2[j] * (self.uinc[j] + u1[j]))

        if cfg.regularization:
            w = cfg.regularization * self.grid.h ** 2
            J += 0.5 * w * float(np.sum(qv * qv))
            grad += w * qv

        self.n_fev += 1
        self.last_counts = (system.n_factorizations, system.n_solves)
        cache = {
            "u1": u1,
            "u2": u2,
            "residual": resid,
            "n_factorizations": system.n_factorizations,
            "n_solves": system.n_solves,
        }
        return J, RealField(self.grid, grad), cache

    def __call__(self, x):
        J, g, _ = self.evaluate(x)
        return J, g.values.ravel()


def objective_and_gradient(q, data, config):
    """``J(q)``, its adjoint-state gradient and the forward/adjoint fields."""
    return InverseProblem(data, config).evaluate(q)


# ---------------------------------------------------------------- L-BFGS


def _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi):
    d1 = d_lo + d_hi - 3.0 * (f_lo - f_hi) / (a_lo - a_hi)
    rad = d1 * d1 - d_lo * d_hi
    if not np.isfinite(rad) or rad < 0:
        return None
    d2 = math.copysign(math.sqrt(rad), a_hi - a_lo)
    denom = d_hi - d_lo + 2.0 * d2
    if denom == 0:
        return None
    a = a_hi - (a_hi - a_lo) * (d_hi + d2 - d1) / denom
    return a if np.isfinite(a) else None


@dataclass
class LineSearchResult:
    success: bool
    alpha: float = 0.0
    f: float = math.inf
    payload: object = None
    n_evals: int = 0


def strong_wolfe(phi, f0, d0, alpha0, c1=1e-4, c2=0.9, max_evals=20, grow=2.0):
    """Bracketing/zoom line search for the strong Wolfe conditions.

    ``phi(alpha)`` returns ``(f, dphi, payload)``.  On failure the returned
    result carries the lowest point that satisfied sufficient decrease, if
    any (``payload`` is None otherwise).
    """
    evals = 0
    best = LineSearchResult(False)

    def probe(a):
        nonlocal evals
        f, d, pl = phi(a)
        evals += 1
        if f <= f0 + c1 * a * d0 and f < best.f:
            best.alpha, best.f, best.payload = a, f, pl
        return f, d, pl

    def done(a, f, pl):
        return LineSearchResult(True, a, f, pl, evals)

    def zoom(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi):
        while evals < max_evals:
            a = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
            margin = 0.1 * (hi - lo)
            if a is None or not (lo + margin <= a <= hi - margin):
                a = 0.5 * (a_lo + a_hi)
            f, d, pl = probe(a)
            if f > f0 + c1 * a * d0 or f >= f_lo:
                a_hi, f_hi, d_hi = a, f, d
            else:
                if abs(d) <= -c2 * d0:
                    return done(a, f, pl)
                if d * (a_hi - a_lo) >= 0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, d_lo = a, f, d
        best.n_evals = evals
        return best

    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = alpha0
    first = True
    while evals < max_evals:
        f, d, pl = probe(a)
        if not np.isfinite(f):
            a = 0.5 * (a_prev + a)
            continue
        if f > f0 + c1 * a * d0 or (not first and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, a, f, d)
        if abs(d) <= -c2 * d0:
            return done(a, f, pl)
        if d >= 0:
            return zoom(a, f, d, a_prev, f_prev, d_prev)
        a_prev, f_prev, d_prev = a, f, d
        a = grow * a
        first = False
    best.n_evals = evals
    return best


@dataclass
class InversionState:
    """Iterate, per-iteration history and L-BFGS memory of a run."""

    q: object
    J: float
    grad_norm: float
    history: list = field(default_factory=list)
    memory: list = field(default_factory=list)
    status: str = "running"
    n_fev: int = 0
    n_iter: int = 0


def minimize_lbfgs(fun, x0, max_iter=15, max_linesearch=20, memory=10, c1=1e-4, c2=0.9,
                   gtol=1e-12, callback=None):
    """Limited-memory BFGS (two-loop recursion) with a strong Wolfe line search.

    ``fun(x)`` returns ``(f, g)`` for a flat float array.  Stops after
    ``max_iter`` accepted steps, when a line search needs more than
    ``max_linesearch`` evaluations, or when ``||g|| <= gtol``.  The iterate
    with the lowest objective is returned in ``state.q``.

    ``callback(k, x, f, g, n_fev)`` is called for the start point and after
    each accepted step; its return value is stored in the history.
    """
    t0 = time.perf_counter()
    x = np.array(x0, dtype=float).ravel()
    f, g = fun(x)
    n_fev = 1
    history = []

    def record(it):
        row = {"iter": it, "J": float(f), "grad_norm": float(np.linalg.norm(g)),
               "n_fev": n_fev, "elapsed_s": time.perf_counter() - t0}
        if callback is not None:
            row.update(callback(it, x, f, g, n_fev) or {})
        history.append(row)

    record(0)
    state = InversionState(q=x.copy(), J=float(f), grad_norm=float(np.linalg.norm(g)),
                           history=history)
    best_x, best_f = x.copy(), f
    pairs = []

    for it in range(1, max_iter + 1):
        gnorm = np.linalg.norm(g)
        if gnorm <= gtol:
            state.status = "gtol"
            break
        # two-loop recursion
        qd = g.copy()
        alphas = []
        for s, y, rho in reversed(pairs):
            a = rho * np.dot(s, qd)
            alphas.append(a)
            qd -= a * y
        if pairs:
            s, y, _ = pairs[-1]
            qd *= np.dot(s, y) / np.dot(y, y)
        else:
            qd /= gnorm
        for (s, y, rho), a in zip(pairs, reversed(alphas)):
            b = rho * np.dot(y, qd)
            qd += (a - b) * s
        p = -qd
        d0 = float(np.dot(g, p))
        if not d0 < 0:
            pairs.clear()
            p = -g / gnorm
            d0 = float(np.dot(g, p))

        def phi(alpha, x=x, p=p):
            xa = x + alpha * p
            fa, ga = fun(xa)
            return fa, float(np.dot(ga, p)), (xa, ga)

        ls = strong_wolfe(phi, f, d0, 1.0, c1=c1, c2=c2, max_evals=max_linesearch)
        n_fev += ls.n_evals
        if ls.payload is None:
            state.status = "linesearch_failed"
            if it == 1:
                state.n_fev = n_fev
                state.q, state.J = best_x, float(best_f)
                raise DegenerateStartError(
                    "first line search found no decrease from the starting point", state=state
                )
            break
        x_new, g_new = ls.payload
        s = x_new - x
        y = g_new - g
        sy = float(np.dot(s, y))
        x, f, g = x_new, ls.f, g_new
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
            if len(pairs) > memory:
                pairs.pop(0)
        if f < best_f:
            best_x, best_f = x.copy(), f
        record(it)
        state.n_iter = it
        if not ls.success:
            state.status = "linesearch_exceeded"
            break
    else:
        state.status = "max_iter"

    if state.status == "running":
        state.status = "max_iter"
    state.q = best_x
    state.J = float(best_f)
    state.grad_norm = float(np.linalg.norm(g))
    state.memory = pairs
    state.n_fev = n_fev
    return state


def lbfgs_minimize(data, config, q0=None, truth=None):
    """Reconstruct ``q`` from ``data`` by L-BFGS, starting from ``q0`` (zero by default).

    With ``truth`` the relative L2 error of every accepted iterate is logged.
    Returns an :class:`InversionState` whose ``q`` is a :class:`RealField`.
    """
    problem = InverseProblem(data, config)
    grid = problem.grid
    if q0 is None:
        x0 = np.zeros(grid.n * grid.n)
    else:
        if q0.grid.n != grid.n:
            raise IncompatibleGridError("initial guess does not live on the inversion grid")
        x0 = q0.values.ravel()

    def log(it, x, f, g, n_fev):
        row = {"rel_err": math.nan}
        if truth is not None:
            row["rel_err"] = relative_error(RealField(grid, x.reshape(grid.shape)), truth)
        return row

    try:
        state = minimize_lbfgs(
            problem, x0,
            max_iter=config.max_iter,
            max_linesearch=config.max_linesearch,
            memory=config.lbfgs_memory,
            c1=config.c1,
            c2=config.c2,
            gtol=config.gtol,
            callback=log,
        )
    except DegenerateStartError as exc:
        exc.state.q = RealField(grid, exc.state.q.reshape(grid.shape))
        raise
    state.q = RealField(grid, state.q.reshape(grid.shape))
    return state


def write_history_csv(path, history):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in history:
            writer.writerow({key: row.get(key, "") for key in HISTORY_COLUMNS})


def check_adjoint_identity(q, config, seed=0, pairs=20):
    """Largest relative defect of ``<S f, g> = <f, conj(S conj(g))>`` over random pairs.

    ``config`` is anything with ``k``, ``n`` and ``L_pml`` (an
    :class:`InversionConfig` or :class:`PmlConfig`).
    """
    pml = PmlConfig(config.k, config.n, getattr(config, "L_pml", 0.05))
    system = assemble(q, pml)
    rng = np.random.default_rng(seed)
    shape = (pairs, pml.n, pml.n)
    f = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    Sf = system.solve(f)
    Sg_bar = system.solve(np.conj(g))
    worst = 0.0
    for j in range(pairs):
        lhs = np.vdot(g[j], Sf[j])  # sum Sf * conj(g)
        rhs = np.vdot(np.conj(Sg_bar[j]), f[j])  # sum f * conj(conj(S conj g))
        scale = np.linalg.norm(f[j]) * np.linalg.norm(g[j])
        worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)
