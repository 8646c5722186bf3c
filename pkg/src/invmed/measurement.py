"""Transmitter/receiver layouts, the trace operator and measurement synthesis."""

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sps

from .errors import DegenerateInputError, FieldFormatError, IncompatibleGridError, LayoutError
from .grid import ComplexField, bilinear_weights, unit_grid
from .lippmann import GreenKernel, neumann_forward
from .pml import PmlConfig, assemble

__all__ = [
    "ReceiverLayout",
    "MeasurementSet",
    "make_layout",
    "incident_fields",
    "trace_matrix",
    "trace",
    "trace_adjoint",
    "add_noise",
    "achieved_snr_db",
    "synthesize",
    "write_measurements",
    "read_measurements",
]

CENTER = (0.5, 0.5)


@dataclass(frozen=True)
class ReceiverLayout:
    """Receivers on a circle around (0.5, 0.5) and plane-wave directions.

    ``source_angles`` are incidence directions: source ``j`` illuminates with
    ``exp(i k x . d_j)``, ``d_j = (cos t_j, sin t_j)``.
    """

    kind: str
    receiver_positions: tuple
    source_angles: tuple
    r_c: float = 0.45
    center_angle: float = math.pi
    aperture: float = 2 * math.pi

    @property
    def M(self):
        return len(self.source_angles)

    @property
    def N(self):
        return len(self.receiver_positions)

    def positions(self):
        return np.asarray(self.receiver_positions, dtype=float).reshape(-1, 2)


def _arc_angles(count, center_angle, aperture):
    # half-open sampling; aperture 2*pi with center pi reproduces 2*pi*i/count
    start = center_angle - 0.5 * aperture
    return np.mod(start + aperture * np.arange(count) / count, 2 * math.pi)


def make_layout(kind="full_circle", M=64, N=64, r_c=0.45, center_angle=math.pi,
                aperture=2 * math.pi, receiver_positions=None, source_angles=None):
    """Build a :class:`ReceiverLayout`.

    ``full_circle`` puts receiver ``i`` at angle ``2 pi i / N`` and source
    ``j`` at direction ``2 pi j / M``.  ``arc`` samples both on
    ``[center_angle - aperture/2, center_angle + aperture/2)`` with steps
    ``aperture / N`` and ``aperture / M``.  ``custom`` takes explicit
    ``receiver_positions`` and ``source_angles``.
    """
    if kind == "custom":
        if receiver_positions is None or source_angles is None:
            raise LayoutError("custom layout needs receiver_positions and source_angles")
        pos = np.asarray(receiver_positions, dtype=float).reshape(-1, 2)
        src = np.asarray(source_angles, dtype=float).ravel()
        if len(pos) < 1 or len(src) < 1:
            raise LayoutError("layout needs at least one receiver and one source")
        if np.any(pos <= 0.0) or np.any(pos >= 1.0):
            raise LayoutError("receivers must lie strictly inside the unit square")
        radii = np.hypot(pos[:, 0] - CENTER[0], pos[:, 1] - CENTER[1])
        return ReceiverLayout(
            "custom",
            tuple(map(tuple, pos.tolist())),
            tuple(src.tolist()),
            r_c=float(radii.max()),
            center_angle=float(center_angle),
            aperture=float(aperture),
        )
    if M < 1 or N < 1:
        raise LayoutError("layout needs M >= 1 sources and N >= 1 receivers")
    if not 0.0 < r_c < 0.5:
        raise LayoutError(f"receiver radius {r_c} places receivers outside the unit square")
    if kind == "full_circle":
        rec = 2 * math.pi * np.arange(N) / N
        src = 2 * math.pi * np.arange(M) / M
    elif kind == "arc":
        if not 0.0 < aperture <= 2 * math.pi:
            raise LayoutError("arc aperture must lie in (0, 2 pi]")
        rec = _arc_angles(N, center_angle, aperture)
        src = _arc_angles(M, center_angle, aperture)
    else:
        raise LayoutError(f"unknown layout kind {kind!r}")
    pos = np.stack([CENTER[0] + r_c * np.cos(rec), CENTER[1] + r_c * np.sin(rec)], axis=1)
    return ReceiverLayout(
        kind,
        tuple(map(tuple, pos.tolist())),
        tuple(src.tolist()),
        r_c=float(r_c),
        center_angle=float(center_angle),
        aperture=float(aperture),
    )


def incident_fields(layout, k, grid):
    """Plane waves ``exp(i k x . d_j)`` sampled on ``grid``, shape (M, n, n)."""
    X, Y = grid.mesh()
    th = np.asarray(layout.source_angles, dtype=float)
    phase = k * (np.cos(th)[:, None, None] * X + np.sin(th)[:, None, None] * Y)
    return np.exp(1j * phase)


def trace_matrix(layout, grid):
    """Sparse ``N x n^2`` bilinear sampling matrix (real weights)."""
    idx, w = bilinear_weights(grid, layout.positions())
    rows = np.repeat(np.arange(layout.N), 4)
    return sps.csr_matrix((w.ravel(), (rows, idx.ravel())), shape=(layout.N, grid.n * grid.n))


def trace(u, layout):
    """Field values at the receivers (bilinear interpolation)."""
    T = trace_matrix(layout, u.grid)
    return T @ u.values.ravel()


def trace_adjoint(v, layout, grid):
    """Exact transpose of :func:`trace`: spread ``v`` back onto the nodes."""
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != layout.N:
        raise IncompatibleGridError(f"expected {layout.N} receiver values, got {v.size}")
    T = trace_matrix(layout, grid)
    return ComplexField(grid, (T.T @ v).reshape(grid.shape))


@dataclass(frozen=True)
class MeasurementSet:
    """Receiver traces, one row per source (shape M x N)."""

    data: np.ndarray
    k: float
    layout: ReceiverLayout
    snr_db: float = math.inf
    seed: object = None

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        if arr.shape != (self.layout.M, self.layout.N):
            raise IncompatibleGridError(
                f"data shape {arr.shape} does not match layout ({self.layout.M}, {self.layout.N})"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("measurement data must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def M(self):
        return self.layout.M

    @property
    def N(self):
        return self.layout.N


def add_noise(m, snr_db, seed):
    """Add circular complex Gaussian noise at exactly ``snr_db`` (global SNR).

    The draw is rescaled after sampling so that
    ``10 log10(||data||_F^2 / ||noise||_F^2) == snr_db``.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return replace(m, snr_db=math.inf, seed=seed)
    signal = np.linalg.norm(m.data)
    if signal == 0:
        raise DegenerateInputError("cannot set an SNR on all-zero data")
    if seed is None:
        raise ValueError("noise requires an explicit seed")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(m.data.shape) + 1j * rng.standard_normal(m.data.shape)
    noise *= signal / (np.linalg.norm(noise) * 10.0 ** (snr_db / 20.0))
    return replace(m, data=m.data + noise, snr_db=float(snr_db), seed=seed)


def achieved_snr_db(clean, noisy):
    noise = np.asarray(noisy) - np.asarray(clean)
    return 10.0 * math.log10(np.sum(np.abs(clean) ** 2) / np.sum(np.abs(noise) ** 2))


def synthesize(q_true, layout, k=40.0, fine_n=1025, coarse_n=129, snr_db=math.inf, seed=None,
               L_pml=0.05, workers=1, solver="pml", neumann_L=3):
    """Simulate receiver data on the fine mesh.

    ``q_true`` must be sampled on the ``fine_n`` grid.  ``coarse_n`` is the
    inversion mesh; it is only checked for compatibility here, so the fine
    solution never leaks into the inversion.  ``solver`` picks the forward
    model: the PML solver (default) or the ``neumann_L``-term Neumann series,
    which is only trustworthy for weak scatterers.
    """
    if q_true.grid.n != fine_n:
        raise IncompatibleGridError(
            f"true scatterer has {q_true.grid.n} points per side, expected fine_n = {fine_n}"
        )
    if fine_n < coarse_n or (fine_n - 1) % (coarse_n - 1) != 0:
        raise IncompatibleGridError(f"fine mesh {fine_n} is not a refinement of {coarse_n}")
    if solver not in ("pml", "neumann"):
        raise ValueError(f"unknown forward solver {solver!r}")
    grid = unit_grid(fine_n)
    T = trace_matrix(layout, grid)
    data = np.zeros((layout.M, layout.N), dtype=complex)
    uinc = incident_fields(layout, k, grid)
    scatters = bool(np.any(q_true.values))
    if scatters and solver == "pml":
        system = assemble(q_true, PmlConfig(k, fine_n, L_pml))
        chunk = 8
        for start in range(0, layout.M, chunk):
            src = q_true.values[None] * uinc[start:start + chunk]
            us = system.solve(src, workers=workers)
            data[start:start + chunk] = (T @ us.reshape(len(us), -1).T).T
    elif scatters:
        kernel = GreenKernel(k, grid)
        for j in range(layout.M):
            us, _ = neumann_forward(q_true, ComplexField(grid, uinc[j]), kernel, neumann_L)
            data[j] = T @ us.values.ravel()
    m = MeasurementSet(data, float(k), layout)
    return add_noise(m, snr_db, seed)


def _jsonable_snr(snr):
    return None if math.isinf(snr) else float(snr)


def write_measurements(path, m):
    """Write ``m`` in the ``.msr`` format: JSON header line + M*N c128 values."""
    lay = m.layout
    header = {
        "M": lay.M,
        "N": lay.N,
        "k": float(m.k),
        "snr_db": _jsonable_snr(m.snr_db),
        "r_c": float(lay.r_c),
        "layout_kind": lay.kind,
        "center_angle": float(lay.center_angle),
        "aperture": float(lay.aperture),
        "seed": m.seed,
        "source_angles": [float(a) for a in lay.source_angles],
        "receiver_positions": [[float(x), float(y)] for x, y in lay.receiver_positions],
    }
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(m.data, dtype="<c16").tobytes())
    return path


def read_measurements(path):
    raw = Path(path).read_bytes()
    cut = raw.find(b"\n")
    if cut < 0:
        raise FieldFormatError(f"{path}: missing header line")
    try:
        h = json.loads(raw[:cut].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"{path}: bad header ({exc})") from None
    for key in ("M", "N", "k", "snr_db", "r_c", "layout_kind"):
        if key not in h:
            raise FieldFormatError(f"{path}: header lacks {key!r}")
    M, N = int(h["M"]), int(h["N"])
    body = raw[cut + 1:]
    if len(body) != 16 * M * N:
        raise FieldFormatError(f"{path}: expected {16 * M * N} data bytes, found {len(body)}")
    if "receiver_positions" in h and "source_angles" in h:
        layout = ReceiverLayout(
            h["layout_kind"],
            tuple(tuple(p) for p in h["receiver_positions"]),
            tuple(h["source_angles"]),
            r_c=float(h["r_c"]),
            center_angle=float(h.get("center_angle", math.pi)),
            aperture=float(h.get("aperture", 2 * math.pi)),
        )
    else:
        layout = make_layout(
            h["layout_kind"], M, N, float(h["r_c"]),
            center_angle=float(h.get("center_angle", math.pi)),
            aperture=float(h.get("aperture", 2 * math.pi)),
        )
    data = np.frombuffer(body, dtype="<c16").reshape(M, N)
    snr = math.inf if h["snr_db"] is None else float(h["snr_db"])
    return MeasurementSet(data, float(h["k"]), layout, snr, h.get("seed"))
