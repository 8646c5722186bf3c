"""Scatterer generators: random Gaussian mixtures, the two-Gaussian test
target and piecewise-constant geometric shapes."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, SupportViolationError
from .grid import RealField

__all__ = [
    "GaussianMixtureSpec",
    "GeometricPhantom",
    "support_window",
    "sample_gaussian_mixture",
    "normalize_max",
    "two_gauss_raw",
    "two_gauss_test",
    "make_geometric",
    "geometric_preset",
    "GEOMETRIC_KINDS",
]

SHAPE_MARGIN = (0.15, 0.85)


def support_window(x, y, inner=(0.2, 0.8), outer=(0.1, 0.9)):
    """Separable cos^2 taper: 1 on ``inner``, 0 outside ``outer``."""

    def ramp(t):
        t = np.asarray(t, dtype=float)
        w = np.ones_like(t)
        lo = (t >= outer[0]) & (t < inner[0])
        hi = (t > inner[1]) & (t <= outer[1])
        w[lo] = np.sin(0.5 * np.pi * (t[lo] - outer[0]) / (inner[0] - outer[0])) ** 2
        w[hi] = np.sin(0.5 * np.pi * (outer[1] - t[hi]) / (outer[1] - inner[1])) ** 2
        w[(t < outer[0]) | (t > outer[1])] = 0.0
        return w

    return ramp(x) * ramp(y)


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Parameters of ``sum_i lam_i exp(-a_i (x - b_i)^2 - c_i (y - d_i)^2)``."""

    eta: int
    a: tuple
    b: tuple
    c: tuple
    d: tuple
    lam: tuple
    seed: object = None
    R: float = 200.0

    def evaluate(self, x, y):
        out = np.zeros(np.broadcast(x, y).shape)
        for ai, bi, ci, di, li in zip(self.a, self.b, self.c, self.d, self.lam):
            out += li * np.exp(-ai * (x - bi) ** 2 - ci * (y - di) ** 2)
        return out


def _draw_mixture(rng, R=200.0, seed=None):
    eta = int(rng.integers(1, 7))
    a = rng.uniform(R / 2, R, eta)
    c = rng.uniform(R / 2, R, eta)
    b = rng.uniform(0.2, 0.8, eta)
    d = rng.uniform(0.2, 0.8, eta)
    lam = rng.uniform(-1.0, 1.0, eta)
    return GaussianMixtureSpec(
        eta, tuple(a), tuple(b), tuple(c), tuple(d), tuple(lam), seed=seed, R=R
    )


def sample_gaussian_mixture(grid, seed, R=200.0, taper=True):
    """Draw a random Gaussian mixture and sample it on ``grid``.

    The component count is uniform on {1..6}; widths ``a, c ~ U(R/2, R)``,
    centres ``b, d ~ U(0.2, 0.8)`` and amplitudes ``lam ~ U(-1, 1)``.  With
    ``taper`` the field is multiplied by :func:`support_window` so that it
    vanishes identically outside ``[0.1, 0.9]^2``.
    """
    rng = np.random.default_rng(seed)
    spec = _draw_mixture(rng, R=R, seed=seed)
    X, Y = grid.mesh()
    vals = spec.evaluate(X, Y)
    if taper:
        vals = vals * support_window(X, Y)
    return spec, RealField(grid, vals)


def normalize_max(q, target):
    """Rescale ``q`` so that ``max |q| == target``."""
    if not target > 0:
        raise ValueError("target magnitude must be positive")
    peak = np.max(np.abs(q.values))
    if peak == 0:
        raise DegenerateInputError("cannot normalize an identically zero scatterer")
    return q.with_values(q.values * (target / peak))


def two_gauss_raw(x, y):
    return np.exp(-150 * (x - 0.3) ** 2 - 70 * (y - 0.6) ** 2) - 0.7 * np.exp(
        -40 * (x - 0.7) ** 2 - 90 * (y - 0.4) ** 2
    )


def two_gauss_test(grid, magnitude=0.1):
    """Positive/negative Gaussian pair used as the reference inversion target."""
    if not magnitude > 0:
        raise ValueError("magnitude must be positive")
    X, Y = grid.mesh()
    return normalize_max(RealField(grid, two_gauss_raw(X, Y)), magnitude)


@dataclass(frozen=True)
class GeometricPhantom:
    """Union of simple shapes, rendered as a sum of indicator functions.

    discs : (cx, cy, r) triples
    rects : (x0, y0, x1, y1) boxes
    annuli : (cx, cy, r_inner, r_outer)
    """

    kind: str = "custom"
    discs: tuple = field(default_factory=tuple)
    rects: tuple = field(default_factory=tuple)
    annuli: tuple = field(default_factory=tuple)
    magnitude: float = 1.0

    def bounding_boxes(self):
        for cx, cy, r in self.discs:
            yield (cx - r, cy - r, cx + r, cy + r)
        for box in self.rects:
            yield tuple(box)
        for cx, cy, _, r in self.annuli:
            yield (cx - r, cy - r, cx + r, cy + r)


def make_geometric(phantom, grid):
    """Render ``phantom`` on ``grid`` and scale its maximum to ``phantom.magnitude``."""
    lo, hi = SHAPE_MARGIN
    for x0, y0, x1, y1 in phantom.bounding_boxes():
        if x0 < lo or y0 < lo or x1 > hi or y1 > hi:
            raise SupportViolationError(
                f"shape box ({x0:.3f}, {y0:.3f}, {x1:.3f}, {y1:.3f}) leaves [{lo}, {hi}]^2"
            )
    X, Y = grid.mesh()
    vals = np.zeros(grid.shape)
    for cx, cy, r in phantom.discs:
        vals += (X - cx) ** 2 + (Y - cy) ** 2 <= r * r
    for x0, y0, x1, y1 in phantom.rects:
        vals += (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1)
    for cx, cy, r_in, r_out in phantom.annuli:
        rr = (X - cx) ** 2 + (Y - cy) ** 2
        vals += (rr >= r_in * r_in) & (rr <= r_out * r_out)
    return normalize_max(RealField(grid, vals), phantom.magnitude)


# Parametric stand-ins for the benchmark shapes; proportions are our own.
_PRESETS = {
    "discs": dict(discs=((0.42, 0.5, 0.17), (0.6, 0.58, 0.15), (0.56, 0.38, 0.12))),
    "rectangle_robot": dict(
        rects=(
            (0.42, 0.69, 0.58, 0.81),  # head
            (0.35, 0.39, 0.65, 0.66),  # body
            (0.20, 0.50, 0.32, 0.62),  # arms
            (0.68, 0.50, 0.80, 0.62),
            (0.37, 0.18, 0.47, 0.36),  # legs
            (0.53, 0.18, 0.63, 0.36),
        )
    ),
    "austria": dict(
        discs=((0.35, 0.65, 0.1), (0.65, 0.65, 0.1)),
        annuli=((0.5, 0.35, 0.08, 0.15),),
    ),
    "small_cluster": dict(
        discs=(
            (0.30, 0.30, 0.04),
            (0.50, 0.27, 0.035),
            (0.70, 0.33, 0.04),
            (0.32, 0.56, 0.03),
            (0.55, 0.60, 0.045),
            (0.72, 0.70, 0.035),
            (0.40, 0.76, 0.03),
        )
    ),
}

GEOMETRIC_KINDS = tuple(_PRESETS)


def geometric_preset(kind, magnitude):
    if kind not in _PRESETS:
        raise ValueError(f"unknown geometric phantom {kind!r}; choose from {GEOMETRIC_KINDS}")
    return GeometricPhantom(kind=kind, magnitude=magnitude, **_PRESETS[kind])
