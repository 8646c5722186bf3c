"""Preset reconstruction scenarios: synthesize -> invert -> score.

Every run writes a config snapshot (``config.json``) from which it can be
repeated byte-for-byte, together with the truth, data, reconstruction,
iteration log, heatmaps and a ``summary.json``.
"""

import json
import math
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .grid import restrict, unit_grid, write_field
from .heatmap import export_heatmap
from .inversion import InversionConfig, lbfgs_minimize, write_history_csv
from .measurement import make_layout, synthesize, write_measurements
from .metrics import metric_report
from .phantoms import (
    GEOMETRIC_KINDS,
    geometric_preset,
    make_geometric,
    normalize_max,
    sample_gaussian_mixture,
    two_gauss_test,
)

__all__ = ["RunConfig", "PRESETS", "PHANTOM_KINDS", "preset_config", "make_phantom", "run_experiment"]

PHANTOM_KINDS = ("two_gauss", "gaussian_mixture") + GEOMETRIC_KINDS


@dataclass(frozen=True)
class RunConfig:
    name: str = "custom"
    phantom: str = "two_gauss"
    magnitude: float = 0.1
    k: float = 40.0
    n: int = 129
    fine_n: int = 1025
    M: int = 64
    N: int = 64
    r_c: float = 0.45
    layout: str = "full_circle"
    center_angle: float = math.pi
    aperture: float = 2 * math.pi
    snr_db: float = math.inf
    solver: str = "pml"
    neumann_L: int = 3
    max_iter: int = 15
    max_linesearch: int = 20
    lbfgs_memory: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    L_pml: float = 0.05
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.phantom not in PHANTOM_KINDS:
            raise ConfigError(f"unknown phantom {self.phantom!r}; choose from {PHANTOM_KINDS}")
        if not self.magnitude > 0:
            raise ConfigError("magnitude must be positive")
        if not self.k > 0:
            raise ConfigError("k must be positive")
        if self.n < 3 or self.fine_n < self.n or (self.fine_n - 1) % (self.n - 1):
            raise ConfigError(f"fine_n = {self.fine_n} is not a refinement of n = {self.n}")
        if self.solver not in ("pml", "neumann"):
            raise ConfigError("solver must be 'pml' or 'neumann'")
        if self.neumann_L < 1:
            raise ConfigError("neumann_L must be >= 1")
        if self.layout not in ("full_circle", "arc"):
            raise ConfigError("layout must be 'full_circle' or 'arc'")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        InversionConfig(self.k, self.n, self.max_iter, self.max_linesearch, self.lbfgs_memory,
                        self.c1, self.c2, L_pml=self.L_pml)

    def to_dict(self):
        d = asdict(self)
        d["snr_db"] = None if math.isinf(self.snr_db) else self.snr_db
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "snr_db" in d and d["snr_db"] is None:
            d["snr_db"] = math.inf
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def inversion_config(self):
        return InversionConfig(
            k=self.k, n=self.n, max_iter=self.max_iter, max_linesearch=self.max_linesearch,
            lbfgs_memory=self.lbfgs_memory, c1=self.c1, c2=self.c2, L_pml=self.L_pml,
            workers=self.threads,
        )


PRESETS = {
    "simple": dict(phantom="two_gauss", magnitude=0.1, k=40.0, snr_db=math.inf),
    "magnitude": dict(phantom="two_gauss", magnitude=0.4, k=40.0, snr_db=math.inf),
    "geometry": dict(phantom="discs", magnitude=0.6, k=40.0, snr_db=math.inf),
    "noise": dict(phantom="austria", magnitude=0.5, k=40.0, snr_db=5.0),
    "layout": dict(phantom="austria", magnitude=0.5, k=40.0, snr_db=5.0,
                   layout="arc", center_angle=math.pi, aperture=math.pi),
    "wavenumber": dict(phantom="small_cluster", magnitude=0.5, k=60.0, snr_db=5.0),
}


def preset_config(name, **overrides):
    if name not in PRESETS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(PRESETS)}")
    base = dict(PRESETS[name], name=name)
    base.update({key: val for key, val in overrides.items() if val is not None})
    return RunConfig.from_dict(base)


def make_phantom(kind, magnitude, grid, seed=0):
    """Scatterer of the given kind sampled on ``grid`` with ``max |q| = magnitude``."""
    if kind == "two_gauss":
        return two_gauss_test(grid, magnitude)
    if kind == "gaussian_mixture":
        return normalize_max(sample_gaussian_mixture(grid, seed)[1], magnitude)
    return make_geometric(geometric_preset(kind, magnitude), grid)


def run_experiment(config, out_dir, log=None):
    """Run one scenario and write its artefacts into ``out_dir``.

    ``config.solver`` selects the forward model that synthesizes the data;
    the reconstruction always uses the PML solver, whose adjoint gives the
    gradient.

    Returns the summary dictionary.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config.save(out / "config.json")
    t0 = time.perf_counter()

    q_fine = make_phantom(config.phantom, config.magnitude, unit_grid(config.fine_n), config.seed)
    q_true = restrict(q_fine, config.n)
    layout = make_layout(config.layout, config.M, config.N, config.r_c,
                         center_angle=config.center_angle, aperture=config.aperture)
    data = synthesize(q_fine, layout, config.k, config.fine_n, config.n,
                      snr_db=config.snr_db, seed=config.seed, L_pml=config.L_pml,
                      workers=config.threads, solver=config.solver, neumann_L=config.neumann_L)
    del q_fine
    write_field(out / "truth.fld", q_true, k=config.k)
    write_measurements(out / "data.msr", data)
    if log:
        log(f"data synthesized on {config.fine_n}^2 mesh in {time.perf_counter() - t0:.1f} s")

    state = lbfgs_minimize(data, config.inversion_config(), truth=q_true)
    write_field(out / "reconstruction.fld", state.q, k=config.k)
    write_history_csv(out / "history.csv", state.history)
    export_heatmap(q_true, out / "truth.pgm")
    export_heatmap(state.q, out / "reconstruction.pgm")

    report = metric_report(state.q, q_true, data_misfit=state.J)
    summary = {
        "name": config.name,
        "phantom": config.phantom,
        "k": config.k,
        "snr_db": None if math.isinf(config.snr_db) else config.snr_db,
        "rel_err": report.rel_err,
        "ssim": report.ssim,
        "J0": state.history[0]["J"],
        "J": state.J,
        "n_iter": state.n_iter,
        "n_fev": state.n_fev,
        "status": state.status,
        "elapsed_s": time.perf_counter() - t0,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if log:
        log(f"{config.name}: rel_err={report.rel_err:.4f} ssim={report.ssim:.4f} "
            f"n_fev={state.n_fev} status={state.status}")
    return summary
