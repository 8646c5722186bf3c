"""Acceptance criteria, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL ...`` line (shown even
without ``-s``).  Run with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math
import time
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest

from invmed.experiments import RunConfig, run_experiment
from invmed.grid import ComplexField, RealField, grid_norm, restrict, unit_grid
from invmed.inversion import InversionConfig, check_adjoint_identity, lbfgs_minimize, objective_and_gradient
from invmed.lippmann import GreenKernel, estimate_contraction, neumann_forward
from invmed.measurement import achieved_snr_db, make_layout, synthesize
from invmed.phantoms import normalize_max, sample_gaussian_mixture, two_gauss_test
from invmed.pml import PmlConfig, forward_scatter
from invmed.special import bessel_j0, bessel_j1, bessel_y0, bessel_y1, hankel1

FIXTURE = json.loads((Path(__file__).parent / "fixtures" / "regression.json").read_text())


@pytest.fixture
def verdict(capsys):
    """Call ``verdict(n, ok, detail)`` to print the criterion line, then assert."""

    def report(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return report


def plane_wave(grid, k, theta=0.0):
    X, Y = grid.mesh()
    return ComplexField(grid, np.exp(1j * k * (np.cos(theta) * X + np.sin(theta) * Y)))


def test_criterion_1_cross_solver_agreement(verdict):
    k, n = 20.0, 129
    grid = unit_grid(n)
    q = normalize_max(sample_gaussian_mixture(grid, 2024)[1], 0.05)
    ui = plane_wave(grid, k, 0.3)
    t0 = time.perf_counter()
    u_ls, diag = neumann_forward(q, ui, GreenKernel(k, grid), L=8)
    (u_pml,) = forward_scatter(q, [ui], PmlConfig(k, n))
    elapsed = time.perf_counter() - t0
    rel = grid_norm(u_ls.with_values(u_ls.values - u_pml.values)) / grid_norm(u_pml)
    verdict(1, rel <= 0.05 and elapsed <= 60.0,
            f"relative L2 difference {rel:.4f} (<= 0.05), {elapsed:.1f} s (<= 60 s), converged={diag.converged}")


def test_criterion_2_neumann_regime(verdict):
    k = 20.0
    grid = unit_grid(129)
    kern = GreenKernel(k, grid)
    ui = plane_wave(grid, k)
    decreasing = []
    for seed, mag in ((1, 0.02), (2, 0.05), (3, 0.1), (4, 0.2)):
        q = normalize_max(sample_gaussian_mixture(grid, seed)[1], mag)
        rho = estimate_contraction(q, kern)
        if rho < 0.9:
            _, d = neumann_forward(q, ui, kern, L=6)
            t = d.term_norms
            decreasing.append(all(b < a for a, b in zip(t, t[1:])) and d.converged)
    k_hi = 60.0
    kern_hi = GreenKernel(k_hi, grid)
    q_hi = normalize_max(sample_gaussian_mixture(grid, 2024)[1], 0.6)
    rho_hi = estimate_contraction(q_hi, kern_hi)
    _, d_hi = neumann_forward(q_hi, plane_wave(grid, k_hi), kern_hi, L=8)
    ok = len(decreasing) > 0 and all(decreasing) and d_hi.converged is False
    verdict(2, ok, f"{sum(decreasing)}/{len(decreasing)} contractive cases decrease monotonically; "
                   f"|q|=0.6, k=60: contraction {rho_hi:.2f}, converged={d_hi.converged}")


def test_criterion_3_adjoint_identity(verdict):
    worst = 0.0
    for n in (17, 33):
        cfg = InversionConfig(k=10.0, n=n)
        smooth = normalize_max(sample_gaussian_mixture(unit_grid(n), 8)[1], 0.3)
        for q in (RealField.zeros(unit_grid(n)), smooth):
            worst = max(worst, check_adjoint_identity(q, cfg, seed=n, pairs=20))
    verdict(3, worst <= 1e-10, f"max relative defect {worst:.2e} (<= 1e-10)")


def test_criterion_4_adjoint_gradient(verdict):
    k, n = 10.0, 33
    t0 = time.perf_counter()
    grid = unit_grid(n)
    q_true = normalize_max(sample_gaussian_mixture(grid, 5)[1], 0.2)
    data = synthesize(q_true, make_layout(M=8, N=16), k, n, n)
    cfg = InversionConfig(k=k, n=n)
    q = normalize_max(sample_gaussian_mixture(grid, 6)[1], 0.1)
    _, grad, _ = objective_and_gradient(q, data, cfg)
    rng = np.random.default_rng(0)
    # white-noise directions: the O(eps^2) central-difference error needs a small step
    worst, eps = 0.0, 1e-6
    for _ in range(10):
        v = rng.standard_normal(grid.shape)
        jp = objective_and_gradient(q.with_values(q.values + eps * v), data, cfg)[0]
        jm = objective_and_gradient(q.with_values(q.values - eps * v), data, cfg)[0]
        fd = (jp - jm) / (2 * eps)
        worst = max(worst, abs(fd - float(np.sum(grad.values * v))) / abs(fd))
    elapsed = time.perf_counter() - t0
    verdict(4, worst <= 1e-5 and elapsed <= 30.0,
            f"max relative FD mismatch {worst:.2e} (<= 1e-5) over 10 directions, {elapsed:.1f} s (<= 30 s)")


def test_criterion_5_pml_order(verdict):
    k = 20.0
    sols = {}
    for n in (129, 257, 513):
        grid = unit_grid(n)
        (us,) = forward_scatter(two_gauss_test(grid, 0.1), [plane_wave(grid, k)], PmlConfig(k, n))
        sols[n] = restrict(us, 129)
    e1 = grid_norm(sols[129].with_values(sols[129].values - sols[257].values))
    e2 = grid_norm(sols[257].with_values(sols[257].values - sols[513].values))
    order = math.log2(e1 / e2)
    verdict(5, abs(order - 2.0) <= 0.3, f"Richardson order {order:.3f} (2 +/- 0.3)")


@pytest.fixture(scope="module")
def desk_replica():
    """Noiseless and 5 dB runs of the two-Gaussian reconstruction."""
    q_fine = two_gauss_test(unit_grid(513), 0.1)
    q_true = restrict(q_fine, 129)
    layout = make_layout(M=64, N=64)
    runs = {}
    for label, snr, seed in (("clean", math.inf, None), ("noisy", 5.0, FIXTURE["noise_5db"]["seed"])):
        t0 = time.perf_counter()
        data = synthesize(q_fine, layout, 40.0, 513, 129, snr_db=snr, seed=seed)
        clean = data if seed is None else synthesize(q_fine, layout, 40.0, 513, 129)
        state = lbfgs_minimize(data, InversionConfig(k=40.0, n=129, max_iter=15), truth=q_true)
        runs[label] = dict(state=state, data=data, clean=clean, elapsed=time.perf_counter() - t0)
    return runs


def test_criterion_6_end_to_end(verdict, desk_replica):
    run = desk_replica["clean"]
    state = run["state"]
    J0 = state.history[0]["J"]
    rel = state.history[-1]["rel_err"]
    threshold = FIXTURE["noiseless"]["rel_err_threshold"]
    drop = J0 / state.J
    ok = drop >= 100.0 and rel <= threshold and run["elapsed"] <= 900.0
    verdict(6, ok, f"J {J0:.4g} -> {state.J:.4g} (x{drop:.0f}, >= 100), rel_err {rel:.5f} "
                   f"(<= {threshold}), {run['elapsed']:.1f} s (<= 900 s)")


def test_criterion_7_noise_robustness(verdict, desk_replica):
    noisy = desk_replica["noisy"]
    state = noisy["state"]
    snr = achieved_snr_db(noisy["clean"].data, noisy["data"].data)
    snr_ok = abs(snr - 5.0) <= 1e-9
    factor = state.history[-1]["rel_err"] / FIXTURE["noiseless"]["rel_err_recorded"]
    bound = FIXTURE["noise_5db"]["factor_bound"]
    ok = snr_ok and state.status in ("max_iter", "gtol") and factor <= bound
    verdict(7, ok, f"SNR {snr:.12f} dB (5 +/- 1e-9), status {state.status}, "
                   f"rel_err factor {factor:.2f} over noiseless (<= {bound})")


def test_criterion_8_determinism(verdict, tmp_path):
    cases = [
        RunConfig(name="det-mix", phantom="gaussian_mixture", magnitude=0.2, k=10.0, n=33, fine_n=65,
                  M=8, N=16, snr_db=10.0, max_iter=4, seed=31),
        RunConfig(name="det-arc", phantom="austria", magnitude=0.3, k=10.0, n=33, fine_n=65, M=6, N=12,
                  layout="arc", aperture=math.pi, snr_db=5.0, max_iter=3, seed=32),
    ]
    mismatches = []
    for cfg in cases:
        first = tmp_path / cfg.name / "first"
        run_experiment(cfg, first)
        second = tmp_path / cfg.name / "second"
        run_experiment(RunConfig.load(first / "config.json"), second)
        for name in ("truth.fld", "data.msr", "reconstruction.fld"):
            if (first / name).read_bytes() != (second / name).read_bytes():
                mismatches.append(f"{cfg.name}/{name}")
    verdict(8, not mismatches, f"{len(cases)} experiments re-run from config; mismatching files: {mismatches or 'none'}")


def test_criterion_9_special_functions(verdict):
    mp.mp.dps = 40
    xs = [1e-4, 0.1, 0.5, 1.0, 2.5, 5.0, 10.0, 11.9, 12.1, 25.0, 100.0, 1000.0]
    worst = 0.0
    for x in xs:
        pairs = [
            (bessel_j0(x), float(mp.besselj(0, x))),
            (bessel_j1(x), float(mp.besselj(1, x))),
            (bessel_y0(x), float(mp.bessely(0, x))),
            (bessel_y1(x), float(mp.bessely(1, x))),
        ]
        h = hankel1(0, x)
        pairs += [(h.real, float(mp.besselj(0, x))), (h.imag, float(mp.bessely(0, x)))]
        for ours, ref in pairs:
            worst = max(worst, abs(ours - ref) / max(1.0, abs(ref)))
    wr = max(abs(bessel_j1(x) * bessel_y0(x) - bessel_j0(x) * bessel_y1(x) - 2 / (math.pi * x))
             for x in (0.1, 1.0, 10.0, 100.0))
    verdict(9, worst <= 1e-10 and wr <= 1e-10, f"max oracle error {worst:.2e}, Wronskian defect {wr:.2e} (<= 1e-10)")
