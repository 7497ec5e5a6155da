"""Acceptance gate: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they go.
"""

import itertools
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from semscan import (
    EigenBasis,
    ErrorMap,
    KernelMatrix,
    Image,
    PipelineConfig,
    SampleBudget,
    build_kernel,
    dpp_sample,
    eigendecompose,
    gradient_saliency,
    kdpp_sample,
    l1_loss,
    pearson,
    psnr,
    residual_error,
    run_acquisition,
    save_image,
    sparsification_curve,
    ssim,
    tiled_wdpp_bitmap,
    downsample_nearest,
    upsample,
)

from conftest import em_like_image


def ok(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


def test_dpp_exactness():
    kern = build_kernel(
        np.array([1.0, 0.8, 0.5]),
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        gamma=1.0,
        sigma_s=1.0,
    )
    norm = np.linalg.det(kern.entries + np.eye(3))
    exact = {}
    for size in range(4):
        for sub in itertools.combinations(range(3), size):
            det = np.linalg.det(kern.entries[np.ix_(sub, sub)]) if sub else 1.0
            exact[tuple(sub)] = det / norm
    basis = eigendecompose(kern)
    rng = np.random.default_rng(20260810)
    draws = 200_000
    counts = {sub: 0 for sub in exact}
    started = time.perf_counter()
    for _ in range(draws):
        counts[tuple(dpp_sample(basis, rng).tolist())] += 1
    elapsed = time.perf_counter() - started
    tv = 0.5 * sum(abs(counts[s] / draws - exact[s]) for s in exact)
    assert tv < 0.01, f"total variation {tv}"
    assert elapsed < 30.0, f"sampling took {elapsed:.1f}s"
    ok(f"dpp-exactness (TV={tv:.4f}, {elapsed:.1f}s)")


def test_kdpp_exactness():
    basis = EigenBasis(np.array([1.0, 2.0, 3.0]), np.eye(3))
    rng = np.random.default_rng(7)
    draws = 200_000
    counts = {}
    for _ in range(draws):
        pair = tuple(kdpp_sample(basis, 2, rng).tolist())
        counts[pair] = counts.get(pair, 0) + 1
    expected = {(0, 1): 2 / 11, (0, 2): 3 / 11, (1, 2): 6 / 11}
    gaps = {p: abs(counts.get(p, 0) / draws - q) for p, q in expected.items()}
    assert all(gap < 0.01 for gap in gaps.values()), gaps
    ok(f"kdpp-exactness (max gap {max(gaps.values()):.4f})")


def test_expected_cardinality():
    worst = 0.0
    for trial in range(5):
        rng = np.random.default_rng(1000 + trial)
        a = rng.standard_normal((6, 6))
        sym = a @ a.T
        basis = eigendecompose(
            KernelMatrix((sym + sym.T) / 2, np.zeros((6, 2)), 1.0, 1.0)
        )
        lam = basis.eigenvalues
        expected = float((lam / (lam + 1.0)).sum())
        draw_rng = np.random.default_rng(trial)
        draws = 100_000
        total = sum(dpp_sample(basis, draw_rng).size for _ in range(draws))
        rel = abs(total / draws - expected) / expected
        worst = max(worst, rel)
        assert rel < 0.01, f"kernel {trial}: relative error {rel}"
    ok(f"expected-cardinality (worst {worst:.4%})")


def test_duplicate_exclusion():
    u = np.array([0.7, 0.7, 0.4, 0.9])
    coords = np.array([[2.0, 3.0], [2.0, 3.0], [0.0, 0.0], [5.0, 1.0]])
    basis = eigendecompose(build_kernel(u, coords, 1.0, 1.5))
    rng = np.random.default_rng(11)
    violations = 0
    for _ in range(100_000):
        y = dpp_sample(basis, rng)
        if 0 in y and 1 in y:
            violations += 1
    assert violations == 0
    ok("duplicate-exclusion (0 co-occurrences in 1e5 draws)")


def test_gamma_tradeoff():
    side = 12
    ii, jj = np.mgrid[0:side, 0:side]
    blob = 0.05 + 0.95 * np.exp(-(((ii - 8) ** 2 + (jj - 8) ** 2) / (2 * 2.5**2)))
    u = ErrorMap(blob)
    stats = []
    for gamma in (0.0, 1.0, 2.0, 5.0):
        means = []
        for seed in range(1000):
            bm = tiled_wdpp_bitmap(u, SampleBudget(k=12, tile=6, seed=seed), gamma, 2.0)
            means.append(float(u.data[bm.bits].mean()))
        stats.append((float(np.mean(means)), float(np.std(means) / math.sqrt(len(means)))))
    for (lo, lo_se), (hi, hi_se) in zip(stats, stats[1:]):
        assert hi >= lo - (lo_se + hi_se), stats
    ok("gamma-tradeoff (" + ", ".join(f"{m:.3f}" for m, _ in stats) + ")")


def test_sparsification_ordering():
    fractions = (0.02, 0.05, 0.10)
    hr = em_like_image(0)
    sr = upsample(downsample_nearest(hr, 4), 4, "bicubic")
    truth = residual_error(hr, sr)
    oracle = sparsification_curve(truth, truth, fractions).residuals
    gradient = sparsification_curve(gradient_saliency(sr), truth, fractions).residuals
    random_mean = np.zeros(len(fractions))
    for seed in range(50):
        rng = np.random.default_rng(5000 + seed)
        est = ErrorMap(rng.random(truth.shape))
        random_mean += np.array(sparsification_curve(est, truth, fractions).residuals)
    random_mean /= 50
    for o, g, r in zip(oracle, gradient, random_mean):
        assert o <= g + 1e-12 <= r + 1e-12, (oracle, gradient, random_mean)
    ok("sparsification-ordering (oracle <= gradient <= random)")


def test_gradient_baseline_sanity():
    worst = math.inf
    for seed in range(3):
        hr = em_like_image(seed)
        sr = upsample(downsample_nearest(hr, 4), 4, "bicubic")
        corr = pearson(gradient_saliency(sr), residual_error(hr, sr))
        worst = min(worst, corr)
        assert corr > 0.1, f"image {seed}: correlation {corr}"
    ok(f"gradient-baseline-sanity (worst correlation {worst:.3f})")


def test_end_to_end_improvement(tmp_path):
    import dataclasses

    wdpp_overall, random_overall = [], []
    for idx in range(3):
        hr = em_like_image(idx)
        path = tmp_path / f"hr{idx}.pgm"
        save_image(hr, path)
        base = PipelineConfig(
            hr_path=str(path), total_scan_rate=0.10, downsample_rate=4, tile=16
        )
        no_rescan = run_acquisition(dataclasses.replace(base, total_scan_rate=1 / 16))
        wdpp_l1, random_l1 = [], []
        for seed in range(20):
            w = run_acquisition(dataclasses.replace(base, sampler="wdpp", seed=seed))
            r = run_acquisition(dataclasses.replace(base, sampler="random", seed=seed))
            wdpp_l1.append(w.residual_l1)
            random_l1.append(r.residual_l1)
            assert w.residual_l1 < no_rescan.residual_l1, (idx, seed)
        wdpp_overall.append(np.mean(wdpp_l1))
        random_overall.append(np.mean(random_l1))
        assert wdpp_overall[-1] <= random_overall[-1], (idx, wdpp_overall, random_overall)
    ok(
        f"end-to-end-improvement (wdpp {np.mean(wdpp_overall):.4f}"
        f" <= random {np.mean(random_overall):.4f})"
    )


def test_scan_determinism_across_threads(tmp_path):
    hr = em_like_image(4, size=32)
    hr_path = tmp_path / "hr.pgm"
    save_image(hr, hr_path)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"hr_path = {hr_path}\ntotal_scan_rate = 0.1\ndownsample_rate = 4\n"
        "tile = 16\nseed = 13\n"
    )

    def run(out_name, threads):
        out = tmp_path / out_name
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "semscan",
                "scan",
                "--config",
                str(cfg),
                "--out-dir",
                str(out),
                "--threads",
                str(threads),
            ],
            capture_output=True,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        return {
            name: (out / name).read_bytes()
            for name in ("i_out.pgm", "total_scan.pbm", "report.csv")
        }

    first = run("t1", 1)
    second = run("t1b", 1)
    threaded = run("t8", 8)
    assert first == second == threaded
    ok("scan-determinism (1 vs 8 threads byte-identical)")


def test_speedup_accounting(tmp_path):
    hr = em_like_image(5, size=32)
    hr_path = tmp_path / "hr.pgm"
    save_image(hr, hr_path)
    cfg = PipelineConfig(hr_path=str(hr_path), total_scan_rate=1 / 16, downsample_rate=4)
    report = run_acquisition(cfg)
    assert report.rescan_rate == 0.0
    assert report.total_scan_rate == 1 / 16
    assert report.speedup_factor == 16.0
    ok("speedup-accounting (rate 1/16, speedup 16.0 exact)")


def test_metric_oracles():
    rng = np.random.default_rng(21)
    a = Image(np.full((12, 12), 0.35))
    b = Image(np.full((12, 12), 0.45))
    assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)
    img = Image(rng.random((16, 16)))
    assert ssim(img, img) == 1.0
    x = rng.random((8, 8))
    assert pearson(ErrorMap(x), ErrorMap(2 * x + 1)) == pytest.approx(1.0, abs=1e-10)
    assert l1_loss(a, b) == pytest.approx(0.1, abs=1e-12)
    ok("metric-oracles (psnr 20dB, ssim 1, pearson 1)")
