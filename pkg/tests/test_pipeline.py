import dataclasses
import math

import numpy as np
import pytest

from semscan import (
    Bitmap,
    ErrorMap,
    Image,
    PipelineConfig,
    ValidationError,
    acquisition_cost,
    evaluate_roi,
    load_config,
    load_image,
    pbm_to_bitmap,
    run_acquisition,
    save_image,
    scan_lattice,
    sweep_speedup,
    upsample,
    downsample_nearest,
    write_emap,
)
from semscan.pipeline import parse_config, rescan_budget, _estimate
from semscan.saliency import ProbabilityMap


@pytest.fixture
def hr_file(tmp_path, em_image):
    path = tmp_path / "hr.pgm"
    save_image(em_image, path)
    return str(path)


def make_config(hr_file, **kw) -> PipelineConfig:
    base = dict(hr_path=hr_file, total_scan_rate=0.10, downsample_rate=4, tile=16)
    base.update(kw)
    return PipelineConfig(**base)


class TestConfigParsing:
    def test_round_trip(self, tmp_path, hr_file):
        text = "\n".join(
            [
                "# pipeline settings",
                f"hr_path = {hr_file}",
                "total_scan_rate = 0.1",
                "downsample_rate = 4",
                "reconstruction = bicubic",
                "estimator = oracle",
                "sampler = wdpp",
                "gamma = 2.0",
                "sigma_s = 2.0",
                "tile = 16",
                "seed = 7",
                "lambda = 0.5",
                "",
            ]
        )
        cfg_path = tmp_path / "run.cfg"
        cfg_path.write_text(text)
        cfg = load_config(cfg_path)
        assert cfg.seed == 7
        assert cfg.lambda_ == 0.5
        assert cfg.tile == 16

    def test_unknown_key(self):
        with pytest.raises(ValidationError, match="unknown config key"):
            parse_config("bogus = 1")

    def test_duplicate_key(self):
        with pytest.raises(ValidationError, match="duplicate"):
            parse_config("seed = 1\nseed = 2")

    def test_bad_value(self):
        with pytest.raises(ValidationError, match="bad value"):
            parse_config("seed = pony")

    def test_not_key_value(self):
        with pytest.raises(ValidationError, match="key = value"):
            parse_config("just some words")

    def test_roi_pair(self):
        kwargs = parse_config("roi = a.emap, b.emap")
        assert kwargs["roi"] == ("a.emap", "b.emap")
        with pytest.raises(ValidationError):
            parse_config("roi = only_one.emap")

    def test_missing_required(self, tmp_path):
        p = tmp_path / "partial.cfg"
        p.write_text("seed = 1\n")
        with pytest.raises(ValidationError, match="incomplete config"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="nope.cfg"):
            load_config(tmp_path / "nope.cfg")

    def test_overrides(self, tmp_path, hr_file):
        p = tmp_path / "run.cfg"
        p.write_text(f"hr_path = {hr_file}\ntotal_scan_rate = 0.1\n")
        cfg = load_config(p, {"seed": "9", "sampler": "topk"})
        assert cfg.seed == 9 and cfg.sampler == "topk"


class TestConfigInvariants:
    def test_rate_below_initial_scan(self, hr_file):
        with pytest.raises(ValidationError, match="initial-scan"):
            make_config(hr_file, total_scan_rate=0.05, downsample_rate=4)

    def test_rate_out_of_unit_interval(self, hr_file):
        with pytest.raises(ValidationError):
            make_config(hr_file, total_scan_rate=1.5)
        with pytest.raises(ValidationError):
            make_config(hr_file, total_scan_rate=0.0)

    def test_bad_sampler(self, hr_file):
        with pytest.raises(ValidationError, match="sampler"):
            make_config(hr_file, sampler="sobol")

    def test_entropy_needs_roi(self, hr_file):
        with pytest.raises(ValidationError, match="entropy"):
            make_config(hr_file, estimator="entropy")

    def test_budget_formula(self, hr_file):
        cfg = make_config(hr_file, total_scan_rate=0.10)
        assert rescan_budget(cfg, 4096) == round((0.10 - 1 / 16) * 4096)


class TestAcquisitionCost:
    def test_full_scan_perfect_output(self):
        img = Image(np.random.default_rng(0).random((4, 4)))
        ones = Bitmap(np.ones((4, 4), bool))
        assert acquisition_cost(img, img, ones, 1.0) == 1.0

    def test_lambda_zero_is_residual_only(self):
        a = Image(np.full((4, 4), 0.5))
        b = Image(np.full((4, 4), 0.25))
        ones = Bitmap(np.ones((4, 4), bool))
        assert acquisition_cost(a, b, ones, 0.0) == pytest.approx(0.25)

    def test_recompose_oracle(self):
        rng = np.random.default_rng(1)
        a, b = Image(rng.random((5, 6))), Image(rng.random((5, 6)))
        bits = Bitmap(rng.random((5, 6)) < 0.3)
        lam = 0.7
        expected = np.abs(a.data - b.data).mean() + lam * bits.count / 30
        assert acquisition_cost(a, b, bits, lam) == pytest.approx(expected, abs=1e-12)


class TestRunAcquisition:
    def test_zero_budget_output_is_reconstruction(self, hr_file):
        cfg = make_config(hr_file, total_scan_rate=1 / 16)
        report = run_acquisition(cfg)
        hr = load_image(hr_file)
        sr = upsample(downsample_nearest(hr, 4), 4, "bicubic")
        lattice = scan_lattice(hr.width, hr.height, 4)
        expected = np.where(lattice.bits, hr.data, sr.data)
        assert report.rescan_rate == 0.0
        assert report.total_scan_rate == 1 / 16
        assert report.speedup_factor == 16.0
        assert report.residual_l1 == pytest.approx(np.abs(hr.data - expected).mean())

    def test_full_rate_reproduces_ground_truth(self, hr_file, tmp_path):
        cfg = make_config(hr_file, total_scan_rate=1.0)
        report = run_acquisition(cfg, out_dir=tmp_path / "full")
        assert report.residual_l1 == 0.0
        assert report.speedup_factor == 1.0
        assert report.psnr == math.inf
        out = load_image(report.artifacts["i_out"])
        hr = load_image(hr_file)
        assert np.array_equal(out.data, (load_image(hr_file)).data[: out.height, : out.width])

    @pytest.mark.parametrize("sampler", ["wdpp", "topk", "random"])
    def test_rescan_disjoint_from_lattice_and_exact_k(self, hr_file, tmp_path, sampler):
        cfg = make_config(hr_file, sampler=sampler, seed=5)
        out_dir = tmp_path / sampler
        report = run_acquisition(cfg, out_dir=out_dir)
        hr = load_image(hr_file)
        n = hr.data.size
        total = pbm_to_bitmap(report.artifacts["total_scan"])
        lattice = scan_lattice(hr.width, hr.height, 4)
        k = rescan_budget(cfg, n)
        assert (total.bits & lattice.bits).sum() == lattice.count
        assert total.count == lattice.count + k
        out = load_image(report.artifacts["i_out"])
        # output agrees with the ground truth at every scanned pixel (post byte quantization)
        from semscan.raster import quantize

        assert np.array_equal(quantize(out)[total.bits], quantize(hr)[total.bits])

    def test_determinism_across_threads_and_runs(self, hr_file):
        cfg = make_config(hr_file, seed=3)
        r1 = run_acquisition(cfg, threads=1)
        r2 = run_acquisition(cfg, threads=1)
        r4 = run_acquisition(cfg, threads=4)
        for field in ("residual_l1", "psnr", "ssim", "cost_C", "total_scan_rate"):
            assert getattr(r1, field) == getattr(r2, field) == getattr(r4, field)

    def test_external_reconstruction_file(self, hr_file, tmp_path):
        hr = load_image(hr_file)
        sr = upsample(downsample_nearest(hr, 4), 4, "bilinear")
        sr_path = tmp_path / "sr.pgm"
        save_image(sr, sr_path)
        cfg = make_config(hr_file, reconstruction=str(sr_path), seed=2)
        report = run_acquisition(cfg)
        native = run_acquisition(make_config(hr_file, reconstruction="bilinear", seed=2))
        # the stored reconstruction is byte-quantized, so allow quantization slack
        assert report.residual_l1 == pytest.approx(native.residual_l1, abs=1e-2)

    def test_external_reconstruction_dims_must_match(self, hr_file, tmp_path):
        bad = tmp_path / "bad_sr.pgm"
        save_image(Image(np.zeros((8, 8))), bad)
        with pytest.raises(ValidationError, match="shape"):
            run_acquisition(make_config(hr_file, reconstruction=str(bad)))

    def test_external_estimator_map(self, hr_file, tmp_path):
        hr = load_image(hr_file)
        sr = upsample(downsample_nearest(hr, 4), 4, "bicubic")
        est = np.minimum(np.abs(hr.data - sr.data), 1.0)
        emap_path = tmp_path / "est.emap"
        write_emap(ErrorMap(est), emap_path)
        report = run_acquisition(make_config(hr_file, estimator=str(emap_path)))
        assert report.residual_l1 < run_acquisition(
            make_config(hr_file, total_scan_rate=1 / 16)
        ).residual_l1

    def test_external_estimator_dims_checked(self, hr_file, tmp_path):
        emap_path = tmp_path / "small.emap"
        write_emap(ErrorMap(np.zeros((4, 4))), emap_path)
        with pytest.raises(ValidationError, match="shape"):
            run_acquisition(make_config(hr_file, estimator=str(emap_path)))

    def test_gradient_estimator_runs(self, hr_file):
        report = run_acquisition(make_config(hr_file, estimator="gradient"))
        assert report.rescan_rate > 0

    def test_artifacts_written(self, hr_file, tmp_path):
        from pathlib import Path

        out_dir = tmp_path / "artifacts"
        report = run_acquisition(make_config(hr_file), out_dir=out_dir)
        for name in ("i_out", "total_scan", "report", "summary"):
            assert Path(report.artifacts[name]).exists()
        header, row = (out_dir / "report.csv").read_text().splitlines()
        assert header.startswith("initial_scan_rate,")
        assert "wall_clock" not in header
        assert "wall_clock_s" in (out_dir / "summary.txt").read_text()


class TestRoiTask:
    def _roi_pair(self, tmp_path, hr):
        # membrane-ish ROI maps: dark pixels count as interesting
        sr = upsample(downsample_nearest(hr, 4), 4, "bicubic")
        roi_hr = ProbabilityMap((hr.data < 0.2).astype(float))
        roi_sr = ProbabilityMap((sr.data < 0.2).astype(float))
        p_hr, p_sr = tmp_path / "roi_hr.emap", tmp_path / "roi_sr.emap"
        write_emap(roi_hr, p_hr)
        write_emap(roi_sr, p_sr)
        return str(p_hr), str(p_sr), roi_hr, roi_sr

    def test_oracle_uses_roi_residual(self, hr_file, tmp_path):
        hr = load_image(hr_file)
        p_hr, p_sr, roi_hr, roi_sr = self._roi_pair(tmp_path, hr)
        cfg = make_config(hr_file, roi=(p_hr, p_sr))
        sr = upsample(downsample_nearest(hr, 4), 4, "bicubic")
        est = _estimate(cfg, hr, sr)
        assert np.array_equal(est.data, np.abs(roi_hr.data - roi_sr.data))

    def test_entropy_estimator(self, hr_file, tmp_path):
        hr = load_image(hr_file)
        p_hr, p_sr, _, roi_sr = self._roi_pair(tmp_path, hr)
        report = run_acquisition(
            make_config(hr_file, estimator="entropy", roi=(p_hr, p_sr))
        )
        assert report.total_scan_rate == pytest.approx(0.10, abs=1e-3)

    def test_roi_dims_checked(self, hr_file, tmp_path):
        small = tmp_path / "small.emap"
        write_emap(ProbabilityMap(np.zeros((4, 4))), small)
        cfg = make_config(hr_file, roi=(str(small), str(small)))
        with pytest.raises(ValidationError, match="roi maps"):
            run_acquisition(cfg)

    def test_evaluate_roi(self, tmp_path):
        a = ProbabilityMap(np.full((6, 6), 0.5))
        b = ProbabilityMap(np.full((6, 6), 0.25))
        pa, pb = tmp_path / "a.emap", tmp_path / "b.emap"
        write_emap(a, pa)
        write_emap(b, pb)
        assert evaluate_roi(pa, pb)["residual_l1"] == pytest.approx(0.25)


class TestSweep:
    def test_paper_factors_give_five_rows(self, hr_file, tmp_path):
        cfg = make_config(hr_file, sampler="topk")
        reports = sweep_speedup(cfg, [3, 5, 7, 10, 13], out_dir=tmp_path)
        assert len(reports) == 5
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert len(lines) == 6
        assert lines[0].startswith("factor,")

    def test_infeasible_factor(self, hr_file):
        with pytest.raises(ValidationError, match="infeasible"):
            sweep_speedup(make_config(hr_file), [17])
        with pytest.raises(ValidationError, match="infeasible"):
            sweep_speedup(make_config(hr_file), [0.5])

    def test_topk_oracle_residual_monotone(self, hr_file):
        cfg = make_config(hr_file, sampler="topk", estimator="oracle")
        reports = sweep_speedup(cfg, [12, 8, 4, 2])
        residuals = [r.residual_l1 for r in reports]
        assert all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))

    def test_threaded_sweep_matches_serial(self, hr_file, tmp_path):
        cfg = make_config(hr_file)
        serial = sweep_speedup(cfg, [4, 8])
        threaded = sweep_speedup(cfg, [4, 8], threads=2)
        for a, b in zip(serial, threaded):
            assert a.residual_l1 == b.residual_l1
