"""End-to-end pipeline, corpus evaluation, and parameter sweeps."""

import dataclasses
import json

import numpy as np
import pytest

import vocsep.rpca as rpca_mod
from vocsep.audio import AudioSignal
from vocsep.pipeline import (
    DumpOptions,
    GridAxis,
    GridSearchSpec,
    PipelineConfig,
    _apply_axes,
    align_contour,
    estimate_f0,
    evaluate,
    grid_search,
    load_corpus,
    report_failures,
    run,
    write_grid_csv,
    write_report_csv,
)
from vocsep.synth import make_clip, write_demo_corpus
from vocsep.tracking import voiced_contour


@pytest.fixture(scope="module")
def tiny_clip():
    return make_clip(duration_seconds=1.2, sample_rate=16000, seed=11)


@pytest.fixture(scope="module")
def tiny_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny_corpus")
    return write_demo_corpus(root, n_clips=1, duration_seconds=1.5)


@pytest.fixture(scope="module")
def demo_report(demo_corpus):
    entries = load_corpus(demo_corpus)
    return evaluate(entries, PipelineConfig())


class TestPipelineConfig:
    def test_geometry_for_16k(self):
        cfg = PipelineConfig.for_sample_rate(16000)
        assert (cfg.window_size, cfg.hop_size) == (2048, 160)
        assert cfg.n_partials == 10
        assert cfg.w == 50.0

    def test_geometry_for_44k(self):
        cfg = PipelineConfig.for_sample_rate(44100)
        assert (cfg.window_size, cfg.hop_size) == (4096, 441)
        assert cfg.n_partials == 20
        assert cfg.w == 70.0

    def test_geometry_boundary(self):
        assert PipelineConfig.for_sample_rate(32000).window_size == 2048
        assert PipelineConfig.for_sample_rate(32001).window_size == 4096

    def test_shared_defaults(self):
        for sr in (16000, 44100):
            cfg = PipelineConfig.for_sample_rate(sr)
            assert cfg.lambda_sep == 0.8
            assert cfg.lambda_f0 == 0.8
            assert cfg.alpha == 0.6

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError):
            PipelineConfig.for_sample_rate(0)

    def test_with_overrides(self):
        cfg = PipelineConfig().with_overrides({"alpha": 1.2, "gamma": 0.5})
        assert cfg.alpha == 1.2
        assert cfg.gamma == 0.5

    def test_unknown_override_rejected(self):
        with pytest.raises(ValueError, match="unknown config fields"):
            PipelineConfig().with_overrides({"lambda": 0.9})

    def test_mask_mode_validated(self):
        with pytest.raises(ValueError):
            PipelineConfig(mask_mode="hard")

    def test_lambda_positivity_validated(self):
        with pytest.raises(ValueError):
            PipelineConfig(lambda_sep=0.0)
        with pytest.raises(ValueError):
            PipelineConfig(lambda_f0=-0.1)

    def test_from_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"alpha": 1.4, "mask_mode": "binary"}))
        cfg = PipelineConfig.from_json(path)
        assert cfg.alpha == 1.4
        assert cfg.mask_mode == "binary"
        assert cfg.window_size == 2048

    def test_from_json_with_sample_rate(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"alpha": 0.2}))
        cfg = PipelineConfig.from_json(path, sample_rate=44100)
        assert cfg.window_size == 4096
        assert cfg.alpha == 0.2

    def test_from_json_rejects_non_object(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("[1, 2]")
        with pytest.raises(ValueError):
            PipelineConfig.from_json(path)

    def test_to_dict_round_trips(self):
        cfg = PipelineConfig(alpha=0.9)
        rebuilt = PipelineConfig().with_overrides(cfg.to_dict())
        assert rebuilt == cfg


class TestAlignContour:
    def test_downsample_by_two(self):
        contour = voiced_contour(np.linspace(100, 199, 100), 0.01)
        aligned = align_contour(contour, 50, 0.02)
        np.testing.assert_array_equal(aligned.f0_hz, contour.f0_hz[::2])
        assert aligned.hop_seconds == 0.02

    def test_extends_past_the_end(self):
        contour = voiced_contour([100.0, 110.0], 0.01)
        aligned = align_contour(contour, 5, 0.01)
        np.testing.assert_array_equal(
            aligned.f0_hz, [100.0, 110.0, 110.0, 110.0, 110.0]
        )

    def test_preserves_voicing(self):
        contour = voiced_contour([100.0, 0.0, 120.0, 0.0], 0.01)
        aligned = align_contour(contour, 4, 0.01)
        np.testing.assert_array_equal(aligned.voiced, contour.voiced)


class TestRun:
    def test_equal_lambdas_run_one_decomposition(self, tiny_clip, monkeypatch):
        calls = []
        original = rpca_mod.decompose

        def counting(x, cfg=rpca_mod.RpcaConfig()):
            calls.append(cfg.lam)
            return original(x, cfg)

        monkeypatch.setattr(rpca_mod, "decompose", counting)
        run(tiny_clip.mixture, PipelineConfig())
        assert len(calls) == 1

    def test_different_lambdas_run_two(self, tiny_clip, monkeypatch):
        calls = []
        original = rpca_mod.decompose

        def counting(x, cfg=rpca_mod.RpcaConfig()):
            calls.append(cfg.lam)
            return original(x, cfg)

        monkeypatch.setattr(rpca_mod, "decompose", counting)
        run(tiny_clip.mixture, PipelineConfig(lambda_sep=1.0, lambda_f0=0.8))
        assert sorted(calls) == [0.8, 1.0]

    def test_shared_decomposition_changes_nothing(self, tiny_clip, monkeypatch):
        calls = []
        original = rpca_mod.decompose

        def counting(x, cfg=rpca_mod.RpcaConfig()):
            calls.append(cfg.lam)
            return original(x, cfg)

        monkeypatch.setattr(rpca_mod, "decompose", counting)
        cfg = PipelineConfig()
        shared, _ = run(tiny_clip.mixture, cfg)
        forced, _ = run(tiny_clip.mixture, cfg, _force_two_pass=True)
        assert len(calls) == 3
        np.testing.assert_array_equal(
            shared.vocal_spec.values, forced.vocal_spec.values
        )
        np.testing.assert_array_equal(shared.vocal.samples, forced.vocal.samples)

    def test_ground_truth_skips_estimation_pass(self, tiny_clip, monkeypatch):
        calls = []
        original = rpca_mod.decompose

        def counting(x, cfg=rpca_mod.RpcaConfig()):
            calls.append(cfg.lam)
            return original(x, cfg)

        monkeypatch.setattr(rpca_mod, "decompose", counting)
        sep, contour = run(
            tiny_clip.mixture, PipelineConfig(), ground_truth_f0=tiny_clip.truth
        )
        assert len(calls) == 1
        assert contour is tiny_clip.truth
        assert sep.vocal.samples.size == tiny_clip.mixture.samples.size

    def test_ground_truth_frame_mismatch_rejected(self, tiny_clip):
        short = voiced_contour([200.0, 210.0], 0.01)
        with pytest.raises(ValueError, match="align"):
            run(tiny_clip.mixture, PipelineConfig(), ground_truth_f0=short)

    def test_silent_input_gives_silence_and_no_voicing(self):
        silent = AudioSignal(np.zeros(16000), 16000)
        sep, contour = run(silent, PipelineConfig())
        assert np.all(sep.vocal.samples == 0)
        assert np.all(sep.accompaniment.samples == 0)
        assert not np.any(contour.voiced)

    def test_leading_silence_comes_back_unvoiced(self, tiny_clip):
        sr = tiny_clip.mixture.sample_rate
        padded = np.concatenate([np.zeros(sr // 2), tiny_clip.mixture.samples])
        sep, contour = run(AudioSignal(padded, sr), PipelineConfig())
        # frames fully inside the silent half second (avoiding edges
        # blurred by the centered analysis window)
        assert not np.any(contour.voiced[8:40])
        assert np.mean(contour.voiced[60:]) > 0.5

    def test_binary_mask_mode_splits_cells_whole(self, tiny_clip):
        sep, _ = run(tiny_clip.mixture, PipelineConfig(mask_mode="binary"))
        v = sep.vocal_spec.values
        a = sep.accomp_spec.values
        assert np.all((v == 0) | (a == 0))

    def test_deterministic(self, tiny_clip):
        cfg = PipelineConfig()
        sep_a, contour_a = run(tiny_clip.mixture, cfg)
        sep_b, contour_b = run(tiny_clip.mixture, cfg)
        np.testing.assert_array_equal(sep_a.vocal.samples, sep_b.vocal.samples)
        np.testing.assert_array_equal(contour_a.f0_hz, contour_b.f0_hz)

    def test_dump_artifacts_written(self, tiny_clip, tmp_path):
        dump = DumpOptions(
            masks_dir=str(tmp_path / "masks"),
            saliency_path=str(tmp_path / "saliency.csv"),
            rpca_trace_path=str(tmp_path / "trace.csv"),
        )
        run(tiny_clip.mixture, PipelineConfig(), dump=dump)
        assert (tmp_path / "masks" / "wiener.pgm").exists()
        assert (tmp_path / "masks" / "harmonic.pgm").exists()
        assert (tmp_path / "masks" / "integrated.csv").exists()
        assert (tmp_path / "masks" / "binary_rpca.pgm").exists()
        assert (tmp_path / "saliency.csv").exists()
        assert (tmp_path / "trace.csv").exists()

    def test_estimate_f0_alone(self, tiny_clip):
        contour = estimate_f0(tiny_clip.mixture, PipelineConfig())
        n = tiny_clip.mixture.samples.size
        assert contour.n_frames == 1 + n // 160
        assert contour.hop_seconds == pytest.approx(0.01)


class TestLoadCorpus:
    def test_reads_manifest(self, demo_corpus):
        entries = load_corpus(demo_corpus)
        assert len(entries) == 2
        assert entries[0].clip_id == "clip00"

    def test_rejects_non_list(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{}")
        with pytest.raises(ValueError):
            load_corpus(path)

    def test_rejects_empty_list(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("[]")
        with pytest.raises(ValueError):
            load_corpus(path)

    def test_rejects_missing_keys(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps([{"id": "x", "mixture_path": "x.wav"}]))
        with pytest.raises(ValueError, match="bad manifest row"):
            load_corpus(path)


class TestEvaluate:
    def test_report_structure(self, demo_report):
        assert demo_report["n_clips"] == 2
        assert demo_report["n_failed"] == 0
        assert len(demo_report["clips"]) == 2
        for clip in demo_report["clips"]:
            for source in ("vocal", "accompaniment"):
                for key in ("sdr", "sir", "sar", "nsdr"):
                    assert np.isfinite(clip[source][key])
            assert 0.0 <= clip["raw_pitch_accuracy"] <= 1.0
        for source in ("vocal", "accompaniment"):
            assert set(demo_report[source]) == {"gnsdr", "gsir", "gsar"}
        assert demo_report["config"]["window_size"] == 2048

    def test_aggregate_matches_by_hand(self, demo_report):
        clips = demo_report["clips"]
        lengths = [c["length_seconds"] for c in clips]
        expected = sum(c["vocal"]["nsdr"] * l for c, l in zip(clips, lengths)) / sum(lengths)
        assert demo_report["vocal"]["gnsdr"] == pytest.approx(expected)

    def test_snr_list_makes_sections(self, tiny_corpus):
        entries = load_corpus(tiny_corpus)
        report = evaluate(entries, PipelineConfig(), snr_list=[-5.0, 0.0, 5.0])
        assert [s["snr_db"] for s in report["sections"]] == [-5.0, 0.0, 5.0]
        for section in report["sections"]:
            assert section["n_clips"] == 1
        assert report_failures(report) == 0

    def test_clip_failure_is_isolated(self, demo_corpus, tmp_path):
        entries = load_corpus(demo_corpus)
        broken = dataclasses.replace(
            entries[0], mixture_path=str(tmp_path / "missing.wav")
        )
        report = evaluate([broken, entries[1]], PipelineConfig())
        assert report["n_failed"] == 1
        assert report_failures(report) == 1
        failed, scored = report["clips"]
        assert "error" in failed
        assert "vocal" in scored

    def test_ground_truth_path_scores_perfect_pitch(self, tiny_corpus):
        entries = load_corpus(tiny_corpus)
        report = evaluate(entries, PipelineConfig(), use_ground_truth_f0=True)
        assert report["raw_pitch_accuracy_mean"] == 1.0

    def test_worker_pool_matches_serial(self, tiny_corpus):
        entries = load_corpus(tiny_corpus)
        serial = evaluate(entries, PipelineConfig())
        parallel = evaluate(entries, PipelineConfig(), workers=2)
        assert serial["clips"] == parallel["clips"]

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            evaluate([], PipelineConfig())


class TestGridAxis:
    def test_lambda_range_has_seven_values(self):
        values = GridAxis("lambda", 0.6, 1.2, 0.1).values()
        np.testing.assert_allclose(values, [0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2])

    def test_width_range_has_eight_values(self):
        assert GridAxis("w", 20.0, 90.0, 10.0).values() == [
            20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0,
        ]

    def test_alpha_range_has_eleven_values(self):
        values = GridAxis("alpha", 0.0, 2.0, 0.2).values()
        assert len(values) == 11
        np.testing.assert_allclose(values, np.arange(11) * 0.2)

    def test_short_lambda_range_has_six_values(self):
        assert len(GridAxis("lambda", 0.6, 1.1, 0.1).values()) == 6

    def test_single_point(self):
        assert GridAxis("alpha", 0.6, 0.6, 0.1).values() == [0.6]

    def test_validation(self):
        with pytest.raises(ValueError):
            GridAxis("alpha", 0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            GridAxis("alpha", 1.0, 0.0, 0.1)


class TestGridSearch:
    def test_spec_validation(self):
        with pytest.raises(ValueError):
            GridSearchSpec(axes=())
        with pytest.raises(ValueError):
            GridSearchSpec(axes=(GridAxis("alpha", 0, 1, 1),), objective="sdr")

    def test_lambda_axis_sets_both_weights(self):
        cfg = _apply_axes(PipelineConfig(), ["lambda"], [0.9])
        assert cfg.lambda_sep == 0.9
        assert cfg.lambda_f0 == 0.9

    def test_n_partials_axis_casts_to_int(self):
        cfg = _apply_axes(PipelineConfig(), ["n_partials"], [12.0])
        assert cfg.n_partials == 12
        assert isinstance(cfg.n_partials, int)

    def test_single_cell_matches_direct_evaluate(self, tiny_corpus):
        entries = load_corpus(tiny_corpus)
        spec = GridSearchSpec(
            axes=(GridAxis("lambda", 0.8, 0.8, 0.1),), objective="rpa"
        )
        cells = grid_search(entries, spec, PipelineConfig())
        direct = evaluate(entries, PipelineConfig())
        assert len(cells) == 1
        assert cells[0]["lambda"] == 0.8
        assert cells[0]["value"] == pytest.approx(direct["raw_pitch_accuracy_mean"])
        assert cells[0]["n_failed"] == 0

    def test_bad_cell_recorded_and_sweep_continues(self, tiny_corpus):
        entries = load_corpus(tiny_corpus)
        spec = GridSearchSpec(
            axes=(GridAxis("lambda", -0.5, 0.8, 1.3),), objective="rpa"
        )
        cells = grid_search(entries, spec, PipelineConfig())
        assert len(cells) == 2
        assert cells[0]["value"] is None
        assert "error" in cells[0]
        assert cells[1]["value"] is not None


class TestCsvWriters:
    def test_grid_csv_orders_best_first(self, tmp_path):
        spec = GridSearchSpec(axes=(GridAxis("lambda", 0.6, 0.8, 0.1),))
        cells = [
            {"lambda": 0.6, "value": 1.0, "n_failed": 0},
            {"lambda": 0.7, "value": 2.5, "n_failed": 0},
            {"lambda": 0.8, "value": None, "n_failed": 2, "error": "boom"},
        ]
        path = tmp_path / "grid.csv"
        write_grid_csv(cells, spec, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0].split(",") == ["lambda", "gnsdr", "n_failed", "error"]
        assert lines[1].startswith("0.7,2.5")
        assert lines[2].startswith("0.6,1.0")
        assert lines[3].startswith("0.8,,2,boom")

    def test_report_csv_flat_rows(self, tmp_path):
        score = {"sdr": 1.0, "sir": 2.0, "sar": 3.0, "nsdr": 0.5}
        report = {
            "clips": [
                {
                    "id": "a",
                    "length_seconds": 2.0,
                    "vocal": dict(score),
                    "accompaniment": dict(score),
                    "raw_pitch_accuracy": 0.9,
                },
                {"id": "b", "error": "ValueError: nope"},
            ],
            "n_clips": 2,
            "n_failed": 1,
        }
        path = tmp_path / "report.csv"
        write_report_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 3
        assert lines[1].split(",")[1] == "a"
        assert lines[2].split(",")[1] == "b"
        assert lines[2].endswith("ValueError: nope")

    def test_report_csv_with_sections(self, tmp_path):
        report = {
            "sections": [
                {"snr_db": -5.0, "clips": [{"id": "a", "error": "x"}]},
                {"snr_db": 5.0, "clips": [{"id": "a", "error": "x"}]},
            ]
        }
        path = tmp_path / "report.csv"
        write_report_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[1].split(",")[0] == "-5.0"
        assert lines[2].split(",")[0] == "5.0"
