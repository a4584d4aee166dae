import numpy as np
import pytest
import torch

from spritesteer.errors import NumericalError, RejectedInputError
from spritesteer.metrics import (
    EvalItem,
    FeatureProbe,
    FeatureStats,
    contact_response_probe,
    embed_clip,
    embed_frames,
    evaluate_videos,
    feature_stats,
    frechet_distance,
    motion_smoothness,
    render_report,
)
from spritesteer.sprite_world import SpriteClass, generate_clip


@pytest.fixture(scope="module")
def probe():
    torch.manual_seed(0)
    return FeatureProbe().eval()


def rand_video(t=9, h=16, w=16, seed=0):
    return np.random.default_rng(seed).uniform(-1, 1, (t, h, w, 3)).astype(np.float32)


class TestFrechet:
    def test_identical_stats_zero(self):
        x = np.random.default_rng(0).normal(size=(200, 8))
        s = feature_stats(x)
        assert frechet_distance(s, s) <= 1e-6

    def test_1d_mean_shift(self):
        a = FeatureStats(mu=np.array([0.0]), sigma=np.array([[1.0]]), count=100)
        b = FeatureStats(mu=np.array([1.0]), sigma=np.array([[1.0]]), count=100)
        assert abs(frechet_distance(a, b) - 1.0) < 1e-6

    def test_1d_variance_gap(self):
        a = FeatureStats(mu=np.array([0.0]), sigma=np.array([[1.0]]), count=100)
        b = FeatureStats(mu=np.array([0.0]), sigma=np.array([[4.0]]), count=100)
        # 1 + 4 - 2*sqrt(4) = 1
        assert abs(frechet_distance(a, b) - 1.0) < 1e-6

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a = feature_stats(rng.normal(size=(300, 6)))
        b = feature_stats(rng.normal(size=(300, 6)) * 1.5 + 0.3)
        assert abs(frechet_distance(a, b) - frechet_distance(b, a)) < 1e-8

    def test_nonnegative(self):
        rng = np.random.default_rng(4)
        for i in range(5):
            a = feature_stats(rng.normal(size=(50, 4)))
            b = feature_stats(rng.normal(size=(50, 4)))
            assert frechet_distance(a, b) >= 0.0

    def test_non_psd_rejected(self):
        bad = FeatureStats(mu=np.zeros(2),
                           sigma=np.array([[1.0, 0.0], [0.0, -0.5]]), count=10)
        good = FeatureStats(mu=np.zeros(2), sigma=np.eye(2), count=10)
        with pytest.raises(NumericalError):
            frechet_distance(bad, good)

    def test_low_count_warns(self):
        with pytest.warns(UserWarning):
            feature_stats(np.random.default_rng(0).normal(size=(3, 8)))


class TestProbeEmbedding:
    def test_deterministic(self, probe):
        v = rand_video()
        assert np.array_equal(embed_frames(probe, v), embed_frames(probe, v))
        assert np.array_equal(embed_clip(probe, v), embed_clip(probe, v))

    def test_feature_dims(self, probe):
        for t in (5, 9, 17):
            v = rand_video(t=t)
            assert embed_frames(probe, v).shape == (t, 64)
            assert embed_clip(probe, v).shape == (64,)

    def test_temporal_sensitivity_of_clip_path(self, probe):
        v = generate_clip(SpriteClass.CREATURE, 3, 17, 16, 16).target
        shuffled = v[np.random.default_rng(0).permutation(len(v))]
        a = embed_clip(probe, v)
        b = embed_clip(probe, shuffled)
        assert np.linalg.norm(a - b) > 0


class TestMotionSmoothness:
    def test_static_video_is_one(self):
        v = np.zeros((9, 8, 8, 3), dtype=np.float32) + 0.3
        assert motion_smoothness(v) == 1.0

    def test_constant_velocity_near_one(self):
        # translating linear ramp: temporal second difference is exactly the
        # spatial second difference of a linear function, i.e. zero
        t, h, w = 10, 16, 16
        xs = np.arange(w, dtype=np.float64)[None, :].repeat(h, axis=0)
        v = np.stack([(0.02 * (xs + 1.7 * i) - 0.5)[..., None].repeat(3, axis=2)
                      for i in range(t)]).astype(np.float32)
        assert motion_smoothness(v) >= 0.99

    def test_white_noise_near_floor(self):
        v = rand_video(t=17, h=16, w=16, seed=5)
        assert motion_smoothness(v) <= 0.2

    def test_brightness_shift_invariance(self):
        v = generate_clip(SpriteClass.DEFORMABLE, 2, 17, 16, 16).target
        shifted = v.astype(np.float64) + 0.073
        assert abs(motion_smoothness(v) - motion_smoothness(shifted)) < 1e-12

    def test_too_short_rejected(self):
        with pytest.raises(RejectedInputError):
            motion_smoothness(rand_video(t=2))


class TestContactResponse:
    def test_ground_truth_deformable_responds(self):
        clip = generate_clip(SpriteClass.DEFORMABLE, 7, 33, 64, 64)
        r = contact_response_probe(clip.target, clip.meta)
        assert not r.skipped
        assert r.response_ratio > 5

    def test_static_video_ratio_one(self):
        clip = generate_clip(SpriteClass.DEFORMABLE, 7, 33, 64, 64)
        static = np.repeat(clip.target[:1], clip.meta.T, axis=0)
        r = contact_response_probe(static, clip.meta)
        assert r.pre_contact_motion == 0.0 and r.post_contact_motion == 0.0
        assert r.response_ratio == pytest.approx(1.0)

    def test_control_video_low_energy(self):
        clip = generate_clip(SpriteClass.DEFORMABLE, 7, 33, 64, 64)
        r = contact_response_probe(clip.control, clip.meta)
        assert r.pre_contact_motion < 0.02 and r.post_contact_motion < 0.02

    def test_no_contacts_skipped(self):
        clip = generate_clip(SpriteClass.CREATURE, 3, 17, 32, 32)
        meta = type(clip.meta)(**{**clip.meta.__dict__, "contact_events": []})
        r = contact_response_probe(clip.target, meta)
        assert r.skipped and np.isnan(r.response_ratio)


class TestEvaluateVideos:
    def test_self_evaluation_zero_and_row_layout(self, probe):
        clips = [generate_clip(cls, s, 9, 16, 16)
                 for cls in SpriteClass for s in (1, 2, 3, 4)]
        items = [EvalItem(video=c.target, meta=c.meta) for c in clips]
        with pytest.warns(UserWarning):
            report = evaluate_videos(probe, items, items)
        assert [r["row"] for r in report["rows"]] == [
            "deformable", "articulated", "creature", "overall"]
        for row in report["rows"]:
            assert row["toy_fid"] <= 1e-6
            assert row["toy_fvd"] <= 1e-6
        text = render_report({**report, "fps": 10.0, "first_block_latency_ms": 5.0})
        assert "overall" in text and "toy_FVD" in text

    def test_empty_split_rejected(self, probe):
        with pytest.raises(RejectedInputError):
            evaluate_videos(probe, [], [])
