import numpy as np
import pytest
import torch

from spritesteer.codec import CausalVideoCodec, CodecConfig, TinyFrameCodec
from spritesteer.constants import latent_frames
from spritesteer.errors import ProtocolError, RejectedInputError


@pytest.fixture(scope="module")
def codec():
    torch.manual_seed(0)
    return CausalVideoCodec(CodecConfig(channels=(8, 12, 16))).eval()


@pytest.fixture(scope="module")
def tiny():
    torch.manual_seed(1)
    return TinyFrameCodec(CodecConfig(channels=(8, 12, 16))).eval()


def rand_video(t, h, w, seed=0):
    return np.random.default_rng(seed).uniform(-1, 1, (t, h, w, 3)).astype(np.float32)


class TestShapes:
    def test_latent_shape_t33(self, codec):
        z = codec.encode(rand_video(33, 64, 64))
        assert z.shape == (9, 8, 8, 8)

    def test_decode_shape(self, codec):
        video = codec.decode(np.zeros((9, 8, 4, 4), dtype=np.float32))
        assert video.shape == (33, 32, 32, 3)
        assert video.min() >= -1.0 and video.max() <= 1.0

    def test_latent_frame_formula(self):
        for m in (1, 2, 5, 8):
            assert latent_frames(1 + 4 * m) == 1 + m

    def test_encode_rejects_bad_t(self, codec):
        with pytest.raises(RejectedInputError):
            codec.encode(rand_video(32, 64, 64))

    def test_decode_rejects_bad_channels(self, codec):
        with pytest.raises(RejectedInputError):
            codec.decode(np.zeros((9, 4, 8, 8), dtype=np.float32))

    def test_encode_deterministic(self, codec):
        v = np.zeros((9, 32, 32, 3), dtype=np.float32)
        assert np.array_equal(codec.encode(v), codec.encode(v))


class TestCausality:
    def test_encoder_temporal_causality_exact(self, codec):
        base = rand_video(17, 32, 32, seed=3)
        z_base = codec.encode(base)
        for block in (1, 2, 3, 4):
            mod = base.copy()
            mod[1 + 4 * (block - 1):] = np.float32(0.123)  # perturb block j onward
            z_mod = codec.encode(mod)
            assert np.array_equal(z_base[:block], z_mod[:block]), f"block {block}"

    def test_decoder_temporal_causality_exact(self, codec):
        z = np.random.default_rng(5).normal(size=(5, 8, 4, 4)).astype(np.float32)
        v_base = codec.decode(z)
        z_mod = z.copy()
        z_mod[3:] = 0.5
        v_mod = codec.decode(z_mod)
        # latent frames < 3 decode to raw frames < 1 + 4*2
        assert np.array_equal(v_base[:9], v_mod[:9])


class TestStreaming:
    def test_encode_streaming_matches_batch(self, codec):
        video = rand_video(17, 32, 32, seed=7)
        whole = codec.encode(video)
        state = codec.init_encode_stream()
        parts = [codec.encode_streaming(state, video[:1])]
        for b in range(4):
            parts.append(codec.encode_streaming(state, video[1 + 4 * b:5 + 4 * b]))
        stacked = np.concatenate(parts, axis=0)
        assert stacked.shape == whole.shape
        assert np.abs(stacked - whole).max() <= 1e-5

    def test_decode_streaming_matches_batch(self, codec):
        z = np.random.default_rng(9).normal(size=(5, 8, 4, 4)).astype(np.float32) * 0.5
        whole = codec.decode(z)
        state = codec.init_decode_stream()
        parts = [codec.decode_streaming(state, z[i], frame_index=i) for i in range(5)]
        assert parts[0].shape[0] == 1
        assert all(p.shape[0] == 4 for p in parts[1:])
        stacked = np.concatenate(parts, axis=0)
        assert np.abs(stacked - whole).max() <= 1e-5

    def test_bootstrap_emits_one_latent(self, codec):
        state = codec.init_encode_stream()
        out = codec.encode_streaming(state, rand_video(17, 32, 32)[:1])
        assert out.shape[0] == 1

    def test_wrong_block_size_rejected(self, codec):
        state = codec.init_encode_stream()
        codec.encode_streaming(state, rand_video(17, 32, 32)[:1])
        with pytest.raises(ProtocolError):
            codec.encode_streaming(state, rand_video(17, 32, 32)[:3])

    def test_bootstrap_wrong_size_rejected(self, codec):
        state = codec.init_encode_stream()
        with pytest.raises(ProtocolError):
            codec.encode_streaming(state, rand_video(17, 32, 32)[:4])

    def test_decode_out_of_order_rejected(self, codec):
        z = np.zeros((5, 8, 4, 4), dtype=np.float32)
        state = codec.init_decode_stream()
        codec.decode_streaming(state, z[0], frame_index=0)
        codec.decode_streaming(state, z[1], frame_index=1)
        with pytest.raises(ProtocolError):
            codec.decode_streaming(state, z[0], frame_index=0)


class TestTinyCodec:
    def test_group_shapes(self, tiny):
        z = tiny.encode(rand_video(33, 32, 32))
        assert z.shape == (9, 8, 4, 4)

    def test_per_frame_permutation_property(self, tiny):
        frames = torch.randn(6, 3, 16, 16)
        perm = torch.tensor([3, 1, 5, 0, 2, 4])
        out = tiny.encode_frames(frames)
        out_perm = tiny.encode_frames(frames[perm])
        assert torch.allclose(out[perm], out_perm, atol=1e-6)

    def test_round_trip_shape(self, tiny):
        v = rand_video(9, 16, 16)
        recon = tiny.decode(tiny.encode(v))
        assert recon.shape == v.shape

    def test_streaming_equivalence_by_construction(self, tiny):
        # per-frame codec: encoding block-by-block equals whole-video encoding
        v = rand_video(9, 16, 16, seed=11)
        whole = tiny.encode(v)
        parts = [tiny.encode(np.concatenate([v[:1]] * 5, axis=0))[:1]]
        # bootstrap latent equals whole[0]
        assert np.abs(parts[0][0] - whole[0]).max() <= 1e-5
