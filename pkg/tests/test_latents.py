import math

import pytest
import torch

from ganstudio import (DomainError, SigmaGaussian, StyleCoeffs, expand_to_stack,
                       fit_sigma_gaussian, gaussian_prior_loss, pose_align,
                       smooth_latents)

from conftest import seeded_stack


def random_seq(n, dim, seed):
    g = torch.Generator().manual_seed(seed)
    return [torch.randn(dim, generator=g) for _ in range(n)]


class TestSmoothing:
    def test_constant_sequence_fixed_point(self):
        seq = [torch.full((8,), 3.25)] * 6
        out = smooth_latents(seq, 1.5)
        for v in out:
            assert torch.equal(v, seq[0])

    def test_tiny_sigma_is_identity(self):
        seq = random_seq(5, 8, 0)
        out = smooth_latents(seq, 5e-4)
        for a, b in zip(out, seq):
            assert torch.equal(a, b)

    def test_non_positive_sigma_rejected(self):
        with pytest.raises(DomainError):
            smooth_latents(random_seq(3, 4, 1), 0.0)
        with pytest.raises(DomainError):
            smooth_latents(random_seq(3, 4, 1), -1.0)

    def test_empty_sequence_rejected(self):
        with pytest.raises(DomainError):
            smooth_latents([], 1.0)

    def test_adjacent_difference_energy_contracts(self):
        for seed in range(20):
            seq = random_seq(7, 16, seed)
            out = smooth_latents(seq, 1.0)
            before = sum(float(((a - b) ** 2).sum()) for a, b in zip(seq[1:], seq[:-1]))
            after = sum(float(((a - b) ** 2).sum()) for a, b in zip(out[1:], out[:-1]))
            assert after <= before + 1e-6

    def test_linearity(self):
        s1, s2 = random_seq(6, 8, 10), random_seq(6, 8, 11)
        a, b = 0.7, -1.3
        combo = [a * u + b * v for u, v in zip(s1, s2)]
        lhs = smooth_latents(combo, 2.0)
        r1, r2 = smooth_latents(s1, 2.0), smooth_latents(s2, 2.0)
        for x, u, v in zip(lhs, r1, r2):
            assert torch.allclose(x, a * u + b * v, atol=1e-6)

    def test_single_element_sequence(self):
        seq = [torch.ones(4)]
        out = smooth_latents(seq, 2.0)
        assert torch.allclose(out[0], seq[0], atol=1e-6)


class TestSigmaGaussian:
    def test_zero_affine_mean_is_bias(self, desk_gen):
        gen = desk_gen.clone()
        with torch.no_grad():
            gen.affines[3].weight.zero_()
        g = fit_sigma_gaussian(gen, n_samples=32, seed=0)
        assert torch.allclose(g.mean[3], gen.affines[3].bias.detach(), atol=1e-7)
        # degenerate dims hit the variance floor
        assert torch.equal(g.variance[3], torch.full_like(g.variance[3], 1e-6))

    def test_moments_match_two_pass_oracle(self, desk_gen):
        n, seed = 64, 5
        g = fit_sigma_gaussian(desk_gen, n_samples=n, seed=seed)
        rng = torch.Generator().manual_seed(seed)
        z = torch.randn(n, desk_gen.config.latent_dim, generator=rng)
        with torch.no_grad():
            w = desk_gen.map_latent(z, 1.0)
            for i in range(desk_gen.config.num_layers):
                sig = desk_gen.affines[i](w)
                mean = sig.sum(dim=0) / n
                var = ((sig - mean) ** 2).sum(dim=0) / n
                assert torch.allclose(g.mean[i], mean, atol=1e-6)
                assert torch.allclose(g.variance[i], var.clamp_min(1e-6), atol=1e-6)

    def test_sample_count_validation(self, desk_gen):
        with pytest.raises(DomainError):
            fit_sigma_gaussian(desk_gen, n_samples=1)

    def test_checkpoint_aux_round_trip(self, desk_gen, tmp_path):
        from ganstudio import load_checkpoint, save_checkpoint
        g = fit_sigma_gaussian(desk_gen, n_samples=16, seed=2)
        path = tmp_path / "with_aux.ckpt"
        save_checkpoint(desk_gen, path, aux=g.to_arrays())
        _, aux = load_checkpoint(path, with_aux=True)
        back = SigmaGaussian.from_arrays(aux)
        for a, b in zip(back.mean, g.mean):
            assert torch.equal(a, b)
        assert back.sample_count == g.sample_count


class TestPriorLoss:
    def test_zero_at_mean(self, desk_gen):
        g = fit_sigma_gaussian(desk_gen, n_samples=16, seed=1)
        assert float(gaussian_prior_loss(g.mean_coeffs(), g)) == 0.0

    def test_unit_at_one_sigma(self, desk_gen):
        g = fit_sigma_gaussian(desk_gen, n_samples=16, seed=1)
        shifted = StyleCoeffs(tuple(m + v.sqrt() for m, v in zip(g.mean, g.variance)))
        assert abs(float(gaussian_prior_loss(shifted, g)) - 1.0) < 1e-5

    def test_matches_scalar_loop_oracle(self, desk_gen):
        g = fit_sigma_gaussian(desk_gen, n_samples=16, seed=1)
        rng = torch.Generator().manual_seed(9)
        sigma = StyleCoeffs(tuple(m + torch.randn(m.shape, generator=rng) for m in g.mean))
        total, count = 0.0, 0
        for v, m, var in zip(sigma.per_layer, g.mean, g.variance):
            for j in range(v.shape[0]):
                total += (float(v[j]) - float(m[j])) ** 2 / float(var[j])
                count += 1
        assert math.isclose(float(gaussian_prior_loss(sigma, g)), total / count, rel_tol=1e-5)

    def test_shape_mismatch_rejected(self, desk_gen, tiny_gen):
        g = fit_sigma_gaussian(desk_gen, n_samples=8, seed=0)
        bad = fit_sigma_gaussian(tiny_gen, n_samples=8, seed=0).mean_coeffs()
        with pytest.raises(DomainError):
            gaussian_prior_loss(bad, g)

    def test_minimized_uniquely_at_mean(self, desk_gen):
        g = fit_sigma_gaussian(desk_gen, n_samples=16, seed=1)
        rng = torch.Generator().manual_seed(4)
        for _ in range(5):
            perturbed = StyleCoeffs(tuple(m + 1e-2 * torch.randn(m.shape, generator=rng)
                                          for m in g.mean))
            assert float(gaussian_prior_loss(perturbed, g)) > 0.0


class TestPoseAlign:
    def test_k_zero_returns_src(self, desk_gen):
        src, ref = seeded_stack(desk_gen, 1), seeded_stack(desk_gen, 2)
        out = pose_align(src, ref, 0)
        assert torch.equal(out.rows, src.rows)

    def test_k_full_returns_ref(self, desk_gen):
        src, ref = seeded_stack(desk_gen, 1), seeded_stack(desk_gen, 2)
        out = pose_align(src, ref, src.rows.numel())
        assert torch.equal(out.rows, ref.rows)

    def test_two_row_prefix(self, desk_gen):
        d = desk_gen.config.latent_dim
        src, ref = seeded_stack(desk_gen, 1), seeded_stack(desk_gen, 2)
        out = pose_align(src, ref, 2 * d)
        assert torch.equal(out.rows[:2], ref.rows[:2])
        assert torch.equal(out.rows[2:], src.rows[2:])

    def test_idempotent(self, desk_gen):
        src, ref = seeded_stack(desk_gen, 1), seeded_stack(desk_gen, 2)
        once = pose_align(src, ref, 3 * desk_gen.config.latent_dim)
        twice = pose_align(once, ref, 3 * desk_gen.config.latent_dim)
        assert torch.equal(once.rows, twice.rows)

    def test_out_of_range_rejected(self, desk_gen):
        src, ref = seeded_stack(desk_gen, 1), seeded_stack(desk_gen, 2)
        with pytest.raises(DomainError):
            pose_align(src, ref, src.rows.numel() + 1)

    def test_src_never_mutated(self, desk_gen):
        src, ref = seeded_stack(desk_gen, 1), seeded_stack(desk_gen, 2)
        before = src.rows.clone()
        pose_align(src, ref, 64)
        assert torch.equal(src.rows, before)
