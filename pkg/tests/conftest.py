import pytest
import torch

from ganstudio import Generator, GeneratorConfig, expand_to_stack

DESK_CONFIG = GeneratorConfig()  # latent 64, 8 layers, 4x4 -> 32x32

TINY_CONFIG = GeneratorConfig(
    latent_dim=8,
    num_layers=3,
    base_resolution=4,
    channels_per_layer=(8, 8, 4),
    upsample_layers=(2,),
    rng_seed=11,
)


@pytest.fixture(scope="session")
def desk_gen():
    return Generator(DESK_CONFIG)


@pytest.fixture(scope="session")
def desk_gen_b():
    return Generator(GeneratorConfig(rng_seed=99))


@pytest.fixture(scope="session")
def tiny_gen():
    return Generator(TINY_CONFIG)


def seeded_stack(gen, seed, truncation=1.0):
    w = gen.sample_styles(1, seed, truncation)[0]
    return expand_to_stack(w, gen.config.num_layers)


def random_feature(shape, seed):
    g = torch.Generator().manual_seed(seed)
    return torch.randn(shape, generator=g)
