"""Shared fixtures: RNG, a small synthetic clip, and an on-disk corpus."""

import numpy as np
import pytest

from vocsep.synth import make_clip, write_demo_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def short_clip():
    # 3 s keeps RPCA fast while leaving enough loop repetitions to matter
    return make_clip(duration_seconds=3.0, sample_rate=16000, seed=7)


@pytest.fixture(scope="session")
def demo_corpus(tmp_path_factory):
    """Manifest path of a two-clip corpus written to a temp directory."""
    root = tmp_path_factory.mktemp("corpus")
    return write_demo_corpus(root, n_clips=2, duration_seconds=2.0)
