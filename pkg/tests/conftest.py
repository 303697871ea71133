import warnings

import pytest

from tdha.data.synthetic import generate_synthetic
from tdha.errors import ProtocolWarning


@pytest.fixture(scope="session")
def small_bundle():
    """Tiny hierarchical bundle for fast pipeline tests."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ProtocolWarning)
        return generate_synthetic(
            classes_per_super=2,
            super_count=2,
            dim=8,
            noise_sigma=0.2,
            modality_gap=0.1,
            train_per_class=8,
            test_per_class=10,
            seed=11,
        )


@pytest.fixture(scope="session")
def standard_bundle():
    """The standard synthetic hierarchical bundle (synth CLI defaults)."""
    return generate_synthetic(
        classes_per_super=4,
        super_count=4,
        dim=32,
        noise_sigma=0.35,
        modality_gap=0.06,
        train_per_class=32,
        test_per_class=100,
        seed=0,
    )
