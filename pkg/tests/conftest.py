import numpy as np
import pytest

from pervml.data import fit_scaler, load_bundled, reference_split, split
from pervml.pipeline import RunConfig, reproduce
from pervml.tuning import target_slice


@pytest.fixture(scope="session")
def bundled():
    return load_bundled()


@pytest.fixture(scope="session")
def ref_split(bundled):
    return reference_split(bundled)


@pytest.fixture(scope="session")
def train_test(bundled, ref_split):
    return split(bundled, ref_split)


@pytest.fixture(scope="session")
def full_scaler(bundled):
    return fit_scaler(bundled)


@pytest.fixture(scope="session")
def train_slices(bundled, train_test, full_scaler):
    """Normalized training slices for each target, reference split."""
    train_ds, _ = train_test
    return {
        target: target_slice(train_ds, target, full_scaler)
        for target in bundled.target_names
    }


@pytest.fixture(scope="session")
def repro_report():
    """One shared default reproduction run (8 models, published settings)."""
    return reproduce(RunConfig())


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
