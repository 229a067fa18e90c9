"""Shared fixtures: small and full-recipe trained models, CLI run helpers.

The heavyweight artifacts (full default trainings, study runs) are
session-scoped so the acceptance criteria and the slow module tests share
one training each.
"""

import pytest

from gdrcomm.cli import main
from gdrcomm.codec import GdrCodec
from gdrcomm.model import TrainingConfig, build_model, load_model, train

# Six-point grid containing the 0 and 4 dB checkpoints.
C6_GRID = ["--ebn0-min", "-4", "--ebn0-max", "6", "--ebn0-step", "2"]


def run_train_default(out_dir) -> int:
    """CLI training with the default recipe (M=8, m=1, n=7, 0 dB, seed 1)."""
    return main(["train", "--seed", "1", "-o", str(out_dir)])


def run_bler_default(model_path, out_dir) -> int:
    return main(["bler", "--model", str(model_path), "--blocks", "100000",
                 "--seed", "1", "-o", str(out_dir), *C6_GRID])


def run_snr_study_default(out_dir) -> int:
    return main(["snr-study", "--trained-ebn0", "-20", "--trained-ebn0", "0",
                 "--trained-ebn0", "20", "--seed", "1", "-o", str(out_dir)])


@pytest.fixture(scope="session")
def tiny_model():
    """Quickly trained small model whose noiseless round trip is exact."""
    codec = GdrCodec(M=4, m=1, n=3)
    model = build_model(4, 3, seed=2)
    train(model, codec, TrainingConfig(epochs=30, train_samples=900, seed=2))
    return model, codec


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """The same small recipe produced through the CLI (model file on disk)."""
    out = tmp_path_factory.mktemp("tiny_cli")
    rc = main(["train", "-M", "4", "-m", "1", "-n", "3", "--epochs", "30",
               "--train-samples", "900", "--seed", "2", "-o", str(out)])
    assert rc == 0
    return out


@pytest.fixture(scope="session")
def full_run_dir(tmp_path_factory):
    """Default-recipe training plus a 6-point 1e5-block BLER sweep (CLI)."""
    out = tmp_path_factory.mktemp("full_run")
    assert run_train_default(out) == 0
    assert run_bler_default(out / "model.txt", out) == 0
    return out


@pytest.fixture(scope="session")
def model_8_1(full_run_dir):
    return load_model(full_run_dir / "model.txt")


@pytest.fixture(scope="session")
def matched_rate_pair():
    """(M=8, m=4) and (M=64, m=1) trained identically at 0 dB, seed 1."""
    out = {}
    for M, m in [(8, 4), (64, 1)]:
        codec = GdrCodec(M=M, m=m, n=7)
        model = build_model(M, 7, seed=1)
        train(model, codec, TrainingConfig(seed=1))
        out[(M, m)] = (model, codec)
    return out


@pytest.fixture(scope="session")
def snr_study_dir(tmp_path_factory):
    """Default trained-SNR study at {-20, 0, 20} dB (CLI)."""
    out = tmp_path_factory.mktemp("snr_study")
    assert run_snr_study_default(out) == 0
    return out
