import shutil
import subprocess

import pytest

PURE_TOML = """\
dimension = 4
prior = "haar_pure"
measurement = "covariant_rank1"
n_particles = 300
n_shots = 30
n_trials = 5
seed = 7

[resample]
pure_preserving = true
"""

MIXED_TOML = """\
dimension = 4
prior = "hilbert_schmidt"
n_particles = 300
n_shots = 30
n_trials = 5
seed = 7
"""

SINGLE_TOML = """\
dimension = 2
prior = "hilbert_schmidt"
n_particles = 200
n_shots = 20
n_trials = 1
seed = 3
"""


def run_fidbench(base_dir, name, toml_text):
    if shutil.which("fidbench") is None:
        pytest.fail("fidbench CLI not on PATH; install the fidbench package first")
    cfg = base_dir / f"{name}.toml"
    cfg.write_text(toml_text)
    out = base_dir / name
    proc = subprocess.run(
        ["fidbench", "run", str(cfg), "--out-dir", str(out)],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        pytest.fail(f"fidbench run failed:\n{proc.stderr}")
    return out


@pytest.fixture(scope="session")
def pure_run(tmp_path_factory):
    """Pure prior, covariant measurement, pure-preserving kernel: all five series."""
    return run_fidbench(tmp_path_factory.mktemp("runs"), "purerun", PURE_TOML)


@pytest.fixture(scope="session")
def mixed_run(tmp_path_factory):
    """Mixed prior: the pure-support column stays blank throughout."""
    return run_fidbench(tmp_path_factory.mktemp("runs"), "mixedrun", MIXED_TOML)


@pytest.fixture(scope="session")
def single_run(tmp_path_factory):
    return run_fidbench(tmp_path_factory.mktemp("runs"), "singlerun", SINGLE_TOML)
