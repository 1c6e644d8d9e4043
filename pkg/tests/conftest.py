import math
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_PATH = REPO_ROOT / "configs" / "cupc.yaml"


@pytest.fixture(scope="session")
def shipped_config():
    from spinbath.config import load_config

    return load_config(CONFIG_PATH)


@pytest.fixture(scope="session")
def geometry(shipped_config):
    return shipped_config.film_geometry()


@pytest.fixture(scope="session")
def small_model(shipped_config):
    """Coarse two-field forward model for fast estimator unit tests."""
    from spinbath.estimator import ForwardModel

    return ForwardModel(
        fields_gauss=(231.0, 461.0),
        base_spec=shipped_config.spin_spec(1e-4),
        nv=shipped_config.nv_config(),
        theta_step=math.radians(15.0),
    )


@pytest.fixture(scope="session")
def forward_model_4f(shipped_config):
    """Four-field forward model at 2 degree resolution (acceptance-grade).

    Building it costs ~30 s; it is shared across the whole session.
    """
    from spinbath.estimator import ForwardModel

    return ForwardModel(
        fields_gauss=(231.0, 372.0, 461.0, 721.0),
        base_spec=shipped_config.spin_spec(1e-4),
        nv=shipped_config.nv_config(),
        theta_step=math.radians(2.0),
    )


@pytest.fixture()
def nuisance_fixed(geometry, shipped_config):
    """Fixed-parameter dict with the shipped nuisance intervals."""

    def build(free):
        fixed = dict(shipped_config.nuisance_intervals())
        lo, hi = shipped_config.bath.tau_e_interval_ns
        fixed["tau_e"] = (shipped_config.bath.tau_e_ns * 1e-9, (lo * 1e-9, hi * 1e-9))
        th = math.radians(shipped_config.hyperfine.theta_e_deg)
        fixed["theta_e"] = (th, (th, th))
        for name in free:
            fixed.pop(name, None)
        return fixed

    return build
