import numpy as np
import pytest

from seqaudit.calibration import BoundarySchedule, DesignConfig


def make_config(**kw) -> DesignConfig:
    base = dict(
        n=30, r=0.2, theta_h=0.05, theta_k=0.05, alpha=0.05, beta=0.05,
        m_reps=500, seed=3, backend="exact",
    )
    base.update(kw)
    return DesignConfig(**base)


def make_schedule(lower, upper, config=None, min_stage=1, truncation=None, **cfg_kw):
    """Hand-built schedule for procedure/evaluation tests."""
    lower = np.asarray(lower, dtype=np.int64)
    n = lower.size + 1
    if config is None:
        cfg_kw.setdefault("n", n)
        cfg_kw.setdefault("r", 0.5)
        cfg_kw.setdefault("theta_h", 0.3)
        cfg_kw.setdefault("theta_k", 0.3)
        cfg_kw.setdefault("alpha", 0.2)
        cfg_kw.setdefault("beta", 0.2)
        cfg_kw.setdefault("m_reps", 10)
        config = DesignConfig(**cfg_kw)
    zeros = np.zeros(config.n - 1)
    return BoundarySchedule(
        config=config,
        lower=lower,
        upper=np.asarray(upper, dtype=np.int64),
        cum_upper_err=zeros,
        cum_lower_err=zeros.copy(),
        min_stage=min_stage,
        truncation=truncation,
    )


def no_stop_arrays(n):
    return np.zeros(n - 1, dtype=np.int64), np.arange(1, n, dtype=np.int64)


@pytest.fixture
def example_exact_schedule():
    from seqaudit.calibration import calibrate

    return calibrate(make_config(n=100, backend="exact"))
