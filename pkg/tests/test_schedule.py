import math

import numpy as np
import pytest

from roomsynth.diffusion import NoiseSchedule, ScheduleError, make_schedule


def alpha_bar_oracle(betas):
    # Log-space product, independent of np.cumprod.
    total = 0.0
    out = []
    for b in betas:
        total += math.log1p(-b)
        out.append(math.exp(total))
    return out


def test_default_ddpm_schedule():
    s = make_schedule("linear", 1000, 1e-4, 0.02)
    assert s.T == 1000
    assert s.betas[0] == pytest.approx(1e-4)
    assert s.betas[-1] == pytest.approx(0.02)
    oracle = alpha_bar_oracle(s.betas)
    assert np.allclose(s.alpha_bars, oracle, rtol=1e-12)
    assert s.alpha_bar(1000) == pytest.approx(4.0e-5, rel=0.02)


def test_single_step_schedule():
    s = make_schedule("linear", 1, 0.5, 0.5)
    assert s.alpha_bar(1) == pytest.approx(0.5)


def test_monotonicity():
    s = make_schedule("linear", 250, 1e-4, 0.05)
    assert np.all(np.diff(s.betas) >= 0)
    assert np.all(np.diff(s.alpha_bars) < 0)
    assert s.alpha_bar(s.T) < s.alpha_bar(1)


def test_invalid_ranges():
    with pytest.raises(ScheduleError):
        make_schedule("linear", 10, 0.02, 1e-4)  # start > end
    with pytest.raises(ScheduleError):
        make_schedule("linear", 0, 1e-4, 0.02)
    with pytest.raises(ScheduleError):
        make_schedule("linear", 10, 0.0, 0.02)
    with pytest.raises(ScheduleError):
        make_schedule("linear", 10, 1e-4, 1.0)
    with pytest.raises(ScheduleError):
        make_schedule("cosine", 10)


def test_direct_construction_validates():
    with pytest.raises(ScheduleError):
        NoiseSchedule(np.array([0.5, 0.1]))  # decreasing betas


def test_serialization_round_trip():
    s = make_schedule("linear", 100, 1e-4, 0.2)
    again = NoiseSchedule.from_dict(s.to_dict())
    assert np.allclose(again.betas, s.betas)
