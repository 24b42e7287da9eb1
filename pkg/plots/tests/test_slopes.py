import os

import numpy as np
import pytest

from lqplots import DegenerateFit, loglog_slope, read_aggregate_csv

DATA = os.path.join(os.path.dirname(__file__), "data")

# Frozen reference values computed by the experiment harness's own
# loglog_slope on the same golden file (shared-definition contract).
GOLDEN = os.path.join(DATA, "golden_exp1_aggregate.csv")
GOLDEN_SLOPES = {
    "mse_Gamma": -0.43415332322803574,
    "mse_phi": -0.5771769993820167,
    "median_cum_regret": 0.7064399516013278,
}


def test_exact_power_law():
    n = np.arange(10, 3000)
    slope, intercept, r2 = loglog_slope(n, 7.0 * n ** -0.5, (10, 3000))
    assert abs(slope + 0.5) < 1e-10
    assert r2 == pytest.approx(1.0)


def test_golden_file_slopes_match_harness_definition():
    cols = read_aggregate_csv(GOLDEN)
    for col, want in GOLDEN_SLOPES.items():
        got = loglog_slope(cols["n"], cols[col], (5000, 100000))[0]
        assert abs(got - want) < 1e-9


def test_degenerate_window():
    with pytest.raises(DegenerateFit):
        loglog_slope([1, 2, 3], [1.0, 2.0, 3.0], (100, 200))


def test_thinning_caps_points():
    n = np.arange(1, 200_000)
    slope, _, _ = loglog_slope(n, 3.0 * n ** -0.25, (1, 200_000))
    assert abs(slope + 0.25) < 1e-9
