#!/usr/bin/env python3
"""Generates the frozen Welch p-value table used by the stats unit and acceptance tests.

The values come from scipy.stats.ttest_ind_from_stats, which shares no code with the
C++ implementation. Re-running with the same numpy/scipy produces the same table.

    python3 tests/oracles/gen_welch_oracle.py > tests/data/welch_oracle.csv
"""
import sys

import numpy as np
from scipy import stats

DIRECTIONS = [("B_greater", "greater"), ("B_less", "less"), ("B_not_equal", "two-sided")]


def main() -> None:
    rng = np.random.default_rng(20240917)
    out = sys.stdout
    out.write("case,n_a,mean_a,m2_a,n_b,mean_b,m2_b,direction,p_value\n")
    for case in range(100):
        if case % 10 == 0:
            n_a, n_b = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        elif case % 10 == 1:
            n_a, n_b = int(rng.integers(50_000, 150_001)), int(rng.integers(50_000, 150_001))
        else:
            n_a, n_b = int(rng.integers(2, 20_001)), int(rng.integers(2, 20_001))
        # offsets are drawn in units of the standard error so p-values cover (0, 1)
        z = rng.normal(0.0, 2.5)
        if case % 3 == 0:
            # proportion-like streams, the shape the web-store produces
            pa = rng.uniform(0.01, 0.5)
            se = np.sqrt(pa * (1 - pa) * (1 / n_a + 1 / n_b))
            pb = float(np.clip(pa + z * se, 0.005, 0.995))
            mean_a, var_a = pa, pa * (1 - pa) * n_a / (n_a - 1)
            mean_b, var_b = pb, pb * (1 - pb) * n_b / (n_b - 1)
        else:
            var_a = rng.uniform(0.05, 4.0)
            var_b = rng.uniform(0.05, 4.0)
            mean_a = rng.normal(0.0, 1.0)
            mean_b = mean_a + z * np.sqrt(var_a / n_a + var_b / n_b)
        m2_a = var_a * (n_a - 1)
        m2_b = var_b * (n_b - 1)
        # the implementation derives the variance from m2, do the same here
        var_a = m2_a / (n_a - 1)
        var_b = m2_b / (n_b - 1)
        name, alternative = DIRECTIONS[case % 3]
        res = stats.ttest_ind_from_stats(
            mean_b, np.sqrt(var_b), n_b, mean_a, np.sqrt(var_a), n_a,
            equal_var=False, alternative=alternative)
        out.write(
            f"{case},{n_a},{float(mean_a)!r},{float(m2_a)!r},{n_b},{float(mean_b)!r},{float(m2_b)!r},{name},{float(res.pvalue)!r}\n")


if __name__ == "__main__":
    main()
