from pathlib import Path

import pytest
from scipy import stats

import abpipe

ROOT = Path(__file__).resolve().parents[2]
SCENARIO = ROOT / "scenarios" / "default.json"


def test_welch_matches_scipy():
    res = abpipe.welch_t_test(500, 0.10, 45.0, 480, 0.13, 54.0, "B_greater")
    ref = stats.ttest_ind_from_stats(0.13, (54.0 / 479) ** 0.5, 480, 0.10, (45.0 / 499) ** 0.5, 500,
                                     equal_var=False, alternative="greater")
    assert res["p_value"] == pytest.approx(ref.pvalue, abs=1e-9)


def test_two_proportion_review_rates():
    res = abpipe.two_proportion_test(10000, 1470, 10000, 1617)
    assert res["p_value"] < 0.05
    assert res["significant"]


def test_unknown_direction_rejected():
    with pytest.raises(ValueError):
        abpipe.welch_t_test(5, 0.0, 1.0, 5, 0.0, 1.0, "sideways")


def test_validate_bundles():
    assert abpipe.validate(ROOT / "scenarios" / "parallel") == []
    lines = abpipe.validate(ROOT / "tests" / "fixtures" / "bad_fractions")
    assert any(line.startswith("bad assignment fractions: ") for line in lines)
    lines = abpipe.validate(ROOT / "tests" / "fixtures" / "dangling_reference")
    assert lines[0].startswith("dangling reference: ")


def test_run_is_deterministic_across_modes():
    a = abpipe.run(ROOT / "scenarios" / "parallel", SCENARIO, 3)
    b = abpipe.run(ROOT / "scenarios" / "parallel", SCENARIO, 3, threads=True)
    assert a == b
    assert a["completed"]


def test_generator_prevalence():
    k = abpipe.generated_positives(str(SCENARIO), 20000)
    assert 700 <= k <= 980
