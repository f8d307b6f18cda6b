"""Python access to the A/B testing pipeline engine."""

import json

from ._core import generated_positives, two_proportion_test, welch_t_test
from ._core import run_summary as _run_summary
from ._core import validate as _validate

__all__ = ["generated_positives", "run", "two_proportion_test", "validate", "welch_t_test"]


def validate(bundle):
    """Violation lines of a blueprint bundle, empty when it is valid."""
    return _validate(str(bundle))


def run(bundle, scenario, seed, threads=False):
    """Runs a blueprint bundle once and returns the parsed summary."""
    return json.loads(_run_summary(str(bundle), str(scenario), seed, threads))
