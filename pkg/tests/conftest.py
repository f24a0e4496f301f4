import os
import sys

from hypothesis import HealthCheck, settings

SAMPLE = [3, 4, 7, 13, 14, 15, 21, 25, 36, 38, 54, 62]
SAMPLE_M = 63
SAMPLE_H_ONES = [0, 1, 2, 4, 5, 6, 8, 10, 12, 13, 16, 18]

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        test_acceptance = mod
        terminalreporter.section("acceptance criteria")
        for num in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[num])
