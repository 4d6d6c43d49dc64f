import os
import sys

from hypothesis import settings

settings.register_profile("ci", max_examples=60, deadline=None)
settings.register_profile("dev", max_examples=20, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    groups = {}
    for key, line in mod.RESULTS.items():
        groups.setdefault(int(key.split()[0]), []).append((key, line))
    terminalreporter.section("acceptance criteria")
    for n in sorted(groups):
        parts = sorted(groups[n])
        if len(parts) == 1:
            terminalreporter.write_line(parts[0][1])
            continue
        passed = sum(line.startswith("PASS") for _, line in parts)
        verdict = "PASS" if passed == len(parts) else "FAIL"
        terminalreporter.write_line(f"{verdict}  criterion {n}: {passed}/{len(parts)} parts pass")
        for _, line in parts:
            terminalreporter.write_line("      " + line)
