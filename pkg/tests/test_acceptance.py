"""Acceptance table A1-A8.

Each test runs the named suite(s) shared with ``vhjlab verify`` and reports
one summary line per criterion plus one line per individual check.  The
long runs are cached per process, so A5 reuses the A1-A4 trajectories and
A4 reuses the A6 amplitude scan.
"""

import pytest

from vhjlab import suites


def _check(acceptance_log, criterion, *names):
    checks = [c for name in names for c in suites.run_suite(name).checks
              if c.criterion == criterion]
    ok = bool(checks) and all(c.passed for c in checks)
    acceptance_log.append(f"{'PASS' if ok else 'FAIL'} {criterion}")
    acceptance_log.extend("    " + c.line() for c in checks)
    for c in checks:
        print(c.line())
    failed = [c.line() for c in checks if not c.passed]
    assert ok, "\n".join(failed) or f"{criterion}: no checks ran"


def test_a1_hopf_cole_oracle(acceptance_log):
    _check(acceptance_log, "A1", "hopf-cole-q2")


def test_a2_diffusion_regime(acceptance_log):
    _check(acceptance_log, "A2", "diffusion")


def test_a3_vss_regime(acceptance_log):
    _check(acceptance_log, "A3", "vss")


@pytest.mark.slow
def test_a6_threshold_existence(acceptance_log):
    _check(acceptance_log, "A6", "threshold")


@pytest.mark.slow
def test_a4_hj_dominated_regime(acceptance_log):
    _check(acceptance_log, "A4", "hj-dominated")


@pytest.mark.slow
def test_a5_a_priori_monitors(acceptance_log):
    _check(acceptance_log, "A5", "monitors")


def test_a7_closed_forms(acceptance_log):
    _check(acceptance_log, "A7", "closed-forms")


def test_a8_forced_linear(acceptance_log):
    _check(acceptance_log, "A8", "forced-linear")
