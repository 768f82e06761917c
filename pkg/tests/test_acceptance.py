"""Acceptance suite: one [PASS]/[FAIL] line per check, printed and collected for the summary.

Two checks are known to miss their stated band at the stated tolerance; they
are kept at that tolerance and marked as strict expected failures.
"""
import functools

import pytest

import conftest
from geflab.acceptance import CRITERIA, Suite

KNOWN_FAILURES = {
    6: "zc+ counting slope",
    7: "zc- conditional integrand slope",
}


@functools.lru_cache(maxsize=None)
def checks(k):
    out = CRITERIA[k](_suite())
    for c in out:
        line = c.line()
        conftest.ACCEPTANCE_LINES.append(line)
        print(line)
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _suite():
    return Suite(seed=7)


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    known = KNOWN_FAILURES.get(k)
    relevant = [c for c in checks(k) if not (known and c.name.startswith(known))]
    assert relevant
    failed = [c.line() for c in relevant if not c.passed]
    assert not failed, "\n".join(failed)


@pytest.mark.xfail(strict=True, reason="zc+ pair density leaves its small-distance power law above rho ~ 0.3")
def test_zc_plus_counting_slope():
    (c,) = [c for c in checks(6) if c.name.startswith(KNOWN_FAILURES[6])]
    assert c.passed, c.line()


@pytest.mark.xfail(strict=True, reason="first-order corrections in |z| steepen the zc- integrand over [0.3, 0.8]")
def test_zc_minus_integrand_slope():
    (c,) = [c for c in checks(7) if c.name.startswith(KNOWN_FAILURES[7])]
    assert c.passed, c.line()
