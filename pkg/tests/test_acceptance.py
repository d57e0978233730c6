"""Acceptance criteria 1-10 at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the terminal
summary so they appear even when output is captured.
"""

import pytest

from edgeends import acceptance
from conftest import ACCEPTANCE_LINES, FIXTURES


def report(res):
    line = res.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert res.ok, f"{res.detail}; failures: {res.failures[:5]}"
    assert res.in_time, f"took {res.seconds:.2f}s, limit {res.limit}s"


def test_criterion_01_figure1():
    report(acceptance.criterion_1(FIXTURES))


def test_criterion_02_rho(corpus):
    report(acceptance.criterion_2(corpus))


def test_criterion_03_tau(corpus):
    report(acceptance.criterion_3(corpus))


def test_criterion_04_oracle(corpus):
    report(acceptance.criterion_4(corpus))


def test_criterion_05_special_subbase(corpus):
    report(acceptance.criterion_5(corpus))


def test_criterion_06_strategy(corpus):
    report(acceptance.criterion_6(corpus))


def test_criterion_07_tgraph_bridge(corpus):
    report(acceptance.criterion_7(corpus))


def test_criterion_08_surgery():
    report(acceptance.criterion_8(FIXTURES))


def test_criterion_09_tc_soundness(corpus):
    report(acceptance.criterion_9(corpus))


def test_criterion_10_declared_non_reproducible():
    report(acceptance.criterion_10())
