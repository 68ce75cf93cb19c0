from __future__ import annotations

import numpy as np
import pytest

from qgreen.greenfn import ProblemSpec
from qgreen.measure import StieltjesMeasure
from qgreen.qkernel import QParams

Q1 = QParams(1 / 3)


def ex1_h(t):
    return np.log(1.0 / np.asarray(t, float))


def ex1_f(t, x):
    t = np.asarray(t, float)
    x = np.asarray(x, float)
    return (3 ** (1 / 3) * t**3 + x ** (4 / 3) * t + 1) ** (1 / 3)


def ex1_y(ell):
    return np.asarray(ell, float) ** (4 / 9)


def example1(case=1, lam=1.0, **over):
    kw = dict(
        alpha=3.5,
        qp=Q1,
        gammas=(1 / 5, 1 / 3),
        betas=(2 / 3, 1 / 4),
        zetas=(1 / 3, 1 / 2),
        nu=5.0,
        mu=3.0,
        measure=StieltjesMeasure() if case == 1 else StieltjesMeasure((-1.0, 2.0)),
        lam=lam,
        h=ex1_h,
        f=ex1_f,
        y_ell=ex1_y,
    )
    kw.update(over)
    return ProblemSpec(**kw)


@pytest.fixture
def ex1_case1():
    return example1(1)


@pytest.fixture
def ex1_case2():
    return example1(2)
