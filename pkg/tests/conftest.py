"""Shared fixtures: the three worked problem instances, their certificates
and orbits, plus a cheap oscillating instance for property tests."""

import math

import pytest

from periorbit import PeriodicCoeff, ProblemSpec, certify, find_periodic, parse_expression

OMEGA = 2.0 * math.pi / 3.0


def pc(text, omega=OMEGA):
    """Parse ``text`` into a PeriodicCoeff with period ``omega``."""
    return PeriodicCoeff(parse_expression(text), omega)


def make_example(rho2):
    """The shared worked instance; the three variants differ only in rho2."""
    return ProblemSpec(
        p=pc("0"),
        q=pc("1/40"),
        b=pc("1+2*cos(3*t)"),
        c=pc("exp(2*sin(3*t))"),
        e=pc("10+cos(3*t)"),
        rho1=1.5,
        rho2=rho2,
        omega=OMEGA,
    )


@pytest.fixture(scope="session")
def spec41():
    return make_example(1.3)


@pytest.fixture(scope="session")
def spec42():
    return make_example(2.0)


@pytest.fixture(scope="session")
def spec43():
    return make_example(1.5)


@pytest.fixture(scope="session")
def cert41(spec41):
    return certify(spec41)


@pytest.fixture(scope="session")
def cert42(spec42):
    return certify(spec42)


@pytest.fixture(scope="session")
def cert43(spec43):
    return certify(spec43)


@pytest.fixture(scope="session")
def orbit41(spec41):
    return find_periodic(spec41, tol=1e-8)


@pytest.fixture(scope="session")
def orbit42(spec42):
    return find_periodic(spec42, tol=1e-8)


@pytest.fixture(scope="session")
def orbit43(spec43):
    return find_periodic(spec43, tol=1e-8)


def make_cheap_spec():
    """A mild oscillating instance that integrates fast; used for the
    Poincare shift property and other randomized orbit checks."""
    return ProblemSpec(
        p=pc("0"),
        q=pc("1"),
        b=pc("0"),
        c=pc("1"),
        e=pc("3+cos(3*t)"),
        rho1=1.0,
        rho2=1.0,
        omega=OMEGA,
    )


@pytest.fixture(scope="session")
def cheap_spec():
    return make_cheap_spec()


@pytest.fixture(scope="session")
def cheap_orbit(cheap_spec):
    return find_periodic(cheap_spec, tol=1e-8)


def make_constant_spec():
    """Autonomous instance whose periodic orbit is the equilibrium of
    x'' = -x + 1/x + 3, i.e. the positive root of x^2 - 3x - 1 = 0."""
    return ProblemSpec(
        p=pc("0"),
        q=pc("1"),
        b=pc("0"),
        c=pc("1"),
        e=pc("3"),
        rho1=1.0,
        rho2=1.0,
        omega=OMEGA,
    )


@pytest.fixture(scope="session")
def constant_spec():
    return make_constant_spec()
