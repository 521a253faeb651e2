"""Shared fixtures: pilot parameters, a session-wide pilot certificate, and
an in-process CLI runner."""

import contextlib
import io

import pytest

import randschrod as rs
from randschrod import cli

PILOT_LAM = 0.1
PILOT_A = 1e-3


@pytest.fixture
def pilot_params():
    return rs.ConstructorParams(lam=PILOT_LAM, a=PILOT_A)


@pytest.fixture(scope="session")
def pilot_cert():
    return rs.construct(rs.ConstructorParams(lam=PILOT_LAM, a=PILOT_A))


@pytest.fixture(scope="session")
def pilot_verify(pilot_cert):
    return rs.verify_certificate(pilot_cert)


@pytest.fixture
def run_cli():
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""

    def run(*argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = cli.main(list(argv))
        return code, out.getvalue(), err.getvalue()

    return run
