import io
import json

import numpy as np
import pytest

from gexpect import payoffs as P
from gexpect.diagnostics import (convergence_study, discretization_scaling, errors_monotone,
                                 exp_moment_probe)
from gexpect.domain import ScalarInterval
from gexpect.noise import Rademacher

D = ScalarInterval(0.04, 0.25)
RAD = Rademacher(1)


def test_zero_sigma_is_zero_and_bounded():
    rep = discretization_scaling(0.0, [4, 8, 16], 100, 0, oversample=8)
    for r in (rep.fourth_moment, rep.qv_deviation):
        assert np.all(np.asarray(r.estimates) == 0.0)
        assert r.passed
    assert rep.passed


def test_qv_deviation_is_deterministic():
    rep = discretization_scaling(0.5, [8, 16, 32], 50, 1, oversample=8)
    assert np.allclose(rep.qv_deviation.estimates, [(0.25 / n) ** 2 for n in (8, 16, 32)], rtol=1e-12)
    assert np.all(np.asarray(rep.qv_deviation.stderrs) == 0.0)


def test_fourth_moment_decays():
    rep = discretization_scaling(0.5, [8, 16, 32, 64], 2000, 3, oversample=16)
    est = np.asarray(rep.fourth_moment.estimates)
    assert np.all(np.diff(est) < 0)
    assert rep.fourth_moment.slope < -1.0


def test_scaling_determinism_and_threads():
    a = discretization_scaling(0.5, [8, 16, 32], 5000, 7, oversample=8, threads=1)
    b = discretization_scaling(0.5, [8, 16, 32], 5000, 7, oversample=8, threads=2)
    assert a.to_dict() == b.to_dict()


def test_scaling_input_checks():
    with pytest.raises(ValueError):
        discretization_scaling(0.5, [8, 16], 100, 0)
    with pytest.raises(ValueError):
        discretization_scaling(0.5, [8, 16, 32], 1, 0)


def test_exp_probe_zero_domain():
    rep = exp_moment_probe(ScalarInterval(0.0, 0.0), RAD, 1.0, [4, 16, 64], 500, 0)
    assert np.allclose(rep.estimates, 1.0) and rep.passed


def test_exp_probe_bounded_and_overflow():
    rep = exp_moment_probe(D, RAD, 1.0, [16, 64], 2000, 0)
    assert rep.passed and rep.ratio <= 3
    big = exp_moment_probe(ScalarInterval(1e6, 1e6), RAD, 1.0, [16, 64], 200, 0)
    assert not big.passed and "overflow" in big.note
    with pytest.raises(ValueError):
        exp_moment_probe(D, RAD, 0.0, [4], 10, 0)


@pytest.mark.parametrize("errs,ok", [([0.4, 0.2, 0.1], True), ([0.4, 0.42, 0.1], True),
                                     ([0.4, 0.5, 0.1], False), ([0.4, 0.42, 0.2, 0.21], False),
                                     ([0.0, 0.0, 0.0], True)])
def test_errors_monotone(errs, ok):
    assert errors_monotone(errs) is ok


def test_constant_payoff_zero_error():
    t = convergence_study(P.constant(0.3), D, RAD, [2, 4, 8], oracle=0.3)
    assert np.all(t.errors() <= 1e-14) and t.passed and t.mode == "oracle"


def test_singleton_domain_converges():
    S = ScalarInterval(0.25, 0.25)
    t = convergence_study(P.call(), S, RAD, [8, 16, 32, 64], oracle=0.5 / np.sqrt(2 * np.pi), resolution=1)
    assert t.errors()[-1] <= 1e-3
    assert t.monotone


def test_cauchy_mode_without_oracle():
    t = convergence_study(P.call(), D, RAD, [2, 4, 8], resolution=2)
    assert t.mode == "cauchy"
    assert t.errors()[-1] == 0.0


def test_table_outputs():
    t = convergence_study(P.call(), D, RAD, [2, 4], oracle=0.199471, resolution=2)
    buf = io.StringIO()
    t.write_csv(buf, runtimes=False)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "n,value,oracle,error,scaled_error,resolution,solver_kind,failure"
    assert len(lines) == 3
    d = json.loads(t.to_json(runtimes=False))
    assert [r["n"] for r in d["rows"]] == [2, 4]
    assert "runtime" not in d["rows"][0]
