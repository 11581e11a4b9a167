import io

import numpy as np
import pytest

from conftest import FOURTH_ORDER_PAIRS
from fbrect.errors import SingularV, UnstableSpectrum
from fbrect.matfield import ExactMatrix
from fbrect.synth import SynthesisConfig, synthesize
from fbrect.verify import (
    SwitchingSignal,
    assignment_residuals,
    certificate_from,
    certificate_numeric,
    common_diagonalization,
    cqlf,
    random_switching,
    simulate,
    simulate_batch,
    simulate_result,
)


@pytest.fixture(scope="module")
def golden(fourth_order):
    cfg = SynthesisConfig(pairs=FOURTH_ORDER_PAIRS, coefficients=[[1]] * 4, scale="pinned", basis="Q")
    return synthesize(*fourth_order[:2], cfg)


def test_residuals_and_diagonalization(golden):
    rep = assignment_residuals(golden.closed_loop, golden.assignment.V, golden.lambdas, golden.mus)
    assert rep.exact and rep.max_residual == 0 and not rep.bad_pairs
    D1, D2, exact = common_diagonalization(golden)
    assert exact
    assert D1 == ExactMatrix.diag(golden.lambdas)
    assert D2 == ExactMatrix.diag(golden.mus)


def test_wrong_eigenvalue_is_reported(golden):
    lambdas = list(golden.lambdas)
    lambdas[0] = lambdas[0] - 1
    rep = assignment_residuals(golden.closed_loop, golden.assignment.V, lambdas, golden.mus)
    assert not rep.exact and rep.bad_pairs


def test_certificate(golden):
    cert = cqlf(golden)
    assert cert.valid
    assert cert.min_eig_W > 0 and max(cert.derivative_max) < 0
    assert cert.triangular_residual == 0
    num = certificate_numeric(golden.assignment.V.to_numpy(), golden.closed_loop)
    assert num.valid
    assert np.allclose(num.W, cert.W_numeric(), rtol=1e-9, atol=1e-12)


def test_certificate_rejects_bad_input(golden):
    with pytest.raises(UnstableSpectrum):
        certificate_from(golden.assignment.V, golden.closed_loop, [1, -1, -2, -4], golden.mus)
    with pytest.raises(SingularV):
        certificate_from(ExactMatrix.zeros(4, 4), golden.closed_loop)


def test_switching_signal_respects_dwell_time():
    for seed in range(20):
        sig = random_switching(0.05, 20.0, seed)
        bounds = (0.0,) + sig.switch_times
        assert all(b - a > 0.05 for a, b in zip(bounds, bounds[1:]))
        assert sig.switch_times[-1] < 20.0
    assert random_switching(0.05, 20.0, 4) == random_switching(0.05, 20.0, 4)


def test_switching_signal_validation():
    with pytest.raises(ValueError):
        SwitchingSignal((0.01,), (1, 2), 0.05, 1.0)
    with pytest.raises(ValueError):
        SwitchingSignal((), (3,), 0.05, 1.0)
    with pytest.raises(ValueError):
        random_switching(0.0, 1.0, 0)


def test_simulation_decays_and_lyapunov_monotone(golden):
    cert = cqlf(golden)
    for seed in range(10):
        tr = simulate_result(golden, random_switching(0.05, 20.0, seed), certificate=cert)
        assert tr.final_ratio() < 1e-6
        assert tr.lyapunov_nonincreasing()
        assert tr.times[-1] == pytest.approx(20.0)


def test_eigen_and_expm_propagators_agree(golden):
    sig = random_switching(0.05, 5.0, 1)
    a = simulate(golden.closed_loop, sig, [1, 2, 3, 4])
    b = simulate(golden.closed_loop, sig, [1, 2, 3, 4], V=golden.assignment.V,
                 eigs=(golden.lambdas, golden.mus))
    assert np.allclose(a.states, b.states, rtol=1e-9, atol=1e-12)


def test_batch_matches_serial(golden):
    sigs = [random_switching(0.05, 2.0, s) for s in range(4)]
    serial = simulate_batch(golden.closed_loop, sigs, [1, 1, 1, 1], workers=1)
    threaded = simulate_batch(golden.closed_loop, sigs, [1, 1, 1, 1], workers=2)
    for a, b in zip(serial, threaded):
        assert np.array_equal(a.states, b.states)


def test_csv_layout(golden):
    tr = simulate(golden.closed_loop, random_switching(0.05, 0.3, 0), [1, 1, 1, 1], W=cqlf(golden).W)
    text = tr.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "t,x1,x2,x3,x4,mode,norm,lyapunov"
    assert len(lines) == len(tr.times) + 1
    buf = io.StringIO()
    tr.to_csv(buf)
    assert buf.getvalue() == text
