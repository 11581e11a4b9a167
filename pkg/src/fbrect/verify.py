"""Independent checks of a synthesized feedback pair.

Exact: eigenstructure residuals and simultaneous diagonalization.  Float:
the Lyapunov certificate ``W = (V^-1)^H V^-1`` and switched-system simulation
with mode-wise matrix exponentials.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

from .errors import SingularMatrix, SingularV, UnstableSpectrum
from .exact import as_scalar
from .matfield import ExactMatrix, det, inverse


# ---------------------------------------------------------------------------
# exact checks


@dataclass(frozen=True)
class AssignmentReport:
    """Residuals ``(A_cl,q - x_i I) v_i`` for both modes.

    Attributes:
        residuals1, residuals2: One residual vector per eigenpair.
        max_residual: Largest entry magnitude over both modes (0.0 iff exact).
        bad_pairs: Indices ``i`` whose residual is nonzero in either mode.
        det_V: Exact determinant of the eigenvector matrix.
    """

    residuals1: list
    residuals2: list
    max_residual: float
    bad_pairs: list
    det_V: object

    @property
    def exact(self) -> bool:
        return not self.bad_pairs


def _residuals(Acl: ExactMatrix, V: ExactMatrix, eigs):
    out = []
    for i, x in enumerate(eigs):
        v = ExactMatrix.column(V.col(i))
        r = Acl @ v - v.scale(x)
        out.append(r.col(0))
    return out


def assignment_residuals(closed_loop, V: ExactMatrix, lambdas, mus) -> AssignmentReport:
    r1 = _residuals(closed_loop[0], V, lambdas)
    r2 = _residuals(closed_loop[1], V, mus)
    bad = sorted({i for i, r in enumerate(r1) if any(r)} | {i for i, r in enumerate(r2) if any(r)})
    mags = [abs(complex(x)) for r in r1 + r2 for x in r]
    return AssignmentReport(r1, r2, max(mags, default=0.0), bad, det(V))


def check_assignment(result) -> AssignmentReport:
    """Exact residuals of ``(A_q + B_q F_q) v_i = x_i v_i`` for a synthesis result."""
    return assignment_residuals(result.closed_loop, result.assignment.V, result.lambdas, result.mus)


def diagonalize_with(closed_loop, V: ExactMatrix, lambdas, mus):
    """``(D1, D2, exact)`` with ``D_q = V^-1 A_cl,q V``."""
    try:
        Vinv = inverse(V)
    except SingularMatrix:
        raise SingularV("eigenvector matrix is singular") from None
    D1 = Vinv @ closed_loop[0] @ V
    D2 = Vinv @ closed_loop[1] @ V
    exact = D1 == ExactMatrix.diag(lambdas) and D2 == ExactMatrix.diag(mus)
    return D1, D2, exact


def common_diagonalization(result):
    """Exact ``V^-1 (A_q + B_q F_q) V`` for both modes and whether both are the assigned diagonals."""
    return diagonalize_with(result.closed_loop, result.assignment.V, result.lambdas, result.mus)


# ---------------------------------------------------------------------------
# Lyapunov certificate


@dataclass(frozen=True)
class StabilityCertificate:
    """Common quadratic Lyapunov candidate ``x^H W x``.

    Attributes:
        V: Eigenvector matrix (exact or float).
        D1, D2: ``V^-1 A_cl,q V``.
        W: ``(V^-1)^H V^-1``.
        min_eig_W: Smallest eigenvalue of ``W``.
        derivative_max: Largest eigenvalue of ``A_cl,q^H W + W A_cl,q`` for q = 1, 2.
        triangular_residual: Largest off-diagonal magnitude of ``D1``, ``D2``.
    """

    V: object
    D1: object
    D2: object
    W: object
    min_eig_W: float
    derivative_max: tuple
    triangular_residual: float

    @property
    def valid(self) -> bool:
        return self.min_eig_W > 0 and all(m < 0 for m in self.derivative_max)

    def W_numeric(self):
        return self.W.to_numpy() if isinstance(self.W, ExactMatrix) else np.asarray(self.W)


def _as_array(M):
    return M.to_numpy() if isinstance(M, ExactMatrix) else np.asarray(M, dtype=complex)


def _margins(W, closed_loop):
    Wf = _as_array(W)
    Wf = (Wf + Wf.conj().T) / 2
    min_w = float(np.linalg.eigvalsh(Wf)[0])
    derivs = []
    for A in closed_loop:
        Af = _as_array(A)
        L = Af.conj().T @ Wf + Wf @ Af
        derivs.append(float(np.linalg.eigvalsh((L + L.conj().T) / 2)[-1]))
    return min_w, tuple(derivs)


def _offdiag(D):
    Df = _as_array(D)
    return float(np.max(np.abs(Df - np.diag(np.diag(Df))))) if Df.size else 0.0


def certificate_from(V: ExactMatrix, closed_loop, lambdas=None, mus=None) -> StabilityCertificate:
    """Exact ``W`` from an exact eigenvector matrix; float margins.

    Raises:
        UnstableSpectrum: if an assigned eigenvalue has nonnegative real part.
        SingularV: if ``V`` is singular.
    """
    for x in list(lambdas or []) + list(mus or []):
        if as_scalar(x).real >= 0:
            raise UnstableSpectrum(f"assigned eigenvalue {as_scalar(x)} is not in the open left half-plane")
    try:
        Vinv = inverse(V)
    except SingularMatrix:
        raise SingularV("eigenvector matrix is singular") from None
    W = Vinv.H @ Vinv
    D1 = Vinv @ closed_loop[0] @ V
    D2 = Vinv @ closed_loop[1] @ V
    min_w, derivs = _margins(W, closed_loop)
    tri = max(_offdiag(D1), _offdiag(D2))
    return StabilityCertificate(V, D1, D2, W, min_w, derivs, tri)


def certificate_numeric(V, closed_loop) -> StabilityCertificate:
    """Float version of :func:`certificate_from` for arbitrary (possibly wrong) data."""
    Vf = np.asarray(V, dtype=complex)
    Vinv = np.linalg.inv(Vf)
    W = Vinv.conj().T @ Vinv
    D = [Vinv @ _as_array(A) @ Vf for A in closed_loop]
    min_w, derivs = _margins(W, closed_loop)
    return StabilityCertificate(Vf, D[0], D[1], W, min_w, derivs, max(_offdiag(D[0]), _offdiag(D[1])))


def cqlf(result) -> StabilityCertificate:
    """Lyapunov certificate for a synthesis result (see :func:`certificate_from`)."""
    return certificate_from(result.assignment.V, result.closed_loop, result.lambdas, result.mus)


# ---------------------------------------------------------------------------
# switching signals and simulation


@dataclass(frozen=True)
class SwitchingSignal:
    """Piecewise-constant mode sequence on ``[0, horizon]``.

    ``modes[k]`` is active on ``[switch_times[k-1], switch_times[k])`` with
    ``switch_times[-1] := 0`` and a final interval ending at ``horizon``.
    """

    switch_times: tuple
    modes: tuple
    tau: float
    horizon: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("dwell time must be positive")
        if len(self.modes) != len(self.switch_times) + 1:
            raise ValueError("need one more mode than switch times")
        bounds = (0.0,) + tuple(self.switch_times)
        if any(b - a <= self.tau for a, b in zip(bounds, bounds[1:])):
            raise ValueError("consecutive switches closer than the dwell time")
        if any(m not in (1, 2) for m in self.modes):
            raise ValueError("modes must be 1 or 2")

    def intervals(self):
        bounds = (0.0,) + tuple(self.switch_times) + (self.horizon,)
        for k, mode in enumerate(self.modes):
            yield bounds[k], bounds[k + 1], mode

    def mode_at(self, t):
        k = int(np.searchsorted(self.switch_times, t, side="right"))
        return self.modes[k]


def random_switching(tau: float, horizon: float, seed: int) -> SwitchingSignal:
    """Dwell times uniform on ``(tau, 3 tau]``, modes i.i.d. uniform on ``{1, 2}``."""
    if tau <= 0:
        raise ValueError("dwell time must be positive")
    rng = np.random.default_rng(seed)
    modes = [int(rng.integers(1, 3))]
    times = []
    t = 0.0
    while True:
        prev = t
        t += tau + 2 * tau * (1.0 - rng.random())
        while t - prev <= tau:  # guard the strict dwell bound against rounding
            t = float(np.nextafter(t, np.inf))
        if t >= horizon:
            break
        times.append(t)
        modes.append(int(rng.integers(1, 3)))
    return SwitchingSignal(tuple(times), tuple(modes), tau, horizon)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    modes: list
    norms: np.ndarray
    lyapunov_values: np.ndarray | None
    signal: SwitchingSignal

    def final_ratio(self):
        return float(self.norms[-1] / self.norms[0]) if self.norms[0] else 0.0

    def lyapunov_nonincreasing(self, tol: float = 1e-9) -> bool:
        v = self.lyapunov_values
        if v is None or len(v) < 2:
            return True
        slack = tol * max(1.0, float(v[0]))
        return bool(np.all(np.diff(v) <= slack))

    def to_csv(self, fh=None):
        """Write ``t,x1..xn,mode,norm,lyapunov``; returns the text when ``fh`` is None."""
        own = fh is None
        fh = io.StringIO() if own else fh
        n = self.states.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + ["mode", "norm", "lyapunov"])
        for k, t in enumerate(self.times):
            row = [repr(float(t))] + [repr(float(x)) for x in self.states[k]]
            row += [self.modes[k], repr(float(self.norms[k]))]
            row.append("" if self.lyapunov_values is None else repr(float(self.lyapunov_values[k])))
            w.writerow(row)
        return fh.getvalue() if own else None


class _Propagator:
    """``exp(A t)`` via a shared eigendecomposition when available, else ``expm``."""

    def __init__(self, A, V=None, eigs=None):
        self.A = _as_array(A)
        self.real = np.allclose(self.A.imag, 0)
        if V is not None and eigs is not None:
            self.V = np.asarray(V, dtype=complex)
            self.Vinv = np.linalg.inv(self.V)
            self.d = np.asarray([complex(as_scalar(x)) if not isinstance(x, (complex, float)) else x
                                 for x in eigs], dtype=complex)
        else:
            self.V = None

    def __call__(self, h, x):
        if self.V is not None:
            y = self.V @ (np.exp(self.d * h) * (self.Vinv @ x))
        else:
            y = expm(self.A * h) @ x
        return y.real if self.real else y


def simulate(closed_loop, signal: SwitchingSignal, x0, dt: float = 0.1, V=None, eigs=None, W=None) -> Trajectory:
    """Sample the switched trajectory exactly per mode.

    Args:
        closed_loop: ``(A_cl1, A_cl2)`` as exact or float matrices.
        signal: The switching signal.
        x0: Initial state.
        dt: Sample spacing inside each interval; switch instants are always sampled.
        V: Optional common eigenvector matrix; with ``eigs = (lambdas, mus)``
            the propagators use ``V e^{D t} V^-1``.
        W: Optional Lyapunov matrix; enables ``lyapunov_values``.
    """
    Vf = _as_array(V) if V is not None else None
    props = {
        1: _Propagator(closed_loop[0], Vf, eigs[0] if eigs else None),
        2: _Propagator(closed_loop[1], Vf, eigs[1] if eigs else None),
    }
    x = np.asarray([float(as_scalar(v)) if not isinstance(v, (float, int)) else float(v) for v in x0])
    times, states, modes = [0.0], [x.copy()], [signal.modes[0]]
    for t0, t1, mode in signal.intervals():
        prop = props[mode]
        t = t0
        while t1 - t > 1e-12:
            h = min(dt, t1 - t)
            x = prop(h, x)
            t = t + h
            times.append(t)
            states.append(x.copy())
            modes.append(mode)
    states = np.asarray(states)
    norms = np.linalg.norm(states, axis=1)
    lyap = None
    if W is not None:
        Wf = _as_array(W)
        lyap = np.real(np.einsum("ki,ij,kj->k", states.conj(), Wf, states))
    return Trajectory(np.asarray(times), states, modes, norms, lyap, signal)


def simulate_batch(closed_loop, signals, x0, workers: int | None = None, **kwargs):
    """Run :func:`simulate` for every signal, in parallel threads, preserving order."""
    if workers == 1:
        return [simulate(closed_loop, s, x0, **kwargs) for s in signals]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: simulate(closed_loop, s, x0, **kwargs), signals))


def simulate_result(result, signal: SwitchingSignal, x0=None, dt: float = 0.1, certificate=None) -> Trajectory:
    """Simulate a synthesis result with its own eigenvectors and certificate."""
    n = result.pair1.n
    x0 = x0 if x0 is not None else [Fraction(1)] * n
    cert = certificate or cqlf(result)
    return simulate(result.closed_loop, signal, x0, dt, V=result.assignment.V,
                    eigs=(result.lambdas, result.mus), W=cert.W)
