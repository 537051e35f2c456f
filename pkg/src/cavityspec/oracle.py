"""Lindblad steady state of the driven Tavis-Cummings model.

The Hilbert space is [cavity Fock 0..n_max] x [atom 1] x ... x [atom N], each
atom with basis (|g>, |e>). In the frame rotating at the drive frequency,

    H = -W (a^dag a + sum_i s_i^+ s_i^-) + g sum_i (a^dag s_i^- + a s_i^+) + eps (a + a^dag)

and the dissipators are D[a] at rate 2 kappa and D[s_i^-] at rate gamma, with
D[c] rho = c rho c^dag - {c^dag c, rho}/2. Density matrices are vectorized by
stacking columns, so vec(A rho B) = (B^T kron A) vec(rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .params import DriveSpec, SystemRates

MAX_DIM = 512
MAX_ATOMS = 4
MAX_FOCK = 12
# sparse LU fill-in grows quickly past this Hilbert-space dimension
DIRECT_MAX_DIM = 64

# For the drive term eps (a + a^dag) the empty cavity settles at
# <a> = -i eps / (kappa - i W); multiplying by this phase aligns the oracle
# field with the real-drive convention of the analytic response.
DRIVE_PHASE = 1j


class DimensionLimitError(ValueError):
    pass


class SteadyStateError(ArithmeticError):
    """The Liouvillian kernel could not be isolated (singular or degenerate)."""


class NonConvergenceError(ArithmeticError):
    pass


class StepSizeError(ValueError):
    pass


class ZeroDriveError(ValueError):
    pass


def _destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def _embed(op: np.ndarray, slot: int, dims: list[int]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for k, d in enumerate(dims):
        out = np.kron(out, op if k == slot else np.eye(d, dtype=complex))
    return out


@dataclass
class QuantumModel:
    rates: SystemRates
    drive: DriveSpec
    n_max: int
    n_atoms: int
    a: np.ndarray
    sm: list[np.ndarray]
    sz: list[np.ndarray]
    hamiltonian: np.ndarray
    collapse_ops: list[tuple[float, np.ndarray]]
    _liouvillian: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def adag(self) -> np.ndarray:
        return self.a.conj().T

    @property
    def sigma_plus(self) -> list[np.ndarray]:
        return [s.conj().T for s in self.sm]

    @property
    def collective_sm(self) -> np.ndarray:
        out = np.zeros_like(self.a)
        for s in self.sm:
            out = out + s
        return out

    @property
    def collective_sp(self) -> np.ndarray:
        return self.collective_sm.conj().T

    @property
    def liouvillian(self) -> sp.csr_matrix:
        if self._liouvillian is None:
            self._liouvillian = liouvillian(self.hamiltonian, self.collapse_ops)
        return self._liouvillian

    def apply_liouvillian(self, rho: np.ndarray) -> np.ndarray:
        """L(rho) evaluated directly in operator form."""
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for rate, c in self.collapse_ops:
            cd = c.conj().T
            cdc = cd @ c
            out += rate * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
        return out


def build_model(rates: SystemRates, drive: DriveSpec, n_max: int, n_atoms: int | None = None) -> QuantumModel:
    """Operators, Hamiltonian and collapse channels on the truncated space.

    ``n_atoms`` defaults to ``rates.n_atoms``, which must then be an integer.
    """
    if n_atoms is None:
        if not rates.is_integer_n:
            raise ValueError("the quantum model needs an integer atom number")
        n_atoms = int(rates.n_atoms)
    if not 1 <= n_max <= MAX_FOCK:
        raise DimensionLimitError(f"n_max must be in [1, {MAX_FOCK}], got {n_max}")
    if not 0 <= n_atoms <= MAX_ATOMS:
        raise DimensionLimitError(f"n_atoms must be in [0, {MAX_ATOMS}], got {n_atoms}")
    dims = [n_max + 1] + [2] * n_atoms
    dim = int(np.prod(dims))
    if dim > MAX_DIM:
        raise DimensionLimitError(f"Hilbert space dimension {dim} exceeds {MAX_DIM}")

    lower = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
    a = _embed(_destroy(n_max + 1), 0, dims)
    sm = [_embed(lower, k + 1, dims) for k in range(n_atoms)]
    sz = [_embed(np.diag([-1.0, 1.0]).astype(complex), k + 1, dims) for k in range(n_atoms)]
    adag = a.conj().T

    w, g, eps = drive.omega, rates.g, drive.epsilon
    h = -w * (adag @ a) + eps * (a + adag)
    for s in sm:
        sd = s.conj().T
        h = h - w * (sd @ s) + g * (adag @ s + a @ sd)

    collapse = [(2.0 * rates.kappa, a)] + [(rates.gamma, s) for s in sm]
    return QuantumModel(rates, drive, n_max, n_atoms, a, sm, sz, h, collapse)


def liouvillian(hamiltonian: np.ndarray, collapse_ops) -> sp.csr_matrix:
    """Sparse superoperator acting on column-stacked density matrices."""
    n = hamiltonian.shape[0]
    eye = sp.identity(n, dtype=complex, format="csr")
    h = sp.csr_matrix(hamiltonian)
    lv = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for rate, c in collapse_ops:
        c = sp.csr_matrix(c)
        cdc = (c.conj().T @ c).tocsr()
        lv = lv + rate * (sp.kron(c.conj(), c) - 0.5 * sp.kron(eye, cdc) - 0.5 * sp.kron(cdc.T, eye))
    return lv.tocsr()


def expect(op: np.ndarray, rho: np.ndarray) -> complex:
    return complex(np.trace(op @ rho))


@dataclass(frozen=True)
class Observables:
    a: complex
    n_photons: float
    collective_sp: complex
    collective_sm: complex
    sz: tuple[float, ...]
    excited: float
    a_sp: complex
    adag_sm: complex
    purity: float


@dataclass(frozen=True)
class Residuals:
    trace_deviation: float
    liouvillian_residual: float
    hermiticity_deviation: float
    min_eigenvalue: float


@dataclass(frozen=True)
class SteadyStateResult:
    rho: np.ndarray
    observables: Observables
    residuals: Residuals
    method: str


def observables(model: QuantumModel, rho: np.ndarray) -> Observables:
    a, adag = model.a, model.adag
    s_minus = model.collective_sm
    s_plus = s_minus.conj().T
    excited = sum(expect(s.conj().T @ s, rho).real for s in model.sm)
    return Observables(
        a=expect(a, rho),
        n_photons=expect(adag @ a, rho).real,
        collective_sp=expect(s_plus, rho),
        collective_sm=expect(s_minus, rho),
        sz=tuple(expect(z, rho).real for z in model.sz),
        excited=float(excited),
        a_sp=expect(a @ s_plus, rho),
        adag_sm=expect(adag @ s_minus, rho),
        purity=expect(rho, rho).real,
    )


def _residuals(model: QuantumModel, rho: np.ndarray, raw_herm: float) -> Residuals:
    lrho = model.apply_liouvillian(rho)
    lnorm = spla.norm(model.liouvillian)
    scale = lnorm * np.linalg.norm(rho)
    return Residuals(
        trace_deviation=float(abs(np.trace(rho) - 1.0)),
        liouvillian_residual=float(np.linalg.norm(lrho) / scale) if scale > 0 else 0.0,
        hermiticity_deviation=raw_herm,
        min_eigenvalue=float(scipy.linalg.eigvalsh(rho)[0]),
    )


def _finish(model: QuantumModel, rho: np.ndarray, method: str) -> SteadyStateResult:
    raw_herm = float(np.max(np.abs(rho - rho.conj().T)))
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    return SteadyStateResult(rho, observables(model, rho), _residuals(model, rho, raw_herm), method)


def _constrained_system(model: QuantumModel):
    n = model.dim
    lv = model.liouvillian.tolil()
    # the d rho_00/dt row is redundant (L is trace-free); swap in Tr(rho) = 1
    scale = float(np.max(np.abs(model.liouvillian.data))) if model.liouvillian.nnz else 1.0
    lv[0, :] = 0
    lv[0, np.arange(n) * (n + 1)] = scale
    rhs = np.zeros(n * n, dtype=complex)
    rhs[0] = scale
    return lv.tocsc(), rhs


def _as_matrix(vec: np.ndarray, n: int) -> np.ndarray:
    if not np.all(np.isfinite(vec)):
        raise SteadyStateError("steady-state solve produced non-finite entries")
    return vec.reshape(n, n, order="F")


def _solve_direct(model: QuantumModel) -> np.ndarray:
    a, rhs = _constrained_system(model)
    try:
        lu = spla.splu(a, permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise SteadyStateError(f"Liouvillian is singular beyond the trace constraint: {exc}") from exc
    return _as_matrix(lu.solve(rhs), model.dim)


def _solve_iterative(model: QuantumModel, tol: float) -> np.ndarray:
    a, rhs = _constrained_system(model)
    try:
        ilu = spla.spilu(a, drop_tol=1e-3, fill_factor=20)
    except RuntimeError as exc:
        raise SteadyStateError(f"incomplete factorization failed: {exc}") from exc
    precond = spla.LinearOperator(a.shape, ilu.solve, dtype=complex)
    vec, info = spla.gmres(a, rhs, M=precond, rtol=1e-3 * tol, atol=0.0, restart=100, maxiter=50)
    if info != 0:
        raise NonConvergenceError(f"GMRES did not converge (info={info})")
    return _as_matrix(vec, model.dim)


def steady_state(model: QuantumModel, method: str = "auto", tol: float = 1e-10) -> SteadyStateResult:
    """Kernel of the Liouvillian normalized to unit trace.

    ``"direct"`` factorizes the trace-constrained Liouvillian with a sparse
    LU, ``"iterative"`` uses ILU-preconditioned GMRES and ``"evolve"``
    integrates from the vacuum until the state stops changing. ``"auto"``
    picks direct up to dimension ``DIRECT_MAX_DIM`` and iterative above it,
    falling back to evolution if GMRES stalls. A result whose residual
    exceeds ``tol`` means the kernel is not one-dimensional.
    """
    if method == "auto":
        if model.dim <= DIRECT_MAX_DIM:
            method = "direct"
        else:
            try:
                return steady_state(model, "iterative", tol)
            except NonConvergenceError:
                return steady_state(model, "evolve", tol)
    if method == "direct":
        rho = _solve_direct(model)
    elif method == "iterative":
        rho = _solve_iterative(model, tol)
    elif method == "evolve":
        rho = _relax(model, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    result = _finish(model, rho, method)
    if result.residuals.liouvillian_residual > tol:
        raise SteadyStateError(
            f"steady-state residual {result.residuals.liouvillian_residual:.3e} exceeds {tol:.1e}"
        )
    return result


def max_rate(model: QuantumModel) -> float:
    r = model.rates
    return max(r.kappa, r.gamma, r.g * math.sqrt(model.n_atoms), abs(model.drive.omega), model.drive.epsilon)


def _rk4_steps(lv: sp.csr_matrix, vec: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    for _ in range(n_steps):
        k1 = lv @ vec
        k2 = lv @ (vec + 0.5 * dt * k1)
        k3 = lv @ (vec + 0.5 * dt * k2)
        k4 = lv @ (vec + dt * k3)
        vec = vec + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(vec)):
        raise FloatingPointError("time evolution produced non-finite entries")
    return vec


def evolve(model: QuantumModel, rho0: np.ndarray, t_final: float, dt: float) -> np.ndarray:
    """Fixed-step RK4 integration of d rho/dt = L(rho) up to ``t_final``.

    The last step is shortened so the integration ends exactly at ``t_final``.
    """
    limit = 0.1 / max_rate(model)
    if not (0 < dt < limit):
        raise StepSizeError(f"dt must be in (0, {limit:.4g}), got {dt!r}")
    if not np.all(np.isfinite(rho0)):
        raise FloatingPointError("initial state is not finite")
    n = model.dim
    lv = model.liouvillian
    n_full = int(t_final // dt)
    vec = _rk4_steps(lv, np.asarray(rho0, dtype=complex).reshape(n * n, order="F"), dt, n_full)
    rest = t_final - n_full * dt
    if rest > 1e-12 * dt:
        vec = _rk4_steps(lv, vec, rest, 1)
    return vec.reshape(n, n, order="F")


def vacuum(model: QuantumModel) -> np.ndarray:
    rho = np.zeros((model.dim, model.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _relax(model: QuantumModel, tol: float, max_time_constants: float = 200.0) -> np.ndarray:
    r = model.rates
    dt = 0.05 / max_rate(model)
    chunk = 1.0 / min(r.kappa, 0.5 * r.gamma)
    rho = vacuum(model)
    elapsed = 0.0
    while elapsed < max_time_constants * chunk:
        new = evolve(model, rho, chunk, dt)
        elapsed += chunk
        if np.linalg.norm(model.apply_liouvillian(new)) <= tol * spla.norm(model.liouvillian) * np.linalg.norm(new):
            return new
        rho = new
    raise NonConvergenceError(f"no steady state reached within t = {elapsed:.3g}")


@dataclass(frozen=True)
class InversionBalance:
    """Steady-state balance of d<sum_i s_i^z>/dt.

    With this Hamiltonian, d<sum sz>/dt = 2ig(<a^dag S^-> - <a S^+>) - gamma(<sum sz> + N),
    so ``exchange`` is the first term and ``decay`` the second (without sign).
    """

    exchange: float
    decay: float
    residual: float
    decorrelation_gap: complex


def inversion_balance(model: QuantumModel, ss: SteadyStateResult) -> InversionBalance:
    obs = ss.observables
    g, gamma = model.rates.g, model.rates.gamma
    exchange = (2j * g * (obs.adag_sm - obs.a_sp)).real
    decay = gamma * (sum(obs.sz) + model.n_atoms)
    gap = obs.a_sp - obs.a * obs.collective_sp
    return InversionBalance(exchange, decay, exchange - decay, gap)


@dataclass(frozen=True)
class FluxBalance:
    """Excitation input from the drive against cavity and atomic losses."""

    drive_input: float
    cavity_loss: float
    atom_loss: float

    @property
    def residual(self) -> float:
        return self.drive_input - self.cavity_loss - self.atom_loss

    @property
    def scale(self) -> float:
        return max(abs(self.drive_input), self.cavity_loss, self.atom_loss)


def flux_balance(model: QuantumModel, ss: SteadyStateResult) -> FluxBalance:
    obs = ss.observables
    r = model.rates
    # i<[eps (a + a^dag), a^dag a]> = -2 eps Im<a>
    return FluxBalance(
        drive_input=-2.0 * model.drive.epsilon * obs.a.imag,
        cavity_loss=2.0 * r.kappa * obs.n_photons,
        atom_loss=r.gamma * obs.excited,
    )


def extract_weakfield_amplitudes(model: QuantumModel, ss: SteadyStateResult) -> tuple[complex, complex]:
    """Normalized field and polarization divided by the drive, ``(x/y, p/y)``.

    The field is <a> / sqrt(n_sat) after the drive phase alignment. The
    polarization uses the collective coherence, p sqrt(n_sat) = -(g/kappa) <S^->,
    the weak-field relation between the two for these conventions.
    """
    r = model.rates
    y = model.drive.epsilon / (r.kappa * math.sqrt(r.n_sat))
    if y == 0:
        raise ZeroDriveError("amplitudes are undefined without a drive")
    root_n = math.sqrt(r.n_sat)
    obs = ss.observables
    x_est = DRIVE_PHASE * obs.a / root_n
    p_est = -(r.g / r.kappa) * obs.collective_sm / root_n
    return x_est / y, p_est / y


@dataclass(frozen=True)
class ConvergenceReport:
    n_max_list: tuple[int, ...]
    n_photons: tuple[float, ...]
    adag_sm: tuple[complex, ...]
    converged: bool
    converged_n_max: int | None


def _close(u: complex, v: complex, rtol: float, atol: float) -> bool:
    return abs(u - v) <= max(rtol * max(abs(u), abs(v)), atol)


def convergence_check(
    rates: SystemRates,
    drive: DriveSpec,
    n_atoms: int,
    n_max_list,
    rtol: float = 1e-8,
    atol: float = 1e-14,
) -> ConvergenceReport:
    """Photon number and field-polarization correlator against the Fock cutoff.

    ``converged_n_max`` is the smallest cutoff whose values agree with every
    larger cutoff in the list; the largest cutoff alone never counts.
    """
    n_max_list = tuple(int(n) for n in n_max_list)
    if len(n_max_list) < 2 or any(b <= a for a, b in zip(n_max_list, n_max_list[1:])):
        raise ValueError("n_max_list must be increasing with at least two entries")
    photons, corr = [], []
    for n_max in n_max_list:
        obs = steady_state(build_model(rates, drive, n_max, n_atoms)).observables
        photons.append(obs.n_photons)
        corr.append(obs.adag_sm)
    found = None
    for i in range(len(n_max_list) - 1):
        if all(
            _close(photons[i], photons[j], rtol, atol) and _close(corr[i], corr[j], rtol, atol)
            for j in range(i + 1, len(n_max_list))
        ):
            found = n_max_list[i]
            break
    return ConvergenceReport(n_max_list, tuple(photons), tuple(corr), found is not None, found)
