"""Dense operator algebra for small spin-1/2 registers.

Everything here works with full complex double-precision matrices, which is
the right tool up to the dense cap of twelve spins: repeated exact
eigendecompositions beat any sparse scheme at these sizes and keep every
downstream quantity reproducible to machine precision.

Basis convention, shared by all modules: computational z basis, ordered
lexicographically with site 1 as the most significant tensor factor, and
sigma_z |up> = +|up> (a cleared bit means spin up). The convention is
internal; every reported scalar is invariant under the global spin flip.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import (CapacityError, ContractViolationError,
                     InvalidOutcomeError)

DENSE_CAP = 12
HERM_TOL = 1e-12
PSD_FLOOR = -1e-10

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def _check_axis(axis: str) -> str:
    if axis not in _PAULI:
        raise ContractViolationError(f"unknown Pauli axis {axis!r}")
    return axis


def _check_cap(n: int, cap: int = DENSE_CAP) -> int:
    if n < 1:
        raise ContractViolationError(f"need at least one site, got n={n}")
    if n > cap:
        raise CapacityError(f"n={n} exceeds the dense cap of {cap} spins")
    return n


@dataclass(frozen=True, eq=False)
class Operator:
    """A dense complex operator on the full register Hilbert space."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def n(self) -> int:
        return self.dim.bit_length() - 1

    @cached_property
    def is_hermitian(self) -> bool:
        scale = 1.0 + float(np.abs(self.mat).max(initial=0.0))
        gap = float(np.abs(self.mat - self.mat.conj().T).max(initial=0.0))
        return gap <= HERM_TOL * scale


def as_operator(mat: np.ndarray) -> Operator:
    """Wrap a square matrix, validating the power-of-two dimension."""
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ContractViolationError("operator must be a square matrix")
    dim = mat.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise ContractViolationError(f"dimension {dim} is not a power of two")
    return Operator(mat)


def _mat(op) -> np.ndarray:
    return op.mat if isinstance(op, (Operator, QuantumState)) else np.asarray(op, dtype=complex)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """A density matrix; purity is cached on first access."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def n(self) -> int:
        return self.dim.bit_length() - 1

    @cached_property
    def purity(self) -> float:
        # trace(rho^2) = squared Frobenius norm for a Hermitian matrix
        return float(np.vdot(self.mat, self.mat).real)


def as_state(mat: np.ndarray, check: bool = True) -> QuantumState:
    """Wrap a density matrix, optionally verifying trace, hermiticity, PSD.

    The PSD check runs a full eigensolve, so internal constructions that are
    positive by construction pass check=False.
    """
    mat = np.asarray(mat, dtype=complex)
    state = QuantumState(mat)
    if check:
        check_state(state)
    return state


def check_state(state: QuantumState) -> None:
    """Raise unless the matrix is a valid density matrix."""
    mat = state.mat
    tr = complex(np.trace(mat))
    if abs(tr - 1.0) > 1e-12:
        raise ContractViolationError(f"state trace {tr} is not 1")
    scale = 1.0 + float(np.abs(mat).max(initial=0.0))
    if float(np.abs(mat - mat.conj().T).max(initial=0.0)) > HERM_TOL * scale:
        raise ContractViolationError("state is not Hermitian")
    evals = np.linalg.eigvalsh(mat)
    if float(evals.min()) < PSD_FLOOR:
        raise ContractViolationError(
            f"state has eigenvalue {evals.min():.3e} below the PSD floor")


def pure_state(vec: np.ndarray) -> QuantumState:
    """Density matrix of a normalized state vector."""
    vec = np.asarray(vec, dtype=complex)
    nrm = np.linalg.norm(vec)
    if not np.isfinite(nrm) or nrm < 1e-300:
        raise ContractViolationError("cannot normalize a null vector")
    vec = vec / nrm
    return QuantumState(np.outer(vec, vec.conj()))


@dataclass(frozen=True, eq=False)
class AdditiveObservable:
    """A sum of single-site operators, one (c_x, c_y, c_z) triple per site."""

    site_coeffs: np.ndarray
    uniform: bool = False

    @property
    def n(self) -> int:
        return self.site_coeffs.shape[0]

    def realize(self, cap: int = DENSE_CAP) -> Operator:
        """Dense matrix sum_i (c_x sigma_x^i + c_y sigma_y^i + c_z sigma_z^i)."""
        n = _check_cap(self.n, cap)
        dim = 1 << n
        out = np.zeros((dim, dim), dtype=complex)
        for site in range(1, n + 1):
            cx, cy, cz = self.site_coeffs[site - 1]
            for coeff, axis in ((cx, "x"), (cy, "y"), (cz, "z")):
                if coeff != 0.0:
                    out += coeff * pauli_site(axis, site, n, cap).mat
        return Operator(out)


def additive_observable(site_coeffs, uniform: bool | None = None) -> AdditiveObservable:
    """Build an AdditiveObservable from an (n, 3) coefficient array."""
    coeffs = np.ascontiguousarray(np.asarray(site_coeffs, dtype=float))
    if coeffs.ndim != 2 or coeffs.shape[1] != 3 or coeffs.shape[0] < 1:
        raise ContractViolationError("site_coeffs must have shape (n, 3)")
    coeffs.setflags(write=False)
    if uniform is None:
        uniform = bool(np.all(coeffs == coeffs[0]))
    return AdditiveObservable(coeffs, uniform)


def total_magnetization(axis: str, n: int) -> AdditiveObservable:
    """The uniform additive observable sum_i sigma_axis^i."""
    _check_axis(axis)
    if n < 1:
        raise ContractViolationError(f"need at least one site, got n={n}")
    triple = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}[axis]
    return additive_observable(np.tile(triple, (n, 1)), uniform=True)


def uniform_observable(direction, n: int) -> AdditiveObservable:
    """Uniform additive observable along a unit three-vector."""
    d = np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(d)
    if not np.isfinite(nrm) or nrm < 1e-12:
        raise ContractViolationError("direction must be a nonzero vector")
    return additive_observable(np.tile(d / nrm, (n, 1)), uniform=True)


@lru_cache(maxsize=None)
def pauli_site(axis: str, site: int, n: int, cap: int = DENSE_CAP) -> Operator:
    """sigma_axis acting on one site of an n-spin register.

    Sites are numbered 1..n with site 1 as the most significant factor.
    """
    _check_axis(axis)
    _check_cap(n, cap)
    if not 1 <= site <= n:
        raise ContractViolationError(f"site {site} out of range 1..{n}")
    left = np.eye(1 << (site - 1), dtype=complex)
    right = np.eye(1 << (n - site), dtype=complex)
    mat = np.kron(np.kron(left, _PAULI[axis]), right)
    mat.setflags(write=False)
    return Operator(mat)


@lru_cache(maxsize=None)
def mz_values(n: int) -> np.ndarray:
    """Total sigma_z eigenvalue of every computational basis state."""
    idx = np.arange(1 << n)
    ones = np.array([bin(k).count("1") for k in idx])
    vals = n - 2 * ones
    vals.setflags(write=False)
    return vals


def apply_additive(obs: AdditiveObservable, block: np.ndarray) -> np.ndarray:
    """Apply the realized observable to a (dim, k) block of column vectors.

    Matrix-free: each site contributes a bit flip (x), a phased bit flip (y)
    or a diagonal sign (z), so the cost is O(n * dim * k) instead of a dense
    matmul. Agrees with realize() to machine precision.
    """
    n = obs.n
    dim = 1 << n
    block = np.asarray(block, dtype=complex)
    squeeze = block.ndim == 1
    if squeeze:
        block = block[:, None]
    if block.shape[0] != dim:
        raise ContractViolationError("block dimension does not match n")
    idx = np.arange(dim)
    out = np.zeros_like(block)
    for site in range(n):
        cx, cy, cz = obs.site_coeffs[site]
        bit = 1 << (n - 1 - site)
        sign = np.where(idx & bit, -1.0, 1.0)[:, None]
        if cx != 0.0 or cy != 0.0:
            flipped = block[idx ^ bit]
            if cx != 0.0:
                out += cx * flipped
            if cy != 0.0:
                out += (-1j * cy) * sign * flipped
        if cz != 0.0:
            out += cz * sign * block
    return out[:, 0] if squeeze else out


def mz_projector(n: int, m: int, cap: int = DENSE_CAP) -> Operator:
    """Projector onto the total-magnetization sector M_z = m."""
    _check_cap(n, cap)
    _check_outcome_parity(n, m)
    diag = (mz_values(n) == m).astype(complex)
    return Operator(np.diag(diag))


def mz_interval_projector(n: int, m_lo: int, m_hi: int, cap: int = DENSE_CAP) -> Operator:
    """Projector onto m_lo <= M_z <= m_hi.

    Equals the sum of mz_projector over the parity-valid magnetizations in
    the window; raises if the window contains none.
    """
    _check_cap(n, cap)
    if m_lo > m_hi:
        raise InvalidOutcomeError(f"empty interval [{m_lo}, {m_hi}]")
    vals = mz_values(n)
    mask = (vals >= m_lo) & (vals <= m_hi)
    if not mask.any():
        raise InvalidOutcomeError(
            f"no parity-valid magnetization in [{m_lo}, {m_hi}] at n={n}")
    return Operator(np.diag(mask.astype(complex)))


def _check_outcome_parity(n: int, m: int) -> None:
    if abs(m) > n or (n + m) % 2:
        raise InvalidOutcomeError(
            f"magnetization {m} is not reachable with {n} spins")


def snap_interval(n: int, m_lo: int, m_hi: int) -> tuple[int, int]:
    """Snap raw interval endpoints inward to the parity-valid lattice."""
    lo = max(int(m_lo), -n)
    hi = min(int(m_hi), n)
    if (n + lo) % 2:
        lo += 1
    if (n + hi) % 2:
        hi -= 1
    if lo > hi:
        raise InvalidOutcomeError(
            f"no parity-valid magnetization in [{m_lo}, {m_hi}] at n={n}")
    return lo, hi


def _require_hermitian(mat: np.ndarray, what: str) -> np.ndarray:
    scale = 1.0 + float(np.abs(mat).max(initial=0.0))
    if float(np.abs(mat - mat.conj().T).max(initial=0.0)) > HERM_TOL * scale:
        raise ContractViolationError(f"{what} must be Hermitian")
    return mat


def herm_expm(h_op, scale: float) -> Operator:
    """exp(scale * H) for Hermitian H, via full eigendecomposition.

    Spectral mapping is exact and the spectrum is reused elsewhere, so no
    scaling-and-squaring is involved.
    """
    mat = _require_hermitian(_mat(h_op), "herm_expm input")
    w, v = np.linalg.eigh(mat)
    out = (v * np.exp(scale * w)) @ v.conj().T
    out = 0.5 * (out + out.conj().T)
    return Operator(out)


def unitary_evolution(h_op, t: float) -> Operator:
    """Propagator exp(-i H t) for Hermitian H."""
    mat = _require_hermitian(_mat(h_op), "propagator input")
    w, v = np.linalg.eigh(mat)
    return Operator((v * np.exp(-1j * w * t)) @ v.conj().T)


def double_commutator(a, eta) -> Operator:
    """[A, [A, eta]] = A A eta - 2 A eta A + eta A A."""
    amat = _mat(a)
    emat = _mat(eta)
    if amat.shape != emat.shape:
        raise ContractViolationError("double_commutator dimension mismatch")
    ae = amat @ emat
    out = amat @ ae - 2.0 * ae @ amat + emat @ amat @ amat
    return Operator(out)


def trace_norm(op) -> float:
    """Sum of absolute eigenvalues of a Hermitian operator."""
    mat = _require_hermitian(_mat(op), "trace_norm input")
    return float(np.abs(np.linalg.eigvalsh(mat)).sum())
