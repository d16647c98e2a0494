"""Complex linear algebra and entropy toolbox for small dense matrices.

Everything in this package lives on tensor products of at most a few
qubit-sized factors (total dimension <= 16), so all operations here are
plain dense numpy with explicit validity checks instead of a
general-purpose linear algebra layer.

Conventions:
    * matrices are numpy complex128 arrays in row-major order
    * all entropies are in bits (log base 2)
    * the Bell basis is ordered Phi1 = (|00>+|11>)/sqrt2,
      Phi2 = (|00>-|11>)/sqrt2, Phi3 = (|10>+|01>)/sqrt2,
      Phi4 = (|10>-|01>)/sqrt2
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "MAX_DIM",
    "HERMITICITY_TOL",
    "TRACE_TOL",
    "EIGENVALUE_FLOOR",
    "BELL_VECTORS",
    "DensityOperator",
    "PureState",
    "tensor",
    "partial_trace",
    "eig_hermitian",
    "von_neumann_entropy",
    "binary_entropy",
    "purify",
]

MAX_DIM = 16
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10

_SQRT_HALF = 1.0 / math.sqrt(2.0)

# Rows are the Bell vectors Phi1..Phi4 in the basis |00>,|01>,|10>,|11>.
BELL_VECTORS = np.array(
    [
        [_SQRT_HALF, 0.0, 0.0, _SQRT_HALF],
        [_SQRT_HALF, 0.0, 0.0, -_SQRT_HALF],
        [0.0, _SQRT_HALF, _SQRT_HALF, 0.0],
        [0.0, -_SQRT_HALF, _SQRT_HALF, 0.0],
    ],
    dtype=np.complex128,
)


def _as_dims(dims: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if not out or any(d < 1 for d in out):
        raise ValueError(f"invalid subsystem dimensions {out!r}")
    return out


class DensityOperator:
    """A Hermitian, unit-trace, positive semidefinite matrix on labeled factors.

    Parameters
    ----------
    dims : sequence of int
        Ordered subsystem dimensions, e.g. [2, 2] for two qubits or
        [2, 2, 4] for two qubits plus a four-dimensional environment.
    matrix : array_like
        Square complex matrix of dimension prod(dims).

    The constructor enforces Hermiticity (1e-10), unit trace (1e-10) and
    eigenvalues >= -1e-10.  The eigenvalues found during validation are
    kept so entropy evaluations do not re-diagonalize.
    """

    __slots__ = ("dims", "matrix", "_eigvals")

    def __init__(self, dims: Sequence[int], matrix) -> None:
        self.dims = _as_dims(dims)
        total = int(np.prod(self.dims))
        if total > MAX_DIM:
            raise ValueError(f"total dimension {total} exceeds {MAX_DIM}")
        m = np.asarray(matrix, dtype=np.complex128)
        if m.shape != (total, total):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("matrix is not Hermitian within tolerance")
        tr = m.trace().real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr!r} differs from 1 beyond tolerance")
        eig = np.linalg.eigvalsh(m)
        if eig[0] < EIGENVALUE_FLOOR:
            raise ValueError(f"matrix has negative eigenvalue {eig[0]!r}")
        self.matrix = m
        self._eigvals = eig

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in ascending order (cached from validation)."""
        return self._eigvals.copy()

    def isclose(self, other: "DensityOperator", tol: float = 1e-10) -> bool:
        return self.dims == other.dims and bool(
            np.max(np.abs(self.matrix - other.matrix)) <= tol
        )

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"DensityOperator(dims={self.dims})"


class PureState:
    """A normalized state vector on labeled tensor factors."""

    __slots__ = ("dims", "amplitudes")

    def __init__(self, dims: Sequence[int], amplitudes) -> None:
        self.dims = _as_dims(dims)
        total = int(np.prod(self.dims))
        if total > MAX_DIM:
            raise ValueError(f"total dimension {total} exceeds {MAX_DIM}")
        v = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if v.shape != (total,):
            raise ValueError(f"amplitude length {v.shape[0]} does not match dims {self.dims}")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state norm {norm!r} differs from 1 beyond tolerance")
        self.amplitudes = v

    def to_density(self) -> DensityOperator:
        """Rank-one projector |psi><psi| as a DensityOperator."""
        return DensityOperator(self.dims, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"PureState(dims={self.dims})"


def tensor(a, b):
    """Kronecker product of two states of the same kind.

    Accepts two DensityOperator or two PureState instances; the result
    carries the concatenated subsystem dimensions.
    """
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(a.dims + b.dims, np.kron(a.matrix, b.matrix))
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(a.dims + b.dims, np.kron(a.amplitudes, b.amplitudes))
    raise TypeError("tensor() needs two DensityOperator or two PureState arguments")


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Trace out all subsystems not listed in ``keep``.

    Parameters
    ----------
    rho : DensityOperator
    keep : iterable of int
        Indices (0-based) of the subsystems to retain, in any order;
        the result keeps them in their original order.
    """
    keep_set = sorted(set(int(k) for k in keep))
    n = len(rho.dims)
    if not keep_set:
        raise ValueError("keep must name at least one subsystem")
    if keep_set[0] < 0 or keep_set[-1] >= n:
        raise ValueError(f"subsystem index out of range for dims {rho.dims}")
    if len(keep_set) == n:
        return DensityOperator(rho.dims, rho.matrix)

    dims = list(rho.dims)
    tensor_form = rho.matrix.reshape(dims + dims)
    # Trace out highest indices first so remaining axes keep their positions.
    for idx in sorted(set(range(n)) - set(keep_set), reverse=True):
        tensor_form = np.trace(tensor_form, axis1=idx, axis2=idx + len(dims))
        del dims[idx]
    new_dim = int(np.prod(dims))
    return DensityOperator(dims, tensor_form.reshape(new_dim, new_dim))


def eig_hermitian(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector matrix with orthonormal
    columns) such that ``matrix @ V[:, k] == w[k] * V[:, k]``.  Raises on
    non-Hermitian input (tolerance 1e-10) and on dimensions above 16.
    """
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {m.shape[0]} exceeds {MAX_DIM}")
    if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(m)
    return w, v


def _entropy_from_eigenvalues(eig: np.ndarray) -> float:
    if eig[0] < EIGENVALUE_FLOOR:
        raise ValueError(f"negative eigenvalue {eig[0]!r} beyond roundoff")
    clamped = np.where(eig > 0.0, eig, 0.0)
    nz = clamped[clamped > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def von_neumann_entropy(rho: DensityOperator) -> float:
    """S(rho) = -sum_k e_k log2 e_k over the eigenvalues, in bits.

    Eigenvalues in [-1e-10, 0] are treated as exact zeros (0 log 0 := 0).
    """
    return _entropy_from_eigenvalues(rho.eigenvalues())


def binary_entropy(p: float) -> float:
    """h(p) = -p log2 p - (1-p) log2 (1-p), with h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p!r} outside [0, 1]")
    out = 0.0
    for x in (p, 1.0 - p):
        if x > 0.0:
            out -= x * math.log2(x)
    return out


def purify(spectrum) -> PureState:
    """Purification of a Bell-diagonal two-qubit state.

    Given four weights lam summing to 1, returns the pure state
    sum_i sqrt(lam_i) |Phi_i>_AB |e_i>_E on dims [2, 2, 4], where e_i is
    the standard basis of the environment.  Tracing out the environment
    recovers the Bell-diagonal state with spectrum lam.
    """
    lam = np.asarray(list(spectrum), dtype=np.float64)
    if lam.shape != (4,):
        raise ValueError("spectrum must have exactly four entries")
    if lam.min() < -1e-12:
        raise ValueError(f"negative weight {lam.min()!r} in spectrum")
    if abs(lam.sum() - 1.0) > 1e-10:
        raise ValueError(f"spectrum sums to {lam.sum()!r}, not 1")
    lam = np.where(lam > 0.0, lam, 0.0)

    amplitudes = np.zeros(16, dtype=np.complex128)
    for i in range(4):
        env = np.zeros(4, dtype=np.complex128)
        env[i] = 1.0
        amplitudes += math.sqrt(lam[i]) * np.kron(BELL_VECTORS[i], env)
    return PureState((2, 2, 4), amplitudes)
