"""Dense state vectors on tensor products of small local spaces."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StateVector:
    """Amplitudes over the computational basis of a tensor-product space.

    ``dims`` lists the local dimensions; their product is the vector length.
    """

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if math.prod(self.dims) != amps.size:
            raise ValueError(
                f"dims {self.dims} incompatible with vector of length {amps.size}"
            )

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm < 1e-14:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / nrm, self.dims)

    def require_normalized(self, tol: float = 1e-10) -> "StateVector":
        if abs(self.norm() - 1.0) > tol:
            raise ValueError(f"state norm {self.norm()} is not 1 within {tol}")
        return self

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(self.overlap(other)) ** 2)

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(
            np.kron(self.amplitudes, other.amplitudes), self.dims + other.dims
        )

    def amplitude_matrix(self) -> np.ndarray:
        """For a bipartite state, the matrix M with |phi> = (M x 1)|Omega>."""
        if len(self.dims) != 2:
            raise ValueError("amplitude_matrix needs a bipartite state")
        return self.amplitudes.reshape(self.dims)

    def schmidt_coefficients(self) -> np.ndarray:
        """Squared singular values of the amplitude matrix, non-increasing."""
        svals = np.linalg.svd(self.amplitude_matrix(), compute_uv=False)
        return svals**2

    def reduced_density(self, keep: int = 0) -> np.ndarray:
        """Partial trace of a bipartite pure state onto one side."""
        m = self.amplitude_matrix()
        if keep == 0:
            return m @ m.conj().T
        return m.T @ m.conj()


def basis_state(index: int, dims: tuple[int, ...]) -> StateVector:
    vec = np.zeros(math.prod(dims), dtype=complex)
    vec[index] = 1.0
    return StateVector(vec, dims)


def bell_state(d: int = 2) -> StateVector:
    """Maximally entangled d x d state, flat Schmidt spectrum."""
    m = np.eye(d, dtype=complex) / math.sqrt(d)
    return StateVector(m.reshape(-1), (d, d))


def product_state(d: int = 2) -> StateVector:
    """|00>: the extreme case with largest Schmidt coefficient 1."""
    return basis_state(0, (d, d))


def state_from_schmidt(spectrum) -> StateVector:
    """Bipartite state sum_k sqrt(p_k)|kk> with the given Schmidt spectrum."""
    p = np.asarray(spectrum, dtype=float)
    d = p.size
    m = np.diag(np.sqrt(p)).astype(complex)
    return StateVector(m.reshape(-1), (d, d))


def bipartite_tensor_power(phi: StateVector, n: int) -> np.ndarray:
    """Matrix of |phi>^{(x)n} with row = joint A index, column = joint B index.

    The n-fold power of a bipartite state interleaves A and B factors; this
    reorders them to (A_1..A_n, B_1..B_n) and reshapes to a d^n x d^n matrix,
    which equals the n-fold Kronecker power of the amplitude matrix.
    """
    m = phi.amplitude_matrix()
    out = np.array([[1.0 + 0j]])
    for _ in range(n):
        out = np.kron(out, m)
    return out
