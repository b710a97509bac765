"""States, measurement bases, and outcome statistics for block-structured qudits.

A d-dimensional bipartite system is partitioned into ell = d // k contiguous
blocks of size k. This module builds the two local measurement bases used by
the protocol (computational, and a block-wise Fourier rotation), evaluates
joint outcome distributions via the Born rule, and projects bipartite states
onto matched block pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGVAL_FLOOR = -1e-10
BASIS_TOL = 1e-10
PROB_FLOOR = -1e-12
PROB_SUM_TOL = 1e-10
BLOCK_WEIGHT_FLOOR = 1e-14


@dataclass(frozen=True)
class SubspaceLayout:
    """Partition of a d-dimensional space into contiguous blocks of size k.

    Attributes:
        d: Total local dimension.
        k: Block size. Must divide d.
    """

    d: int
    k: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be positive, got d={self.d}")
        if self.k < 1:
            raise ValueError(f"block size must be positive, got k={self.k}")
        if self.d % self.k != 0:
            raise ValueError(
                f"block size k={self.k} does not divide dimension d={self.d}"
            )

    @property
    def num_blocks(self) -> int:
        """Number of blocks, d // k."""
        return self.d // self.k

    def block_of(self, index: int) -> int:
        """Block label containing basis index `index`."""
        if not 0 <= index < self.d:
            raise ValueError(f"basis index {index} outside [0, {self.d})")
        return index // self.k

    def block_indices(self, block: int) -> np.ndarray:
        """Basis indices belonging to block `block`, in increasing order."""
        if not 0 <= block < self.num_blocks:
            raise ValueError(f"block {block} outside [0, {self.num_blocks})")
        return np.arange(block * self.k, (block + 1) * self.k)


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density operator.

    Attributes:
        matrix: Square complex matrix, hermitian and unit trace within 1e-12,
            positive semidefinite down to eigenvalues of -1e-10.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.matrix, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        if np.abs(rho - rho.conj().T).max() > HERMITICITY_TOL:
            raise ValueError("density matrix is not hermitian")
        tr = np.trace(rho)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} is not 1")
        eigs = np.linalg.eigvalsh(rho)
        if eigs.min() < EIGVAL_FLOOR:
            raise ValueError(
                f"density matrix has negative eigenvalue {eigs.min():.3e}"
            )
        object.__setattr__(self, "matrix", rho)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MeasurementBasis:
    """Rank-one projective measurement given by a set of basis vectors.

    Attributes:
        label: Basis label, 1 (computational) or 2 (block Fourier).
        party: Which side performs it, "A" or "B".
        vectors: Array of shape (d, d); row x is the outcome-x basis vector.
    """

    label: int
    party: str
    vectors: np.ndarray

    def __post_init__(self) -> None:
        if self.party not in ("A", "B"):
            raise ValueError(f"party must be 'A' or 'B', got {self.party!r}")
        vecs = np.asarray(self.vectors, dtype=complex)
        if vecs.ndim != 2 or vecs.shape[0] != vecs.shape[1]:
            raise ValueError(f"basis vectors must form a square array, got {vecs.shape}")
        gram = vecs @ vecs.conj().T
        if np.abs(gram - np.eye(vecs.shape[0])).max() > BASIS_TOL:
            raise ValueError("basis vectors are not orthonormal")
        object.__setattr__(self, "vectors", vecs)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def projector(self, outcome: int) -> np.ndarray:
        """Rank-one projector onto outcome `outcome`."""
        v = self.vectors[outcome]
        return np.outer(v, v.conj())

    def projectors(self) -> np.ndarray:
        """All projectors, shape (d, d, d), indexed by outcome."""
        return np.einsum("xi,xj->xij", self.vectors, self.vectors.conj())


class MeasurementSet(NamedTuple):
    """Both parties' measurement bases: (A basis 1, A basis 2, B basis 1, B basis 2)."""

    a1: MeasurementBasis
    a2: MeasurementBasis
    b1: MeasurementBasis
    b2: MeasurementBasis


@dataclass(frozen=True)
class JointDistribution:
    """Joint outcome distribution of one basis pair.

    Attributes:
        basis_a: Basis label on side A.
        basis_b: Basis label on side B.
        probs: Array of shape (d, d); probs[x, y] = P(a=x, b=y).
    """

    basis_a: int
    basis_b: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.min() < PROB_FLOOR:
            raise ValueError(f"negative joint probability {p.min():.3e}")
        if abs(p.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"joint probabilities sum to {p.sum()}, not 1")
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))

    @property
    def dim(self) -> int:
        return self.probs.shape[0]


def maximally_entangled_state(d: int) -> np.ndarray:
    """State vector of the canonical maximally entangled pair in dimension d.

    Returns:
        Complex vector of length d*d: sum_i |ii> / sqrt(d).
    """
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * d + np.arange(d)] = 1.0 / np.sqrt(d)
    return psi


def isotropic_state(d: int, visibility: float) -> DensityMatrix:
    """Isotropic state: visibility-weighted mix of the entangled pair and white noise.

    Args:
        d: Local dimension.
        visibility: Mixing weight v in [0, 1] of the entangled component.

    Returns:
        DensityMatrix of the d*d-dimensional bipartite state
        v |psi><psi| + (1 - v)/d^2 * identity.
    """
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility {visibility} outside [0, 1]")
    psi = maximally_entangled_state(d)
    rho = visibility * np.outer(psi, psi.conj())
    rho += (1.0 - visibility) / (d * d) * np.eye(d * d)
    return DensityMatrix(rho)


def build_block_fourier_unitary(layout: SubspaceLayout) -> np.ndarray:
    """Block-diagonal unitary rotating each block by the normalized Fourier matrix.

    Each diagonal block is F_k / sqrt(k) with F_k[a, b] = exp(2 pi i a b / k),
    so the result is unitary.

    Returns:
        Complex array of shape (d, d).
    """
    k = layout.k
    a, b = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    fourier = np.exp(2j * np.pi * a * b / k) / np.sqrt(k)
    u = np.zeros((layout.d, layout.d), dtype=complex)
    for m in range(layout.num_blocks):
        idx = layout.block_indices(m)
        u[np.ix_(idx, idx)] = fourier
    return u


def build_measurements(layout: SubspaceLayout) -> MeasurementSet:
    """Both parties' two measurement bases.

    Basis 1 is computational on both sides. Basis 2 rotates each block by the
    Fourier matrix; the B side uses the elementwise-conjugate rotation, which
    makes basis-2 outcomes perfectly correlated on the maximally entangled
    state.

    Returns:
        MeasurementSet (a1, a2, b1, b2).
    """
    u = build_block_fourier_unitary(layout)
    eye = np.eye(layout.d, dtype=complex)
    # Row x of the vectors array must be U|x> (column x of U), so transpose.
    return MeasurementSet(
        a1=MeasurementBasis(1, "A", eye),
        a2=MeasurementBasis(2, "A", u.T),
        b1=MeasurementBasis(1, "B", eye),
        b2=MeasurementBasis(2, "B", u.conj().T),
    )


def born_joint_distribution(
    state: DensityMatrix,
    basis_a: MeasurementBasis,
    basis_b: MeasurementBasis,
) -> JointDistribution:
    """Joint outcome distribution of local projective measurements on a bipartite state.

    Args:
        state: Bipartite density matrix on a d*d-dimensional space.
        basis_a: Side-A measurement basis (dimension d).
        basis_b: Side-B measurement basis (dimension d).

    Returns:
        JointDistribution with probs[x, y] = Tr[rho (P_x otimes Q_y)].
    """
    d = basis_a.dim
    if basis_b.dim != d or state.dim != d * d:
        raise ValueError(
            f"dimension mismatch: state {state.dim}, bases {basis_a.dim}, {basis_b.dim}"
        )
    rho4 = state.matrix.reshape(d, d, d, d)
    pa = basis_a.projectors()
    pb = basis_b.projectors()
    # Tr[rho (P otimes Q)] = sum_{abcd} rho[ab, cd] P[c, a] Q[d, b]
    probs = np.einsum("abcd,xca,ydb->xy", rho4, pa, pb).real
    return JointDistribution(basis_a.label, basis_b.label, probs)


@dataclass(frozen=True)
class BlockProjection:
    """Result of projecting a bipartite state onto one matched block pair.

    Attributes:
        block: Block label m.
        probability: Weight Tr[(Pi_m otimes Pi_m) rho] of the block.
        state: Renormalized projected state on the k*k-dimensional block
            space, or None when the weight is below 1e-14 (degenerate).
    """

    block: int
    probability: float
    state: DensityMatrix | None = field(default=None)


def project_subspace(
    state: DensityMatrix, block: int, layout: SubspaceLayout
) -> BlockProjection:
    """Project a bipartite state onto the same block on both sides.

    Args:
        state: Bipartite density matrix on a d*d-dimensional space.
        block: Block label m in [0, d // k).
        layout: Block structure; state dimension must equal layout.d ** 2.

    Returns:
        BlockProjection carrying the block weight and, when the weight is
        above the degeneracy floor, the renormalized k^2-dimensional
        conditional state.
    """
    d = layout.d
    if state.dim != d * d:
        raise ValueError(f"state dimension {state.dim} != d^2 = {d * d}")
    idx = layout.block_indices(block)
    joint = (idx[:, None] * d + idx[None, :]).ravel()
    sub = state.matrix[np.ix_(joint, joint)]
    weight = float(np.trace(sub).real)
    if weight < BLOCK_WEIGHT_FLOOR:
        return BlockProjection(block, max(weight, 0.0), None)
    return BlockProjection(block, weight, DensityMatrix(sub / weight))
