"""Dense Hermitian eigensolves, tensor products, and seeded Gaussian streams.

Conventions used throughout the package:

* Eigenvalues are returned in ascending order.
* Each eigenvector is rephased so that its largest-magnitude component is
  real and positive.  Within a degenerate cluster the vectors are ordered
  by the row index of that component, which makes the decomposition of a
  given matrix fully deterministic.
* Noise streams are numpy ``Generator`` objects (PCG64).  Per-trial
  streams are derived from a master seed with
  ``SeedSequence(master_seed, spawn_key=(trial_index,))``, so trial ``i``
  draws the same increments no matter how trials are batched or ordered.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EigenDecomposition",
    "hermitian_eig",
    "kron",
    "GaussianStream",
    "gaussian_increment",
]


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (ascending) and column eigenvectors of a Hermitian matrix."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def hermitian_eig(m: np.ndarray, hermiticity_rtol: float = 1e-10) -> EigenDecomposition:
    """Diagonalize a Hermitian matrix with a deterministic basis convention.

    Args:
        m: square matrix, Hermitian to within ``hermiticity_rtol * ||m||``.
        hermiticity_rtol: relative tolerance of the Hermiticity check.

    Returns:
        EigenDecomposition with ascending eigenvalues; eigenvector ``k`` is
        ``vectors[:, k]``, rephased so its largest-magnitude component is
        real positive.  Degenerate clusters are ordered by the row index of
        that component.

    Raises:
        ValueError: if ``m`` is not square or not Hermitian within tolerance.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = np.linalg.norm(m)
    asym = np.abs(m - m.conj().T).max()
    if scale > 0 and asym > hermiticity_rtol * scale:
        raise ValueError(
            f"matrix is not Hermitian: max |m - m^†| = {asym:.3e} "
            f"exceeds {hermiticity_rtol:.1e} * ||m|| = {hermiticity_rtol * scale:.3e}"
        )
    values, vectors = np.linalg.eigh(m)

    # Fix the phase of every eigenvector: largest-|.| component real positive.
    lead = np.argmax(np.abs(vectors), axis=0)
    amp = vectors[lead, np.arange(vectors.shape[1])]
    phases = np.where(np.abs(amp) > 0, amp / np.abs(np.where(amp == 0, 1, amp)), 1.0)
    vectors = vectors / phases

    # Deterministic order inside degenerate clusters: sort by lead index.
    tol = 1e-8 * max(np.abs(values).max(), 1.0)
    order = np.arange(values.size)
    start = 0
    while start < values.size:
        stop = start + 1
        while stop < values.size and values[stop] - values[stop - 1] <= tol:
            stop += 1
        if stop - start > 1:
            lead_in_cluster = np.argmax(np.abs(vectors[:, start:stop]), axis=0)
            order[start:stop] = start + np.argsort(lead_in_cluster, kind="stable")
        start = stop
    return EigenDecomposition(values=values[order], vectors=vectors[:, order])


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product (thin wrapper so the convention has a single home)."""
    return np.kron(np.asarray(a), np.asarray(b))


@dataclass
class GaussianStream:
    """Seeded Gaussian noise stream for Wiener increments.

    The same seed always reproduces the same draws bit for bit.  Use
    :meth:`for_trial` to derive independent per-trial streams from a master
    seed with a documented, order-independent splitting rule.
    """

    seed: int
    spawn_key: tuple = ()
    _gen: np.random.Generator = field(init=False, repr=False)
    _count: int = field(init=False, default=0)

    def __post_init__(self):
        seq = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    @classmethod
    def for_trial(cls, master_seed: int, trial_index: int) -> "GaussianStream":
        """Stream of trial ``trial_index`` derived from ``master_seed``."""
        return cls(seed=master_seed, spawn_key=(trial_index,))

    @property
    def position(self) -> int:
        """Number of Gaussian variates drawn so far."""
        return self._count

    def standard(self, n: int) -> np.ndarray:
        """``n`` draws of N(0, 1)."""
        self._count += int(n)
        return self._gen.standard_normal(n)

    def increments(self, dt: float, n: int) -> np.ndarray:
        """``n`` Wiener increments: N(0, sqrt(dt)) each."""
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        return np.sqrt(dt) * self.standard(n)


def gaussian_increment(stream: GaussianStream, dt: float) -> float:
    """One Wiener increment N(0, sqrt(dt)) drawn from ``stream``."""
    return float(stream.increments(dt, 1)[0])
