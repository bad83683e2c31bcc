"""Spin Hamiltonians, transition matrix elements, and resonance tuning.

Two solid-state electron spins are modelled, each hyperfine-coupled to one
nuclear spin:

* a spin-1 defect with a zero-field splitting ``D``, a symmetry axis tilted
  by ``axis_angle`` from the applied static field, and a longitudinal
  hyperfine coupling ``a_z`` to a spin-1/2 nucleus (6 levels), and
* a spin-1/2 donor with an isotropic hyperfine coupling ``a_hf`` to a
  spin-9/2 nucleus (20 levels).

Basis convention: electron (x) nucleus, magnetic quantum numbers descending
within each factor.  All Hamiltonians are stored divided by hbar, i.e. in
rad/s.  The electron Zeeman term is ``-gamma_e B0.S`` with ``gamma_e``
positive; under this sign convention the stretched-state transition of the
donor that tunes *down* with field carries positive magnetic numbers
(``F=4,mF=+4 -> F=5,mF=+5``), the mirror image (mF -> -mF) of the same
physical transition under the opposite convention.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .constants import GAMMA_E, TWO_PI
from .errors import BracketError
from .numerics import EigenDecomposition, hermitian_eig, kron

__all__ = [
    "SpinOperators",
    "spin_operators",
    "NVParams",
    "BiParams",
    "nv_hamiltonian",
    "bi_hamiltonian",
    "nv_field_vector",
    "TransitionPair",
    "transition_elements",
    "find_transition",
    "coupling_constant",
    "nv_level_labels",
    "bi_level_labels",
    "LevelSweep",
    "sweep_levels",
    "nv_detection_frequency",
    "bi_detection_frequency",
    "resonance_field_search",
]


@dataclass(frozen=True)
class SpinOperators:
    """Cartesian spin operators for one spin-s particle (m descending)."""

    s: float
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @property
    def plus(self) -> np.ndarray:
        return self.x + 1j * self.y

    @property
    def minus(self) -> np.ndarray:
        return self.x - 1j * self.y

    @property
    def dim(self) -> int:
        return self.z.shape[0]


def spin_operators(s: float) -> SpinOperators:
    """Spin-s operators in the |s, m> basis with m = s, s-1, ..., -s.

    Args:
        s: spin quantum number; must be a non-negative multiple of 1/2.

    Returns:
        SpinOperators with (2s+1)-dimensional complex matrices.
    """
    if s < 0 or round(2 * s) != 2 * s:
        raise ValueError(f"spin must be a non-negative half-integer, got {s}")
    dim = int(round(2 * s)) + 1
    m = s - np.arange(dim)
    sz = np.diag(m).astype(complex)
    # S+ |s,m> = sqrt(s(s+1) - m(m+1)) |s,m+1>; with m descending this fills
    # the first superdiagonal.
    raise_amp = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    sp = np.zeros((dim, dim), dtype=complex)
    sp[np.arange(dim - 1), np.arange(1, dim)] = raise_amp
    sm = sp.conj().T
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    return SpinOperators(s=s, x=sx, y=sy, z=sz)


# --------------------------------------------------------------------------
# Parameter sets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NVParams:
    """Spin-1 defect parameters.

    Attributes:
        d: zero-field splitting (rad/s).
        a_z: longitudinal hyperfine coupling to the spin-1/2 nucleus (rad/s).
        axis_angle: angle between the defect axis and the applied static
            field direction (rad).
        b0: nominal static field magnitude (T).
    """

    d: float = TWO_PI * 2.88e9
    a_z: float = TWO_PI * 3.1e6
    axis_angle: float = np.deg2rad(35.3)
    b0: float = 0.7e-3


@dataclass(frozen=True)
class BiParams:
    """Spin-1/2 donor parameters.

    Attributes:
        a_hf: isotropic hyperfine coupling to the spin-9/2 nucleus (rad/s).
        nuclear_spin: nuclear spin quantum number.
        b0: nominal static field magnitude (T).
    """

    a_hf: float = TWO_PI * 1.48e9
    nuclear_spin: float = 4.5
    b0: float = 3.0e-3


def nv_field_vector(p: NVParams, b0: float) -> np.ndarray:
    """Static field of magnitude ``b0`` expressed in the defect frame.

    The field is applied along a fixed laboratory axis that makes an angle
    ``p.axis_angle`` with the defect symmetry axis (the frame z axis); the
    transverse projection is taken along the frame x axis.
    """
    return b0 * np.array([np.sin(p.axis_angle), 0.0, np.cos(p.axis_angle)])


def nv_hamiltonian(p: NVParams, b0_vector) -> np.ndarray:
    """6x6 Hamiltonian/hbar of the spin-1 defect in its own frame (rad/s).

    H/hbar = d Sz^2 - gamma_e B0.S + a_z Iz Sz, with S the electron spin-1
    operators along the defect axes and the nuclear Zeeman term neglected.

    Args:
        p: defect parameters.
        b0_vector: static field components in the defect frame (T).
    """
    b = np.asarray(b0_vector, dtype=float)
    if b.shape != (3,):
        raise ValueError(f"b0_vector must have shape (3,), got {b.shape}")
    bmag = np.linalg.norm(b)
    if bmag > 0 and not (0.1e-3 <= bmag <= 10e-3):
        warnings.warn(
            f"|B0| = {bmag * 1e3:.3g} mT is outside the 0.1-10 mT range where "
            "the low-field treatment is calibrated",
            stacklevel=2,
        )
    s = spin_operators(1.0)
    i = spin_operators(0.5)
    eye_n = np.eye(i.dim)
    sx, sy, sz = (kron(op, eye_n) for op in (s.x, s.y, s.z))
    iz_sz = kron(s.z, i.z)
    return p.d * (sz @ sz) - GAMMA_E * (b[0] * sx + b[1] * sy + b[2] * sz) + p.a_z * iz_sz


def bi_hamiltonian(p: BiParams, b0_vector) -> np.ndarray:
    """20x20 Hamiltonian/hbar of the spin-1/2 donor (rad/s).

    H/hbar = a_hf I.S - gamma_e B0.S, nuclear Zeeman neglected.
    """
    b = np.asarray(b0_vector, dtype=float)
    if b.shape != (3,):
        raise ValueError(f"b0_vector must have shape (3,), got {b.shape}")
    if np.linalg.norm(b) > 50e-3:
        warnings.warn(
            f"|B0| = {np.linalg.norm(b) * 1e3:.3g} mT is no longer small "
            "compared to the hyperfine scale a_hf/gamma_e",
            stacklevel=2,
        )
    s = spin_operators(0.5)
    i = spin_operators(p.nuclear_spin)
    eye_i = np.eye(i.dim)
    sx, sy, sz = (kron(op, eye_i) for op in (s.x, s.y, s.z))
    hyperfine = (
        kron(s.x, i.x) + kron(s.y, i.y) + kron(s.z, i.z)
    )
    return p.a_hf * hyperfine - GAMMA_E * (b[0] * sx + b[1] * sy + b[2] * sz)


def electron_operators_embedded(dim_total: int, electron: SpinOperators) -> tuple:
    """Electron spin operators embedded in the electron (x) nucleus space."""
    if dim_total % electron.dim:
        raise ValueError(
            f"total dimension {dim_total} is not a multiple of the electron "
            f"dimension {electron.dim}"
        )
    eye_n = np.eye(dim_total // electron.dim)
    return tuple(kron(op, eye_n) for op in (electron.x, electron.y, electron.z))


# --------------------------------------------------------------------------
# Transitions and coupling
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionPair:
    """One ordered level pair (lower index first by energy).

    ``element`` is the complex vector (<lo|Sx|hi>, <lo|Sy|hi>, <lo|Sz|hi>)
    in the electron spin operators; ``omega`` = E_hi - E_lo in rad/s.
    """

    lower: int
    upper: int
    omega: float
    element: np.ndarray
    lower_label: str = ""
    upper_label: str = ""


def transition_elements(
    h: np.ndarray,
    electron: SpinOperators,
    labels: list | None = None,
) -> list:
    """All ordered transition pairs of ``h`` with electron-spin elements.

    Args:
        h: Hamiltonian/hbar (rad/s), dimension a multiple of the electron
            dimension (electron factor first).
        electron: electron spin operators to take matrix elements of.
        labels: optional per-level label strings (len = dim of ``h``).

    Returns:
        List of TransitionPair for every pair, lower energy first.
    """
    eig = hermitian_eig(h)
    sx, sy, sz = electron_operators_embedded(eig.dim, electron)
    v = eig.vectors
    mats = [v.conj().T @ op @ v for op in (sx, sy, sz)]
    if labels is None:
        labels = [""] * eig.dim
    pairs = []
    for lo in range(eig.dim):
        for hi in range(lo + 1, eig.dim):
            element = np.array([m[lo, hi] for m in mats])
            pairs.append(
                TransitionPair(
                    lower=lo,
                    upper=hi,
                    omega=float(eig.values[hi] - eig.values[lo]),
                    element=element,
                    lower_label=labels[lo],
                    upper_label=labels[hi],
                )
            )
    return pairs


def find_transition(pairs: list, lower_label: str, upper_label: str) -> TransitionPair:
    """Pick the pair with the given level labels (in either order)."""
    for p in pairs:
        if {p.lower_label, p.upper_label} == {lower_label, upper_label}:
            return p
    raise KeyError(f"no transition {lower_label!r} <-> {upper_label!r} found")


def coupling_constant(element: np.ndarray, delta_b_vector) -> float:
    """Spin-resonator coupling g = gamma_e |delta_B . <lo|S|hi>| (rad/s).

    Args:
        element: complex transition-element vector of the pair.
        delta_b_vector: oscillating-field amplitude at the spin (T, 3-vector).
    """
    db = np.asarray(delta_b_vector, dtype=float)
    if db.shape != (3,):
        raise ValueError(f"delta_b_vector must have shape (3,), got {db.shape}")
    return GAMMA_E * abs(np.dot(db, np.asarray(element)))


# --------------------------------------------------------------------------
# Level labels
# --------------------------------------------------------------------------

def _half_integer_str(two_m: int) -> str:
    sign = "+" if two_m >= 0 else "-"
    return f"{sign}{abs(two_m)}/2"


def nv_level_labels(eig: EigenDecomposition) -> list:
    """Labels 'mS=..,mI=..' from electron/nuclear z projections (6 levels)."""
    s = spin_operators(1.0)
    i = spin_operators(0.5)
    sz = kron(s.z, np.eye(i.dim))
    iz = kron(np.eye(s.dim), i.z)
    labels = []
    for k in range(eig.dim):
        v = eig.vectors[:, k]
        ms = int(round((v.conj() @ sz @ v).real))
        two_mi = int(round(2 * (v.conj() @ iz @ v).real))
        labels.append(f"mS={ms:+d},mI={_half_integer_str(two_mi)}")
    return labels


def bi_level_labels(eig: EigenDecomposition, nuclear_spin: float = 4.5) -> list:
    """Labels 'F=..,mF=..' from total z projection and sector ordering.

    mF is the (conserved, for a longitudinal field) total z projection.
    Within one mF sector the donor has at most two levels; the upper one
    belongs to the F = I + 1/2 multiplet at low field, the lower one to
    F = I - 1/2.  The stretched |mF| = I + 1/2 states are pure F = I + 1/2.
    """
    s = spin_operators(0.5)
    i = spin_operators(nuclear_spin)
    fz = kron(s.z, np.eye(i.dim)) + kron(np.eye(s.dim), i.z)
    f_hi = nuclear_spin + 0.5
    m_of = [int(round((eig.vectors[:, k].conj() @ fz @ eig.vectors[:, k]).real))
            for k in range(eig.dim)]
    labels = []
    for k in range(eig.dim):
        m = m_of[k]
        sector = [j for j in range(eig.dim) if m_of[j] == m]
        if abs(m) == int(f_hi) or k == max(sector, key=lambda j: eig.values[j]):
            f = int(f_hi)
        else:
            f = int(f_hi) - 1
        labels.append(f"F={f},mF={m:+d}")
    return labels


# --------------------------------------------------------------------------
# Field sweeps with adiabatic level tracking
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelSweep:
    """Energies of tracked levels across a static-field sweep.

    ``energies[i, k]`` is the energy (rad/s) of tracked level ``k`` at
    ``b0_values[i]``; ``labels[k]`` names the level, assigned where the
    spectrum is best split (the largest |B0| in the sweep).
    """

    b0_values: np.ndarray
    energies: np.ndarray
    labels: list


def sweep_levels(hamiltonian_of_field, b0_values, label_fn) -> LevelSweep:
    """Diagonalize along a field sweep, tracking levels adiabatically.

    Levels are matched between neighbouring field points by maximum
    eigenvector overlap (solved as an assignment problem), so curves keep
    their identity through avoided crossings.

    Args:
        hamiltonian_of_field: callable b0 -> Hamiltonian/hbar matrix.
        b0_values: 1-D array of field magnitudes (T).
        label_fn: callable EigenDecomposition -> list of label strings.
    """
    b0_values = np.asarray(b0_values, dtype=float)
    eigs = [hermitian_eig(hamiltonian_of_field(b)) for b in b0_values]
    dim = eigs[0].dim
    n_b = len(b0_values)

    # perm[i][k] = column of eigs[i] that continues tracked level k.
    perm = np.empty((n_b, dim), dtype=int)
    perm[0] = np.arange(dim)
    for i in range(1, n_b):
        prev = eigs[i - 1].vectors[:, perm[i - 1]]
        overlap = np.abs(prev.conj().T @ eigs[i].vectors) ** 2
        rows, cols = linear_sum_assignment(-overlap)
        perm[i] = cols[np.argsort(rows)]

    energies = np.stack([eigs[i].values[perm[i]] for i in range(n_b)])

    i_label = int(np.argmax(np.abs(b0_values)))
    raw_labels = label_fn(eigs[i_label])
    labels = [raw_labels[perm[i_label][k]] for k in range(dim)]
    return LevelSweep(b0_values=b0_values, energies=energies, labels=labels)


# --------------------------------------------------------------------------
# Detection transitions and resonance tuning
# --------------------------------------------------------------------------

def nv_detection_frequency(p: NVParams):
    """Frequency of the defect's working transition as a function of field.

    Returns a callable ``f(b0) -> omega`` (rad/s) for the transition from
    (mS=0, mI=+1/2) to (mS=-1, mI=+1/2) with the field applied along the
    defect symmetry axis; under the sign convention used here its frequency
    grows with the field.
    """
    def freq(b0: float) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            eig = hermitian_eig(nv_hamiltonian(p, np.array([0.0, 0.0, b0])))
        labels = nv_level_labels(eig)
        lo = labels.index("mS=+0,mI=+1/2")
        hi = labels.index("mS=-1,mI=+1/2")
        return float(eig.values[hi] - eig.values[lo])

    return freq


def bi_detection_frequency(p: BiParams):
    """Frequency of the donor's working transition as a function of field.

    Returns a callable ``f(b0) -> omega`` (rad/s) for the stretched-state
    pair whose frequency *decreases* with field — under the sign convention
    used here, (F=4, mF=+4) -> (F=5, mF=+5) — so it can be tuned down into
    resonance with a resonator placed below the zero-field splitting.
    """
    f_hi = int(p.nuclear_spin + 0.5)

    def freq(b0: float) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            eig = hermitian_eig(bi_hamiltonian(p, np.array([0.0, 0.0, b0])))
        labels = bi_level_labels(eig, p.nuclear_spin)
        lo = labels.index(f"F={f_hi - 1},mF=+{f_hi - 1}")
        hi = labels.index(f"F={f_hi},mF=+{f_hi}")
        return float(eig.values[hi] - eig.values[lo])

    return freq


def resonance_field_search(
    frequency_of_field,
    omega_target: float,
    b_lo: float,
    b_hi: float,
    omega_tol: float = TWO_PI * 1e3,
) -> float:
    """Field magnitude at which a transition meets a target frequency.

    Bracketed root search of ``frequency_of_field(b) - omega_target`` on
    [b_lo, b_hi].

    Args:
        frequency_of_field: callable b0 (T) -> transition frequency (rad/s).
        omega_target: target frequency (rad/s).
        b_lo, b_hi: search bracket (T).
        omega_tol: acceptance tolerance on the residual (rad/s).

    Raises:
        BracketError: if the bracket does not straddle the target.
    """
    f_lo = frequency_of_field(b_lo) - omega_target
    f_hi = frequency_of_field(b_hi) - omega_target
    if f_lo == 0.0:
        return b_lo
    if f_hi == 0.0:
        return b_hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(
            f"target not bracketed on [{b_lo}, {b_hi}] T: residuals "
            f"{f_lo:.6g} and {f_hi:.6g} rad/s have the same sign"
        )
    b = brentq(lambda x: frequency_of_field(x) - omega_target, b_lo, b_hi,
               xtol=1e-12, rtol=1e-14)
    residual = abs(frequency_of_field(b) - omega_target)
    if residual > omega_tol:
        raise BracketError(
            f"root search stalled: residual {residual:.6g} rad/s exceeds "
            f"tolerance {omega_tol:.6g} rad/s"
        )
    return float(b)
