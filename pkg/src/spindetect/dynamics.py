"""Open-system dynamics of the driven spin-resonator detector.

Three tiers of model are implemented:

* the full spin (x) cavity Lindblad master equation in a truncated Fock
  space (the reference model),
* the adiabatically eliminated spin-only master equation valid in the
  bad-cavity regime (kappa >> g), and
* the conditioned stochastic master equation (SME, Ito convention) for that
  spin-only model under continuous homodyne monitoring of the reflected
  drive, which also emits the measurement record dY.

Conventions
-----------
Frequencies and rates are angular (rad/s).  The two-level basis is ordered
(excited, ground), so sigma_z = diag(1, -1), sigma_minus = [[0,0],[1,0]] and
the ground state is diag(0, 1).  kappa is the *field* (amplitude) decay rate
of the cavity, so the cavity jump operator is sqrt(2 kappa) a.  The record
increment is dY = eta <c_m + c_m^dag> dt + sqrt(eta) dW with dW a Wiener
increment of variance dt, c_m = e^{-i theta} c_out, and c_out the output
field of the driven resonator.

Stepping scheme
---------------
Time stepping uses the measurement-operator (Kraus) completion of the
Euler-Maruyama step: the state is advanced by

    rho' ~ M rho M^dag + sum_j R_j rho R_j^dag dt,     (then renormalized)

with M = 1 + (-iH - (1/2) sum_j c_j^dag c_j) dt + sqrt(eta) c~ z, where c~
is the operator part of the measurement operator, z the measured channel
increment, and R_j the unmonitored residual channels.  Expanding in dt shows
this agrees with explicit Euler-Maruyama to the same (first) order, but the
right-hand side is a sum of congruences, so the state stays positive
semidefinite by construction at any step size — plain Euler steps acquire
O((rate*dt)^2) negative eigenvalues from pure states, which would violate
the positivity budget enforced here.
"""

import hashlib
import json
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .device import purcell_rate, saturation_amplitude
from .errors import FockTruncationError, NumericalFailure, PositivityError
from .numerics import GaussianStream, kron

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "SIGMA_MINUS",
    "SIGMA_PLUS",
    "ModelParams",
    "ground_state",
    "excited_state",
    "bloch_expectations",
    "steady_alpha",
    "saturation_drive",
    "effective_spin_generator",
    "measurement_scalars",
    "steady_sigma_minus",
    "steady_sigma_z",
    "steady_state_effective",
    "output_noise_integral",
    "sme_max_rate",
    "default_sme_dt",
    "check_sme_dt",
    "full_max_rate",
    "default_full_dt",
    "check_full_dt",
    "BatchEffectiveStepper",
    "sme_step",
    "HomodyneRecord",
    "TrajectoryResult",
    "generate_record",
    "liouvillian",
    "steady_state_from_liouvillian",
    "effective_liouvillian",
    "evolve_liouvillian",
    "fock_annihilation",
    "coherent_state_vector",
    "full_operators",
    "full_hamiltonian",
    "full_jump_operators",
    "full_liouvillian",
    "full_steady_state",
    "full_initial_state",
    "lindblad_step_full",
    "evolve_full",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T

#: Budget below which a sampled density-matrix eigenvalue counts as a
#: positivity failure (trials violating it are aborted, not clipped).
POSITIVITY_FLOOR = -1e-8

#: Population allowed in the top Fock level before truncation is flagged.
FOCK_LEAKAGE_LIMIT = 1e-6

#: Hard cap on rate*dt enforced by the step-size preconditions.
STEP_BUDGET = 0.01


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the reduced spin + cavity measurement model.

    Attributes:
        g: spin-resonator coupling (rad/s).
        kappa: cavity field decay rate (1/s).
        kappa_1: decay through the measured coupler (1/s); None means kappa
            (no internal loss).
        gamma_phi: pure dephasing rate (1/s).
        gamma_dec: intrinsic (non-Purcell) spin decay rate (1/s).
        delta_r: resonator-drive detuning (rad/s).
        delta_s: spin-drive detuning (rad/s).
        beta: drive amplitude, (photon flux)^1/2; real positive by default
            so theta = 0 maximizes the signal.
        eta: overall measurement efficiency in (0, 1].
        theta: homodyne local-oscillator phase (rad).
        n_fock: Fock-space truncation of the full model (>= 4).
    """

    g: float
    kappa: float
    kappa_1: float | None = None
    gamma_phi: float = 0.0
    gamma_dec: float = 0.0
    delta_r: float = 0.0
    delta_s: float = 0.0
    beta: complex = 0.0 + 0.0j
    eta: float = 1.0
    theta: float = 0.0
    n_fock: int = 8

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.kappa_1 is None:
            object.__setattr__(self, "kappa_1", self.kappa)
        if not 0 < self.kappa_1 <= self.kappa * (1 + 1e-12):
            raise ValueError(
                f"kappa_1 = {self.kappa_1} must lie in (0, kappa = {self.kappa}]"
            )
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.g < 0 or self.gamma_phi < 0 or self.gamma_dec < 0:
            raise ValueError("g, gamma_phi and gamma_dec must be non-negative")
        if int(self.n_fock) != self.n_fock or self.n_fock < 4:
            raise ValueError(f"n_fock must be an integer >= 4, got {self.n_fock}")
        object.__setattr__(self, "n_fock", int(self.n_fock))
        object.__setattr__(self, "beta", complex(self.beta))

    # -- derived rates -----------------------------------------------------
    @property
    def delta_rs(self) -> float:
        """Resonator-spin detuning (rad/s)."""
        return self.delta_r - self.delta_s

    @property
    def gamma_p(self) -> float:
        return purcell_rate(self.g, self.kappa, self.delta_rs) if self.g else 0.0

    @property
    def gamma_1(self) -> float:
        return self.gamma_dec + self.gamma_p

    @property
    def gamma_2(self) -> float:
        return self.gamma_1 / 2.0 + self.gamma_phi

    @property
    def epsilon_s(self) -> float:
        """Drive-induced (cavity-pull) frequency shift of the spin (rad/s)."""
        return self.delta_rs * self.g**2 / (self.kappa**2 + self.delta_rs**2)

    @property
    def delta_eff(self) -> float:
        """Effective spin detuning including the cavity pull (rad/s)."""
        return self.delta_s - self.epsilon_s

    @property
    def tau_1(self) -> float:
        """Unit signal-to-noise integration time kappa^2 gamma_2 / g^4 (s)."""
        if self.g <= 0:
            raise ValueError("tau_1 undefined for g = 0")
        return self.kappa**2 * self.gamma_2 / self.g**4

    def with_updates(self, **kw) -> "ModelParams":
        return replace(self, **kw)

    def params_hash(self) -> str:
        payload = {
            "g": self.g,
            "kappa": self.kappa,
            "kappa_1": self.kappa_1,
            "gamma_phi": self.gamma_phi,
            "gamma_dec": self.gamma_dec,
            "delta_r": self.delta_r,
            "delta_s": self.delta_s,
            "beta": [self.beta.real, self.beta.imag],
            "eta": self.eta,
            "theta": self.theta,
            "n_fock": self.n_fock,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def ground_state() -> np.ndarray:
    return np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


def excited_state() -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def bloch_expectations(rho: np.ndarray) -> tuple:
    """(<sigma_x>, <sigma_y>, <sigma_z>) of a 2x2 density matrix."""
    sm = rho[0, 1]  # tr(sigma_minus rho)
    return 2.0 * sm.real, -2.0 * sm.imag, float((rho[0, 0] - rho[1, 1]).real)


# --------------------------------------------------------------------------
# Steady state of the driven cavity and of the effective spin model
# --------------------------------------------------------------------------

def steady_alpha(p: ModelParams) -> complex:
    """Steady coherent amplitude of the empty driven cavity."""
    return np.sqrt(2.0 * p.kappa_1) * p.beta / (p.kappa + 1j * p.delta_r)


def saturation_drive(p: ModelParams) -> tuple:
    """(|alpha|_sat, beta_sat): intracavity amplitude saturating the spin,
    and the drive amplitude that produces it at this cavity detuning."""
    alpha_sat = saturation_amplitude(p.g, p.gamma_1, p.gamma_2)
    beta_sat = alpha_sat * abs(p.kappa + 1j * p.delta_r) / np.sqrt(2.0 * p.kappa_1)
    return alpha_sat, beta_sat


def effective_spin_generator(p: ModelParams) -> tuple:
    """Spin-only Hamiltonian and jump operators after cavity elimination.

    H_eff = (delta_s/2) sigma_z + g(alpha sigma_+ + alpha* sigma_-)
            - epsilon_s sigma_+ sigma_-,
    jumps = sqrt(gamma_p) sigma_-, sqrt(gamma_dec) sigma_-,
            sqrt(gamma_phi/2) sigma_z.

    Valid in the bad-cavity regime; a warning is issued when kappa < 5 g.
    """
    if p.kappa < 5.0 * p.g:
        warnings.warn(
            f"kappa/g = {p.kappa / p.g:.2f} < 5: the cavity is not fast compared "
            "to the coupling, so the eliminated model is only qualitative",
            stacklevel=2,
        )
    alpha = steady_alpha(p)
    h_eff = (
        0.5 * p.delta_s * SIGMA_Z
        + p.g * (alpha * SIGMA_PLUS + np.conj(alpha) * SIGMA_MINUS)
        - p.epsilon_s * (SIGMA_PLUS @ SIGMA_MINUS)
    )
    jumps = [
        np.sqrt(p.gamma_p) * SIGMA_MINUS,
        np.sqrt(p.gamma_dec) * SIGMA_MINUS,
        np.sqrt(p.gamma_phi / 2.0) * SIGMA_Z,
    ]
    return h_eff, jumps


def measurement_scalars(p: ModelParams) -> tuple:
    """Coefficients (c0, c1) of the measured output field c_m = c0 + c1 sigma_-.

    c0 is the reflected bare drive and c1 the spin-emission coefficient,
    both already rotated by the local-oscillator phase.
    """
    phase = np.exp(-1j * p.theta)
    c0 = phase * (2.0 * p.kappa_1 / (p.kappa + 1j * p.delta_r) - 1.0) * p.beta
    c1 = phase * (-1j) * np.sqrt(2.0 * p.kappa_1) * p.g / (p.kappa + 1j * p.delta_rs)
    return complex(c0), complex(c1)


def steady_sigma_minus(p: ModelParams) -> complex:
    """Steady <sigma_-> of the driven, damped spin (closed form).

    Derived from the Bloch equations of the eliminated model:
        <sigma_->ss = -i g alpha gamma_1 w* / (gamma_1 |w|^2
                       + 4 g^2 |alpha|^2 gamma_2),
    with w = gamma_2 + i(delta_s - epsilon_s).  At zero detuning and
    |alpha| = |alpha|_sat this reduces to -(i sqrt(2)/4) g / sqrt(gamma_2 kappa)
    (radiatively limited: -i sqrt(2)/4).
    """
    alpha = steady_alpha(p)
    if alpha == 0:
        return 0.0 + 0.0j
    w = p.gamma_2 + 1j * p.delta_eff
    denom = p.gamma_1 * (w * np.conj(w)).real + 4.0 * p.g**2 * abs(alpha) ** 2 * p.gamma_2
    return complex(-1j * p.g * alpha * p.gamma_1 * np.conj(w) / denom)


def steady_sigma_z(p: ModelParams) -> float:
    """Steady <sigma_z> of the driven, damped spin (closed form)."""
    alpha = steady_alpha(p)
    w = p.gamma_2 + 1j * p.delta_eff
    w2 = (w * np.conj(w)).real
    denom = p.gamma_1 * w2 + 4.0 * p.g**2 * abs(alpha) ** 2 * p.gamma_2
    return float(-p.gamma_1 * w2 / denom)


def steady_state_effective(p: ModelParams) -> np.ndarray:
    """Steady 2x2 density matrix of the eliminated model (closed form)."""
    sm = steady_sigma_minus(p)
    sz = steady_sigma_z(p)
    x, y = 2.0 * sm.real, -2.0 * sm.imag
    return 0.5 * (np.eye(2, dtype=complex) + x * SIGMA_X + y * SIGMA_Y + sz * SIGMA_Z)


def output_noise_integral(p: ModelParams) -> float:
    """Low-frequency excess noise of the measured quadrature, in shot units.

    The spin's emission makes the record mean wander, adding correlated
    noise on top of detector shot noise.  By the quantum regression theorem
    the two-time record correlation is

        E[dY(t) dY(t+tau)] - E[dY]^2 = eta dt delta(tau)
            + eta^2 K(tau) dt^2,
        K(tau) = Tr[(c + c^dag) e^{L tau} (c rho_ss + rho_ss c^dag)]
                 - <c + c^dag>_ss^2,   c = c1 sigma_-,

    and this function returns the dimensionless integral
    S = 2 integral_0^inf K(tau) dtau, evaluated exactly by solving
    L w = K-source on the traceless subspace.  The integrated-signal
    variance then saturates at

        Var zeta(t) -> eta (1 + eta S)   for t >> 1/gamma_2

    on the spin hypothesis, while the empty-cavity record keeps exactly
    eta.  The idealized detection theory (Gaussian arms of equal variance
    eta) therefore *understates* the spin-arm spread whenever S > 0, which
    it is at saturation drive.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # bad-cavity advisory handled by callers
        l = effective_liouvillian(p)
    rho = steady_state_effective(p)
    _, c1 = measurement_scalars(p)
    c = c1 * SIGMA_MINUS
    x = c + c.conj().T
    xss = float(np.trace(x @ rho).real)
    source = c @ rho + rho @ c.conj().T - xss * rho
    if not np.any(np.abs(source) > 0):
        return 0.0
    # int_0^inf e^{L tau} source dtau = tr(w) rho_ss - w with L w = source
    # (invariant under the kernel component of w, so the pseudo-inverse works).
    w = (np.linalg.pinv(l, rcond=1e-12) @ source.reshape(-1)).reshape(2, 2)
    integral = np.trace(w) * rho - w
    return float(2.0 * np.trace(x @ integral).real)


# --------------------------------------------------------------------------
# Step-size policies
# --------------------------------------------------------------------------

def sme_max_rate(p: ModelParams) -> float:
    """Fastest rate of the eliminated model (sets the SME step ceiling)."""
    alpha = steady_alpha(p)
    return max(p.gamma_p, p.gamma_2, p.g * abs(alpha), abs(p.delta_eff))


def default_sme_dt(p: ModelParams) -> float:
    return STEP_BUDGET / sme_max_rate(p)


def check_sme_dt(p: ModelParams, dt: float) -> None:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    product = dt * sme_max_rate(p)
    if product > STEP_BUDGET * (1 + 1e-9):
        raise ValueError(
            f"dt = {dt:.3e} s too large for the eliminated model: "
            f"dt * max_rate = {product:.3e} exceeds the {STEP_BUDGET} budget "
            f"(max usable dt = {default_sme_dt(p):.3e} s)"
        )


def full_max_rate(p: ModelParams) -> float:
    """Fastest rate of the full spin (x) cavity model."""
    return max(
        p.kappa,
        abs(p.delta_r),
        abs(p.delta_s),
        p.g * np.sqrt(p.n_fock),
        np.sqrt(2.0 * p.kappa_1) * abs(p.beta),
    )


def default_full_dt(p: ModelParams) -> float:
    return STEP_BUDGET / full_max_rate(p)


def check_full_dt(p: ModelParams, dt: float) -> None:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    product = dt * full_max_rate(p)
    if product > STEP_BUDGET * (1 + 1e-9):
        raise ValueError(
            f"dt = {dt:.3e} s too large for the full model: dt * max_rate = "
            f"{product:.3e} exceeds the {STEP_BUDGET} budget "
            f"(max usable dt = {default_full_dt(p):.3e} s)"
        )


# --------------------------------------------------------------------------
# Kraus-completed Euler-Maruyama stepping of the conditioned spin model
# --------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _step_matrices(p: ModelParams, dt: float) -> tuple:
    """Per-(params, dt) constants of the measurement-operator step."""
    check_sme_dt(p, dt)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # bad-cavity advisory handled by callers
        h_eff, jumps = effective_spin_generator(p)
    c0, c1 = measurement_scalars(p)
    # A = -iH - (1/2) sum_j c_j^dag c_j
    decay = sum(c.conj().T @ c for c in jumps)
    m_base = np.eye(2, dtype=complex) + (-1j * h_eff - 0.5 * decay) * dt
    c_mon = np.sqrt(p.eta) * c1 * SIGMA_MINUS  # monitored-channel gain operator
    # Residual (unmonitored) channel rates; eta |c1|^2 <= gamma_1 always
    # because |c1|^2 = gamma_p * kappa_1/kappa and eta <= 1.
    res_minus = (p.gamma_1 - p.eta * abs(c1) ** 2) * dt
    res_phi = (p.gamma_phi / 2.0) * dt
    if res_minus < -1e-12 * max(p.gamma_1 * dt, 1e-300):
        raise NumericalFailure(
            f"monitored rate eta|c1|^2 = {p.eta * abs(c1) ** 2} exceeds the "
            f"total sigma_- damping gamma_1 = {p.gamma_1}"
        )
    x0 = 2.0 * c0.real
    return m_base, c_mon, max(res_minus, 0.0), res_phi, x0, c1


class BatchEffectiveStepper:
    """Vectorized conditioned-state propagator for a batch of trials.

    Holds ``n`` independent 2x2 conditioned states and advances them all by
    one measurement-operator step per call.  The caller supplies the scaled
    channel increment z_k = (dY_k - eta x0 dt)/sqrt(eta) for each trial; the
    class itself never draws noise, so the same code path serves generation
    (z built from a fresh Wiener increment) and filtering (z built from a
    recorded dY) bit-identically.
    """

    def __init__(self, p: ModelParams, dt: float, n: int, rho0: np.ndarray | None = None):
        if p.kappa < 5.0 * p.g:
            warnings.warn(
                f"kappa/g = {p.kappa / p.g:.2f} < 5: the eliminated model is "
                "only qualitative this deep into the strong-coupling regime",
                stacklevel=2,
            )
        m_base, c_mon, res_minus, res_phi, x0, c1 = _step_matrices(p, dt)
        self.params = p
        self.dt = float(dt)
        self.n = int(n)
        self.x0 = x0
        self.c1 = c1
        self._m = m_base
        self._mh = m_base.conj().T.copy()
        self._c = c_mon
        self._ch = c_mon.conj().T.copy()
        self._res_minus = res_minus
        self._res_phi = res_phi
        if rho0 is None:
            rho0 = steady_state_effective(p)
        rho0 = np.asarray(rho0, dtype=complex)
        if rho0.shape == (2, 2):
            self.rho = np.broadcast_to(rho0, (self.n, 2, 2)).copy()
        elif rho0.shape == (self.n, 2, 2):
            self.rho = rho0.copy()
        else:
            raise ValueError(f"rho0 must be (2,2) or (n,2,2), got {rho0.shape}")

    # -- expectation values (vectorized over trials) -----------------------
    def x_tilde(self) -> np.ndarray:
        """Spin part of the homodyne mean, 2 Re(c1 <sigma_->), per trial."""
        return 2.0 * (self.c1 * self.rho[:, 0, 1]).real

    def sigma_expectations(self) -> tuple:
        sm = self.rho[:, 0, 1]
        sz = (self.rho[:, 0, 0] - self.rho[:, 1, 1]).real
        return 2.0 * sm.real, -2.0 * sm.imag, sz

    def excited_population(self) -> np.ndarray:
        return self.rho[:, 0, 0].real

    def min_eigenvalue(self) -> np.ndarray:
        """Smallest eigenvalue of each 2x2 state (closed form)."""
        tr = (self.rho[:, 0, 0] + self.rho[:, 1, 1]).real
        det = (
            self.rho[:, 0, 0] * self.rho[:, 1, 1]
            - self.rho[:, 0, 1] * self.rho[:, 1, 0]
        ).real
        disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
        return 0.5 * (tr - disc)

    def hermiticity_residual(self) -> np.ndarray:
        return np.abs(self.rho - self.rho.conj().transpose(0, 2, 1)).max(axis=(1, 2))

    def step(self, z: np.ndarray) -> None:
        """Advance every trial by dt given its scaled channel increment z."""
        rho = self.rho
        zc = z[:, None, None]
        t = self._m @ rho + zc * (self._c @ rho)
        n = t @ self._mh + zc * (t @ self._ch)
        # residual-channel sandwiches, written out for the 2x2 case
        n[:, 1, 1] += self._res_minus * rho[:, 0, 0]
        if self._res_phi:
            n[:, 0, 0] += self._res_phi * rho[:, 0, 0]
            n[:, 1, 1] += self._res_phi * rho[:, 1, 1]
            n[:, 0, 1] -= self._res_phi * rho[:, 0, 1]
            n[:, 1, 0] -= self._res_phi * rho[:, 1, 0]
        n += n.conj().transpose(0, 2, 1)
        n *= 0.5
        tr = (n[:, 0, 0] + n[:, 1, 1]).real
        if not np.all(np.isfinite(tr)) or np.any(tr <= 0):
            raise NumericalFailure(
                "non-finite or non-positive state trace during an SME step "
                "(step size too large for these parameters)"
            )
        self.rho = n / tr[:, None, None]


def sme_step(
    rho: np.ndarray,
    p: ModelParams,
    dt: float,
    rng: GaussianStream | None = None,
    dy: float | None = None,
) -> tuple:
    """One conditioned step of the eliminated-model SME.

    In generation mode (``rng`` given) a Wiener increment is drawn and the
    record increment dY is synthesized; in filtering mode (``dy`` given) the
    step is conditioned on the supplied record increment instead.  Exactly
    one of ``rng``/``dy`` must be provided.

    Returns:
        (rho_next, dy): the advanced state and the record increment.
    """
    if (rng is None) == (dy is None):
        raise ValueError("provide exactly one of rng (generation) or dy (filtering)")
    stepper = BatchEffectiveStepper(p, dt, 1, rho0=np.asarray(rho, dtype=complex))
    eta = p.eta
    x = stepper.x0 + stepper.x_tilde()[0]
    if rng is not None:
        dw = float(rng.increments(dt, 1)[0])
        dy = eta * x * dt + np.sqrt(eta) * dw
    z = (dy - eta * stepper.x0 * dt) / np.sqrt(eta)
    stepper.step(np.array([z]))
    return stepper.rho[0], float(dy)


# --------------------------------------------------------------------------
# Record generation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HomodyneRecord:
    """A homodyne measurement record and what is needed to replay it.

    ``increments[k]`` is dY over [k dt, (k+1) dt); the record is fully
    reproducible from (seed, trial_index, params, dt, spin_present).
    """

    dt: float
    increments: np.ndarray
    seed: int
    trial_index: int
    params_hash: str
    spin_present: bool

    @property
    def duration(self) -> float:
        return len(self.increments) * self.dt

    @property
    def times(self) -> np.ndarray:
        """End times of each increment interval."""
        return self.dt * np.arange(1, len(self.increments) + 1)


@dataclass(frozen=True)
class TrajectoryResult:
    """Sampled conditioned-state expectation values along one record."""

    times: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_z: np.ndarray


#: Noise and record generation proceed in blocks of this many steps.
BLOCK_STEPS = 4096


def default_sample_stride(p: ModelParams, dt: float) -> int:
    """Sampling cadence: every ceil(tau_1/(100 dt)) steps, >= 1."""
    return max(1, int(np.ceil(p.tau_1 / (100.0 * dt))))


def generate_record(
    p: ModelParams,
    duration: float,
    dt: float,
    seed: int,
    spin_present: bool = True,
    trial_index: int = 0,
    initial_state: np.ndarray | None = None,
    sample_stride: int | None = None,
) -> tuple:
    """Simulate one homodyne record, conditioned state included.

    With ``spin_present`` the conditioned SME is integrated (starting from
    the driven steady state unless ``initial_state`` is given) and the
    record carries the spin signal; without it there is no quantum state to
    evolve and the record is the bare reflected drive plus shot noise.  The
    Wiener increments come from the per-trial stream
    (seed, trial_index), so ensemble members are individually replayable.

    Returns:
        (HomodyneRecord, TrajectoryResult); the trajectory expectation
        arrays are NaN for spin-absent records (no state exists).
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    check_sme_dt(p, dt)
    n_steps = int(round(duration / dt))
    stream = GaussianStream.for_trial(seed, trial_index)
    if sample_stride is None:
        sample_stride = default_sample_stride(p, dt)
    sample_idx = np.arange(sample_stride, n_steps + 1, sample_stride)
    n_samples = len(sample_idx)

    increments = np.empty(n_steps)
    sig_x = np.full(n_samples, np.nan)
    sig_y = np.full(n_samples, np.nan)
    sig_z = np.full(n_samples, np.nan)

    eta = p.eta
    sqrt_eta = np.sqrt(eta)

    stepper = BatchEffectiveStepper(p, dt, 1, rho0=initial_state) if spin_present else None
    x0 = _step_matrices(p, dt)[4]

    sample_pos = 0
    step = 0
    while step < n_steps:
        block = min(BLOCK_STEPS, n_steps - step)
        dw = stream.increments(dt, block)
        if not spin_present:
            increments[step : step + block] = eta * x0 * dt + sqrt_eta * dw
            step += block
            while sample_pos < n_samples and sample_idx[sample_pos] <= step:
                sample_pos += 1
            continue
        for k in range(block):
            x = x0 + stepper.x_tilde()[0]
            dy = eta * x * dt + sqrt_eta * dw[k]
            z = (dy - eta * x0 * dt) / sqrt_eta
            stepper.step(np.array([z]))
            increments[step] = dy
            step += 1
            if sample_pos < n_samples and sample_idx[sample_pos] == step:
                sx, sy, sz = stepper.sigma_expectations()
                sig_x[sample_pos] = sx[0]
                sig_y[sample_pos] = sy[0]
                sig_z[sample_pos] = sz[0]
                lam = stepper.min_eigenvalue()[0]
                if lam < POSITIVITY_FLOOR:
                    raise PositivityError(
                        f"conditioned state lost positivity (min eigenvalue "
                        f"{lam:.3e}) at t = {step * dt:.6e} s"
                    )
                sample_pos += 1
    if not np.all(np.isfinite(increments)):
        raise NumericalFailure("non-finite record increment generated")
    record = HomodyneRecord(
        dt=dt,
        increments=increments,
        seed=int(seed),
        trial_index=int(trial_index),
        params_hash=p.params_hash(),
        spin_present=bool(spin_present),
    )
    trajectory = TrajectoryResult(
        times=sample_idx * dt, sigma_x=sig_x, sigma_y=sig_y, sigma_z=sig_z
    )
    return record, trajectory


# --------------------------------------------------------------------------
# Liouvillian utilities (row-major vectorization: vec(A rho B) = (A (x) B^T) vec(rho))
# --------------------------------------------------------------------------

def liouvillian(h: np.ndarray, jumps) -> np.ndarray:
    """Matrix of the Lindblad generator acting on row-major-vectorized states."""
    dim = h.shape[0]
    eye = np.eye(dim)
    l = -1j * (kron(h, eye) - kron(eye, h.T))
    for c in jumps:
        cdc = c.conj().T @ c
        l += kron(c, c.conj())
        l -= 0.5 * (kron(cdc, eye) + kron(eye, cdc.T))
    return l


def steady_state_from_liouvillian(l: np.ndarray) -> np.ndarray:
    """Null eigenvector of the generator, reshaped and normalized."""
    values, vectors = np.linalg.eig(l)
    k = int(np.argmin(np.abs(values)))
    if abs(values[k]) > 1e-6 * max(1.0, np.abs(values).max()):
        raise NumericalFailure(
            f"no steady state found: smallest |eigenvalue| = {abs(values[k]):.3e}"
        )
    dim = int(round(np.sqrt(l.shape[0])))
    rho = vectors[:, k].reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def effective_liouvillian(p: ModelParams) -> np.ndarray:
    h_eff, jumps = effective_spin_generator(p)
    return liouvillian(h_eff, jumps)


def evolve_liouvillian(rho0: np.ndarray, l: np.ndarray, t: float) -> np.ndarray:
    """Exact propagation rho(t) = expm(L t) rho0 (reference integrator)."""
    dim = rho0.shape[0]
    vec = np.asarray(rho0, dtype=complex).reshape(-1)
    out = expm(l * t) @ vec
    rho = out.reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


# --------------------------------------------------------------------------
# Full spin (x) cavity model
# --------------------------------------------------------------------------

def fock_annihilation(n_fock: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_fock, dtype=float)), k=1).astype(complex)


def coherent_state_vector(alpha: complex, n_fock: int) -> np.ndarray:
    n = np.arange(n_fock)
    log_fact = np.cumsum(np.log(np.maximum(n, 1)))
    amps = np.exp(n * np.log(complex(alpha)) - 0.5 * log_fact) if alpha != 0 else (
        np.eye(n_fock, dtype=complex)[:, 0]
    )
    if alpha != 0:
        amps = amps * np.exp(-0.5 * abs(alpha) ** 2)
    vec = np.asarray(amps, dtype=complex)
    return vec / np.linalg.norm(vec)


def full_operators(p: ModelParams) -> dict:
    """Spin and field operators embedded in the spin (x) Fock space."""
    eye_f = np.eye(p.n_fock, dtype=complex)
    eye_s = np.eye(2, dtype=complex)
    a = kron(eye_s, fock_annihilation(p.n_fock))
    return {
        "a": a,
        "ad": a.conj().T,
        "sigma_minus": kron(SIGMA_MINUS, eye_f),
        "sigma_plus": kron(SIGMA_PLUS, eye_f),
        "sigma_z": kron(SIGMA_Z, eye_f),
    }


def full_hamiltonian(p: ModelParams) -> np.ndarray:
    ops = full_operators(p)
    a, ad = ops["a"], ops["ad"]
    h = (
        p.delta_r * (ad @ a)
        + 1j * np.sqrt(2.0 * p.kappa_1) * (p.beta * ad - np.conj(p.beta) * a)
        + 0.5 * p.delta_s * ops["sigma_z"]
        + p.g * (ops["sigma_plus"] @ a + ops["sigma_minus"] @ ad)
    )
    return h


def full_jump_operators(p: ModelParams) -> list:
    ops = full_operators(p)
    return [
        np.sqrt(2.0 * p.kappa) * ops["a"],
        np.sqrt(p.gamma_dec) * ops["sigma_minus"],
        np.sqrt(p.gamma_phi / 2.0) * ops["sigma_z"],
    ]


def full_liouvillian(p: ModelParams) -> np.ndarray:
    return liouvillian(full_hamiltonian(p), full_jump_operators(p))


def full_steady_state(p: ModelParams) -> np.ndarray:
    return steady_state_from_liouvillian(full_liouvillian(p))


def full_initial_state(p: ModelParams, spin: str = "ground", field_alpha: complex = 0.0) -> np.ndarray:
    """Product state (spin pure state) (x) (coherent field state)."""
    if spin == "ground":
        s = np.array([0.0, 1.0], dtype=complex)
    elif spin == "excited":
        s = np.array([1.0, 0.0], dtype=complex)
    else:
        raise ValueError(f"spin must be 'ground' or 'excited', got {spin!r}")
    f = coherent_state_vector(field_alpha, p.n_fock)
    psi = np.kron(s, f)
    return np.outer(psi, psi.conj())


def _top_fock_population(rho: np.ndarray, n_fock: int) -> float:
    idx = [n_fock - 1, 2 * n_fock - 1]
    return float(sum(rho[i, i].real for i in idx))


def lindblad_step_full(rho: np.ndarray, p: ModelParams, dt: float) -> np.ndarray:
    """One deterministic step of the full master equation (Kraus-completed).

    rho' ~ M rho M^dag + sum_j c_j rho c_j^dag dt with
    M = 1 + (-iH - (1/2) sum c_j^dag c_j) dt, renormalized; positive
    semidefinite by construction.

    Raises:
        FockTruncationError: if the top Fock level holds > 1e-6 population
            (the caller must raise n_fock).
    """
    check_full_dt(p, dt)
    h = full_hamiltonian(p)
    jumps = full_jump_operators(p)
    decay = sum(c.conj().T @ c for c in jumps)
    m = np.eye(h.shape[0], dtype=complex) + (-1j * h - 0.5 * decay) * dt
    out = m @ rho @ m.conj().T
    for c in jumps:
        out += dt * (c @ rho @ c.conj().T)
    out = 0.5 * (out + out.conj().T)
    out /= np.trace(out).real
    leak = _top_fock_population(out, p.n_fock)
    if leak > FOCK_LEAKAGE_LIMIT:
        raise FockTruncationError(
            f"top Fock level population {leak:.3e} exceeds {FOCK_LEAKAGE_LIMIT:.0e}; "
            f"raise n_fock above {p.n_fock}"
        )
    return out


def evolve_full(
    rho0: np.ndarray,
    p: ModelParams,
    duration: float,
    dt: float,
    observables: dict | None = None,
    sample_stride: int = 1,
) -> tuple:
    """Propagate the full model, sampling observable expectations.

    Matrix constants are hoisted out of the loop (the per-step work is two
    dense matrix products), so this is the workhorse for full-model checks.

    Returns:
        (rho_final, times, values) where values maps each observable name to
        its sampled complex expectation array.
    """
    check_full_dt(p, dt)
    observables = observables or {}
    h = full_hamiltonian(p)
    jumps = full_jump_operators(p)
    decay = sum(c.conj().T @ c for c in jumps)
    m = np.eye(h.shape[0], dtype=complex) + (-1j * h - 0.5 * decay) * dt
    mh = m.conj().T.copy()
    jump_pairs = [(c, c.conj().T.copy()) for c in jumps if np.any(c)]

    n_steps = int(round(duration / dt))
    sample_idx = np.arange(sample_stride, n_steps + 1, sample_stride)
    times = sample_idx * dt
    values = {name: np.empty(len(sample_idx), dtype=complex) for name in observables}

    rho = np.asarray(rho0, dtype=complex).copy()
    pos = 0
    for step in range(1, n_steps + 1):
        out = m @ rho @ mh
        for c, ch in jump_pairs:
            out += dt * (c @ rho @ ch)
        out = 0.5 * (out + out.conj().T)
        rho = out / np.trace(out).real
        if pos < len(sample_idx) and sample_idx[pos] == step:
            leak = _top_fock_population(rho, p.n_fock)
            if leak > FOCK_LEAKAGE_LIMIT:
                raise FockTruncationError(
                    f"top Fock level population {leak:.3e} exceeds "
                    f"{FOCK_LEAKAGE_LIMIT:.0e} at t = {step * dt:.3e} s; "
                    f"raise n_fock above {p.n_fock}"
                )
            lam = float(np.linalg.eigvalsh(rho)[0])
            if lam < POSITIVITY_FLOOR:
                raise PositivityError(
                    f"full-model state lost positivity (min eigenvalue {lam:.3e}) "
                    f"at t = {step * dt:.6e} s"
                )
            for name, op in observables.items():
                values[name][pos] = np.trace(op @ rho)
            pos += 1
    return rho, times, values
