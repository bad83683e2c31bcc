"""Resonator-side design quantities.

Covers the microwave-circuit half of the detector: the zero-point current of
the resonator mode, the magnetic field profile of a rectangular nanowire
carrying that current, the nanowire kinetic inductance, and the derived
detection figures (Purcell rate, saturation drive, integration time).

Geometry convention: the nanowire runs along z with its rectangular cross
section centered at the origin of the x-y plane, x along the width and y
along the thickness.  "Distance from the wire" in the presets is measured
from the nearest surface.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, KB, MU0, PLANCK

__all__ = [
    "ResonatorParams",
    "NanowireGeometry",
    "zero_point_current",
    "rect_wire_field",
    "field_map",
    "kinetic_inductance",
    "purcell_rate",
    "saturation_amplitude",
    "measurement_time_tau1",
    "noise_photons",
    "efficiency_from_noise_photons",
    "design_report",
]


@dataclass(frozen=True)
class ResonatorParams:
    """Microwave resonator parameters.

    Attributes:
        omega_r: angular resonance frequency (rad/s).
        z_r: characteristic impedance (ohm).
        kappa: total field (amplitude) decay rate (1/s).
        kappa_1: decay rate through the measurement coupler (1/s).
        q: quality factor; if omitted it is derived from
            ``q = omega_r / (2 kappa)``.
    """

    omega_r: float
    z_r: float
    kappa: float
    kappa_1: float | None = None
    q: float | None = None

    def __post_init__(self):
        if self.omega_r <= 0 or self.z_r <= 0:
            raise ValueError("omega_r and z_r must be positive")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.kappa_1 is None:
            object.__setattr__(self, "kappa_1", self.kappa)
        if self.kappa_1 > self.kappa * (1 + 1e-12):
            raise ValueError(
                f"coupler rate kappa_1 = {self.kappa_1} exceeds total kappa = {self.kappa}"
            )
        q_derived = self.omega_r / (2.0 * self.kappa)
        if self.q is None:
            object.__setattr__(self, "q", q_derived)
        elif abs(self.q - q_derived) > 1e-6 * q_derived:
            raise ValueError(
                f"q = {self.q} inconsistent with omega_r/(2 kappa) = {q_derived}"
            )


@dataclass(frozen=True)
class NanowireGeometry:
    """Constricted-nanowire geometry and material parameters.

    Attributes:
        width: conductor width along x (m).
        thickness: conductor thickness along y (m).
        length: constriction length along z (m).
        sheet_resistance: normal-state sheet resistance (ohm/square).
        gap: superconducting gap energy (J).
        temperature: operating temperature (K).
    """

    width: float
    thickness: float
    length: float
    sheet_resistance: float
    gap: float
    temperature: float

    def __post_init__(self):
        for name in ("width", "thickness", "length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.width < 15e-9:
            warnings.warn(
                f"width {self.width * 1e9:.3g} nm is below the ~15 nm fabrication "
                "limit where wires turn insulating",
                stacklevel=2,
            )
        if self.thickness < 10e-9:
            warnings.warn(
                f"thickness {self.thickness * 1e9:.3g} nm is below the ~10 nm "
                "fabrication limit where wires turn insulating",
                stacklevel=2,
            )


def zero_point_current(r: ResonatorParams) -> float:
    """R.m.s. vacuum current fluctuation of the resonator mode (A).

    delta_i = omega_r * sqrt(hbar / (2 Z_r)).
    """
    return r.omega_r * math.sqrt(HBAR / (2.0 * r.z_r))


def _atan_prod(a, b):
    """a * arctan(b / a), continued by 0 where a == 0 (its limiting value)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ratio = np.divide(b, a, out=np.zeros(np.broadcast(a, b).shape), where=(a != 0))
    return a * np.arctan(ratio)


def _corner_difference(f, u1, u2, v1, v2):
    return f(u1, v1) - f(u2, v1) - f(u1, v2) + f(u2, v2)


def _field_components(geom: NanowireGeometry, current: float, x, y):
    """Bx, By of the infinite rectangular conductor (vectorized, no checks)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    j = current / (geom.width * geom.thickness)
    u1 = x + geom.width / 2.0
    u2 = x - geom.width / 2.0
    v1 = y + geom.thickness / 2.0
    v2 = y - geom.thickness / 2.0

    def g(u, v):
        return _atan_prod(v, u) + 0.5 * u * np.log(u * u + v * v)

    def h(u, v):
        return _atan_prod(u, v) + 0.5 * v * np.log(u * u + v * v)

    scale = MU0 * j / (2.0 * np.pi)
    bx = -scale * _corner_difference(g, u1, u2, v1, v2)
    by = scale * _corner_difference(h, u1, u2, v1, v2)
    return bx, by


def rect_wire_field(geom: NanowireGeometry, current: float, point) -> np.ndarray:
    """Static field (T) of the nanowire at one exterior point of the x-y plane.

    The wire is treated as infinite along z with uniform current density over
    its w x t cross section; the result is the closed-form (arctan/log)
    integral of the two-dimensional field kernel.  The z component is zero.

    Args:
        geom: conductor geometry.
        current: total current along +z (A).
        point: (x, y) coordinates of the field point (m).

    Raises:
        ValueError: if the point lies inside (or on the surface of) the
            conductor, where this exterior branch of the formula is invalid.
    """
    x, y = float(point[0]), float(point[1])
    if abs(x) <= geom.width / 2.0 and abs(y) <= geom.thickness / 2.0:
        raise ValueError(
            f"point ({x}, {y}) m lies inside the {geom.width} x {geom.thickness} m "
            "conductor cross section; the field is only computed outside"
        )
    bx, by = _field_components(geom, current, x, y)
    return np.array([float(bx), float(by), 0.0])


def field_map(geom: NanowireGeometry, current: float, x_values, y_values):
    """Field components on a grid; points inside the conductor are NaN.

    Args:
        x_values, y_values: 1-D coordinate arrays (m).

    Returns:
        (bx, by) arrays of shape (len(y_values), len(x_values)) (T).
    """
    x = np.asarray(x_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    xx, yy = np.meshgrid(x, y)
    bx, by = _field_components(geom, current, xx, yy)
    inside = (np.abs(xx) <= geom.width / 2.0) & (np.abs(yy) <= geom.thickness / 2.0)
    bx = np.where(inside, np.nan, bx)
    by = np.where(inside, np.nan, by)
    return bx, by


def kinetic_inductance(geom: NanowireGeometry) -> float:
    """Kinetic inductance of the nanowire (H).

    L_k = (l/w) * (R_sheet / 2 pi^2) * (h / gap) / tanh(gap / 2 kB T).
    """
    if geom.gap <= 0:
        raise ValueError("gap must be positive")
    if geom.temperature <= 0:
        raise ValueError("temperature must be positive")
    squares = geom.length / geom.width
    return (
        squares
        * geom.sheet_resistance
        / (2.0 * np.pi**2)
        * (PLANCK / geom.gap)
        / math.tanh(geom.gap / (2.0 * KB * geom.temperature))
    )


def purcell_rate(g: float, kappa: float, delta_rs: float = 0.0) -> float:
    """Cavity-enhanced spin emission rate gamma_p = 2 g^2 kappa/(kappa^2 + delta_rs^2)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return 2.0 * g**2 * kappa / (kappa**2 + delta_rs**2)


def saturation_amplitude(g: float, gamma_1: float, gamma_2: float) -> float:
    """Intracavity amplitude that saturates the spin: |alpha|_sat = sqrt(gamma_1 gamma_2)/(2g).

    This is the amplitude at which the drive-induced decay of the spin
    coherence equals its intrinsic decay, maximizing the spin signal per
    photon; it satisfies 2 g |alpha|_sat = sqrt(gamma_1 gamma_2) exactly.
    """
    if g <= 0:
        raise ValueError("g must be positive")
    return math.sqrt(gamma_1 * gamma_2) / (2.0 * g)


def measurement_time_tau1(
    g: float,
    kappa: float,
    gamma_phi: float,
    eta: float = 1.0,
    gamma_dec: float = 0.0,
) -> tuple:
    """Integration time for unit signal-to-noise, and its efficiency-scaled value.

    In the resonant, saturated operating point, tau_1 = kappa^2 gamma_2 / g^4
    with gamma_2 = gamma_1/2 + gamma_phi and gamma_1 = gamma_dec + 2 g^2/kappa
    (the resonant Purcell rate).  A detector of efficiency eta needs
    tau_eta = tau_1 / eta.

    Returns:
        (tau_1, tau_eta) in seconds.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    gamma_p = purcell_rate(g, kappa)
    gamma_2 = (gamma_dec + gamma_p) / 2.0 + gamma_phi
    tau_1 = kappa**2 * gamma_2 / g**4
    return tau_1, tau_1 / eta


def noise_photons(noise_temperature: float, omega: float) -> float:
    """Added noise photon number of an amplifier: N = kB T_N / (hbar omega)."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    return KB * noise_temperature / (HBAR * omega)


def efficiency_from_noise_photons(n: float) -> float:
    """Measurement efficiency eta = 1/(1+N) of an amplifier adding N photons."""
    if n < 0:
        raise ValueError(f"noise photon number must be >= 0, got {n}")
    return 1.0 / (1.0 + n)


def design_report(
    resonator: ResonatorParams,
    geometry: NanowireGeometry,
    spin_point,
    element_magnitude: float,
    g_nominal: float,
    gamma_phi: float,
    eta: float,
    gamma_dec: float = 0.0,
) -> dict:
    """Chain the device formulas into the derived detection figures.

    Computes the zero-point current, the field it produces at the spin
    location, and the coupling this field would give for a transition of the
    supplied (dimensionless) matrix-element magnitude; then evaluates the
    Purcell rate and measurement times at the nominal coupling ``g_nominal``
    of the parameter set, keeping the chained field-derived coupling as a
    separate entry.

    Returns:
        dict of SI-valued entries with unit-suffixed keys.
    """
    from .constants import GAMMA_E  # local import keeps module namespaces tidy

    delta_i = zero_point_current(resonator)
    b = rect_wire_field(geometry, delta_i, spin_point)
    delta_b = float(np.linalg.norm(b))
    g_from_field = GAMMA_E * delta_b * element_magnitude
    gamma_p = purcell_rate(g_nominal, resonator.kappa)
    tau_1, tau_eta = measurement_time_tau1(
        g_nominal, resonator.kappa, gamma_phi, eta=eta, gamma_dec=gamma_dec
    )
    return {
        "delta_i_A": delta_i,
        "spin_point_m": [float(spin_point[0]), float(spin_point[1])],
        "delta_b_T": delta_b,
        "element_magnitude": float(element_magnitude),
        "g_from_field_rad_per_s": g_from_field,
        "g_nominal_rad_per_s": float(g_nominal),
        "kappa_per_s": resonator.kappa,
        "kappa_1_per_s": resonator.kappa_1,
        "kinetic_inductance_H": kinetic_inductance(geometry),
        "gamma_p_per_s": gamma_p,
        "gamma_phi_per_s": float(gamma_phi),
        "gamma_dec_per_s": float(gamma_dec),
        "eta": float(eta),
        "tau_1_s": tau_1,
        "tau_eta_s": tau_eta,
    }
