"""Canonical parameter bundles for the supported experimental scenarios.

Three presets are provided:

``sim``
    A bad-cavity spin-resonator model tuned for fast stochastic simulation:
    moderately strong coupling, resonant drive at the saturation amplitude,
    and detector efficiency 0.5.  This is the default for ``simulate`` and
    ``ensemble`` runs.

``nv``
    A nitrogen-vacancy center in diamond coupled to a 2.9 GHz lumped-element
    resonator.  Detector efficiency defaults to 1 so the reported measurement
    times refer to an ideal detector.

``bi``
    A bismuth donor in silicon coupled to a 7.3 GHz resonator, again with
    unit detector efficiency.

The NV and Bi bundles include the resonator electrical parameters, the
nanowire geometry used for field calculations, the spin Hamiltonian
parameters, and the nominal coupling constant; the ``sim`` preset is a pure
dynamics model with no device attached.
"""

from __future__ import annotations

from dataclasses import dataclass

from .constants import E_CHARGE, TWO_PI
from .device import NanowireGeometry, ResonatorParams
from .dynamics import ModelParams, saturation_drive
from .errors import ConfigError
from .spins import BiParams, NVParams

__all__ = [
    "DeviceBundle",
    "PRESET_NAMES",
    "bi_bundle",
    "device_bundle",
    "model_for_bundle",
    "nv_bundle",
    "sim_model",
    "standard_geometry",
    "tall_wire_geometry",
]

PRESET_NAMES = ("nv", "bi", "sim")

# Superconducting gap of the niobium-alloy thin film, in joules.
NANOWIRE_GAP_J = 230e-6 * E_CHARGE


def standard_geometry() -> NanowireGeometry:
    """Baseline nanowire: 20 nm x 10 nm cross-section, 250 nm long."""
    return NanowireGeometry(
        width=20e-9,
        thickness=10e-9,
        length=250e-9,
        sheet_resistance=4.5,
        gap=NANOWIRE_GAP_J,
        temperature=10e-3,
    )


def tall_wire_geometry() -> NanowireGeometry:
    """Thicker-film variant: 15 nm film, same width and length."""
    return NanowireGeometry(
        width=20e-9,
        thickness=15e-9,
        length=250e-9,
        sheet_resistance=4.5,
        gap=NANOWIRE_GAP_J,
        temperature=10e-3,
    )


@dataclass(frozen=True)
class DeviceBundle:
    """Everything needed to evaluate a spin-plus-resonator design.

    Attributes
    ----------
    name:
        Preset identifier ("nv" or "bi").
    resonator:
        Electrical parameters of the LC resonator.
    geometry:
        Nanowire geometry for field and inductance calculations.
    spin_point:
        (x, y) location of the spin relative to the wire center, in meters.
        The wire axis is z; y is the substrate normal.
    spin:
        Spin Hamiltonian parameter set (NVParams or BiParams).
    element_magnitude:
        |<upper| S |lower> . b-hat| for the detection transition, used to
        convert the zero-point field into a coupling constant.
    g_nominal:
        Nominal spin-photon coupling in rad/s, used for rate and
        measurement-time reporting.
    gamma_phi:
        Pure dephasing rate of the spin, 1/s.
    gamma_dec:
        Non-resonator spin decay rate, 1/s.
    eta:
        Detector efficiency used when reporting measurement durations.
    """

    name: str
    resonator: ResonatorParams
    geometry: NanowireGeometry
    spin_point: tuple[float, float]
    spin: object
    element_magnitude: float
    g_nominal: float
    gamma_phi: float
    gamma_dec: float = 0.0
    eta: float = 1.0


def nv_bundle() -> DeviceBundle:
    """NV center coupled to a 2.9 GHz resonator."""
    return DeviceBundle(
        name="nv",
        resonator=ResonatorParams(
            omega_r=TWO_PI * 2.9e9,
            z_r=15.3,
            kappa=0.9e5,
        ),
        geometry=standard_geometry(),
        spin_point=(0.0, -20e-9),
        spin=NVParams(),
        element_magnitude=2.0 ** -0.5,
        g_nominal=TWO_PI * 6.5e3,
        gamma_phi=1e5,
        eta=1.0,
    )


def bi_bundle() -> DeviceBundle:
    """Bismuth donor coupled to a 7.3 GHz resonator."""
    return DeviceBundle(
        name="bi",
        resonator=ResonatorParams(
            omega_r=TWO_PI * 7.3e9,
            z_r=26.5,
            kappa=2.3e5,
        ),
        geometry=standard_geometry(),
        spin_point=(0.0, -20e-9),
        spin=BiParams(),
        element_magnitude=0.47,
        g_nominal=TWO_PI * 8.0e3,
        gamma_phi=1e4,
        eta=1.0,
    )


def device_bundle(name: str) -> DeviceBundle:
    """Look up a device preset by name ("nv" or "bi")."""
    if name == "nv":
        return nv_bundle()
    if name == "bi":
        return bi_bundle()
    if name == "sim":
        raise ConfigError(
            "preset 'sim' is a dynamics-only model with no device attached; "
            "use preset 'nv' or 'bi' for design calculations"
        )
    raise ConfigError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


def sim_model() -> ModelParams:
    """Simulation benchmark model, driven at spin saturation.

    Resonant drive and spin (both detunings zero), coupling g = 2*pi*10 kHz,
    cavity linewidth kappa = 4.6e5 1/s, dephasing 1e4 1/s, efficiency 0.5.
    The drive amplitude is set to the saturation value at which the
    steady-state spin coherence magnitude is maximal.
    """
    base = ModelParams(
        g=TWO_PI * 1.0e4,
        kappa=4.6e5,
        gamma_phi=1.0e4,
        eta=0.5,
    )
    _, beta_sat = saturation_drive(base)
    return base.with_updates(beta=complex(beta_sat, 0.0))


def model_for_bundle(bundle: DeviceBundle, *, eta: float | None = None) -> ModelParams:
    """Spin-resonator dynamics model at a device preset's operating point.

    Uses the nominal coupling, the resonator linewidth, resonant tuning and
    a saturation-amplitude drive.  ``eta`` overrides the bundle's detector
    efficiency.
    """
    base = ModelParams(
        g=bundle.g_nominal,
        kappa=bundle.resonator.kappa,
        kappa_1=bundle.resonator.kappa_1,
        gamma_phi=bundle.gamma_phi,
        gamma_dec=bundle.gamma_dec,
        eta=bundle.eta if eta is None else eta,
    )
    _, beta_sat = saturation_drive(base)
    return base.with_updates(beta=complex(beta_sat, 0.0))
