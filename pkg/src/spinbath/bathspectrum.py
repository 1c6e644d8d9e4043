"""Film-averaged dipolar noise of the CuPc electron-spin bath.

The NV at depth d_nv below the diamond surface sees the fluctuating
dipolar field of the uniform spin film of thickness h on top.  The slab
integral of the squared dipolar tensor gives the mean-square coupling
b0^2; its split into the longitudinal (5/16) and transverse (11/16)
channels is fixed by the slab geometry with the NV axis tilted at
arccos(1/sqrt(3)) from the surface normal (the [111] axis of a
(100)-cut diamond).  Together with the hyperfine transition spectrum and
an exponential envelope exp(-t/tau_e) this yields the autocorrelation

    G_e(t) = b0^2 e^{-t/tau_e} [5/16 + (11/16) sum_k rho_k sum_ij eta_ij cos(omega_ij t)]

and its two-sided Fourier transform, the power spectral density S_e(omega)
built from Lorentzians of width 1/tau_e at every transition frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .constants import GAMMA_E, HBAR, MU_0
from .spinmodel import (
    Isotope,
    IsotopeSpectrum,
    SpinSystemSpec,
    TransitionSpectrum,
    transition_spectrum,
)

#: Exact channel fractions of b0^2 (longitudinal, transverse).
F_Z = Fraction(5, 16)
F_PERP = Fraction(11, 16)

#: Electron spin magnitude factor S(S+1) for S = 1/2.
S_SPIN_FACTOR = 0.75

#: NV-axis tilt from the surface normal in (100)-cut diamond.
NV_TILT = float(np.arccos(1.0 / np.sqrt(3.0)))


@dataclass(frozen=True)
class FilmGeometry:
    """Uniform spin film above the diamond surface, all SI units."""

    d_nv: float  # NV depth below the surface (m)
    h: float  # film thickness (m)
    n_e: float  # electron spin density (1/m^3)

    def __post_init__(self) -> None:
        if self.d_nv <= 0:
            raise ValueError("d_nv must be > 0")
        if self.h <= 0:
            raise ValueError("h must be > 0")
        if self.n_e <= 0:
            raise ValueError("n_e must be > 0")

    def replace(self, **kw) -> "FilmGeometry":
        return replace(self, **kw)


def geometry_factors() -> tuple[float, float]:
    """Exact (longitudinal, transverse) fractions of b0^2: (5/16, 11/16)."""
    return float(F_Z), float(F_PERP)


def coupling_b0_sq(g: FilmGeometry, gamma_e: float = GAMMA_E) -> float:
    """Mean-square transverse dipolar coupling b0^2 of the film (tesla^2).

    Closed form of the slab integral:
    (mu0 hbar gamma_e / 4pi)^2 * (2 pi S(S+1) / 9) * n_e * (1/d^3 - 1/(d+h)^3).
    """
    prefactor = (MU_0 * HBAR * gamma_e / (4.0 * np.pi)) ** 2
    spin_term = 2.0 * np.pi * S_SPIN_FACTOR / 9.0
    radial = 1.0 / g.d_nv**3 - 1.0 / (g.d_nv + g.h) ** 3
    return prefactor * spin_term * g.n_e * radial


@dataclass(frozen=True)
class BathSpectrumModel:
    """Everything needed to evaluate G_e(t) and S_e(omega)."""

    spectrum: TransitionSpectrum
    tau_e: float  # seconds
    b0_sq: float  # tesla^2
    geometry: FilmGeometry | None = None

    def __post_init__(self) -> None:
        if self.tau_e <= 0:
            raise ValueError("tau_e must be > 0")
        if self.b0_sq < 0:
            raise ValueError("b0_sq must be >= 0")

    @classmethod
    def from_geometry(
        cls,
        spectrum: TransitionSpectrum,
        tau_e: float,
        geometry: FilmGeometry,
        gamma_e: float = GAMMA_E,
    ) -> "BathSpectrumModel":
        return cls(
            spectrum=spectrum,
            tau_e=tau_e,
            b0_sq=coupling_b0_sq(geometry, gamma_e=gamma_e),
            geometry=geometry,
        )


#: Grid points per evaluation chunk; keeps the (grid x lines) work arrays
#: around ~100 MB even for the full ~5e4-line CuPc spectrum.
_CHUNK = 256


def autocorrelation(m: BathSpectrumModel, t) -> np.ndarray | float:
    """G_e(t) in tesla^2 for t >= 0 (G_e is even in t)."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("autocorrelation is defined for t >= 0")
    f_z, f_perp = geometry_factors()
    osc = np.zeros_like(t_arr)
    for comp in m.spectrum.components:
        for lo in range(0, t_arr.size, _CHUNK):
            block = t_arr[lo : lo + _CHUNK, None]
            osc[lo : lo + _CHUNK] += comp.isotope.abundance * (
                np.cos(block * comp.omega) @ comp.eta
            )
    out = m.b0_sq * np.exp(-t_arr / m.tau_e) * (f_z + f_perp * osc)
    return out if np.ndim(t) else float(out[0])


def _lorentzian(x, tau: float):
    return tau / (np.square(x * tau) + 1.0)


def isotope_spectral_density(
    comp: IsotopeSpectrum, tau_e: float, b0_sq: float, omega
) -> np.ndarray | float:
    """Single-isotope S_e contribution, without the abundance weight."""
    omega_arr = np.atleast_1d(np.asarray(omega, dtype=float))
    f_z, f_perp = geometry_factors()
    central = 2.0 * f_z * b0_sq * _lorentzian(omega_arr, tau_e)
    lines = np.zeros_like(omega_arr)
    for lo in range(0, omega_arr.size, _CHUNK):
        block = omega_arr[lo : lo + _CHUNK, None]
        lines[lo : lo + _CHUNK] = (
            _lorentzian(block - comp.omega, tau_e)
            + _lorentzian(block + comp.omega, tau_e)
        ) @ comp.eta
    out = central + f_perp * b0_sq * lines
    return out if np.ndim(omega) else float(out[0])


def spectral_density(m: BathSpectrumModel, omega) -> np.ndarray | float:
    """Two-sided power spectral density S_e(omega) in tesla^2 s.

    S_e(omega) = sum_k rho_k { (5/8) b0^2 tau/(omega^2 tau^2 + 1)
        + (11/16) sum_ij eta_ij [ L(omega_ij - omega) + L(omega_ij + omega) ] }
    with L(x) = b0^2 tau / (x^2 tau^2 + 1).
    """
    omega_arr = np.atleast_1d(np.asarray(omega, dtype=float))
    out = np.zeros_like(omega_arr)
    for comp in m.spectrum.components:
        out += comp.isotope.abundance * isotope_spectral_density(
            comp, m.tau_e, m.b0_sq, omega_arr
        )
    return out if np.ndim(omega) else float(out[0])


def electron_only_spectrum(
    b_field: float, g_factor: float = 2.0023, gamma_e: float = GAMMA_E
) -> TransitionSpectrum:
    """Transition spectrum of a bare electron spin: one pair at gamma*B.

    The pair carries eta = 1/4 in each direction (M = 1), reproducing the
    full pipeline applied to a nucleus-free spin system.
    """
    from .constants import G_E

    omega0 = gamma_e * (g_factor / G_E) * b_field
    comp = IsotopeSpectrum(
        isotope=Isotope("e", 1.0, 1.0, 0.0),
        omega=np.array([-omega0, omega0]),
        eta=np.array([0.25, 0.25]),
        m_states=1,
        eta_sum_all=0.5,
        eta_static=0.0,
        eta_pruned=0.0,
    )
    return TransitionSpectrum(components=(comp,))


def free_electron_spectrum(
    g: FilmGeometry,
    tau_e: float,
    omega,
    b_field: float,
    gamma_e: float = GAMMA_E,
) -> np.ndarray | float:
    """S_e(omega) for a film of free electrons (g = 2.0023, no hyperfine)."""
    model = BathSpectrumModel(
        spectrum=electron_only_spectrum(b_field, gamma_e=gamma_e),
        tau_e=tau_e,
        b0_sq=coupling_b0_sq(g, gamma_e=gamma_e),
        geometry=g,
    )
    return spectral_density(model, omega)


def cupc_bath_model(
    spec: SpinSystemSpec,
    tau_e: float,
    geometry: FilmGeometry,
    isotopes=None,
    eta_floor: float | None = None,
    gamma_e: float = GAMMA_E,
) -> BathSpectrumModel:
    """Convenience constructor: full isotope-weighted CuPc bath model."""
    from .spinmodel import CU_ISOTOPES, DEFAULT_ETA_FLOOR, isotope_family_spectrum

    spectrum = isotope_family_spectrum(
        spec,
        isotopes=CU_ISOTOPES if isotopes is None else isotopes,
        eta_floor=DEFAULT_ETA_FLOOR if eta_floor is None else eta_floor,
    )
    return BathSpectrumModel.from_geometry(spectrum, tau_e, geometry, gamma_e=gamma_e)
