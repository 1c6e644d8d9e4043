"""CuPc electron-nuclear spin Hamiltonian and hyperfine transition spectrum.

The central spin is the Cu(II) electron (S = 1/2) coupled to the copper
nucleus (I = 3/2) and the four coordinating nitrogens (I = 1), giving a
Hilbert space of dimension 2 * 4 * 3^4 = 648 = 2M.  Diagonalizing the
Hamiltonian yields the transition frequencies omega_ij = omega_i - omega_j
and weights eta_ij = |<psi_i|S_perp|psi_j>|^2 / M that parameterize the
bath autocorrelation.

Conventions
-----------
* The lab frame has z along the applied field (the NV axis); the molecular
  axis is tilted by theta_e toward +x, i.e. tensors are rotated by
  R_y(theta_e) with R_y = [[c,0,s],[0,1,0],[-s,0,c]].
* S_perp = S_x in the lab frame; eta sums run over ordered pairs (i, j),
  i != j, so the spectrum contains both +omega and -omega entries.
* All frequencies are angular (rad/s).  Hyperfine constants are supplied
  in MHz at the config boundary and converted on ingest.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import reduce

import numpy as np

from .constants import HBAR, MU_B
from .errors import DimensionError, SpectrumError

DEFAULT_ETA_FLOOR = 1e-12
DEFAULT_DIM_CAP = 4096
# Transitions between states closer than this (rad/s) count as degenerate
# and are folded into the static bin together with the diagonal pairs.
DEGENERACY_FLOOR = 2.0 * np.pi * 1.0


@dataclass(frozen=True)
class HyperfineTensor:
    """Diagonal hyperfine tensor in the molecular principal frame (rad/s)."""

    axx: float
    ayy: float
    azz: float

    @classmethod
    def from_mhz(cls, axx: float, ayy: float, azz: float) -> "HyperfineTensor":
        f = 2.0 * np.pi * 1e6
        return cls(axx * f, ayy * f, azz * f)

    def scaled(self, factor: float) -> "HyperfineTensor":
        return HyperfineTensor(self.axx * factor, self.ayy * factor, self.azz * factor)

    def principal_values(self) -> np.ndarray:
        return np.array([self.axx, self.ayy, self.azz], dtype=float)

    def swapped_inplane(self) -> "HyperfineTensor":
        """Principal frame rotated 90 deg about the molecular axis (x <-> y)."""
        return HyperfineTensor(self.ayy, self.axx, self.azz)


@dataclass(frozen=True)
class Isotope:
    label: str
    abundance: float
    scale: float  # hyperfine scale factor relative to the reference (63Cu) tensor
    spin: float = 1.5


#: Natural-abundance copper isotope table; 65Cu couplings scale with its
#: larger nuclear gyromagnetic ratio.
CU_ISOTOPES: tuple[Isotope, ...] = (
    Isotope("63Cu", 0.6915, 1.0, 1.5),
    Isotope("65Cu", 0.3085, 1.07, 1.5),
)

#: Reference hyperfine tensors (63Cu).  The nitrogen unique axis lies along
#: the in-plane Cu-N bond.
CU_TENSOR = HyperfineTensor.from_mhz(-83.0, -83.0, -648.0)
N_TENSOR = HyperfineTensor.from_mhz(57.0, 45.0, 45.0)


@dataclass(frozen=True)
class SpinSystemSpec:
    """One CuPc electron spin at a given field and molecular orientation."""

    b_field: float  # tesla
    theta_e: float  # radians, molecular axis vs. field
    g_parallel: float
    g_perp: float
    cu_tensor: HyperfineTensor = CU_TENSOR
    n_tensor: HyperfineTensor = N_TENSOR
    isotope: Isotope = CU_ISOTOPES[0]
    n_spin: float = 1.0
    n_nitrogens: int = 4

    def __post_init__(self) -> None:
        if self.b_field < 0:
            raise ValueError("b_field must be >= 0")
        if not 0.0 <= self.theta_e <= np.pi / 2 + 1e-12:
            raise ValueError("theta_e must lie in [0, pi/2]")
        if self.n_nitrogens < 0:
            raise ValueError("n_nitrogens must be >= 0")
        for s in (self.isotope.spin, self.n_spin):
            if s < 0 or abs(2 * s - round(2 * s)) > 1e-9:
                raise ValueError(f"invalid spin quantum number {s}")

    def with_isotope(self, isotope: Isotope) -> "SpinSystemSpec":
        return replace(self, isotope=isotope)

    def hilbert_dimension(self) -> int:
        dim_cu = int(round(2 * self.isotope.spin + 1))
        dim_n = int(round(2 * self.n_spin + 1))
        return 2 * dim_cu * dim_n**self.n_nitrogens


@dataclass(frozen=True)
class IsotopeSpectrum:
    """Transition list for a single isotope at fixed (B, theta_e)."""

    isotope: Isotope
    omega: np.ndarray  # rad/s, ordered pairs (both signs present)
    eta: np.ndarray  # dimensionless weights, same length as omega
    m_states: int  # M = half the Hilbert dimension
    eta_sum_all: float  # sum of eta over ALL ordered pairs incl. diagonal
    eta_static: float  # diagonal + degenerate weight folded out of the list
    eta_pruned: float  # weight removed by the eta floor

    def __post_init__(self) -> None:
        if np.any(self.eta < 0):
            raise ValueError("eta weights must be nonnegative")


@dataclass(frozen=True)
class TransitionSpectrum:
    """Abundance-weighted family of isotope spectra."""

    components: tuple[IsotopeSpectrum, ...]

    def __post_init__(self) -> None:
        total = sum(c.isotope.abundance for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"isotope abundances sum to {total}, expected 1")

    def merged(self) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated (omega, abundance*eta) arrays over all isotopes."""
        omega = np.concatenate([c.omega for c in self.components])
        weight = np.concatenate(
            [c.isotope.abundance * c.eta for c in self.components]
        )
        return omega, weight


def spin_operators(spin: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (Sx, Sy, Sz) for a single spin in the |s, m> basis, m descending."""
    dim = int(round(2 * spin + 1))
    m = spin - np.arange(dim)
    sz = np.diag(m).astype(complex)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    raise_elems = np.sqrt(spin * (spin + 1) - m[1:] * (m[1:] + 1))
    sp = np.zeros((dim, dim), dtype=complex)
    sp[np.arange(dim - 1), np.arange(1, dim)] = raise_elems
    sm = sp.conj().T
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    return sx, sy, sz


def rotation_about_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotate_tensor(t: HyperfineTensor, theta_e: float) -> np.ndarray:
    """Lab-frame tensor R(theta_e) diag(axx, ayy, azz) R(theta_e)^T.

    R tilts the molecular axis by theta_e from the lab z-axis toward +x,
    so the xz entry of a tilted axial tensor is positive.
    """
    r = rotation_about_y(theta_e)
    return r @ np.diag(t.principal_values()) @ r.T


def _g_tensor_lab(spec: SpinSystemSpec) -> np.ndarray:
    r = rotation_about_y(spec.theta_e)
    g_mol = np.diag([spec.g_perp, spec.g_perp, spec.g_parallel])
    return r @ g_mol @ r.T


def _lab_hyperfine_tensors(spec: SpinSystemSpec) -> list[tuple[float, np.ndarray]]:
    """(nuclear spin, lab-frame 3x3 tensor) for Cu then each nitrogen.

    The four nitrogens share principal values but their in-plane unique
    axis follows the molecular four-fold symmetry: successive nitrogens
    have the principal frame rotated by 90 deg about the molecular axis,
    which swaps the x and y principal values.
    """
    cu = spec.cu_tensor.scaled(spec.isotope.scale)
    out = [(spec.isotope.spin, rotate_tensor(cu, spec.theta_e))]
    for k in range(spec.n_nitrogens):
        t = spec.n_tensor if k % 2 == 0 else spec.n_tensor.swapped_inplane()
        out.append((spec.n_spin, rotate_tensor(t, spec.theta_e)))
    return out


def build_hamiltonian(spec: SpinSystemSpec, dim_cap: int = DEFAULT_DIM_CAP) -> np.ndarray:
    """Dense Hamiltonian in rad/s: electron Zeeman plus S.A.I hyperfine terms.

    Returns a real symmetric array when the matrix is exactly real in the
    product basis (the generic case here), otherwise complex Hermitian.
    """
    dim = spec.hilbert_dimension()
    if dim > dim_cap:
        raise DimensionError(
            f"Hilbert dimension {dim} exceeds cap {dim_cap}; "
            "check nuclear spin counts"
        )

    nuclei = _lab_hyperfine_tensors(spec)
    nuc_dims = [int(round(2 * s + 1)) for s, _ in nuclei]
    nuc_dim_total = int(np.prod(nuc_dims)) if nuc_dims else 1

    def nuclear_op(site: int, op: np.ndarray) -> np.ndarray:
        factors = [
            op if k == site else np.eye(d, dtype=complex)
            for k, d in enumerate(nuc_dims)
        ]
        return reduce(np.kron, factors, np.eye(1, dtype=complex))

    # Assemble H = sum_mu S_mu (x) B_mu with B_mu acting on the nuclear space.
    b_ops = [np.zeros((nuc_dim_total, nuc_dim_total), dtype=complex) for _ in range(3)]
    zeeman_row = (MU_B * spec.b_field / HBAR) * _g_tensor_lab(spec)[2, :]
    for mu in range(3):
        if zeeman_row[mu] != 0.0:
            b_ops[mu] += zeeman_row[mu] * np.eye(nuc_dim_total)
    for site, (s_nuc, a_lab) in enumerate(nuclei):
        ix, iy, iz = spin_operators(s_nuc)
        site_ops = [nuclear_op(site, o) for o in (ix, iy, iz)]
        for mu in range(3):
            for nu in range(3):
                if a_lab[mu, nu] != 0.0:
                    b_ops[mu] += a_lab[mu, nu] * site_ops[nu]

    sx, sy, sz = spin_operators(0.5)
    h = (
        np.kron(sx, b_ops[0])
        + np.kron(sy, b_ops[1])
        + np.kron(sz, b_ops[2])
    )
    scale = max(np.abs(h).max(), 1.0)
    if np.abs(h.imag).max() <= 1e-14 * scale:
        return np.ascontiguousarray(h.real)
    return h


def transverse_electron_operator(spec: SpinSystemSpec) -> np.ndarray:
    """Full-space S_perp = S_x (lab frame) for the given spin system."""
    dim = spec.hilbert_dimension()
    sx = spin_operators(0.5)[0].real
    return np.kron(sx, np.eye(dim // 2))


def transition_spectrum(
    spec: SpinSystemSpec,
    eta_floor: float = DEFAULT_ETA_FLOOR,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> IsotopeSpectrum:
    """Diagonalize the spin Hamiltonian and list (omega_ij, eta_ij) pairs.

    Ordered pairs i != j are returned sorted by omega; diagonal pairs and
    transitions between degenerate states go to the static bin, and pairs
    with eta below `eta_floor` are pruned (their weight is tallied so the
    trace identity can still be audited).
    """
    h = build_hamiltonian(spec, dim_cap=dim_cap)
    try:
        evals, evecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - pathological input
        raise SpectrumError(f"eigensolver failed: {exc}") from exc

    dim = h.shape[0]
    m_states = dim // 2
    sx_full = transverse_electron_operator(spec)
    if np.iscomplexobj(evecs):
        w = evecs.conj().T @ sx_full @ evecs
        eta_mat = (w.real**2 + w.imag**2) / m_states
    else:
        w = evecs.T @ sx_full @ evecs
        eta_mat = w**2 / m_states
    eta_sum_all = float(eta_mat.sum())

    omega_mat = evals[:, None] - evals[None, :]
    off = ~np.eye(dim, dtype=bool)
    oscillating = off & (np.abs(omega_mat) >= DEGENERACY_FLOOR)
    eta_static = float(eta_mat[~oscillating].sum())

    keep = oscillating & (eta_mat >= eta_floor)
    eta_pruned = float(eta_mat[oscillating & ~keep].sum())

    omega = omega_mat[keep]
    eta = eta_mat[keep]
    order = np.argsort(omega)
    return IsotopeSpectrum(
        isotope=spec.isotope,
        omega=np.ascontiguousarray(omega[order]),
        eta=np.ascontiguousarray(eta[order]),
        m_states=m_states,
        eta_sum_all=eta_sum_all,
        eta_static=eta_static,
        eta_pruned=eta_pruned,
    )


def isotope_family_spectrum(
    spec: SpinSystemSpec,
    isotopes: tuple[Isotope, ...] = CU_ISOTOPES,
    eta_floor: float = DEFAULT_ETA_FLOOR,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> TransitionSpectrum:
    """Transition spectra for every isotope in the table, abundance-weighted.

    The copper tensor of `spec` is the reference; each isotope applies its
    own hyperfine scale factor on top.
    """
    components = tuple(
        transition_spectrum(spec.with_isotope(iso), eta_floor=eta_floor, dim_cap=dim_cap)
        for iso in isotopes
    )
    return TransitionSpectrum(components=components)
