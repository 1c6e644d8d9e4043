"""Electron-electron-limited correlation time of the CuPc film.

Each CuPc electron spin is relaxed by the dipolar noise of its neighbours
in the molecular lattice.  The pairwise spectral density splits into a
quasi-static channel (the neighbour's longitudinal field, a Lorentzian at
the probing transition frequency, angular weight (9/2) sin^2(2 Theta)) and
a flip-flop channel (the neighbour's own transition spectrum, angular
weight [5 - 6 cos(2 Theta) + 9 cos^2(2 Theta)]/4).  Averaging the
golden-rule rate over the probe's transition spectrum closes the
self-consistent equation

    1/tau_e = gamma_e^2 sum_k rho_k sum_ij eta_ij sum_{m != n} S_{n,m}(omega_ij; tau_e)

which is solved here by damped fixed-point iteration.  Two closed-form
approximations bracket the solution: `no_hyperfine_tau` (all transitions
coincident — overestimates the interaction) and `delta_approx_tau`
(only exactly matching transitions flip-flop — underestimates it).

The dipolar matrix used throughout is

    D_mu_nu = sqrt(S(S+1)/3) * (mu0 hbar gamma_e^2 / 4 pi) (3 n_mu n_nu - delta_mu_nu) / r^3

in rad/s, i.e. the spin-magnitude factor is folded in so that
gamma_e^2 * prefactor(S_{n,m}) = sum of squared D elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import GAMMA_E, HBAR, MU_0
from .errors import ConvergenceError
from .spinmodel import TransitionSpectrum

#: Electron spin magnitude factor S(S+1) for S = 1/2.
S_SPIN_FACTOR = 0.75

#: Default delta-function realization width for `delta_approx_tau` (rad/s).
DEFAULT_COINCIDENCE_BIN = 2.0 * np.pi * 10e3

#: Background (spin-lattice + electron-nuclear) rate at room temperature,
#: the 1/38 ns^-1 extrapolation consumed by the total-rate composition.
BACKGROUND_RATE_ROOM_T = 1.0 / 38e-9

#: Fraction of the total line weight that may be dropped when compressing
#: the transition list for the time-domain overlap integrals.
_WEIGHT_TOL = 1e-4

#: Time-grid resolution: points per period of the fastest spectral line.
_PTS_PER_PERIOD = 24

#: Time-grid extent in units of the current correlation time.
_DECADES_TMAX = 40.0


@dataclass(frozen=True)
class LatticeModel:
    """Molecular lattice seen from one reference molecule.

    All lengths in meters.  `cell` rows are the lattice vectors; `sites`
    are fractional positions of molecules within the cell; `field_dir` is
    the external-field direction expressed in the crystal frame, which
    fixes every pair angle Theta_nm; `molecular_axis` (crystal frame) is
    carried along for bookkeeping so a config fully determines both the
    lattice geometry and the single-molecule spectrum orientation.
    """

    cell: np.ndarray  # (3, 3) lattice vectors, rows
    sites: np.ndarray  # (n_sites, 3) fractional coordinates
    field_dir: np.ndarray  # (3,) crystal-frame unit vector
    cutoff: float  # pair-list cutoff radius (m)
    molecular_axis: np.ndarray | None = None

    def __post_init__(self) -> None:
        cell = np.asarray(self.cell, dtype=float)
        sites = np.atleast_2d(np.asarray(self.sites, dtype=float))
        fdir = np.asarray(self.field_dir, dtype=float)
        if cell.shape != (3, 3):
            raise ValueError("cell must be a 3x3 matrix of lattice vectors")
        if abs(np.linalg.det(cell)) < 1e-40:
            raise ValueError("cell vectors are degenerate")
        if sites.shape[1] != 3 or sites.shape[0] < 1:
            raise ValueError("sites must be (n, 3) fractional coordinates")
        norm = np.linalg.norm(fdir)
        if norm == 0:
            raise ValueError("field_dir must be nonzero")
        object.__setattr__(self, "cell", cell)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "field_dir", fdir / norm)
        nn = _nearest_neighbor_distance(cell, sites)
        if self.cutoff < 2.0 * nn:
            raise ValueError(
                f"cutoff {self.cutoff:.3e} m must be >= twice the "
                f"nearest-neighbor distance {nn:.3e} m"
            )

    def with_cutoff(self, cutoff: float) -> "LatticeModel":
        return LatticeModel(
            cell=self.cell,
            sites=self.sites,
            field_dir=self.field_dir,
            cutoff=cutoff,
            molecular_axis=self.molecular_axis,
        )


@dataclass(frozen=True)
class TauSolveReport:
    """Outcome of the self-consistent correlation-time solve."""

    tau_e: float  # seconds
    iterations: int
    residual: float  # relative fixed-point mismatch at the solution
    cutoff_convergence: float  # relative tau change when cutoff doubled
    converged: bool
    trajectory: tuple[float, ...] = field(default=(), repr=False)


def _nearest_neighbor_distance(cell: np.ndarray, sites: np.ndarray) -> float:
    offsets = np.array(
        [(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)]
    )
    best = np.inf
    for s0 in sites:
        for s1 in sites:
            for off in offsets:
                d = np.linalg.norm((s1 - s0 + off) @ cell)
                if d > 1e-15 and d < best:
                    best = d
    return float(best)


def pair_geometry(lattice: LatticeModel) -> list[tuple[float, float]]:
    """All (r_nm, Theta_nm) pairs within the cutoff of a reference site.

    Theta_nm is the angle between the inter-molecular vector and the field
    axis.  Pairs are enumerated once per reference (inequivalent) site and
    averaged over sites so a multi-site cell contributes per-molecule.
    """
    cell = lattice.cell
    # supercell extent: enough cells to cover the cutoff sphere
    inv = np.linalg.inv(cell)
    extents = np.ceil(lattice.cutoff * np.linalg.norm(inv, axis=0)).astype(int) + 1
    pairs: list[tuple[float, float]] = []
    fdir = lattice.field_dir
    grids = [np.arange(-e, e + 1) for e in extents]
    ii, jj, kk = np.meshgrid(*grids, indexing="ij")
    offsets = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
    n_sites = lattice.sites.shape[0]
    per_site: list[list[tuple[float, float]]] = []
    for s0 in lattice.sites:
        vecs = ((lattice.sites[None, :, :] + offsets[:, None, :]) - s0) @ cell
        vecs = vecs.reshape(-1, 3)
        dist = np.linalg.norm(vecs, axis=1)
        keep = (dist > 1e-15) & (dist <= lattice.cutoff)
        vecs, dist = vecs[keep], dist[keep]
        cosang = np.clip(vecs @ fdir / dist, -1.0, 1.0)
        per_site.append(list(zip(dist.tolist(), np.arccos(cosang).tolist())))
    if n_sites == 1:
        pairs = per_site[0]
    else:
        # average over inequivalent reference sites: weight 1/n_sites each
        # by replicating the union; downstream sums divide by multiplicity
        pairs = [p for plist in per_site for p in plist]
    if not pairs:
        raise ValueError("empty pair list: cutoff too small for this cell")
    return pairs


def _pair_arrays(lattice: LatticeModel) -> tuple[np.ndarray, np.ndarray, int]:
    pairs = pair_geometry(lattice)
    r = np.array([p[0] for p in pairs])
    theta = np.array([p[1] for p in pairs])
    return r, theta, lattice.sites.shape[0]


def dipolar_prefactor(r: float | np.ndarray) -> float | np.ndarray:
    """(mu0 hbar gamma_e / 4 pi)^2 * S(S+1) / (3 r^6), in tesla^2."""
    c = (MU_0 * HBAR * GAMMA_E / (4.0 * np.pi)) ** 2
    return c * S_SPIN_FACTOR / (3.0 * np.asarray(r) ** 6)


def quasi_static_factor(theta: float | np.ndarray) -> float | np.ndarray:
    """Angular weight (9/2) sin^2(2 Theta) of the longitudinal channel."""
    return 4.5 * np.sin(2.0 * np.asarray(theta)) ** 2


def flip_flop_factor(theta: float | np.ndarray) -> float | np.ndarray:
    """Angular weight [5 - 6 cos(2 Theta) + 9 cos^2(2 Theta)] / 4.

    Equals the transverse dipolar block sum_{mu,nu in {x,y}} (3 n_mu n_nu
    - delta_mu_nu)^2 of a pair whose axis makes angle Theta with the field.
    """
    c2 = np.cos(2.0 * np.asarray(theta))
    return (5.0 - 6.0 * c2 + 9.0 * c2**2) / 4.0


def dipolar_coupling(r: float | np.ndarray) -> float | np.ndarray:
    """sqrt(S(S+1)/3) * (mu0 hbar gamma_e^2 / 4 pi) / r^3, rad/s.

    Scalar magnitude of the D matrix; multiply by (3 n_mu n_nu -
    delta_mu_nu) for a specific element.
    """
    return (
        np.sqrt(S_SPIN_FACTOR / 3.0)
        * MU_0
        * HBAR
        * GAMMA_E**2
        / (4.0 * np.pi)
        / np.asarray(r) ** 3
    )


def _lorentzian(x, tau: float):
    return tau / (np.square(x * tau) + 1.0)


def pair_spectral_density(
    pair: tuple[float, float],
    tau_e: float,
    spectrum: TransitionSpectrum,
    omega: float,
) -> float:
    """S_{n,m}(omega) of one neighbour pair, in tesla^2 s.

    prefactor * { (9/2) sin^2(2 Theta) L(omega)
                  + F(Theta) sum_k rho_k sum_ij eta_ij [L(omega_ij - omega)
                                                        + L(omega_ij + omega)] }
    with L(x) = tau_e / (x^2 tau_e^2 + 1).
    """
    r, theta = pair
    if r <= 0:
        raise ValueError("pair distance must be > 0")
    if tau_e <= 0:
        raise ValueError("tau_e must be > 0")
    qs = quasi_static_factor(theta) * _lorentzian(omega, tau_e)
    ff_sum = 0.0
    for comp in spectrum.components:
        ff_sum += comp.isotope.abundance * float(
            (
                _lorentzian(comp.omega - omega, tau_e)
                + _lorentzian(comp.omega + omega, tau_e)
            )
            @ comp.eta
        )
    return float(dipolar_prefactor(r) * (qs + flip_flop_factor(theta) * ff_sum))


def _merged_weights(spectrum: TransitionSpectrum) -> tuple[np.ndarray, np.ndarray]:
    """Abundance-weighted (omega, weight) over all isotopes, both signs."""
    omega, weight = spectrum.merged()
    return omega, weight


def _compress_lines(
    omega: np.ndarray, weight: np.ndarray, tol: float = _WEIGHT_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Drop the lightest lines carrying at most `tol` of the total weight."""
    order = np.argsort(weight)
    cum = np.cumsum(weight[order])
    keep_from = int(np.searchsorted(cum, tol * cum[-1]))
    keep = np.sort(order[keep_from:])
    return omega[keep], weight[keep]


class _OverlapIntegrator:
    """Cached time-domain evaluation of the two channel integrals.

    With C(t) = sum_a w_a cos(omega_a t) over the signed line list,
        I1(tau) = int_0^inf e^{-t/tau} C(t) dt   = sum_a w_a L(omega_a)
        I2(tau) = int_0^inf e^{-t/tau} C(t)^2 dt
                = (1/2) sum_ab w_a w_b [L(omega_a - omega_b)
                                        + L(omega_a + omega_b)]
    so the double Lorentzian sum of the flip-flop channel is 2 * I2.
    C and C^2 are tabulated once per spectrum and reused across fixed-point
    iterations; the grid is extended on demand when tau grows.
    """

    def __init__(self, omega: np.ndarray, weight: np.ndarray):
        self.omega, self.weight = _compress_lines(omega, weight)
        w_max = float(np.max(np.abs(self.omega))) if self.omega.size else 0.0
        if w_max == 0.0:
            w_max = 1.0
        self.dt = 2.0 * np.pi / (w_max * _PTS_PER_PERIOD)
        self.t_max = 0.0
        self.c = np.zeros(0)
        self.c_sq = np.zeros(0)

    def _extend(self, t_max: float) -> None:
        n_old = self.c.size
        n_new = int(np.ceil(t_max / self.dt)) + 1
        if n_new <= n_old:
            return
        t_new = np.arange(n_old, n_new) * self.dt
        c_new = np.zeros(t_new.size)
        for lo in range(0, t_new.size, 256):
            block = t_new[lo : lo + 256, None]
            c_new[lo : lo + 256] = np.cos(block * self.omega) @ self.weight
        self.c = np.concatenate([self.c, c_new])
        self.c_sq = np.concatenate([self.c_sq, c_new**2])
        self.t_max = (self.c.size - 1) * self.dt

    def integrals(self, tau: float) -> tuple[float, float]:
        t_need = _DECADES_TMAX * tau
        if t_need > self.t_max:
            self._extend(t_need)
        n = min(self.c.size, int(np.ceil(t_need / self.dt)) + 1)
        t = np.arange(n) * self.dt
        env = np.exp(-t / tau)
        env[0] *= 0.5  # trapezoid end correction at t = 0
        i1 = float(env @ self.c[:n]) * self.dt
        i2 = float(env @ self.c_sq[:n]) * self.dt
        return i1, i2


def _rate_from_integrals(
    qs_geom: float, ff_geom: float, i1: float, i2: float
) -> float:
    return GAMMA_E**2 * (qs_geom * i1 + ff_geom * 2.0 * i2)


def _geometry_sums(lattice: LatticeModel) -> tuple[float, float]:
    r, theta, n_sites = _pair_arrays(lattice)
    pref = dipolar_prefactor(r)
    qs_geom = float(np.sum(pref * quasi_static_factor(theta))) / n_sites
    ff_geom = float(np.sum(pref * flip_flop_factor(theta))) / n_sites
    return qs_geom, ff_geom


def solve_tau_self_consistent(
    lattice: LatticeModel,
    spectrum: TransitionSpectrum,
    initial_tau: float,
    rel_tol: float = 1e-3,
    max_iter: int = 200,
    damping: float = 0.5,
    check_cutoff: bool = True,
) -> TauSolveReport:
    """Damped fixed-point solve of the self-consistent tau_e equation.

    Iterates tau <- (1 - damping) * tau + damping / rate(tau) until two
    successive values agree to `rel_tol`.  The report carries the full
    trajectory and, when `check_cutoff`, the relative change of tau_e when
    the pair-list cutoff is doubled.
    """
    if initial_tau <= 0:
        raise ValueError("initial_tau must be > 0")
    omega, weight = _merged_weights(spectrum)
    integ = _OverlapIntegrator(omega, weight)
    qs_geom, ff_geom = _geometry_sums(lattice)

    def one_solve(qs_g: float, ff_g: float, tau0: float) -> tuple[float, int, float, list[float]]:
        tau = tau0
        traj = [tau]
        for it in range(1, max_iter + 1):
            i1, i2 = integ.integrals(tau)
            rate = _rate_from_integrals(qs_g, ff_g, i1, i2)
            if not np.isfinite(rate) or rate <= 0:
                raise ConvergenceError(
                    f"fixed-point rate became non-positive at iteration {it}"
                )
            tau_new = (1.0 - damping) * tau + damping / rate
            resid = abs(tau_new - tau) / tau_new
            traj.append(tau_new)
            tau = tau_new
            if resid < rel_tol:
                return tau, it, resid, traj
        raise ConvergenceError(
            f"self-consistent tau did not converge in {max_iter} iterations; "
            f"last values {traj[-3:]}"
        )

    tau, iters, resid, traj = one_solve(qs_geom, ff_geom, initial_tau)

    cutoff_change = float("nan")
    if check_cutoff:
        wide = lattice.with_cutoff(2.0 * lattice.cutoff)
        qs2, ff2 = _geometry_sums(wide)
        tau2, _, _, _ = one_solve(qs2, ff2, tau)
        cutoff_change = abs(tau2 - tau) / tau

    return TauSolveReport(
        tau_e=tau,
        iterations=iters,
        residual=resid,
        cutoff_convergence=cutoff_change,
        converged=True,
        trajectory=tuple(traj),
    )


def no_hyperfine_tau(lattice: LatticeModel) -> float:
    """tau when all transitions are assumed coincident (lower bound).

    1/tau = sqrt( sum_{m != n} sum_{mu,nu in {x,y}} (D^{n,m}_{mu,nu})^2 )
    where the transverse block sum equals dipolar_coupling(r)^2 * F(Theta).
    """
    r, theta, n_sites = _pair_arrays(lattice)
    rate_sq = np.sum(dipolar_coupling(r) ** 2 * flip_flop_factor(theta)) / n_sites
    return float(1.0 / np.sqrt(rate_sq))


def coincidence_weight(
    spectrum: TransitionSpectrum, bin_width: float = DEFAULT_COINCIDENCE_BIN
) -> float:
    """Normalized coincident-transition weight W in [0, 1].

    W = sum_ab w_a w_b (1[|omega_a - omega_b| < bin] +
                        1[|omega_a + omega_b| < bin]) / (sum_a w_a)^2
    over the signed line list.  W -> 1 when every transition sits at the
    same single frequency (the no-hyperfine limit).
    """
    omega, weight = _merged_weights(spectrum)
    order = np.argsort(omega)
    om, w = omega[order], weight[order]
    cum = np.concatenate([[0.0], np.cumsum(w)])
    total = cum[-1]

    def window_sum(centers: np.ndarray) -> np.ndarray:
        hi = np.searchsorted(om, centers + bin_width, side="right")
        lo = np.searchsorted(om, centers - bin_width, side="left")
        return cum[hi] - cum[lo]

    # diff term: partners within bin of +omega_a; sum term: within bin of
    # -omega_a (so omega_a + omega_b ~ 0)
    s = float(w @ window_sum(om)) + float(w @ window_sum(-om))
    return s / total**2


def delta_approx_tau(
    lattice: LatticeModel,
    spectrum: TransitionSpectrum,
    bin_width: float = DEFAULT_COINCIDENCE_BIN,
) -> float:
    """tau with Lorentzians collapsed to coincidence windows (upper bound).

    1/tau = sqrt( sum_{m != n} sum_{mu,nu in {x,y}} (D^{n,m}_{mu,nu})^2 * W )
    with W the normalized coincident weight, so forcing all transitions
    identical (W = 1) recovers `no_hyperfine_tau` exactly.  Returns inf
    when no transitions coincide within the bin.
    """
    w_hat = coincidence_weight(spectrum, bin_width)
    if w_hat <= 0.0:
        return float("inf")
    return no_hyperfine_tau(lattice) / np.sqrt(w_hat)


def total_correlation_rate(
    r_sl: float, r_en: float = 0.0, r_ee: float = 0.0
) -> float:
    """1/tau_e as the sum of spin-lattice, electron-nuclear and
    electron-electron rates.  The room-temperature spin-lattice +
    electron-nuclear bundle is `BACKGROUND_RATE_ROOM_T` (1/38 ns^-1)."""
    rates = (r_sl, r_en, r_ee)
    if any(r < 0 for r in rates):
        raise ValueError("rates must be >= 0")
    return float(sum(rates))
