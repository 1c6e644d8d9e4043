"""Shared synthetic-data builders and independent numeric oracles."""

from __future__ import annotations

import numpy as np

from spinbath.bathspectrum import coupling_b0_sq
from spinbath.relaxometry import T1Record

T1_FREE = 5.0e-3  # intrinsic film-free T1 used for all synthetic records


def slab_dipolar_quadrature(d, h, n_e, alpha, n_z=96, n_rho=128, n_phi=64):
    """Quadrature oracle for the film-averaged squared dipolar couplings.

    Integrates the squared dipole-field tensor of electron moments over a
    uniform slab (film normal = z, thickness h, standoff d), with the
    probe's quantization axis tilted by `alpha` from the normal.
    Returns (var_long, var_perp) in tesla^2: the probe-transverse field
    variance sourced by the bath-spin component along the probe axis,
    and by the two bath-spin components transverse to it, for spin-1/2
    (<S_mu^2> = 1/4 per component).
    """
    from spinbath.constants import GAMMA_E, HBAR, MU_0

    pref = MU_0 * HBAR * GAMMA_E / (4.0 * np.pi)
    # probe frame: z' along the quantization axis, x' in the (normal, z')
    # plane, y' completing
    zp = np.array([np.sin(alpha), 0.0, np.cos(alpha)])
    xp = np.array([np.cos(alpha), 0.0, -np.sin(alpha)])
    yp = np.array([0.0, 1.0, 0.0])

    gl_z, wz = np.polynomial.legendre.leggauss(n_z)
    z = d + (gl_z + 1.0) * 0.5 * h
    wz = wz * 0.5 * h
    # rho = z tan(t) substitution handles the wide flat tail
    t_max = np.arctan(60.0)
    gl_t, wt = np.polynomial.legendre.leggauss(n_rho)
    t = (gl_t + 1.0) * 0.5 * t_max
    wt = wt * 0.5 * t_max
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2.0 * np.pi / n_phi

    var_long = 0.0
    var_perp = 0.0
    for iz, zi in enumerate(z):
        rho = zi * np.tan(t)  # (n_rho,)
        drho = zi / np.cos(t) ** 2 * wt
        x = rho[:, None] * np.cos(phi)[None, :]
        y = rho[:, None] * np.sin(phi)[None, :]
        r = np.sqrt(x**2 + y**2 + zi**2)
        nx, ny, nz = x / r, y / r, zi / r
        inv_r3 = pref / r**3

        def t_comp(e_mu, e_nu):
            n_mu = nx * e_mu[0] + ny * e_mu[1] + nz * e_mu[2]
            n_nu = nx * e_nu[0] + ny * e_nu[1] + nz * e_nu[2]
            return inv_r3 * (3.0 * n_mu * n_nu - float(e_mu @ e_nu))

        long_sq = t_comp(xp, zp) ** 2 + t_comp(yp, zp) ** 2
        perp_sq = (
            t_comp(xp, xp) ** 2
            + t_comp(xp, yp) ** 2
            + t_comp(yp, xp) ** 2
            + t_comp(yp, yp) ** 2
        )
        meas = (rho * drho)[:, None] * wphi * wz[iz]
        var_long += float(np.sum(long_sq * meas))
        var_perp += float(np.sum(perp_sq * meas))
    # <S_mu^2> = 1/4 for each spin-1/2 component
    return 0.25 * n_e * var_long, 0.25 * n_e * var_perp


def synth_records(
    model,
    geometry,
    tau: float,
    theta: float,
    rng: np.random.Generator,
    noise: float = 0.05,
    fields=None,
    nv_id: str = "NV1",
    d_nv: float | None = None,
    sigma_rel: float | None = None,
) -> tuple[T1Record, ...]:
    """Forward-model ΔΓ₁ at truth, add multiplicative noise, wrap as records.

    `sigma_rel` is the reported relative uncertainty; it defaults to the
    noise level but stays finite for noise = 0 (exact-data tests).
    """
    geom = geometry if d_nv is None else geometry.replace(d_nv=d_nv)
    fields = tuple(fields) if fields is not None else model.fields_gauss
    b0 = coupling_b0_sq(geom)
    idx = [model.fields_gauss.index(b) for b in fields]
    rates = model.delta_gammas(tau, theta, b0)
    if sigma_rel is None:
        sigma_rel = noise if noise > 0 else 0.03
    records = []
    for i, b in zip(idx, fields):
        dg = rates[i] * (1.0 + noise * rng.standard_normal())
        dg = max(dg, 1e-12)
        t1c = 1.0 / (dg + 1.0 / T1_FREE)
        records.append(
            T1Record(
                nv_id=nv_id,
                b_gauss=b,
                t1_cupc=t1c,
                t1_cupc_sigma=sigma_rel * t1c,
                t1_free=T1_FREE,
                t1_free_sigma=0.02 * T1_FREE,
            )
        )
    return tuple(records)


def records_to_csv(records, path) -> None:
    lines = ["nv_id,b_gauss,t1_cupc_us,t1_cupc_sigma_us,t1_free_us,t1_free_sigma_us"]
    for r in records:
        cells = (
            float(r.t1_cupc) * 1e6,
            float(r.t1_cupc_sigma) * 1e6,
            float(r.t1_free) * 1e6,
            float(r.t1_free_sigma) * 1e6,
        )
        lines.append(f"{r.nv_id},{r.b_gauss}," + ",".join(repr(c) for c in cells))
    path.write_text("\n".join(lines) + "\n")


def lindblad_correlators(omega0: float, tau: float, t_grid):
    """Spin-1/2 correlators from direct master-equation propagation.

    H = omega0 * S_z with three depolarizing channels sqrt(gamma) sigma_k
    (k = x, y, z), gamma = 1/(4 tau), so every Pauli component decays at
    1/tau.  Returns <S_k(t) S_k(0)> at the infinite-temperature state for
    k in {x, y, z}, each evaluated by exponentiating the 4x4 Liouvillian
    (column-stacking convention: vec(A rho B) = kron(B.T, A) vec(rho)).
    """
    from scipy.linalg import expm

    sx = 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    sy = 0.5 * np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
    sz = 0.5 * np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    h = omega0 * sz
    gamma = 1.0 / (4.0 * tau)
    liou = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for pauli in (2 * sx, 2 * sy, 2 * sz):
        jump = np.sqrt(gamma) * pauli
        jdj = jump.conj().T @ jump
        liou += np.kron(jump.conj(), jump) - 0.5 * (
            np.kron(eye, jdj) + np.kron(jdj.T, eye)
        )
    rho_inf = eye / 2.0
    out = {}
    for key, op in (("x", sx), ("y", sy), ("z", sz)):
        v0 = (op @ rho_inf).reshape(-1, order="F")
        vals = []
        for t in np.asarray(t_grid, dtype=float):
            rho_t = (expm(liou * t) @ v0).reshape(2, 2, order="F")
            vals.append(float(np.real(np.trace(op @ rho_t))))
        out[key] = np.array(vals)
    return out


def golden_rule_rate_quad(model, omega: float, gamma_e: float) -> float:
    """1/T1 by direct Fourier integration of the time-domain correlator.

    Evaluates gamma_e^2 * 2 * int_0^inf G_e(t) cos(omega t) dt with an
    adaptive cos-weighted quadrature after rescaling time by tau_e so the
    integrand is O(1).
    """
    from scipy.integrate import quad

    from spinbath.bathspectrum import autocorrelation

    tau = model.tau_e
    g0 = autocorrelation(model, 0.0)

    def g_scaled(u):
        return autocorrelation(model, u * tau) / g0

    val, _ = quad(
        g_scaled, 0.0, np.inf, weight="cos", wvar=omega * tau, limlst=200, limit=400
    )
    return gamma_e**2 * 2.0 * g0 * tau * val
