"""Inverse problem: estimate (tau_e, theta_e) or (d_nv, theta_e) from ΔΓ₁.

The forward model ΔΓ₁^th(B; λ) = γ_e² S_e(ω_NV(B)) is expensive through
the eigendecomposition behind the transition spectrum, so the estimator
precomputes a cache: for every (field, θ-node) pair it stores the binned
line list shifted to the NV frequency, making a single model evaluation a
pair of dot products.  ΔΓ₁ values between θ nodes are linearly
interpolated; the depth and film nuisances (d_nv, h, n_e) enter only
through the scalar multiplier b₀², so nuisance sweeps reuse the cache.

Fitting is a deterministic coarse grid scan (64 points per free
dimension) followed by Nelder–Mead refinement from every grid-local
minimum; all surviving minima are reported, never auto-selected.  The
confidence region is the set of grid points whose model prediction can be
brought within ε of every data point by some nuisance probe (corners +
center of the nuisance box).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .bathspectrum import FilmGeometry, coupling_b0_sq, geometry_factors
from .constants import GAUSS_TO_TESLA
from .errors import UnidentifiableError
from .relaxometry import MeasurementSet, NvConfig, nv_frequency
from .spinmodel import SpinSystemSpec, isotope_family_spectrum

#: Default search boxes (SI units / radians).
DEFAULT_BOXES: dict[str, tuple[float, float]] = {
    "tau_e": (0.1e-9, 100e-9),
    "theta_e": (0.0, np.pi / 2),
    "d_nv": (2e-9, 50e-9),
}

#: Grid points per free dimension in the coarse scan.
DEFAULT_GRID = 64

#: Spectral binning of the cached line lists (rad/s); 2π × 1 MHz keeps the
#: relative error of S_e below ~1e-5, far under experimental noise.
DEFAULT_BIN = 2.0 * np.pi * 1e6

#: θ-node spacing of the cache (radians).
DEFAULT_THETA_STEP = np.radians(1.0)


def _bin_lines(omega: np.ndarray, weight: np.ndarray, bin_width: float):
    """Merge lines into weight-conserving bins at their weighted means."""
    idx = np.round(omega / bin_width).astype(np.int64)
    order = np.argsort(idx, kind="stable")
    idx, omega, weight = idx[order], omega[order], weight[order]
    boundaries = np.flatnonzero(np.diff(idx)) + 1
    groups = np.split(np.arange(idx.size), boundaries)
    w_out = np.empty(len(groups))
    o_out = np.empty(len(groups))
    for g, sl in enumerate(groups):
        w = weight[sl]
        w_out[g] = w.sum()
        o_out[g] = float(omega[sl] @ w) / w_out[g]
    return o_out, w_out


class ForwardModel:
    """Cached ΔΓ₁^th(B; τ_e, θ_e) · b₀²-multiplier evaluator.

    One instance is immutable after construction and safe to share across
    fits; building it costs one diagonalization pair per (field, θ node).
    """

    def __init__(
        self,
        fields_gauss,
        base_spec: SpinSystemSpec,
        nv: NvConfig | None = None,
        theta_step: float = DEFAULT_THETA_STEP,
        bin_width: float = DEFAULT_BIN,
        theta_range: tuple[float, float] = (0.0, np.pi / 2),
    ):
        self.fields_gauss = tuple(float(b) for b in fields_gauss)
        self.nv = nv or NvConfig()
        self.base_spec = base_spec
        n_nodes = int(np.floor((theta_range[1] - theta_range[0]) / theta_step)) + 1
        self.theta_nodes = theta_range[0] + theta_step * np.arange(n_nodes)
        if self.theta_nodes[-1] < theta_range[1] - 1e-12:
            self.theta_nodes = np.append(self.theta_nodes, theta_range[1])
        self.bin_width = bin_width
        f_z, f_perp = geometry_factors()
        self._f_z, self._f_perp = f_z, f_perp
        # cache[(i_field, i_node)] = (minus, plus) float32 arrays of
        # (omega_line -/+ omega_nv) and the matching weights
        self._cache: dict[tuple[int, int], tuple] = {}
        self._omega_nv = np.array(
            [
                nv_frequency(self.nv, b * GAUSS_TO_TESLA)
                for b in self.fields_gauss
            ]
        )
        for j, theta in enumerate(self.theta_nodes):
            for i, b in enumerate(self.fields_gauss):
                spec = replace(
                    base_spec, b_field=b * GAUSS_TO_TESLA, theta_e=float(theta)
                )
                spectrum = isotope_family_spectrum(spec)
                omega, weight = spectrum.merged()
                omega, weight = _bin_lines(omega, weight, bin_width)
                w_nv = self._omega_nv[i]
                self._cache[(i, j)] = (
                    (omega - w_nv).astype(np.float32),
                    (omega + w_nv).astype(np.float32),
                    weight.astype(np.float32),
                )

    def _node_rate_unit(self, i_field: int, j_node: int, tau: float) -> float:
        """ΔΓ₁ for b₀² = 1 T² at a cache node."""
        diff, summ, w = self._cache[(i_field, j_node)]
        t = np.float32(tau)
        lines = float(
            (1.0 / ((diff * t) ** 2 + 1.0) + 1.0 / ((summ * t) ** 2 + 1.0)) @ w
        )
        w_nv = self._omega_nv[i_field]
        central = 2.0 * self._f_z / ((w_nv * tau) ** 2 + 1.0)
        s_unit = (central + self._f_perp * lines) * tau
        return self.nv.gamma_e**2 * s_unit

    def delta_gamma_unit(self, i_field: int, tau: float, theta: float) -> float:
        """ΔΓ₁ per unit b₀², linearly interpolated between θ nodes."""
        nodes = self.theta_nodes
        theta = float(np.clip(theta, nodes[0], nodes[-1]))
        j = int(np.searchsorted(nodes, theta, side="right") - 1)
        j = min(max(j, 0), nodes.size - 2)
        frac = (theta - nodes[j]) / (nodes[j + 1] - nodes[j])
        lo = self._node_rate_unit(i_field, j, tau)
        hi = self._node_rate_unit(i_field, j + 1, tau)
        return (1.0 - frac) * lo + frac * hi

    def delta_gammas(self, tau: float, theta: float, b0_sq: float) -> np.ndarray:
        """ΔΓ₁^th at every configured field, in 1/s."""
        return b0_sq * np.array(
            [
                self.delta_gamma_unit(i, tau, theta)
                for i in range(len(self.fields_gauss))
            ]
        )


@dataclass(frozen=True)
class FitProblem:
    """Data + free/fixed parameter split + forward model reference.

    `fixed` maps parameter name to (value, (lo, hi)) where the interval is
    the 95% range swept by confidence_region (degenerate lo == hi allowed).
    Recognized parameters: tau_e, theta_e, d_nv (free or fixed) and h,
    n_e (fixed only).  The film geometry supplies defaults for all of
    d_nv, h, n_e.
    """

    data: MeasurementSet
    model: ForwardModel
    geometry: FilmGeometry
    free: tuple[str, ...]
    fixed: dict[str, tuple[float, tuple[float, float]]] = field(default_factory=dict)
    boxes: dict[str, tuple[float, float]] = field(default_factory=dict)
    sigma_weighting: bool = True  # False: divide residuals by ΔΓ₁^exp

    def __post_init__(self) -> None:
        known = {"tau_e", "theta_e", "d_nv", "h", "n_e"}
        for name in self.free:
            if name not in ("tau_e", "theta_e", "d_nv"):
                raise ValueError(f"unknown or non-fittable parameter '{name}'")
        for name in self.fixed:
            if name not in known:
                raise ValueError(f"unknown parameter '{name}'")
        overlap = set(self.free) & set(self.fixed)
        if overlap:
            raise ValueError(f"parameters both free and fixed: {sorted(overlap)}")
        for required in ("tau_e", "theta_e"):
            if required not in self.free and required not in self.fixed:
                raise ValueError(f"{required} must be either free or fixed")
        fields = set(self.data.fields_gauss().tolist())
        missing = fields - set(self.model.fields_gauss)
        if missing:
            raise ValueError(f"model cache lacks fields {sorted(missing)} G")

    def box(self, name: str) -> tuple[float, float]:
        return self.boxes.get(name, DEFAULT_BOXES[name])

    def _field_indices(self) -> np.ndarray:
        lookup = {b: i for i, b in enumerate(self.model.fields_gauss)}
        return np.array([lookup[r.b_gauss] for r in self.data.records])

    def fixed_value(self, name: str) -> float:
        if name in self.fixed:
            return self.fixed[name][0]
        if name == "d_nv":
            return self.geometry.d_nv
        if name == "h":
            return self.geometry.h
        if name == "n_e":
            return self.geometry.n_e
        raise KeyError(name)


def _model_prediction(
    problem: FitProblem, params: dict[str, float], field_idx: np.ndarray
) -> np.ndarray:
    geom = problem.geometry.replace(
        d_nv=params.get("d_nv", problem.fixed_value("d_nv")),
        h=params.get("h", problem.fixed_value("h")),
        n_e=params.get("n_e", problem.fixed_value("n_e")),
    )
    b0_sq = coupling_b0_sq(geom, gamma_e=problem.model.nv.gamma_e)
    tau = params["tau_e"] if "tau_e" in params else problem.fixed_value("tau_e")
    theta = (
        params["theta_e"] if "theta_e" in params else problem.fixed_value("theta_e")
    )
    return b0_sq * np.array(
        [problem.model.delta_gamma_unit(i, tau, theta) for i in field_idx]
    )


def objective(params: dict[str, float], problem: FitProblem) -> float:
    """σ-normalized (default) squared deviation summed over field points."""
    field_idx = problem._field_indices()
    th = _model_prediction(problem, params, field_idx)
    exp, sig = problem.data.delta_gammas()
    denom = sig if problem.sigma_weighting else np.abs(exp)
    return float(np.sum(((exp - th) / denom) ** 2))


@dataclass(frozen=True)
class FitResult:
    """All local minima (global first) plus diagnostics."""

    minima: tuple[tuple[dict[str, float], float], ...]
    free: tuple[str, ...]
    landscape: tuple  # (grids per free param, objective array)
    boundary_minimum: bool
    confidence: dict[str, list[tuple[float, float]]] | None = None
    #: 1-sigma curvature estimates at the global minimum (inf when the
    #: chi^2 Hessian is not positive in that direction)
    param_sigma: dict[str, float] | None = None

    @property
    def best(self) -> dict[str, float]:
        return self.minima[0][0]

    @property
    def best_objective(self) -> float:
        return self.minima[0][1]

    @property
    def n_minima(self) -> int:
        return len(self.minima)

    def as_dict(self) -> dict:
        return {
            "free": list(self.free),
            "minima": [
                {"params": p, "objective": v} for p, v in self.minima
            ],
            "boundary_minimum": self.boundary_minimum,
            "confidence": self.confidence,
            "param_sigma": self.param_sigma,
        }


def _param_grid(problem: FitProblem, name: str, n: int) -> np.ndarray:
    lo, hi = problem.box(name)
    if name == "tau_e":
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def _grid_local_minima(obj: np.ndarray) -> list[tuple[int, ...]]:
    """Indices of strict-or-plateau local minima on a 1-d or 2-d grid."""
    mins: list[tuple[int, ...]] = []
    if obj.ndim == 1:
        for i in range(obj.size):
            neigh = obj[max(i - 1, 0) : i + 2]
            if obj[i] <= neigh.min():
                mins.append((i,))
    else:
        n0, n1 = obj.shape
        for i in range(n0):
            for j in range(n1):
                block = obj[max(i - 1, 0) : i + 2, max(j - 1, 0) : j + 2]
                if obj[i, j] <= block.min():
                    mins.append((i, j))
    return mins


def fit(problem: FitProblem, grid_points: int = DEFAULT_GRID) -> FitResult:
    """Deterministic grid scan + Nelder–Mead refinement of every basin."""
    free = problem.free
    if not free:
        raise ValueError("no free parameters")
    if len(free) > 2:
        raise ValueError("at most two free parameters are supported")
    n_pts = len(problem.data.records)
    if n_pts < len(free):
        raise UnidentifiableError(
            f"{n_pts} data point(s) cannot constrain {len(free)} free parameter(s)"
        )

    grids = [_param_grid(problem, name, grid_points) for name in free]
    field_idx = problem._field_indices()
    exp, sig = problem.data.delta_gammas()
    denom = sig if problem.sigma_weighting else np.abs(exp)

    # vectorized landscape evaluation via the unit-rate cache
    def params_at(vals) -> dict[str, float]:
        return dict(zip(free, vals))

    shape = tuple(g.size for g in grids)
    obj = np.empty(shape)
    for idx in np.ndindex(shape):
        vals = [grids[k][idx[k]] for k in range(len(free))]
        obj[idx] = float(
            np.sum(
                (
                    (exp - _model_prediction(problem, params_at(vals), field_idx))
                    / denom
                )
                ** 2
            )
        )

    spread = float(np.max(obj) - np.min(obj))
    if not np.isfinite(spread) or spread < 1e-12 * (1.0 + float(np.min(obj))):
        raise UnidentifiableError("objective is flat over the search box")

    # refine every grid-local minimum; work in scaled coordinates
    los = np.array([problem.box(n)[0] for n in free])
    his = np.array([problem.box(n)[1] for n in free])
    log_mask = np.array([n == "tau_e" for n in free])

    lo_i = np.where(log_mask, np.log(np.where(log_mask, los, 1.0)), los)
    hi_i = np.where(log_mask, np.log(np.where(log_mask, his, 1.0)), his)

    def to_internal(x):
        y = np.where(log_mask, np.log(np.where(log_mask, x, 1.0)), x)
        return (y - lo_i) / (hi_i - lo_i)

    def from_internal(u):
        y = lo_i + np.clip(u, 0.0, 1.0) * (hi_i - lo_i)
        return np.where(log_mask, np.exp(y), y)

    def f_internal(u):
        vals = from_internal(u)
        return float(
            np.sum(
                (
                    (exp - _model_prediction(problem, params_at(vals), field_idx))
                    / denom
                )
                ** 2
            )
        )

    # cap refinement starts: genuine basins are few; plateaus can flood
    starts = _grid_local_minima(obj)
    starts.sort(key=lambda idx: (obj[idx], idx))
    starts = starts[:12]

    candidates = []
    for idx in starts:
        x0 = np.array([grids[k][idx[k]] for k in range(len(free))])
        sol = minimize(
            f_internal,
            to_internal(x0),
            method="Nelder-Mead",
            options={"xatol": 1e-5, "fatol": 1e-12, "maxiter": 600},
        )
        u = np.clip(sol.x, 0.0, 1.0)
        candidates.append((from_internal(u), f_internal(u)))

    # deduplicate within 1% of the (internal) box per dimension
    deduped: list[tuple[np.ndarray, float]] = []
    for x, v in sorted(candidates, key=lambda c: c[1]):
        dup = False
        for x2, v2 in deduped:
            if np.all(np.abs(to_internal(x) - to_internal(x2)) < 0.01):
                dup = True
                break
        if not dup:
            deduped.append((x, v))
    # drop shallow relicts: keep minima within a generous band of the best
    best_v = deduped[0][1]
    tol_keep = best_v + max(9.0, best_v)
    kept = [(x, v) for x, v in deduped if v <= tol_keep]

    boundary = False
    for x, _ in kept[:1]:
        u = to_internal(x)
        if np.any(u < 1.0 / grid_points) or np.any(u > 1.0 - 1.0 / grid_points):
            boundary = True

    sigma = _curvature_sigma(
        f_internal, to_internal(kept[0][0]), free, log_mask, lo_i, hi_i
    )
    minima = tuple((params_at(x.tolist()), v) for x, v in kept)
    return FitResult(
        minima=minima,
        free=free,
        landscape=(tuple(g.copy() for g in grids), obj),
        boundary_minimum=boundary,
        param_sigma=sigma,
    )


def _curvature_sigma(
    f, u0: np.ndarray, free: tuple[str, ...], log_mask, lo_i, hi_i, step: float = 1e-3
) -> dict[str, float]:
    """1-sigma parameter scales from the chi^2 Hessian (Delta-chi^2 = 1).

    Central differences in the internal unit cube; cov = 2 H^-1; the
    diagonal is mapped back through the (diagonal) internal->physical
    Jacobian.  Directions with non-positive curvature report inf.
    """
    k = u0.size
    u = np.clip(u0, 2 * step, 1.0 - 2 * step)
    f0 = f(u)
    h = np.zeros((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = step
        h[i, i] = (f(u + ei) - 2.0 * f0 + f(u - ei)) / step**2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = step
            h[i, j] = h[j, i] = (
                f(u + ei + ej) - f(u + ei - ej) - f(u - ei + ej) + f(u - ei - ej)
            ) / (4.0 * step**2)
    try:
        cov = 2.0 * np.linalg.pinv(h)
    except np.linalg.LinAlgError:
        return {name: float("inf") for name in free}
    width = hi_i - lo_i
    y = lo_i + u0 * width
    phys = np.where(log_mask, np.exp(y), y)
    jac = np.where(log_mask, width * phys, width)
    out = {}
    for i, name in enumerate(free):
        var = cov[i, i]
        out[name] = float(np.sqrt(var) * abs(jac[i])) if var > 0 else float("inf")
    return out


def _nuisance_probes(problem: FitProblem) -> list[dict[str, float]]:
    """Corners + center of the nuisance interval box I_ind."""
    names, intervals = [], []
    for name, (_val, (lo, hi)) in problem.fixed.items():
        names.append(name)
        intervals.append((lo, hi))
    center = {n: 0.5 * (lo + hi) for n, (lo, hi) in zip(names, intervals)}
    probes = [center]
    live = [(n, iv) for n, iv in zip(names, intervals) if iv[0] < iv[1]]
    if live:
        for corner in itertools.product(*[(iv[0], iv[1]) for _, iv in live]):
            p = dict(center)
            p.update({n: v for (n, _), v in zip(live, corner)})
            probes.append(p)
    return probes


def confidence_region(
    problem: FitProblem,
    result: FitResult,
    epsilon_scale: float = 1.0,
    grid_points: int = DEFAULT_GRID,
    aggregate: bool = False,
) -> dict[str, list[tuple[float, float]]]:
    """Accepted set {λ : ∃ λ_ind probe with |ΔΓ₁^exp − ΔΓ₁^th| < ε everywhere}.

    ε per point is epsilon_scale × the experimental σ.  With `aggregate`
    the criterion is instead ‖(exp − th)/ε‖² < n_points (norm semantics).
    Returns per-free-parameter lists of accepted intervals (grid-run
    bounded, possibly disconnected).
    """
    free = problem.free
    grids = [_param_grid(problem, name, grid_points) for name in free]
    field_idx = problem._field_indices()
    exp, sig = problem.data.delta_gammas()
    eps = epsilon_scale * sig
    probes = _nuisance_probes(problem)

    shape = tuple(g.size for g in grids)
    accepted = np.zeros(shape, dtype=bool)

    def point_ok(vals) -> bool:
        params = dict(zip(free, vals))
        for probe in probes:
            p = dict(params)
            p.update(probe)
            th = _model_prediction(problem, p, field_idx)
            if aggregate:
                if float(np.sum(((exp - th) / eps) ** 2)) < len(exp):
                    return True
            else:
                if np.all(np.abs(exp - th) < eps):
                    return True
        return False

    for idx in np.ndindex(shape):
        accepted[idx] = point_ok([grids[k][idx[k]] for k in range(len(free))])

    # always test the fitted minimizer itself (it may sit off-grid)
    best_ok = point_ok([result.best[n] for n in free])

    out: dict[str, list[tuple[float, float]]] = {}
    for k, name in enumerate(free):
        axis_ok = accepted.any(axis=tuple(a for a in range(len(free)) if a != k))
        intervals: list[tuple[float, float]] = []
        g = grids[k]
        run_start = None
        for i, ok in enumerate(axis_ok):
            if ok and run_start is None:
                run_start = i
            if (not ok or i == axis_ok.size - 1) and run_start is not None:
                end = i if ok else i - 1
                intervals.append((float(g[run_start]), float(g[end])))
                run_start = None
        if best_ok:
            b = result.best[name]
            if not any(lo <= b <= hi for lo, hi in intervals):
                intervals.append((b, b))
                intervals.sort()
        out[name] = intervals
    return out


def estimate_depth(problem: FitProblem, grid_points: int = DEFAULT_GRID) -> FitResult:
    """Depth pipeline: fit with free = {d_nv, theta_e} and fixed tau_e.

    Returns the FitResult with confidence intervals attached (the d_nv
    entry is the depth interval).
    """
    if set(problem.free) != {"d_nv", "theta_e"}:
        raise ValueError("estimate_depth requires free = {d_nv, theta_e}")
    if "tau_e" not in problem.fixed:
        raise ValueError("estimate_depth requires fixed tau_e")
    result = fit(problem, grid_points=grid_points)
    conf = confidence_region(problem, result, grid_points=grid_points)
    return FitResult(
        minima=result.minima,
        free=result.free,
        landscape=result.landscape,
        boundary_minimum=result.boundary_minimum,
        confidence=conf,
        param_sigma=result.param_sigma,
    )
