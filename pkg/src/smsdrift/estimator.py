"""Drift M-estimator, image reconstruction and the fiducial-tracking baseline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .contrast import ContrastConfig, Objective, aligned_mean, default_xi_simulation
from .drift_models import DriftFamily, DriftParams, frame_times, _drift_arrays
from .frames import FrameStack
from .spectral import SpectralStack, reconstruct_image, window_modes


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    start: tuple | None = None  # defaults to the zero vector
    max_iterations: int = 2000
    fatol: float = 1e-10
    xatol: float = 1e-8
    step: float = 0.05
    t0_grid: tuple = tuple(np.round(np.arange(2, 99) / 100, 2))

    def __post_init__(self):
        if self.fatol <= 0 or self.xatol <= 0 or self.step <= 0:
            raise EstimationError("optimizer tolerances and step must be positive")
        if self.max_iterations < 1:
            raise EstimationError("max_iterations must be >= 1")


@dataclass
class EstimationResult:
    theta_hat: DriftParams
    contrast_value: float
    iterations: int
    converged: bool
    nfev: int = 0
    xi: float = 0.0
    T: int = 0
    N: int = 0
    reconstructed: np.ndarray | None = field(default=None, repr=False)

    def to_record(self) -> str:
        rows = [
            ("family", str(self.theta_hat.family)),
            ("theta", self.theta_hat.to_csv()),
            ("contrast", repr(self.contrast_value)),
            ("converged", str(self.converged).lower()),
            ("iterations", str(self.iterations)),
            ("xi", repr(self.xi)),
            ("T", str(self.T)),
            ("N", str(self.N)),
        ]
        return "".join(f"{k}={v}\n" for k, v in rows)

    @staticmethod
    def parse_record(text: str) -> dict:
        out = {}
        for line in text.splitlines():
            if "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
        return out


def _nelder_mead(fun, x0, cfg: OptimizerConfig):
    x0 = np.asarray(x0, dtype=float)
    simplex = np.vstack([x0, x0 + cfg.step * np.eye(x0.size)])
    res = minimize(fun, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": cfg.xatol,
                            "fatol": cfg.fatol, "maxiter": cfg.max_iterations})
    return res.x, float(res.fun), int(res.nit), bool(res.success)


def _start_vector(family: DriftFamily, cfg: OptimizerConfig) -> np.ndarray:
    if cfg.start is None:
        x = np.zeros(family.dim)
        if family.is_jump:
            x[6] = 0.5
        return x
    x = np.asarray(cfg.start, dtype=float)
    if x.size != family.dim:
        raise EstimationError(f"start vector needs {family.dim} entries")
    return x


def estimate_spectral(spec: SpectralStack, family: DriftFamily,
                      config: ContrastConfig | None = None,
                      opt: OptimizerConfig | None = None) -> EstimationResult:
    """Minimise the tilde contrast over θ for precomputed spectra."""
    opt = opt or OptimizerConfig()
    config = config or ContrastConfig(spec.xi)
    if spec.T < 2:
        raise EstimationError("need at least two frames")
    obj = Objective(spec, family, config)
    x0 = _start_vector(family, opt)
    meta = dict(xi=config.xi, T=spec.T, N=spec.N)

    if not np.any(obj.Y):
        # flat objective: nothing to align
        return EstimationResult(DriftParams(family, x0), 0.0, 0, True, 0, **meta)

    if not family.is_jump:
        x, fx, nit, ok = _nelder_mead(obj, x0, opt)
        theta = DriftParams(family, x)
        return EstimationResult(theta, fx, nit, ok and theta.in_box(), obj.nfev, **meta)

    best = None
    total_it = 0
    all_ok = True
    for t0 in opt.t0_grid:
        def sub(v, t0=t0):
            return obj(np.append(v, t0))
        x, fx, nit, ok = _nelder_mead(sub, x0[:6], opt)
        total_it += nit
        all_ok &= ok
        if best is None or fx < best[1]:
            best = (np.append(x, t0), fx)
    theta = DriftParams(family, best[0])
    return EstimationResult(theta, best[1], total_it, all_ok and theta.in_box(), obj.nfev, **meta)


def _resolve_config(stack: FrameStack, config: ContrastConfig | None) -> ContrastConfig:
    return config or ContrastConfig(default_xi_simulation(stack.T))


def estimate(stack: FrameStack, family: DriftFamily,
             config: ContrastConfig | None = None,
             opt: OptimizerConfig | None = None,
             subdomains: int = 1,
             with_image: bool = False) -> EstimationResult:
    """Estimate the drift of a frame stack.

    ``subdomains=s`` splits the field of view into s×s tiles, estimates on each
    tile (with the cutoff scaled by 1/s) and averages. Tile drifts are in tile
    units, so the average is divided by s.
    """
    if stack.T < 2:
        raise EstimationError("need at least two frames")
    config = _resolve_config(stack, config)
    if subdomains > 1:
        res = _estimate_tiles(stack, family, config, opt, subdomains)
    else:
        spec = SpectralStack.from_frames(stack.data, config.xi)
        res = estimate_spectral(spec, family, config, opt)
    if with_image:
        res.reconstructed = reconstruct(stack, res.theta_hat, config)
    return res


def _estimate_tiles(stack, family, config, opt, s):
    N = stack.N
    if N % s:
        raise EstimationError(f"N={N} is not divisible into {s}x{s} tiles")
    n = N // s
    xi = max(1.0, config.xi / s)
    thetas, values, its, oks = [], [], 0, True
    for a in range(s):
        for b in range(s):
            tile = stack.data[:, a * n:(a + 1) * n, b * n:(b + 1) * n]
            spec = SpectralStack.from_frames(tile, xi)
            cfg = ContrastConfig(xi, config.weights)
            r = estimate_spectral(spec, family, cfg, opt)
            thetas.append(r.theta_hat.vector)
            values.append(r.contrast_value)
            its += r.iterations
            oks &= r.converged
    th = np.mean(thetas, axis=0)
    if family.is_jump:
        th[:6] /= s
    else:
        th /= s
    return EstimationResult(DriftParams(family, th), float(np.sum(values)), its, oks,
                            0, config.xi, stack.T, N)


def realigned_coefficients(spec: SpectralStack, theta: DriftParams, config: ContrastConfig) -> np.ndarray:
    """Σ_t ω_t h_k(δ_t^θ) Y^t_k on the config window."""
    sub = spec.restrict(config.xi)
    k = window_modes(config.xi)
    d1, d2 = _drift_arrays(theta.family, theta.vector, frame_times(spec.T))
    Y = np.ascontiguousarray(sub.coeffs, dtype=np.complex128)
    return aligned_mean(Y, k, config.frame_weights(spec.T), d1, d2)


def reconstruct(stack: FrameStack, theta_hat: DriftParams,
                config: ContrastConfig | None = None) -> np.ndarray:
    """Realigned mean spectrum synthesised on the pixel grid."""
    config = _resolve_config(stack, config)
    spec = SpectralStack.from_frames(stack.data, config.xi)
    C = realigned_coefficients(spec, theta_hat, config)
    C = 0.5 * (C + np.conj(C[::-1, ::-1]))  # drop rounding asymmetry
    return reconstruct_image(C, stack.N)


def track_fiducial(stack: FrameStack, region) -> np.ndarray:
    """Intensity-weighted centroid inside ``region`` for every frame.

    ``region`` is (row_start, row_stop, col_start, col_stop) in pixels. Returns
    a (T, 2) array of unit-square positions using pixel centres (i + 1/2)/N;
    frames with no mass in the region get NaN.
    """
    r0, r1, c0, c1 = (int(v) for v in region)
    if not (0 <= r0 < r1 <= stack.N and 0 <= c0 < c1 <= stack.N):
        raise EstimationError("fiducial region must be a nonempty rectangle inside the grid")
    sub = stack.data[:, r0:r1, c0:c1]
    mass = sub.sum(axis=(1, 2))
    rows = (np.arange(r0, r1) + 0.5) / stack.N
    cols = (np.arange(c0, c1) + 0.5) / stack.N
    with np.errstate(invalid="ignore", divide="ignore"):
        x1 = np.einsum("tij,i->t", sub, rows) / mass
        x2 = np.einsum("tij,j->t", sub, cols) / mass
    out = np.stack([x1, x2], axis=1)
    out[mass <= 0] = np.nan
    return out
