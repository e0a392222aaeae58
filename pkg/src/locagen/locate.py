"""Source localization from two TDOAs by minimizing the path-difference misfit.

The objective for a candidate position p is

    E(p) = (d_a - d_ref - c*tau_a)^2 + (d_b - d_ref - c*tau_b)^2

with d_i = |p - mic_i|.  It is multi-modal (two hyperbola branches can
cross twice, and quantized delays often have no exact solution), so a
polar grid search is followed by a projected Gauss-Newton polish with a
backtracking line search.  Everything is vectorized over problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import ArrayGeometry, GeometryError, Medium, azimuth_deg

__all__ = [
    "MultilaterationProblem",
    "LocationEstimate",
    "LocateError",
    "objective",
    "objective_gradient",
    "multilaterate",
    "multilaterate_batch",
    "localize_pipeline",
]

DEFAULT_RADIUS_BOUND = 150.0
GRID_ANGLES = 360
GRID_RADII = 24
GRID_MIN_RADIUS = 1.0


class LocateError(ValueError):
    pass


@dataclass(frozen=True)
class MultilaterationProblem:
    geometry: ArrayGeometry
    medium: Medium
    tau21: float
    tau31: float
    radius_bound: float = DEFAULT_RADIUS_BOUND

    def __post_init__(self):
        if not self.radius_bound > 0:
            raise LocateError("radius bound must be positive")

    @property
    def path_differences(self) -> np.ndarray:
        return self.medium.speed_of_sound * np.array([self.tau21, self.tau31])


@dataclass(frozen=True)
class LocationEstimate:
    x: float
    y: float
    azimuth: float
    residual: float
    converged: bool
    iterations: int
    range_unreliable: bool = False
    baseline_azimuth: float | None = None
    corrected: bool = False

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def to_text(self) -> str:
        """Key-value rendering for scripts."""
        rows = [
            ("azimuth_deg", f"{self.azimuth:.6f}"),
            ("x_m", f"{self.x:.6f}"),
            ("y_m", f"{self.y:.6f}"),
            ("residual_m2", f"{self.residual:.6e}"),
            ("converged", str(self.converged).lower()),
            ("iterations", str(self.iterations)),
            ("range_unreliable", str(self.range_unreliable).lower()),
            ("corrected", str(self.corrected).lower()),
        ]
        if self.baseline_azimuth is not None:
            rows.append(("baseline_azimuth_deg", f"{self.baseline_azimuth:.6f}"))
        return "".join(f"{k}={v}\n" for k, v in rows)


def _ordered_mics(geometry: ArrayGeometry) -> np.ndarray:
    a, b = geometry.others
    return geometry.mic_positions[[geometry.reference_mic_index, a, b]]


def _residuals(P, mics, dd):
    """Residual pair and distances for positions P (N, 2)."""
    D = np.sqrt(((P[:, None, :] - mics[None, :, :]) ** 2).sum(-1))
    r = np.stack([D[:, 1] - D[:, 0] - dd[:, 0], D[:, 2] - D[:, 0] - dd[:, 1]], axis=1)
    return r, D


def _jacobian(P, mics, D):
    U = (P[:, None, :] - mics[None, :, :]) / np.maximum(D, 1e-300)[..., None]
    return np.stack([U[:, 1] - U[:, 0], U[:, 2] - U[:, 0]], axis=1)


def objective(problem: MultilaterationProblem, x: float, y: float) -> float:
    mics = _ordered_mics(problem.geometry)
    r, _ = _residuals(np.array([[x, y]], dtype=float), mics, problem.path_differences[None])
    return float((r ** 2).sum())


def objective_gradient(problem: MultilaterationProblem, x: float, y: float) -> np.ndarray:
    """Analytic gradient of :func:`objective`, undefined at the microphones."""
    mics = _ordered_mics(problem.geometry)
    P = np.array([[x, y]], dtype=float)
    r, D = _residuals(P, mics, problem.path_differences[None])
    if np.any(D == 0):
        raise GeometryError("gradient undefined at a microphone position")
    J = _jacobian(P, mics, D)
    return 2.0 * np.einsum("nij,ni->nj", J, r)[0]


def _polar_grid(center, radius_bound):
    ang = np.radians(np.arange(GRID_ANGLES) * (360.0 / GRID_ANGLES))
    rmin = min(GRID_MIN_RADIUS, radius_bound)
    rad = np.geomspace(rmin, radius_bound, GRID_RADII)
    A, R = np.meshgrid(ang, rad, indexing="ij")
    return np.column_stack([center[0] + (R * np.cos(A)).ravel(),
                            center[1] + (R * np.sin(A)).ravel()])


def _project(P, center, bound):
    v = P - center
    r = np.sqrt((v ** 2).sum(1))
    scale = np.where(r > bound, bound / np.maximum(r, 1e-300), 1.0)
    return center + v * scale[:, None]


def _refine(P, mics, dd, center, bound, max_iter):
    """Projected Gauss-Newton with backtracking, vectorized over rows of P."""
    n = P.shape[0]
    P = P.copy()
    r, D = _residuals(P, mics, dd)
    f = (r ** 2).sum(1)
    iters = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    eye = np.eye(2)

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Pa, ra, Da, fa, dda = P[idx], r[idx], D[idx], f[idx], dd[idx]
        J = _jacobian(Pa, mics, Da)
        Jr = np.einsum("nij,ni->nj", J, ra)
        grad = 2.0 * Jr
        JTJ = np.einsum("nij,nik->njk", J, J)
        lam = 1e-12 * (np.trace(JTJ, axis1=1, axis2=2) + 1e-30)
        step = -np.linalg.solve(JTJ + lam[:, None, None] * eye, Jr[..., None])[..., 0]

        v = Pa - center
        rad = np.sqrt((v ** 2).sum(1))
        u = v / np.maximum(rad, 1e-300)[:, None]
        on_bd = rad >= bound * (1 - 1e-12)
        # on the bound with an outward step: 1-D Gauss-Newton along the tangent
        blocked = on_bd & ((step * u).sum(1) > 0)
        if blocked.any():
            tv = np.column_stack([-u[:, 1], u[:, 0]])
            Jt = np.einsum("nij,nj->ni", J, tv)
            ts = -(Jt * ra).sum(1) / np.maximum((Jt ** 2).sum(1), 1e-300)
            step = np.where(blocked[:, None], ts[:, None] * tv, step)
        out_grad = np.maximum(-(grad * u).sum(1), 0.0)
        pgrad = grad + np.where(on_bd, out_grad, 0.0)[:, None] * u
        gnorm = np.sqrt((pgrad ** 2).sum(1))

        t = np.ones(idx.size)
        Q = _project(Pa + step, center, bound)
        rq, Dq = _residuals(Q, mics, dda)
        fq = (rq ** 2).sum(1)
        for _ in range(60):
            bad = ~(fq < fa)
            if not bad.any():
                break
            t[bad] *= 0.5
            Qb = _project(Pa[bad] + t[bad, None] * step[bad], center, bound)
            rb, Db = _residuals(Qb, mics, dda[bad])
            Q[bad], rq[bad], Dq[bad], fq[bad] = Qb, rb, Db, (rb ** 2).sum(1)

        improved = fq < fa
        moved = np.sqrt(((Q - Pa) ** 2).sum(1))
        keep = improved[:, None]
        P[idx] = np.where(keep, Q, Pa)
        r[idx] = np.where(keep, rq, ra)
        D[idx] = np.where(keep, Dq, Da)
        f[idx] = np.where(improved, fq, fa)
        iters[idx] += 1

        # keep polishing past the gradient test: far-field valleys are flat
        # enough that |grad| < 1e-9 is reached well before the azimuth settles
        stalled = (fa - fq) <= 1e-12 * fa
        done = (moved < 1e-10) | ~improved | stalled
        converged[idx] = (gnorm < 1e-9) | (moved < 1e-10)
        active[idx] = ~done
    return P, f, D, iters, converged


def multilaterate_batch(geometry: ArrayGeometry, medium: Medium, tdoas,
                        radius_bound: float = DEFAULT_RADIUS_BOUND, max_iter: int = 200,
                        chunk: int = 512, n_bands: int = 4) -> dict:
    """Solve many problems sharing one geometry.

    The grid is split into ``n_bands`` radial bands and each band's best
    cell seeds a local refinement.  The lowest refined residual wins; when
    two fits are equally good (the two-intersection ambiguity of three
    sensors) the one farther from the array is kept, which is the more
    probable one for sources spread uniformly over a disk.

    Parameters
    ----------
    tdoas : array_like, shape (N, 2)
        ``(tau21, tau31)`` per problem, seconds.

    Returns
    -------
    dict of arrays
        ``x, y, azimuth, residual, converged, iterations, range_unreliable,
        grid_best`` (the best coarse-grid objective value).
    """
    tdoas = np.atleast_2d(np.asarray(tdoas, dtype=float))
    if tdoas.ndim != 2 or tdoas.shape[1] != 2:
        raise LocateError("tdoas must have shape (N, 2)")
    if not np.all(np.isfinite(tdoas)):
        raise LocateError("non-finite TDOA")
    if not radius_bound > 0:
        raise LocateError("radius bound must be positive")
    mics = _ordered_mics(geometry)
    center = geometry.reference
    dd = medium.speed_of_sound * tdoas
    n = dd.shape[0]

    G = _polar_grid(center, radius_bound)
    Gd = np.sqrt(((G[:, None, :] - mics[None]) ** 2).sum(-1))
    g1 = Gd[:, 1] - Gd[:, 0]
    g2 = Gd[:, 2] - Gd[:, 0]
    band_of = np.tile(np.arange(GRID_RADII) * n_bands // GRID_RADII, GRID_ANGLES)
    starts = np.empty((n_bands, n, 2))
    grid_best = np.empty(n)
    for s in range(0, n, chunk):
        e = (g1[None] - dd[s:s + chunk, 0, None]) ** 2 + (g2[None] - dd[s:s + chunk, 1, None]) ** 2
        grid_best[s:s + chunk] = e.min(axis=1)
        for b in range(n_bands):
            cols = np.flatnonzero(band_of == b)
            starts[b, s:s + chunk] = G[cols[np.argmin(e[:, cols], axis=1)]]

    P, f, D, it, conv = _refine(starts.reshape(-1, 2), mics, np.tile(dd, (n_bands, 1)),
                                center, radius_bound, max_iter)
    P = P.reshape(n_bands, n, 2)
    f = f.reshape(n_bands, n)
    D = D.reshape(n_bands, n, 3)
    it = it.reshape(n_bands, n)
    conv = conv.reshape(n_bands, n)

    fmin = f.min(axis=0)
    tie = f <= np.minimum(fmin + 1e-12 + 1e-6 * fmin, np.maximum(grid_best, fmin))
    rng_ = np.sqrt(((P - center) ** 2).sum(-1))
    pick = np.argmax(np.where(tie, rng_, -1.0), axis=0)
    cols = np.arange(n)
    P, f, D = P[pick, cols], f[pick, cols], D[pick, cols]
    iters, converged = it.sum(axis=0), conv[pick, cols]

    # radial curvature of the Gauss-Newton Hessian at the solution
    J = _jacobian(P, mics, D)
    v = P - center
    u = v / np.maximum(np.sqrt((v ** 2).sum(1)), 1e-300)[:, None]
    Ju = np.einsum("nij,nj->ni", J, u)
    curvature = 2.0 * (Ju ** 2).sum(1)

    return {
        "x": P[:, 0].copy(),
        "y": P[:, 1].copy(),
        "azimuth": np.atleast_1d(azimuth_deg(P[:, 0], P[:, 1], center)),
        "residual": f,
        "converged": converged,
        "iterations": iters,
        "range_unreliable": curvature < 1e-12,
        "grid_best": grid_best,
    }


def multilaterate(problem: MultilaterationProblem, max_iter: int = 200) -> LocationEstimate:
    """Best-fit source position for one pair of TDOAs.

    Non-convergence is reported through ``converged=False``, not raised.
    """
    tau = [problem.tau21, problem.tau31]
    if not all(math.isfinite(t) for t in tau):
        raise LocateError("non-finite TDOA")
    out = multilaterate_batch(problem.geometry, problem.medium, [tau],
                              problem.radius_bound, max_iter)
    return LocationEstimate(
        x=float(out["x"][0]), y=float(out["y"][0]), azimuth=float(out["azimuth"][0]),
        residual=float(out["residual"][0]), converged=bool(out["converged"][0]),
        iterations=int(out["iterations"][0]),
        range_unreliable=bool(out["range_unreliable"][0]),
    )


def localize_pipeline(geometry: ArrayGeometry, medium: Medium, *, waveforms=None,
                      tdoa=None, model=None, interpolation: str = "none",
                      max_lag: int | None = None,
                      radius_bound: float = DEFAULT_RADIUS_BOUND) -> LocationEstimate:
    """TDOAs (from three channels or given directly) to a position and azimuth.

    When ``model`` is given, its azimuth prediction from
    ``(tau21, tau31, ratio)`` replaces the geometric azimuth; the latter is
    kept in ``baseline_azimuth``.
    """
    if (waveforms is None) == (tdoa is None):
        raise LocateError("give exactly one of waveforms or tdoa")
    if waveforms is not None:
        from .dsp import gcc_phat

        if len(waveforms) != 3:
            raise LocateError(f"need 3 channels, got {len(waveforms)}")
        ref = waveforms[geometry.reference_mic_index]
        if max_lag is None:
            fs = ref.sample_rate
            spread = geometry.pair_distances().max() / medium.speed_of_sound
            max_lag = min(len(ref) - 1, int(math.ceil(spread * fs)) + 2)
        a, b = geometry.others
        tau21 = gcc_phat(ref, waveforms[a], max_lag, interpolation).tau_hat
        tau31 = gcc_phat(ref, waveforms[b], max_lag, interpolation).tau_hat
    else:
        tau21, tau31 = (float(tdoa.tau21), float(tdoa.tau31)) if hasattr(tdoa, "tau21") \
            else (float(tdoa[0]), float(tdoa[1]))

    est = multilaterate(MultilaterationProblem(geometry, medium, tau21, tau31, radius_bound))
    est = replace(est, baseline_azimuth=est.azimuth)
    if model is not None:
        from .dataset import feature_matrix

        az = float(model.predict_azimuth(feature_matrix([tau21], [tau31]))[0])
        est = replace(est, azimuth=az, corrected=True)
    return est
