"""Nearest-point projection onto a constraint manifold.

Solves  minimize ||p - y||^2_W  subject to g(x, p) = 0  for a diagonal
positive W, by damped Newton iteration on the first-order optimality system

    2 W (p - y) + J(p)^T lam = 0,      g(x, p) = 0.

Starting points that violate the constraints badly first go through a
Gauss-Newton feasibility-restoration phase on ||g||^2 alone. The Newton
phase then re-estimates the multipliers by least squares at every iterate,
assembles the saddle-point system with the exact Lagrangian curvature
(convexified on the constraint tangent space when indefinite, so saddle
regions yield damped, well-sized steps), caps step lengths on the scale of
the output space, and backtracks on the exact l1 penalty
||p - y||^2_W + mu * ||g||_1 with a second-order correction before giving
up on a full step. A small multiple of the identity regularizes the
lower-right block when the system is near singular and shrinks again as
steps succeed. Problems here are tiny (<= 17 variables, <= 3 constraints),
so dense linear algebra is plenty.

Starting from p0 = y means an already-feasible prediction is returned
unchanged in zero iterations, and the solver finds the local solution on
y's side of the manifold; no global search is attempted.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from physproj.errors import PhysprojError, ValidationError

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
SINGULAR_SYSTEM = "singular_system"

_ARMIJO_C1 = 1e-4
_BACKTRACK = 0.5
_MIN_ALPHA = 1e-12
_MAX_DELTA = 1e6
_STEP_CAP = 2.0  # outputs live on a [-1, 1]-ish scale; bound each Newton step


@dataclass(frozen=True)
class ProjectionSpec:
    """Solver settings; ``weighting=None`` means the identity metric."""

    weighting: np.ndarray | None = None  # per-output positive diagonal of W
    tolerance: float = 1e-8
    max_iterations: int = 100
    damping: float = 0.0  # initial lower-right regularization

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise ValidationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.weighting is not None:
            w = np.asarray(self.weighting, dtype=np.float64)
            if w.ndim != 1 or np.any(w <= 0.0):
                raise ValidationError("weighting must be a strictly positive diagonal")
            object.__setattr__(self, "weighting", w)

    def diag(self, dim: int) -> np.ndarray:
        if self.weighting is None:
            return np.ones(dim)
        if self.weighting.size != dim:
            raise ValidationError(f"weighting has size {self.weighting.size}, expected {dim}")
        return self.weighting


@dataclass
class ProjectionResult:
    projected: np.ndarray
    multipliers: np.ndarray
    iterations: int
    kkt_norm: float
    status: str
    seconds: float = 0.0


def kkt_residual(p, lam, y, constraint_set, input_x, spec: ProjectionSpec) -> tuple[float, float]:
    """Infinity norms of (stationarity, feasibility) at (p, lam)."""
    p = np.asarray(p, dtype=np.float64)
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    w = spec.diag(p.size)
    g = np.atleast_1d(constraint_set.residual(input_x, p))
    jac = np.atleast_2d(constraint_set.jacobian(input_x, p))
    stationarity = 2.0 * w * (p - y) + jac.T @ lam
    return float(np.abs(stationarity).max()), float(np.abs(g).max())


def _merit(p, y, w, mu, constraint_set, input_x) -> float:
    """Exact l1 penalty ||p - y||^2_W + mu * ||g||_1.

    A squared feasibility penalty is not exact: accepting steps whose
    objective must legitimately grow (the projection can lie farther from y
    than a nearby feasible iterate) would need mu ~ 1/||g||. The l1 form
    accepts them for any finite mu above the multiplier norm.
    """
    try:
        g = np.atleast_1d(constraint_set.residual(input_x, p))
    except PhysprojError:
        return np.inf
    if not np.all(np.isfinite(g)):
        return np.inf
    return float((p - y) @ (w * (p - y)) + mu * np.abs(g).sum())


def _second_order_correction(p, dp, jac, constraint_set, input_x):
    """Feasibility correction for the full step, using the current Jacobian."""
    try:
        g_trial = np.atleast_1d(constraint_set.residual(input_x, p + dp))
    except PhysprojError:
        return None
    if not np.all(np.isfinite(g_trial)):
        return None
    gram = jac @ jac.T
    try:
        dq = -jac.T @ np.linalg.solve(gram, g_trial)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(dq)):
        return None
    return p + dp + dq


def _kkt_norm(p, lam, y, w, constraint_set, input_x) -> float:
    try:
        g = np.atleast_1d(constraint_set.residual(input_x, p))
        jac = np.atleast_2d(constraint_set.jacobian(input_x, p))
    except PhysprojError:
        return np.inf
    stationarity = 2.0 * w * (p - y) + jac.T @ lam
    if not (np.all(np.isfinite(stationarity)) and np.all(np.isfinite(g))):
        return np.inf
    return max(float(np.abs(stationarity).max()), float(np.abs(g).max()))


def _restore_feasibility(p, constraint_set, input_x, target: float, budget: int) -> tuple[np.ndarray, int]:
    """Levenberg-damped Gauss-Newton on ||g||^2 until near the manifold.

    Run before the optimality phase when the start point is far from
    feasible; minimizing the violation alone avoids the tug-of-war between
    distance and feasibility that stalls merit line searches out there.
    """
    nu = 0.0
    used = 0
    while used < budget:
        g = np.atleast_1d(constraint_set.residual(input_x, p))
        if float(np.abs(g).max()) <= target:
            break
        jac = np.atleast_2d(constraint_set.jacobian(input_x, p))
        # row equilibration: violated laws can differ by many orders of
        # magnitude (scale clamps), which would make the Gram matrix singular
        row_scale = 1.0 / np.maximum(np.linalg.norm(jac, axis=1), 1e-300)
        jac_eq = jac * row_scale[:, None]
        g_eq = g * row_scale
        gram = jac_eq @ jac_eq.T
        used += 1
        try:
            dp = -jac_eq.T @ np.linalg.solve(gram + nu * np.eye(gram.shape[0]), g_eq)
        except np.linalg.LinAlgError:
            nu = max(nu * 10.0, 1e-8)
            continue
        step_len = float(np.abs(dp).max())
        if not np.isfinite(step_len) or step_len <= 1e-15:
            break
        if step_len > _STEP_CAP:
            dp = dp * (_STEP_CAP / step_len)
        psi0 = float(g @ g)
        alpha = 1.0
        moved = False
        while alpha >= _MIN_ALPHA:
            try:
                g_trial = np.atleast_1d(constraint_set.residual(input_x, p + alpha * dp))
            except PhysprojError:
                g_trial = None
            if g_trial is not None and np.all(np.isfinite(g_trial)) and float(g_trial @ g_trial) < psi0:
                p = p + alpha * dp
                moved = True
                break
            alpha *= _BACKTRACK
        if not moved:
            nu = max(nu * 10.0, 1e-8)
            if nu > _MAX_DELTA:
                break
            continue
        if alpha == 1.0:
            nu *= 0.1
    return p, used


def project(y, constraint_set, input_x=None, spec: ProjectionSpec = ProjectionSpec()) -> ProjectionResult:
    """Project ``y`` (normalized output space) onto g(x, p) = 0.

    Returns the first iterate whose stationarity and feasibility infinity
    norms both fall under ``spec.tolerance``. On failure the best iterate
    seen is returned, flagged with a non-converged status.
    """
    start = time.perf_counter()
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or not np.all(np.isfinite(y)):
        raise ValidationError("y must be a finite vector")
    dim = y.size
    m = constraint_set.residual_dim
    w = spec.diag(dim)

    p = y.copy()
    lam = np.zeros(m)
    restore_steps = 0
    g0 = np.atleast_1d(constraint_set.residual(input_x, p))
    if float(np.abs(g0).max()) > max(1e-3, 10.0 * spec.tolerance):
        p, restore_steps = _restore_feasibility(
            p, constraint_set, input_x, max(1e-3, 10.0 * spec.tolerance), spec.max_iterations // 2
        )
    delta = max(spec.damping, 0.0)
    best = (np.inf, p.copy(), lam.copy())
    status = MAX_ITERATIONS
    iterations = 0
    kkt = np.inf
    newton_budget = spec.max_iterations - restore_steps

    for iterations in range(newton_budget + 1):
        g = np.atleast_1d(constraint_set.residual(input_x, p))
        jac = np.atleast_2d(constraint_set.jacobian(input_x, p))
        # multipliers are always the least-squares estimate for the current
        # point, so the dual never lags behind partial primal steps
        lam = np.linalg.lstsq(jac.T, -2.0 * w * (p - y), rcond=None)[0]
        stationarity = 2.0 * w * (p - y) + jac.T @ lam
        kkt = max(float(np.abs(stationarity).max()), float(np.abs(g).max()))
        if kkt < best[0]:
            best = (kkt, p.copy(), lam.copy())
        if kkt <= spec.tolerance:
            status = CONVERGED
            break
        if iterations == newton_budget:
            break

        # Lagrangian curvature for true Newton steps; harmless zeros at lam=0
        hessian = np.diag(2.0 * w)
        curvature = constraint_set.lagrangian_hessian(input_x, p, lam)
        if np.all(np.isfinite(curvature)):
            hessian = hessian + curvature
        # convexify: the Hessian must be comfortably positive definite on the
        # tangent space of the linearized constraints, or the step aims at a
        # saddle. The shift grows with the indefiniteness so saddle regions
        # get well-sized damped steps (a barely positive floor would leave
        # the system near singular, with huge steps and garbage multipliers),
        # while healthy curvature near a minimizer keeps the pure Newton tail.
        if m < dim:
            _, svals, vt = np.linalg.svd(jac)
            rank = int(np.sum(svals > 1e-12 * max(float(svals[0]), 1.0))) if svals.size else 0
            tangent = vt[rank:].T
            if tangent.shape[1] > 0:
                thresh = 0.01 * (1.0 + float(np.abs(np.diag(hessian)).max()))
                min_eig = float(np.linalg.eigvalsh(tangent.T @ hessian @ tangent).min())
                if min_eig < thresh:
                    hessian = hessian + (thresh - min_eig + max(0.0, -min_eig)) * np.eye(dim)

        # assemble and solve the saddle-point system for (dp, lam_new)
        sol = None
        sigma = 1.0
        for _ in range(40):
            kkt_matrix = np.zeros((dim + m, dim + m))
            kkt_matrix[:dim, :dim] = hessian + delta * np.eye(dim)
            kkt_matrix[:dim, dim:] = jac.T
            kkt_matrix[dim:, :dim] = jac
            kkt_matrix[dim:, dim:] = -delta * np.eye(m)
            rhs = np.concatenate([-2.0 * w * (p - y), -sigma * g])
            try:
                candidate = np.linalg.solve(kkt_matrix, rhs)
            except np.linalg.LinAlgError:
                candidate = None
            if candidate is not None and np.all(np.isfinite(candidate)):
                step_len = float(np.abs(candidate[:dim]).max())
                if step_len > _STEP_CAP and sigma == 1.0:
                    # far from the linearized manifold (small constraint
                    # gradient): ask only for a partial feasibility gain so
                    # the step stays on the scale of the output space
                    sigma = _STEP_CAP / step_len
                    continue
                sol = candidate
                break
            delta = max(delta * 10.0, 1e-10)
            if delta > _MAX_DELTA:
                break
        if sol is None:
            status = SINGULAR_SYSTEM
            break

        dp = sol[:dim]
        step_len = float(np.abs(dp).max())
        if step_len > _STEP_CAP:
            # stationarity component can exceed the cap too; clipping keeps
            # the direction (and its descent sign) on the output scale
            dp = dp * (_STEP_CAP / step_len)
        if float(np.abs(dp).max()) <= 1e-14 * (1.0 + float(np.abs(p).max())):
            # no usable primal direction at this regularization
            delta = max(delta * 10.0, 1e-10)
            if delta > _MAX_DELTA:
                status = SINGULAR_SYSTEM
                break
            continue

        # exact-penalty weight: a finite mu above the multiplier norm makes
        # the l1 merit accept every step the true problem wants; the
        # least-squares multiplier is the trustworthy estimate here
        mu = 2.0 * float(np.abs(lam).max()) + 0.1
        obj_slope = float(2.0 * (w * (p - y)) @ dp)
        jd = jac @ dp
        feas_slope = float(np.where(g == 0.0, np.abs(jd), np.sign(g) * jd).sum())
        descent = obj_slope + mu * feas_slope

        alpha = None
        corrected = None
        if descent <= -1e-16:
            phi0 = _merit(p, y, w, mu, constraint_set, input_x)
            if _merit(p + dp, y, w, mu, constraint_set, input_x) <= phi0 + _ARMIJO_C1 * descent:
                alpha = 1.0
            else:
                # second-order correction: cancel the constraint curvature
                # picked up over the full step before giving up on it
                corrected = _second_order_correction(p, dp, jac, constraint_set, input_x)
                if corrected is not None and _merit(corrected, y, w, mu, constraint_set, input_x) <= phi0 + _ARMIJO_C1 * descent:
                    alpha = 1.0
                else:
                    corrected = None
                    trial = _BACKTRACK
                    while trial >= _MIN_ALPHA:
                        if _merit(p + trial * dp, y, w, mu, constraint_set, input_x) <= phi0 + _ARMIJO_C1 * trial * descent:
                            alpha = trial
                            break
                        trial *= _BACKTRACK
        if alpha is None:
            # merit test inconclusive (rounding scale); accept a plain Newton
            # step whenever it reduces the KKT residual itself
            kkt_trial = _kkt_norm(p + dp, sol[dim:], y, w, constraint_set, input_x)
            if kkt_trial < kkt:
                p = p + dp
                delta *= 0.1
                if delta < 1e-14:
                    delta = 0.0
                continue
            delta = max(delta * 10.0, 1e-10)
            if delta > _MAX_DELTA:
                status = SINGULAR_SYSTEM
                break
            continue

        p = corrected if corrected is not None else p + alpha * dp
        if alpha >= 0.5:
            delta *= 0.1
            if delta < 1e-14:
                delta = 0.0

    if status == CONVERGED:
        projected, multipliers, kkt_norm = p, lam, kkt
    else:
        kkt_norm, projected, multipliers = best
    return ProjectionResult(
        projected=projected,
        multipliers=multipliers,
        iterations=iterations + restore_steps,
        kkt_norm=float(kkt_norm),
        status=status,
        seconds=time.perf_counter() - start,
    )


def project_batch(ys, constraint_set, inputs_x=None, spec: ProjectionSpec = ProjectionSpec()) -> list[ProjectionResult]:
    """Independent projections in input order; failures never abort the batch."""
    ys = np.atleast_2d(np.asarray(ys, dtype=np.float64))
    n = ys.shape[0]
    if inputs_x is None:
        xs = [None] * n
    else:
        xs = np.atleast_2d(np.asarray(inputs_x, dtype=np.float64))
        if len(xs) != n:
            raise ValidationError("inputs_x length does not match ys")
    results = []
    for y, x in zip(ys, xs):
        tick = time.perf_counter()
        try:
            results.append(project(y, constraint_set, x, spec))
        except PhysprojError:
            results.append(
                ProjectionResult(
                    projected=np.array(y, dtype=np.float64),
                    multipliers=np.zeros(constraint_set.residual_dim),
                    iterations=0,
                    kkt_norm=np.inf,
                    status=SINGULAR_SYSTEM,
                    seconds=time.perf_counter() - tick,
                )
            )
    return results
