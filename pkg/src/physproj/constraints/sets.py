"""Constraint residuals g(x, p) = 0 and their Jacobians w.r.t. normalized outputs.

Residuals are evaluated on de-normalized (physical) outputs and then
nondimensionalized: the pressure and current laws divide by their input
values, the quasi-neutrality law by the predicted electron density, and the
energy law by max(anchor, 1 J). That keeps mixed-unit residuals comparable
under the identity weighting used by the projection solver. All Jacobians
are analytic, including the ln(10) * 10^u factor on log-scaled outputs, and
are verified against finite differences in the test suite.
"""

from __future__ import annotations

import numpy as np

from physproj.constraints.ltp import ELEMENTARY_CHARGE, K_BOLTZMANN, LtpSchema
from physproj.constraints.transform import (
    TransformSpec,
    denormalize,
    denormalize_curvature_diag,
    denormalize_jacobian_diag,
)
from physproj.errors import ValidationError

NE_SCALE_FLOOR = 1e6  # m^-3, lower clamp for the quasi-neutrality scale


class ConstraintSet:
    """Vector residual with analytic Jacobian, batched over samples.

    ``residual(x, p)`` and ``jacobian(x, p)`` accept a single sample
    (p of shape (dim,), x a vector or None) or batches (leading axis n).
    Subclasses implement the batched ``_residual``/``_jacobian``.
    """

    residual_dim: int = 0
    output_spec: TransformSpec | None = None

    def residual(self, x, p_norm) -> np.ndarray:
        p = np.asarray(p_norm, dtype=np.float64)
        single = p.ndim == 1
        r = self._residual(self._batch_x(x, single), np.atleast_2d(p))
        return r[0] if single else r

    def jacobian(self, x, p_norm) -> np.ndarray:
        p = np.asarray(p_norm, dtype=np.float64)
        single = p.ndim == 1
        j = self._jacobian(self._batch_x(x, single), np.atleast_2d(p))
        return j[0] if single else j

    @staticmethod
    def _batch_x(x, single: bool):
        if x is None:
            return None
        x = np.asarray(x, dtype=np.float64)
        return np.atleast_2d(x) if single else x

    def _residual(self, x, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _jacobian(self, x, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def lagrangian_hessian(self, x, p_norm, lam) -> np.ndarray:
        """sum_k lam_k * Hessian of residual k at a single point, (dim, dim).

        The projection solver needs this curvature for true Newton steps.
        Default implementation: central differences of the analytic
        Jacobian; subclasses override with exact expressions.
        """
        p = np.asarray(p_norm, dtype=np.float64)
        lam = np.asarray(lam, dtype=np.float64)
        dim = p.size
        h = 1e-6
        out = np.zeros((dim, dim))
        step = np.zeros(dim)
        for j in range(dim):
            step[j] = h
            jac_plus = self.jacobian(x, p + step)
            jac_minus = self.jacobian(x, p - step)
            out[:, j] = (jac_plus - jac_minus).T @ lam / (2.0 * h)
            step[j] = 0.0
        return 0.5 * (out + out.T)


class EnergyConstraint(ConstraintSet):
    """Single residual: mechanical energy of the de-normalized state vs anchor."""

    residual_dim = 1

    def __init__(self, params, anchor_energy: float, state_spec: TransformSpec):
        from physproj.springmass import SpringParams

        if anchor_energy < 0.0:
            raise ValidationError("anchor energy must be non-negative")
        self.params: SpringParams = params
        self.anchor = float(anchor_energy)
        self.scale = max(self.anchor, 1.0)
        self.output_spec = state_spec

    def _residual(self, x, p: np.ndarray) -> np.ndarray:
        from physproj.springmass import energy

        phys = denormalize(p, self.output_spec)
        e = np.asarray(energy(phys, self.params))
        return ((e - self.anchor) / self.scale)[:, None]

    def _jacobian(self, x, p: np.ndarray) -> np.ndarray:
        from physproj.springmass import energy_gradient

        phys = denormalize(p, self.output_spec)
        grad = energy_gradient(phys, self.params) / self.scale
        diag = denormalize_jacobian_diag(p, self.output_spec)
        return (grad * diag)[:, None, :]

    def lagrangian_hessian(self, x, p_norm, lam) -> np.ndarray:
        from physproj.springmass import energy_gradient

        p = np.asarray(p_norm, dtype=np.float64)
        k1, k2, m1, m2 = self.params.k1, self.params.k2, self.params.m1, self.params.m2
        hess_phys = np.array(
            [
                [k1 + k2, 0.0, -k2, 0.0],
                [0.0, m1, 0.0, 0.0],
                [-k2, 0.0, k2, 0.0],
                [0.0, 0.0, 0.0, m2],
            ]
        ) / self.scale
        diag = denormalize_jacobian_diag(p, self.output_spec)
        curv = denormalize_curvature_diag(p, self.output_spec)
        grad_phys = energy_gradient(denormalize(p, self.output_spec), self.params) / self.scale
        hess = diag[:, None] * hess_phys * diag[None, :] + np.diag(grad_phys * curv)
        return float(np.asarray(lam).ravel()[0]) * hess


class LtpConstraints(ConstraintSet):
    """Pressure balance, discharge current, and quasi-neutrality residuals.

    ``laws`` selects a subset (by index: 0 pressure, 1 current, 2
    neutrality) for the per-law projection ablations. Electrons can be
    counted into the pressure sum via ``include_electrons_in_pressure``;
    by default only the 11 heavy species contribute.
    """

    LAW_NAMES = ("pressure", "current", "neutrality")

    def __init__(
        self,
        schema: LtpSchema,
        output_spec: TransformSpec,
        laws: tuple[int, ...] = (0, 1, 2),
        include_electrons_in_pressure: bool = False,
    ):
        if not laws or any(l not in (0, 1, 2) for l in laws) or len(set(laws)) != len(laws):
            raise ValidationError(f"laws must be a non-empty subset of (0, 1, 2), got {laws}")
        if tuple(output_spec.names) != tuple(schema.output_names):
            raise ValidationError("output transform layout does not match the schema")
        self.schema = schema
        self.output_spec = output_spec
        self.laws = tuple(laws)
        self.residual_dim = len(self.laws)
        self._pressure_idx = list(schema.heavy_indices())
        if include_electrons_in_pressure:
            self._pressure_idx = [schema.idx(schema.electron)] + self._pressure_idx
        self._pos = schema.positive_indices()
        self._neg = schema.negative_indices()
        self._ne = schema.idx(schema.electron)
        self._tg = schema.idx("Tg")
        self._vd = schema.idx("vd")

    def _full_residual(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        p_in, i_in, radius = x[:, 0], x[:, 1], x[:, 2]
        tg = y[:, self._tg]
        ne = y[:, self._ne]
        vd = y[:, self._vd]
        r1 = (p_in - y[:, self._pressure_idx].sum(axis=1) * K_BOLTZMANN * tg) / p_in
        r2 = (i_in - ELEMENTARY_CHARGE * ne * vd * np.pi * radius**2) / i_in
        ne_scale = np.maximum(ne, NE_SCALE_FLOOR)
        r3 = (ne - y[:, self._pos].sum(axis=1) + y[:, self._neg].sum(axis=1)) / ne_scale
        return np.stack([r1, r2, r3], axis=-1)

    def _residual(self, x, p: np.ndarray) -> np.ndarray:
        if x is None:
            raise ValidationError("LTP constraints need the (P, I, R) input vector")
        y = denormalize(p, self.output_spec)
        if not np.all(np.isfinite(y)):
            raise ValidationError("non-finite de-normalized output")
        return self._full_residual(np.atleast_2d(x), y)[:, self.laws]

    def _phys_jacobian(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """All three law gradients w.r.t. the physical outputs, (n, 3, dim)."""
        n, dim = y.shape
        p_in, i_in, radius = x[:, 0], x[:, 1], x[:, 2]
        tg = y[:, self._tg]
        ne = y[:, self._ne]
        vd = y[:, self._vd]

        jac = np.zeros((n, 3, dim))
        # pressure law
        jac[:, 0, self._pressure_idx] = (-K_BOLTZMANN * tg / p_in)[:, None]
        jac[:, 0, self._tg] = -K_BOLTZMANN * y[:, self._pressure_idx].sum(axis=1) / p_in
        # current law
        area = np.pi * radius**2
        jac[:, 1, self._ne] = -ELEMENTARY_CHARGE * vd * area / i_in
        jac[:, 1, self._vd] = -ELEMENTARY_CHARGE * ne * area / i_in
        # quasi-neutrality, including the derivative of its 1/ne scale
        ne_scale = np.maximum(ne, NE_SCALE_FLOOR)
        jac[:, 2, self._pos] = (-1.0 / ne_scale)[:, None]
        jac[:, 2, self._neg] = (1.0 / ne_scale)[:, None]
        raw3 = ne - y[:, self._pos].sum(axis=1) + y[:, self._neg].sum(axis=1)
        clamped = ne <= NE_SCALE_FLOOR
        jac[:, 2, self._ne] = np.where(clamped, 1.0 / ne_scale, (ne_scale - raw3) / ne_scale**2)
        return jac

    def _jacobian(self, x, p: np.ndarray) -> np.ndarray:
        if x is None:
            raise ValidationError("LTP constraints need the (P, I, R) input vector")
        jac = self._phys_jacobian(np.atleast_2d(x), denormalize(p, self.output_spec))
        diag = denormalize_jacobian_diag(p, self.output_spec)
        return jac[:, self.laws, :] * diag[:, None, :]

    def lagrangian_hessian(self, x, p_norm, lam) -> np.ndarray:
        """Exact curvature of lam . g in normalized space, single point."""
        p = np.asarray(p_norm, dtype=np.float64)
        x_row = np.atleast_2d(np.asarray(x, dtype=np.float64))[0]
        y = denormalize(p[None, :], self.output_spec)[0]
        dim = p.size
        lam_full = np.zeros(3)
        lam_full[list(self.laws)] = np.asarray(lam, dtype=np.float64)
        p_in, i_in, radius = x_row
        ne = y[self._ne]

        hess = np.zeros((dim, dim))
        # pressure law: bilinear in each heavy density and Tg
        cross = -K_BOLTZMANN / p_in * lam_full[0]
        hess[self._pressure_idx, self._tg] += cross
        hess[self._tg, self._pressure_idx] += cross
        # current law: bilinear in ne and vd
        cross = -ELEMENTARY_CHARGE * np.pi * radius**2 / i_in * lam_full[1]
        hess[self._ne, self._vd] += cross
        hess[self._vd, self._ne] += cross
        # quasi-neutrality: rational in ne unless the scale is clamped
        if ne > NE_SCALE_FLOOR:
            s_pos = y[self._pos].sum()
            s_neg = y[self._neg].sum()
            w3 = lam_full[2]
            hess[self._ne, self._ne] += w3 * (-2.0 * (s_pos - s_neg) / ne**3)
            hess[self._ne, self._pos] += w3 / ne**2
            hess[self._pos, self._ne] += w3 / ne**2
            hess[self._ne, self._neg] += -w3 / ne**2
            hess[self._neg, self._ne] += -w3 / ne**2

        diag = denormalize_jacobian_diag(p, self.output_spec)
        curv = denormalize_curvature_diag(p, self.output_spec)
        grad_phys = self._phys_jacobian(x_row[None, :], y[None, :])[0]  # (3, dim)
        chain_diag = (lam_full @ grad_phys) * curv
        return diag[:, None] * hess * diag[None, :] + np.diag(chain_diag)


def constraint_jacobian(constraint_set: ConstraintSet, input_x, normalized_output) -> np.ndarray:
    """Analytic Jacobian of the scaled residuals, shape (residual_dim, output_dim)."""
    return constraint_set.jacobian(input_x, normalized_output)
