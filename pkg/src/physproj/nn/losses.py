"""Loss functions: data MSE, physics penalties, and their combination.

The free functions mirror the formulas used for reporting; the *Term classes
additionally provide gradients with respect to the normalized network output
so the training loop can backpropagate through the physics penalty. A term's
``loss_and_output_grad`` returns the already-weighted contribution, and the
trainer forms  total = (1 - lambda_physics) * data_mse + physics_term.
"""

from __future__ import annotations

import numpy as np

from physproj.errors import ValidationError


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ValidationError(f"shape mismatch in mse: {p.shape} vs {t.shape}")
    return float(np.mean((p - t) ** 2))


def mse_gradient(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d(mse)/d(pred); mean is over all elements."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ValidationError(f"shape mismatch in mse_gradient: {p.shape} vs {t.shape}")
    return 2.0 * (p - t) / p.size


def total_loss(data_loss: float, physics_loss: float, lambda_physics: float) -> float:
    """Convex combination (1 - lambda) * data + lambda * physics."""
    if not 0.0 <= lambda_physics <= 1.0:
        raise ValidationError("lambda_physics must lie in [0, 1]")
    return (1.0 - lambda_physics) * data_loss + lambda_physics * physics_loss


def physics_loss_springmass(input_batch: np.ndarray, output_batch: np.ndarray, energy_fn) -> float:
    """MSE between energies of the predicted and the input states (J^2).

    Batches are in normalized space; ``energy_fn`` maps a normalized batch to
    per-sample energies in physical units.
    """
    e_in = np.asarray(energy_fn(input_batch), dtype=np.float64)
    e_out = np.asarray(energy_fn(output_batch), dtype=np.float64)
    return float(np.mean((e_out - e_in) ** 2))


def physics_loss_ltp(
    input_batch: np.ndarray,
    output_batch: np.ndarray,
    constraint_set,
    lambdas: tuple[float, float, float],
    input_transform=None,
) -> float:
    """Weighted sum of per-law scaled-residual MSEs.

    Residuals come from ``constraint_set`` evaluated on de-normalized
    outputs; each law's MSE is weighted by its lambda and summed. Inputs are
    physical (P, I, R) rows unless ``input_transform`` is given to
    de-normalize them first.
    """
    x = np.atleast_2d(np.asarray(input_batch, dtype=np.float64))
    if input_transform is not None:
        from physproj.constraints.transform import denormalize

        x = denormalize(x, input_transform)
    residuals = constraint_set.residual(x, np.atleast_2d(output_batch))
    per_law_mse = np.mean(residuals**2, axis=0)
    return float(np.dot(np.asarray(lambdas, dtype=np.float64), per_law_mse))


class SpringEnergyTerm:
    """Energy-conservation penalty, weight * MSE(E_out, E_in), with gradient."""

    def __init__(self, params, transform, weight: float):
        self.params = params
        self.transform = transform
        self.weight = weight

    def _energies(self, batch_norm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        from physproj.constraints.transform import denormalize
        from physproj.springmass import energy

        phys = denormalize(np.atleast_2d(batch_norm), self.transform)
        return phys, np.asarray(energy(phys, self.params))

    def loss_and_output_grad(self, x_norm: np.ndarray, y_norm: np.ndarray) -> tuple[float, np.ndarray]:
        from physproj.constraints.transform import denormalize_jacobian_diag
        from physproj.springmass import energy_gradient

        _, e_in = self._energies(x_norm)
        y_phys, e_out = self._energies(y_norm)
        diff = e_out - e_in
        loss = self.weight * float(np.mean(diff**2))
        # dE/dy_norm = dE/dy_phys * d(denorm)/dz, chain rule per sample
        de_dphys = energy_gradient(y_phys, self.params)
        diag = denormalize_jacobian_diag(np.atleast_2d(y_norm), self.transform)
        grad = self.weight * (2.0 / diff.size) * diff[:, None] * de_dphys * diag
        return loss, grad


class LtpResidualTerm:
    """Per-law scaled-residual penalty for the plasma outputs, with gradient."""

    def __init__(self, constraint_set, input_transform, lambdas: tuple[float, float, float]):
        self.constraint_set = constraint_set
        self.input_transform = input_transform
        self.lambdas = np.asarray(lambdas, dtype=np.float64)

    def loss_and_output_grad(self, x_norm: np.ndarray, y_norm: np.ndarray) -> tuple[float, np.ndarray]:
        from physproj.constraints.transform import denormalize

        x_phys = denormalize(np.atleast_2d(x_norm), self.input_transform)
        y = np.atleast_2d(y_norm)
        r = self.constraint_set.residual(x_phys, y)  # (n, 3)
        jac = self.constraint_set.jacobian(x_phys, y)  # (n, 3, d)
        n = r.shape[0]
        loss = float(np.dot(self.lambdas, np.mean(r**2, axis=0)))
        grad = (2.0 / n) * np.einsum("k,nk,nkd->nd", self.lambdas, r, jac)
        return loss, grad
