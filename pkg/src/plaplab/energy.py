"""Discrete energy, its nodal gradient, and the scaled stationarity residual.

The energy of a nodal field u is

    sum_elements  volume * (1/p) * W(|grad u|^p)   -   sum_nodes  m_i * G(x_i, u_i)

where W is the diffusion primitive and G the reaction primitive, with lumped
node masses m_i. Dirichlet problems freeze the boundary entries: fields must
vanish there and the gradient is zeroed there, which keeps energy values
exactly comparable across iterates (no penalty terms).

Overflowing evaluations are reported as infinities rather than raised, so a
line search can treat them as rejected steps.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BoundaryViolationError
from .grid import ScalarField, gradient_values
from .model import ProblemSpec

BOUNDARY_TOL = 1e-12

# Regularization of the |grad u|^(p-2) weight for p < 2, applied in the
# gradient assembly only: the energy itself stays exact.
GRAD_WEIGHT_FLOOR = 1e-10


@dataclass(frozen=True)
class EnergyBreakdown:
    diffusion_part: float
    reaction_part: float
    total: float


def check_admissible(ps: ProblemSpec, values: np.ndarray) -> None:
    if ps.is_dirichlet:
        worst = np.max(np.abs(values[ps.grid.boundary_nodes]), initial=0.0)
        if worst > BOUNDARY_TOL:
            raise BoundaryViolationError(
                f"field has boundary values up to {worst:.3e} under a "
                "zero-Dirichlet condition"
            )


def energy_parts(ps: ProblemSpec, values: np.ndarray) -> tuple[float, float]:
    """(diffusion, reaction) parts for raw nodal values; may return infinities."""
    grid = ps.grid
    p = ps.diffusion.p
    a, b = ps.nodal_coefficients
    with np.errstate(over="ignore", invalid="ignore"):
        grads = gradient_values(grid, values)
        norm_p = np.linalg.norm(grads, axis=1) ** p
        diffusion = float(grid.element_volume @ (ps.diffusion.primitive(norm_p) / p))
        reaction = float(grid.node_mass @ ps.reaction.primitive(a, b, values))
    if np.isnan(diffusion):
        diffusion = np.inf
    if np.isnan(reaction):
        reaction = -np.inf
    return diffusion, reaction


def energy_total(ps: ProblemSpec, values: np.ndarray) -> float:
    diffusion, reaction = energy_parts(ps, values)
    total = diffusion - reaction
    return np.inf if np.isnan(total) else total


def energy(ps: ProblemSpec, u: ScalarField) -> EnergyBreakdown:
    """Energy of an admissible field, split into diffusion and reaction parts."""
    if u.grid is not ps.grid:
        raise ValueError("field and problem live on different grids")
    check_admissible(ps, u.values)
    diffusion, reaction = energy_parts(ps, u.values)
    return EnergyBreakdown(diffusion, reaction, diffusion - reaction)


def energy_grad_values(ps: ProblemSpec, values: np.ndarray) -> np.ndarray:
    """Nodal partial derivatives of the discrete energy.

    Dirichlet boundary entries are forced to zero (frozen degrees of freedom).
    """
    grid = ps.grid
    p = ps.diffusion.p
    grads = gradient_values(grid, values)
    norms = np.linalg.norm(grads, axis=1)
    if p < 2:
        weight_norms = np.maximum(norms, GRAD_WEIGHT_FLOOR)
    else:
        weight_norms = norms
    weight = ps.diffusion.value(norms**p) * weight_norms ** (p - 2.0)
    flux = (grid.element_volume * weight)[:, None] * grads
    per_local = np.einsum("ed,eld->el", flux, grid.element_grad_coeffs)
    out = np.zeros(grid.n_nodes)
    for local in range(grid.dimension + 1):
        np.add.at(out, grid.elements[:, local], per_local[:, local])

    a, b = ps.nodal_coefficients
    out -= grid.node_mass * ps.reaction.value(a, b, values)
    if ps.is_dirichlet:
        out[grid.boundary_nodes] = 0.0
    return out


def energy_grad(ps: ProblemSpec, u: ScalarField) -> ScalarField:
    if u.grid is not ps.grid:
        raise ValueError("field and problem live on different grids")
    check_admissible(ps, u.values)
    return ScalarField(ps.grid, energy_grad_values(ps, u.values))


# Floor under nodal values when estimating reaction curvature: exponents below
# 2 give unbounded curvature at 0, which would freeze scaled descent there.
CURVATURE_VALUE_FLOOR = 1e-13


def energy_grad_and_scaling(ps: ProblemSpec, values: np.ndarray):
    """Gradient plus a positive per-node curvature estimate.

    The estimate is the lumped diagonal of the weighted diffusion operator
    plus the repulsive part of the reaction slope; it equals the exact Jacobi
    diagonal for constant-weight diffusion with exponent 2. Solvers use it to
    scale descent directions across the very unequal nodal stiffness that
    dead-core tails produce.
    """
    grid = ps.grid
    p = ps.diffusion.p
    grads = gradient_values(grid, values)
    norms = np.linalg.norm(grads, axis=1)
    if p < 2:
        weight_norms = np.maximum(norms, GRAD_WEIGHT_FLOOR)
    else:
        weight_norms = norms
    weight = ps.diffusion.value(norms**p) * weight_norms ** (p - 2.0)

    scaled_volume = grid.element_volume * weight
    flux = scaled_volume[:, None] * grads
    per_local = np.einsum("ed,eld->el", flux, grid.element_grad_coeffs)
    diag_local = scaled_volume[:, None] * grid.grad_coeff_sq
    out = np.zeros(grid.n_nodes)
    diag = np.zeros(grid.n_nodes)
    for local in range(grid.dimension + 1):
        np.add.at(out, grid.elements[:, local], per_local[:, local])
        np.add.at(diag, grid.elements[:, local], diag_local[:, local])

    a, b = ps.nodal_coefficients
    out -= grid.node_mass * ps.reaction.value(a, b, values)
    floored = np.maximum(np.abs(values), CURVATURE_VALUE_FLOOR)
    slope = ps.reaction.derivative(a, b, floored)
    diag += grid.node_mass * np.maximum(-slope, 0.0)
    if ps.is_dirichlet:
        out[grid.boundary_nodes] = 0.0
    return out, np.maximum(diag, 1e-30)


def residual_values(ps: ProblemSpec, values: np.ndarray) -> float:
    g = energy_grad_values(ps, values)
    return float(np.linalg.norm(g[ps.free_nodes]) / np.sqrt(ps.grid.n_nodes))


def residual_norm(ps: ProblemSpec, u: ScalarField) -> float:
    """Euclidean norm of the free-node gradient, scaled by 1/sqrt(node count)."""
    if u.grid is not ps.grid:
        raise ValueError("field and problem live on different grids")
    check_admissible(ps, u.values)
    return residual_values(ps, u.values)
