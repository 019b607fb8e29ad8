"""Power-mean interpolation paths and discrete convexity diagnostics.

The central object is the path between two nonnegative fields

    path(t) = ((1 - t) * u^q + t * v^q)^(1/q),      t in [0, 1],

along which the diffusion energy is convex whenever the weight is
nondecreasing, and the full energy is convex whenever the reaction passes the
subhomogeneity audit at the same exponent q. On 1D grids with lumped reaction
quadrature this convexity is exact at the discrete level, so the profile
routine asserts it; in 2D the element-gradient version carries interpolation
error and is reported as a diagnostic only.
"""

from dataclasses import dataclass

import numpy as np

from .energy import check_admissible, energy_parts
from .errors import InvariantViolation
from .grid import ScalarField, gradient_values
from .model import AuditResult, ProblemSpec, ReactionSpec, audit_subhomogeneity

STRICTNESS_GAP = 1e-10
EXACT_1D_TOL = 1e-10
DEFAULT_T_SAMPLES = 41


def _check_pair(u: ScalarField, v: ScalarField) -> None:
    if u.grid is not v.grid:
        raise ValueError("endpoint fields live on different grids")
    if np.any(u.values < 0) or np.any(v.values < 0):
        raise ValueError("path endpoints must be nonnegative fields")


def power_path_values(u: np.ndarray, v: np.ndarray, q: float, t: float) -> np.ndarray:
    """Nodal values of the q-power interpolation at parameter t."""
    if not q > 1:
        raise ValueError(f"path exponent must exceed 1, got q={q}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"path parameter must lie in [0, 1], got t={t}")
    if t == 0.0:
        return u.copy()
    if t == 1.0:
        return v.copy()
    return ((1.0 - t) * u**q + t * v**q) ** (1.0 / q)


def power_path(u: ScalarField, v: ScalarField, q: float, t: float) -> ScalarField:
    """q-power interpolation between nonnegative fields; exact at the endpoints."""
    _check_pair(u, v)
    return ScalarField(u.grid, power_path_values(u.values, v.values, q, t))


def edge_difference_violation(ui, uj, vi, vj, p, q, t):
    """Excess of |path difference|^p over the convex bound, per edge quadruple.

    Evaluates |d_path|^p - ((1 - t) |d_u|^p + t |d_v|^p) where d_u = uj - ui
    etc.; nonpositive values mean the scalar hidden-convexity inequality holds.
    All arguments broadcast, so randomized suites can run in one call.
    """
    ui, uj, vi, vj = (np.asarray(x, dtype=float) for x in (ui, uj, vi, vj))
    t = np.asarray(t, dtype=float)
    gi = ((1.0 - t) * ui**q + t * vi**q) ** (1.0 / q)
    gj = ((1.0 - t) * uj**q + t * vj**q) ** (1.0 / q)
    lhs = np.abs(gj - gi) ** p
    rhs = (1.0 - t) * np.abs(uj - ui) ** p + t * np.abs(vj - vi) ** p
    return lhs - rhs


@dataclass(frozen=True)
class HiddenConvexityReport:
    """Pointwise convexity-inequality check at one path parameter."""

    mode: str
    t: float
    max_violation: float
    active_set: np.ndarray  # edges/elements where the endpoints differ and move
    strict_set: np.ndarray  # subset where a strict gap was observed

    @property
    def n_active(self) -> int:
        return int(self.active_set.sum())

    @property
    def n_strict(self) -> int:
        return int(self.strict_set.sum())


def pointwise_hidden_convexity(
    u: ScalarField,
    v: ScalarField,
    p: float,
    q: float,
    t: float,
    mode: str = "edge_differences",
) -> HiddenConvexityReport:
    """Check the pointwise convexity inequality along the path at parameter t.

    ``edge_differences`` evaluates the scalar inequality on every mesh edge,
    the exact discrete analogue. ``element_gradients`` evaluates it on P1
    element gradients, which in 2D is subject to interpolation error and is
    therefore diagnostic only.
    """
    _check_pair(u, v)
    if q > p:
        raise ValueError(f"requires q <= p, got q={q} > p={p}")
    grid = u.grid
    gamma = power_path_values(u.values, v.values, q, t)

    if mode == "edge_differences":
        i, j = grid.edges[:, 0], grid.edges[:, 1]
        du = np.abs(u.values[j] - u.values[i])
        dv = np.abs(v.values[j] - v.values[i])
        dg = np.abs(gamma[j] - gamma[i])
        lhs = dg**p
        rhs = (1.0 - t) * du**p + t * dv**p
        differs = (u.values[i] != v.values[i]) | (u.values[j] != v.values[j])
        active = differs & ((du + dv) > 0)
    elif mode == "element_gradients":
        gu = np.linalg.norm(gradient_values(grid, u.values), axis=1)
        gv = np.linalg.norm(gradient_values(grid, v.values), axis=1)
        gg = np.linalg.norm(gradient_values(grid, gamma), axis=1)
        lhs = gg**p
        rhs = (1.0 - t) * gu**p + t * gv**p
        elem_u = u.values[grid.elements]
        elem_v = v.values[grid.elements]
        differs = np.any(elem_u != elem_v, axis=1)
        active = differs & ((gu + gv) > 0)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    gap = rhs - lhs
    strict = active & (gap > STRICTNESS_GAP)
    return HiddenConvexityReport(
        mode=mode,
        t=t,
        max_violation=float((-gap).max()) if len(gap) else 0.0,
        active_set=active,
        strict_set=strict,
    )


@dataclass(frozen=True)
class PathDiagnostics:
    """Sampled energies along the path with convexity second differences."""

    t_samples: np.ndarray
    diffusion_energy: np.ndarray
    total_energy: np.ndarray
    second_difference_D: np.ndarray  # length n - 2
    second_difference_I: np.ndarray
    min_second_difference_D: float
    min_second_difference_I: float
    pointwise_max_violation: float
    strict_convexity_witness: tuple[float, float, float] | None
    degenerate_constant_pair: bool

    @property
    def strictly_convex_diffusion(self) -> bool:
        return self.strict_convexity_witness is not None


def path_energy_profile(
    ps: ProblemSpec,
    u: ScalarField,
    v: ScalarField,
    q: float,
    n_samples: int = DEFAULT_T_SAMPLES,
) -> PathDiagnostics:
    """Sample the diffusion and total energy along the path between u and v.

    On 1D grids, when q does not exceed the diffusion exponent and the
    reaction passes the subhomogeneity audit at q, the discrete total energy
    is exactly convex along the path; a second difference below -1e-10 then
    raises ``InvariantViolation``. Otherwise convexity is reported, not
    asserted.
    """
    _check_pair(u, v)
    check_admissible(ps, u.values)
    check_admissible(ps, v.values)
    if n_samples < 3:
        raise ValueError(f"need at least 3 path samples, got {n_samples}")
    grid = ps.grid
    ts = np.linspace(0.0, 1.0, n_samples)
    diffusion = np.empty(n_samples)
    total = np.empty(n_samples)
    max_violation = -np.inf
    i, j = grid.edges[:, 0], grid.edges[:, 1]
    du_p = np.abs(u.values[j] - u.values[i]) ** ps.diffusion.p
    dv_p = np.abs(v.values[j] - v.values[i]) ** ps.diffusion.p
    for k, t in enumerate(ts):
        gamma = power_path_values(u.values, v.values, q, t)
        d_part, r_part = energy_parts(ps, gamma)
        diffusion[k] = d_part
        total[k] = d_part - r_part
        dg_p = np.abs(gamma[j] - gamma[i]) ** ps.diffusion.p
        max_violation = max(
            max_violation, float((dg_p - ((1.0 - t) * du_p + t * dv_p)).max())
        )

    d2_D = diffusion[:-2] - 2.0 * diffusion[1:-1] + diffusion[2:]
    d2_I = total[:-2] - 2.0 * total[1:-1] + total[2:]
    min_d2_D = float(d2_D.min())
    min_d2_I = float(d2_I.min())

    witness = None
    strict_idx = np.flatnonzero(d2_D > STRICTNESS_GAP)
    if len(strict_idx):
        k = int(strict_idx[0])
        witness = (float(ts[k]), float(ts[k + 1]), float(ts[k + 2]))

    degenerate = np.ptp(u.values) == 0.0 and np.ptp(v.values) == 0.0

    if (
        grid.dimension == 1
        and q <= ps.diffusion.p
        and audit_subhomogeneity(ps.reaction, q, grid=grid).passed
        and min_d2_I < -EXACT_1D_TOL
    ):
        raise InvariantViolation(
            f"1D path energy lost exact convexity: min second difference "
            f"{min_d2_I:.3e} below -{EXACT_1D_TOL:g}"
        )

    return PathDiagnostics(
        t_samples=ts,
        diffusion_energy=diffusion,
        total_energy=total,
        second_difference_D=d2_D,
        second_difference_I=d2_I,
        min_second_difference_D=min_d2_D,
        min_second_difference_I=min_d2_I,
        pointwise_max_violation=max_violation,
        strict_convexity_witness=witness,
        degenerate_constant_pair=bool(degenerate),
    )


@dataclass(frozen=True)
class MidpointReport:
    verdict: str  # "strict" | "equal" | "violated"
    gap: float


def midpoint_energy_test(
    ps: ProblemSpec, u: ScalarField, v: ScalarField, q: float, tol: float = STRICTNESS_GAP
) -> MidpointReport:
    """Gap between the average endpoint energy and the energy at the midpoint.

    A strictly positive gap at two equal-energy global-minimizer candidates is
    a contradiction: both cannot be global minimizers.
    """
    _check_pair(u, v)
    check_admissible(ps, u.values)
    check_admissible(ps, v.values)
    mid = power_path_values(u.values, v.values, q, 0.5)
    e_u = energy_parts(ps, u.values)
    e_v = energy_parts(ps, v.values)
    e_m = energy_parts(ps, mid)
    gap = 0.5 * ((e_u[0] - e_u[1]) + (e_v[0] - e_v[1])) - (e_m[0] - e_m[1])
    if gap > tol:
        verdict = "strict"
    elif gap < -tol:
        verdict = "violated"
    else:
        verdict = "equal"
    return MidpointReport(verdict=verdict, gap=float(gap))


def power_product(z1, z2, p: float, q: float):
    """The separable product q * z1^(1 - 1/q) * z2^(1/p), defined for z >= 0.

    Its concavity on the closed quadrant, strict on the open quadrant, is the
    scalar certificate behind the pointwise path inequality.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if np.any(z1 < 0) or np.any(z2 < 0):
        raise ValueError("power product is defined on the nonnegative quadrant")
    return q * z1 ** (1.0 - 1.0 / q) * z2 ** (1.0 / p)


@dataclass(frozen=True)
class ConcavityReport:
    max_violation: float
    n_pairs: int
    n_strict: int

    @property
    def strict_fraction(self) -> float:
        return self.n_strict / self.n_pairs if self.n_pairs else 0.0

    @property
    def passed(self) -> bool:
        return self.max_violation <= 1e-12


def _require_q_lt_p(p: float, q: float) -> None:
    if not 1 < q < p:
        raise ValueError(f"requires 1 < q < p, got q={q}, p={p}")


def power_product_concavity(p: float, q: float, z_points: np.ndarray) -> ConcavityReport:
    """Midpoint concavity of the power product over all pairs of given points.

    ``z_points`` is an (m, 2) array of nonnegative points. Violations are
    excesses of the averaged values over the midpoint value; strictness is a
    midpoint gap above 1e-10 between distinct points.
    """
    _require_q_lt_p(p, q)
    z = np.asarray(z_points, dtype=float)
    if z.ndim != 2 or z.shape[1] != 2:
        raise ValueError("z_points must be an (m, 2) array")
    f = power_product(z[:, 0], z[:, 1], p, q)
    max_violation = -np.inf
    n_pairs = 0
    n_strict = 0
    for k in range(len(z)):
        mid1 = 0.5 * (z[k, 0] + z[:, 0])
        mid2 = 0.5 * (z[k, 1] + z[:, 1])
        gap = power_product(mid1, mid2, p, q) - 0.5 * (f[k] + f)
        distinct = np.any(z != z[k], axis=1)
        max_violation = max(max_violation, float((-gap).max()))
        n_pairs += int(distinct.sum())
        n_strict += int((distinct & (gap > STRICTNESS_GAP)).sum())
    return ConcavityReport(max_violation=max_violation, n_pairs=n_pairs, n_strict=n_strict)


def power_product_concavity_grid(
    p: float, q: float, axis1: np.ndarray, axis2: np.ndarray | None = None
) -> ConcavityReport:
    """Exhaustive midpoint-concavity check over a tensor grid of points.

    Equivalent to ``power_product_concavity`` on the n1*n2 tensor-product
    points, but exploits separability of the product so the full pair set
    (1e8 pairs for a 100 x 100 grid) runs in seconds.
    """
    _require_q_lt_p(p, q)
    ax1 = np.asarray(axis1, dtype=float)
    ax2 = ax1 if axis2 is None else np.asarray(axis2, dtype=float)
    f1 = q * ax1 ** (1.0 - 1.0 / q)
    f2 = ax2 ** (1.0 / p)
    m1 = q * (0.5 * (ax1[:, None] + ax1[None, :])) ** (1.0 - 1.0 / q)
    m2 = (0.5 * (ax2[:, None] + ax2[None, :])) ** (1.0 / p)
    ff = f1[:, None] * f2[None, :]  # values at grid points (a, b)

    n1, n2 = len(ax1), len(ax2)
    max_violation = -np.inf
    n_strict = 0
    # ordered pairs ((a, b), (c, d)); loop over a, vectorize over (c, b, d)
    for a in range(n1):
        mid = m1[a][:, None, None] * m2[None, :, :]  # (c, b, d)
        avg = 0.5 * (ff[a][None, :, None] + ff[:, None, :])  # (c, b, d)
        gap = mid - avg
        max_violation = max(max_violation, float((-gap).max()))
        n_strict += int((gap > STRICTNESS_GAP).sum())
    n_points = n1 * n2
    n_pairs = n_points * n_points - n_points  # ordered, self-pairs excluded
    return ConcavityReport(max_violation=max_violation, n_pairs=n_pairs, n_strict=n_strict)


def reaction_pullback_concavity(
    rs: ReactionSpec,
    q: float,
    s_grid: np.ndarray,
    grid=None,
    tol: float = 1e-10,
) -> AuditResult:
    """Concavity of s -> G(x, s^(1/q)) on a positive sample grid, per node.

    This is the reaction-side half of path convexity: with nodal values
    s = (1 - t) u^q + t v^q affine in t, a concave pullback makes the lumped
    reaction energy concave along the path. Checked as a three-point chord
    test, which also handles non-uniform sample grids.
    """
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or len(s) < 3 or np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise ValueError("s_grid must be at least 3 increasing positive values")
    a, b = rs.coefficient_arrays(grid) if grid is not None else (
        np.atleast_1d(np.asarray(rs.a, dtype=float)),
        np.atleast_1d(np.asarray(rs.b, dtype=float)),
    )
    a, b = np.broadcast_arrays(a, b)
    phi = rs.primitive(a[:, None], b[:, None], s[None, :] ** (1.0 / q))
    left, mid, right = s[:-2], s[1:-1], s[2:]
    w_hi = (mid - left) / (right - left)
    chord = (1.0 - w_hi) * phi[:, :-2] + w_hi * phi[:, 2:]
    violation = chord - phi[:, 1:-1]
    worst = float(violation.max())
    if worst > tol:
        node, k = np.unravel_index(np.argmax(violation), violation.shape)
        return AuditResult(
            False,
            f"pullback convex by {worst:.3e} at node {node}, s={mid[k]:.6g}",
            witness=(int(node), float(mid[k])),
        )
    return AuditResult(True, f"pullback concave on {len(s)} samples (worst gap {worst:.3e})")
