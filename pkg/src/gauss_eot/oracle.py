"""Discretized Sinkhorn-Knopp referee for the closed-form results.

Everything here is deliberately independent of the closed forms: Gaussians
are collapsed onto finite grids, the entropic problem is solved by plain
alternating scaling against the Gibbs kernel exp(-||x-y||^2 / eps), and the
primal value is read off the discrete plan as

    sum_ij plan_ij ||x_i - y_j||^2  +  eps * KL(plan || mu x nu).

The KL is taken against the product of the *discretized* marginals, which is
the discretization-friendly convention: the cell volumes cancel inside the
log, so the discrete value converges to the continuous one without an
entropy offset. Default updates run in the log domain (logsumexp); the
linear-domain variant is kept behind a flag to demonstrate where it
underflows. Convergence is declared on the max L1 marginal error of the
actual plan, never on scaling increments.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .errors import (
    CoverageError,
    DimensionMismatch,
    NotConverged,
    NumericalUnderflow,
    TOutOfRange,
)
from .gaussian import Gaussian
from .spd import spd_logdet

DEFAULT_MAX_ITERS = 20000
MIN_NODES_PER_DIM = 16
DEFAULT_K_SIGMA = 6.0


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned product grid: one (lo, hi, count) triple per dimension."""

    axes: tuple

    def __post_init__(self):
        axes = tuple((float(lo), float(hi), int(count)) for lo, hi, count in self.axes)
        if len(axes) < 1:
            raise ValueError("grid needs at least one axis")
        for lo, hi, count in axes:
            if hi <= lo:
                raise ValueError(f"axis upper bound must exceed lower, got [{lo}, {hi}]")
            if count < MIN_NODES_PER_DIM:
                raise ValueError(
                    f"axis needs at least {MIN_NODES_PER_DIM} nodes, got {count}"
                )
        object.__setattr__(self, "axes", axes)

    @classmethod
    def uniform(cls, lo: float, hi: float, count: int, dim: int = 1) -> "GridSpec":
        return cls(tuple((lo, hi, count) for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.axes)

    def nodes(self) -> np.ndarray:
        """All grid nodes as an (m, dim) array, row-major over the axes."""
        lines = [np.linspace(lo, hi, count) for lo, hi, count in self.axes]
        mesh = np.meshgrid(*lines, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finitely supported probability measure with distinct support points."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = np.array(self.support, dtype=float)
        if support.ndim == 1:
            support = support[:, None]
        if support.ndim != 2 or support.shape[0] < 1:
            raise DimensionMismatch("support must be a nonempty (m, n) array")
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != support.shape[0]:
            raise DimensionMismatch(
                f"{support.shape[0]} support points but {weights.shape[0]} weights"
            )
        if np.any(weights <= 0.0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and strictly positive")
        if np.unique(support, axis=0).shape[0] != support.shape[0]:
            raise ValueError("support points must be distinct")
        weights = weights / weights.sum()
        support.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.support.shape[0]

    @property
    def dim(self) -> int:
        return self.support.shape[1]


def grid_weights(g: Gaussian, spec: GridSpec, k_sigma: float = DEFAULT_K_SIGMA) -> np.ndarray:
    """Normalized density weights of ``g`` on the full grid (zeros allowed).

    Checks that the grid box contains ``mean +- k_sigma * sqrt(lambda) * v``
    for every covariance eigenpair (lambda, v); grids that truncate visible
    mass raise CoverageError rather than silently biasing every downstream
    comparison. Far-tail weights may underflow to exact zeros on grids much
    wider than the Gaussian.
    """
    if spec.dim != g.dim:
        raise DimensionMismatch(
            f"grid is {spec.dim}-dimensional, Gaussian is {g.dim}-dimensional"
        )
    los = np.array([ax[0] for ax in spec.axes])
    his = np.array([ax[1] for ax in spec.axes])
    w, v = g.cov.eigvals, g.cov.eigvecs
    for idx in range(g.dim):
        reach = k_sigma * np.sqrt(w[idx]) * v[:, idx]
        for point in (g.mean + reach, g.mean - reach):
            if np.any(point < los) or np.any(point > his):
                raise CoverageError(
                    f"grid {list(spec.axes)} does not cover {k_sigma:g} standard "
                    f"deviations along principal direction {idx}"
                )
    nodes = spec.nodes()
    delta = (nodes - g.mean[None, :]) @ g.cov.eigvecs
    log_weights = -0.5 * np.sum(delta * delta / g.cov.eigvals[None, :], axis=1)
    log_weights -= log_weights.max()
    weights = np.exp(log_weights)
    return weights / weights.sum()


def measure_from_grid(spec: GridSpec, weights: np.ndarray) -> DiscreteMeasure:
    """Wrap full-grid weights as a measure, dropping exact-zero nodes.

    Nodes whose weight underflowed to 0.0 carry no mass at double precision
    and would otherwise violate the strict-positivity contract of
    :class:`DiscreteMeasure`.
    """
    nodes = spec.nodes()
    mask = weights > 0.0
    return DiscreteMeasure(nodes[mask], weights[mask])


def discretize(g: Gaussian, spec: GridSpec, k_sigma: float = DEFAULT_K_SIGMA) -> DiscreteMeasure:
    """Collapse a Gaussian onto a grid, weights proportional to its density."""
    return measure_from_grid(spec, grid_weights(g, spec, k_sigma=k_sigma))


@dataclass(frozen=True, eq=False)
class SinkhornState:
    """Converged (or final) scalings, stored in the log domain."""

    log_u: np.ndarray
    log_v: np.ndarray
    epsilon: float
    marginal_err: float
    iterations: int
    converged: bool

    @property
    def scaling_u(self) -> np.ndarray:
        return np.exp(self.log_u)

    @property
    def scaling_v(self) -> np.ndarray:
        return np.exp(self.log_v)


def plan_from_scalings(
    mu: DiscreteMeasure, nu: DiscreteMeasure, log_u: np.ndarray, log_v: np.ndarray, eps: float
) -> np.ndarray:
    """Assemble the plan diag(u * mu) K diag(v * nu) from log scalings.

    Invariant under the gauge shift (log_u + c, log_v - c): only the product
    of the scalings enters the plan.
    """
    cost = cdist(mu.support, nu.support, "sqeuclidean")
    log_plan = (
        (log_u + np.log(mu.weights))[:, None]
        - cost / eps
        + (log_v + np.log(nu.weights))[None, :]
    )
    return np.exp(log_plan)


def primal_value(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    plan: np.ndarray,
    log_u: np.ndarray,
    log_v: np.ndarray,
    eps: float,
) -> float:
    """Transport term plus eps times KL(plan || mu x nu), from the plan itself."""
    cost = cdist(mu.support, nu.support, "sqeuclidean")
    transport = float(np.sum(plan * cost))
    # log(plan_ij / (mu_i nu_j)) = log_u_i - cost_ij/eps + log_v_j
    log_ratio = log_u[:, None] - cost / eps + log_v[None, :]
    kl = float(np.sum(plan * log_ratio))
    return transport + eps * kl


def sinkhorn_knopp(
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    eps,
    tol: float = 1e-9,
    max_iters: int = DEFAULT_MAX_ITERS,
    log_domain: bool = True,
):
    """Alternating-scaling solver; returns (state, plan, primal_value).

    Log-domain updates (default) are safe across the supported eps range.
    ``log_domain=False`` runs the textbook linear-domain iteration and raises
    NumericalUnderflow as soon as the kernel or a scaling denominator
    underflows to zero, which it will for small eps on spread-out supports.
    """
    eps = float(eps)
    if eps <= 0.0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")

    cost = cdist(mu.support, nu.support, "sqeuclidean")
    log_mu = np.log(mu.weights)
    log_nu = np.log(nu.weights)

    if log_domain:
        log_kernel = -cost / eps
        log_u = np.zeros(mu.size)
        log_v = np.zeros(nu.size)
        err = np.inf
        converged = False
        iterations = 0
        for iterations in range(1, max_iters + 1):
            log_u = -logsumexp(log_kernel + (log_v + log_nu)[None, :], axis=1)
            log_v = -logsumexp(log_kernel + (log_u + log_mu)[:, None], axis=0)
            # columns are exact right after the v-update; only rows can err
            log_rows = logsumexp(
                (log_u + log_mu)[:, None] + log_kernel + (log_v + log_nu)[None, :],
                axis=1,
            )
            err = float(np.abs(np.exp(log_rows) - mu.weights).sum())
            if err <= tol:
                converged = True
                break
        if not converged:
            raise NotConverged(
                f"sinkhorn did not reach marginal tol={tol:g} within "
                f"{max_iters} iterations (last error {err:.3e})",
                marginal_err=err,
            )
    else:
        kernel = np.exp(-cost / eps)
        if np.any(kernel.sum(axis=1) == 0.0) or np.any(kernel.sum(axis=0) == 0.0):
            raise NumericalUnderflow(
                "Gibbs kernel underflowed to zero rows/columns in the linear "
                "domain; rerun with log_domain=True"
            )
        u = np.ones(mu.size)
        v = np.ones(nu.size)
        err = np.inf
        converged = False
        iterations = 0
        for iterations in range(1, max_iters + 1):
            den_u = kernel @ (v * nu.weights)
            if np.any(den_u <= 0.0) or not np.all(np.isfinite(den_u)):
                raise NumericalUnderflow(
                    "linear-domain scaling underflowed; rerun with log_domain=True"
                )
            u = 1.0 / den_u
            den_v = kernel.T @ (u * mu.weights)
            if np.any(den_v <= 0.0) or not np.all(np.isfinite(den_v)):
                raise NumericalUnderflow(
                    "linear-domain scaling underflowed; rerun with log_domain=True"
                )
            v = 1.0 / den_v
            plan_rows = (u * mu.weights) * (kernel @ (v * nu.weights))
            err = float(np.abs(plan_rows - mu.weights).sum())
            if err <= tol:
                converged = True
                break
        if not converged:
            raise NotConverged(
                f"sinkhorn did not reach marginal tol={tol:g} within "
                f"{max_iters} iterations (last error {err:.3e})",
                marginal_err=err,
            )
        log_u = np.log(u)
        log_v = np.log(v)

    state = SinkhornState(
        log_u=log_u,
        log_v=log_v,
        epsilon=eps,
        marginal_err=err,
        iterations=iterations,
        converged=converged,
    )
    plan = plan_from_scalings(mu, nu, log_u, log_v, eps)
    value = primal_value(mu, nu, plan, log_u, log_v, eps)
    return state, plan, value


def oracle_ot_eps(
    g0: Gaussian,
    g1: Gaussian,
    eps,
    spec: GridSpec,
    tol: float = 1e-9,
    max_iters: int = DEFAULT_MAX_ITERS,
    k_sigma: float = DEFAULT_K_SIGMA,
) -> float:
    """Discretize both Gaussians on one grid and solve; returns the primal value."""
    mu = discretize(g0, spec, k_sigma=k_sigma)
    nu = discretize(g1, spec, k_sigma=k_sigma)
    _, _, value = sinkhorn_knopp(mu, nu, eps, tol=tol, max_iters=max_iters)
    return value


def convexity_probe(
    g0a: Gaussian,
    g0b: Gaussian,
    g1: Gaussian,
    t: float,
    eps,
    spec: GridSpec,
    tol: float = 1e-9,
    max_iters: int = DEFAULT_MAX_ITERS,
    k_sigma: float = DEFAULT_K_SIGMA,
) -> float:
    """Convexity slack of the discrete cost in its first marginal.

    t OT(mu_a, nu) + (1-t) OT(mu_b, nu) - OT(t mu_a + (1-t) mu_b, nu), all on
    one shared grid so the mixture is again a grid measure. Strictly positive
    for distinct mixture components; tends to zero as the components merge.
    """
    t = float(t)
    if not 0.0 < t < 1.0:
        raise TOutOfRange(f"t must lie strictly inside (0, 1), got {t}")
    weights_a = grid_weights(g0a, spec, k_sigma=k_sigma)
    weights_b = grid_weights(g0b, spec, k_sigma=k_sigma)
    mu_a = measure_from_grid(spec, weights_a)
    mu_b = measure_from_grid(spec, weights_b)
    nu = discretize(g1, spec, k_sigma=k_sigma)
    # the mixture lives on the full grid, so components with different
    # surviving nodes still combine exactly
    mix = measure_from_grid(spec, t * weights_a + (1.0 - t) * weights_b)
    _, _, value_a = sinkhorn_knopp(mu_a, nu, eps, tol=tol, max_iters=max_iters)
    _, _, value_b = sinkhorn_knopp(mu_b, nu, eps, tol=tol, max_iters=max_iters)
    _, _, value_mix = sinkhorn_knopp(mix, nu, eps, tol=tol, max_iters=max_iters)
    return t * value_a + (1.0 - t) * value_b - value_mix


def mc_entropic_cost(plan, eps, samples: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo estimate of the plan objective; returns (estimate, std_err).

    Samples the joint Gaussian for the transport term and adds the exact
    relative-entropy term (closed form in the log-determinants, no sampling
    noise), so the standard error reflects the transport term alone.
    """
    from .gaussian import sample  # local import keeps module load cheap

    eps = float(eps)
    if eps <= 0.0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    if samples < 2:
        raise ValueError("samples must be at least 2")
    joint = plan.joint_gaussian()
    draws = sample(joint, samples, seed)
    n = plan.dim
    diff = draws[:, :n] - draws[:, n:]
    sq = np.sum(diff * diff, axis=1)
    estimate = float(sq.mean())
    std_err = float(sq.std(ddof=1)) / np.sqrt(samples)
    kl = 0.5 * (
        spd_logdet(plan.g0.cov) + spd_logdet(plan.g1.cov) - spd_logdet(plan.joint_cov)
    )
    return estimate + eps * kl, std_err
