"""Fixed-point barycenters of weighted Gaussian populations.

Three flavors share one damped fixed-point driver, differing only in the
covariance map:

- ``w2``:        K <- sum_i w_i (K^{1/2} K_i K^{1/2})^{1/2}
- ``entropic``:  K <- (eps/4) sum_i w_i (-I + (I + (16/eps^2) K^{1/2} K_i K^{1/2})^{1/2})
- ``sinkhorn``:  K <- (eps/4) (-I + (sum_i w_i (I + (16/eps^2) K^{1/2} K_i K^{1/2})^{1/2})^2)^{1/2}

Means decouple: every barycenter mean is the weighted member mean, exactly.
Convergence is certified, not assumed: the returned covariance K satisfies
``||K - F(K)||_F / ||K||_F <= tol`` with the map re-evaluated at the
returned iterate. The entropic map is biased toward smaller covariances and
can genuinely collapse (the single-member fixed point is K - (eps/2) I when
that is positive, the zero boundary otherwise); collapse surfaces as
DegenerateMatrix (relative eigenvalue floor crossed) or NotConverged, never
as a silently clamped result.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMatrix, DimensionMismatch, NotConverged
from .gaussian import Gaussian, w2_distance_sq
from .entropic import entropic_cost, sinkhorn_divergence
from .spd import SpdMatrix, eps_floor, sym_part

KINDS = ("w2", "entropic", "sinkhorn")

INIT_EUCLIDEAN_MEAN = "euclidean_mean"
INIT_FIRST_MEMBER = "first_member"


@dataclass(frozen=True, eq=False)
class WeightedPopulation:
    """Gaussian members with nonnegative weights, normalized to sum to one."""

    members: tuple
    weights: np.ndarray

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) < 1:
            raise ValueError("population needs at least one member")
        dim = members[0].dim
        for g in members:
            if g.dim != dim:
                raise DimensionMismatch("population members must share one dimension")
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != len(members):
            raise DimensionMismatch(
                f"{len(members)} members but {w.shape[0]} weights"
            )
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        total = float(w.sum())
        if total <= 0.0:
            raise ValueError("weights must not all be zero")
        w = w / total
        w.setflags(write=False)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    @classmethod
    def uniform(cls, members) -> "WeightedPopulation":
        members = tuple(members)
        return cls(members, np.full(len(members), 1.0))

    def mean_barycenter(self) -> np.ndarray:
        """Weighted member mean; the mean of every barycenter flavor."""
        stacked = np.stack([g.mean for g in self.members])
        return self.weights @ stacked


@dataclass(frozen=True)
class FixedPointConfig:
    """Iteration budget and tolerances for the fixed-point driver.

    ``init`` selects the starting covariance: the Euclidean weight-average of
    the member covariances (default), the first member, or a custom SPD
    matrix / array passed directly.
    """

    max_iters: int = 500
    tol: float = 1e-10
    damping: float = 1.0
    init: object = INIT_EUCLIDEAN_MEAN

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0.0 < self.tol:
            raise ValueError("tol must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if isinstance(self.init, str) and self.init not in (
            INIT_EUCLIDEAN_MEAN,
            INIT_FIRST_MEMBER,
        ):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class IterationReport:
    """Per-iteration residual trace of a fixed-point run."""

    iterations: int
    residuals: list = field(default_factory=list)
    converged: bool = False

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")


@dataclass(frozen=True, eq=False)
class BarycenterResult:
    barycenter: Gaussian
    report: IterationReport


def _initial_cov(pop: WeightedPopulation, cfg: FixedPointConfig) -> np.ndarray:
    if isinstance(cfg.init, str):
        if cfg.init == INIT_EUCLIDEAN_MEAN:
            covs = np.stack([g.cov.array for g in pop.members])
            return sym_part(np.tensordot(pop.weights, covs, axes=1))
        if cfg.init == INIT_FIRST_MEMBER:
            return pop.members[0].cov.array.copy()
        raise ValueError(f"unknown init {cfg.init!r}")
    if isinstance(cfg.init, SpdMatrix):
        return cfg.init.array.copy()
    return SpdMatrix(cfg.init).array.copy()  # validates the custom array


def _solve_fixed_point(map_fn, k_init: np.ndarray, cfg: FixedPointConfig):
    """Damped iteration k <- (1-d) k + d F(k) with a certified stopping rule.

    Returns (k, report) where ``k`` is the iterate whose residual
    ||k - F(k)|| / ||k|| fell below tol; the residual is computed against a
    fresh evaluation of F at that very iterate, so the certificate cannot be
    an artifact of stale state. Every fresh F(k) is floor-checked; crossing
    the relative eigenvalue floor aborts with DegenerateMatrix carrying the
    report so far.
    """
    floor = eps_floor()
    k = sym_part(np.array(k_init, dtype=float))
    report = IterationReport(iterations=0)
    for iteration in range(1, cfg.max_iters + 1):
        f = sym_part(map_fn(k))
        w = np.linalg.eigvalsh(f)
        if w[-1] <= 0.0 or w[0] <= floor * w[-1]:
            report.iterations = iteration
            raise DegenerateMatrix(
                "fixed-point iterate crossed the relative eigenvalue floor "
                f"{floor:g} at iteration {iteration} (eigenvalue range "
                f"[{w[0]:.6g}, {w[-1]:.6g}]); the regularization bias has "
                "collapsed the covariance",
                report=report,
            )
        residual = float(np.linalg.norm(k - f)) / float(np.linalg.norm(k))
        report.residuals.append(residual)
        report.iterations = iteration
        if residual <= cfg.tol:
            report.converged = True
            return k, report
        k = sym_part((1.0 - cfg.damping) * k + cfg.damping * f)
    raise NotConverged(
        f"fixed-point iteration did not reach tol={cfg.tol:g} within "
        f"{cfg.max_iters} iterations (last residual {report.residuals[-1]:.3e})",
        report=report,
    )


def _member_roots(k: np.ndarray, pop: WeightedPopulation, scale: float):
    """(scale * I + K^{1/2} K_i K^{1/2})^{1/2} for every member, via one eigh of K."""
    w, v = np.linalg.eigh(sym_part(k))
    w = np.maximum(w, 0.0)
    root = v @ (np.sqrt(w)[:, None] * v.T)
    eye = np.eye(k.shape[0])
    out = []
    for g in pop.members:
        inner = sym_part(root @ g.cov.array @ root)
        wi, vi = np.linalg.eigh(scale * eye + inner)
        out.append(vi @ (np.sqrt(np.maximum(wi, 0.0))[:, None] * vi.T))
    return out


def _w2_map(pop: WeightedPopulation):
    def step(k):
        roots = _member_roots(k, pop, 0.0)
        return sum(w * r for w, r in zip(pop.weights, roots))

    return step


def _entropic_map(pop: WeightedPopulation, eps: float):
    scale = 16.0 / (eps * eps)

    def step(k):
        roots = _member_roots(k * scale, pop, 1.0)
        # sqrt(scale) factored out of K^{1/2}: scale the iterate instead so
        # the congruence stays one eigh per member
        mixed = sum(w * r for w, r in zip(pop.weights, roots))
        return (eps / 4.0) * (mixed - np.eye(k.shape[0]))

    return step


def _sinkhorn_map(pop: WeightedPopulation, eps: float):
    scale = 16.0 / (eps * eps)

    def step(k):
        roots = _member_roots(k * scale, pop, 1.0)
        mixed = sum(w * r for w, r in zip(pop.weights, roots))
        # (mixed^2 - I)^{1/2} through mixed's own eigenbasis; mixed >= I so
        # the shifted spectrum is nonnegative up to roundoff
        wm, vm = np.linalg.eigh(sym_part(mixed))
        shifted = np.sqrt(np.maximum(wm * wm - 1.0, 0.0))
        return (eps / 4.0) * (vm @ (shifted[:, None] * vm.T))

    return step


def _solve(pop, cfg, map_fn) -> BarycenterResult:
    cfg = cfg or FixedPointConfig()
    k, report = _solve_fixed_point(map_fn, _initial_cov(pop, cfg), cfg)
    return BarycenterResult(Gaussian(pop.mean_barycenter(), SpdMatrix(k)), report)


def _as_population(pop) -> WeightedPopulation:
    """Pass a WeightedPopulation through; wrap a plain member sequence uniformly."""
    if isinstance(pop, WeightedPopulation):
        return pop
    return WeightedPopulation.uniform(pop)


def w2_barycenter(pop, cfg: FixedPointConfig | None = None) -> BarycenterResult:
    """Unregularized barycenter: fixed point of the w2 covariance map.

    ``pop`` is a :class:`WeightedPopulation` or a plain sequence of Gaussians
    (uniform weights); likewise for the other barycenter flavors.
    """
    pop = _as_population(pop)
    return _solve(pop, cfg, _w2_map(pop))


def entropic_barycenter(
    pop, eps, cfg: FixedPointConfig | None = None
) -> BarycenterResult:
    """Barycenter under the raw entropic cost.

    Biased: the map shrinks covariances by about eps/2 per eigenvalue and
    collapses entirely when a member spectrum sits at or below eps/2 (see the
    module docstring for how collapse surfaces).
    """
    eps = float(eps)
    if eps <= 0.0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    pop = _as_population(pop)
    return _solve(pop, cfg, _entropic_map(pop, eps))


def sinkhorn_barycenter(
    pop, eps, cfg: FixedPointConfig | None = None
) -> BarycenterResult:
    """Barycenter under the debiased divergence.

    Single-member populations reproduce the member exactly (debiasedness);
    as eps -> 0 it meets the w2 barycenter.
    """
    eps = float(eps)
    if eps <= 0.0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    pop = _as_population(pop)
    return _solve(pop, cfg, _sinkhorn_map(pop, eps))


@dataclass(frozen=True, eq=False)
class SpanCell:
    """One cell of a barycentric span: weights, result or error."""

    iu: int
    iv: int
    u: float
    v: float
    weights: np.ndarray
    result: BarycenterResult | None
    error: str | None


def bilinear_weights(u: float, v: float) -> np.ndarray:
    """Corner weights ((1-u)(1-v), u(1-v), (1-u)v, uv) over the unit square."""
    return np.array(
        [(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v]
    )


def barycentric_span(
    corners,
    grid: int,
    eps,
    kind: str,
    cfg: FixedPointConfig | None = None,
) -> list:
    """Barycenters over a grid x grid bilinear weight field of four corners.

    Cells are solved independently; a solver failure is recorded on its cell
    (with coordinates) instead of aborting the sweep. ``eps`` is ignored for
    kind="w2". Corner cells of the w2 and sinkhorn kinds reproduce the corner
    inputs exactly; the entropic kind is biased even at corners.
    """
    corners = tuple(corners)
    if len(corners) != 4:
        raise ValueError(f"span needs exactly 4 corners, got {len(corners)}")
    if grid < 2:
        raise ValueError("grid must be at least 2")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind != "w2" and (eps is None or float(eps) <= 0.0):
        raise ValueError(f"kind {kind!r} needs a positive epsilon")

    coords = np.linspace(0.0, 1.0, grid)
    cells = []
    for iv, v in enumerate(coords):
        for iu, u in enumerate(coords):
            weights = bilinear_weights(float(u), float(v))
            pop = WeightedPopulation(corners, weights)
            try:
                if kind == "w2":
                    result = w2_barycenter(pop, cfg)
                elif kind == "entropic":
                    result = entropic_barycenter(pop, eps, cfg)
                else:
                    result = sinkhorn_barycenter(pop, eps, cfg)
                cells.append(SpanCell(iu, iv, float(u), float(v), weights, result, None))
            except (NotConverged, DegenerateMatrix) as exc:
                cells.append(
                    SpanCell(iu, iv, float(u), float(v), weights, None, str(exc))
                )
    return cells


def barycenter_objective(kind: str, pop, eps, cov) -> float:
    """Weighted objective sum_i w_i cost(N(mbar, K), member_i) at covariance K."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    pop = _as_population(pop)
    candidate = Gaussian(pop.mean_barycenter(), SpdMatrix(cov))
    total = 0.0
    for w, g in zip(pop.weights, pop.members):
        if kind == "w2":
            total += w * w2_distance_sq(candidate, g)
        elif kind == "entropic":
            total += w * entropic_cost(candidate, g, eps)
        else:
            total += w * sinkhorn_divergence(candidate, g, eps)
    return total


def objective_gradient_norm(
    kind: str, pop: WeightedPopulation, eps, cov: np.ndarray, step: float = 1e-5
) -> float:
    """Finite-difference gradient norm of the objective at covariance ``cov``.

    Central differences along an orthonormal basis of symmetric directions;
    the returned 2-norm of the coefficient vector equals the Frobenius norm
    of the objective's gradient restricted to symmetric perturbations. Used
    as a first-order optimality certificate for converged barycenters.
    """
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    coeffs = []
    for i in range(n):
        for j in range(i, n):
            direction = np.zeros((n, n))
            if i == j:
                direction[i, i] = 1.0
            else:
                direction[i, j] = direction[j, i] = 1.0 / np.sqrt(2.0)
            up = barycenter_objective(kind, pop, eps, cov + step * direction)
            down = barycenter_objective(kind, pop, eps, cov - step * direction)
            coeffs.append((up - down) / (2.0 * step))
    return float(np.linalg.norm(coeffs))
