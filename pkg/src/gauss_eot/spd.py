"""Symmetric / positive-definite matrix kernel.

Every matrix function here routes through a full symmetric eigendecomposition.
At the target scale (dense matrices up to a few hundred rows) exactness and
debuggability beat iteration tricks, and chained closed-form expressions stay
stable when each factor is computed spectrally. Results that are symmetric by
construction are explicitly re-symmetrized so floating-point drift cannot
accumulate across long formula chains.

Positive definiteness is enforced with a *relative* eigenvalue floor:
``lambda_min > eps_pd * lambda_max`` with ``eps_pd = 1e-12`` by default,
overridable through the ``GAUSS_EOT_EPS_FLOOR`` environment variable.
Violations raise :class:`~gauss_eot.errors.DegenerateMatrix`; nothing is
silently clamped.
"""

import os

import numpy as np

from .errors import DegenerateMatrix, DimensionMismatch

DEFAULT_EPS_FLOOR = 1e-12
EPS_FLOOR_ENV = "GAUSS_EOT_EPS_FLOOR"


def eps_floor() -> float:
    """Relative eigenvalue floor used by SPD validation.

    Reads ``GAUSS_EOT_EPS_FLOOR`` from the environment on every call so test
    harnesses and CLI users can tighten or loosen validation without touching
    code. Must be positive.
    """
    raw = os.environ.get(EPS_FLOOR_ENV)
    if raw is None:
        return DEFAULT_EPS_FLOOR
    try:
        value = float(raw)
    except ValueError as exc:
        raise ValueError(f"{EPS_FLOOR_ENV} must be a float, got {raw!r}") from exc
    if value <= 0.0 or not np.isfinite(value):
        raise ValueError(f"{EPS_FLOOR_ENV} must be positive and finite, got {raw!r}")
    return value


def sym_part(a: np.ndarray) -> np.ndarray:
    """Symmetric part (A + A^T) / 2 of a square array."""
    return 0.5 * (a + a.T)


class SymMatrix:
    """Dense real symmetric matrix.

    The constructor symmetrizes its input ((M + M^T) / 2), validates shape
    and finiteness, and freezes the storage; instances are immutable value
    objects.
    """

    __slots__ = ("_array",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise DimensionMismatch("matrix dimension must be at least 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self._array = a

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def dim(self) -> int:
        return self._array.shape[0]

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class SpdMatrix(SymMatrix):
    """Symmetric positive-definite matrix with cached eigendecomposition.

    Construction eigendecomposes once and fails with ``DegenerateMatrix``
    when ``lambda_min <= floor * lambda_max``. The cached factors are reused
    by every matrix function below, so validation costs nothing extra.

    Parameters
    ----------
    entries : array_like
        Square matrix; symmetrized on input.
    eps_pd : float, optional
        Relative eigenvalue floor. Defaults to :func:`eps_floor`.
    """

    __slots__ = ("_eigvals", "_eigvecs")

    def __init__(self, entries, eps_pd: float | None = None):
        super().__init__(entries)
        w, v = np.linalg.eigh(self._array)
        floor = eps_floor() if eps_pd is None else eps_pd
        if w[-1] <= 0.0 or w[0] <= floor * w[-1]:
            raise DegenerateMatrix(
                "matrix is not positive definite at relative floor "
                f"{floor:g}: eigenvalue range [{w[0]:.6g}, {w[-1]:.6g}]"
            )
        w.setflags(write=False)
        v.setflags(write=False)
        self._eigvals = w
        self._eigvecs = v

    @property
    def eigvals(self) -> np.ndarray:
        """Eigenvalues in ascending order."""
        return self._eigvals

    @property
    def eigvecs(self) -> np.ndarray:
        """Orthonormal eigenvectors, columns matching :attr:`eigvals`."""
        return self._eigvecs

    @property
    def min_eigenvalue(self) -> float:
        return float(self._eigvals[0])


def _require_same_dim(k0: SymMatrix, k1: SymMatrix) -> None:
    if k0.dim != k1.dim:
        raise DimensionMismatch(f"dimension mismatch: {k0.dim} vs {k1.dim}")


def _rebuild(k: SpdMatrix, scaled_eigvals: np.ndarray) -> np.ndarray:
    # V diag(f(w)) V^T from the cached factors, re-symmetrized.
    v = k.eigvecs
    return sym_part(v @ (scaled_eigvals[:, None] * v.T))


def spd_sqrt(k: SpdMatrix) -> SpdMatrix:
    """Principal square root K^{1/2}."""
    return SpdMatrix(_rebuild(k, np.sqrt(k.eigvals)))


def spd_inv_sqrt(k: SpdMatrix) -> SpdMatrix:
    """Inverse principal square root K^{-1/2}."""
    return SpdMatrix(_rebuild(k, 1.0 / np.sqrt(k.eigvals)))


def spd_inv(k: SpdMatrix) -> SpdMatrix:
    """Inverse K^{-1}."""
    return SpdMatrix(_rebuild(k, 1.0 / k.eigvals))


def spd_logdet(k: SpdMatrix) -> float:
    """log det K as the sum of eigenvalue logs (never forms det directly)."""
    return float(np.sum(np.log(k.eigvals)))


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD-by-construction array.

    Eigenvalues that roundoff pushed slightly negative are clipped at zero;
    use only where positive semidefiniteness is an algebraic fact about the
    input, not a hope.
    """
    w, v = np.linalg.eigh(sym_part(a))
    return sym_part(v @ (np.sqrt(np.maximum(w, 0.0))[:, None] * v.T))


def shifted_cross_sqrt(k0: SpdMatrix, k1: SpdMatrix, shift: float = 0.0) -> np.ndarray:
    """(shift * I + K0 K1)^{1/2} through a symmetric congruence.

    Uses the similarity
    ``K0^{1/2} (shift*I + K0^{1/2} K1 K0^{1/2})^{1/2} K0^{-1/2}`` so the only
    eigensolve is on a symmetric matrix; the non-symmetric product K0 K1 is
    never eigendecomposed directly. Requires ``shift >= 0``.
    """
    _require_same_dim(k0, k1)
    if shift < 0.0:
        raise ValueError("shift must be nonnegative")
    r = spd_sqrt(k0)
    ri = spd_inv_sqrt(k0)
    inner = sym_part(r.array @ k1.array @ r.array)
    if shift > 0.0:
        inner = inner + shift * np.eye(k0.dim)
    root = psd_sqrt(inner)
    return r.array @ root @ ri.array


def cross_sqrt(k0: SpdMatrix, k1: SpdMatrix) -> np.ndarray:
    """(K0 K1)^{1/2}, similar to an SPD matrix but not symmetric in general.

    Returned as a plain array: the product root has real positive eigenvalues
    yet no symmetry to preserve, so wrapping it in a symmetric container
    would corrupt it.
    """
    return shifted_cross_sqrt(k0, k1, 0.0)


def random_spd(rng: np.random.Generator, dim: int, eig_range=(0.3, 3.0)) -> SpdMatrix:
    """Random well-conditioned SPD matrix from a caller-owned generator.

    Orthogonal basis from a QR factorization of a Gaussian draw, spectrum
    uniform over ``eig_range``. Used by the self-validation battery and the
    test suite; determinism is the caller's via the generator.
    """
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    w = rng.uniform(eig_range[0], eig_range[1], size=dim)
    return SpdMatrix(sym_part(q @ (w[:, None] * q.T)))


def solve_sylvester(k: SpdMatrix, v: SymMatrix) -> SymMatrix:
    """Solve K X + X K = V for symmetric X.

    With K = Q diag(w) Q^T the solution is X = Q ((Q^T V Q)_{ij} / (w_i + w_j)) Q^T,
    unique because K is positive definite (all pairwise eigenvalue sums are
    positive).
    """
    _require_same_dim(k, v)
    w = k.eigvals
    q = k.eigvecs
    vt = q.T @ v.array @ q
    x = vt / (w[:, None] + w[None, :])
    return SymMatrix(q @ x @ q.T)
