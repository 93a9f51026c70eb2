"""Alternating conditional expectations: the iterative route to the top-k
modes.

All three entry points are the same algorithm in different clothes.
:func:`orthogonal_iteration` is the plain matrix form: orthogonalize a block,
map it through A and A^T, repeat.  :func:`ace_discrete` phrases the identical
iteration in probability space - center, whiten via a Cholesky factor of the
feature covariance, take conditional expectations - which lets it run
directly on a joint table (exact or empirical).  :func:`ace_gaussian` is the
covariance-matrix analogue whose fixed point is CCA.

The per-iteration monitor is E[f_bar^T g_hat] (trace form for matrices),
which ascends to sum_{i<=k} sigma_i^2; iteration stops when its increments
fall below ``tol * max(1, monitor)``.  Convergence is geometric with rate
governed by the sigma_k / sigma_{k+1} gap, so tight spectra need a smaller
``tol`` (or more iterations) for accurate singular vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DataError, NumericalError
from .modal import ModalDecomposition
from .probability import JointPmf, Pmf


@dataclass(frozen=True)
class AceOptions:
    tol: float = 1e-10
    max_iters: int = 10_000
    seed: int = 0
    jitter: float = 1e-12

    def __post_init__(self):
        if self.tol <= 0 or self.max_iters < 1 or self.jitter < 0:
            raise DataError("BAD_OPTIONS", "need tol > 0, max_iters >= 1, jitter >= 0")


@dataclass(frozen=True)
class AceTrace:
    """Per-iteration monitor values plus step-semantics diagnostics.

    ``whiten_dev`` is the worst deviation of the whitened feature covariance
    from the identity seen across iterations; ``center_dev`` the worst
    post-centering mean.  Both should sit at round-off level.
    """

    monitor: tuple[float, ...]
    converged: bool
    iterations: int
    whiten_dev: float = 0.0
    center_dev: float = 0.0


def _stopped(monitor: list[float], tol: float) -> bool:
    if len(monitor) < 2:
        return False
    return monitor[-1] - monitor[-2] <= tol * max(1.0, abs(monitor[-1]))


def _align_modes(core: np.ndarray, left: np.ndarray, right: np.ndarray):
    """Diagonalize the small core matrix at the converged subspace pair.

    The iteration's monitor cannot see rotations inside the retained block,
    so the final (left, right) blocks may still mix modes of unequal sigma.
    An SVD of the k x k core supplies the exact within-block rotation; the
    orthogonal right-factors preserve whitening constraints.
    """
    small = linalg.svd_oracle(core)
    return small.sigmas.copy(), left @ small.u, right @ small.v


# ---------------------------------------------------------------------------
# generic matrix form


def orthogonal_iteration(
    a, k: int, opts: AceOptions = AceOptions()
) -> tuple[np.ndarray, np.ndarray, np.ndarray, AceTrace]:
    """Top-k singular triplets of a matrix by block power iteration.

    Returns ``(u, sigmas, v, trace)`` with orthonormal ``u`` (rows x k) and
    ``v`` (cols x k).  On sweep exhaustion the best iterate is returned with
    ``trace.converged`` False rather than raising.
    """
    a = linalg.as_matrix(a)
    if not 1 <= k <= min(a.shape):
        raise DataError("K_OUT_OF_RANGE", f"k={k} not in [1, {min(a.shape)}]")
    rng = np.random.default_rng(opts.seed)
    block = rng.standard_normal((a.shape[1], k))
    monitor: list[float] = []
    converged = False
    qx = qy = None
    for _ in range(opts.max_iters):
        qx, _ = linalg.thin_qr(block)
        qy, _ = linalg.thin_qr(a @ qx)
        block = a.T @ qy
        monitor.append(float(np.sum(block * block)))
        if _stopped(monitor, opts.tol):
            converged = True
            break
    qx, _ = linalg.thin_qr(block)
    sigmas, u, v = _align_modes(qy.T @ a @ qx, qy, qx)
    for j in range(k):  # the oracle's sign rule, applied to the right block
        col = v[:, j]
        if col[int(np.argmax(np.abs(col)))] < 0:
            v[:, j] = -col
            u[:, j] = -u[:, j]
    trace = AceTrace(tuple(monitor), converged, len(monitor))
    return u, sigmas, v, trace


# ---------------------------------------------------------------------------
# discrete ACE


def _whiten(values: np.ndarray, weights: np.ndarray, jitter: float, redraw) -> np.ndarray:
    """Whiten weighted feature columns: E[v v^T] -> I via a Cholesky factor.

    On a failed factorization retries once with ``jitter`` added to the
    diagonal; a second failure means the requested order exceeds the
    effective rank.  ``redraw`` (or None) lets the first iteration restart
    from a fresh random block before the jitter policy applies.
    """
    cov = (values * weights[:, None]).T @ values
    try:
        low = linalg.cholesky(cov)
    except NumericalError:
        if redraw is not None:
            fresh = redraw()
            return _whiten(fresh, weights, jitter, None)
        try:
            low = linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except NumericalError:
            raise NumericalError(
                "RANK_DEFICIENT_WHITENING",
                "whitening covariance is singular; k exceeds the effective rank",
            ) from None
    return linalg.solve_lower(low, values.T).T


def ace_discrete(
    joint: JointPmf, k: int, opts: AceOptions = AceOptions()
) -> tuple[ModalDecomposition, AceTrace]:
    """Top-k modal decomposition via alternating conditional expectations.

    One iteration: center f under P_X, whiten, map through E[. | Y], center
    under P_Y, whiten, map back through E[. | X].  All expectations are taken
    under the supplied joint, so feeding an empirical table estimates the
    decomposition from data.
    """
    kmax = min(len(joint.x_alphabet), len(joint.y_alphabet)) - 1
    if not 1 <= k <= kmax:
        raise DataError("K_OUT_OF_RANGE", f"k={k} not in [1, {kmax}]")
    if not joint.strictly_positive_marginals:
        raise DataError("ZERO_MARGINAL", "ACE needs strictly positive marginals")

    px = joint.x_marginal.probs
    py = joint.y_marginal.probs
    pxy = joint.probs
    cond_x_given_y = pxy / py[None, :]  # column y: P(x | y)
    cond_y_given_x = pxy / px[:, None]  # row x: P(y | x)

    rng = np.random.default_rng(opts.seed)
    f_bar = rng.standard_normal((len(px), k))
    monitor: list[float] = []
    converged = False
    whiten_dev = 0.0
    center_dev = 0.0
    f_hat = g_hat = None
    def redraw_centered():
        fresh = rng.standard_normal((len(px), k))
        return fresh - px @ fresh

    for iteration in range(opts.max_iters):
        f_bar = f_bar - px @ f_bar
        f_hat = _whiten(f_bar, px, opts.jitter, redraw_centered if iteration == 0 else None)
        whiten_dev = max(
            whiten_dev, float(np.max(np.abs((f_hat * px[:, None]).T @ f_hat - np.eye(k))))
        )
        g_bar = cond_x_given_y.T @ f_hat
        g_bar = g_bar - py @ g_bar
        center_dev = max(center_dev, float(np.max(np.abs(py @ g_bar))))
        g_hat = _whiten(g_bar, py, opts.jitter, None)
        f_bar = cond_y_given_x @ g_hat
        monitor.append(float(np.einsum("xk,xy,yk->", f_bar, pxy, g_hat)))
        if _stopped(monitor, opts.tol):
            converged = True
            break

    f_bar = f_bar - px @ f_bar
    f_hat = _whiten(f_bar, px, opts.jitter, None)
    core = g_hat.T @ pxy.T @ f_hat  # [j, i] = E[g_j(Y) f_i(X)]
    sigmas, g_hat, f_hat = _align_modes(core, g_hat, f_hat)
    # Zero modes carry no signal through the conditional expectations, so
    # their columns are whatever the (jittered) whitening left behind;
    # replace them with valid orthonormal directions, as the oracle path does.
    from .modal import _ZERO_SIGMA_TOL, _zero_mode_directions

    rank = int(np.sum(sigmas > _ZERO_SIGMA_TOL))
    if rank < k:
        root_x, root_y = np.sqrt(px), np.sqrt(py)
        sigmas[rank:] = 0.0
        psi = _zero_mode_directions(
            root_x[:, None] * f_hat[:, :rank], root_x, root_x[:, None] * f_hat[:, rank:], k - rank
        )
        f_hat[:, rank:] = psi / root_x[:, None]
        psi = _zero_mode_directions(
            root_y[:, None] * g_hat[:, :rank], root_y, root_y[:, None] * g_hat[:, rank:], k - rank
        )
        g_hat[:, rank:] = psi / root_y[:, None]
    # Deterministic sign: leading entry (by magnitude) of each weighted
    # f-column positive, matching the SVD oracle's convention.
    for i in range(k):
        col = np.sqrt(px) * f_hat[:, i]
        if col[int(np.argmax(np.abs(col)))] < 0:
            f_hat[:, i] *= -1.0
            g_hat[:, i] *= -1.0
    md = ModalDecomposition(
        sigmas, f_hat, g_hat, Pmf(joint.x_alphabet, px), Pmf(joint.y_alphabet, py)
    )
    trace = AceTrace(tuple(monitor), converged, len(monitor), whiten_dev, center_dev)
    return md, trace


# ---------------------------------------------------------------------------
# Gaussian ACE


def ace_gaussian(gauss, k: int, opts: AceOptions = AceOptions()):
    """Top-k canonical correlations of a Gaussian model by the same iteration.

    Conditional expectations are linear here, so each half-step is a gain
    matrix product; whitening enforces F^T Cov_X F = I.  Returns a
    :class:`modalkit.gaussian.CcaDecomposition` plus the trace, and must
    agree with the direct SVD of the canonical correlation matrix.
    """
    from .gaussian import CcaDecomposition, GaussianJoint  # cycle-free at call time

    if not isinstance(gauss, GaussianJoint):
        raise DataError("SHAPE_MISMATCH", "ace_gaussian expects a GaussianJoint")
    if not 1 <= k <= min(gauss.dim_x, gauss.dim_y):
        raise DataError("K_OUT_OF_RANGE", f"k={k} not in [1, {min(gauss.dim_x, gauss.dim_y)}]")

    cov_x, cov_y = gauss.cov_x, gauss.cov_y
    cov_yx = gauss.cov_xy.T
    low_x = linalg.cholesky(cov_x)
    low_y = linalg.cholesky(cov_y)

    def whiten(block: np.ndarray, low_cov: np.ndarray, redraw) -> np.ndarray:
        cov = block.T @ (low_cov @ (low_cov.T @ block))
        try:
            low = linalg.cholesky(cov)
        except NumericalError:
            if redraw is not None:
                return whiten(redraw(), low_cov, None)
            try:
                low = linalg.cholesky(cov + opts.jitter * np.eye(cov.shape[0]))
            except NumericalError:
                raise NumericalError(
                    "RANK_DEFICIENT_WHITENING",
                    "whitening covariance is singular; k exceeds the effective rank",
                ) from None
        return linalg.solve_lower(low, block.T).T  # block @ low^{-T}

    rng = np.random.default_rng(opts.seed)
    f_bar = rng.standard_normal((gauss.dim_x, k))
    monitor: list[float] = []
    converged = False
    f_hat = g_hat = None
    for iteration in range(opts.max_iters):
        redraw = (lambda: rng.standard_normal(f_bar.shape)) if iteration == 0 else None
        f_hat = whiten(f_bar, low_x, redraw)
        g_bar = linalg.chol_solve(cov_y, cov_yx @ f_hat)
        g_hat = whiten(g_bar, low_y, None)
        f_bar = linalg.chol_solve(cov_x, cov_yx.T @ g_hat)
        monitor.append(float(np.trace(g_hat.T @ cov_yx @ f_bar)))
        if _stopped(monitor, opts.tol):
            converged = True
            break

    f_hat = whiten(f_bar, low_x, None)
    sigmas, g_hat, f_hat = _align_modes(g_hat.T @ cov_yx @ f_hat, g_hat, f_hat)
    trace = AceTrace(tuple(monitor), converged, len(monitor))
    return CcaDecomposition(f_hat, g_hat, sigmas), trace
