"""Negative Binomial (NB2) count regression fitted by maximum likelihood.

The model is ``y_i ~ NB2(mu_i, alpha)`` with ``mu_i = exp(x_i'beta +
offset_i)`` and variance ``mu + alpha*mu**2``; the offset is the log of an
exposure, which turns the fitted mean into a rate and ``exp(beta)`` into an
incidence rate ratio.  Coefficients are found by Newton steps on beta
alternated with a one-dimensional golden-section search over the dispersion
``alpha``; every accepted step must not decrease the log-likelihood, so the
iteration trace is monotone by construction.  Convergence requires both the
likelihood change and the Newton decrement (the gradient norm measured in
the observed-information metric, which is scale-free) to fall below their
tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr as _qr
from scipy.special import erfc, gammaln

ALPHA_BOUNDS = (1e-8, 1e4)
MAX_OUTER_ITERATIONS = 100
LL_TOL = 1e-10
GRAD_TOL = 1e-8


class RankDeficientError(ValueError):
    """The design matrix (after degeneracy screening) is not full rank."""

    def __init__(self, columns: list[str]):
        super().__init__(f"design matrix is rank deficient; collinear columns: {columns}")
        self.columns = columns


@dataclass(frozen=True)
class NbrFit:
    """A fitted NB2 regression.

    ``degenerate`` lists predictor columns that were dropped before fitting
    (constant columns, or binary columns with an all-zero response cell whose
    coefficient would diverge); they carry a "near_zero" flag instead of
    numbers.  ``converged=False`` marks every reported figure as advisory.
    """

    coefficients: dict[str, float]
    std_errors: dict[str, float]
    wald_p: dict[str, float]
    exp_beta: dict[str, float]
    alpha: float
    log_likelihood: float
    converged: bool
    iterations: int
    degenerate: dict[str, str]
    ll_trace: tuple[float, ...]
    n_obs: int


def _nb_loglike(y: np.ndarray, mu: np.ndarray, alpha: float) -> float:
    """NB2 log-likelihood, stable across the whole dispersion range.

    Written with ``log1p`` so the Poisson limit (alpha -> 0) loses no
    precision: with theta = 1/alpha,

        l_i = sum_{k<y_i} log1p(k/theta) - log(y_i!)
              - (theta + y_i) * log1p(mu_i/theta) + y_i * log(mu_i)
    """
    if alpha == 0.0:
        return _poisson_loglike(y, mu)
    theta = 1.0 / alpha
    max_y = int(y.max())
    steps = np.log1p(np.arange(max_y) / theta)
    cumulative = np.concatenate(([0.0], np.cumsum(steps)))
    rising = cumulative[y]
    ll = rising - gammaln(y + 1.0) - (theta + y) * np.log1p(mu / theta)
    ll = ll + np.where(y > 0, y * np.log(mu), 0.0)
    return float(np.sum(ll))


def _poisson_loglike(y: np.ndarray, mu: np.ndarray) -> float:
    ll = np.where(y > 0, y * np.log(mu), 0.0) - mu - gammaln(y + 1.0)
    return float(np.sum(ll))


def _mu(X: np.ndarray, beta: np.ndarray, offset: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(X @ beta + offset)


def _gradient(X, y, mu, alpha) -> np.ndarray:
    return X.T @ ((y - mu) / (1.0 + alpha * mu))


def _observed_information(X, y, mu, alpha) -> np.ndarray:
    w = mu * (1.0 + alpha * y) / (1.0 + alpha * mu) ** 2
    return (X * w[:, None]).T @ X


def _newton_state(X, y, mu, alpha):
    """Gradient, Newton direction, and the decrement sqrt(g' H^-1 g).

    The decrement is the gradient norm in the information metric; unlike the
    raw Euclidean norm it is invariant to predictor and count scaling, so one
    tolerance works across problems.
    """
    grad = _gradient(X, y, mu, alpha)
    info = _observed_information(X, y, mu, alpha)
    try:
        direction = np.linalg.solve(info, grad)
    except np.linalg.LinAlgError:
        direction = np.linalg.lstsq(info, grad, rcond=None)[0]
    decrement = math.sqrt(max(float(grad @ direction), 0.0))
    return direction, decrement


def _golden_section_max(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Argmax of a unimodal function on [lo, hi] by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def _poisson_irls(X, y, offset, max_iter=50, tol=1e-10) -> np.ndarray:
    """Starting values for beta from a plain Poisson IRLS pass."""
    mu = np.maximum(y.astype(float), 0.5)
    eta = np.log(mu)
    beta = np.zeros(X.shape[1])
    for _ in range(max_iter):
        w = mu
        z = (eta - offset) + (y - mu) / mu
        lhs = (X * w[:, None]).T @ X
        rhs = X.T @ (w * z)
        try:
            new_beta = np.linalg.solve(lhs, rhs)
        except np.linalg.LinAlgError:
            new_beta = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
        if not np.all(np.isfinite(new_beta)):
            break
        eta = np.clip(X @ new_beta + offset, -300.0, 300.0)
        mu = np.exp(eta)
        if np.max(np.abs(new_beta - beta)) < tol:
            beta = new_beta
            break
        beta = new_beta
    return beta


def _degenerate_columns(X: np.ndarray, y: np.ndarray, names: list[str]) -> dict[str, str]:
    flags: dict[str, str] = {}
    for j, name in enumerate(names):
        col = X[:, j]
        if np.ptp(col) == 0.0:
            flags[name] = "near_zero"
            continue
        levels = np.unique(col)
        if len(levels) == 2:
            # a binary predictor with an all-zero response cell has no
            # finite MLE (the coefficient runs to +-infinity)
            low = y[col == levels[0]].sum()
            high = y[col == levels[1]].sum()
            if low == 0 or high == 0:
                flags[name] = "near_zero"
    return flags


def _check_rank(A: np.ndarray, names: list[str]) -> None:
    _, R, pivots = _qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag.max() * max(A.shape) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < A.shape[1]:
        bad = sorted(names[idx] for idx in pivots[rank:])
        raise RankDeficientError(bad)


def fit_nbr(
    design,
    response,
    exposure=None,
    *,
    alpha: float | None = None,
    max_iter: int = MAX_OUTER_ITERATIONS,
    ll_tol: float = LL_TOL,
    grad_tol: float = GRAD_TOL,
) -> NbrFit:
    """Fit an NB2 regression of counts on a design matrix.

    Parameters
    ----------
    design:
        An ``encoding.DesignMatrix`` or a 2-D array of predictors (no
        intercept column; one is added and reported as ``"intercept"``).
    response:
        Non-negative integer counts, one per design row.
    exposure:
        Optional positive totals per row, entering as a log offset; counts
        may not exceed their exposure.
    alpha:
        Fix the dispersion at this value (0 gives the Poisson model);
        ``None`` estimates it inside ``ALPHA_BOUNDS`` by golden-section
        search on ``log10(alpha)``.
    """
    if hasattr(design, "values") and hasattr(design, "conditions"):
        X = np.asarray(design.values, dtype=float)
        names = [c.value for c in design.conditions]
    else:
        X = np.asarray(design, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        names = [f"x{j}" for j in range(X.shape[1])]

    y = np.asarray(response, dtype=float)
    if y.ndim != 1 or len(y) != X.shape[0]:
        raise ValueError("response must be one value per design row")
    if np.any(y < 0) or np.any(y != np.floor(y)):
        raise ValueError("response must be non-negative integer counts")
    y = y.astype(np.int64)
    if y.sum() == 0:
        raise ValueError("response is all zeros; no finite intercept exists")

    if exposure is None:
        offset = np.zeros(len(y))
    else:
        exposure = np.asarray(exposure, dtype=float)
        if exposure.shape != y.shape:
            raise ValueError("exposure must align with the response")
        if np.any(exposure <= 0):
            raise ValueError("exposure must be positive on every row")
        if np.any(y > exposure):
            raise ValueError("counts cannot exceed their exposure")
        offset = np.log(exposure)

    if alpha is not None and alpha < 0:
        raise ValueError("alpha must be >= 0")

    degenerate = _degenerate_columns(X, y, names)
    kept = [j for j, name in enumerate(names) if name not in degenerate]
    kept_names = ["intercept"] + [names[j] for j in kept]
    X1 = np.column_stack([np.ones(len(y)), X[:, kept]])
    _check_rank(X1, kept_names)

    yf = y.astype(float)
    beta = _poisson_irls(X1, yf, offset)
    cur_alpha = 1.0 if alpha is None else float(alpha)
    mu = _mu(X1, beta, offset)
    ll = _nb_loglike(y, mu, cur_alpha)
    trace = [ll]

    lo, hi = math.log10(ALPHA_BOUNDS[0]), math.log10(ALPHA_BOUNDS[1])
    eps = float(np.finfo(float).eps)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        ll_prev = ll

        if alpha is None:
            best = _golden_section_max(
                lambda la: _nb_loglike(y, mu, 10.0 ** la), lo, hi
            )
            candidate = 10.0 ** best
            ll_candidate = _nb_loglike(y, mu, candidate)
            if ll_candidate >= ll:  # guard keeps the trace monotone
                cur_alpha, ll = candidate, ll_candidate

        # a decrement below sqrt(2 eps |ll|) promises a likelihood gain
        # smaller than one ulp of ll itself, which the monotone guard can
        # no longer certify; the tolerance is floored there
        effective_tol = max(grad_tol, math.sqrt(2.0 * eps * max(1.0, abs(ll))))
        for _ in range(50):
            direction, decrement = _newton_state(X1, yf, mu, cur_alpha)
            if decrement < effective_tol:
                break
            step = 1.0
            improved = False
            for _ in range(40):
                cand = beta + step * direction
                if np.array_equal(cand, beta):  # step underflowed: a no-op
                    break
                mu_cand = _mu(X1, cand, offset)
                if np.all(np.isfinite(mu_cand)) and np.all(mu_cand > 0):
                    ll_cand = _nb_loglike(y, mu_cand, cur_alpha)
                    if math.isfinite(ll_cand) and ll_cand >= ll:
                        beta, mu, ll = cand, mu_cand, ll_cand
                        improved = True
                        break
                step /= 2.0
            if not improved:
                break

        trace.append(ll)
        effective_tol = max(grad_tol, math.sqrt(2.0 * eps * max(1.0, abs(ll))))
        _, decrement = _newton_state(X1, yf, mu, cur_alpha)
        if abs(ll - ll_prev) < ll_tol and decrement < effective_tol:
            converged = True
            break

    info = _observed_information(X1, yf, mu, cur_alpha)
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / se, np.inf)
    pvals = erfc(np.abs(z) / math.sqrt(2.0))

    return NbrFit(
        coefficients=dict(zip(kept_names, beta.tolist())),
        std_errors=dict(zip(kept_names, se.tolist())),
        wald_p=dict(zip(kept_names, pvals.tolist())),
        exp_beta=dict(zip(kept_names, np.exp(beta).tolist())),
        alpha=cur_alpha,
        log_likelihood=ll,
        converged=converged,
        iterations=iterations,
        degenerate=degenerate,
        ll_trace=tuple(trace),
        n_obs=len(y),
    )
