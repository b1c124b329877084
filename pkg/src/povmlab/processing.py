"""Data-processing functions and estimation-error functionals.

Measuring a POVM ``P`` and averaging a coefficient array ``c`` over the
outcome statistics estimates ``<X> = Tr[rho X]`` whenever
``sum_i c_i P_i = X``.  Coefficients of that kind come from dual frames;
this module builds them, evaluates single-state and ensemble-averaged
statistical errors, and computes the dual frame that minimizes the
ensemble error together with the corresponding minimum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .hs import DEFAULT_TOL, Tolerances, as_operator, dagger, moore_penrose, vectorize
from .povm import DualFrame, Povm, canonical_dual


class OutsideSpanError(ValueError):
    """Target operator is not contained in the span of the POVM elements."""

    def __init__(self, residual: float, what: str = "operator"):
        self.residual = residual
        super().__init__(
            f"{what} lies outside the span of the POVM elements "
            f"(projection residual {residual:.6e}); its expectation cannot be "
            f"estimated from these statistics"
        )


class DegenerateMetricWarning(UserWarning):
    """Some outcome has probability zero under the ensemble barycenter."""


class Ensemble:
    """Weighted set of density matrices with cached barycenter.

    Parameters
    ----------
    weights:
        Positive weights summing to one.
    states:
        Density matrices (self-adjoint, PSD, unit trace), one per weight.
    """

    def __init__(self, weights, states, tol: Tolerances = DEFAULT_TOL):
        q = np.asarray(weights, dtype=float)
        mats = np.stack([as_operator(s) for s in states])
        if q.ndim != 1 or len(q) != mats.shape[0]:
            raise ValueError("one weight per state required")
        if np.any(q <= 0.0):
            raise ValueError("weights must be strictly positive")
        if abs(q.sum() - 1.0) > tol.lin_solve:
            raise ValueError(f"weights must sum to 1 (got {q.sum()!r})")
        for j, rho in enumerate(mats):
            if float(np.linalg.norm(rho - dagger(rho))) > tol.lin_solve:
                raise ValueError(f"state {j} is not self-adjoint")
            if float(np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0]) < -tol.psd_slack:
                raise ValueError(f"state {j} is not positive semidefinite")
            if abs(np.trace(rho).real - 1.0) > tol.lin_solve:
                raise ValueError(f"state {j} does not have unit trace")
        q.setflags(write=False)
        mats.setflags(write=False)
        self.weights = q
        self.states = mats
        self.tol = tol

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    @cached_property
    def barycenter(self) -> np.ndarray:
        """The average state ``sum_j q_j rho_j``."""
        avg = np.tensordot(self.weights, self.states, axes=(0, 0))
        avg.setflags(write=False)
        return avg

    def mean(self, X) -> float:
        """Ensemble average of ``Tr[rho_j X]``, i.e. ``Tr[barycenter X]``."""
        return float(np.real(np.trace(self.barycenter @ as_operator(X))))

    def second_moment(self, X) -> float:
        """Ensemble average of ``Tr[rho_j X]^2`` (not the square of the mean)."""
        X = as_operator(X)
        vals = np.real(np.einsum("jab,ba->j", self.states, X))
        return float(np.dot(self.weights, vals ** 2))


@dataclass(frozen=True)
class MetricMatrix:
    """Diagonal metric ``pi_ii = Tr[rho_E P_i]`` used by the optimal dual."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        if d.ndim != 1:
            raise ValueError("metric diagonal must be a vector")
        if np.any(d < -DEFAULT_TOL.psd_slack):
            raise ValueError("metric entries are probabilities and cannot be negative")
        d = np.clip(d, 0.0, None)
        d.setflags(write=False)
        object.__setattr__(self, "diag", d)

    @property
    def total(self) -> float:
        return float(self.diag.sum())


def metric_diagonal(P: Povm, ensemble: Ensemble) -> MetricMatrix:
    """Outcome probabilities of ``P`` under the ensemble barycenter."""
    return MetricMatrix(P.probabilities(ensemble.barycenter))


@dataclass(frozen=True)
class ProcessingFunction:
    """Coefficients ``c_i`` estimating ``<X>`` from the statistics of one POVM."""

    target: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        t = as_operator(self.target)
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1:
            raise ValueError("coefficients must form a vector")
        t.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "coefficients", c)


def _span_residual(P: Povm, X: np.ndarray) -> float:
    v = vectorize(X)
    return float(np.linalg.norm(v - P.span_projector @ v))


def processing_from_dual(D: DualFrame, X, tol: Tolerances | None = None) -> ProcessingFunction:
    """Coefficients ``c_i = Tr[D_i^dag X]`` for a span-contained target X."""
    X = as_operator(X)
    P = D.povm
    tol = tol or P.tol
    residual = _span_residual(P, X)
    if residual > tol.lin_solve:
        raise OutsideSpanError(residual, "target observable")
    coeffs = np.array([np.vdot(m, X) for m in D.elements])
    return ProcessingFunction(X, coeffs)


def estimate(P: Povm, c: ProcessingFunction, rho) -> float:
    """Expected value of the processed statistics, ``sum_i c_i Tr[rho P_i]``."""
    probs = P.probabilities(rho)
    return float(np.real(np.dot(c.coefficients, probs)))


def statistical_error(P: Povm, c: ProcessingFunction, rho) -> float:
    """Per-measurement variance ``sum_i |c_i|^2 Tr[rho P_i] - <X>_rho^2``."""
    probs = P.probabilities(rho)
    mean = float(np.real(np.trace(as_operator(rho) @ c.target)))
    return float(np.dot(np.abs(c.coefficients) ** 2, probs) - mean ** 2)


def ensemble_error(P: Povm, c: ProcessingFunction, ensemble: Ensemble) -> float:
    """Ensemble-averaged statistical error.

    Equals ``sum_i |c_i|^2 Tr[rho_E P_i] - avg_j <X>_{rho_j}^2``, which is
    also the q-weighted average of the single-state errors.
    """
    pi = metric_diagonal(P, ensemble)
    return float(
        np.dot(np.abs(c.coefficients) ** 2, pi.diag) - ensemble.second_moment(c.target)
    )


def optimal_dual(P: Povm, ensemble: Ensemble, tol: Tolerances | None = None) -> DualFrame:
    """Dual frame minimizing the ensemble error for every span-contained target.

    Starting from the canonical dual ``Delta``, the minimizer is

        ``D_i = Delta_i - sum_j ([(1-M) pi (1-M)]^+ pi)_{ij} Delta_j``

    with ``M_ij = Tr[Delta_i P_j]`` and ``pi`` the diagonal matrix of
    barycenter outcome probabilities.  Outcomes with vanishing probability
    cannot influence the ensemble error; they are left at their canonical
    value and excluded from the correction, with a warning.
    """
    tol = tol or P.tol
    delta = canonical_dual(P, tol)
    pi = metric_diagonal(P, ensemble)
    live = pi.diag > tol.eig_zero
    if not np.all(live):
        warnings.warn(
            f"{int(np.count_nonzero(~live))} outcome(s) have zero probability under "
            "the ensemble barycenter; they are excluded from the optimal-dual "
            "correction and their coefficients are unconstrained",
            DegenerateMetricWarning,
            stacklevel=2,
        )
    W = np.stack([vectorize(m) for m in delta.elements], axis=1)
    M = np.conj(W).T @ P.design_matrix  # M[i, j] = Tr[Delta_i P_j]
    one_minus = np.eye(len(P)) - M
    pi_live = np.where(live, pi.diag, 0.0)
    bracket = one_minus @ np.diag(pi_live) @ one_minus
    # For linearly independent elements M is the identity and the bracket
    # vanishes identically; a purely relative singular-value cutoff would
    # then invert rounding noise, so the cutoff is floored at the metric
    # scale (max pi_ii >= 1/N for outcome probabilities).
    U, s, Vh = np.linalg.svd(bracket)
    scale = max(float(s[0]) if s.size else 0.0, float(pi_live.max()))
    inv_s = np.where(s > tol.eig_zero * scale, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    correction = (np.conj(Vh).T * inv_s) @ np.conj(U).T * pi_live[np.newaxis, :]
    # zero-probability outcomes keep their canonical duals untouched
    correction[~live, :] = 0.0
    duals = delta.elements - np.tensordot(correction, delta.elements, axes=(1, 0))
    return DualFrame(duals, P)


def min_error(P: Povm, ensemble: Ensemble, X, tol: Tolerances | None = None) -> float:
    """Minimum ensemble error over all processing functions for target X.

    Computed from the compact form ``<X| G^+ |X> - avg_j <X>_{rho_j}^2``
    with ``G = sum_i |P_i><P_i| / pi_ii``; the optimal dual achieves it.
    """
    tol = tol or P.tol
    X = as_operator(X)
    residual = _span_residual(P, X)
    if residual > tol.lin_solve:
        raise OutsideSpanError(residual, "target observable")
    pi = metric_diagonal(P, ensemble)
    live = pi.diag > tol.eig_zero
    if not np.all(live):
        warnings.warn(
            "zero-probability outcomes are omitted from the minimum-error form",
            DegenerateMetricWarning,
            stacklevel=2,
        )
    V = P.design_matrix[:, live]
    G = (V / pi.diag[live]) @ dagger(V)
    x = vectorize(X)
    value = float(np.real(np.vdot(x, moore_penrose(G, tol, hermitian=True) @ x)))
    return value - ensemble.second_moment(X)
