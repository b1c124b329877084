"""POVMs, frame operators, dual frames and informational completeness.

A POVM with outcomes ``P_1 .. P_N`` is stored as a stacked ``(N, d, d)``
complex array.  Viewed as HS vectors the outcomes form a frame for their
span; the frame operator, its pseudoinverse (canonical dual) and the
shifted duals built from an arbitrary operator list provide the linear
machinery used by the estimation routines.
"""

from __future__ import annotations

import warnings
from functools import cached_property

import numpy as np

from .hs import (
    DEFAULT_TOL,
    Tolerances,
    as_operator,
    dagger,
    hs_norm,
    moore_penrose,
    numerical_rank,
    span_projector,
    vectorize,
)


class NotPositiveError(ValueError):
    """A candidate POVM element has a genuinely negative eigenvalue."""

    def __init__(self, index: int, min_eigenvalue: float):
        self.index = index
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"element {index} is not positive semidefinite "
            f"(minimum eigenvalue {min_eigenvalue:.6e})"
        )


class NotCompleteError(ValueError):
    """The candidate elements do not sum to the identity."""

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"elements do not sum to the identity (residual {residual:.6e})")


class ZeroElementWarning(UserWarning):
    """Zero POVM elements were dropped during validation."""


class Povm:
    """A validated positive operator-valued measure.

    Parameters
    ----------
    elements:
        Sequence or stacked array of N square complex matrices.
    labels:
        Optional outcome labels (kept aligned if zero elements are dropped).
    tol:
        Thresholds for the validity checks.
    validate:
        Skip the checks when building from already-trusted data.
    drop_zero:
        Remove elements with vanishing norm (they occur with probability
        zero) with a warning instead of keeping dead outcomes around.
    """

    def __init__(self, elements, *, labels=None, tol: Tolerances = DEFAULT_TOL,
                 validate: bool = True, drop_zero: bool = True):
        mats = np.stack([as_operator(e) for e in elements])
        if mats.shape[1] != mats.shape[2]:
            raise ValueError("POVM elements must be square")
        if labels is not None:
            labels = list(labels)
            if len(labels) != mats.shape[0]:
                raise ValueError("one label per element required")

        if drop_zero:
            norms = np.array([hs_norm(m) for m in mats])
            keep = norms > tol.psd_slack
            if not np.all(keep):
                warnings.warn(
                    f"dropping {int(np.count_nonzero(~keep))} zero element(s)",
                    ZeroElementWarning,
                    stacklevel=2,
                )
                mats = mats[keep]
                if labels is not None:
                    labels = [lab for lab, k in zip(labels, keep) if k]
        if mats.shape[0] == 0:
            raise ValueError("POVM needs at least one nonzero element")

        if validate:
            worst_index, worst_eig = -1, np.inf
            for i, m in enumerate(mats):
                deviation = float(np.linalg.norm(m - dagger(m)))
                if deviation > tol.lin_solve:
                    raise ValueError(
                        f"element {i} is not self-adjoint (deviation {deviation:.3e})"
                    )
                lo = float(np.linalg.eigvalsh(0.5 * (m + dagger(m)))[0])
                if lo < worst_eig:
                    worst_index, worst_eig = i, lo
            if worst_eig < -tol.psd_slack:
                raise NotPositiveError(worst_index, worst_eig)
            residual = float(np.linalg.norm(mats.sum(axis=0) - np.eye(mats.shape[1])))
            if residual > tol.lin_solve:
                raise NotCompleteError(residual)

        mats.setflags(write=False)
        self.elements = mats
        self.labels = labels
        self.tol = tol

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    @cached_property
    def design_matrix(self) -> np.ndarray:
        """d^2 x N matrix whose columns are the vectorized elements."""
        return np.stack([vectorize(m) for m in self.elements], axis=1)

    @cached_property
    def span_projector(self) -> np.ndarray:
        """Orthogonal projector onto the HS span of the elements."""
        return span_projector(self.elements, self.tol)

    @cached_property
    def span_rank(self) -> int:
        return numerical_rank(self.design_matrix, self.tol)

    def probabilities(self, rho) -> np.ndarray:
        """Outcome probabilities ``Tr[rho P_i]`` under the state ``rho``."""
        rho = as_operator(rho)
        if rho.shape != (self.dim, self.dim):
            raise ValueError("state dimension mismatch")
        return np.real(np.einsum("ab,iba->i", rho, self.elements))


def validate_povm(elements, tol: Tolerances = DEFAULT_TOL, labels=None) -> Povm:
    """Build a :class:`Povm`, raising a descriptive error when invalid."""
    return Povm(elements, labels=labels, tol=tol)


def povm_report(elements, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Non-raising validity report used by the command-line front end."""
    mats = [as_operator(e) for e in elements]
    d = mats[0].shape[0]
    report: dict = {"dim": d, "n_elements": len(mats), "issues": []}
    kept = []
    for i, m in enumerate(mats):
        if m.shape != (d, d):
            report["issues"].append({"index": i, "problem": "dimension mismatch"})
            continue
        if hs_norm(m) <= tol.psd_slack:
            report["issues"].append({"index": i, "problem": "zero element (dropped)"})
            continue
        deviation = float(np.linalg.norm(m - dagger(m)))
        if deviation > tol.lin_solve:
            report["issues"].append(
                {"index": i, "problem": "not self-adjoint", "deviation": deviation}
            )
            continue
        lo = float(np.linalg.eigvalsh(0.5 * (m + dagger(m)))[0])
        if lo < -tol.psd_slack:
            report["issues"].append(
                {"index": i, "problem": "not positive", "min_eigenvalue": lo}
            )
            continue
        kept.append(m)
    if kept:
        residual = float(np.linalg.norm(sum(kept) - np.eye(d)))
    else:
        residual = float(np.linalg.norm(np.eye(d)))
    report["completeness_residual"] = residual
    report["valid"] = not report["issues"] and residual <= tol.lin_solve
    # "zero element" entries alone do not invalidate the POVM
    if not report["valid"] and residual <= tol.lin_solve:
        report["valid"] = all(
            issue["problem"] == "zero element (dropped)" for issue in report["issues"]
        )
    return report


class DualFrame:
    """Operators ``D_i`` with ``sum_i |D_i><P_i|`` equal to the span projector.

    Carries a reference to the source POVM so that processing functions can
    perform their span-membership checks without extra arguments.
    """

    def __init__(self, elements, povm: Povm):
        mats = np.stack([as_operator(e) for e in elements])
        if mats.shape != povm.elements.shape:
            raise ValueError("dual frame must match the POVM outcome-for-outcome")
        mats.setflags(write=False)
        self.elements = mats
        self.povm = povm

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def resolution_residual(self) -> float:
        """Norm of ``sum_i |D_i><P_i| - Pi_span``; zero for an exact dual."""
        W = np.stack([vectorize(m) for m in self.elements], axis=1)
        resolution = W @ dagger(self.povm.design_matrix)
        return float(np.linalg.norm(resolution - self.povm.span_projector))


def frame_operator(P: Povm) -> np.ndarray:
    """HS frame operator ``F = sum_i |P_i><P_i|`` as a d^2 x d^2 matrix."""
    V = P.design_matrix
    return V @ dagger(V)


def canonical_dual(P: Povm, tol: Tolerances | None = None) -> DualFrame:
    """Canonical dual frame ``Delta_i = F^+ |P_i>``.

    ``F^+`` is the pseudoinverse of the frame operator, acting as the
    inverse on the span of the POVM elements.
    """
    tol = tol or P.tol
    F = frame_operator(P)
    Fp = moore_penrose(0.5 * (F + dagger(F)), tol, hermitian=True)
    duals = (Fp @ P.design_matrix).T.reshape(P.elements.shape)
    return DualFrame(duals, P)


def alternate_dual(P: Povm, canonical: DualFrame, Y) -> DualFrame:
    """Shifted dual ``z_i = Delta_i + y_i - sum_j <P_j|Delta_i> y_j``.

    Any operator list ``Y`` (one entry per outcome) produces another valid
    dual frame; when the POVM elements are linearly independent the shift
    cancels and the canonical dual is returned unchanged.
    """
    Ymats = np.stack([as_operator(y) for y in Y])
    if Ymats.shape != P.elements.shape:
        raise ValueError("need one Y operator per POVM element")
    W = np.stack([vectorize(m) for m in canonical.elements], axis=1)
    M = np.conj(W).T @ P.design_matrix  # M[i, j] = <Delta_i|P_j>
    shifted = canonical.elements + Ymats - np.tensordot(M, Ymats, axes=(1, 0))
    return DualFrame(shifted, P)


def symmetrize_dual(D: DualFrame) -> DualFrame:
    """Element-wise Hermitian part; again a valid dual for self-adjoint frames."""
    sym = 0.5 * (D.elements + np.conj(np.transpose(D.elements, (0, 2, 1))))
    return DualFrame(sym, D.povm)


def is_r_infocomplete(P: Povm, operators, tol: Tolerances | None = None) -> bool:
    """Does ``Span(operators)`` sit inside the span of the POVM elements?

    When true, every expectation ``Tr[rho R]`` with R in the given span is
    recoverable from the statistics of P.
    """
    tol = tol or P.tol
    Pi_R = span_projector(operators, tol)
    Pi_P = P.span_projector
    return float(np.linalg.norm(Pi_R @ Pi_P - Pi_R)) <= tol.lin_solve


def is_infocomplete(P: Povm, tol: Tolerances | None = None) -> bool:
    """Full informational completeness: the elements span all of HS space."""
    tol = tol or P.tol
    return numerical_rank(P.design_matrix, tol) == P.dim ** 2


def rank_one_refinement(P: Povm, tol: Tolerances | None = None) -> Povm:
    """Split every element into its rank-one eigen-pieces.

    Each ``P_i`` with spectral decomposition ``sum_k lam_k |v_k><v_k|``
    contributes one outcome per eigenvalue above the rank cutoff.  The
    refined POVM reproduces P by merging outcomes, and every element of
    the refinement is rank one.
    """
    tol = tol or P.tol
    pieces = []
    labels = []
    for i, m in enumerate(P.elements):
        lam, vec = np.linalg.eigh(0.5 * (m + dagger(m)))
        cutoff = tol.eig_zero * max(lam[-1], 0.0)
        for k in range(len(lam)):
            if lam[k] > cutoff and lam[k] > tol.psd_slack:
                v = vec[:, k]
                pieces.append(lam[k] * np.outer(v, np.conj(v)))
                labels.append(f"{i}:{k}")
    return Povm(pieces, labels=labels, tol=tol)


class Observable:
    """Self-adjoint operator with a clustered spectral decomposition.

    Eigenvalues closer than ``tol.cluster`` are merged into a single
    degenerate eigenvalue (their mean) whose projector is the sum of the
    corresponding eigenprojectors.
    """

    def __init__(self, operator, tol: Tolerances = DEFAULT_TOL):
        X = as_operator(operator)
        deviation = float(np.linalg.norm(X - dagger(X)))
        if deviation > tol.lin_solve:
            raise ValueError(f"observable is not self-adjoint (deviation {deviation:.3e})")
        lam, vec = np.linalg.eigh(0.5 * (X + dagger(X)))
        eigenvalues = []
        projectors = []
        start = 0
        for stop in range(1, len(lam) + 1):
            if stop == len(lam) or lam[stop] - lam[stop - 1] > tol.cluster:
                block = vec[:, start:stop]
                eigenvalues.append(float(np.mean(lam[start:stop])))
                projectors.append(block @ dagger(block))
                start = stop
        X.setflags(write=False)
        self.operator = X
        self.eigenvalues = np.array(eigenvalues)
        self.projectors = np.stack(projectors)
        self.projectors.setflags(write=False)
        self.tol = tol

    @property
    def dim(self) -> int:
        return self.operator.shape[0]

    @property
    def spectrum_size(self) -> int:
        """Number of distinct (clustered) eigenvalues, often called s."""
        return len(self.eigenvalues)


def spectral_povm(X: Observable) -> Povm:
    """The projective POVM made of the observable's spectral projectors."""
    return Povm(
        X.projectors,
        labels=[float(x) for x in X.eigenvalues],
        tol=X.tol,
    )
