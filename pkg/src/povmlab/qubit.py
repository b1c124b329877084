"""Closed-form qubit analysis for joint noisy x/y Pauli estimation.

A qubit POVM is written element-wise as
``P_i = alpha_i 1 + beta_i sx + gamma_i sy + delta_i sz``.  For POVMs
supported on the x-y plane (``delta_i = 0``) the minimum ensemble error
for the rotated targets ``s_pm(theta) = cos(theta) sx +- sin(theta) sy``
under an isotropic ensemble reduces to scalar noise quantities

    B = 2 sum beta_i^2/alpha_i,  G = 2 sum gamma_i^2/alpha_i,
    Dlt = -2 sum beta_i gamma_i / alpha_i,  Dtm = B*G - Dlt^2,

from which the per-target errors, their sum, the family-independent
lower bound ``2 (1 + sin 2 theta - kappa)`` and the bound-achieving
three- and four-outcome measurement families all follow.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .hs import DEFAULT_TOL, Tolerances, as_operator
from .povm import Povm
from .processing import Ensemble

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_ID = np.eye(2, dtype=complex)
_PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class NotIsotropicError(ValueError):
    """The ensemble barycenter is not the maximally mixed state."""


class ZeroAlphaWarning(UserWarning):
    """Trace-zero elements were dropped before forming the noise quantities."""


class DegeneratePovmWarning(UserWarning):
    """An endpoint of the theta range produced a degenerate measurement."""


class BlochPovm:
    """Qubit POVM in Bloch coordinates: one row ``(alpha, beta, gamma, delta)`` per element."""

    def __init__(self, coefficients, tol: Tolerances = DEFAULT_TOL, *, validate: bool = True):
        coeffs = np.asarray(coefficients, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[1] != 4:
            raise ValueError(f"expected an (N, 4) coefficient array, got {coeffs.shape}")
        if validate:
            alpha = coeffs[:, 0]
            radius = np.linalg.norm(coeffs[:, 1:], axis=1)
            if np.any(alpha < -tol.psd_slack):
                raise ValueError("alpha coefficients must be nonnegative")
            if np.any(radius > alpha + tol.psd_slack):
                i = int(np.argmax(radius - alpha))
                raise ValueError(
                    f"element {i} violates positivity: Bloch radius {radius[i]:.6e} "
                    f"exceeds alpha {alpha[i]:.6e}"
                )
            sums = coeffs.sum(axis=0)
            if abs(sums[0] - 1.0) > tol.lin_solve or np.any(np.abs(sums[1:]) > tol.lin_solve):
                raise ValueError(f"completeness requires column sums (1,0,0,0), got {sums}")
        coeffs.setflags(write=False)
        self.coefficients = coeffs
        self.tol = tol

    def __len__(self) -> int:
        return self.coefficients.shape[0]

    @classmethod
    def from_povm(cls, P: Povm, tol: Tolerances | None = None) -> "BlochPovm":
        if P.dim != 2:
            raise ValueError("Bloch coordinates exist for qubit POVMs only")
        tol = tol or P.tol
        rows = []
        for m in P.elements:
            rows.append(
                [float(np.real(np.trace(m @ basis))) / 2.0 for basis in (_ID,) + _PAULIS]
            )
        return cls(np.array(rows), tol=tol)

    def to_povm(self) -> Povm:
        elements = [
            a * _ID + b * SIGMA_X + g * SIGMA_Y + d * SIGMA_Z
            for a, b, g, d in self.coefficients
        ]
        return Povm(elements, tol=self.tol)

    def is_rank_one(self, slack: float = 1e-9) -> bool:
        """All elements rank one: Bloch radius equal to alpha."""
        alpha = self.coefficients[:, 0]
        radius = np.linalg.norm(self.coefficients[:, 1:], axis=1)
        return bool(np.all(np.abs(radius - alpha) <= slack))


def sigma_pm(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """The rotated targets ``cos(theta) sx +- sin(theta) sy``.

    They commute only at the range endpoints; outside ``(0, pi/2)`` a
    warning is emitted but the operators are still returned.
    """
    if not (0.0 < theta < np.pi / 2.0):
        warnings.warn(
            f"theta={theta!r} is outside (0, pi/2); the two targets degenerate",
            DegeneratePovmWarning,
            stacklevel=2,
        )
    plus = np.cos(theta) * SIGMA_X + np.sin(theta) * SIGMA_Y
    minus = np.cos(theta) * SIGMA_X - np.sin(theta) * SIGMA_Y
    return plus, minus


def error_bound(theta: float, kappa: float) -> float:
    """Joint-error lower bound ``2 (1 + sin 2 theta - kappa)``.

    ``kappa`` is the ensemble second-moment offset
    ``(avg<s_plus>^2 + avg<s_minus>^2) / 2``; no x-y plane POVM can estimate
    both rotated targets with a total ensemble error below this value.
    """
    return 2.0 * (1.0 + np.sin(2.0 * theta) - kappa)


@dataclass(frozen=True)
class NoiseSummary:
    """Scalar summary of a planar qubit POVM's joint estimation performance."""

    theta: float
    B: float
    Gamma: float
    Delta: float
    Dtm: float
    kappa: float
    error_plus: float
    error_minus: float
    total_error: float
    bound: float


def _second_moment(ensemble: Ensemble, X: np.ndarray) -> float:
    vals = np.real(np.einsum("jab,ba->j", ensemble.states, X))
    return float(np.dot(ensemble.weights, vals ** 2))


def noise_quantities(
    P,
    ensemble: Ensemble,
    theta: float,
    tol: Tolerances = DEFAULT_TOL,
) -> NoiseSummary:
    """Noise quantities and joint error of a planar POVM at angle ``theta``.

    Parameters
    ----------
    P:
        :class:`BlochPovm` or qubit :class:`~povmlab.povm.Povm` with all
        elements in the x-y plane (``delta_i = 0``).
    ensemble:
        State ensemble whose barycenter must be the maximally mixed state.
    theta:
        Angle of the rotated targets ``s_pm(theta)``.

    Raises
    ------
    NotIsotropicError
        If the ensemble barycenter differs from 1/2.
    ValueError
        If some element leaves the x-y plane; the scalar reduction does
        not apply then (use the general minimum-error routine instead).
    """
    if isinstance(P, Povm):
        P = BlochPovm.from_povm(P, tol)
    if float(np.linalg.norm(ensemble.barycenter - 0.5 * _ID)) > tol.lin_solve:
        raise NotIsotropicError(
            "noise quantities assume an isotropic ensemble (barycenter 1/2)"
        )
    coeffs = P.coefficients
    if np.any(np.abs(coeffs[:, 3]) > tol.lin_solve):
        raise ValueError(
            "POVM has sigma_z components; the planar noise reduction does not apply"
        )
    live = coeffs[:, 0] > tol.eig_zero
    if not np.all(live):
        warnings.warn(
            f"dropping {int(np.count_nonzero(~live))} trace-zero element(s) "
            "before forming B/Gamma/Delta",
            ZeroAlphaWarning,
            stacklevel=2,
        )
        coeffs = coeffs[live]
    alpha, beta, gamma = coeffs[:, 0], coeffs[:, 1], coeffs[:, 2]
    B = 2.0 * float(np.sum(beta ** 2 / alpha))
    Gamma = 2.0 * float(np.sum(gamma ** 2 / alpha))
    Delta = -2.0 * float(np.sum(beta * gamma / alpha))
    Dtm = B * Gamma - Delta ** 2
    if Dtm <= tol.eig_zero:
        raise ValueError(
            "degenerate noise matrix (B*Gamma - Delta^2 ~ 0); the POVM cannot "
            "estimate both rotated targets"
        )

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePovmWarning)
        s_plus, s_minus = sigma_pm(theta)
    m_plus = _second_moment(ensemble, s_plus)
    m_minus = _second_moment(ensemble, s_minus)
    kappa = 0.5 * (m_plus + m_minus)

    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    cross = np.sin(2.0 * theta)
    error_plus = (2.0 / Dtm) * (c2 * Gamma + s2 * B + cross * Delta) - m_plus
    error_minus = (2.0 / Dtm) * (c2 * Gamma + s2 * B - cross * Delta) - m_minus
    total = error_plus + error_minus

    # For rank-one planar POVMs with Delta = 0 the total collapses to the
    # single-parameter form in B; verify the two evaluations coincide.
    if P.is_rank_one() and abs(Delta) <= tol.lin_solve:
        simplified = 4.0 * (c2 / B + (1.0 - c2) / (2.0 - B) - kappa / 2.0)
        if abs(simplified - total) > 1e-8 * max(1.0, abs(total)):
            raise RuntimeError(
                f"internal inconsistency: simplified total error {simplified!r} "
                f"!= general form {total!r}"
            )

    return NoiseSummary(
        theta=float(theta),
        B=B,
        Gamma=Gamma,
        Delta=Delta,
        Dtm=Dtm,
        kappa=kappa,
        error_plus=float(error_plus),
        error_minus=float(error_minus),
        total_error=float(total),
        bound=float(error_bound(theta, kappa)),
    )


def symmetrize_delta(P) -> "BlochPovm":
    """Halved union of P with its gamma-flipped mirror image.

    The result has twice the outcomes, the same B and Gamma, and
    ``Delta = 0`` exactly, so symmetrizing never hurts (``Dtm`` can only
    grow).  Accepts a :class:`BlochPovm` or a qubit :class:`Povm`.
    """
    if isinstance(P, Povm):
        P = BlochPovm.from_povm(P)
    half = 0.5 * P.coefficients
    mirrored = half.copy()
    mirrored[:, 2] = -mirrored[:, 2]
    return BlochPovm(np.vstack([half, mirrored]), tol=P.tol)


def _check_theta(theta: float) -> None:
    if not (0.0 <= theta <= np.pi / 2.0):
        raise ValueError(f"theta must lie in [0, pi/2], got {theta!r}")
    if theta == 0.0 or theta == np.pi / 2.0:
        warnings.warn(
            "theta at an endpoint of (0, pi/2): the optimal measurement degenerates "
            "(the two targets commute there)",
            DegeneratePovmWarning,
            stacklevel=3,
        )


def optimal_three_outcome(theta: float, tol: Tolerances = DEFAULT_TOL) -> Povm:
    """Minimal bound-achieving family: one sx-aligned and two mirrored outcomes.

    With ``p = cos t / (2 cos t + sin t)`` the elements are
    ``p (1 + sx)`` and ``(1-p)/2 1 - p/2 sx +- sqrt(1-2p)/2 sy``.
    All three are rank one and the joint error meets the bound for every
    ``theta`` in the open interval.
    """
    _check_theta(theta)
    p = np.cos(theta) / (2.0 * np.cos(theta) + np.sin(theta))
    root = np.sqrt(max(1.0 - 2.0 * p, 0.0))
    coeffs = np.array(
        [
            [p, p, 0.0, 0.0],
            [(1.0 - p) / 2.0, -p / 2.0, root / 2.0, 0.0],
            [(1.0 - p) / 2.0, -p / 2.0, -root / 2.0, 0.0],
        ]
    )
    return BlochPovm(coeffs, tol=tol).to_povm()


def optimal_four_outcome(theta: float, tol: Tolerances = DEFAULT_TOL) -> Povm:
    """Symmetric bound-achieving family: rescaled sx and sy projective pairs.

    With ``p = cos t / (cos t + sin t)`` the elements are
    ``(p/2)(1 +- sx)`` and ``((1-p)/2)(1 +- sy)``.
    """
    _check_theta(theta)
    p = np.cos(theta) / (np.cos(theta) + np.sin(theta))
    coeffs = np.array(
        [
            [p / 2.0, p / 2.0, 0.0, 0.0],
            [p / 2.0, -p / 2.0, 0.0, 0.0],
            [(1.0 - p) / 2.0, 0.0, (1.0 - p) / 2.0, 0.0],
            [(1.0 - p) / 2.0, 0.0, -(1.0 - p) / 2.0, 0.0],
        ]
    )
    return BlochPovm(coeffs, tol=tol).to_povm()


def optimal_B(theta: float) -> float:
    """Arg-min of the rank-one total error over B: ``2 cos t / (cos t + sin t)``."""
    if not (0.0 <= theta <= np.pi / 2.0):
        raise ValueError(f"theta must lie in [0, pi/2], got {theta!r}")
    return 2.0 * np.cos(theta) / (np.cos(theta) + np.sin(theta))
