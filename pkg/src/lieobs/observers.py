"""Observer vector fields for state and constant-bias estimation.

Seven variants share one structure: an ambient-space estimate ``A_bar`` of
the measured matrix ``A`` driven by a copy of the plant plus proportional
injection ``k_p (A - A_bar)``, and a bias estimate ``b_bar`` driven by the
integral channel. They differ in the measurement side, in whether the
integral channel is projected onto the Lie algebra, in whether the bias
update sees ``A^T`` or ``A^-1``, and in a feed-through term for
time-varying measurement matrices:

===========  =====  =========================  =====================
kind         side   bias update                extra state term
===========  =====  =========================  =====================
``I``        left   ``-k_i P(A^T E)``
``I_mod``    left   ``-k_i A^T E`` (ambient)
``I_tv``     left   ``-k_i P(A^T E)``          ``+ Fdot F^-1 A``
``II``       right  ``+k_i P(E A^T)``
``II_tv``    right  ``+k_i P(E A^T)``          ``+ A F^-1 Fdot``
``III``      left   ``-k_i P(A^-1 E)``
``IV``       right  ``+k_i P(E A^-1)``
===========  =====  =========================  =====================

with ``E = A - A_bar`` and ``P`` the algebra projection. The inverse in
kinds III and IV is recomputed at every evaluation on purpose: caching it
across integrator stages would silently desynchronise it from ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DimensionError
from .kinematics import Bounds
from .liegroup import AlgebraElement, GroupSpec, _fast_projector
from .matcore import mat_inv

__all__ = [
    "ObserverKind",
    "Gains",
    "ObserverState",
    "observer_rhs",
    "gain_floor",
    "estimate_g",
]


class ObserverKind(Enum):
    I = "I"
    I_MOD = "I_mod"
    I_TV = "I_tv"
    II = "II"
    II_TV = "II_tv"
    III = "III"
    IV = "IV"

    @property
    def side(self) -> str:
        """Measurement side: 'left' means A = F g, 'right' means A = g^-1 F."""
        return "left" if self in (
            ObserverKind.I,
            ObserverKind.I_MOD,
            ObserverKind.I_TV,
            ObserverKind.III,
        ) else "right"

    @property
    def projected_bias(self) -> bool:
        """Whether the bias state lives in the algebra (all kinds but I_mod)."""
        return self is not ObserverKind.I_MOD

    @property
    def time_varying(self) -> bool:
        return self in (ObserverKind.I_TV, ObserverKind.II_TV)

    @property
    def uses_inverse(self) -> bool:
        return self in (ObserverKind.III, ObserverKind.IV)

    @classmethod
    def from_label(cls, label: str) -> "ObserverKind":
        for kind in cls:
            if kind.value == label:
                return kind
        raise ConfigurationError(f"unknown observer kind {label!r}")


@dataclass(frozen=True)
class Gains:
    """Proportional and integral gains, both strictly positive."""

    k_P: float
    k_I: float

    def __post_init__(self):
        if not (self.k_P > 0.0 and self.k_I > 0.0):
            raise ConfigurationError(
                f"gains must be positive, got k_P={self.k_P}, k_I={self.k_I}"
            )


@dataclass(frozen=True, eq=False)
class ObserverState:
    """Observer state: ambient estimate plus bias estimate.

    ``b_bar`` is an :class:`AlgebraElement` for algebra-valued kinds and a
    plain ambient matrix for kind I_mod.
    """

    A_bar: np.ndarray
    b_bar: AlgebraElement | np.ndarray

    @property
    def b_matrix(self) -> np.ndarray:
        if isinstance(self.b_bar, AlgebraElement):
            return self.b_bar.matrix
        return np.asarray(self.b_bar, dtype=float)


@lru_cache(maxsize=256)
def _rhs_factory(kind: ObserverKind, group: GroupSpec, k_p: float, k_i: float):
    """Build a specialised derivative closure for one observer kind.

    Resolving the kind dispatch and the algebra projection once matters:
    the integrator calls the result four times per step. Every closure
    maps raw arrays ``(A_bar, b_mat, A, xi_m_mat, F, F_dot)`` to
    ``(dA_bar, db_bar)``. The time-varying kinds skip their feed-through
    term when ``F_dot`` is None, which callers use to signal a constant
    measurement map; the term is identically zero there.
    """
    proj = _fast_projector(group)

    if kind is ObserverKind.I or kind is ObserverKind.I_TV:
        tv = kind is ObserverKind.I_TV

        def raw(A_bar, b_mat, A, xi_m_mat, F=None, F_dot=None):
            E = A - A_bar
            dA = A_bar @ xi_m_mat - A @ b_mat + k_p * E
            if tv and F_dot is not None:
                dA = dA + F_dot @ mat_inv(F) @ A
            return dA, -k_i * proj(A.T @ E)

    elif kind is ObserverKind.I_MOD:

        def raw(A_bar, b_mat, A, xi_m_mat, F=None, F_dot=None):
            E = A - A_bar
            dA = A_bar @ xi_m_mat - A @ b_mat + k_p * E
            return dA, -k_i * (A.T @ E)

    elif kind is ObserverKind.II or kind is ObserverKind.II_TV:
        tv = kind is ObserverKind.II_TV

        def raw(A_bar, b_mat, A, xi_m_mat, F=None, F_dot=None):
            E = A - A_bar
            dA = -(xi_m_mat @ A_bar) + b_mat @ A + k_p * E
            if tv and F_dot is not None:
                dA = dA + A @ mat_inv(F) @ F_dot
            return dA, k_i * proj(E @ A.T)

    elif kind is ObserverKind.III:

        def raw(A_bar, b_mat, A, xi_m_mat, F=None, F_dot=None):
            E = A - A_bar
            dA = A_bar @ xi_m_mat - A @ b_mat + k_p * E
            return dA, -k_i * proj(mat_inv(A) @ E)

    else:

        def raw(A_bar, b_mat, A, xi_m_mat, F=None, F_dot=None):
            E = A - A_bar
            dA = -(xi_m_mat @ A_bar) + b_mat @ A + k_p * E
            return dA, k_i * proj(E @ mat_inv(A))

    return raw


def _raw_rhs(
    kind: ObserverKind,
    group: GroupSpec,
    A_bar: np.ndarray,
    b_mat: np.ndarray,
    A: np.ndarray,
    xi_m_mat: np.ndarray,
    k_p: float,
    k_i: float,
    F: np.ndarray | None = None,
    F_dot: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Observer time derivatives on raw arrays. Shared by the public
    wrapper and the integrator hot loop."""
    return _rhs_factory(kind, group, k_p, k_i)(A_bar, b_mat, A, xi_m_mat, F, F_dot)


def observer_rhs(
    kind: ObserverKind,
    state: ObserverState,
    A: np.ndarray,
    xi_m: AlgebraElement,
    gains: Gains,
    aux: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives ``(dA_bar/dt, db_bar/dt)`` for one observer kind.

    Parameters
    ----------
    state : ObserverState
        Current estimates.
    A : numpy.ndarray
        Current measurement, same shape as ``state.A_bar``.
    xi_m : AlgebraElement
        Measured (biased) velocity; also supplies the group.
    gains : Gains
    aux : tuple or None
        ``(F, F_dot)`` matrices, required by the time-varying kinds.

    Returns
    -------
    (dA_bar, db_bar) : pair of numpy.ndarray
        The bias derivative is an algebra matrix except for kind I_mod,
        where it ranges over the full ambient space.
    """
    group = xi_m.group
    n = group.ambient_n
    A = np.asarray(A, dtype=float)
    A_bar = np.asarray(state.A_bar, dtype=float)
    if A.shape != (n, n) or A_bar.shape != (n, n):
        raise DimensionError(
            f"A and A_bar must have shape ({n}, {n}), got {A.shape} and {A_bar.shape}"
        )
    b_mat = state.b_matrix
    if b_mat.shape != (n, n):
        raise DimensionError(f"b_bar must have shape ({n}, {n}), got {b_mat.shape}")
    F = F_dot = None
    if kind.time_varying:
        if aux is None:
            raise ConfigurationError(f"kind {kind.value} needs aux=(F, F_dot)")
        F = np.asarray(aux[0], dtype=float)
        F_dot = np.asarray(aux[1], dtype=float)
    return _raw_rhs(
        kind, group, A_bar, b_mat, A, xi_m.matrix, gains.k_P, gains.k_I, F, F_dot
    )


def gain_floor(kind: ObserverKind, bounds: Bounds) -> float:
    """Smallest proportional gain with a convergence guarantee.

    Kinds that feed the inverse of the measurement into the bias channel
    pay for it with a doubled velocity term.
    """
    if kind.uses_inverse:
        return 2.0 * bounds.B_xi + bounds.B_b
    return bounds.B_xi + bounds.B_b


def estimate_g(kind: ObserverKind, A_bar: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Group-state estimate implied by the ambient estimate.

    Left-measurement kinds invert the known ``F``; right-measurement kinds
    must invert ``A_bar`` itself, which raises
    :class:`~lieobs.errors.SingularityError` whenever the estimate passes
    too close to singularity.
    """
    A_bar = np.asarray(A_bar, dtype=float)
    F = np.asarray(F, dtype=float)
    if A_bar.shape != F.shape:
        raise DimensionError(
            f"A_bar shape {A_bar.shape} does not match F shape {F.shape}"
        )
    if kind.side == "left":
        return mat_inv(F) @ A_bar
    return F @ mat_inv(A_bar)
