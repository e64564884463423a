"""Fixed-step integration of the coupled truth and observer system.

The observer state is flattened to one real vector so the integrator
stays structure-agnostic: n^2 entries for ``A_bar`` followed by the bias
coordinates (algebra coordinates, or a full n^2 block for kind I_mod).
Nothing is renormalized or projected back during integration; the whole
point of the ambient-space design is that it does not need to be.

Truth handling has two modes. A closed-form trajectory is evaluated
analytically at every Runge-Kutta stage time, so no truth discretization
error enters the error signal. A velocity-profile truth is co-integrated,
with the true pose prepended to the state vector.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import ErrorSample, compute_errors, lyapunov_value, suggested_epsilon
from .errors import ConfigurationError, DomainError, GainFloorError, NumericalError
from .kinematics import (
    AnalyticTruth,
    Bounds,
    MeasurementModel,
    TruthSample,
    VelocityTruth,
    empirical_bounds,
)
from .liegroup import AlgebraElement, project_matrix
from .matcore import frob_norm, mat_inv
from .observers import Gains, ObserverKind, ObserverState, _rhs_factory, gain_floor

__all__ = ["rk4_step", "SimConfig", "SimSample", "SimRecord", "simulate"]


def rk4_step(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    state: np.ndarray,
    t: float,
    h: float,
) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> dy/dt`` on flat real vectors.
    state : numpy.ndarray
        State at time ``t``.
    t, h : float
        Current time and step size, ``h > 0``.

    Raises
    ------
    NumericalError
        If the update contains non-finite entries; carries ``t``.
    """
    if h <= 0.0:
        raise ConfigurationError(f"step size must be positive, got {h}")
    y = np.asarray(state, dtype=float)
    k1 = np.asarray(rhs(t, y), dtype=float)
    k2 = np.asarray(rhs(t + 0.5 * h, y + (0.5 * h) * k1), dtype=float)
    k3 = np.asarray(rhs(t + 0.5 * h, y + (0.5 * h) * k2), dtype=float)
    k4 = np.asarray(rhs(t + h, y + h * k3), dtype=float)
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"non-finite state after step from t={t}", t=t)
    return out


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Everything one run needs.

    ``bounds`` may be a :class:`~lieobs.kinematics.Bounds`, the string
    ``"empirical"`` (sample the truth trajectory over the horizon), or
    None (same as empirical). ``lyapunov_epsilon`` selects the mixing
    weight for the recorded V: a number, ``"auto"`` (half the admissible
    bound, falling back to 0 when the gains admit none), or None for the
    plain decoupled quadratic (epsilon 0).
    """

    kind: ObserverKind
    gains: Gains
    model: MeasurementModel
    bias: AlgebraElement
    initial_observer: ObserverState
    truth: AnalyticTruth | VelocityTruth
    horizon: float = 30.0
    step: float = 1e-3
    record_stride: int = 1
    bounds: Bounds | str | None = "empirical"
    lyapunov_epsilon: float | str | None = None
    strict_gains: bool = False

    def __post_init__(self):
        if self.step <= 0.0:
            raise ConfigurationError(f"step must be positive, got {self.step}")
        if self.horizon < self.step:
            raise ConfigurationError("horizon must be at least one step")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ConfigurationError(
                f"record_stride must be a positive integer, got {self.record_stride}"
            )
        if isinstance(self.bounds, str) and self.bounds != "empirical":
            raise ConfigurationError(f"unknown bounds mode {self.bounds!r}")
        if isinstance(self.lyapunov_epsilon, str) and self.lyapunov_epsilon != "auto":
            raise ConfigurationError(
                f"unknown lyapunov_epsilon mode {self.lyapunov_epsilon!r}"
            )


@dataclass(frozen=True, eq=False)
class SimSample:
    """One recorded instant: truth, observer state, errors, diagnostics."""

    t: float
    g: np.ndarray
    A: np.ndarray
    A_bar: np.ndarray
    b_bar: np.ndarray
    errors: ErrorSample
    V: float | None = None

    @property
    def E_A(self) -> np.ndarray:
        return self.errors.E_A

    @property
    def e_b(self) -> np.ndarray:
        return self.errors.e_b

    @property
    def E_g(self) -> np.ndarray | None:
        return self.errors.E_g

    @property
    def script_E_A(self) -> np.ndarray | None:
        return self.errors.script_E_A


@dataclass(frozen=True, eq=False)
class SimRecord:
    """Simulation output: samples plus the resolved run constants."""

    config: SimConfig
    samples: list[SimSample]
    bounds: Bounds
    floor: float
    epsilon: float
    epsilon_fallback: bool = False


def _resolve_bounds(config: SimConfig) -> Bounds:
    if isinstance(config.bounds, Bounds):
        return config.bounds
    bias_norm = frob_norm(config.bias.matrix)
    truth = config.truth
    if isinstance(truth, AnalyticTruth):
        def sampler(t: float):
            g, xi_mat, _ = truth.state_of(t)
            return g, xi_mat
        return empirical_bounds(sampler, config.horizon, bias_norm=bias_norm)
    # Velocity-profile truth: run a coarse forward pass to observe g(t).
    h = 0.01
    n = truth.group.ambient_n

    def pose_rhs(tt, y):
        gg = y.reshape(n, n)
        return (gg @ np.asarray(truth.velocity_of(tt), dtype=float)).ravel()

    y = np.asarray(truth.g0, dtype=float).ravel()
    lookup = {0.0: y.reshape(n, n)}
    t = 0.0
    n_nodes = math.ceil(config.horizon / h) if config.horizon > 0 else 0
    for _ in range(n_nodes):
        y = rk4_step(pose_rhs, y, t, h)
        t += h
        lookup[round(t, 9)] = y.reshape(n, n)

    def sampler(tt: float):
        gg = lookup.get(round(tt, 9))
        if gg is None:
            raise DomainError(f"no pre-integrated truth sample at t={tt}")
        return gg, np.asarray(truth.velocity_of(tt), dtype=float)

    return empirical_bounds(sampler, config.horizon, step=h, bias_norm=bias_norm)


def _resolve_epsilon(config: SimConfig, bounds: Bounds) -> tuple[float, bool]:
    """(epsilon, fallback_flag) for the recorded Lyapunov values."""
    eps = config.lyapunov_epsilon
    if eps is None:
        return 0.0, False
    if eps == "auto":
        if config.model.time_varying:
            return 0.0, True
        sug = suggested_epsilon(
            config.kind, config.gains, bounds, config.model.F_at(0.0)
        )
        if sug is None:
            return 0.0, True
        return sug, False
    return float(eps), False


def simulate(config: SimConfig) -> SimRecord:
    """Integrate one observer run and assemble its record.

    The gain floor is always computed; a proportional gain at or below it
    warns, or raises :class:`~lieobs.errors.GainFloorError` under
    ``strict_gains``. Kinds III/IV propagate a singularity of ``A`` as an
    error carrying the failure time.
    """
    kind = config.kind
    group = config.truth.group
    n = group.ambient_n
    nn = n * n
    if config.bias.group is not group and (
        config.bias.group.name != group.name
        or config.bias.group.ambient_n != group.ambient_n
    ):
        raise ConfigurationError("bias algebra does not match the truth group")

    bounds = _resolve_bounds(config)
    floor = gain_floor(kind, bounds)
    if config.gains.k_P <= floor:
        msg = (
            f"k_P={config.gains.k_P} does not exceed the kind-{kind.value} "
            f"gain floor {floor:.6g}; convergence is not certified"
        )
        if config.strict_gains:
            raise GainFloorError(msg)
        warnings.warn(msg)
    epsilon, eps_fallback = _resolve_epsilon(config, bounds)

    i_mod = kind is ObserverKind.I_MOD
    left = kind.side == "left"
    model = config.model
    # A constant measurement map makes the tv feed-through identically
    # zero, so only fetch F_dot when it can be nonzero.
    tv = kind.time_varying and model.time_varying
    bias_mat = config.bias.matrix
    b2d = group._basis2d
    k_p, k_i = config.gains.k_P, config.gains.k_I
    raw = _rhs_factory(kind, group, k_p, k_i)

    # Validate and flatten the initial observer state.
    A_bar0 = np.asarray(config.initial_observer.A_bar, dtype=float)
    if A_bar0.shape != (n, n):
        raise ConfigurationError(
            f"initial A_bar must have shape ({n}, {n}), got {A_bar0.shape}"
        )
    b0_mat = config.initial_observer.b_matrix
    if b0_mat.shape != (n, n):
        raise ConfigurationError(
            f"initial b_bar must have shape ({n}, {n}), got {b0_mat.shape}"
        )
    if i_mod:
        nb = nn
        b0_flat = b0_mat.ravel()
    else:
        nb = group.algebra_dim
        if frob_norm(b0_mat - project_matrix(group, b0_mat)) > 1e-8:
            raise ConfigurationError(
                "initial b_bar must lie in the algebra for this observer kind"
            )
        if isinstance(config.initial_observer.b_bar, AlgebraElement):
            b0_flat = np.asarray(config.initial_observer.b_bar.coords, dtype=float)
        else:
            b0_flat = group.coords_of(b0_mat)

    analytic = isinstance(config.truth, AnalyticTruth)
    co_int = not analytic
    ng = nn if co_int else 0

    if analytic:
        truth_of = config.truth.state_of
        cache: dict[float, tuple] = {}

        def inputs(t: float):
            got = cache.get(t)
            if got is None:
                g, xi_mat, g_inv = truth_of(t)
                f_t = model.F_at(t)
                if left:
                    A = f_t @ g
                else:
                    if g_inv is None:
                        g_inv = mat_inv(g)
                    A = g_inv @ f_t
                fd_t = model.F_dot_at(t) if tv else None
                got = (g, xi_mat + bias_mat, A, f_t, fd_t)
                if len(cache) > 512:
                    cache.clear()
                cache[t] = got
            return got

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            _, xi_m_mat, A, f_t, fd_t = inputs(t)
            A_bar = y[:nn].reshape(n, n)
            b_mat = y[nn:].reshape(n, n) if i_mod else (y[nn:] @ b2d).reshape(n, n)
            dA, db = raw(A_bar, b_mat, A, xi_m_mat, f_t, fd_t)
            out = np.empty(nn + nb)
            out[:nn] = dA.ravel()
            out[nn:] = db.ravel() if i_mod else b2d @ db.ravel()
            return out

    else:
        velocity_of = config.truth.velocity_of
        vcache: dict[float, tuple] = {}

        def vel_inputs(t: float):
            got = vcache.get(t)
            if got is None:
                xi_mat = np.asarray(velocity_of(t), dtype=float)
                f_t = model.F_at(t)
                fd_t = model.F_dot_at(t) if tv else None
                got = (xi_mat, f_t, fd_t)
                if len(vcache) > 512:
                    vcache.clear()
                vcache[t] = got
            return got

        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            xi_mat, f_t, fd_t = vel_inputs(t)
            g = y[:nn].reshape(n, n)
            A = f_t @ g if left else mat_inv(g) @ f_t
            A_bar = y[ng : ng + nn].reshape(n, n)
            tail = y[ng + nn :]
            b_mat = tail.reshape(n, n) if i_mod else (tail @ b2d).reshape(n, n)
            dA, db = raw(A_bar, b_mat, A, xi_mat + bias_mat, f_t, fd_t)
            out = np.empty(ng + nn + nb)
            out[:nn] = (g @ xi_mat).ravel()
            out[ng : ng + nn] = dA.ravel()
            out[ng + nn :] = db.ravel() if i_mod else b2d @ db.ravel()
            return out

    n_steps = int(round(config.horizon / config.step))
    if abs(n_steps * config.step - config.horizon) > 1e-6 * config.step:
        raise ConfigurationError(
            f"horizon {config.horizon} is not an integer multiple of step {config.step}"
        )

    y = np.empty(ng + nn + nb)
    if co_int:
        g0 = np.asarray(config.truth.g0, dtype=float)
        if g0.shape != (n, n):
            raise ConfigurationError(f"g0 must have shape ({n}, {n}), got {g0.shape}")
        y[:nn] = g0.ravel()
    y[ng : ng + nn] = A_bar0.ravel()
    y[ng + nn :] = b0_flat

    samples: list[SimSample] = []

    def record(t: float, y: np.ndarray) -> None:
        if analytic:
            g, xi_m_mat, A, f_t, _ = inputs(t)
            xi_mat = xi_m_mat - bias_mat
            g = g.copy()
            A = A.copy()
        else:
            xi_mat, f_t, _ = vel_inputs(t)
            g = y[:nn].reshape(n, n).copy()
            A = f_t @ g if left else mat_inv(g) @ f_t
        A_bar = y[ng : ng + nn].reshape(n, n).copy()
        tail = y[ng + nn :]
        if i_mod:
            b_mat = tail.reshape(n, n).copy()
            obs_state = ObserverState(A_bar, b_mat)
        else:
            coords = tail.copy()
            b_mat = (coords @ b2d).reshape(n, n)
            obs_state = ObserverState(A_bar, AlgebraElement(group, b_mat, coords))
        xi = AlgebraElement(group, xi_mat)
        xi_m = AlgebraElement(group, xi_mat + bias_mat)
        truth_sample = TruthSample(t=t, g=g, xi=xi, b=config.bias, xi_m=xi_m, A=A)
        err = compute_errors(kind, truth_sample, obs_state, f_t)
        try:
            V = lyapunov_value(kind, epsilon, err, A, config.gains)
        except DomainError:
            V = None
        samples.append(
            SimSample(t=t, g=g, A=A, A_bar=A_bar, b_bar=b_mat, errors=err, V=V)
        )

    record(0.0, y)
    stride = int(config.record_stride)
    h = config.step
    # Same tableau and evaluation order as rk4_step, unrolled so the end
    # time of one step and the start time of the next are the same float
    # and the truth cache keyed on t always hits across the boundary.
    hh = 0.5 * h
    h6 = h / 6.0
    try:
        for i in range(n_steps):
            t0 = i * h
            tm = t0 + hh
            t1 = (i + 1) * h
            k1 = rhs(t0, y)
            k2 = rhs(tm, y + hh * k1)
            k3 = rhs(tm, y + hh * k2)
            k4 = rhs(t1, y + h * k3)
            y = y + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise NumericalError(f"non-finite state after step from t={t0}", t=t0)
            if (i + 1) % stride == 0:
                record(t1, y)
    finally:
        if analytic:
            cache.clear()
        else:
            vcache.clear()

    return SimRecord(
        config=config,
        samples=samples,
        bounds=bounds,
        floor=floor,
        epsilon=epsilon,
        epsilon_fallback=eps_fallback,
    )
