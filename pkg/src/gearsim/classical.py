"""Classical limit of the gear pair: one relative degree of freedom.

The relative coordinate obeys theta_r' = L_r/I_r, L_r' = n V0 u'(n theta_r);
the center-of-mass momentum is a spectator that kicks simply add to.  A kick
leaves the pair interlocked (librating, so the time-averaged L_r vanishes)
or spinning past the teeth (drifting), depending on whether the energy
clears the potential ceiling.  Time averages are taken over exactly one
period in either case, with event times refined by cubic Hermite
interpolation so the O(dt^4) integrator accuracy survives into the average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ConvergenceFailure, StepTooLarge
from .model import (
    DerivedGeometry,
    GearConfig,
    angular_momentum_split,
    derive_geometry,
    momenta_to_collective,
)

__all__ = [
    "ClassicalState",
    "Trajectory",
    "ClassicalTransmissionResult",
    "simulate_relative",
    "classical_kick",
    "interlock_threshold",
    "mean_relative_momentum",
    "classical_transmission",
]

# fraction of the natural period used as the default integrator step
_DT_FRACTION = 1e-3
# steps larger than this fraction of the fastest period are refused
_DT_LIMIT_FRACTION = 0.1
_CHUNK_STEPS = 20000
_MAX_CHUNKS = 200


@dataclass(frozen=True)
class ClassicalState:
    """Phase-space point of the classical pair (relative + spectator L_c)."""

    theta_r: float
    L_r: float
    L_c: float = 0.0
    time: float = 0.0


@dataclass(frozen=True)
class Trajectory:
    """Fixed-step integration record of the relative motion."""

    geom: DerivedGeometry
    times: np.ndarray
    theta: np.ndarray
    L: np.ndarray
    L_c: float

    def energies(self) -> np.ndarray:
        cfg = self.geom.config
        u = np.full_like(self.theta, cfg.potential.a0)
        for p, a in cfg.potential.harmonics():
            u += a * np.cos(p * self.geom.n * self.theta)
        return self.L ** 2 / (2.0 * self.geom.I_r) - cfg.V0 * u

    def final(self) -> ClassicalState:
        return ClassicalState(
            float(self.theta[-1]), float(self.L[-1]), self.L_c, float(self.times[-1])
        )


def _natural_period(geom: DerivedGeometry) -> float:
    """Shortest oscillation timescale of the well, or inf for a free rotor."""
    omega = max(geom.omega0, geom.omega0_harmonic)
    return 2.0 * math.pi / omega if omega > 0 else math.inf


def _default_dt(geom: DerivedGeometry, t_final: float) -> float:
    period = _natural_period(geom)
    if math.isinf(period):
        return max(t_final, 1.0) / 1000.0
    return _DT_FRACTION * period


def _energy(geom: DerivedGeometry, theta: float, L: float) -> float:
    cfg = geom.config
    return L * L / (2.0 * geom.I_r) - cfg.V0 * cfg.potential.value(geom.n * theta)


def simulate_relative(
    geom: DerivedGeometry,
    initial: ClassicalState,
    t_final: float,
    dt: float | None = None,
) -> Trajectory:
    """Classical RK4 integration of the relative motion for time t_final.

    The step is fixed; t_final is landed on exactly by shrinking the step to
    an integer divisor.  Raises StepTooLarge when dt is an unreasonable
    fraction of the well period.
    """
    if not t_final > 0:
        raise ValueError("t_final must be > 0")
    if dt is None:
        dt = _default_dt(geom, t_final)
    if not dt > 0:
        raise ValueError("dt must be > 0")
    limit = _DT_LIMIT_FRACTION * _natural_period(geom)
    if dt > limit:
        raise StepTooLarge(
            f"dt={dt:g} exceeds {limit:g}, the stability bound for this well"
        )
    n_steps = max(1, math.ceil(t_final / dt - 1e-12))
    dt = t_final / n_steps

    cfg = geom.config
    I_r = geom.I_r
    n = geom.n
    V0 = cfg.V0
    deriv_u = cfg.potential.derivative

    times = initial.time + dt * np.arange(n_steps + 1)
    theta = np.empty(n_steps + 1)
    L = np.empty(n_steps + 1)
    th, l = initial.theta_r, initial.L_r
    theta[0], L[0] = th, l
    for i in range(1, n_steps + 1):
        k1t, k1l = l / I_r, n * V0 * deriv_u(n * th)
        th2, l2 = th + 0.5 * dt * k1t, l + 0.5 * dt * k1l
        k2t, k2l = l2 / I_r, n * V0 * deriv_u(n * th2)
        th3, l3 = th + 0.5 * dt * k2t, l + 0.5 * dt * k2l
        k3t, k3l = l3 / I_r, n * V0 * deriv_u(n * th3)
        th4, l4 = th + dt * k3t, l + dt * k3l
        k4t, k4l = l4 / I_r, n * V0 * deriv_u(n * th4)
        th += dt * (k1t + 2 * k2t + 2 * k3t + k4t) / 6.0
        l += dt * (k1l + 2 * k2l + 2 * k3l + k4l) / 6.0
        theta[i], L[i] = th, l
    return Trajectory(geom, times, theta, L, initial.L_c)


def classical_kick(geom: DerivedGeometry, state: ClassicalState,
                   l1: float = 0.0, l2: float = 0.0) -> ClassicalState:
    """Instantaneous momentum transfer to either gear (linear in (l1, l2),
    with the same coefficients as the quantum shift)."""
    shift = momenta_to_collective(geom, l1, l2)
    return replace(
        state,
        L_r=state.L_r + float(shift.mu_r),
        L_c=state.L_c + float(shift.mu_c),
    )


def interlock_threshold(geom: DerivedGeometry) -> tuple[float, float]:
    """(critical |L_r|, equivalent single kick on gear 1) above which the
    teeth slip classically."""
    return geom.L_r_threshold, geom.ell_threshold


def _potential_ceiling(geom: DerivedGeometry) -> float:
    """Maximum of the potential energy -V0 u(x): the escape energy."""
    return -geom.config.V0 * geom.config.potential.min_value()


def _hermite(y0: float, d0: float, y1: float, d1: float, h: float):
    """Cubic Hermite interpolant on [0, h] from endpoint values/slopes."""
    def f(s: float) -> float:
        t = s / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    return f


def _simulate_until(geom: DerivedGeometry, state: ClassicalState, event,
                    dt: float) -> tuple[float, ClassicalState, Trajectory]:
    """Integrate in chunks until `event(traj, start_index)` returns a refined
    event time, then return (event_time, state at chunk end, last chunk)."""
    t_chunk = _CHUNK_STEPS * dt
    current = state
    for _ in range(_MAX_CHUNKS):
        traj = simulate_relative(geom, current, t_chunk, dt)
        hit = event(traj)
        if hit is not None:
            return hit, traj.final(), traj
        current = traj.final()
    raise ConvergenceFailure("classical event not found within time budget")


def mean_relative_momentum(geom: DerivedGeometry, state: ClassicalState,
                           dt: float | None = None) -> float:
    """Time-averaged L_r measured from the simulated trajectory.

    Interlocked motion averages over one full libration period (turning
    points located by Hermite-refined zero crossings of L_r); drifting
    motion averages over the traversal of one potential cell.  Either way
    mean L_r = I_r * (net theta advance)/(elapsed time).
    """
    cfg = geom.config
    if dt is None:
        dt = _default_dt(geom, math.inf)
        if math.isinf(dt):
            # free rotor: L_r is conserved
            return state.L_r
    E = _energy(geom, state.theta_r, state.L_r)
    ceiling = _potential_ceiling(geom)
    scale = cfg.V0 + abs(E) + 1.0
    if abs(E - ceiling) < 1e-9 * scale:
        raise ConvergenceFailure("energy indistinguishable from the separatrix")

    if E > ceiling:
        # drifting: time one full cell traversal
        span = 2.0 * math.pi / geom.n
        direction = 1.0 if state.L_r > 0 else -1.0
        target = state.theta_r + direction * span

        def crossed(traj: Trajectory):
            th, times = traj.theta, traj.times
            past = (th - target) * direction >= 0
            idx = np.flatnonzero(past)
            if idx.size == 0:
                return None
            i = int(idx[0])
            if i == 0:
                return float(times[0])
            h = float(times[i] - times[i - 1])
            f = _hermite(float(th[i - 1] - target), float(traj.L[i - 1] / geom.I_r),
                         float(th[i] - target), float(traj.L[i] / geom.I_r), h)
            s = brentq(f, 0.0, h, xtol=1e-15)
            return float(times[i - 1]) + s

        t_cross, _, _ = _simulate_until(geom, state, crossed, dt)
        period = t_cross - state.time
        return geom.I_r * direction * span / period

    # interlocked: find three successive turning points (L_r sign changes)
    turnings: list[tuple[float, float]] = []  # (time, theta at turning)
    tiny = 1e-13 * (abs(state.L_r) + math.sqrt(2.0 * geom.I_r * scale))

    def third_turning(traj: Trajectory):
        th, L, times = traj.theta, traj.L, traj.times
        sign_change = np.flatnonzero(np.sign(L[1:]) * np.sign(L[:-1]) < 0)
        for i in sign_change:
            i = int(i)
            h = float(times[i + 1] - times[i])
            fL = _hermite(float(L[i]), float(geom.n * cfg.V0
                          * cfg.potential.derivative(geom.n * th[i])),
                          float(L[i + 1]), float(geom.n * cfg.V0
                          * cfg.potential.derivative(geom.n * th[i + 1])), h)
            s = brentq(fL, 0.0, h, xtol=1e-15)
            t_turn = float(times[i]) + s
            if turnings and t_turn <= turnings[-1][0] + 10 * dt:
                continue
            fth = _hermite(float(th[i]), float(L[i] / geom.I_r),
                           float(th[i + 1]), float(L[i + 1] / geom.I_r), h)
            turnings.append((t_turn, fth(s)))
            if len(turnings) == 3:
                return t_turn
        return None

    if abs(state.L_r) < tiny and abs(cfg.potential.derivative(geom.n * state.theta_r)) < 1e-15:
        return 0.0  # resting at an equilibrium point
    third_t, _, _ = _simulate_until(geom, state, third_turning, dt)
    (t1, th1), _, (t3, th3) = turnings[:3]
    return geom.I_r * (th3 - th1) / (t3 - t1)


@dataclass(frozen=True)
class ClassicalTransmissionResult:
    """Classical transmission after a kick protocol.

    r and the *_bar fields use the closed-form period average (exact zero
    for interlocked motion, a quadrature for drifting motion); r_measured
    comes from the simulated trajectory average and should agree to ~1e-6.
    """

    r: float | None
    r_measured: float | None
    L1_bar: float
    L2_bar: float
    L_r_bar: float
    L_r_bar_measured: float
    above_threshold: bool
    final_state: ClassicalState


def _drift_average_quadrature(geom: DerivedGeometry, E: float, direction: float) -> float:
    """Closed-form mean L_r of a drifting orbit at energy E: I_r * (cell
    width)/(cell traversal time), the time from the energy integral."""
    cfg = geom.config
    I_r = geom.I_r

    def integrand(x: float) -> float:
        return 1.0 / math.sqrt(2.0 * I_r * (E + cfg.V0 * cfg.potential.value(x)))

    T, err = quad(integrand, 0.0, 2.0 * math.pi, limit=200)
    T *= I_r / geom.n
    if not math.isfinite(T) or T <= 0:
        raise ConvergenceFailure("drift period quadrature failed")
    return direction * I_r * (2.0 * math.pi / geom.n) / T


def classical_transmission(
    config: GearConfig, protocol
) -> ClassicalTransmissionResult:
    """Kick the resting, aligned pair and average momenta over one period.

    `protocol` carries (ell, num_kicks, delta_t, target_gear) exactly as in
    the quantum pipeline; kicks are interleaved with classical evolution.
    """
    geom = derive_geometry(config)
    per = protocol.per_kick()
    num = protocol.resolved_num_kicks()
    l1, l2 = (per, 0.0) if protocol.target_gear == 1 else (0.0, per)

    state = ClassicalState(theta_r=0.0, L_r=0.0, L_c=0.0, time=0.0)
    for i in range(num):
        state = classical_kick(geom, state, l1, l2)
        if i < num - 1 and protocol.delta_t > 0:
            traj = simulate_relative(geom, state, protocol.delta_t)
            state = replace(traj.final(), L_c=state.L_c)

    E = _energy(geom, state.theta_r, state.L_r)
    ceiling = _potential_ceiling(geom)
    above = E > ceiling

    if above:
        direction = 1.0 if state.L_r > 0 else -1.0
        L_r_bar = _drift_average_quadrature(geom, E, direction)
    else:
        L_r_bar = 0.0
    L_r_meas = mean_relative_momentum(geom, state)

    L1_bar, L2_bar = angular_momentum_split(geom, state.L_c, L_r_bar)
    _, L2_meas = angular_momentum_split(geom, state.L_c, L_r_meas)
    ell = protocol.ell
    r = L2_bar / ell if ell else None
    r_meas = L2_meas / ell if ell else None
    return ClassicalTransmissionResult(
        r, r_meas, L1_bar, L2_bar, L_r_bar, L_r_meas, above, state
    )
