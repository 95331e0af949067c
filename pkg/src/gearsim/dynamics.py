"""Kick protocols, spectral time evolution, and long-time averages.

Evolution is exact within the truncated window: states are expanded in the
eigenbasis of the banded relative Hamiltonian and phases applied in closed
form.  Every returned state is checked against the tail-occupation bound and
the window is regrown when a kick or long evolution pushes probability
toward an edge.

The infinite-time average of any observable is its diagonal-ensemble value.
Degenerate levels are handled by projecting onto each level before taking
expectation values, so the result never depends on the arbitrary basis the
eigensolver picked inside a degenerate subspace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InternalInconsistency, NonPhysicalError
from .model import (
    DerivedGeometry,
    GearConfig,
    GridSpec,
    angular_momentum_split,
    bloch_label,
    derive_geometry,
    is_physical_mu_c,
    momenta_to_collective,
)
from .relative import (
    MARGIN_STEPS,
    MIN_HALF_WIDTH,
    SUPPORT_EPS,
    TAIL_BOUND,
    EigenSystem,
    RotorState,
    build_hamiltonian,
    eigensystem_for,
    ground_state,
    widen,
)

__all__ = [
    "KickProtocol",
    "KickShift",
    "Observables",
    "TimeSeries",
    "TransmissionResult",
    "kick_shift",
    "apply_kick",
    "evolve",
    "evolved_states",
    "observables",
    "time_series",
    "long_time_average",
    "run_protocol",
    "transmission_ratio",
    "multi_kick",
    "windowed_average_L2",
    "revival_phase_defect",
    "revival_phase_check",
]


@dataclass(frozen=True)
class KickProtocol:
    """A total angular-momentum transfer ell delivered as a train of equal
    kicks separated by free evolution delta_t.

    num_kicks=None means |ell| unit kicks (the multi-kick default); the
    total must divide evenly among the kicks.  target_gear selects which
    rotor is struck.
    """

    ell: int
    num_kicks: int | None = None
    delta_t: float = 0.0
    target_gear: int = 1

    def __post_init__(self):
        if not isinstance(self.ell, int) or isinstance(self.ell, bool):
            raise ValueError("ell must be an integer")
        if self.num_kicks is not None:
            if not isinstance(self.num_kicks, int) or self.num_kicks < 1:
                raise ValueError("num_kicks must be a positive integer")
            if self.ell % self.num_kicks != 0:
                raise ValueError(
                    f"ell={self.ell} does not divide into {self.num_kicks} equal kicks"
                )
        if not self.delta_t >= 0:
            raise ValueError("delta_t must be >= 0")
        if self.target_gear not in (1, 2):
            raise ValueError("target_gear must be 1 or 2")

    def resolved_num_kicks(self) -> int:
        if self.num_kicks is not None:
            return self.num_kicks
        return max(1, abs(self.ell))

    def per_kick(self) -> int:
        return self.ell // self.resolved_num_kicks()

    def kick_momenta(self) -> tuple[int, int]:
        """(l1, l2) of a single kick in the train."""
        per = self.per_kick()
        return (per, 0) if self.target_gear == 1 else (0, per)


@dataclass(frozen=True)
class KickShift:
    """Decomposition of a kick's relative-momentum transfer.

    dmu_r = dm_r * n + dk with the residue dk reduced into (-n/2, n/2].
    A kick with dk in {0, n/2} keeps (or parity-flips) the Bloch sector,
    which is the resonant-transmission condition.
    """

    dmu_c: Fraction
    dmu_r: Fraction
    dm_r: int
    dk: Fraction
    enhanced: bool


def kick_shift(geom: DerivedGeometry, l1: int, l2: int) -> KickShift:
    """How a momentum kick (l1, l2) moves the collective coordinates."""
    shift = momenta_to_collective(geom, l1, l2)
    dk = bloch_label(geom, shift.mu_r)
    dm_r = (shift.mu_r - dk) / geom.n
    assert dm_r.denominator == 1
    enhanced = dk == 0 or 2 * dk == geom.n
    return KickShift(shift.mu_c, shift.mu_r, int(dm_r), dk, enhanced)


def _refit_grid(state: RotorState) -> RotorState:
    """Re-center the window on the canonical offset and resize it to the
    occupied support plus margin.  Drops only amplitudes below SUPPORT_EPS."""
    grid = state.grid
    s = grid.spacing
    offset = grid.mu_r_offset % s
    if offset > s / 2:
        offset -= s
    shift_steps = (grid.mu_r_offset - offset) / s
    assert shift_steps.denominator == 1
    k = int(shift_steps)

    J = grid.half_width
    p = np.abs(state.amplitudes) ** 2
    occupied = np.flatnonzero(p > SUPPORT_EPS)
    if occupied.size == 0:
        occupied = np.array([J])
    # occupied extent in the re-centered index convention
    extent = int(np.max(np.abs(occupied - J + k)))
    new_J = max(MIN_HALF_WIDTH, extent + MARGIN_STEPS)
    new_grid = GridSpec(offset, s, new_J)
    amps = np.zeros(new_grid.size, dtype=complex)
    for i in occupied:
        j_new = int(i) - J + k
        if abs(j_new) <= new_J:
            amps[j_new + new_J] = state.amplitudes[i]
    return RotorState(state.geom, state.mu_c, new_grid, amps, state.com_phase)


def apply_kick(state: RotorState, l1: int = 0, l2: int = 0) -> RotorState:
    """Instantaneous momentum kick: every basis state (m1, m2) shifts to
    (m1 + l1, m2 + l2).  The relative window is re-centered afterwards so
    that it always covers the parity partner of the occupied support.

    The (dmu_c, dmu_r, dm_r, dk) bookkeeping of the same kick is available
    from `kick_shift`.
    """
    for name, l in (("l1", l1), ("l2", l2)):
        if not isinstance(l, int) or isinstance(l, bool):
            raise ValueError(f"{name} must be an integer")
    shift = momenta_to_collective(state.geom, l1, l2)
    shifted = RotorState(
        state.geom,
        state.mu_c + shift.mu_c,
        GridSpec(state.grid.mu_r_offset + shift.mu_r,
                 state.grid.spacing, state.grid.half_width),
        state.amplitudes,
        state.com_phase,
    )
    return _refit_grid(shifted)


def _weighted_eigentail(es: EigenSystem, state: RotorState) -> float:
    """Upper bound on the window-edge occupation of the state at *any* time:
    (sum_i |a_i| * ||tail of v_i||)^2 by the triangle inequality."""
    a = es.vectors.T @ state.amplitudes
    size = es.dim
    per_side = max(1, math.ceil(0.5 * 0.10 * size))
    tails = np.sqrt(
        np.sum(es.vectors[:per_side, :] ** 2, axis=0)
        + np.sum(es.vectors[-per_side:, :] ** 2, axis=0)
    )
    return float(np.sum(np.abs(a) * tails)) ** 2


def _ensure_window(state: RotorState) -> tuple[RotorState, EigenSystem]:
    """Grow the window until evolution can never push visible probability
    into its edges."""
    while True:
        es = eigensystem_for(state.geom, state.grid)
        if _weighted_eigentail(es, state) < TAIL_BOUND:
            return state, es
        state = widen(state)


def evolve(state: RotorState, t: float) -> RotorState:
    """Free evolution for time t under the relative Hamiltonian, plus the
    closed-form center-of-mass phase."""
    if not t >= 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return state.copy()
    state, es = _ensure_window(state)
    a = es.vectors.T @ state.amplitudes
    c = es.vectors @ (np.exp(-1j * es.energies * t) * a)
    phase = state.com_phase - float(state.mu_c) ** 2 * t / (2.0 * state.geom.I_c)
    return RotorState(state.geom, state.mu_c, state.grid, c, phase)


def evolved_states(state: RotorState, times) -> list[RotorState]:
    """The state at each requested time, sharing one eigendecomposition."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    state, es = _ensure_window(state)
    a = es.vectors.T @ state.amplitudes
    out = []
    for t in times:
        c = es.vectors @ (np.exp(-1j * es.energies * t) * a)
        phase = state.com_phase - float(state.mu_c) ** 2 * t / (2.0 * state.geom.I_c)
        out.append(RotorState(state.geom, state.mu_c, state.grid, c, phase))
    return out


@dataclass(frozen=True)
class Observables:
    """One-time expectation values of a state."""

    L1: float
    L2: float
    L2_sq: float
    energy_r: float
    norm: float


def observables(state: RotorState) -> Observables:
    """Expectation values, computed two redundant ways.

    The per-gear momenta come from the exact integer (m1, m2) behind each
    grid point and, independently, from the collective split formula; the
    two must agree to 1e-12 or the state bookkeeping is corrupt.
    """
    p = np.abs(state.amplitudes) ** 2
    norm = float(p.sum())
    m1, m2 = state.momentum_pairs()
    L1 = float(p @ m1)
    L2 = float(p @ m2)
    L2_sq = float(p @ (m2.astype(float) ** 2))

    mu = state.grid.values()
    L_r = float(p @ mu)
    L1_split, L2_split = angular_momentum_split(
        state.geom, norm * float(state.mu_c), L_r
    )
    for a, b in ((L1, L1_split), (L2, L2_split)):
        if abs(a - b) > 1e-12 * max(1.0, abs(a)):
            raise InternalInconsistency(
                f"momentum split mismatch: {a!r} vs {b!r}"
            )

    ham = build_hamiltonian(state.geom, state.grid)
    energy = float(np.real(np.vdot(state.amplitudes, ham.matvec(state.amplitudes))))
    return Observables(L1, L2, L2_sq, energy, norm)


@dataclass(frozen=True)
class TimeSeries:
    """Observables sampled on a time grid."""

    times: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    L2_sq: np.ndarray
    energy_r: np.ndarray
    norm: np.ndarray


def time_series(state: RotorState, times) -> TimeSeries:
    """Evolve and record observables at each time (one eigendecomposition)."""
    times = np.asarray(times, dtype=float)
    states = evolved_states(state, times)
    m1, m2 = states[0].momentum_pairs()
    m1 = m1.astype(float)
    m2 = m2.astype(float)
    ham = build_hamiltonian(state.geom, states[0].grid)
    L1 = np.empty(len(times))
    L2 = np.empty(len(times))
    L2s = np.empty(len(times))
    en = np.empty(len(times))
    norm = np.empty(len(times))
    for i, st in enumerate(states):
        p = np.abs(st.amplitudes) ** 2
        L1[i] = p @ m1
        L2[i] = p @ m2
        L2s[i] = p @ (m2 * m2)
        en[i] = np.real(np.vdot(st.amplitudes, ham.matvec(st.amplitudes)))
        norm[i] = p.sum()
    return TimeSeries(times, L1, L2, L2s, en, norm)


def eigen_occupations(state: RotorState) -> tuple[EigenSystem, np.ndarray]:
    """Eigensystem of the state's (adequately sized) window and the state's
    probability in each eigenstate."""
    state, es = _ensure_window(state)
    a = es.vectors.T @ state.amplitudes
    return es, np.abs(a) ** 2


@dataclass(frozen=True)
class TransmissionResult:
    """Infinite-time averages after a kick protocol.

    r is the transmission ratio <L2>_bar / ell, or None when ell == 0.
    occupations are the eigenstate probabilities of the averaged state and
    period_estimate is 2*pi over the gap between the two most occupied
    eigenstates (the dominant beat in the transient).
    """

    r: float | None
    L1_bar: float
    L2_bar: float
    L_r_bar: float
    occupations: np.ndarray
    period_estimate: float


def long_time_average(state: RotorState, ell: int | None = None) -> TransmissionResult:
    """Diagonal-ensemble averages of the per-gear momenta.

    <L_r>_bar = sum_i p_i <v_i|L_r|v_i> over the eigenbasis.  Any nonzero
    splitting dephases at infinite time, so levels are never merged; the
    eigenbasis is already symmetry-resolved (sector-pure, and
    reflection-definite inside near-degenerate blocks), which pins down
    the only bases the per-state sum could have been sensitive to.
    Exactly degenerate pairs live in different sectors, where L_r has no
    cross matrix elements, so they contribute the same either way.
    """
    state, es = _ensure_window(state)
    a = es.vectors.T @ state.amplitudes
    occ = np.abs(a) ** 2
    mu = state.grid.values()
    per_state = (np.abs(es.vectors) ** 2 * mu[:, None]).sum(axis=0)
    L_r_bar = float(occ @ per_state)
    L1_bar, L2_bar = angular_momentum_split(state.geom, float(state.mu_c), L_r_bar)

    order = np.lexsort((es.energies, -occ))
    top, second = order[0], order[1] if len(order) > 1 else order[0]
    gap = abs(es.energies[top] - es.energies[second])
    if occ[second] < 1e-14 or gap == 0.0:
        period = math.inf
    else:
        period = 2.0 * math.pi / gap

    r = None
    if ell:
        r = L2_bar / ell
    return TransmissionResult(r, L1_bar, L2_bar, L_r_bar, occ, period)


def run_protocol(geom: DerivedGeometry, protocol: KickProtocol) -> RotorState:
    """Ground state, then the kick train with free evolution between kicks.
    Time is measured from the final kick."""
    state = ground_state(geom)
    l1, l2 = protocol.kick_momenta()
    num = protocol.resolved_num_kicks()
    for i in range(num):
        state = apply_kick(state, l1, l2)
        if i < num - 1 and protocol.delta_t > 0:
            state = evolve(state, protocol.delta_t)
    return state


def transmission_ratio(config: GearConfig, protocol: KickProtocol) -> TransmissionResult:
    """Long-time transmission after a kick protocol from the ground state."""
    geom = derive_geometry(config)
    state = run_protocol(geom, protocol)
    return long_time_average(state, ell=protocol.ell)


def multi_kick(config: GearConfig, protocol: KickProtocol) -> TransmissionResult:
    """Transmission for a train of unit kicks (|per-kick| must be 1)."""
    if abs(protocol.per_kick()) != 1:
        raise ValueError("multi_kick requires unit kicks; adjust num_kicks")
    return transmission_ratio(config, protocol)


def windowed_average_L2(state: RotorState, T: float) -> float:
    """(1/T) integral of <L2(t)> dt over [0, T], evaluated in closed form on
    the eigenbasis (the kernel for an energy gap w is (e^{iwT}-1)/(iwT))."""
    if not T > 0:
        raise ValueError("T must be > 0")
    state, es = _ensure_window(state)
    a = es.vectors.T @ state.amplitudes
    _, m2 = state.momentum_pairs()
    M = es.vectors.T @ (m2[:, None].astype(float) * es.vectors)
    w = np.subtract.outer(es.energies, es.energies)  # E_i - E_j
    x = w * T
    kernel = np.where(
        np.abs(x) < 1e-12,
        1.0,
        (np.exp(1j * x) - 1.0) / np.where(np.abs(x) < 1e-12, 1.0, 1j * x),
    )
    val = np.conj(a)[:, None] * a[None, :] * M * kernel
    return float(np.real(val.sum()))


def revival_phase_defect(geom: DerivedGeometry, mu_c) -> float:
    """Distance of the center-of-mass phase at t = tau_c from a multiple of
    2*pi, in radians.  Evaluated with exact rationals: the phase over 2*pi
    equals (mu_c * nu)^2, which is an exact integer for physical mu_c."""
    if not is_physical_mu_c(geom, mu_c):
        raise NonPhysicalError(f"mu_c={mu_c} is not realizable by integer momenta")
    winding = (Fraction(mu_c) * geom.nu) ** 2
    frac = winding - round(winding)
    return abs(float(frac)) * 2.0 * math.pi


def revival_phase_check(geom: DerivedGeometry, mu_c_values, tol: float = 1e-10) -> bool:
    """True when every listed mu_c revives at tau_c within tol radians."""
    return all(revival_phase_defect(geom, mu_c) < tol for mu_c in mu_c_values)
