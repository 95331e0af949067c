"""Independent raw-lattice reference: it must agree with the fast pipeline
while sharing none of its machinery."""

import numpy as np
import pytest

from gearsim.dynamics import KickProtocol, evolve, observables, run_protocol
from gearsim.errors import TruncationBreach
from gearsim.model import GearConfig, derive_geometry
from gearsim.oracle import (
    build_full_hamiltonian,
    oracle_apply_kick,
    oracle_evolve,
    oracle_ground_energy,
    oracle_ground_state,
    oracle_observables,
    oracle_run,
)
from gearsim.relative import ground_energy, ground_state

CUTOFF = 16


def test_hamiltonian_is_hermitian(cfg22):
    H = build_full_hamiltonian(cfg22, 10)
    assert (H - H.T).nnz == 0


def test_hamiltonian_couples_only_tooth_multiples(cfg42):
    H = build_full_hamiltonian(cfg42, 8).tocoo()
    dim = 2 * 8 + 1
    for i, j in zip(H.row, H.col):
        m1_i, m2_i = divmod(int(i), dim)
        m1_j, m2_j = divmod(int(j), dim)
        d1, d2 = m1_i - m1_j, m2_i - m2_j
        if (d1, d2) == (0, 0):
            continue
        # one potential quantum moves n1 units of gear 1 against n2 of gear 2
        assert d1 % 4 == 0 and d2 == -d1 // 4 * 2


def test_ground_energy_matches_banded_solver(cfg22, geom22, cfg42, geom42):
    assert oracle_ground_energy(cfg22, CUTOFF) == pytest.approx(
        ground_energy(geom22), abs=1e-8)
    assert oracle_ground_energy(cfg42, CUTOFF) == pytest.approx(
        ground_energy(geom42), abs=1e-8)


def test_ground_state_is_stationary(cfg22):
    gs = oracle_ground_state(cfg22, CUTOFF)
    obs = oracle_observables(gs)
    assert obs["norm"] == pytest.approx(1.0, abs=1e-10)
    assert obs["L1"] == pytest.approx(0.0, abs=1e-10)
    assert obs["L2"] == pytest.approx(0.0, abs=1e-10)
    later = oracle_observables(oracle_evolve(gs, 3.0))
    assert later["L2_sq"] == pytest.approx(obs["L2_sq"], abs=1e-10)


def test_evolution_is_unitary_and_conserves_drive(cfg22):
    state = oracle_apply_kick(oracle_ground_state(cfg22, CUTOFF), l1=2)
    drive = []
    for t in (0.0, 1.3, 4.0):
        obs = oracle_observables(oracle_evolve(state, t))
        assert obs["norm"] == pytest.approx(1.0, abs=1e-12)
        drive.append(cfg22.n2 * obs["L1"] + cfg22.n1 * obs["L2"])
    assert np.ptp(drive) < 1e-10


def test_kick_shifts_momentum_exactly(cfg22):
    state = oracle_apply_kick(oracle_ground_state(cfg22, CUTOFF), l1=3, l2=-1)
    obs = oracle_observables(state)
    assert obs["L1"] == pytest.approx(3.0, abs=1e-10)
    assert obs["L2"] == pytest.approx(-1.0, abs=1e-10)


def test_small_lattice_breaches_truncation(cfg22):
    with pytest.raises(TruncationBreach):
        oracle_ground_state(cfg22, 8)


def test_kick_near_edge_breaches_truncation(cfg22):
    state = oracle_ground_state(cfg22, CUTOFF)
    with pytest.raises(TruncationBreach):
        for _ in range(4):
            state = oracle_apply_kick(state, l1=CUTOFF // 2)


def test_agrees_with_banded_pipeline(cfg22, geom22):
    times = np.array([0.0, 2.5, 5.0])
    series = oracle_run(cfg22, KickProtocol(ell=1, num_kicks=1), times, cutoff=CUTOFF)
    state = run_protocol(geom22, KickProtocol(ell=1, num_kicks=1))
    for i, t in enumerate(times):
        obs = observables(evolve(state, t))
        assert series.L1[i] == pytest.approx(obs.L1, abs=1e-8)
        assert series.L2[i] == pytest.approx(obs.L2, abs=1e-8)
        assert series.L2_sq[i] == pytest.approx(obs.L2_sq, abs=1e-8)


def test_gear2_marginal_is_a_distribution(cfg22):
    times = np.array([0.0, 1.0])
    series = oracle_run(cfg22, KickProtocol(ell=1, num_kicks=1), times, cutoff=CUTOFF)
    for snapshot in series.gear2:
        probs = np.asarray(snapshot)
        assert np.all(probs >= -1e-14)
        assert probs.sum() == pytest.approx(1.0, abs=1e-10)
