"""Kicks, time evolution, long-time averages, revivals."""

import math
from fractions import Fraction

import numpy as np
import pytest

from gearsim.dynamics import (
    KickProtocol,
    apply_kick,
    eigen_occupations,
    evolve,
    kick_shift,
    long_time_average,
    multi_kick,
    observables,
    revival_phase_check,
    revival_phase_defect,
    run_protocol,
    time_series,
    transmission_ratio,
    windowed_average_L2,
)
from gearsim.relative import ground_state

# frozen sub-threshold transmissions, 2:2 pair at V0 = 10
R_ODD = {1: 0.4598306368273201, 3: 0.4003615607688080, 5: 0.2872076356616948}


# ------------------------------------------------------------------ kicks ---

def test_kick_shift_worked_examples(geom22, geom42):
    ks = kick_shift(geom22, 6, 0)
    assert (ks.dmu_c, ks.dmu_r, ks.dk) == (6, 6, 2)
    assert ks.enhanced
    ks = kick_shift(geom42, 5, 0)
    assert (ks.dmu_c, ks.dmu_r, ks.dk) == (3, 6, 0)
    assert ks.enhanced
    assert not kick_shift(geom22, 1, 0).enhanced
    assert not kick_shift(geom42, 1, 0).enhanced


def test_kick_shift_additive(geom42):
    for la, lb in ((1, 1), (2, 3), (5, -2)):
        a, b = kick_shift(geom42, la, 0), kick_shift(geom42, lb, 0)
        both = kick_shift(geom42, la + lb, 0)
        assert both.dmu_c == a.dmu_c + b.dmu_c
        assert both.dmu_r == a.dmu_r + b.dmu_r


def test_kick_adds_momentum_exactly(geom22):
    state = apply_kick(ground_state(geom22), l1=6)
    obs = observables(state)
    assert obs.L1 == pytest.approx(6.0, abs=1e-12)
    assert obs.L2 == pytest.approx(0.0, abs=1e-12)
    assert obs.norm == pytest.approx(1.0, abs=1e-12)


def test_kick_on_second_gear(geom22):
    state = apply_kick(ground_state(geom22), l2=4)
    obs = observables(state)
    assert obs.L1 == pytest.approx(0.0, abs=1e-12)
    assert obs.L2 == pytest.approx(4.0, abs=1e-12)


def test_protocol_kick_count(geom22):
    assert KickProtocol(ell=6).resolved_num_kicks() == 6
    assert KickProtocol(ell=-4).resolved_num_kicks() == 4
    assert KickProtocol(ell=6, num_kicks=2).per_kick() == 3
    with pytest.raises(ValueError):
        KickProtocol(ell=5, num_kicks=2)  # 5 not divisible by 2
    state = run_protocol(geom22, KickProtocol(ell=6, num_kicks=1))
    assert observables(state).L1 == pytest.approx(6.0, abs=1e-12)


def test_multi_kick_requires_unit_kicks(cfg22):
    with pytest.raises(ValueError):
        multi_kick(cfg22, KickProtocol(ell=6, num_kicks=3, delta_t=1.0))


# -------------------------------------------------------------- evolution ---

def test_evolution_conserves_norm_energy_and_drive(geom22):
    state = apply_kick(ground_state(geom22), l1=3)
    e0 = observables(state).energy_r
    drive = []
    for t in (0.0, 0.7, 3.1, 12.0):
        obs = observables(evolve(state, t))
        assert obs.norm == pytest.approx(1.0, abs=1e-13)
        assert obs.energy_r == pytest.approx(e0, abs=1e-11)
        drive.append(geom22.config.n2 * obs.L1 + geom22.config.n1 * obs.L2)
    assert np.ptp(drive) < 1e-11


def test_evolve_zero_is_identity(geom22):
    state = apply_kick(ground_state(geom22), l1=2)
    again = evolve(state, 0.0)
    assert np.allclose(again.amplitudes, state.amplitudes, atol=1e-14)


def test_evolve_composes(geom22):
    state = apply_kick(ground_state(geom22), l1=3)
    one = evolve(state, 5.3)
    two = evolve(evolve(state, 2.1), 3.2)
    # compare up to the common phase convention: overlap must be unity
    overlap = abs(np.vdot(one.amplitudes, two.amplitudes))
    assert overlap == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(one.amplitudes - two.amplitudes)) < 1e-10


def test_time_series_matches_pointwise(geom22):
    state = apply_kick(ground_state(geom22), l1=2)
    times = np.array([0.0, 1.5, 4.0])
    ts = time_series(state, times)
    for i, t in enumerate(times):
        obs = observables(evolve(state, t))
        assert ts.L1[i] == pytest.approx(obs.L1, abs=1e-12)
        assert ts.L2[i] == pytest.approx(obs.L2, abs=1e-12)
        assert ts.L2_sq[i] == pytest.approx(obs.L2_sq, abs=1e-12)


# ------------------------------------------------------ long-time averages ---

def test_resonant_kick_transmits_exactly_half(cfg22):
    res = transmission_ratio(cfg22, KickProtocol(ell=4, num_kicks=1))
    assert abs(res.r - 0.5) < 1e-12
    assert res.L1_bar + res.L2_bar == pytest.approx(4.0, abs=1e-12)


@pytest.mark.parametrize("ell", sorted(R_ODD))
def test_tunneling_transmission_frozen(cfg22, ell):
    res = transmission_ratio(cfg22, KickProtocol(ell=ell, num_kicks=1))
    assert res.r == pytest.approx(R_ODD[ell], abs=1e-12)
    assert res.r < 0.5


def test_occupations_form_a_distribution(geom22):
    state = run_protocol(geom22, KickProtocol(ell=6, num_kicks=1))
    es, occ = eigen_occupations(state)
    assert np.all(occ >= 0.0)
    assert occ.sum() == pytest.approx(1.0, abs=1e-12)
    assert es.dim == occ.size


def test_windowed_average_approaches_diagonal_ensemble(cfg22, geom22):
    res = transmission_ratio(cfg22, KickProtocol(ell=6, num_kicks=1))
    state = run_protocol(geom22, KickProtocol(ell=6, num_kicks=1))
    # the window must out-last every occupied beat, not just the dominant one
    devs = [abs(windowed_average_L2(state, T) - res.L2_bar) for T in (7e2, 5e4)]
    assert devs[1] < devs[0]
    assert devs[1] < 0.01 * res.L2_bar


def test_period_estimate_matches_beat(cfg22):
    res = transmission_ratio(cfg22, KickProtocol(ell=8, num_kicks=1))
    assert res.period_estimate == pytest.approx(194.0, rel=0.05)


# ---------------------------------------------------------------- revivals ---

def test_revival_phases_exact_on_resonance(geom22, geom42):
    # a kicked gear pair rephases exactly after tau_c; the phase defect is
    # computed in exact arithmetic and must vanish for physical momenta
    assert revival_phase_defect(geom22, Fraction(7)) == 0.0
    assert revival_phase_defect(geom42, Fraction(3)) == 0.0
    mu_cs = [Fraction(m) for m in range(-6, 7)]
    assert revival_phase_check(geom22, mu_cs)


def test_revival_phase_defect_rejects_off_lattice(geom42):
    from gearsim.errors import NonPhysicalError
    with pytest.raises(NonPhysicalError):
        revival_phase_defect(geom42, Fraction(1, 2))
