"""Banded relative-coordinate Hamiltonian: spectra, symmetries, truncation."""

from fractions import Fraction

import numpy as np
import pytest

from gearsim.errors import UnsupportedInertiaError
from gearsim.model import (
    GearConfig,
    GridSpec,
    allowed_relative_grid,
    derive_geometry,
)
from gearsim.relative import (
    band_structure,
    build_hamiltonian,
    eigendecompose,
    eigensystem_for,
    ground_energy,
    ground_state,
    tail_mass,
    widen,
)

E0_22 = -7.153078342041734   # frozen: 2:2 pair, V0 = 10
E0_42 = -6.137846510268533   # frozen: 4:2 pair, V0 = 10


@pytest.fixture(scope="module")
def es22(geom22):
    return eigensystem_for(geom22, allowed_relative_grid(geom22, Fraction(0)))


def test_eigensystem_orthonormal(es22):
    gram = es22.vectors.T @ es22.vectors
    assert np.max(np.abs(gram - np.eye(es22.dim))) < 1e-10


def test_eigen_residuals(geom22, es22):
    ham = build_hamiltonian(geom22, es22.grid)
    for i in range(es22.dim):
        v = es22.vectors[:, i]
        resid = np.max(np.abs(ham.matvec(v) - es22.energies[i] * v))
        assert resid < 1e-9 * (abs(es22.energies[i]) + geom22.config.V0 + 1.0)


def test_energies_sorted(es22):
    assert np.all(np.diff(es22.energies) >= 0)


def test_sector_purity_is_exact(geom22, es22):
    """The coupling only hops in steps of n, so each eigenvector must live
    entirely on one quasi-momentum class -- with exact zeros elsewhere."""
    n = geom22.n
    mu = es22.grid.values()
    for i in range(es22.dim):
        on_sector = (np.mod(mu - float(es22.labels[i]), n) == 0)
        assert np.all(es22.vectors[~on_sector, i] == 0.0)


def test_reflection_definite_eigenvectors(es22):
    # on a centered window every eigenvector has <mu_r> = 0; tunneling pairs
    # too close for the solver to split must not come back side-localized
    mu = es22.grid.values()
    expect = (es22.vectors**2).T @ mu
    assert np.max(np.abs(expect)) < 1e-10


def test_free_rotor_spectrum():
    geom = derive_geometry(GearConfig(2, 2, V0=0.0))
    grid = allowed_relative_grid(geom, Fraction(0), half_width=8)
    es = eigensystem_for(geom, grid)
    mu = grid.values()
    assert es.energies == pytest.approx(np.sort(mu**2 / (2.0 * geom.I_r)), abs=1e-12)
    # each eigenvector lives on the +-mu shell of its energy (the exactly
    # degenerate pairs come back as symmetric/antisymmetric combinations)
    for i in range(es.dim):
        support = np.abs(mu[es.vectors[:, i] != 0.0])
        assert support.size in (1, 2)
        assert np.all(support == support[0])
        assert support[0] ** 2 / (2.0 * geom.I_r) == pytest.approx(es.energies[i], abs=1e-12)


def test_ground_state_frozen_energy(geom22, geom42):
    assert ground_energy(geom22) == pytest.approx(E0_22, abs=1e-12)
    assert ground_energy(geom42) == pytest.approx(E0_42, abs=1e-12)


def test_ground_state_properties(geom22):
    state = ground_state(geom22)
    assert state.mu_c == 0
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
    assert tail_mass(state.amplitudes) < 1e-12
    # bound well below the free ground state, above the well bottom
    e0 = ground_energy(geom22)
    assert -geom22.config.V0 < e0 < 0.0
    # harmonic estimate around the well bottom is good to a few percent
    harmonic = -geom22.config.V0 + 0.5 * geom22.omega0_harmonic
    assert abs(e0 - harmonic) < 0.1 * geom22.config.V0


def test_ground_energy_truncation_stable(geom22):
    grid = allowed_relative_grid(geom22, Fraction(0), half_width=24)
    wide = allowed_relative_grid(geom22, Fraction(0), half_width=48)
    e_narrow = eigensystem_for(geom22, grid).energies[0]
    e_wide = eigensystem_for(geom22, wide).energies[0]
    assert abs(e_narrow - e_wide) < 1e-10


def test_deeper_well_binds_harder():
    e_shallow = ground_energy(derive_geometry(GearConfig(2, 2, V0=5.0)))
    e_deep = ground_energy(derive_geometry(GearConfig(2, 2, V0=40.0)))
    assert e_deep < e_shallow


def test_eigensystem_cache_returns_same_object(geom22):
    grid = allowed_relative_grid(geom22, Fraction(0))
    assert eigensystem_for(geom22, grid) is eigensystem_for(geom22, grid)


def test_unequal_inertia_unsupported():
    geom = derive_geometry(GearConfig(2, 2, I1=1.0, I2=2.0, V0=10.0))
    with pytest.raises(UnsupportedInertiaError):
        build_hamiltonian(geom, allowed_relative_grid(geom, Fraction(0)))


def test_window_must_cover_coupling(geom22):
    with pytest.raises(ValueError):
        build_hamiltonian(geom22, GridSpec(Fraction(0), Fraction(2), 1))


def test_widen_embeds_amplitudes(geom22):
    state = ground_state(geom22)
    wide = widen(state)
    assert wide.grid.half_width > state.grid.half_width
    assert wide.norm() == pytest.approx(1.0, abs=1e-12)
    j0 = wide.grid.index_of(state.grid.value(0))
    hw = state.grid.half_width
    inner = slice(j0 - hw + wide.grid.half_width, j0 + hw + 1 + wide.grid.half_width)
    assert np.allclose(wide.amplitudes[inner], state.amplitudes, atol=0)


def test_band_structure_33():
    geom = derive_geometry(GearConfig(3, 3, V0=20.0))
    bs = band_structure(geom, 3)
    ks = [Fraction(k) for k in bs.ks]
    assert sorted(ks) == [Fraction(-2), Fraction(-1), Fraction(0),
                          Fraction(1), Fraction(2), Fraction(3)]
    # time-reversal symmetry of the band energies, exact to roundoff
    for band in range(bs.num_bands):
        e = {k: bs.energies[band, i] for i, k in enumerate(ks)}
        for k in (Fraction(1), Fraction(2)):
            assert e[k] == pytest.approx(e[-k], abs=1e-12)
    # bands are ordered and dispersion grows with the band index
    assert np.all(np.diff(bs.energies, axis=0) > 0)
    width = bs.energies.max(axis=1) - bs.energies.min(axis=1)
    assert width[0] < width[1] < width[2]


def test_band_structure_respects_requested_count(geom22):
    bs = band_structure(geom22, 5)
    assert bs.num_bands == 5
    assert bs.energies.shape[0] == 5
