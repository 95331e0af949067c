"""Brute-force reference on the raw (m1, m2) momentum lattice.

This module deliberately shares nothing with the transformed-coordinate
pipeline beyond the configuration object: the Hamiltonian is assembled
directly from the two-rotor momentum representation (kinetic diagonal, each
cosine harmonic p hopping (m1, m2) -> (m1 + p n1, m2 - p n2)), states are
evolved through a dense eigendecomposition, and kicks shift the amplitude
array.  Agreement with the fast pipeline is a genuine cross-check, not a
tautology.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import ConvergenceFailure, TruncationBreach
from .model import GearConfig

__all__ = [
    "LatticeState",
    "OracleSeries",
    "build_full_hamiltonian",
    "oracle_ground_state",
    "oracle_apply_kick",
    "oracle_observables",
    "oracle_run",
]

_EDGE_TOL = 1e-10


@dataclass
class LatticeState:
    """Wavefunction over the square window |m1|, |m2| <= cutoff.

    amplitudes[i1, i2] is the amplitude of |m1 = i1 - cutoff, m2 = i2 - cutoff>.
    """

    config: GearConfig
    cutoff: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def edge_occupation(self) -> float:
        a = np.abs(self.amplitudes) ** 2
        return float(a[0, :].sum() + a[-1, :].sum()
                     + a[1:-1, 0].sum() + a[1:-1, -1].sum())

    def check_edges(self) -> None:
        occ = self.edge_occupation()
        if occ > _EDGE_TOL:
            raise TruncationBreach(
                f"probability {occ:.3e} at the lattice boundary; enlarge cutoff"
            )


def build_full_hamiltonian(config: GearConfig, cutoff: int) -> sp.csr_matrix:
    """Sparse two-rotor Hamiltonian on the truncated lattice."""
    if cutoff < config.n1 + config.n2:
        raise ValueError(
            f"cutoff {cutoff} too small; need at least n1 + n2 = {config.n1 + config.n2}"
        )
    N = 2 * cutoff + 1
    m = np.arange(-cutoff, cutoff + 1, dtype=float)
    m1g, m2g = np.meshgrid(m, m, indexing="ij")
    diag = (m1g ** 2 / (2.0 * config.I1) + m2g ** 2 / (2.0 * config.I2)
            - config.V0 * config.potential.a0).ravel()

    rows = [np.arange(N * N)]
    cols = [np.arange(N * N)]
    vals = [diag]
    i1g, i2g = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    for p, a_p in config.potential.harmonics():
        if config.V0 * a_p == 0.0:
            continue
        d1, d2 = p * config.n1, -p * config.n2
        mask = ((i1g + d1 >= 0) & (i1g + d1 < N)
                & (i2g + d2 >= 0) & (i2g + d2 < N))
        src = (i1g[mask] * N + i2g[mask])
        tgt = ((i1g[mask] + d1) * N + (i2g[mask] + d2))
        strength = np.full(src.size, -config.V0 * a_p / 2.0)
        rows.extend([tgt, src])
        cols.extend([src, tgt])
        vals.extend([strength, strength])
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(N * N, N * N),
    )
    return H.tocsr()


_DENSE_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
_DENSE_LOCK = threading.Lock()


def _config_key(config: GearConfig, cutoff: int) -> tuple:
    return (config.n1, config.n2, config.I1, config.I2, config.V0,
            config.potential.fourier, cutoff)


def _eigensystem(config: GearConfig, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense eigendecomposition of the full lattice Hamiltonian (cached)."""
    key = _config_key(config, cutoff)
    got = _DENSE_CACHE.get(key)
    if got is None:
        H = build_full_hamiltonian(config, cutoff).toarray()
        w, v = scipy.linalg.eigh(H)
        with _DENSE_LOCK:
            _DENSE_CACHE.setdefault(key, (w, v))
        got = _DENSE_CACHE[key]
    return got


def oracle_ground_state(config: GearConfig, cutoff: int) -> LatticeState:
    """Lowest eigenstate via a sparse solver with a deterministic start."""
    H = build_full_hamiltonian(config, cutoff)
    N = 2 * cutoff + 1
    m = np.arange(-cutoff, cutoff + 1, dtype=float)
    m1g, m2g = np.meshgrid(m, m, indexing="ij")
    v0 = np.exp(-(m1g ** 2 + m2g ** 2) / 4.0).ravel()
    v0 /= np.linalg.norm(v0)
    try:
        w, v = eigsh(H, k=1, which="SA", v0=v0, maxiter=5000)
    except Exception as exc:
        raise ConvergenceFailure(f"sparse ground-state solve failed: {exc}") from exc
    vec = v[:, 0]
    peak = int(np.argmax(np.abs(vec)))
    if vec[peak] < 0:
        vec = -vec
    state = LatticeState(config, cutoff, vec.reshape(N, N).astype(complex))
    state.check_edges()
    return state


def oracle_ground_energy(config: GearConfig, cutoff: int) -> float:
    H = build_full_hamiltonian(config, cutoff)
    N = 2 * cutoff + 1
    v0 = np.ones(N * N) / N
    w = eigsh(H, k=1, which="SA", v0=v0, return_eigenvectors=False, maxiter=5000)
    return float(w[0])


def oracle_apply_kick(state: LatticeState, l1: int = 0, l2: int = 0) -> LatticeState:
    """Shift amplitudes by (l1, l2); anything pushed past the window edge
    must be negligible or the truncation is breached."""
    N = 2 * state.cutoff + 1
    new = np.zeros_like(state.amplitudes)
    src1 = slice(max(0, -l1), min(N, N - l1))
    src2 = slice(max(0, -l2), min(N, N - l2))
    dst1 = slice(max(0, l1), min(N, N + l1))
    dst2 = slice(max(0, l2), min(N, N + l2))
    new[dst1, dst2] = state.amplitudes[src1, src2]
    dropped = state.norm() - float(np.sum(np.abs(new) ** 2))
    if dropped > _EDGE_TOL:
        raise TruncationBreach(
            f"kick ({l1}, {l2}) pushed probability {dropped:.3e} off the lattice"
        )
    out = LatticeState(state.config, state.cutoff, new)
    out.check_edges()
    return out


def oracle_evolve(state: LatticeState, t: float) -> LatticeState:
    """Evolve by the dense spectral propagator."""
    w, v = _eigensystem(state.config, state.cutoff)
    c = state.amplitudes.ravel()
    a = v.T @ c
    c_t = v @ (np.exp(-1j * w * t) * a)
    return LatticeState(state.config, state.cutoff,
                        c_t.reshape(state.amplitudes.shape))


def oracle_observables(state: LatticeState) -> dict[str, float]:
    p = np.abs(state.amplitudes) ** 2
    m = np.arange(-state.cutoff, state.cutoff + 1, dtype=float)
    p1 = p.sum(axis=1)
    p2 = p.sum(axis=0)
    return {
        "L1": float(p1 @ m),
        "L2": float(p2 @ m),
        "L2_sq": float(p2 @ (m * m)),
        "norm": float(p.sum()),
    }


@dataclass(frozen=True)
class OracleSeries:
    """Observables (and gear-2 distributions) on a time grid."""

    times: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    L2_sq: np.ndarray
    norm: np.ndarray
    m_values: np.ndarray      # gear-2 momentum axis
    gear2: np.ndarray         # shape (len(times), len(m_values))


def oracle_run(config: GearConfig, protocol, times, cutoff: int = 24) -> OracleSeries:
    """Ground state -> kick train -> sampled evolution, all on the raw
    lattice.  `protocol` provides ell/num_kicks/delta_t/target_gear with the
    same semantics as the pipeline's KickProtocol (duck-typed: this module
    never imports it)."""
    times = np.asarray(times, dtype=float)
    state = oracle_ground_state(config, cutoff)
    per = protocol.per_kick()
    num = protocol.resolved_num_kicks()
    l1, l2 = (per, 0) if protocol.target_gear == 1 else (0, per)
    for i in range(num):
        state = oracle_apply_kick(state, l1, l2)
        if i < num - 1 and protocol.delta_t > 0:
            state = oracle_evolve(state, protocol.delta_t)

    w, v = _eigensystem(config, cutoff)
    c0 = state.amplitudes.ravel()
    a = v.T @ c0
    N = 2 * cutoff + 1
    m = np.arange(-cutoff, cutoff + 1, dtype=float)
    L1 = np.empty(len(times))
    L2 = np.empty(len(times))
    L2s = np.empty(len(times))
    nrm = np.empty(len(times))
    gear2 = np.empty((len(times), N))
    for i, t in enumerate(times):
        c = v @ (np.exp(-1j * w * t) * a)
        st = LatticeState(config, cutoff, c.reshape(N, N))
        st.check_edges()
        p = np.abs(st.amplitudes) ** 2
        p1 = p.sum(axis=1)
        p2 = p.sum(axis=0)
        L1[i] = p1 @ m
        L2[i] = p2 @ m
        L2s[i] = p2 @ (m * m)
        nrm[i] = p.sum()
        gear2[i] = p2
    return OracleSeries(times, L1, L2, L2s, nrm, m.copy(), gear2)
