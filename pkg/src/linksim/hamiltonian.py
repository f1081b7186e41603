"""Many-body Hamiltonians on plaquette lattices.

All couplings are ordinary frequencies in MHz (the /2pi convention);
dynamics routines multiply by 2pi when forming phases.  Builders return
SparseOperator instances on the basis they were given, so the same code
serves the full space and any Gauss sector.

Microscopic circuit model (bond form):

    H = sum_l (eps + d_eps_l) S^z_l
        - Omega  * sum_{vertex bonds}    S^z S^z
        - Omega' * sum_{plaquette bonds} S^z S^z
        - mu_sq  * sum_{plaquette bonds} (S^+ S^- + h.c.)
        - mu_plus* sum_{vertex bonds}    (S^+ S^- + h.c.)

Effective gauge model:

    H = eps * sum S^z + V * sum_{plaquette bonds} S^z S^z
        - J * sum_plaq (S^+ S^- S^+ S^- + h.c.)
        + W * sum_plaq S^z S^z S^z S^z
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.linalg as la

from .hilbert import SectorBasis, SparseOperator

HERMITICITY_TOL = 1e-12


def _diag_op(basis: SectorBasis, diag: np.ndarray) -> sp.csr_matrix:
    return sp.diags(np.asarray(diag, dtype=complex), format="csr")


def _bond_ising_diag(basis: SectorBasis, bonds) -> np.ndarray:
    sz = basis.sz_table()
    out = np.zeros(basis.dim)
    for (i, j) in bonds:
        out += sz[:, i] * sz[:, j]
    return out


def _hop_matrix(basis: SectorBasis, bonds, weights=None) -> sp.csr_matrix:
    """sum over bonds of w * (S_i^+ S_j^- + S_i^- S_j^+), sector-safe."""
    states = basis.states
    rows, cols, vals = [], [], []
    if weights is None:
        weights = [1.0] * len(bonds)
    for (i, j), w in zip(bonds, weights):
        mask = np.uint64((1 << i) | (1 << j))
        bi = (states >> np.uint64(i)) & 1
        bj = (states >> np.uint64(j)) & 1
        src = np.nonzero(bi != bj)[0]
        targets = states[src] ^ mask
        pos = np.searchsorted(states, targets)
        pos = np.minimum(pos, basis.dim - 1)
        ok = states[pos] == targets
        rows.append(pos[ok])
        cols.append(src[ok])
        vals.append(np.full(int(ok.sum()), w, dtype=complex))
    if not rows:
        return sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    m = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim),
    )
    return m


def ring_exchange_matrix(basis: SectorBasis, plaquette) -> sp.csr_matrix:
    """U + U^dag for one plaquette: flips |udud> <-> |dudu> around the
    cyclic link order, annihilating every other configuration."""
    b, r, t, l = plaquette
    states = basis.states
    mask = np.uint64((1 << b) | (1 << r) | (1 << t) | (1 << l))
    pat1 = np.uint64((1 << b) | (1 << t))     # bottom/top up, right/left down
    pat2 = np.uint64((1 << r) | (1 << l))
    sub = states & mask
    src = np.nonzero((sub == pat1) | (sub == pat2))[0]
    targets = states[src] ^ mask
    pos = np.searchsorted(states, targets)
    pos = np.minimum(pos, basis.dim - 1)
    ok = states[pos] == targets
    m = sp.csr_matrix(
        (np.ones(int(ok.sum()), dtype=complex), (pos[ok], src[ok])),
        shape=(basis.dim, basis.dim),
    )
    return m


def flippable_diag(basis: SectorBasis, plaquette) -> np.ndarray:
    """Indicator diagonal of (U + U^dag)^2: 1 on flippable configs."""
    b, r, t, l = plaquette
    mask = np.uint64((1 << b) | (1 << r) | (1 << t) | (1 << l))
    pat1 = np.uint64((1 << b) | (1 << t))
    pat2 = np.uint64((1 << r) | (1 << l))
    sub = basis.states & mask
    return ((sub == pat1) | (sub == pat2)).astype(float)


def _sz_diag(basis: SectorBasis, eps, detunings=None) -> np.ndarray:
    sz = basis.sz_table()
    eps_l = np.full(basis.lattice.n_links, float(eps))
    if detunings is not None:
        for li, d in dict(detunings).items():
            eps_l[li] += d
    return sz @ eps_l


def _wrap(basis, matrix, hermitian=True) -> SparseOperator:
    op = SparseOperator(basis, matrix.tocsr(), hermitian=hermitian)
    if hermitian and op.hermiticity_defect() > HERMITICITY_TOL:
        raise AssertionError("builder produced a non-Hermitian operator")
    return op


# ---------------------------------------------------------------------------
# model builders


def build_microscopic(basis: SectorBasis, eps, Omega, Omega_prime=None,
                      mu_sq=0.0, mu_plus=0.0, detunings=None) -> SparseOperator:
    """Bond-form circuit Hamiltonian.  For a single plaquette there are
    no vertex bonds and the Omega scale is carried by the plaquette
    bonds, so Omega_prime defaults to Omega."""
    lat = basis.lattice
    if Omega_prime is None:
        Omega_prime = Omega
    diag = _sz_diag(basis, eps, detunings)
    diag = diag - Omega * _bond_ising_diag(basis, lat.vertex_bonds)
    diag = diag - Omega_prime * _bond_ising_diag(basis, lat.plaquette_bonds)
    m = _diag_op(basis, diag)
    if mu_sq:
        m = m - mu_sq * _hop_matrix(basis, lat.plaquette_bonds)
    if mu_plus:
        m = m - mu_plus * _hop_matrix(basis, lat.vertex_bonds)
    return _wrap(basis, m)


def build_effective(basis: SectorBasis, J, V, eps=0.0, W=0.0,
                    detunings=None) -> SparseOperator:
    """Gauge-invariant ring-exchange + Ising (+ optional four-body) model."""
    lat = basis.lattice
    diag = _sz_diag(basis, eps, detunings)
    diag = diag + V * _bond_ising_diag(basis, lat.plaquette_bonds)
    if W:
        sz = basis.sz_table()
        for (b, r, t, l) in lat.plaquettes:
            diag = diag + W * sz[:, b] * sz[:, r] * sz[:, t] * sz[:, l]
    m = _diag_op(basis, diag)
    if J:
        for p in lat.plaquettes:
            m = m - J * ring_exchange_matrix(basis, p)
    return _wrap(basis, m)


def build_rk_effective(basis: SectorBasis, J, lam) -> SparseOperator:
    """Rokhsar-Kivelson form -J * sum_plaq (B - lam * B^2)."""
    lat = basis.lattice
    m = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for p in lat.plaquettes:
        m = m - J * ring_exchange_matrix(basis, p)
        m = m + J * lam * _diag_op(basis, flippable_diag(basis, p))
    return _wrap(basis, m)


def _gauss_square_diag(basis: SectorBasis) -> np.ndarray:
    sz = basis.sz_table()
    out = np.zeros(basis.dim)
    for v in basis.lattice.vertices:
        g = np.zeros(basis.dim)
        for li in v.links:
            g += sz[:, li]
        out += g * g
    return out


def _staggered_plaquette_weights(lattice):
    """Signs +1,-1,+1,-1 around each plaquette's cyclic corner bonds;
    equivalently +1 when the bond's first link is horizontal."""
    weights = []
    for k, (i, _j) in enumerate(lattice.plaquette_bonds):
        weights.append(1.0 if lattice.links[i].orientation == "h" else -1.0)
        del k
    return weights


def build_rk_microscopic(basis: SectorBasis, omega, eps, Omega, V_prime,
                         mu, beta_prime, eta, n_max) -> SparseOperator:
    """Plaquette circuit with a central resonator biasing the coupler
    SQUIDs; truncated oscillator (n_max+1 levels) tensor spin space.

    The Gauss-penalty term is written as -(Omega/2) * sum_m G_m^2 so
    that it coincides, up to constants, with the bond form at Ising
    coefficient Omega used everywhere else (single hop out of a sector
    then costs Omega in the bulk/single-plaquette geometry).
    """
    if n_max < 1:
        raise ValueError("resonator truncation n_max must be >= 1")
    if abs(omega - Omega) < 1e-12:
        raise ValueError("omega = Omega makes the effective theory singular")
    lat = basis.lattice
    sigma = _staggered_plaquette_weights(lat)

    diag = _sz_diag(basis, eps)
    diag = diag - 0.5 * Omega * _gauss_square_diag(basis)
    diag = diag + V_prime * _bond_ising_diag(basis, lat.plaquette_bonds)
    h_spin = _diag_op(basis, diag)
    if mu:
        h_spin = h_spin - mu * _hop_matrix(basis, lat.plaquette_bonds)

    sz = basis.sz_table()
    coup_diag = np.zeros(basis.dim)
    for (i, j), s in zip(lat.plaquette_bonds, sigma):
        coup_diag += s * sz[:, i] * sz[:, j]
    coupling = beta_prime * _diag_op(basis, coup_diag)
    if eta:
        coupling = coupling - eta * _hop_matrix(basis, lat.plaquette_bonds, sigma)

    dim_osc = n_max + 1
    n_op = sp.diags(np.arange(dim_osc, dtype=complex), format="csr")
    b = sp.diags(np.sqrt(np.arange(1, dim_osc, dtype=complex)), 1, format="csr")
    x_op = b + b.conj().T
    eye_osc = sp.identity(dim_osc, dtype=complex, format="csr")
    eye_spin = sp.identity(basis.dim, dtype=complex, format="csr")

    m = omega * sp.kron(n_op, eye_spin) + sp.kron(eye_osc, h_spin) \
        + sp.kron(x_op, coupling)
    op = SparseOperator(basis, m.tocsr(), hermitian=True)
    if op.hermiticity_defect() > HERMITICITY_TOL:
        raise AssertionError("rk_microscopic builder produced a non-Hermitian operator")
    return op


def build_rotating_frame(basis: SectorBasis, eps, Omega, Omega_prime=None,
                         mu_sq=0.0, mu_plus=0.0, detunings=None,
                         omega_d=0.0, drive=None) -> SparseOperator:
    """Microscopic model in the frame rotating at the drive frequency:
    eps -> eps - omega_d plus a static transverse drive term
    sum_l Omega_d_l (S^+_l + S^-_l).  Valid because every interaction
    term conserves total S^z."""
    h = build_microscopic(basis, eps - omega_d, Omega, Omega_prime,
                          mu_sq, mu_plus, detunings)
    m = h.matrix
    if drive:
        n = basis.lattice.n_links
        for li, amp in dict(drive).items():
            if not (0 <= int(li) < n):
                raise ValueError(f"drive on unknown link {li}")
            if amp:
                m = m + amp * _hop_single(basis, int(li))
    return _wrap(basis, m)


def _hop_single(basis: SectorBasis, link: int) -> sp.csr_matrix:
    """S^+_l + S^-_l on the given basis (full basis expected)."""
    states = basis.states
    mask = np.uint64(1 << link)
    targets = states ^ mask
    pos = np.searchsorted(states, targets)
    pos = np.minimum(pos, basis.dim - 1)
    ok = states[pos] == targets
    src = np.nonzero(ok)[0]
    return sp.csr_matrix(
        (np.ones(src.size, dtype=complex), (pos[ok], src)),
        shape=(basis.dim, basis.dim),
    )


# ---------------------------------------------------------------------------
# sector reduction


def effective_sector_hamiltonian(h: SparseOperator, sector: SectorBasis,
                                 full: SectorBasis | None = None) -> np.ndarray:
    """Exact effective Hamiltonian on a Gauss sector by block
    diagonalization (des Cloizeaux construction).

    Eigenvectors of the full operator are matched to the sector by
    largest overlap with the sector subspace; the overlap matrix is
    unitarized by polar decomposition so the result is Hermitian on the
    sector basis.  Captures the perturbative ring exchange to all
    orders in mu/Omega.
    """
    full = full or h.basis
    dense = h.dense()
    energies, vecs = la.eigh(dense)
    idx = np.searchsorted(full.states, sector.states)
    overlap = vecs[idx, :]                     # (sector_dim, full_dim)
    weight = np.sum(np.abs(overlap) ** 2, axis=0)
    chosen = np.argsort(weight)[::-1][: sector.dim]
    chosen = np.sort(chosen)
    w = overlap[:, chosen]                     # (d, d) overlap block
    u, _, vh = la.svd(w)
    q = u @ vh                                 # nearest unitary to w
    h_eff = q @ np.diag(energies[chosen]) @ q.conj().T
    return 0.5 * (h_eff + h_eff.conj().T)


def gauge_commutator_norm(h: SparseOperator) -> float:
    """max over vertices of the largest |[H, G_m]| matrix element."""
    from .hilbert import gauss_generator

    worst = 0.0
    for v in h.basis.lattice.vertices:
        g = gauss_generator(h.basis, v.index).matrix
        c = h.matrix @ g - g @ h.matrix
        if c.nnz:
            worst = max(worst, float(np.abs(c.data).max()))
    return worst
