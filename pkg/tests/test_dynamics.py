import numpy as np
import pytest
import scipy.linalg as la

from linksim import dynamics as dyn
from linksim import hamiltonian as ham
from linksim import hilbert as hil

TWO_PI = 2.0 * np.pi

# index 0 = spin down, index 1 = spin up (package bit convention)
SM = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)   # qubit lowering
SP = SM.T.conj()


# ---------------------------------------------------------------------------
# ground states


def test_ground_state_two_plaquettes_product(sector2):
    h = ham.build_effective(sector2, J=0.0, V=30.0)
    energy, psi, info = dyn.ground_state(h)
    assert energy == pytest.approx(-60.0)
    a_index = int(np.argmin(np.diag(h.dense()).real))
    assert abs(psi[a_index]) ** 2 >= 1.0 - 1e-10
    assert not info["degenerate"]


def test_ground_state_large_ring_superposition(sector2):
    h = ham.build_effective(sector2, J=-3000.0, V=30.0)
    _, psi, _ = dyn.ground_state(h)
    weights = np.abs(psi) ** 2
    assert np.all(weights >= 0.05)


def test_ground_state_single_plaquette_symmetric(sector1):
    J = 2.5
    h = ham.build_effective(sector1, J=J, V=0.0)
    energy, psi, _ = dyn.ground_state(h)
    assert energy == pytest.approx(-J)
    target = np.array([1.0, 1.0]) / np.sqrt(2)
    assert abs(np.vdot(target, psi)) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_ground_state_rejects_nonhermitian():
    m = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(dyn.DynamicsError):
        dyn.ground_state(m)


def test_ground_state_flags_degeneracy():
    m = np.diag([0.0, 0.0, 1.0]).astype(complex)
    _, _, info = dyn.ground_state(m)
    assert info["degenerate"]


def test_ground_state_sparse_path():
    rng = np.random.default_rng(5)
    n = 700
    diag = rng.uniform(0, 10, n)
    import scipy.sparse as sp
    m = sp.diags(diag).tocsr().astype(complex)
    e0, psi, info = dyn.ground_state(m)
    assert e0 == pytest.approx(diag.min(), abs=1e-8)
    assert info["residual"] < 1e-7


# ---------------------------------------------------------------------------
# unitary evolution


def test_rabi_oscillation_single_plaquette(sector1):
    """|<psi0|psi(t)>|^2 = cos^2(2 pi J t); full transfer at 1/(4J)."""
    J = 1.96
    h = ham.build_effective(sector1, J=J, V=0.0)
    psi0 = np.array([0.0, 1.0], dtype=complex)
    t_grid = np.linspace(0.0, 1.0 / (2 * J), 41)
    res = dyn.evolve_unitary(h, psi0, t_grid,
                             record_fns={"P": lambda s, t: abs(s[1]) ** 2})
    expected = np.cos(TWO_PI * J * t_grid) ** 2
    assert np.abs(res.records["P"] - expected).max() < 1e-9
    i_transfer = np.argmin(np.abs(t_grid - 1.0 / (4 * J)))
    assert res.records["P"][i_transfer] < 1e-9


def test_unitary_requires_normalized_state(sector1):
    h = ham.build_effective(sector1, J=1.0, V=0.0)
    with pytest.raises(dyn.DynamicsError):
        dyn.evolve_unitary(h, np.array([2.0, 0.0], dtype=complex),
                           np.linspace(0, 1, 5))


def test_constant_diagonal_keeps_populations(basis1):
    h = ham.build_microscopic(basis1, 6000.0, 100.0, mu_sq=0.0)
    rng = np.random.default_rng(3)
    psi0 = rng.normal(size=basis1.dim) + 1j * rng.normal(size=basis1.dim)
    psi0 /= np.linalg.norm(psi0)
    t_grid = np.linspace(0, 0.01, 7)
    res = dyn.evolve_unitary(h, psi0, t_grid)
    assert np.allclose(np.abs(res.final_state) ** 2, np.abs(psi0) ** 2,
                       atol=1e-10)


def test_unitary_norm_and_energy_conservation(basis1):
    h = ham.build_microscopic(basis1, 6000.0, 100.0, mu_sq=7.0)
    b, r, t, l = basis1.lattice.plaquettes[0]
    psi0 = hil.basis_vector(basis1, (1 << r) | (1 << l))
    t_grid = np.linspace(0.0, 1.0, 11)
    dense = h.dense()
    res = dyn.evolve_unitary(
        h, psi0, t_grid,
        record_fns={"E": lambda s, t: float(np.real(np.vdot(s, dense @ s)))})
    assert np.abs(res.records["norm"] - 1.0).max() < 1e-9
    e = res.records["E"]
    assert np.abs(e - e[0]).max() < 1e-8 * max(abs(e[0]), 1.0)


def test_time_dependent_matches_constant(sector1):
    """A callable H(t) that is actually constant must agree with the
    exact eigendecomposition path."""
    J = 3.0
    h = ham.build_effective(sector1, J=J, V=1.0)
    psi0 = np.array([1.0, 0.0], dtype=complex)
    t_grid = np.linspace(0.0, 0.4, 9)
    a = dyn.evolve_unitary(h, psi0, t_grid)
    b = dyn.evolve_unitary(lambda t: h.dense(), psi0, t_grid, dt=1e-3,
                           richardson_check=False)
    phase = np.vdot(a.final_state, b.final_state)
    assert abs(abs(phase) - 1.0) < 1e-8
    assert np.linalg.norm(b.final_state - phase * a.final_state) < 1e-6


# ---------------------------------------------------------------------------
# Lindblad equation


def test_single_qubit_decay_rate():
    """<sigma_ee>(t) = exp(-2 pi Gamma t) with Gamma in MHz, t in us."""
    gamma = 0.5
    h = np.zeros((2, 2), dtype=complex)
    rho0 = np.diag([0.0, 1.0]).astype(complex)    # excited = |1>
    t_grid = np.linspace(0.0, 1.0, 11)
    res = dyn.evolve_lindblad(
        h, [(gamma, SM)], rho0, t_grid, dt=2e-3,
        record_fns={"pee": lambda r, t: float(np.real(r[1, 1]))})
    expected = np.exp(-TWO_PI * gamma * t_grid)
    assert np.abs(res.records["pee"] - expected).max() < 1e-6


def test_lindblad_matches_unitary_at_zero_gamma(sector1):
    h = ham.build_effective(sector1, J=1.96, V=0.3)
    psi0 = np.array([0.0, 1.0], dtype=complex)
    t_grid = np.linspace(0.0, 0.3, 7)
    uni = dyn.evolve_unitary(h, psi0, t_grid,
                             record_fns={"P": lambda s, t: abs(s[1]) ** 2})
    lind = dyn.evolve_lindblad(h, [], psi0, t_grid, dt=1e-4,
                               record_fns={"P": lambda r, t: float(np.real(r[1, 1]))},
                               richardson_check=False)
    assert np.abs(uni.records["P"] - lind.records["P"]).max() < 1e-8


def test_ring_oscillation_revival_with_decay(basis1):
    """Fig. 7(b) protocol: ~90% return after one oscillation at
    Gamma = 0.03 MHz."""
    J = 1.96
    h = ham.build_effective(basis1, J=J, V=0.0, eps=6000.0)
    b, r, t, l = basis1.lattice.plaquettes[0]
    i0 = basis1.index_of((1 << r) | (1 << l))
    psi0 = hil.basis_vector(basis1, (1 << r) | (1 << l))
    t_grid = np.linspace(0.0, 0.30, 61)
    res = dyn.evolve_lindblad(
        h, dyn.DecayModel(gamma=0.03), psi0, t_grid, dt=2e-4, basis=basis1,
        record_fns={"P": lambda rho, t: float(np.real(rho[i0, i0]))},
        richardson_check=False)
    p = res.records["P"]
    revival = p[np.argmin(np.abs(t_grid - 1.0 / (2 * J)))]
    assert 0.87 <= revival <= 0.93
    assert np.abs(res.records["trace"] - 1.0).max() < 1e-8


def test_lindblad_trace_and_positivity(sector2, basis2, plaq2):
    h = ham.build_effective(basis2, J=5.0, V=10.0)
    psi0 = hil.embed_state(sector2, basis2, hil.basis_vector(sector2, 120))
    t_grid = np.linspace(0.0, 0.2, 6)
    res = dyn.evolve_lindblad(h, dyn.DecayModel(gamma=0.05), psi0, t_grid,
                              dt=2e-4, basis=basis2, richardson_check=False)
    assert np.abs(res.records["trace"] - 1.0).max() < 1e-8
    assert la.eigvalsh(res.final_state)[0] > -1e-7


def test_richardson_warning_fires(sector1):
    h = ham.build_effective(sector1, J=30.0, V=0.0)
    psi0 = np.array([0.0, 1.0], dtype=complex)
    with pytest.warns(UserWarning, match="Richardson"):
        dyn.evolve_lindblad(h, [], psi0, np.linspace(0, 0.5, 3), dt=0.01)


# ---------------------------------------------------------------------------
# trajectories


def test_trajectories_match_dense_lindblad(basis1):
    """On the single plaquette, 2000 trajectories reproduce the dense
    master equation within three standard errors everywhere."""
    J = 1.96
    h = ham.build_effective(basis1, J=J, V=0.0, eps=0.0)
    b, r, t, l = basis1.lattice.plaquettes[0]
    psi0 = hil.basis_vector(basis1, (1 << r) | (1 << l))
    pee_diag = ((basis1.states >> np.uint64(b)) & 1).astype(float)

    def pop(state, t):
        if state.ndim == 1:
            return float(np.sum(np.abs(state) ** 2 * pee_diag))
        return float(np.real(np.sum(np.diag(state) * pee_diag)))

    t_grid = np.linspace(0.0, 0.3, 7)
    decay = dyn.DecayModel(gamma=0.05)
    dense = dyn.evolve_lindblad(h, decay, psi0, t_grid, dt=2e-4, basis=basis1,
                                record_fns={"pop": pop}, richardson_check=False)
    mc = dyn.evolve_trajectories(h, decay, psi0, t_grid, dt=5e-4,
                                 n_traj=2000, record_fns={"pop": pop},
                                 basis=basis1, seed=11)
    err = np.abs(mc.records["pop"] - dense.records["pop"])
    bound = 3 * mc.records["pop_stderr"] + 1e-4
    assert np.all(err <= bound)


def test_trajectories_reproducible(basis1):
    h = ham.build_effective(basis1, J=1.0, V=0.0)
    b, r, t, l = basis1.lattice.plaquettes[0]
    psi0 = hil.basis_vector(basis1, (1 << r) | (1 << l))
    kw = dict(dt=1e-3, n_traj=25, basis=basis1, seed=9,
              record_fns={"n": lambda s, t: float(np.linalg.norm(s))})
    t_grid = np.linspace(0.0, 0.1, 4)
    a = dyn.evolve_trajectories(h, dyn.DecayModel(gamma=0.1), psi0, t_grid, **kw)
    b2 = dyn.evolve_trajectories(h, dyn.DecayModel(gamma=0.1), psi0, t_grid, **kw)
    assert np.array_equal(a.records["n"], b2.records["n"])


# ---------------------------------------------------------------------------
# steady states


def test_steady_state_driven_qubit_oracle():
    """Resonantly driven qubit: rho_ee = A^2 / (Gamma^2/4 + 2 A^2)
    (optical Bloch equations, computed analytically)."""
    for amp, gamma in [(0.1, 0.03), (0.05, 0.2), (1.0, 1.0)]:
        h = amp * (SP + SM)
        rho = dyn.steady_state(h, [(gamma, SM)])
        expected = amp ** 2 / (gamma ** 2 / 4.0 + 2.0 * amp ** 2)
        assert np.real(rho[1, 1]) == pytest.approx(expected, rel=1e-8)


def test_steady_state_dark_state(basis1):
    h = ham.build_microscopic(basis1, 6000.0, 100.0, mu_sq=7.0)
    rho = dyn.steady_state(h, dyn.DecayModel(gamma=0.05), basis=basis1)
    i_dark = basis1.index_of(0)
    assert np.real(rho[i_dark, i_dark]) == pytest.approx(1.0, abs=1e-9)


def test_steady_state_requires_decay(basis1):
    h = ham.build_microscopic(basis1, 100.0, 10.0, mu_sq=1.0)
    with pytest.raises(dyn.DynamicsError, match="evolve_lindblad"):
        dyn.steady_state(h, [], basis=basis1)


def test_spectroscopy_scan_empty_grid(basis1):
    with pytest.raises(dyn.DynamicsError):
        dyn.spectroscopy_scan(lambda w: None, [], dyn.DecayModel(0.1), basis1)


def test_spectroscopy_scan_threaded_deterministic(basis1):
    eps, om, mu = 6000.0, 100.0, 7.0
    b, r, t, l = basis1.lattice.plaquettes[0]

    def builder(delta):
        return ham.build_rotating_frame(basis1, eps=eps, Omega=om, mu_sq=mu,
                                        omega_d=eps + delta, drive={r: 0.1})

    grid = [85.0, 100.0, 114.0]
    decay = dyn.DecayModel(gamma=0.03)
    rows1 = dyn.spectroscopy_scan(builder, grid, decay, basis1,
                                  observe_links=[b], threads=1)
    rows3 = dyn.spectroscopy_scan(builder, grid, decay, basis1,
                                  observe_links=[b], threads=3)
    assert rows1 == rows3
    assert [r["omega_d"] for r in rows1] == grid


# ---------------------------------------------------------------------------
# adiabatic sweep


def _sweep_pieces(basis, eps=0.0):
    static = ham.build_effective(basis, J=0.0, V=0.0, eps=eps)
    ring = ham.build_effective(basis, J=1.0, V=0.0)
    ising = ham.build_effective(basis, J=0.0, V=1.0)
    return static, ring, ising


def test_schedule_shape():
    sch = dyn.Schedule(J0=30.0, V0=30.0, v=2.0)
    assert sch.J(0.0) == 0.0
    assert sch.V(0.0) == 30.0
    assert sch.J(sch.quarter_period) == pytest.approx(30.0)
    assert sch.V(sch.quarter_period) == pytest.approx(0.0, abs=1e-12)


def test_sweep_rises_from_minus_half(sector2):
    static, ring, ising = _sweep_pieces(sector2)
    sch = dyn.Schedule(J0=30.0, V0=30.0, v=0.25)
    psi0 = hil.basis_vector(sector2, 120)
    m_diag = ((sector2.states >> np.uint64(1)) & 1).astype(float) - 0.5
    res = dyn.adiabatic_sweep(
        static, ring, ising, sch, psi0,
        t_grid=np.linspace(0, sch.t_max, 41), dt=1.5e-4,
        record_fns={"M": lambda s, t: float(np.sum(np.abs(s) ** 2 * m_diag))})
    m = res.records["M"]
    assert m[0] == pytest.approx(-0.5, abs=1e-12)
    assert m[-1] >= -0.05
    assert np.all(np.diff(m) > -1e-4)


def test_sweep_adiabatic_limit_reaches_ground_state(sector2):
    """Ten-fold slower sweep lands on the final ground state."""
    static, ring, ising = _sweep_pieces(sector2)
    sch = dyn.Schedule(J0=30.0, V0=30.0, v=0.05)
    psi0 = hil.basis_vector(sector2, 120)
    res = dyn.adiabatic_sweep(static, ring, ising, sch, psi0,
                              t_grid=np.linspace(0, sch.t_max, 11))
    h_end = (static.dense() + sch.J(sch.t_max) * ring.dense()
             + sch.V(sch.t_max) * ising.dense())
    _, gs, _ = dyn.ground_state(h_end)
    m_diag = ((sector2.states >> np.uint64(1)) & 1).astype(float) - 0.5
    m_final = float(np.sum(np.abs(res.final_state) ** 2 * m_diag))
    m_gs = float(np.sum(np.abs(gs) ** 2 * m_diag))
    assert abs(m_final - m_gs) < 1e-3


def test_sweep_warns_beyond_quarter_period(sector2):
    static, ring, ising = _sweep_pieces(sector2)
    sch = dyn.Schedule(J0=30.0, V0=30.0, v=1.0, t_max=0.6)
    psi0 = hil.basis_vector(sector2, 120)
    with pytest.warns(UserWarning, match="quarter period"):
        dyn.adiabatic_sweep(static, ring, ising, sch, psi0,
                            t_grid=np.linspace(0, 0.6, 5))


def test_sector_confinement_during_effective_evolution(sector2, basis2, plaq2):
    """Gamma = 0 effective dynamics started in the sector never leaves
    it: <(G_m - Q_m)^2> stays below 1e-10 at every vertex."""
    from linksim import lattice as lat
    from linksim.observables import gauss_violation

    charges = lat.chain_string_charges(plaq2)
    h = ham.build_effective(basis2, J=11.0, V=4.0)
    psi0 = hil.embed_state(sector2, basis2, hil.basis_vector(sector2, 120))
    res = dyn.evolve_unitary(h, psi0, np.linspace(0.0, 0.5, 6))
    viol = gauss_violation(res.final_state, basis2, charges)
    assert max(viol.values()) <= 1e-10
