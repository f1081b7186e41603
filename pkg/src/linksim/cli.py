"""Command-line entry point.

    linksim <protocol> --config run.ini [--out DIR] [--seed N]
                       [--threads N] [--trajectories N]

Each run writes manifest.json (config echo, seed, versions, wall time)
plus one or more CSV data files, and renders matplotlib figures next to
the CSVs unless [output].figures = false.  Exit code 0 on success;
failures emit a machine-readable JSON error to stderr and exit 1.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import circuit as circ
from . import dynamics as dyn
from . import hamiltonian as hammod
from . import hilbert as hil
from . import lattice as latmod
from . import observables as obs
from . import plots
from .config import ConfigError, RunConfig, build_lattice, load_config
from .ensemble import DisorderSpec, run_disorder_sweep


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="linksim",
        description="Quantum link / quantum dimer model simulator for "
                    "small superconducting plaquette circuits.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="base seed override")
        p.add_argument("--threads", type=int, default=1, help="worker cap for scans")
        p.add_argument("--trajectories", type=int, default=0,
                       help="use N quantum trajectories instead of the dense solver")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(
                f"[protocol].kind = {cfg.kind!r} does not match "
                f"subcommand {args.command!r}")
        outdir = Path(args.out or cfg.output["directory"])
        outdir.mkdir(parents=True, exist_ok=True)
        t0 = time.time()
        summary = _COMMANDS[args.command](cfg, outdir, args)
        _write_manifest(cfg, outdir, args, summary, time.time() - t0)
        return 0
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        payload = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
        return 1


def _write_manifest(cfg: RunConfig, outdir: Path, args, summary, wall):
    manifest = {
        "tool": "linksim",
        "version": __version__,
        "command": args.command,
        "config_path": cfg.path,
        "config": cfg.raw,
        "overrides": {"out": args.out, "seed": args.seed,
                      "threads": args.threads,
                      "trajectories": args.trajectories},
        "versions": {"numpy": np.__version__,
                     "scipy": __import__("scipy").__version__},
        "wall_time_s": wall,
        "summary": summary,
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)


# ---------------------------------------------------------------------------
# shared assembly helpers


def _resolve_sector(cfg: RunConfig, lattice):
    mode = cfg.lattice.get("sector", "string")
    if "charges" in cfg.lattice:
        charges = latmod.validate_charges(lattice, cfg.lattice["charges"])
        return hil.enumerate_sector(lattice, charges), charges
    if mode == "full":
        return hil.full_basis(lattice), None
    if lattice.description.startswith("cross"):
        charges = latmod.cross_pair_charges(lattice)
    else:
        charges = latmod.chain_string_charges(lattice)
    return hil.enumerate_sector(lattice, charges), charges


def _model_couplings(cfg: RunConfig):
    """(J, V, W, eps) for the effective model, from direct or circuit input."""
    m = cfg.model
    if m["source"] == "circuit":
        spec = _circuit_spec(cfg)
        p = circ.compile_at_flux(spec, m.get("flux", 0.0))
        return p.J, p.V, m.get("W", 0.0), p.epsilon
    return (m.get("J", 0.0), m.get("V", 0.0), m.get("W", 0.0),
            m.get("epsilon", 0.0))


def _circuit_spec(cfg: RunConfig):
    m = cfg.model
    if "E_J" in m and "E_C" in m:
        transmon = circ.TransmonSpec(E_J=m["E_J"], E_C=m["E_C"])
        eps, u, _ = circ.derive_transmon(transmon)
        ej = m["E_J"]
    else:
        for key in ("epsilon", "U"):
            if key not in m:
                raise ConfigError(f"[model].{key} required for circuit source")
        eps, u, ej = m["epsilon"], m["U"], m.get("E_J", 1.0)
    kwargs = {}
    for key in ("vertex_EJ_ratio", "vertex_C_ratio",
                "plaquette_EJ_ratio", "plaquette_C_ratio"):
        if key in m:
            kwargs[key] = m[key]
    return circ.CircuitSpec(epsilon=eps, U=u, E_J=ej, **kwargs)


def _build_hamiltonian(cfg: RunConfig, basis):
    m = cfg.model
    variant = m.get("variant", "effective")
    if variant == "microscopic":
        return hammod.build_microscopic(
            basis, eps=m.get("epsilon", 0.0), Omega=m.get("Omega", 0.0),
            Omega_prime=m.get("Omega_prime"), mu_sq=m.get("mu_sq", 0.0),
            mu_plus=m.get("mu_plus", 0.0))
    if variant == "rk_effective":
        return hammod.build_rk_effective(basis, J=m.get("J", 1.0),
                                         lam=m.get("lambda_rk", 0.0))
    if variant == "rk_microscopic":
        return hammod.build_rk_microscopic(
            basis, omega=m.get("omega_res", 0.0), eps=m.get("epsilon", 0.0),
            Omega=m.get("Omega", 0.0), V_prime=m.get("V_prime", 0.0),
            mu=m.get("mu_sq", 0.0), beta_prime=m.get("beta_prime", 0.0),
            eta=m.get("eta", 0.0), n_max=cfg.numerics.get("n_max", 4))
    J, V, W, eps = _model_couplings(cfg)
    return hammod.build_effective(basis, J=J, V=V, W=W, eps=eps)


def _initial_vector(cfg: RunConfig, basis):
    spec = cfg.protocol.get("initial_state", "ground")
    if spec == "ground":
        return None
    if len(spec) != basis.lattice.n_links or set(spec) - {"0", "1"}:
        raise ConfigError(
            f"[protocol].initial_state must be {basis.lattice.n_links} chars of 0/1")
    state = sum(1 << i for i, c in enumerate(spec) if c == "1")
    return hil.basis_vector(basis, state)


def _maybe_dump_basis(cfg, outdir, basis):
    if cfg.output.get("dump_basis"):
        with open(outdir / "basis.txt", "w", encoding="utf-8") as fh:
            fh.write("\n".join(basis.bitstrings()) + "\n")


def _maybe_dump_operator(cfg, outdir, op):
    if cfg.output.get("dump_operator"):
        with open(outdir / "operator.txt", "w", encoding="utf-8") as fh:
            fh.write(op.to_coo_text())


# ---------------------------------------------------------------------------
# subcommands


def cmd_params(cfg: RunConfig, outdir: Path, args):
    """Flux tuning curves of the circuit couplings."""
    spec = _circuit_spec(cfg)
    n = cfg.protocol["flux_points"]
    if n < 1:
        raise ConfigError("[protocol].flux_points: empty flux grid")
    grid = np.linspace(cfg.protocol["flux_min"], cfg.protocol["flux_max"], n)
    rows = circ.tuning_curve(spec, grid)
    header = ["flux", "mu_over_Omega", "J_over_Omega", "V_over_Omega", "J_over_V"]
    obs.write_scan_csv(outdir / "tuning.csv", rows, header=header)
    outputs = ["tuning.csv"]
    if cfg.output["figures"]:
        plots.plot_tuning(outdir / "tuning.png", rows)
        outputs.append("tuning.png")
    crossing = circ.find_v_zero_crossing(spec, grid[0], grid[-1])
    p0 = circ.compile_at_flux(spec, 0.0)
    return {"outputs": outputs, "Omega": p0.Omega, "mu_plus_at_zero": p0.mu_plus,
            "v_zero_crossing_flux": crossing}


def cmd_spectrum(cfg: RunConfig, outdir: Path, args):
    """Eigenvalue table of the chosen model on the chosen basis."""
    lattice = build_lattice(cfg)
    basis, _ = _resolve_sector(cfg, lattice)
    h = _build_hamiltonian(cfg, basis)
    _maybe_dump_basis(cfg, outdir, basis)
    _maybe_dump_operator(cfg, outdir, h)
    energies, _vecs = dyn.eigenspectrum(h)
    n_levels = cfg.protocol.get("n_levels", len(energies))
    energies = energies[:n_levels]
    groups = _degeneracy_groups(energies)
    sector = "full" if basis.is_full else "charged"
    rows = [{"index": i, "energy": float(e), "degeneracy_group": groups[i],
             "sector": sector} for i, e in enumerate(energies)]
    obs.write_scan_csv(outdir / "spectrum.csv", rows)
    outputs = ["spectrum.csv"]
    if cfg.output["figures"]:
        plots.plot_spectrum(outdir / "spectrum.png", energies)
        outputs.append("spectrum.png")
    return {"outputs": outputs, "dimension": basis.dim,
            "ground_energy": float(energies[0])}


def _degeneracy_groups(energies, tol=1e-8):
    scale = max(abs(energies[0]), abs(energies[-1]), 1.0)
    groups = []
    gid = -1
    prev = None
    for e in energies:
        if prev is None or abs(e - prev) > tol * scale:
            gid += 1
        groups.append(gid)
        prev = e
    return groups


def cmd_spectroscopy(cfg: RunConfig, outdir: Path, args):
    """Steady-state populations versus drive detuning (rotating frame)."""
    lattice = build_lattice(cfg)
    basis = hil.full_basis(lattice)
    m = cfg.model
    if m.get("variant", "microscopic") != "microscopic":
        raise ConfigError("spectroscopy drives the microscopic model")
    eps = m.get("epsilon", 0.0)
    drive_link = cfg.protocol.get("drive_link", 1)
    amp = cfg.protocol.get("drive_amplitude", 0.1)
    lo = cfg.protocol.get("omega_d_min", 79.0)
    hi = cfg.protocol.get("omega_d_max", 121.0)
    n = cfg.protocol.get("omega_d_points", 400)
    grid = np.linspace(lo, hi, n)          # detuning omega_d - epsilon, MHz
    decay = dyn.DecayModel(gamma=cfg.decay["gamma"])
    observe = cfg.protocol.get("observe_links")
    pairs = cfg.protocol.get("pairs", [])

    def builder(delta):
        return hammod.build_rotating_frame(
            basis, eps=eps, Omega=m.get("Omega", 0.0),
            Omega_prime=m.get("Omega_prime"), mu_sq=m.get("mu_sq", 0.0),
            mu_plus=m.get("mu_plus", 0.0), omega_d=eps + delta,
            drive={drive_link: amp})

    rows = dyn.spectroscopy_scan(builder, grid, decay, basis,
                                 observe_links=observe, pairs=pairs,
                                 threads=args.threads)
    for row in rows:
        row["detuning"] = row.pop("omega_d")
    header = ["detuning"] + [k for k in rows[0] if k != "detuning"]
    obs.write_scan_csv(outdir / "spectroscopy.csv", rows, header=header)
    outputs = ["spectroscopy.csv"]
    if cfg.output["figures"]:
        xs = [r["detuning"] for r in rows]
        series = {k: [r[k] for r in rows] for k in header[1:]}
        plots.plot_scan(outdir / "spectroscopy.png", xs, series,
                        "omega_d - epsilon (MHz)", "steady-state population",
                        logy=True)
        outputs.append("spectroscopy.png")
    return {"outputs": outputs, "n_points": len(rows)}


def cmd_evolve(cfg: RunConfig, outdir: Path, args):
    """Real-time evolution from a prepared product state."""
    lattice = build_lattice(cfg)
    basis = hil.full_basis(lattice)
    h = _build_hamiltonian(cfg, basis)
    psi0 = _initial_vector(cfg, basis)
    if psi0 is None:
        raise ConfigError("[protocol].initial_state (bitstring) required for evolve")
    t_max = cfg.protocol.get("t_max", 0.6)
    n_rec = cfg.numerics.get("record_points", 161)
    t_grid = np.linspace(0.0, t_max, n_rec)
    i0 = int(np.argmax(np.abs(psi0)))

    def p_initial(state, t):
        if state.ndim == 1:
            return float(abs(state[i0]) ** 2)
        return float(np.real(state[i0, i0]))

    record = {"P_initial": p_initial}
    for li in range(lattice.n_links):
        record[f"pop_{li}"] = _pop_recorder(basis, li)
    gamma = cfg.decay["gamma"]
    seed = args.seed if args.seed is not None else 0
    if gamma > 0 and args.trajectories:
        res = dyn.evolve_trajectories(h, dyn.DecayModel(gamma=gamma), psi0,
                                      t_grid, n_traj=args.trajectories,
                                      record_fns=record, basis=basis, seed=seed)
    elif gamma > 0:
        res = dyn.evolve_lindblad(h, dyn.DecayModel(gamma=gamma), psi0, t_grid,
                                  dt=cfg.numerics.get("dt"), record_fns=record,
                                  basis=basis)
    else:
        res = dyn.evolve_unitary(h, psi0, t_grid, dt=cfg.numerics.get("dt"),
                                 record_fns=record)
    cols = ["P_initial"] + [f"pop_{li}" for li in range(lattice.n_links)]
    obs.write_timeseries_csv(outdir / "evolution.csv", res, columns=cols)
    outputs = ["evolution.csv"]
    if cfg.output["figures"]:
        plots.plot_timeseries(outdir / "evolution.png", res.times,
                              {"P_initial": res.records["P_initial"]},
                              ylabel="initial-state population")
        outputs.append("evolution.png")
    return {"outputs": outputs, "final_P_initial":
            float(res.records["P_initial"][-1])}


def _pop_recorder(basis, link):
    diag = ((basis.states >> np.uint64(link)) & 1).astype(float)

    def fn(state, t):
        if state.ndim == 1:
            return float(np.real(np.sum(np.abs(state) ** 2 * diag)))
        return float(np.real(np.sum(np.diag(state) * diag)))

    return fn


def _sweep_pieces(cfg: RunConfig, basis):
    eps = cfg.model.get("epsilon", 0.0)
    static = hammod.build_effective(basis, J=0.0, V=0.0, eps=eps)
    ring = hammod.build_effective(basis, J=1.0, V=0.0)
    ising = hammod.build_effective(basis, J=0.0, V=1.0)
    return static, ring, ising


def _central_link(cfg: RunConfig, lattice):
    if "central_link" in cfg.protocol:
        return cfg.protocol["central_link"]
    shared = [l.index for l in lattice.links
              if sum(l.index in p for p in lattice.plaquettes) == 2]
    if not shared:
        raise ConfigError("no shared link; set [protocol].central_link")
    return shared[0]


def cmd_sweep(cfg: RunConfig, outdir: Path, args):
    """Adiabatic crossover sweep J = J0 sin^2, V = V0 cos^2."""
    lattice = build_lattice(cfg)
    sector, charges = _resolve_sector(cfg, lattice)
    schedule = dyn.Schedule(J0=cfg.protocol.get("J0", 30.0),
                            V0=cfg.protocol.get("V0", 30.0),
                            v=cfg.protocol.get("v", 2.0),
                            t_max=cfg.protocol.get("t_max"))
    gamma = cfg.decay["gamma"]
    central = _central_link(cfg, lattice)
    n_rec = cfg.numerics.get("record_points", 161)
    t_grid = np.linspace(0.0, schedule.t_max, n_rec)

    static_s, ring_s, ising_s = _sweep_pieces(cfg, sector)
    psi0_sec = _initial_vector(cfg, sector)
    if psi0_sec is None:
        h0 = (static_s.dense() + schedule.J(0.0) * ring_s.dense()
              + schedule.V(0.0) * ising_s.dense())
        _, psi0_sec, _ = dyn.ground_state(h0)

    tracker = _sector_gs_tracker(cfg, sector, schedule)
    if gamma > 0:
        full = hil.full_basis(lattice)
        static, ring, ising = _sweep_pieces(cfg, full)
        psi0 = hil.embed_state(sector, full, psi0_sec)
        basis = full
        tracker_full = lambda t: hil.embed_state(sector, full, tracker(t))  # noqa: E731
    else:
        static, ring, ising = static_s, ring_s, ising_s
        psi0, basis, tracker_full = psi0_sec, sector, tracker
    record = {"M": _m_recorder(basis, central)}
    res = dyn.adiabatic_sweep(static, ring, ising, schedule, psi0,
                              t_grid=t_grid, decay=dyn.DecayModel(gamma=gamma),
                              basis=basis, dt=cfg.numerics.get("dt"),
                              record_fns=record, track_ground_state=tracker_full)
    obs.write_timeseries_csv(outdir / "sweep.csv", res,
                             columns=["J", "V", "M", "fidelity"])
    outputs = ["sweep.csv"]
    if cfg.output["figures"]:
        plots.plot_timeseries(outdir / "sweep.png", res.times,
                              {"M": res.records["M"],
                               "fidelity": res.records["fidelity"]},
                              ylabel="central-link <S^z>, fidelity")
        outputs.append("sweep.png")
    return {"outputs": outputs, "central_link": central,
            "final_M": float(res.records["M"][-1]),
            "final_fidelity": float(res.records["fidelity"][-1]),
            "lattice_note": lattice.description}


def _m_recorder(basis, link):
    diag = ((basis.states >> np.uint64(link)) & 1).astype(float) - 0.5

    def fn(state, t):
        if state.ndim == 1:
            return float(np.real(np.sum(np.abs(state) ** 2 * diag)))
        return float(np.real(np.sum(np.diag(state) * diag)))

    return fn


def _sector_gs_tracker(cfg, sector, schedule):
    static, ring, ising = _sweep_pieces(cfg, sector)
    sd, rd, vd = static.dense(), ring.dense(), ising.dense()
    cache = {}

    def track(t):
        key = round(float(t), 12)
        if key not in cache:
            import scipy.linalg as la
            h = sd + schedule.J(t) * rd + schedule.V(t) * vd
            _, vecs = la.eigh(h)
            cache[key] = vecs[:, 0]
        return cache[key]

    return track


def cmd_disorder(cfg: RunConfig, outdir: Path, args):
    """Disorder-averaged crossover sweep."""
    lattice = build_lattice(cfg)
    sector, _ = _resolve_sector(cfg, lattice)
    schedule = dyn.Schedule(J0=cfg.protocol.get("J0", 30.0),
                            V0=cfg.protocol.get("V0", 30.0),
                            v=cfg.protocol.get("v", 2.0),
                            t_max=cfg.protocol.get("t_max"))
    base_seed = args.seed if args.seed is not None \
        else cfg.disorder.get("seed", 1234)
    spec = DisorderSpec(delta_eps=cfg.disorder.get("delta_eps", 0.0),
                        n_realizations=cfg.disorder.get("n_realizations", 1000),
                        base_seed=base_seed)
    central = _central_link(cfg, lattice)
    static, ring, ising = _sweep_pieces(cfg, sector)
    psi0 = _initial_vector(cfg, sector)
    if psi0 is None:
        h0 = (static.dense() + schedule.J(0.0) * ring.dense()
              + schedule.V(0.0) * ising.dense())
        _, psi0, _ = dyn.ground_state(h0)
    n_rec = cfg.numerics.get("record_points", 161)
    t_grid = np.linspace(0.0, schedule.t_max, n_rec)
    gamma = cfg.decay["gamma"]
    decay = dyn.DecayModel(gamma=gamma) if gamma > 0 else None
    if gamma > 0:
        raise ConfigError("disorder protocol runs at Gamma = 0; "
                          "decay-plus-disorder is not wired in the CLI")
    _, rows, payload = run_disorder_sweep(
        sector, schedule, spec, psi0, central, t_grid=t_grid, decay=decay,
        dt=cfg.numerics.get("dt"), eps=cfg.model.get("epsilon", 0.0),
        threads=args.threads)
    obs.write_scan_csv(outdir / "disorder.csv", rows,
                       header=["t", "J_over_V", "mean_M", "std_M", "n"])
    outputs = ["disorder.csv"]
    if cfg.output["figures"]:
        plots.plot_timeseries(
            outdir / "disorder.png", payload["t"],
            {"mean_M": payload["mean"],
             "mean+std": payload["mean"] + payload["std"],
             "mean-std": payload["mean"] - payload["std"]},
            ylabel="disorder-averaged <M>")
        outputs.append("disorder.png")
    return {"outputs": outputs, "n_realizations": spec.n_realizations,
            "base_seed": spec.base_seed,
            "peak_mean_M": float(payload["mean"].max())}


def cmd_groundstate(cfg: RunConfig, outdir: Path, args):
    """Ground state and its electric-flux map."""
    lattice = build_lattice(cfg)
    sector, charges = _resolve_sector(cfg, lattice)
    m = cfg.model
    if "J_over_V" in cfg.protocol:
        V = m.get("V", 30.0)
        J = cfg.protocol["J_over_V"] * V
    else:
        J, V = m.get("J", 0.0), m.get("V", 0.0)
    h_field = cfg.protocol.get("symmetry_breaking_field", 0.0)
    if h_field == 0.0 and sector.is_full:
        h_field = 1e-4 * max(abs(J), abs(V), 1e-12)
    h = hammod.build_effective(sector, J=J, V=V, W=m.get("W", 0.0),
                               eps=m.get("epsilon", 0.0) + h_field)
    energy, psi, info = dyn.ground_state(h)
    _maybe_dump_basis(cfg, outdir, sector)
    fmap = obs.flux_map(psi, sector)
    obs.write_fluxmap_csv(outdir / "fluxmap.csv", fmap)
    outputs = ["fluxmap.csv"]
    if cfg.output["figures"]:
        plots.plot_fluxmap(outdir / "fluxmap.png", lattice, fmap.flux,
                           title=f"ground-state flux, J={J:g} V={V:g}")
        outputs.append("fluxmap.png")
    return {"outputs": outputs, "energy": energy, "J": J, "V": V,
            "degenerate": info["degenerate"],
            "symmetry_breaking_field": h_field,
            "lattice_note": lattice.description}


_COMMANDS = {
    "params": cmd_params,
    "spectrum": cmd_spectrum,
    "spectroscopy": cmd_spectroscopy,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "disorder": cmd_disorder,
    "groundstate": cmd_groundstate,
}


if __name__ == "__main__":
    sys.exit(main())
