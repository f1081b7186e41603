"""Measured quantities: flux maps, magnetization, populations,
correlations, Gauss violation and ground-state fidelity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import SectorBasis, op_sz, gauss_generator
from .lattice import Lattice, flux_sign


def _expect_diag(diag, state):
    """Expectation of a diagonal operator for a vector or density matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        return float(np.real(np.sum(np.abs(state) ** 2 * diag)))
    return float(np.real(np.sum(np.diag(state) * diag)))


def _sz_diag(basis: SectorBasis, link: int) -> np.ndarray:
    return ((basis.states >> np.uint64(link)) & 1).astype(float) - 0.5


@dataclass
class FluxMap:
    """Per-link <S^z> and staggered electric flux e = eta * <S^z>."""

    lattice: Lattice
    sz: np.ndarray
    flux: np.ndarray

    def rows(self):
        out = []
        for l in self.lattice.links:
            out.append({
                "link": l.index, "mx": l.mx, "my": l.my,
                "orientation": l.orientation,
                "sz": self.sz[l.index], "flux": self.flux[l.index],
                "abs_flux": abs(self.flux[l.index]),
            })
        return out


def flux_map(state, basis: SectorBasis) -> FluxMap:
    state = np.asarray(state)
    dim = state.shape[0]
    if dim != basis.dim:
        raise ValueError(f"state dimension {dim} does not match basis {basis.dim}")
    lat = basis.lattice
    sz = np.array([_expect_diag(_sz_diag(basis, l.index), state) for l in lat.links])
    eta = np.array([flux_sign(lat, l.index) for l in lat.links])
    return FluxMap(lattice=lat, sz=sz, flux=eta * sz)


def magnetization(state, basis: SectorBasis, link: int) -> float:
    return _expect_diag(_sz_diag(basis, link), state)


def excited_population(state, basis: SectorBasis, link: int) -> float:
    """sigma_ee(l) = 1/2 + <S^z_l>, the excited-state population."""
    return 0.5 + magnetization(state, basis, link)


def pair_correlation(state, basis: SectorBasis, link_a: int, link_b: int) -> float:
    """<sigma_ee(a) sigma_ee(b)>."""
    da = _sz_diag(basis, link_a) + 0.5
    db = _sz_diag(basis, link_b) + 0.5
    return _expect_diag(da * db, state)


def gauss_violation(state, basis: SectorBasis, charges) -> dict:
    """<(G_m - Q_m)^2> per vertex."""
    out = {}
    state = np.asarray(state)
    for v in basis.lattice.vertices:
        g = gauss_generator(basis, v.index).matrix.diagonal().real
        dev = (g - float(charges[v.index])) ** 2
        out[v.index] = _expect_diag(dev, state)
    return out


def fidelity(state, reference: np.ndarray) -> float:
    """P = <psi_ref| rho |psi_ref> (or squared overlap for pure states)."""
    state = np.asarray(state)
    reference = np.asarray(reference, dtype=complex)
    if state.ndim == 1:
        return float(abs(np.vdot(reference, state)) ** 2)
    return float(np.real(np.vdot(reference, state @ reference)))


def error_probability(fid_without_decay, fid_with_decay) -> np.ndarray:
    """Delta P = P(Gamma=0) - P(Gamma>0), per time point."""
    return np.asarray(fid_without_decay) - np.asarray(fid_with_decay)


def vertex_flux_charge(lattice: Lattice, vertex: int, charge_spin: float) -> float:
    """Physical (oriented-divergence) charge of a vertex given its spin
    charge: the staggered map multiplies by (-1)^(x+y)."""
    from .lattice import vertex_parity
    return vertex_parity(lattice, vertex) * charge_spin


# ---------------------------------------------------------------------------
# CSV emitters (full float precision, deterministic ordering)


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[col]) for col in header))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_timeseries_csv(path, result, columns=None):
    names = columns or sorted(result.records)
    header = ["t"] + list(names)
    rows = []
    for i, t in enumerate(result.times):
        row = {"t": float(t)}
        for k in names:
            row[k] = float(result.records[k][i])
        rows.append(row)
    write_csv(path, header, rows)


def write_fluxmap_csv(path, fmap: FluxMap):
    header = ["link", "mx", "my", "orientation", "sz", "flux", "abs_flux"]
    write_csv(path, header, fmap.rows())


def write_scan_csv(path, rows, header=None):
    if not rows:
        raise ValueError("empty scan")
    header = header or list(rows[0])
    write_csv(path, header, rows)
