"""Spin-1/2 bases over lattice links and elementary sparse operators.

Basis states are integers whose bit l is 1 when the spin on link l
points up.  A SectorBasis either spans the full 2^N space or the
subspace picked out by a Gauss-law charge assignment,

    G_m |s> = (sum over links at vertex m of s^z_l) |s> = Q_m |s>.

Operators are plain scipy CSR matrices wrapped with a reference to the
basis they act on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lattice import Lattice, validate_charges

MAX_LINKS = 24


class CapacityError(RuntimeError):
    """System size exceeds what filtered enumeration supports."""


@dataclass(frozen=True)
class SectorBasis:
    """Ordered list of computational basis states, full or Gauss-restricted."""

    lattice: Lattice
    charges: dict | None            # None marks the full basis
    states: np.ndarray              # sorted ascending, uint64
    _index_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self):
        return int(self.states.size)

    @property
    def is_full(self):
        return self.charges is None

    def index_of(self, state: int) -> int:
        i = int(np.searchsorted(self.states, state))
        if i >= self.dim or self.states[i] != state:
            raise KeyError(f"state {state:#x} not in basis")
        return i

    def bit_table(self) -> np.ndarray:
        """(dim, n_links) array of 0/1 link occupations."""
        if "bits" not in self._index_cache:
            n = self.lattice.n_links
            shifts = np.arange(n, dtype=np.uint64)
            bits = (self.states[:, None] >> shifts[None, :]) & 1
            self._index_cache["bits"] = bits.astype(np.int8)
        return self._index_cache["bits"]

    def sz_table(self) -> np.ndarray:
        """(dim, n_links) array of s^z values (+-1/2)."""
        return self.bit_table() - 0.5

    def bitstrings(self):
        n = self.lattice.n_links
        return [format(int(s), f"0{n}b")[::-1] for s in self.states]


def full_basis(lattice: Lattice) -> SectorBasis:
    n = lattice.n_links
    if n > MAX_LINKS:
        raise CapacityError(f"{n} links exceeds the {MAX_LINKS}-link enumeration cap")
    states = np.arange(2 ** n, dtype=np.uint64)
    return SectorBasis(lattice=lattice, charges=None, states=states)


def enumerate_sector(lattice: Lattice, charges) -> SectorBasis:
    """All basis states satisfying the spin Gauss law at every vertex."""
    n = lattice.n_links
    if n > MAX_LINKS:
        raise CapacityError(f"{n} links exceeds the {MAX_LINKS}-link enumeration cap")
    charges = validate_charges(lattice, charges)
    states = np.arange(2 ** n, dtype=np.uint64)
    keep = np.ones(states.size, dtype=bool)
    for v in lattice.vertices:
        acc = np.zeros(states.size, dtype=np.int64)
        for li in v.links:
            acc += ((states >> np.uint64(li)) & 1).astype(np.int64)
        # sum of s^z = acc - valence/2 must equal Q_m
        keep &= np.abs(acc - v.valence / 2.0 - charges[v.index]) < 1e-9
    kept = states[keep]
    if kept.size == 0:
        warnings.warn("charge assignment admits no basis states", stacklevel=2)
    return SectorBasis(lattice=lattice, charges=dict(charges), states=kept)


def state_from_bits(basis: SectorBasis, up_links) -> int:
    """Integer basis label with the given links spin-up."""
    s = 0
    for li in up_links:
        s |= 1 << li
    return s


def basis_vector(basis: SectorBasis, state: int) -> np.ndarray:
    v = np.zeros(basis.dim, dtype=complex)
    v[basis.index_of(state)] = 1.0
    return v


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class SparseOperator:
    """Complex sparse matrix tied to a basis, with a hermiticity tag."""

    basis: SectorBasis
    matrix: sp.csr_matrix
    hermitian: bool = True

    @property
    def dim(self):
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __add__(self, other):
        _check_same_basis(self, other)
        return SparseOperator(self.basis, (self.matrix + other.matrix).tocsr(),
                              self.hermitian and other.hermitian)

    def __sub__(self, other):
        _check_same_basis(self, other)
        return SparseOperator(self.basis, (self.matrix - other.matrix).tocsr(),
                              self.hermitian and other.hermitian)

    def __mul__(self, scalar):
        herm = self.hermitian and abs(complex(scalar).imag) == 0.0
        return SparseOperator(self.basis, (self.matrix * scalar).tocsr(), herm)

    __rmul__ = __mul__

    def __matmul__(self, other):
        _check_same_basis(self, other)
        return SparseOperator(self.basis, (self.matrix @ other.matrix).tocsr(), False)

    def adjoint(self):
        return SparseOperator(self.basis, self.matrix.conj().T.tocsr(), self.hermitian)

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())

    def expectation(self, state: np.ndarray) -> complex:
        """<psi|A|psi> for a vector, tr(A rho) for a square matrix."""
        state = np.asarray(state)
        if state.ndim == 1:
            return complex(np.vdot(state, self.matrix @ state))
        return complex(np.trace(self.matrix @ state))

    def to_coo_text(self) -> str:
        """Debug export: sorted 'row col re im' lines."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [
            f"{coo.row[k]} {coo.col[k]} {coo.data[k].real!r} {coo.data[k].imag!r}"
            for k in order
        ]
        return "\n".join(lines) + ("\n" if lines else "")


def _check_same_basis(a: SparseOperator, b: SparseOperator):
    if a.basis is not b.basis and not np.array_equal(a.basis.states, b.basis.states):
        raise ValueError("operators act on different bases")


def _check_link(basis: SectorBasis, link: int):
    if not (0 <= link < basis.lattice.n_links):
        raise ValueError(f"unknown link {link}")


def op_sz(basis: SectorBasis, link: int) -> SparseOperator:
    _check_link(basis, link)
    diag = ((basis.states >> np.uint64(link)) & 1).astype(float) - 0.5
    m = sp.diags(diag.astype(complex), format="csr")
    return SparseOperator(basis, m, hermitian=True)


def _op_flip(basis: SectorBasis, link: int, want_bit: int) -> SparseOperator:
    """S^+ (want_bit=0: acts on down states) or S^- (want_bit=1)."""
    _check_link(basis, link)
    mask = np.uint64(1 << link)
    bit = (basis.states >> np.uint64(link)) & 1
    src = np.nonzero(bit == want_bit)[0]
    targets = basis.states[src] ^ mask
    pos = np.searchsorted(basis.states, targets)
    pos = np.minimum(pos, basis.dim - 1)
    ok = basis.states[pos] == targets    # sector-restricted flips may leave
    rows = pos[ok]
    cols = src[ok]
    data = np.ones(rows.size, dtype=complex)
    m = sp.csr_matrix((data, (rows, cols)), shape=(basis.dim, basis.dim))
    return SparseOperator(basis, m, hermitian=False)


def op_splus(basis: SectorBasis, link: int) -> SparseOperator:
    return _op_flip(basis, link, want_bit=0)


def op_sminus(basis: SectorBasis, link: int) -> SparseOperator:
    return _op_flip(basis, link, want_bit=1)


def op_identity(basis: SectorBasis) -> SparseOperator:
    return SparseOperator(basis, sp.identity(basis.dim, dtype=complex, format="csr"))


def op_total_sz(basis: SectorBasis) -> SparseOperator:
    diag = basis.bit_table().sum(axis=1) - basis.lattice.n_links / 2.0
    return SparseOperator(basis, sp.diags(diag.astype(complex), format="csr"))


def gauss_generator(basis: SectorBasis, vertex: int) -> SparseOperator:
    if not (0 <= vertex < basis.lattice.n_vertices):
        raise ValueError(f"unknown vertex {vertex}")
    v = basis.lattice.vertices[vertex]
    acc = np.zeros(basis.dim)
    for li in v.links:
        acc += ((basis.states >> np.uint64(li)) & 1).astype(float) - 0.5
    return SparseOperator(basis, sp.diags(acc.astype(complex), format="csr"))


# ---------------------------------------------------------------------------
# moving between a sector and the full basis


def embed_state(sector: SectorBasis, full: SectorBasis, vec: np.ndarray) -> np.ndarray:
    """Lift a sector vector (or density matrix) into the full basis."""
    idx = np.searchsorted(full.states, sector.states)
    vec = np.asarray(vec, dtype=complex)
    if vec.ndim == 1:
        out = np.zeros(full.dim, dtype=complex)
        out[idx] = vec
    else:
        out = np.zeros((full.dim, full.dim), dtype=complex)
        out[np.ix_(idx, idx)] = vec
    return out


def project_state(full: SectorBasis, sector: SectorBasis, vec: np.ndarray) -> np.ndarray:
    """Restrict a full-basis vector (or density matrix) to a sector."""
    idx = np.searchsorted(full.states, sector.states)
    vec = np.asarray(vec, dtype=complex)
    if vec.ndim == 1:
        return vec[idx].copy()
    return vec[np.ix_(idx, idx)].copy()
