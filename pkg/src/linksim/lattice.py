"""Square-lattice geometry for small plaquette arrays.

Links live on the edges of a 2D square lattice and carry the spin-1/2
degrees of freedom; vertices host the Gauss-law constraints.  All
coordinates are stored doubled, so that lattice sites sit at even-even
points (2x, 2y) and link midpoints at odd-even / even-odd points.  This
keeps every coordinate an integer.

Bond sets exposed here feed the Hamiltonian builders:

* ``plaquette_bonds``  -- the four corner pairs of each plaquette, in
  cyclic order (bottom,right), (right,top), (top,left), (left,bottom).
* ``vertex_bonds``     -- collinear link pairs meeting head-on at a
  vertex of valence >= 3 (two such pairs at an interior 4-valent
  vertex, one at a 3-valent boundary vertex).
* ``opposite_bonds``   -- the two parallel link pairs inside each
  plaquette (bottom/top and right/left).
"""

from __future__ import annotations

from dataclasses import dataclass, field


class LatticeError(ValueError):
    """Raised for inconsistent lattice construction input."""


@dataclass(frozen=True)
class Link:
    index: int
    mx: int          # doubled midpoint x
    my: int          # doubled midpoint y
    orientation: str  # 'h' or 'v'

    @property
    def endpoints(self):
        """The two vertex coordinates (doubled) this link connects."""
        if self.orientation == "h":
            return (self.mx - 1, self.my), (self.mx + 1, self.my)
        return (self.mx, self.my - 1), (self.mx, self.my + 1)


@dataclass(frozen=True)
class Vertex:
    index: int
    x: int           # doubled coordinate
    y: int
    links: tuple     # incident link indices

    @property
    def valence(self):
        return len(self.links)


@dataclass(frozen=True)
class Lattice:
    """Immutable link/vertex/plaquette structure with derived bond sets."""

    links: tuple
    vertices: tuple
    plaquettes: tuple          # 4-tuples (bottom, right, top, left)
    plaquette_bonds: tuple     # ((i, j), ...) corner pairs, 4 per plaquette
    vertex_bonds: tuple        # collinear pairs across >=3-valent vertices
    opposite_bonds: tuple      # parallel pairs within each plaquette
    description: str = field(default="custom")

    @property
    def n_links(self):
        return len(self.links)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_plaquettes(self):
        return len(self.plaquettes)

    def vertex_at(self, x, y):
        for v in self.vertices:
            if v.x == x and v.y == y:
                return v
        raise LatticeError(f"no vertex at doubled coordinates ({x}, {y})")

    def link_at(self, mx, my):
        for l in self.links:
            if l.mx == mx and l.my == my:
                return l
        raise LatticeError(f"no link with midpoint ({mx}, {my})")

    def horizontal_links(self):
        return [l.index for l in self.links if l.orientation == "h"]

    def vertical_links(self):
        return [l.index for l in self.links if l.orientation == "v"]


def flux_sign(lattice: Lattice, link: int) -> int:
    """Staggered sign eta relating spin and electric flux, e = eta * s^z.

    eta = (-1)^(x+y) with (x, y) the lattice-site coordinates of the
    link's left (horizontal) or bottom (vertical) endpoint.  With links
    oriented rightward/upward this makes the all-plus spin Gauss sum
    G_m = sum_l S^z_l equal, vertex by vertex, to the oriented flux
    divergence up to the per-vertex stagger (-1)^(x+y); see
    ``flux_divergence`` and ``vertex_parity``.
    """
    l = lattice.links[link]
    return -1 if ((l.mx + l.my - 1) // 2) % 2 else 1


def vertex_parity(lattice: Lattice, vertex: int) -> int:
    """(-1)^(x+y) of a vertex; converts spin charges to flux charges."""
    v = lattice.vertices[vertex]
    return -1 if ((v.x + v.y) // 2) % 2 else 1


def divergence_coefficients(lattice: Lattice, vertex: int):
    """Per incident link: +1 if its positive flux direction points out
    of the vertex (links are oriented rightward / upward), else -1."""
    v = lattice.vertices[vertex]
    coeffs = {}
    for li in v.links:
        l = lattice.links[li]
        if l.orientation == "h":
            coeffs[li] = 1 if l.mx > v.x else -1
        else:
            coeffs[li] = 1 if l.my > v.y else -1
    return coeffs


# ---------------------------------------------------------------------------
# construction


def _derive_vertices(links):
    incidence = {}
    for l in links:
        for pt in l.endpoints:
            incidence.setdefault(pt, []).append(l.index)
    pts = sorted(incidence, key=lambda p: (p[1], p[0]))
    return tuple(
        Vertex(index=i, x=p[0], y=p[1], links=tuple(sorted(incidence[p])))
        for i, p in enumerate(pts)
    )


def _plaquette_in_canonical_order(links, plaq):
    """Reorder a 4-tuple of link ids as (bottom, right, top, left).

    Raises LatticeError unless the four links form a unit square.
    """
    if len(set(plaq)) != 4:
        raise LatticeError(f"plaquette {plaq} must reference 4 distinct links")
    for li in plaq:
        if li < 0 or li >= len(links):
            raise LatticeError(f"plaquette {plaq} references unknown link {li}")
    hs = [li for li in plaq if links[li].orientation == "h"]
    vs = [li for li in plaq if links[li].orientation == "v"]
    if len(hs) != 2 or len(vs) != 2:
        raise LatticeError(f"plaquette {plaq} needs 2 horizontal + 2 vertical links")
    bottom, top = sorted(hs, key=lambda li: links[li].my)
    left, right = sorted(vs, key=lambda li: links[li].mx)
    b, t, lft, r = links[bottom], links[top], links[left], links[right]
    cx, cy = b.mx, b.my + 1
    ok = (
        t.mx == cx and t.my == cy + 1
        and lft.mx == cx - 1 and lft.my == cy
        and r.mx == cx + 1 and r.my == cy
    )
    if not ok:
        raise LatticeError(f"plaquette {plaq} links do not form a unit square")
    return (bottom, right, top, left)


def _derive_bonds(links, vertices, plaquettes):
    plaquette_bonds = []
    opposite_bonds = []
    for (b, r, t, l) in plaquettes:
        plaquette_bonds.extend([(b, r), (r, t), (t, l), (l, b)])
        opposite_bonds.extend([(b, t), (r, l)])
    vertex_bonds = []
    for v in vertices:
        if v.valence < 3:
            continue
        hs = [li for li in v.links if links[li].orientation == "h"]
        vs = [li for li in v.links if links[li].orientation == "v"]
        if len(hs) == 2:
            vertex_bonds.append(tuple(sorted(hs)))
        if len(vs) == 2:
            vertex_bonds.append(tuple(sorted(vs)))
    return tuple(plaquette_bonds), tuple(vertex_bonds), tuple(opposite_bonds)


def build_custom(links, vertices=None, plaquettes=(), description="custom"):
    """Assemble a Lattice from explicit links and plaquettes.

    ``links``: iterable of (mx, my, orientation) in doubled coordinates,
    or Link objects.  ``vertices``, if given, is validated against the
    incidence structure derived from the link endpoints.  ``plaquettes``
    are 4-tuples of link ids in any order; they are stored canonically
    as (bottom, right, top, left).
    """
    norm_links = []
    for i, l in enumerate(links):
        if isinstance(l, Link):
            norm_links.append(Link(i, l.mx, l.my, l.orientation))
        else:
            mx, my, orient = l
            norm_links.append(Link(i, int(mx), int(my), orient))
    for l in norm_links:
        if l.orientation not in ("h", "v"):
            raise LatticeError(f"link {l.index}: orientation must be 'h' or 'v'")
        if l.orientation == "h" and not (l.mx % 2 == 1 and l.my % 2 == 0):
            raise LatticeError(f"link {l.index}: horizontal midpoint must be (odd, even)")
        if l.orientation == "v" and not (l.mx % 2 == 0 and l.my % 2 == 1):
            raise LatticeError(f"link {l.index}: vertical midpoint must be (even, odd)")
    seen = {}
    for l in norm_links:
        key = (l.mx, l.my)
        if key in seen:
            raise LatticeError(f"links {seen[key]} and {l.index} share midpoint {key}")
        seen[key] = l.index

    derived = _derive_vertices(norm_links)
    if vertices is not None:
        want = {(v.x, v.y): tuple(sorted(v.links)) for v in derived}
        got = {}
        for v in vertices:
            if isinstance(v, Vertex):
                got[(v.x, v.y)] = tuple(sorted(v.links))
            else:
                x, y, incident = v
                got[(int(x), int(y))] = tuple(sorted(incident))
        if want != got:
            bad = sorted(set(want.items()) ^ set(got.items()))
            raise LatticeError(f"vertex incidence mismatch near {bad[0]}")

    canon = tuple(_plaquette_in_canonical_order(norm_links, tuple(p)) for p in plaquettes)
    in_plaquette = {li for p in canon for li in p}
    missing = [l.index for l in norm_links if l.index not in in_plaquette]
    if missing:
        raise LatticeError(f"links {missing} belong to no plaquette")

    pb, vb, ob = _derive_bonds(norm_links, derived, canon)
    return Lattice(
        links=tuple(norm_links),
        vertices=derived,
        plaquettes=canon,
        plaquette_bonds=pb,
        vertex_bonds=vb,
        opposite_bonds=ob,
        description=description,
    )


def build_plaquette_chain(n: int) -> Lattice:
    """Horizontal chain of n unit plaquettes (3n+1 links, 2n+2 vertices)."""
    if n < 1:
        raise LatticeError("chain length must be >= 1")
    links = []
    for x in range(n + 1):                       # vertical links
        links.append((2 * x, 1, "v"))
    for x in range(n):                           # bottom then top row
        links.append((2 * x + 1, 0, "h"))
    for x in range(n):
        links.append((2 * x + 1, 2, "h"))
    plaquettes = []
    for x in range(n):
        bottom = (n + 1) + x
        top = (n + 1) + n + x
        left = x
        right = x + 1
        plaquettes.append((bottom, right, top, left))
    return build_custom(links, plaquettes=plaquettes,
                        description=f"chain of {n} plaquettes")


def build_cross() -> Lattice:
    """Five plaquettes in a plus shape: one central plaquette with an
    arm on each side.  Unlike the chain this geometry has a genuine
    interior, so flux can take a central route or hug the boundary."""
    cells = [(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)]
    links = []
    seen = {}

    def add(mx, my, orient):
        if (mx, my) not in seen:
            seen[(mx, my)] = len(links)
            links.append((mx, my, orient))
        return seen[(mx, my)]

    plaquettes = []
    for (px, py) in cells:
        bottom = add(2 * px + 1, 2 * py, "h")
        top = add(2 * px + 1, 2 * py + 2, "h")
        left = add(2 * px, 2 * py + 1, "v")
        right = add(2 * px + 2, 2 * py + 1, "v")
        plaquettes.append((bottom, right, top, left))
    return build_custom(links, plaquettes=plaquettes,
                        description="cross of 5 plaquettes")


def build_grid(nx: int, ny: int) -> Lattice:
    """Rectangular nx-by-ny block of plaquettes."""
    if nx < 1 or ny < 1:
        raise LatticeError("grid dimensions must be >= 1")
    links = []
    index = {}
    for y in range(ny + 1):
        for x in range(nx):
            index[("h", x, y)] = len(links)
            links.append((2 * x + 1, 2 * y, "h"))
    for y in range(ny):
        for x in range(nx + 1):
            index[("v", x, y)] = len(links)
            links.append((2 * x, 2 * y + 1, "v"))
    plaquettes = []
    for y in range(ny):
        for x in range(nx):
            plaquettes.append((
                index[("h", x, y)],
                index[("v", x + 1, y)],
                index[("h", x, y + 1)],
                index[("v", x, y)],
            ))
    return build_custom(links, plaquettes=plaquettes,
                        description=f"{nx}x{ny} plaquette grid")


# ---------------------------------------------------------------------------
# charge assignments


def validate_charges(lattice: Lattice, charges) -> dict:
    """Check a vertex -> Q_m map: Q_m in {-k/2, ..., +k/2} stepping by 1."""
    out = {}
    for v in lattice.vertices:
        if v.index not in charges:
            raise LatticeError(f"charge assignment missing vertex {v.index}")
        q = float(charges[v.index])
        k = v.valence
        allowed = [-k / 2 + i for i in range(k + 1)]
        if not any(abs(q - a) < 1e-12 for a in allowed):
            raise LatticeError(
                f"vertex {v.index} (valence {k}): charge {q} not in {allowed}")
        out[v.index] = q
    return out


def chain_string_charges(lattice: Lattice, sign=1, flip=()):
    """Charge pattern hosting the string states of an open chain:
    zero at the 2-valent corners, sign/2 at every 3-valent vertex.
    Vertices listed in ``flip`` get the opposite half charge.
    """
    charges = {}
    for v in lattice.vertices:
        if v.valence == 2:
            charges[v.index] = 0.0
        elif v.valence == 3:
            q = 0.5 * sign
            charges[v.index] = -q if v.index in flip else q
        else:
            charges[v.index] = 0.0
    return validate_charges(lattice, charges)


def cross_pair_charges(lattice: Lattice, q=1.0):
    """Charge-anticharge pair for the cross lattice: spin charge -q at
    the west and east arm-tip vertices (staggered map turns these into
    opposite physical flux charges), all other vertices neutral.  The
    resulting sector hosts strings that either squeeze through the
    central plaquette or detour along the north/south boundary."""
    xs = [v.x for v in lattice.vertices]
    x_lo, x_hi = min(xs), max(xs)
    charges = {v.index: 0.0 for v in lattice.vertices}
    west = [v for v in lattice.vertices if v.x == x_lo]
    east = [v for v in lattice.vertices if v.x == x_hi]
    charges[min(west, key=lambda v: v.y).index] = -float(q)
    charges[min(east, key=lambda v: v.y).index] = -float(q)
    return validate_charges(lattice, charges)


# ---------------------------------------------------------------------------
# text serialization (used by the CLI for custom lattices)


def to_text(lattice: Lattice) -> str:
    lines = [f"# {lattice.description}"]
    for l in lattice.links:
        lines.append(f"link {l.index} {l.mx} {l.my} {l.orientation}")
    for p in lattice.plaquettes:
        lines.append("plaquette " + " ".join(str(i) for i in p))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Lattice:
    links = {}
    plaquettes = []
    description = "custom"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if lineno == 1:
                description = line.lstrip("# ").strip() or "custom"
            continue
        parts = line.split()
        if parts[0] == "link":
            if len(parts) != 5:
                raise LatticeError(f"line {lineno}: expected 'link ID MX MY h|v'")
            idx, mx, my, orient = int(parts[1]), int(parts[2]), int(parts[3]), parts[4]
            if idx in links:
                raise LatticeError(f"line {lineno}: duplicate link id {idx}")
            links[idx] = (mx, my, orient)
        elif parts[0] == "plaquette":
            if len(parts) != 5:
                raise LatticeError(f"line {lineno}: expected 'plaquette I J K L'")
            plaquettes.append(tuple(int(x) for x in parts[1:]))
        else:
            raise LatticeError(f"line {lineno}: unknown record '{parts[0]}'")
    if sorted(links) != list(range(len(links))):
        raise LatticeError("link ids must be dense 0..N-1")
    ordered = [links[i] for i in range(len(links))]
    return build_custom(ordered, plaquettes=plaquettes, description=description)
