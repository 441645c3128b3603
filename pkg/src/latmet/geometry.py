"""Rectangular box geometry: boundary strata, bonds, and site tables.

Sites of a ``width x height`` box are indexed row-major: ``i = y*width + x``.
The interior boundary holds the sites with a neighbor outside the box, the
exterior boundary the outside sites touching the box, and the interior the
rest.  Particles bind only across interior bonds (both endpoints interior).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Coord = tuple[int, int]

_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class LatticeGeometry:
    """The box, its strata, and the bond/move tables derived from them."""

    width: int
    height: int
    sites: tuple[Coord, ...] = field(init=False)
    interior_boundary: frozenset[Coord] = field(init=False)
    exterior_boundary: frozenset[Coord] = field(init=False)
    interior: frozenset[Coord] = field(init=False)
    interior_bonds: tuple[tuple[Coord, Coord], ...] = field(init=False)
    boundary_entry_edges: dict = field(init=False)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("box dimensions must be positive")
        w, h = self.width, self.height
        sites = tuple((x, y) for y in range(h) for x in range(w))
        inside = set(sites)
        int_bd, ext_bd = set(), set()
        for (x, y) in sites:
            for dx, dy in _STEPS:
                n = (x + dx, y + dy)
                if n not in inside:
                    int_bd.add((x, y))
                    ext_bd.add(n)
        interior = inside - int_bd
        bonds = tuple(
            ((x, y), (x + dx, y + dy))
            for (x, y) in sorted(interior)
            for dx, dy in ((1, 0), (0, 1))
            if (x + dx, y + dy) in interior
        )
        # one designated entry edge per internal-boundary site (metadata only)
        entry = {
            s: min(
                (s[0] + dx, s[1] + dy)
                for dx, dy in _STEPS
                if (s[0] + dx, s[1] + dy) not in inside
            )
            for s in sorted(int_bd)
        }
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "interior_boundary", frozenset(int_bd))
        object.__setattr__(self, "exterior_boundary", frozenset(ext_bd))
        object.__setattr__(self, "interior", frozenset(interior))
        object.__setattr__(self, "interior_bonds", bonds)
        object.__setattr__(self, "boundary_entry_edges", entry)

    # -- indexing helpers -------------------------------------------------

    @property
    def n_sites(self) -> int:
        return self.width * self.height

    def site_index(self, site: Coord) -> int:
        x, y = site
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise ValueError(f"site {site} outside box")
        return y * self.width + x

    def site_at(self, index: int) -> Coord:
        return (index % self.width, index // self.width)

    # -- dense tables consumed by the kernels ------------------------------

    def nn_pairs(self) -> np.ndarray:
        """All nearest-neighbor site-index pairs inside the box, (m, 2) int32."""
        pairs = []
        for (x, y) in self.sites:
            for dx, dy in ((1, 0), (0, 1)):
                n = (x + dx, y + dy)
                if n[0] < self.width and n[1] < self.height:
                    pairs.append((self.site_index((x, y)), self.site_index(n)))
        return np.asarray(pairs, dtype=np.int32)

    def interior_bond_indices(self) -> np.ndarray:
        if not self.interior_bonds:
            return np.empty((0, 2), dtype=np.int32)
        return np.asarray(
            [(self.site_index(a), self.site_index(b)) for a, b in self.interior_bonds],
            dtype=np.int32,
        )

    def boundary_site_indices(self) -> np.ndarray:
        return np.asarray(
            sorted(self.site_index(s) for s in self.interior_boundary), dtype=np.int32
        )

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_sites, dtype=np.uint8)
        for s in self.interior:
            mask[self.site_index(s)] = 1
        return mask

    def interior_neighbor_table(self) -> np.ndarray:
        """(n_sites, 4) table of interior-bond partners, -1 padded.

        Row i lists the sites j such that (i, j) is an interior bond; used for
        O(1) local energy updates.
        """
        table = np.full((self.n_sites, 4), -1, dtype=np.int32)
        fill = np.zeros(self.n_sites, dtype=np.int32)
        for a, b in self.interior_bond_indices():
            table[a, fill[a]] = b
            fill[a] += 1
            table[b, fill[b]] = a
            fill[b] += 1
        return table

    def powers_of_three(self) -> np.ndarray:
        return np.array([3**k for k in range(self.n_sites)], dtype=np.int64)
