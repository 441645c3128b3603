"""Two-type lattice gas: parameters, configurations, Hamiltonian, moves, rates.

Energies are kept exact whenever the parameters are rational: internally every
energy is the integer ``d1*n1 + d2*n2 - u*B`` on a common denominator, so level
sets, ties and sorts never touch floating point.  Irrational parameters fall
back to floats with a 1e-9 level-comparison tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from .geometry import LatticeGeometry

ParamValue = Union[int, float, str, Fraction]

VACANT, TYPE1, TYPE2 = 0, 1, 2

LEVEL_TOL = 1e-9

MOVE_HOP = "hop"
MOVE_CREATE_1 = "create1"
MOVE_CREATE_2 = "create2"
MOVE_ANNIHILATE_1 = "annihilate1"
MOVE_ANNIHILATE_2 = "annihilate2"


def _as_fraction(v: ParamValue) -> Fraction | None:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float):
        # floats are accepted exactly only when they are dyadic rationals
        # with a small denominator (covers 0.5, 1.5, ... config literals)
        f = Fraction(v).limit_denominator(10**6)
        return f if float(f) == v else None
    raise TypeError(f"unsupported parameter value {v!r}")


@dataclass(frozen=True)
class ModelParams:
    """Binding energy U and activation energies delta1 <= delta2."""

    U: Fraction | float
    delta1: Fraction | float
    delta2: Fraction | float

    def __post_init__(self):
        u, d1, d2 = (_as_fraction(v) for v in (self.U, self.delta1, self.delta2))
        if None not in (u, d1, d2):
            object.__setattr__(self, "U", u)
            object.__setattr__(self, "delta1", d1)
            object.__setattr__(self, "delta2", d2)
        if not (self.U > 0):
            raise ValueError("U must be positive")
        if not (0 < self.delta1 <= self.delta2):
            raise ValueError("need 0 < delta1 <= delta2")

    @property
    def exact(self) -> bool:
        return isinstance(self.U, Fraction)

    def scaled(self) -> tuple[int, int, int, int]:
        """(u, d1, d2, denominator) with all energies on an integer grid."""
        if self.exact:
            den = math.lcm(
                self.U.denominator, self.delta1.denominator, self.delta2.denominator
            )
            return (
                int(self.U * den),
                int(self.delta1 * den),
                int(self.delta2 * den),
                den,
            )
        # float path: quantize on the level tolerance grid
        den = round(1.0 / LEVEL_TOL)
        return (
            round(float(self.U) * den),
            round(float(self.delta1) * den),
            round(float(self.delta2) * den),
            den,
        )

    def floats(self) -> tuple[float, float, float]:
        return float(self.U), float(self.delta1), float(self.delta2)

    def as_dict(self) -> dict:
        return {"U": str(self.U), "delta1": str(self.delta1), "delta2": str(self.delta2)}


class Configuration:
    """Ternary occupancy over the box, round-tripping through a base-3 code.

    ``occupancy`` is a tuple over row-major sites with values in {0, 1, 2}.
    ``code`` is the base-3 integer (site k contributing occupancy*3**k) and
    ``packed`` the 2-bits-per-site packing used by the compiled kernels.
    """

    __slots__ = ("geometry", "occupancy")

    def __init__(self, geometry: LatticeGeometry, occupancy: Iterable[int]):
        occ = tuple(int(v) for v in occupancy)
        if len(occ) != geometry.n_sites:
            raise ValueError(
                f"occupancy length {len(occ)} != site count {geometry.n_sites}"
            )
        if any(v not in (0, 1, 2) for v in occ):
            raise ValueError("occupancy values must be 0, 1 or 2")
        self.geometry = geometry
        self.occupancy = occ

    # -- codecs ------------------------------------------------------------

    @classmethod
    def empty(cls, geometry: LatticeGeometry) -> "Configuration":
        return cls(geometry, (0,) * geometry.n_sites)

    @classmethod
    def from_code(cls, geometry: LatticeGeometry, code: int) -> "Configuration":
        n = geometry.n_sites
        if not (0 <= code < 3**n):
            raise ValueError(f"code {code} out of range for {n} sites")
        occ = []
        for _ in range(n):
            code, r = divmod(code, 3)
            occ.append(r)
        return cls(geometry, occ)

    @property
    def code(self) -> int:
        c = 0
        for v in reversed(self.occupancy):
            c = c * 3 + v
        return c

    @property
    def packed(self) -> int:
        p = 0
        for v in reversed(self.occupancy):
            p = (p << 2) | v
        return p

    @classmethod
    def from_packed(cls, geometry: LatticeGeometry, packed: int) -> "Configuration":
        occ = []
        for _ in range(geometry.n_sites):
            occ.append(packed & 3)
            packed >>= 2
        return cls(geometry, occ)

    def get(self, site) -> int:
        return self.occupancy[self.geometry.site_index(site)]

    def replace(self, site, value: int) -> "Configuration":
        i = self.geometry.site_index(site)
        occ = list(self.occupancy)
        occ[i] = value
        return Configuration(self.geometry, occ)

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.geometry is other.geometry
            and self.occupancy == other.occupancy
        )

    def __hash__(self):
        return hash(self.occupancy)

    def __repr__(self):
        g = self.geometry
        rows = []
        for y in range(g.height):
            rows.append("".join(str(self.occupancy[y * g.width + x]) for x in range(g.width)))
        return f"Configuration({'|'.join(rows)})"


@dataclass(frozen=True)
class Observables:
    n1: int
    n2: int
    active_bonds: int
    droplets: tuple[frozenset, ...]
    energy: float


def swap_types(config: Configuration) -> Configuration:
    """Interchange types 1 and 2 everywhere (an involution)."""
    swap = (0, 2, 1)
    return Configuration(config.geometry, (swap[v] for v in config.occupancy))


def _scaled_energy(geometry, params, occupancy) -> tuple[int, int, int, int]:
    """(n1, n2, B, scaled H) for one occupancy tuple."""
    n1 = sum(1 for v in occupancy if v == TYPE1)
    n2 = sum(1 for v in occupancy if v == TYPE2)
    b = 0
    for (ia, ib) in geometry.interior_bond_indices():
        if occupancy[ia] * occupancy[ib] == 2:
            b += 1
    u, d1, d2, _ = params.scaled()
    return n1, n2, b, d1 * n1 + d2 * n2 - u * b


def hamiltonian(geometry: LatticeGeometry, params: ModelParams, config: Configuration):
    """H(eta) = -U*B + delta1*n1 + delta2*n2; exact Fraction when params are."""
    if config.geometry.n_sites != geometry.n_sites:
        raise ValueError("configuration does not match geometry")
    _, _, _, h = _scaled_energy(geometry, params, config.occupancy)
    den = params.scaled()[3]
    return Fraction(h, den) if params.exact else h / den


def observables(geometry: LatticeGeometry, params: ModelParams, config: Configuration) -> Observables:
    n1, n2, b, h = _scaled_energy(geometry, params, config.occupancy)
    den = params.scaled()[3]
    occ = config.occupancy
    # droplets: maximal sets of particles connected by active bonds
    adj: dict[int, list[int]] = {}
    for (ia, ib) in geometry.interior_bond_indices():
        if occ[ia] * occ[ib] == 2:
            adj.setdefault(ia, []).append(ib)
            adj.setdefault(ib, []).append(ia)
    particles = [i for i, v in enumerate(occ) if v != 0]
    seen: set[int] = set()
    droplets = []
    for p in particles:
        if p in seen:
            continue
        comp, stack = {p}, [p]
        while stack:
            q = stack.pop()
            for r in adj.get(q, ()):
                if r not in comp:
                    comp.add(r)
                    stack.append(r)
        seen |= comp
        droplets.append(frozenset(geometry.site_at(i) for i in comp))
    energy = Fraction(h, den) if params.exact else h / den
    return Observables(n1, n2, b, tuple(droplets), energy)


def neighbors(geometry: LatticeGeometry, config: Configuration):
    """All allowed single moves from ``config`` as (config', move_kind) pairs.

    Moves: particle/vacancy interchange across nearest-neighbor pairs of the
    box, and creation/annihilation of either type on the internal boundary.
    """
    occ = config.occupancy
    out = []
    for (ia, ib) in geometry.nn_pairs():
        va, vb = occ[ia], occ[ib]
        if (va == 0) != (vb == 0):
            new = list(occ)
            new[ia], new[ib] = vb, va
            out.append((Configuration(geometry, new), MOVE_HOP))
    for i in geometry.boundary_site_indices():
        v = occ[i]
        if v == 0:
            for t, kind in ((TYPE1, MOVE_CREATE_1), (TYPE2, MOVE_CREATE_2)):
                new = list(occ)
                new[i] = t
                out.append((Configuration(geometry, new), kind))
        else:
            new = list(occ)
            new[i] = 0
            kind = MOVE_ANNIHILATE_1 if v == TYPE1 else MOVE_ANNIHILATE_2
            out.append((Configuration(geometry, new), kind))
    return out


def rate(
    geometry: LatticeGeometry,
    params: ModelParams,
    beta: float,
    config: Configuration,
    config2: Configuration,
) -> tuple[float, float]:
    """Metropolis rate exp(-beta*[H']-H]_+) and its exponent [H'-H]_+.

    Raises on a non-communicating pair: the rate is 0 by definition there and
    asking for it signals misuse.
    """
    if not any(c == config2 for c, _ in neighbors(geometry, config)):
        raise ValueError("configurations do not communicate")
    h1 = hamiltonian(geometry, params, config)
    h2 = hamiltonian(geometry, params, config2)
    exponent = max(float(h2 - h1), 0.0)
    return math.exp(-beta * exponent), exponent


def checkerboard_plus(geometry: LatticeGeometry, params: ModelParams) -> Configuration:
    """The nucleated state: interior filled as a checkerboard, boundary empty.

    Of the two checkerboard phases the lower-energy one is returned (ties:
    type 1 on the (x+y)-even sublattice).  The internal boundary is empty:
    boundary particles bind nothing and only raise the energy.
    """
    if not geometry.interior:
        raise ValueError("geometry has empty interior; no checkerboard target exists")

    def phase(parity: int) -> Configuration:
        occ = [0] * geometry.n_sites
        for (x, y) in geometry.interior:
            occ[geometry.site_index((x, y))] = TYPE1 if (x + y) % 2 == parity else TYPE2
        return Configuration(geometry, occ)

    a, b = phase(0), phase(1)
    ha, hb = hamiltonian(geometry, params, a), hamiltonian(geometry, params, b)
    return a if ha <= hb else b
