import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latmet.geometry import LatticeGeometry
from latmet.model import (
    Configuration,
    ModelParams,
    checkerboard_plus,
    hamiltonian,
    neighbors,
    observables,
    rate,
    swap_types,
)

G43 = LatticeGeometry(4, 3)
P = ModelParams("1", "9/10", "3/2")


def cfg(geometry, **sites):
    occ = [0] * geometry.n_sites
    for key, t in sites.items():
        x, y = map(int, key.strip("s").split("_"))
        occ[geometry.site_index((x, y))] = t
    return Configuration(geometry, occ)


class TestGeometry:
    def test_boundary_strata_recomputable(self):
        g = LatticeGeometry(5, 4)
        inside = set(g.sites)
        for s in g.sites:
            nbrs_out = [
                (s[0] + dx, s[1] + dy)
                for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
                if (s[0] + dx, s[1] + dy) not in inside
            ]
            assert (s in g.interior_boundary) == bool(nbrs_out)
        assert g.interior == inside - g.interior_boundary
        for s in g.exterior_boundary:
            assert s not in inside

    def test_one_entry_edge_per_boundary_site(self):
        g = LatticeGeometry(4, 4)
        assert set(g.boundary_entry_edges) == set(g.interior_boundary)
        for s, t in g.boundary_entry_edges.items():
            assert t in g.exterior_boundary
            assert abs(s[0] - t[0]) + abs(s[1] - t[1]) == 1

    def test_interior_bonds_are_interior_unit_pairs(self):
        g = LatticeGeometry(5, 5)
        seen = set()
        for a, b in g.interior_bonds:
            assert a in g.interior and b in g.interior
            assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1
            key = frozenset((a, b))
            assert key not in seen
            seen.add(key)


class TestHamiltonian:
    def test_empty_box_zero(self):
        assert hamiltonian(G43, P, Configuration.empty(G43)) == 0

    def test_single_particle_activation(self):
        for t, d in ((1, Fraction(9, 10)), (2, Fraction(3, 2))):
            for site in [(0, 0), (1, 1), (3, 2)]:
                c = Configuration.empty(G43).replace(site, t)
                assert hamiltonian(G43, P, c) == d

    def test_checkerboard_2x2_formula(self):
        # 2x2 checkerboard inside the interior of a 4x4 box, (U,d1,d2)=(1,1/2,1)
        g = LatticeGeometry(4, 4)
        p = ModelParams("1", "1/2", "1")
        c = Configuration.empty(g)
        for (x, y) in ((1, 1), (2, 2)):
            c = c.replace((x, y), 1)
        for (x, y) in ((1, 2), (2, 1)):
            c = c.replace((x, y), 2)
        # matches (l^2/2)(d1+d2) - 2l(l-1)U at l=2
        assert hamiltonian(g, p, c) == Fraction(-1)

    def test_boundary_particle_does_not_bind(self):
        # type-1 on the inner boundary next to an interior type-2
        c = cfg(G43, s1_0=1, s1_1=2)
        assert hamiltonian(G43, P, c) == Fraction(9, 10) + Fraction(3, 2)

    def test_size_mismatch_raises(self):
        other = Configuration.empty(LatticeGeometry(3, 3))
        with pytest.raises(ValueError):
            hamiltonian(G43, P, other)

    def test_energy_identity_exhaustive_small(self):
        g = LatticeGeometry(3, 3)
        for code in range(3**4):  # low-code slice plus random sample below
            c = Configuration.from_code(g, code)
            o = observables(g, P, c)
            assert o.energy == o.n1 * P.delta1 + o.n2 * P.delta2 - o.active_bonds * P.U

    @given(st.integers(0, 3**12 - 1))
    @settings(max_examples=80, deadline=None)
    def test_energy_identity_random_4x3(self, code):
        o = observables(G43, P, Configuration.from_code(G43, code))
        assert o.energy == o.n1 * P.delta1 + o.n2 * P.delta2 - o.active_bonds * P.U

    @given(st.integers(0, 3**12 - 1))
    @settings(max_examples=60, deadline=None)
    def test_active_bond_bound(self, code):
        o = observables(G43, P, Configuration.from_code(G43, code))
        # bonds only touch interior particles of both types
        assert o.active_bonds <= 4 * min(o.n1, o.n2)


class TestConfiguration:
    @given(st.integers(0, 3**12 - 1))
    @settings(max_examples=60, deadline=None)
    def test_code_roundtrip(self, code):
        c = Configuration.from_code(G43, code)
        assert c.code == code
        assert Configuration.from_packed(G43, c.packed) == c

    def test_code_bijective_range(self):
        g = LatticeGeometry(2, 2)
        seen = {Configuration.from_code(g, k).occupancy for k in range(3**4)}
        assert len(seen) == 3**4


class TestNeighbors:
    def test_empty_box_creation_count(self):
        b = len(G43.interior_boundary)
        moves = neighbors(G43, Configuration.empty(G43))
        assert len(moves) == 2 * b

    def test_single_interior_particle_hops(self):
        c = cfg(G43, s1_1=1)
        moves = neighbors(G43, c)
        kinds = [k for _, k in moves]
        assert kinds.count("hop") == 4
        # interior sites admit no creation/annihilation
        assert not any(m.get((1, 1)) == 0 and k.startswith("annihilate") for m, k in moves)

    def test_symmetric_relation(self):
        rng = np.random.default_rng(3)
        for code in rng.integers(0, 3**12, 12):
            c = Configuration.from_code(G43, int(code))
            for c2, _ in neighbors(G43, c):
                back = [cc for cc, _ in neighbors(G43, c2)]
                assert c in back

    def test_move_count_bound(self):
        bound = 2 * len(G43.nn_pairs()) + 2 * len(G43.interior_boundary)
        rng = np.random.default_rng(5)
        for code in rng.integers(0, 3**12, 20):
            assert len(neighbors(G43, Configuration.from_code(G43, int(code)))) <= bound

    def test_swap_commutes_with_neighbors(self):
        rng = np.random.default_rng(11)
        for code in rng.integers(0, 3**12, 8):
            c = Configuration.from_code(G43, int(code))
            a = {swap_types(n).occupancy for n, _ in neighbors(G43, c)}
            b = {n.occupancy for n, _ in neighbors(G43, swap_types(c))}
            assert a == b


class TestRate:
    def test_downhill_and_level_moves_rate_one(self):
        c = cfg(G43, s0_0=2)
        r, ex = rate(G43, P, 3.0, c, Configuration.empty(G43))
        assert r == 1.0 and ex == 0.0

    def test_boundary_creation_rate(self):
        c2 = cfg(G43, s0_0=2)
        r, ex = rate(G43, P, 2.0, Configuration.empty(G43), c2)
        assert ex == 1.5
        assert r == pytest.approx(math.exp(-2.0 * 1.5), rel=1e-15)

    def test_non_communicating_raises(self):
        far = cfg(G43, s1_1=1, s2_1=2)
        with pytest.raises(ValueError):
            rate(G43, P, 1.0, Configuration.empty(G43), far)

    def test_detailed_balance_random_pairs(self):
        rng = np.random.default_rng(7)
        beta = 1.7
        checked = 0
        while checked < 1000:
            c = Configuration.from_code(G43, int(rng.integers(0, 3**12)))
            moves = neighbors(G43, c)
            c2, _ = moves[int(rng.integers(0, len(moves)))]
            h1, h2 = hamiltonian(G43, P, c), hamiltonian(G43, P, c2)
            r12, _ = rate(G43, P, beta, c, c2)
            r21, _ = rate(G43, P, beta, c2, c)
            lhs = math.exp(-beta * float(h1)) * r12
            rhs = math.exp(-beta * float(h2)) * r21
            assert abs(lhs - rhs) <= 1e-12 * max(lhs, rhs)
            checked += 1


class TestSwapTypes:
    def test_involution_exhaustive_small(self):
        g = LatticeGeometry(2, 2)
        for code in range(3**4):
            c = Configuration.from_code(g, code)
            assert swap_types(swap_types(c)) == c

    def test_energy_shift_formula(self):
        c = cfg(G43, s1_1=1, s2_1=2, s0_0=1)  # (n1, n2) = (2, 1)
        h1 = hamiltonian(G43, P, c)
        h2 = hamiltonian(G43, P, swap_types(c))
        assert h2 - h1 == (2 - 1) * (P.delta2 - P.delta1) == Fraction(3, 5)

    def test_symmetric_params_invariant(self):
        p = ModelParams("1", "4/5", "4/5")
        g = LatticeGeometry(3, 3)
        rng = np.random.default_rng(13)
        for code in rng.integers(0, 3**9, 200):
            c = Configuration.from_code(g, int(code))
            assert hamiltonian(g, p, c) == hamiltonian(g, p, swap_types(c))


class TestCheckerboard:
    def test_plus_state_4x3(self):
        plus = checkerboard_plus(G43, P)
        assert hamiltonian(G43, P, plus) == Fraction(7, 5)
        occ = plus.occupancy
        assert sum(1 for v in occ if v) == 2  # interior only

    def test_empty_interior_raises(self):
        g = LatticeGeometry(2, 5)
        with pytest.raises(ValueError):
            checkerboard_plus(g, P)


class TestObservables:
    def test_droplets_partition_particles(self):
        g = LatticeGeometry(5, 4)
        c = Configuration.empty(g)
        for site, t in [((1, 1), 1), ((2, 1), 2), ((3, 1), 1), ((1, 2), 2), ((3, 2), 1)]:
            c = c.replace(site, t)
        o = observables(g, P, c)
        all_sites = set().union(*o.droplets) if o.droplets else set()
        assert len(all_sites) == o.n1 + o.n2
        # (3,2) type-1 bonds to nothing of different type adjacent in interior?
        # its neighbor (3,1) is type-1: same type, no bond -> separate droplet
        sizes = sorted(len(d) for d in o.droplets)
        assert sum(sizes) == 5
