import math

import numpy as np
import pytest

from latmet import srw


class TestCapacity:
    def test_m1_exact_hand_value(self):
        # B_1: 8 unknowns; by symmetry g(mid)=2/3, g(corner)=5/6, P = 2/3
        out = srw.escape_probability(1)
        assert out["escapeProbability"] == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_full_box_target_trivial(self):
        m = 3
        full = [(x, y) for x in range(-m, m + 1) for y in range(-m, m + 1)]
        sol = srw.srw_capacity(m, full)
        # every ring-to-box bond carries potential difference 1
        assert sol.capacity == pytest.approx(4 * (2 * m + 1), abs=1e-12)

    def test_square_symmetry(self):
        F = [(1, 2), (2, 2), (0, 1)]
        caps = []
        for k in range(4):
            def rot(s):
                x, y = s
                for _ in range(k):
                    x, y = -y, x
                return (x, y)
            caps.append(srw.srw_capacity(6, [rot(s) for s in F]).capacity)
            caps.append(srw.srw_capacity(6, [(-rot(s)[0], rot(s)[1]) for s in F]).capacity)
        assert max(caps) - min(caps) <= 1e-12

    def test_monotone_in_target(self):
        small = srw.srw_capacity(8, [(0, 0)]).capacity
        big = srw.srw_capacity(8, [(0, 0), (1, 0), (0, 1)]).capacity
        assert big >= small

    def test_maximum_principle(self):
        sol = srw.srw_capacity(8, [(0, 0), (2, 1)])
        assert -1e-12 <= sol.g_interior_min and sol.g_interior_max <= 1 + 1e-12
        assert sol.residual <= 1e-10

    def test_target_on_ring_rejected(self):
        with pytest.raises(ValueError):
            srw.srw_capacity(3, [(4, 0)])

    def test_obstacle_mode_close_to_plain(self):
        F = [(1, 0), (0, 1), (-1, 0), (0, -1)]  # ring around an obstacle at 0
        plain = srw.srw_capacity(16, F).capacity
        obst = srw.srw_capacity(16, F, mode="obstacle", obstacle=[(0, 0)]).capacity
        assert obst <= plain + 1e-12
        assert (plain - obst) / plain < 0.05


class TestEscape:
    def test_ratio_monotone(self):
        rows = [srw.escape_probability(m) for m in (4, 16, 64)]
        ratios = [r["ratio"] for r in rows]
        assert ratios[0] < ratios[1] < ratios[2] < 1.0


class TestThetaBounds:
    SHAPES = [
        {
            "support": [(0, 0, 1), (0, 1, 2), (1, 1, 1)],
            "cs": [(0, 0), (0, 1), (1, 0), (1, 1)],
            "cspp": sorted(
                {
                    (x, y)
                    for cx in (0, 1)
                    for cy in (0, 1)
                    for x, y in [(cx + 2, cy), (cx - 2, cy), (cx, cy + 2), (cx, cy - 2),
                                 (cx + 1, cy + 1), (cx - 1, cy + 1), (cx + 1, cy - 1), (cx - 1, cy - 1)]
                }
                - {(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (-1, 0), (0, 2), (0, -1),
                   (2, 1), (-1, 1), (1, 2), (1, -1)}
            ),
        }
    ]

    def test_theta1_below_theta2(self):
        tb = srw.theta_bounds(self.SHAPES, 8, workers=1)
        assert tb["theta1"] <= tb["theta2"]

    def test_single_placement_matches_direct(self):
        # a support spanning all of B_{M-1} admits exactly one placement
        m = 3
        side = 2 * (m - 1) + 1
        supp = [(x, y, 1) for x in range(side) for y in range(side)]
        shape = {
            "support": supp,
            "cs": [(x, y) for x, y, _ in supp],
            "cspp": [(x, y) for x, y, _ in supp],
        }
        tb = srw.theta_bounds([shape], m, epsilon=0.0, workers=1)
        direct = srw.srw_capacity(
            m, [(x - (m - 1), y - (m - 1)) for x, y, _ in supp]
        ).capacity
        assert tb["theta1"] == pytest.approx(direct, rel=1e-12)
        assert tb["perShape"][0]["placements"] == 1

    def test_kasymp_rows(self):
        rows = srw.kasymp_trend([4, 8], 1, self.SHAPES, workers=1)
        assert rows[0]["kasympRatio1"] >= rows[0]["kasympRatio2"]
        assert all(r["theta1"] <= r["theta2"] for r in rows)
