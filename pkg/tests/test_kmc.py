import math
from collections import Counter

import numpy as np
import pytest

from latmet import kmc, landscape as L, potential as P
from latmet.geometry import LatticeGeometry
from latmet.model import Configuration, ModelParams

G33 = LatticeGeometry(3, 3)
P33 = ModelParams("1", "9/10", "3/2")


class TestSimulate:
    def test_determinism_same_seed(self):
        a = kmc.simulate_transition(G33, P33, 1.0, 42)
        b = kmc.simulate_transition(G33, P33, 1.0, 42)
        assert (a.hitting_time, a.events, a.excursion_count) == (
            b.hitting_time, b.events, b.excursion_count)

    def test_worker_count_independence(self):
        seeds = list(range(12))
        r1 = kmc.run_batch(G33, P33, 1.0, seeds, workers=1)
        r2 = kmc.run_batch(G33, P33, 1.0, seeds, workers=2)
        assert [(r.seed, r.hitting_time, r.events) for r in r1] == [
            (r.seed, r.hitting_time, r.events) for r in r2]

    def test_step_budget_flags_incomplete(self):
        r = kmc.simulate_transition(G33, P33, 1.0, 1, max_events=5)
        assert not r.complete and r.events == 5
        assert r.hitting_time > 0

    def test_beta0_matches_exact_mean(self, space_3x3):
        exact = P.mean_hitting_time(space_3x3, 0.0)["mean"]
        recs = kmc.run_batch(G33, P33, 0.0, range(400), workers=2)
        t = np.array([r.hitting_time for r in recs])
        se = t.std(ddof=1) / math.sqrt(len(t))
        assert abs(t.mean() - exact) <= 3 * se

    def test_committor_matches_equilibrium_potential(self, space_4x3, stab_4x3):
        # h*(eta) = P_eta(tau_box < tau_plus), validated at beta = 2
        sp = space_4x3
        dom = P.default_domain(sp, stab_4x3.gamma_star_scaled)
        g = sp.geometry
        eta = Configuration.empty(g).replace((1, 1), 1).replace((0, 0), 2).code
        f = P.equilibrium_potential(sp, [sp.box_code], [sp.plus_code], 2.0, dom)
        hstar = f.value_at(eta)
        # the full dynamics can leave X!, so simulate on the whole space
        p_hat, se = kmc.empirical_committor(
            g, sp.params, 2.0, eta, [sp.box_code], [sp.plus_code], 800, seed_base=7,
            workers=2,
        )
        # X!-domain truncation adds a small bias; 3 MC errors plus that margin
        assert abs(p_hat - hstar) <= 3 * se + 0.01


class TestEmpiricalDetailedBalance:
    def test_level_flux_symmetry(self, space_3x3):
        # drive the jump chain one event at a time (a fresh stream per step is
        # still the correct jump kernel) and compare up- vs down-crossings
        # between energy levels: reversibility balances them over long runs
        g, params = G33, P33
        u, d1, d2, den = params.scaled()
        args = (g.n_sites, g.nn_pairs(), g.interior_neighbor_table(),
                g.boundary_site_indices(), g.powers_of_three(), d1, d2, u, den)
        from latmet import kernels
        from latmet.model import Configuration

        empty = np.empty(0, dtype=np.int64)
        absorb = np.array([-5], dtype=np.int64)
        code = 0
        steps = 30000
        flux = Counter()
        for k in range(steps):
            occ = np.asarray(
                Configuration.from_code(g, code).occupancy, dtype=np.uint8
            )
            rng = np.random.Generator(np.random.Philox(key=90000 + k))
            out = kernels.kmc_run(*args, 1.0, occ, absorb, -1, empty, -1,
                                  empty, -1, rng, 1)
            nxt = int(out[0])
            pair = (int(space_3x3.H[code]), int(space_3x3.H[nxt]))
            flux[pair] += 1
            code = nxt
        asym = tot = 0
        for (a, b), n in flux.items():
            if a < b:
                m = flux.get((b, a), 0)
                asym += abs(n - m)
                tot += n + m
        assert tot > steps * 0.2
        assert asym / tot < 0.05


class TestBatchStatistics:
    def _fake_records(self, times, beta=2.0):
        return [
            kmc.TransitionRecord(
                seed=i, beta=beta, hitting_time=float(t), events=1,
                excursion_count=0, gate_entrance=-1, first_gate_entrance=-1,
                passed_cstar=True, absorbed_code=0, complete=True,
            )
            for i, t in enumerate(times)
        ]

    def test_requires_30_records(self):
        with pytest.raises(ValueError):
            kmc.batch_statistics(self._fake_records([1.0] * 10))

    def test_ks_null_distribution(self):
        # exponential inputs: p-value should exceed 0.01 in >= 95% of trials
        rng = np.random.default_rng(0)
        passed = 0
        trials = 60
        for _ in range(trials):
            times = rng.exponential(3.0, size=200)
            st = kmc.batch_statistics(self._fake_records(times))
            passed += st.ks_pvalue > 0.01
        assert passed >= 0.95 * trials

    def test_ks_rejects_non_exponential(self):
        rng = np.random.default_rng(1)
        times = rng.uniform(0.5, 1.5, size=400)
        st = kmc.batch_statistics(self._fake_records(times))
        assert st.ks_pvalue < 0.01

    def test_histogram_totals(self):
        recs = self._fake_records(np.linspace(1, 2, 40))
        for i, r in enumerate(recs):
            r.gate_entrance = 100 + (i % 4)
            r.first_gate_entrance = 100 + (i % 4)
        st = kmc.batch_statistics(recs, gate_codes=[100, 101, 102, 103])
        assert sum(st.entrance_histogram.values()) == 40
        assert st.chi_square_pvalue > 0.5  # perfectly uniform

    def test_arrhenius_field(self):
        recs = self._fake_records([2.0] * 50, beta=3.0)
        st = kmc.batch_statistics(recs, theta=5.0, gamma_star=1.0)
        assert st.arrhenius_ratio == pytest.approx(math.exp(-3.0) * 2.0 * 5.0)
