from fractions import Fraction

import numpy as np
import pytest

from latmet import hypotheses as HY
from latmet import landscape as L
from latmet.geometry import LatticeGeometry
from latmet.model import Configuration, ModelParams, hamiltonian


class TestMetastableRegion:
    def test_inside_region(self):
        p = ModelParams("1", "9/10", "3/2")
        assert HY.check_metastable_region(p) == (True, True)

    def test_outside_region_and_exhaustive_min(self):
        p = ModelParams("1", "5/2", "5/2")
        region, proper = HY.check_metastable_region(p)
        assert not region and not proper
        sp = L.StateSpace(LatticeGeometry(4, 3), p)
        assert int(sp.H.min()) == 0
        assert [int(c) for c in np.flatnonzero(sp.H == 0)] == [0]

    def test_improper_subregion(self):
        p = ModelParams("1", "1/2", "4/5")
        assert HY.check_metastable_region(p) == (True, False)

    def test_negative_checkerboard_construction(self):
        p = ModelParams("1", "9/10", "3/2")
        ell, geom, cfg, h = HY.negative_checkerboard(p)
        assert ell == 4
        assert (geom.width, geom.height) == (6, 6)
        # (l^2/2)(d1+d2) - 2l(l-1)U = 8*(12/5) - 24
        assert h == Fraction(-24, 5)
        assert h == hamiltonian(geom, p, cfg)
        assert h < 0

    def test_no_checkerboard_outside_region(self):
        with pytest.raises(ValueError):
            HY.negative_checkerboard(ModelParams("1", "5/2", "5/2"))


@pytest.fixture(scope="module")
def verdict_4x3(space_4x3, stab_4x3, part_4x3, gate_4x3):
    v = HY.check_hypotheses(space_4x3, stab_4x3, part_4x3, gate_4x3)
    v.lemma_checks = HY.verify_structural_lemmas(
        space_4x3, stab_4x3, part_4x3, gate_4x3, v
    )
    return v


@pytest.fixture(scope="module")
def verdict_5x3(space_5x3, stab_5x3, part_5x3, gate_5x3):
    v = HY.check_hypotheses(space_5x3, stab_5x3, part_5x3, gate_5x3)
    v.lemma_checks = HY.verify_structural_lemmas(
        space_5x3, stab_5x3, part_5x3, gate_5x3, v
    )
    return v


class TestHypotheses4x3:
    def test_verdicts(self, verdict_4x3):
        v = verdict_4x3
        assert v.region_ok and v.proper_region_ok
        # desk-scale box: the empty state is the global minimum
        assert v.box_is_global_min
        assert not v.h1.passed and not v.h1_strict.passed
        assert v.h2.passed
        assert not v.h3a.passed  # two-free-particle gate: boundary singletons in P
        assert v.h3b.passed

    def test_h1_counterexample_refails(self, verdict_4x3, space_4x3):
        c = verdict_4x3.h1.counterexamples[0]
        # recompute: the counterexample is a stable state differing from plus
        assert int(space_4x3.H[c]) == int(space_4x3.H.min())
        assert c != space_4x3.plus_code

    def test_h3a_counterexample_refails(self, verdict_4x3, space_4x3):
        from latmet.model import observables

        g = space_4x3.geometry
        found = False
        for c in verdict_4x3.h3a.counterexamples:
            obs = observables(g, space_4x3.params, Configuration.from_code(g, c))
            supp = {s for d in obs.droplets for s in d}
            if len(obs.droplets) != 1 or not supp <= g.interior:
                found = True
                break
        assert found

    def test_lemma_1_6_2_exhaustive(self, verdict_4x3):
        lm = verdict_4x3.lemma_checks["to-metastable-pair"]
        assert lm["premisesPass"] and lm["conclusionPass"]


class TestHypotheses5x3:
    def test_h1_h2_pass(self, verdict_5x3):
        assert verdict_5x3.h1_strict.passed
        assert verdict_5x3.h1.passed
        assert verdict_5x3.h2.passed
        assert verdict_5x3.v_star == 1
        assert verdict_5x3.gamma_star == Fraction(3, 2)

    def test_hyprel_implication(self, verdict_5x3):
        # H2 + (box not global min) + region => H1 must pass
        v = verdict_5x3
        assert v.h2.passed and v.region_ok and not v.box_is_global_min
        assert v.h1.passed

    def test_lemmas_with_premises(self, verdict_5x3):
        lm = verdict_5x3.lemma_checks
        assert lm["empty-is-metastable"]["premisesPass"]
        assert lm["empty-is-metastable"]["conclusionPass"]
        assert lm["empty-is-bottom"]["premisesPass"]
        assert lm["empty-is-bottom"]["conclusionPass"]
        assert lm["to-metastable-pair"]["conclusionPass"]

    def test_backtrack_conclusion(self, verdict_5x3):
        # conclusion verified even though the H3 premises fail here
        lm = verdict_5x3.lemma_checks["backtrack-through-gate"]
        assert lm["conclusionPass"]
        assert not lm["premisesPass"]


class TestH2Failure:
    def test_witnessed_counterexample(self):
        # deep improper subregion: the two bonded interior pairs are twin
        # global minima, so some state off {box, plus} has infinite stability
        g = LatticeGeometry(4, 3)
        p = ModelParams("1", "1/10", "3/20")
        sp = L.StateSpace(g, p)
        st = L.stability_levels(sp)
        part = L.partition(sp, st.gamma_star_scaled)
        gate = L.gate_analysis(sp, part)
        v = HY.check_hypotheses(sp, st, part, gate)
        assert not v.h2.passed
        assert v.h2.counterexamples
        c = v.h2.counterexamples[0]
        # the witness re-fails on recomputation: V_c is infinite (sentinel)
        # or at least Gamma*
        vc = int(st.v_scaled[c])
        assert vc == -1 or vc >= st.gamma_star_scaled


class TestVerdictShape:
    def test_json_roundtrip(self, verdict_4x3):
        import json

        d = verdict_4x3.as_dict()
        blob = json.dumps(d, sort_keys=True)
        back = json.loads(blob)
        assert back["h2"]["passed"] is True
        assert back["regionOk"] is True
        assert "lemmaChecks" in back
