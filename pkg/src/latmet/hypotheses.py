"""Machine checks of the metastable-region condition, (H1)-(H3), and the
structural lemmas, for one (box, parameters) instance.

Every failing check carries a concrete counterexample that re-fails direct
recomputation; nothing is extrapolated beyond the instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geometry import LatticeGeometry
from .landscape import GateReport, LandscapePartition, StabilityReport, StateSpace
from .model import Configuration, ModelParams, hamiltonian, observables


@dataclass
class Check:
    passed: bool
    counterexamples: list = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "passed": bool(self.passed),
            "counterexamples": [int(c) for c in self.counterexamples[:16]],
            "detail": {k: _jsonable(v) for k, v in self.detail.items()},
        }


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class HypothesisVerdict:
    region_ok: bool
    proper_region_ok: bool
    box_is_global_min: bool
    h1: Check
    h1_strict: Check
    h2: Check
    h3a: Check
    h3b: Check
    h3c: Check
    v_star: object
    gamma_star: object
    lemma_checks: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in (self.h1, self.h2, self.h3a, self.h3b, self.h3c))

    def as_dict(self):
        return {
            "regionOk": self.region_ok,
            "properRegionOk": self.proper_region_ok,
            "boxIsGlobalMin": self.box_is_global_min,
            "h1": self.h1.as_dict(),
            "h1Strict": self.h1_strict.as_dict(),
            "h2": self.h2.as_dict(),
            "h3a": self.h3a.as_dict(),
            "h3b": self.h3b.as_dict(),
            "h3c": self.h3c.as_dict(),
            "vStar": _jsonable(self.v_star),
            "gammaStar": _jsonable(self.gamma_star),
            "lemmaChecks": {k: v for k, v in self.lemma_checks.items()},
            "allPass": self.all_pass,
        }


# ---------------------------------------------------------------------------
# metastable region
# ---------------------------------------------------------------------------


def check_metastable_region(params: ModelParams) -> tuple[bool, bool]:
    """(delta1+delta2 < 4U, and additionally not both deltas below U)."""
    region = params.delta1 + params.delta2 < 4 * params.U
    proper = region and not (params.delta1 < params.U and params.delta2 < params.U)
    return bool(region), bool(proper)


def negative_checkerboard(params: ModelParams):
    """Construct a checkerboard droplet with H < 0 (exists iff region holds).

    Returns (ell, geometry, config, energy): the smallest even square side
    whose checkerboard beats the empty box, placed in a box it just fits.
    """
    region, _ = check_metastable_region(params)
    if not region:
        raise ValueError("delta1+delta2 >= 4U: every configuration has H >= 0")
    s = params.delta1 + params.delta2
    ell = 2
    while not (ell * ell * s < 4 * ell * (ell - 1) * params.U):
        ell += 2
    geom = LatticeGeometry(ell + 2, ell + 2)
    occ = [0] * geom.n_sites
    for (x, y) in geom.interior:
        occ[geom.site_index((x, y))] = 1 if (x + y) % 2 == 0 else 2
    cfg = Configuration(geom, occ)
    h = hamiltonian(geom, params, cfg)
    return ell, geom, cfg, h


# ---------------------------------------------------------------------------
# hypotheses (H1)-(H3)
# ---------------------------------------------------------------------------


def _interior_pattern(space: StateSpace, code: int):
    g = space.geometry
    occ = Configuration.from_code(g, code).occupancy
    return tuple(occ[g.site_index(s)] for s in sorted(g.interior))


def check_hypotheses(
    space: StateSpace,
    stab: StabilityReport,
    part: LandscapePartition,
    gate: GateReport,
) -> HypothesisVerdict:
    g = space.geometry
    p = space.params
    region_ok, proper_ok = check_metastable_region(p)
    box_global = int(space.H.min()) >= int(space.H[space.box_code])

    # --- H1: X_stab = {plus} ---
    strict_bad = [c for c in stab.x_stab if c != space.plus_code]
    h1_strict = Check(passed=not strict_bad, counterexamples=strict_bad)
    plus_interior = _interior_pattern(space, space.plus_code)
    mod_bad = [
        c for c in stab.x_stab if _interior_pattern(space, c) != plus_interior
    ]
    h1 = Check(
        passed=not mod_bad,
        counterexamples=mod_bad,
        detail={"mode": "modulo-boundary", "strictPassed": h1_strict.passed},
    )

    # --- H2: V* < Gamma* off {box, plus} ---
    if stab.v_star_scaled < 0:
        mask = np.ones(space.n_states, dtype=bool)
        mask[[space.box_code, space.plus_code]] = False
        bad = [int(c) for c in np.flatnonzero(mask & (stab.v_scaled < 0))[:8]]
        h2 = Check(passed=False, counterexamples=bad,
                   detail={"reason": "infinite stability level off {box,plus}"})
    else:
        ok = stab.v_star_scaled < stab.gamma_star_scaled
        bad = []
        if not ok:
            mask = np.ones(space.n_states, dtype=bool)
            mask[[space.box_code, space.plus_code]] = False
            bad = [
                int(c)
                for c in np.flatnonzero(mask & (stab.v_scaled >= stab.gamma_star_scaled))[:8]
            ]
        h2 = Check(passed=ok, counterexamples=bad,
                   detail={"vStar": _jsonable(stab.v_star), "gammaStar": _jsonable(stab.gamma_star)})

    # --- H3-a: protocritical droplets and the gate shape ---
    interior_idx = {g.site_index(s) for s in g.interior}
    bd_idx = {g.site_index(s) for s in g.interior_boundary}
    bad_a, lstar = [], 0
    for pc in gate.protocritical:
        obs = observables(g, p, Configuration.from_code(g, pc))
        supp_idx = {g.site_index(s) for d in obs.droplets for s in d}
        if len(obs.droplets) != 1 or not supp_idx <= interior_idx:
            bad_a.append(pc)
            continue
        xs = [s[0] for d in obs.droplets for s in d]
        ys = [s[1] for d in obs.droplets for s in d]
        lstar = max(lstar, max(xs) - min(xs) + 1, max(ys) - min(ys) + 1)
    allow_type1 = p.delta1 == p.delta2
    proto_set = set(gate.protocritical)
    for z in gate.entrance:
        ok = False
        zocc = Configuration.from_code(g, z).occupancy
        for pred in space.neighbor_codes(z):
            if pred not in proto_set:
                continue
            pocc = Configuration.from_code(g, pred).occupancy
            diff = [i for i in range(g.n_sites) if zocc[i] != pocc[i]]
            if len(diff) != 1 or diff[0] not in bd_idx or pocc[diff[0]] != 0:
                continue
            t = zocc[diff[0]]
            if t == 2 or (t == 1 and allow_type1):
                ok = True
                break
        if not ok:
            bad_a.append(z)
    h3a = Check(passed=not bad_a, counterexamples=bad_a,
                detail={"empiricalLStar": lstar})

    # --- H3-b: transitions from C* adding particles or splitting droplets ---
    gs = part.gamma_star_scaled
    bad_b = []
    for c in gate.critical:
        obs = observables(g, p, Configuration.from_code(g, c))
        ndrop = len(obs.droplets)
        npart = obs.n1 + obs.n2
        for nb in space.neighbor_codes(c):
            if int(space.H[nb]) > gs:
                continue  # such transitions do lead above Gamma*
            obs2 = observables(g, p, Configuration.from_code(g, nb))
            if obs2.n1 + obs2.n2 > npart or len(obs2.droplets) > ndrop:
                bad_b.append((c, nb))
    h3b = Check(passed=not bad_b, counterexamples=[c for c, _ in bad_b],
                detail={"violatingMoves": [(int(a), int(b)) for a, b in bad_b[:16]]})

    # --- H3-c: optimal gate-to-plus paths pass C*_att; good exits exist ---
    att = set(gate.attached)
    xstar = set(int(c) for c in part.x_star)
    allowed = (xstar & part.main_component) - att
    bad_c, detail_c = [], {}
    reach = _reach_set(space, [c for c in gate.entrance if c not in att], allowed)
    if reach & part.comp_plus:
        bad_c = sorted(reach & part.comp_plus)[:8]
        detail_c["reason"] = "path from C*_bd to plus avoiding C*_att"
    # an attachment with Phi(.,plus) < Gamma* is exactly a good site
    by_proto_fail = [
        pc for pc in gate.protocritical if not gate.per_proto[pc].good_sites
    ]
    if by_proto_fail:
        detail_c["protoWithoutGoodAttachment"] = [int(c) for c in by_proto_fail[:16]]
    h3c = Check(
        passed=not bad_c and not by_proto_fail,
        counterexamples=bad_c + by_proto_fail,
        detail=detail_c,
    )

    return HypothesisVerdict(
        region_ok=region_ok,
        proper_region_ok=proper_ok,
        box_is_global_min=box_global,
        h1=h1,
        h1_strict=h1_strict,
        h2=h2,
        h3a=h3a,
        h3b=h3b,
        h3c=h3c,
        v_star=stab.v_star,
        gamma_star=stab.gamma_star,
    )


def _reach_set(space, seeds, allowed: set) -> set:
    from collections import deque

    seen = set(s for s in seeds if s in allowed)
    dq = deque(seen)
    while dq:
        c = dq.popleft()
        for nb in space.neighbor_codes(c):
            if nb in allowed and nb not in seen:
                seen.add(nb)
                dq.append(nb)
    return seen


# ---------------------------------------------------------------------------
# structural lemmas (consequences of (H1)-(H3))
# ---------------------------------------------------------------------------


def verify_structural_lemmas(
    space: StateSpace,
    stab: StabilityReport,
    part: LandscapePartition,
    gate: GateReport,
    verdict: HypothesisVerdict,
) -> dict:
    """Each lemma's conclusion, checked exhaustively, paired with its premises."""
    out = {}
    gs = stab.gamma_star_scaled

    # V_box = Gamma* (needs H1, H2)
    vbox = int(stab.v_scaled[space.box_code])
    out["empty-is-metastable"] = {
        "premises": {"h1": verdict.h1.passed, "h2": verdict.h2.passed},
        "premisesPass": verdict.h1.passed and verdict.h2.passed,
        "conclusionPass": vbox == gs,
        "detail": {"vBox": _jsonable(space.to_physical(vbox) if vbox >= 0 else None),
                   "gammaStar": _jsonable(stab.gamma_star)},
    }

    # Phi(eta, {box,plus}) - H(eta) <= V* for all eta (needs H2)
    phi_pair = np.minimum(stab.phi_box, stab.phi_plus)
    excess = phi_pair - space.H
    mask = np.ones(space.n_states, dtype=bool)
    mask[[space.box_code, space.plus_code]] = False
    vs = stab.v_star_scaled
    viol = np.flatnonzero(mask & (excess > (vs if vs >= 0 else np.iinfo(np.int64).max)))
    out["to-metastable-pair"] = {
        "premises": {"h2": verdict.h2.passed},
        "premisesPass": verdict.h2.passed,
        "conclusionPass": len(viol) == 0,
        "counterexamples": [int(c) for c in viol[:8]],
    }

    # H(eta) > H(box) whenever Phi(eta,box) <= Phi(eta,plus) (needs H1, H2)
    hbox = int(space.H[space.box_code])
    side = stab.phi_box <= stab.phi_plus
    mask2 = np.ones(space.n_states, dtype=bool)
    mask2[space.box_code] = False
    viol2 = np.flatnonzero(mask2 & side & (space.H <= hbox))
    out["empty-is-bottom"] = {
        "premises": {"h1": verdict.h1.passed, "h2": verdict.h2.passed},
        "premisesPass": verdict.h1.passed and verdict.h2.passed,
        "conclusionPass": len(viol2) == 0,
        "counterexamples": [int(c) for c in viol2[:8]],
    }

    # every optimal path C*_att -> box passes C*_bd (needs H3-a, H3-c)
    entrance = set(gate.entrance)
    xstar = set(int(c) for c in part.x_star)
    allowed = (xstar & part.main_component) - entrance
    reach = _reach_set(space, [c for c in gate.attached if c not in entrance], allowed)
    leak = sorted(reach & part.comp_box)[:8] if reach & part.comp_box else []
    out["backtrack-through-gate"] = {
        "premises": {"h3a": verdict.h3a.passed, "h3c": verdict.h3c.passed},
        "premisesPass": verdict.h3a.passed and verdict.h3c.passed,
        "conclusionPass": not leak,
        "counterexamples": [int(c) for c in leak],
    }
    return out
