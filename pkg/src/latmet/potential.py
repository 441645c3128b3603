"""Potential theory on the enumerated landscape: equilibrium potentials,
capacities, a priori bounds, the reduced variational constant Theta, and exact
mean hitting times.

All quantities are unnormalized: conductances are Z_beta*mu*c = exp(-beta*
max(H, H')), stored relative to exp(-beta*offset) with the offset factored out
so that beta = 10 runs never underflow.  The linear systems are symmetric
positive semi-definite graph Laplacians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .landscape import LandscapePartition, StateSpace

# The configuration graph is expander-like, so direct factorization fill-in
# explodes well before the usual 2D-mesh thresholds; CG takes over early.
DIRECT_LIMIT = 2500
CG_TOL = 1e-12
HARMONIC_TOL = 1e-9


# ---------------------------------------------------------------------------
# generic weighted-graph Dirichlet solver
# ---------------------------------------------------------------------------


@dataclass
class DirichletSolution:
    h: np.ndarray  # potential per node (nan on components without boundary)
    residual: float  # scaled harmonicity residual
    isolated: list  # node indices in components with no boundary data


def dirichlet_solve(n_nodes: int, edges, fixed: dict) -> DirichletSolution:
    """Solve the weighted-Laplacian Dirichlet problem on an arbitrary graph.

    edges: (ii, jj, w) arrays of unordered endpoints and conductances.
    fixed: node index -> boundary value.
    """
    ii, jj, w = (np.asarray(a) for a in edges)
    h = np.full(n_nodes, np.nan)
    for k, v in fixed.items():
        h[k] = v
    free = np.array([i for i in range(n_nodes) if i not in fixed], dtype=np.int64)
    if len(free) == 0:
        return DirichletSolution(h=h, residual=0.0, isolated=[])

    adj = sp.coo_matrix((w, (ii, jj)), shape=(n_nodes, n_nodes))
    adj = (adj + adj.T).tocsr()
    # components without boundary data cannot be solved: report them
    ncomp, labels = sp.csgraph.connected_components(adj, directed=False)
    anchored = np.zeros(ncomp, dtype=bool)
    for k in fixed:
        anchored[labels[k]] = True
    isolated = [int(i) for i in free if not anchored[labels[i]]]
    free = np.array([i for i in free if anchored[labels[i]]], dtype=np.int64)
    if len(free) == 0:
        return DirichletSolution(h=h, residual=0.0, isolated=isolated)

    pos = -np.ones(n_nodes, dtype=np.int64)
    pos[free] = np.arange(len(free))
    deg = np.asarray(adj.sum(axis=1)).ravel()
    lap = sp.diags(deg) - adj
    A = lap[free][:, free].tocsr()
    fixed_idx = np.array(sorted(fixed), dtype=np.int64)
    fixed_val = np.array([fixed[int(i)] for i in fixed_idx])
    B = adj[free][:, fixed_idx]
    b = B @ fixed_val

    if len(free) <= DIRECT_LIMIT:
        x = spla.spsolve(A.tocsc(), b)
    else:
        d = A.diagonal()
        M = sp.diags(1.0 / np.where(d > 0, d, 1.0))
        x, info = spla.cg(A, b, M=M, rtol=CG_TOL, atol=0.0, maxiter=20 * len(free))
        if info != 0:
            x = spla.spsolve(A.tocsc(), b)
    h[free] = x
    r = A @ x - b
    d = A.diagonal()
    residual = float(np.max(np.abs(r) / np.where(d > 0, d, 1.0))) if len(r) else 0.0
    return DirichletSolution(h=h, residual=residual, isolated=isolated)


def dirichlet_energy(edges, h: np.ndarray) -> float:
    ii, jj, w = edges
    dh = h[ii] - h[jj]
    good = ~np.isnan(dh)
    return float(np.sum(w[good] * dh[good] * dh[good]))


# ---------------------------------------------------------------------------
# lattice domains
# ---------------------------------------------------------------------------


def default_domain(space: StateSpace, gamma_star_scaled: int) -> np.ndarray:
    """X! domain: every state with H <= Gamma* (sorted codes)."""
    return np.flatnonzero(space.H <= gamma_star_scaled).astype(np.int64)


def domain_with_margin(space: StateSpace, level_scaled: int) -> np.ndarray:
    return np.flatnonzero(space.H <= level_scaled).astype(np.int64)


def domain_edges(space: StateSpace, domain: np.ndarray):
    """Unordered edges of the domain-induced subgraph.

    Returns (ii, jj, level) with ii/jj indices into `domain` and level the
    scaled max(H, H') of the edge.  Each unordered edge appears once.
    """
    codes = np.asarray(domain, dtype=np.int64)
    n = space.geometry.n_sites
    pow3 = space.pow3
    dig = ((codes[:, None] // pow3[None, :]) % 3).astype(np.int8)
    src_list, dst_list = [], []

    def push(src_codes, tgt_codes):
        idx = np.searchsorted(codes, tgt_codes)
        ok = (idx < len(codes)) & (codes[np.minimum(idx, len(codes) - 1)] == tgt_codes)
        src_list.append(np.searchsorted(codes, src_codes[ok]))
        dst_list.append(idx[ok])

    for a, b in space.nn_pairs:
        va, vb = dig[:, a].astype(np.int64), dig[:, b].astype(np.int64)
        mask = (va == 0) != (vb == 0)
        tgt = codes + (vb - va) * (int(pow3[a]) - int(pow3[b]))
        mask &= tgt > codes  # count each unordered hop edge once
        push(codes[mask], tgt[mask])
    for s in space.bd_sites:
        vs = dig[:, s].astype(np.int64)
        empty = vs == 0
        for t in (1, 2):
            tgt = codes[empty] + t * int(pow3[s])
            push(codes[empty], tgt)
    ii = np.concatenate(src_list) if src_list else np.empty(0, dtype=np.int64)
    jj = np.concatenate(dst_list) if dst_list else np.empty(0, dtype=np.int64)
    level = np.maximum(space.H[codes[ii]], space.H[codes[jj]])
    return ii, jj, level


def conductances(space: StateSpace, level: np.ndarray, beta: float, offset: int | None = None):
    """exp(-beta*(level-offset)/den); returns (weights, offset)."""
    if offset is None:
        offset = int(level.min()) if len(level) else 0
    w = np.exp(-beta * (level - offset).astype(np.float64) / space.den)
    return w, offset


# ---------------------------------------------------------------------------
# equilibrium potential and capacity
# ---------------------------------------------------------------------------


@dataclass
class PotentialField:
    beta: float
    domain: np.ndarray  # sorted codes
    values: np.ndarray  # h per domain entry
    source: list  # A codes
    sink: list  # B codes
    residual: float
    isolated: list

    def value_at(self, code: int) -> float:
        i = int(np.searchsorted(self.domain, code))
        if i >= len(self.domain) or self.domain[i] != code:
            raise KeyError(f"code {code} outside solve domain")
        return float(self.values[i])


@dataclass
class CapacityReport:
    beta: float
    cap_dirichlet: float  # Z*CAP in physical units
    cap_escape: float
    cap_reverse: float
    offset: float  # physical energy factored out of the conductances
    scaled_dirichlet: float  # Z*CAP * exp(beta*offset)
    phi_ab: object = None
    c1: float | None = None
    c2: int | None = None
    sandwich_ok: bool | None = None
    potential: PotentialField | None = None
    detail: dict = field(default_factory=dict)


def _resolve_domain(space, A, B, domain):
    from .landscape import _as_code_list

    a = sorted(set(_as_code_list(A)))
    b = sorted(set(_as_code_list(B)))
    if not a or not b or set(a) & set(b):
        raise ValueError("need non-empty disjoint source and sink sets")
    dom = np.asarray(domain, dtype=np.int64)
    dom = np.unique(np.concatenate([dom, np.asarray(a + b, dtype=np.int64)]))
    return a, b, dom


def equilibrium_potential(space: StateSpace, A, B, beta: float, domain) -> PotentialField:
    a, b, dom = _resolve_domain(space, A, B, domain)
    ii, jj, level = domain_edges(space, dom)
    w, _ = conductances(space, level, beta)
    fixed = {int(np.searchsorted(dom, c)): 1.0 for c in a}
    fixed.update({int(np.searchsorted(dom, c)): 0.0 for c in b})
    sol = dirichlet_solve(len(dom), (ii, jj, w), fixed)
    return PotentialField(
        beta=beta, domain=dom, values=sol.h, source=a, sink=b,
        residual=sol.residual, isolated=[int(dom[i]) for i in sol.isolated],
    )


def capacity(space: StateSpace, A, B, beta: float, domain) -> CapacityReport:
    """Z*CAP(A,B) by the Dirichlet form and by the escape representation."""
    a, b, dom = _resolve_domain(space, A, B, domain)
    ii, jj, level = domain_edges(space, dom)
    w, offset = conductances(space, level, beta)
    apos = [int(np.searchsorted(dom, c)) for c in a]
    bpos = [int(np.searchsorted(dom, c)) for c in b]
    fixed = {i: 1.0 for i in apos}
    fixed.update({i: 0.0 for i in bpos})
    sol = dirichlet_solve(len(dom), (ii, jj, w), fixed)
    h = np.where(np.isnan(sol.h), 0.0, sol.h)
    cap_d = dirichlet_energy((ii, jj, w), np.where(np.isnan(sol.h), 0.0, sol.h))

    # escape representation: sum over eta in A of mu*c(eta,.)*P_eta(tau_B < tau_A)
    in_a = np.zeros(len(dom), dtype=bool)
    in_a[apos] = True
    out_ij = in_a[ii] & ~in_a[jj]
    out_ji = in_a[jj] & ~in_a[ii]
    esc = float(np.sum(w[out_ij] * (1.0 - h[jj][out_ij]))
                + np.sum(w[out_ji] * (1.0 - h[ii][out_ji])))

    # reverse direction (capacity symmetry)
    fixed_r = {i: 0.0 for i in apos}
    fixed_r.update({i: 1.0 for i in bpos})
    sol_r = dirichlet_solve(len(dom), (ii, jj, w), fixed_r)
    cap_r = dirichlet_energy((ii, jj, w), np.where(np.isnan(sol_r.h), 0.0, sol_r.h))

    scale = math.exp(-beta * offset / space.den)
    fieldobj = PotentialField(
        beta=beta, domain=dom, values=sol.h, source=a, sink=b,
        residual=sol.residual, isolated=[int(dom[i]) for i in sol.isolated],
    )
    return CapacityReport(
        beta=beta,
        cap_dirichlet=cap_d * scale,
        cap_escape=esc * scale,
        cap_reverse=cap_r * scale,
        offset=offset / space.den,
        scaled_dirichlet=cap_d,
        potential=fieldobj,
    )


# ---------------------------------------------------------------------------
# a priori bounds (Lemma-style sandwich)
# ---------------------------------------------------------------------------


def apriori_bounds(space: StateSpace, A, B, betas, domain, stab_phis=None):
    """C1*e^{-beta*Phi} <= Z*CAP(A,B) <= C2*e^{-beta*Phi} at each beta.

    C2 counts the edges crossing K(A,B) = {Phi(.,A) <= Phi(.,B)} over the full
    space; C1 = 1/L for a witness optimal path.  Returns a per-beta table.
    """
    from . import kernels
    from .landscape import communication_height, phi_table

    a, b, _ = _resolve_domain(space, A, B, domain)
    phi_a = phi_table(space, a) if stab_phis is None else stab_phis[0]
    phi_b = phi_table(space, b) if stab_phis is None else stab_phis[1]
    phi_ab_scaled = min(int(phi_a[c]) for c in b)
    in_K = (phi_a <= phi_b).astype(np.uint8)
    c2, min_cross = kernels.count_crossing_edges(
        space.H, space.geometry.n_sites, space.pow3, space.nn_pairs,
        space.bd_sites, in_K,
    )
    phi_val, witness = communication_height(space, a, b)
    c1 = 1.0 / max(len(witness) - 1, 1)
    rows = []
    for beta in betas:
        rep = capacity(space, a, b, beta, domain)
        cap = rep.scaled_dirichlet * math.exp(
            -beta * (rep.offset - phi_ab_scaled / space.den)
        )  # Z*CAP / e^{-beta*Phi}
        rows.append({
            "beta": beta,
            "ratio_over_e_phi": cap,
            "lower_c1": c1,
            "upper_c2": float(c2),
            "ok": c1 - 1e-12 <= cap <= float(c2) + 1e-9,
        })
    return {
        "phi": phi_val,
        "phi_scaled": phi_ab_scaled,
        "c1": c1,
        "c2": int(c2),
        "witness_length": len(witness) - 1,
        "min_crossing_level_scaled": int(min_cross),
        "rows": rows,
        "all_ok": all(r["ok"] for r in rows),
    }


# ---------------------------------------------------------------------------
# reduced variational problem: Theta and K
# ---------------------------------------------------------------------------


@dataclass
class ThetaReport:
    theta: float
    k_value: float
    well_constants: list
    n_saddles: int
    residual: float


def theta_quotient(space: StateSpace, part: LandscapePartition) -> ThetaReport:
    """Unit-conductance reduced Dirichlet problem on X*.

    X_box collapses to potential 1, X_plus to 0, each well to one free node;
    level states stay individual.  Edge weights count state-graph multiplicity.
    """
    gs = part.gamma_star_scaled
    level = sorted(c for c in part.main_component if int(space.H[c]) == gs)
    well_of = {}
    for i, wset in enumerate(part.wells):
        for c in wset:
            well_of[c] = i
    nw = len(part.wells)
    # node ids: 0 = box, 1 = plus, 2..2+nw-1 wells, then level states
    node_of = {}
    for k, z in enumerate(level):
        node_of[z] = 2 + nw + k
    n_nodes = 2 + nw + len(level)
    weights: dict[tuple, float] = {}

    def bump(i, j):
        if i == j:
            return
        key = (i, j) if i < j else (j, i)
        weights[key] = weights.get(key, 0.0) + 1.0

    for z in level:
        zi = node_of[z]
        for nb in space.neighbor_codes(z):
            if nb in node_of:
                if nb > z:
                    bump(zi, node_of[nb])
            elif nb in part.comp_box:
                bump(zi, 0)
            elif nb in part.comp_plus:
                bump(zi, 1)
            elif nb in well_of:
                bump(zi, 2 + well_of[nb])
    if not weights:
        raise ValueError("no transitions at the Gamma* level; inconsistent partition")
    ii = np.array([k[0] for k in weights], dtype=np.int64)
    jj = np.array([k[1] for k in weights], dtype=np.int64)
    w = np.array(list(weights.values()))
    sol = dirichlet_solve(n_nodes, (ii, jj, w), {0: 1.0, 1: 0.0})
    h = np.where(np.isnan(sol.h), 0.0, sol.h)
    theta = dirichlet_energy((ii, jj, w), h)
    return ThetaReport(
        theta=float(theta),
        k_value=1.0 / float(theta),
        well_constants=[float(h[2 + i]) for i in range(nw)],
        n_saddles=len(level),
        residual=sol.residual,
    )


# ---------------------------------------------------------------------------
# h*-triviality profile and the metastable-pair quotient
# ---------------------------------------------------------------------------


def potential_triviality_profile(space: StateSpace, part: LandscapePartition, betas):
    """Per beta: 1-min h* on X_box, max h* on X_plus, max well oscillation."""
    dom = default_domain(space, part.gamma_star_scaled)
    rows = []
    for beta in betas:
        f = equilibrium_potential(space, [space.box_code], [space.plus_code], beta, dom)
        look = dict(zip(f.domain.tolist(), f.values.tolist()))
        one_minus = 1.0 - min(look[c] for c in part.comp_box)
        top = max(look[c] for c in part.comp_plus)
        osc = 0.0
        for wset in part.wells:
            vals = [look[c] for c in wset]
            osc = max(osc, max(vals) - min(vals))
        rows.append({"beta": beta, "oneMinusMinBox": one_minus,
                     "maxPlus": top, "maxWellOscillation": osc})
    out = {"rows": rows}
    if len(betas) >= 3:
        bs = np.array([r["beta"] for r in rows])
        for key in ("oneMinusMinBox", "maxPlus", "maxWellOscillation"):
            ys = np.array([r[key] for r in rows])
            if np.all(ys <= HARMONIC_TOL):
                # zero up to solver residual: trivial in the strict sense
                out[f"exactlyZero_{key}"] = True
            else:
                slope = np.polyfit(bs, np.log(np.maximum(ys, 1e-300)), 1)[0]
                out[f"decayExponent_{key}"] = float(-slope)
    return out


def metastable_pair_ratio(space: StateSpace, stab, part, beta: float, max_candidates=200):
    """Definition-style quotient showing {box, plus} is the metastable pair.

    The numerator max over eta outside the pair is taken over the states
    maximizing Phi(eta,{box,plus}) - H(eta) (the asymptotically dominant ones);
    states above Gamma* contribute only O(1) against an exploding denominator.
    """
    phi_pair = np.minimum(stab.phi_box, stab.phi_plus)
    excess = phi_pair - space.H
    mask = np.ones(space.n_states, dtype=bool)
    mask[[space.box_code, space.plus_code]] = False
    mask &= space.H < part.gamma_star_scaled
    order = np.argsort(excess[mask])[::-1]
    cand = np.flatnonzero(mask)[order][:max_candidates]
    thr = int(phi_pair[cand].max()) if len(cand) else part.gamma_star_scaled
    dom = domain_with_margin(space, max(thr, part.gamma_star_scaled))
    pair = [space.box_code, space.plus_code]
    num = 0.0
    arg = None
    for c in cand:
        rep = capacity(space, [int(c)], pair, beta, dom)
        mu = math.exp(-beta * int(space.H[c]) / space.den)
        val = mu / rep.cap_dirichlet
        if val > num:
            num, arg = val, int(c)
    rep_pair = capacity(space, [space.box_code], [space.plus_code], beta, dom)
    den = min(
        math.exp(-beta * int(space.H[space.box_code]) / space.den),
        math.exp(-beta * int(space.H[space.plus_code]) / space.den),
    ) / rep_pair.cap_dirichlet
    return {"beta": beta, "ratio": num / den, "numeratorArg": arg,
            "numerator": num, "denominator": den}


# ---------------------------------------------------------------------------
# exact mean hitting time
# ---------------------------------------------------------------------------


def mean_hitting_time(space: StateSpace, beta: float, domain=None, target=None, start=None):
    """E_start(tau_target) by solving the weighted-Laplacian system.

    (c_beta u)(eta) = -1 off the target, u(target) = 0; multiplying by mu
    symmetrizes it to Lap u = mu.  Full-space domain by default on boxes up to
    3^12 states, otherwise X!-like truncation with the dropped Gibbs mass
    reported.
    """
    target = space.plus_code if target is None else target
    start = space.box_code if start is None else start
    if domain is None:
        domain = np.arange(space.n_states, dtype=np.int64)
    dom = np.unique(np.asarray(domain, dtype=np.int64))
    ii, jj, level = domain_edges(space, dom)
    Hd = space.H[dom].astype(np.float64) / space.den
    h0 = float(Hd.min())
    w = np.exp(-beta * (level.astype(np.float64) / space.den - h0))
    mu = np.exp(-beta * (Hd - h0))
    tpos = int(np.searchsorted(dom, target))
    if tpos >= len(dom) or dom[tpos] != target:
        raise ValueError("target outside domain")
    n = len(dom)
    adj = sp.coo_matrix((w, (ii, jj)), shape=(n, n))
    adj = (adj + adj.T).tocsr()
    ncomp, labels = sp.csgraph.connected_components(adj, directed=False)
    keep = labels == labels[tpos]
    free = np.flatnonzero(keep)
    free = free[free != tpos]
    deg = np.asarray(adj.sum(axis=1)).ravel()
    lap = sp.diags(deg) - adj
    A = lap[free][:, free].tocsr()
    b = mu[free]
    if len(free) <= DIRECT_LIMIT:
        x = spla.spsolve(A.tocsc(), b)
    else:
        d = A.diagonal()
        M = sp.diags(1.0 / np.where(d > 0, d, 1.0))
        x, info = spla.cg(A, b, M=M, rtol=CG_TOL, atol=0.0, maxiter=40 * len(free))
        if info != 0:
            raise RuntimeError(f"CG failed to converge (info={info})")
    u = np.zeros(n)
    u[free] = x
    spos = int(np.searchsorted(dom, start))
    if dom[spos] != start or not keep[spos]:
        raise ValueError("start state not connected to target inside domain")
    dropped = 0.0
    if len(dom) < space.n_states:
        inside = np.zeros(space.n_states, dtype=bool)
        inside[dom] = True
        dropped = float(np.exp(-beta * (space.H[~inside] / space.den - h0)).sum())
    return {"mean": float(u[spos]), "droppedGibbsMass": dropped, "domainSize": int(n)}
