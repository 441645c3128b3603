"""Exhaustive energy-landscape analysis on the enumerated configuration graph.

Communication heights and all-states stability levels come from a single
energy-ascending union-find sweep; gates, valleys and wells are read off the
subgraphs X* (H <= Gamma*) and X** (H < Gamma*).
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .geometry import LatticeGeometry
from .model import TYPE2, Configuration, ModelParams, checkerboard_plus

ENUM_LIMIT = 2**32  # refuse exhaustive enumeration beyond this many states


class EnumerationError(ValueError):
    pass


class StateSpace:
    """Enumerated configuration space with its scaled-integer energy table."""

    def __init__(self, geometry: LatticeGeometry, params: ModelParams):
        n = geometry.n_sites
        if 3**n > ENUM_LIMIT:
            raise EnumerationError(
                f"state space has 3^{n} = {3**n} configurations, beyond the "
                f"enumeration refusal threshold {ENUM_LIMIT}; use a smaller box"
            )
        self.geometry = geometry
        self.params = params
        u, d1, d2, den = params.scaled()
        self.scaled_u, self.scaled_d1, self.scaled_d2, self.den = u, d1, d2, den
        self.pow3 = geometry.powers_of_three()
        self.nn_pairs = geometry.nn_pairs()
        self.bd_sites = geometry.boundary_site_indices()
        self.int_nbr = geometry.interior_neighbor_table()
        self.H = kernels.build_energy_table(n, self.pow3, self.int_nbr, d1, d2, u)
        self.n_states = len(self.H)
        self.box_code = 0
        self.plus_code = checkerboard_plus(geometry, params).code
        self._order = None
        self._rank = None

    # -- energies ----------------------------------------------------------

    def energy(self, code: int):
        h = int(self.H[code])
        return Fraction(h, self.den) if self.params.exact else h / self.den

    def to_physical(self, scaled):
        if scaled is None:
            return None
        return Fraction(int(scaled), self.den) if self.params.exact else int(scaled) / self.den

    # -- adjacency (computed on demand, never stored) -----------------------

    def neighbor_codes(self, code: int) -> list[int]:
        dig = [(code // int(p)) % 3 for p in self.pow3]
        out = []
        for a, b in self.nn_pairs:
            va, vb = dig[a], dig[b]
            if (va == 0) != (vb == 0):
                out.append(code + (vb - va) * (int(self.pow3[a]) - int(self.pow3[b])))
        for s in self.bd_sites:
            vs = dig[s]
            if vs == 0:
                out.append(code + int(self.pow3[s]))
                out.append(code + 2 * int(self.pow3[s]))
            else:
                out.append(code - vs * int(self.pow3[s]))
        return out

    def order_rank(self):
        if self._order is None:
            order = np.argsort(self.H, kind="stable").astype(np.int64)
            rank = np.empty_like(order)
            rank[order] = np.arange(self.n_states, dtype=np.int64)
            self._order = order
            self._rank = rank
        return self._order, self._rank


# ---------------------------------------------------------------------------
# communication heights
# ---------------------------------------------------------------------------


def _as_code_list(states) -> list[int]:
    out = []
    for s in states:
        out.append(s.code if isinstance(s, Configuration) else int(s))
    return out


def phi_table(space: StateSpace, targets) -> np.ndarray:
    """Scaled Phi(eta, targets) for every state (union-find sweep)."""
    codes = np.asarray(sorted(_as_code_list(targets)), dtype=np.int64)
    if len(codes) == 0:
        raise ValueError("target set must be non-empty")
    order, rank = space.order_rank()
    return kernels.phi_sweep(
        space.H, order, rank, space.geometry.n_sites, space.pow3,
        space.nn_pairs, space.bd_sites, codes,
    )


def communication_height_value(space: StateSpace, A, B):
    """Phi(A, B) from the ascending union-find sweep (no witness path)."""
    a_codes, b_codes = _as_code_list(A), _as_code_list(B)
    if not a_codes or not b_codes:
        raise ValueError("communication height needs non-empty sets")
    common = set(a_codes) & set(b_codes)
    if common:
        c = min(common, key=lambda c: space.H[c])
        return space.to_physical(space.H[c])
    phi = phi_table(space, a_codes)
    best = min(b_codes, key=lambda c: phi[c])
    return space.to_physical(int(phi[best]))


def communication_height(space: StateSpace, A, B):
    """Phi(A, B) and a witness path attaining the minimax.

    The value comes from the ascending union-find sweep; the witness is a BFS
    path inside the sublevel set {H <= Phi}.
    """
    a_codes, b_codes = _as_code_list(A), _as_code_list(B)
    if not a_codes or not b_codes:
        raise ValueError("communication height needs non-empty sets")
    if set(a_codes) & set(b_codes):
        # degenerate call: Phi(eta, eta) = H(eta), empty path
        c = min(set(a_codes) & set(b_codes), key=lambda c: space.H[c])
        return space.to_physical(space.H[c]), [c]
    phi = phi_table(space, a_codes)
    best = min(b_codes, key=lambda c: phi[c])
    level = int(phi[best])
    path = _witness_path(space, a_codes, best, level)
    return space.to_physical(level), path


def _witness_path(space: StateSpace, sources: list[int], target: int, level: int):
    """BFS from target back to any source inside {H <= level}."""
    src = set(sources)
    prev = {target: None}
    dq = deque([target])
    found = None
    while dq:
        c = dq.popleft()
        if c in src:
            found = c
            break
        for nb in space.neighbor_codes(c):
            if nb not in prev and space.H[nb] <= level:
                prev[nb] = c
                dq.append(nb)
    if found is None:
        raise RuntimeError("witness path search failed; inconsistent Phi")
    path = [found]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path


def communication_height_dijkstra(space: StateSpace, A, B):
    """Independent minimax oracle: Dijkstra-style widest-path search.

    Grows states in order of the lowest achievable path maximum; used to
    cross-check the sweep, so it deliberately shares no code with it.
    """
    a_codes, b_codes = _as_code_list(A), _as_code_list(B)
    if not a_codes or not b_codes:
        raise ValueError("communication height needs non-empty sets")
    targets = set(b_codes)
    best: dict[int, int] = {}
    heap = []
    for c in a_codes:
        h = int(space.H[c])
        best[c] = h
        heapq.heappush(heap, (h, c))
    while heap:
        bottleneck, c = heapq.heappop(heap)
        if bottleneck > best.get(c, bottleneck):
            continue
        if c in targets:
            return space.to_physical(bottleneck)
        for nb in space.neighbor_codes(c):
            cand = max(bottleneck, int(space.H[nb]))
            if cand < best.get(nb, 2**62):
                best[nb] = cand
                heapq.heappush(heap, (cand, nb))
    raise RuntimeError("disconnected state graph")


# ---------------------------------------------------------------------------
# stability levels
# ---------------------------------------------------------------------------


@dataclass
class StabilityReport:
    v_scaled: np.ndarray  # -1 sentinel = +infinity (global minima)
    x_stab: list[int]
    x_meta: list[int]
    gamma: object
    gamma_star: object
    v_star: object
    gamma_star_scaled: int
    v_star_scaled: int
    phi_box: np.ndarray = field(repr=False, default=None)
    phi_plus: np.ndarray = field(repr=False, default=None)


def stability_levels(space: StateSpace) -> StabilityReport:
    """V_eta for every state plus (X_stab, X_meta, Gamma, Gamma*, V*)."""
    order, rank = space.order_rank()
    V = kernels.stability_sweep(
        space.H, order, rank, space.geometry.n_sites, space.pow3,
        space.nn_pairs, space.bd_sites,
    )
    minH = int(space.H.min())
    x_stab = [int(c) for c in np.flatnonzero(space.H == minH)]
    nonstab = V >= 0
    x_meta: list[int] = []
    gamma = None
    if nonstab.any():
        vmax = int(V[nonstab].max())
        x_meta = [int(c) for c in np.flatnonzero((V == vmax) & nonstab)]
        gamma = space.to_physical(vmax)
    phi_plus = phi_table(space, [space.plus_code])
    phi_box = phi_table(space, [space.box_code])
    gs = int(phi_plus[space.box_code]) - int(space.H[space.box_code])
    mask = np.ones(space.n_states, dtype=bool)
    mask[space.box_code] = False
    mask[space.plus_code] = False
    finite = mask & (V >= 0)
    vs = int(V[finite].max()) if finite.any() else 0
    if (mask & (V < 0)).any():
        vs = None  # a third global minimum: V* is infinite off {box, plus}
    return StabilityReport(
        v_scaled=V,
        x_stab=x_stab,
        x_meta=x_meta,
        gamma=gamma,
        gamma_star=space.to_physical(gs),
        v_star=space.to_physical(vs) if vs is not None else None,
        gamma_star_scaled=gs,
        v_star_scaled=vs if vs is not None else -1,
        phi_box=phi_box,
        phi_plus=phi_plus,
    )


# ---------------------------------------------------------------------------
# partition into X*, X**, valleys and wells
# ---------------------------------------------------------------------------


@dataclass
class LandscapePartition:
    gamma_star_scaled: int
    x_star: np.ndarray  # sorted codes with H <= Gamma*
    x_star_star: np.ndarray  # sorted codes with H < Gamma*
    comp_box: set
    comp_plus: set
    wells: list[set]
    isolated: list[set]  # X** components outside the main X* component
    main_component: set  # X*-connected component containing box and plus


def _components(codes: set, adjacency) -> list[set]:
    comps = []
    seen: set[int] = set()
    for c in codes:
        if c in seen:
            continue
        comp = {c}
        dq = deque([c])
        while dq:
            x = dq.popleft()
            for nb in adjacency(x):
                if nb in codes and nb not in comp:
                    comp.add(nb)
                    dq.append(nb)
        seen |= comp
        comps.append(comp)
    return comps


def partition(space: StateSpace, gamma_star_scaled: int) -> LandscapePartition:
    gs = gamma_star_scaled
    x_star = np.flatnonzero(space.H <= gs).astype(np.int64)
    x_star_star = np.flatnonzero(space.H < gs).astype(np.int64)
    xss = set(int(c) for c in x_star_star)
    if space.box_code not in xss or space.plus_code not in xss:
        raise ValueError(
            "degenerate parameters: the empty or checkerboard state sits on "
            "the communication level set (missing from X**)"
        )
    comps = _components(xss, space.neighbor_codes)
    comp_box = comp_plus = None
    rest = []
    for comp in comps:
        if space.box_code in comp:
            comp_box = comp
        elif space.plus_code in comp:
            comp_plus = comp
        else:
            rest.append(comp)
    if comp_box is comp_plus:
        raise ValueError("box and plus connected strictly below Gamma*")
    xs = set(int(c) for c in x_star)
    main = None
    for comp in _components(xs, space.neighbor_codes):
        if space.box_code in comp:
            main = comp
            break
    if space.plus_code not in main:
        raise ValueError("box and plus not connected within X*; Gamma* inconsistent")
    wells, isolated = [], []
    for comp in rest:
        (wells if next(iter(comp)) in main else isolated).append(comp)
    wells.sort(key=lambda c: (min(space.H[i] for i in c), min(c)))
    return LandscapePartition(
        gamma_star_scaled=gs,
        x_star=x_star,
        x_star_star=x_star_star,
        comp_box=comp_box,
        comp_plus=comp_plus,
        wells=wells,
        isolated=isolated,
        main_component=main,
    )


# ---------------------------------------------------------------------------
# gates, protocritical droplets, site sets
# ---------------------------------------------------------------------------


@dataclass
class ProtoDroplet:
    code: int
    support: tuple  # ((x, y, type), ...)
    attach_sites: tuple  # A(eta)
    good_sites: tuple  # G(eta)
    bad_sites: tuple  # B(eta)
    well_indices: tuple  # I(eta)
    cs: tuple  # CS = supp u G
    cs_plus: tuple
    cs_plus_plus: tuple


@dataclass
class GateReport:
    level_set: list[int]
    on_path: list[int]
    crossing: list[int]  # saddles on a simple valley-to-valley route
    entrance: list[int]  # C*_bd
    protocritical: list[int]  # P
    critical: list[int]  # C*
    attached: list[int]  # C*_att
    n_star: int
    droplet_classes: list[tuple]
    per_proto: dict
    essential: dict | None  # code -> bool, None when undecided


def _reachable(space, seeds, allowed: set) -> set:
    seen = set(s for s in seeds if s in allowed)
    dq = deque(seen)
    while dq:
        c = dq.popleft()
        for nb in space.neighbor_codes(c):
            if nb in allowed and nb not in seen:
                seen.add(nb)
                dq.append(nb)
    return seen


def _support(space, code):
    g = space.geometry
    occ = Configuration.from_code(g, code).occupancy
    return tuple(
        (g.site_at(i)[0], g.site_at(i)[1], occ[i]) for i in range(g.n_sites) if occ[i]
    )


def _canonical_pattern(supp):
    xs = [s[0] for s in supp]
    ys = [s[1] for s in supp]
    x0, y0 = min(xs), min(ys)
    return tuple(sorted((x - x0, y - y0, t) for x, y, t in supp))


def gate_analysis(space: StateSpace, part: LandscapePartition) -> GateReport:
    gs = part.gamma_star_scaled
    main = part.main_component
    level = [c for c in main if space.H[c] == gs]

    allowed = main
    from_box = _reachable(space, part.comp_box, allowed)
    from_plus = _reachable(space, part.comp_plus, allowed)
    on_path = sorted(c for c in level if c in from_box and c in from_plus)
    if not on_path:
        raise ValueError("communication level set is empty; Gamma* inconsistent")

    # Saddles on a simple valley-to-valley route in the plateau graph, with
    # X_box, X_plus and each well collapsed to a supernode (they are
    # asymptotically equipotential, so a crossing route is a simple path
    # there).  Saddles failing this are dead-ends: every path through them
    # must revisit a valley, so they never carry the crossing.
    crossing = _crossing_saddles(space, part, level)

    entrance, proto = [], set()
    for z in crossing:
        preds = [nb for nb in space.neighbor_codes(z) if nb in part.comp_box]
        if preds:
            entrance.append(z)
            proto.update(preds)
    entrance.sort()
    protocritical = sorted(proto)

    g = space.geometry
    well_of: dict[int, int] = {}
    for i, w in enumerate(part.wells):
        for c in w:
            well_of[c] = i
    # the free/attaching particle is type 2; for equal activation energies the
    # landscape is type-symmetric and either type crosses (Remark-style case)
    particle_types = [(TYPE2, space.scaled_d2)]
    if space.params.delta1 == space.params.delta2:
        particle_types.append((1, space.scaled_d1))

    critical, attached = set(), set()
    per_proto: dict[int, ProtoDroplet] = {}
    for pcode in protocritical:
        cfg = Configuration.from_code(g, pcode)
        supp = _support(space, pcode)
        occupied = {(x, y) for x, y, _ in supp}
        h0 = int(space.H[pcode])
        a_sites, g_sites, b_sites, wells_touched = [], [], [], set()
        # neighbors of the support inside the box
        halo = set()
        for (x, y, _) in supp:
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                s = (x + dx, y + dy)
                if s not in occupied and 0 <= s[0] < g.width and 0 <= s[1] < g.height:
                    halo.add(s)
        for s in sorted(halo):
            idx = g.site_index(s)
            if cfg.occupancy[idx] != 0:
                continue
            for t, _dt in particle_types:
                code2 = pcode + t * int(space.pow3[idx])
                h2 = int(space.H[code2])
                if h2 < gs:  # attaching formed at least one active bond
                    if s not in a_sites:
                        a_sites.append(s)
                    attached.add(code2)
                    if code2 in part.comp_plus:
                        if s not in g_sites:
                            g_sites.append(s)
                    elif code2 in well_of:
                        if s not in b_sites:
                            b_sites.append(s)
                        wells_touched.add(well_of[code2])
        # critical set: a free particle anywhere (no bond formed)
        for idx in range(g.n_sites):
            if cfg.occupancy[idx] == 0:
                for t, dt in particle_types:
                    code2 = pcode + t * int(space.pow3[idx])
                    if int(space.H[code2]) == h0 + dt:
                        critical.add(code2)
        cs = sorted({(x, y) for x, y, _ in supp} | set(g_sites))
        csp = sorted(_outer_boundary(cs))
        cspp = sorted(_outer_boundary(sorted(set(cs) | set(csp))))
        per_proto[pcode] = ProtoDroplet(
            code=pcode,
            support=supp,
            attach_sites=tuple(a_sites),
            good_sites=tuple(g_sites),
            bad_sites=tuple(b_sites),
            well_indices=tuple(sorted(wells_touched)),
            cs=tuple(cs),
            cs_plus=tuple(csp),
            cs_plus_plus=tuple(cspp),
        )

    classes = sorted({_canonical_pattern(per_proto[p].support) for p in protocritical})
    essential = None
    if g.n_sites <= 9:
        essential = _essential_flags(space, part, on_path)
    return GateReport(
        level_set=sorted(level),
        on_path=on_path,
        crossing=crossing,
        entrance=entrance,
        protocritical=protocritical,
        critical=sorted(critical),
        attached=sorted(attached),
        n_star=len(classes),
        droplet_classes=classes,
        per_proto=per_proto,
        essential=essential,
    )


def _crossing_saddles(space, part: LandscapePartition, level) -> list[int]:
    """Level states on a simple X_box-to-X_plus path in the plateau graph.

    Vertices: level states plus one supernode per X** piece (-1 box, -2 plus,
    -3-i well i).  A vertex lies on a simple s-t path iff its biconnected
    block sits on the s-t path of the block-cut tree.
    """
    BOX, PLUS = -1, -2
    well_of: dict[int, int] = {}
    for i, w in enumerate(part.wells):
        for c in w:
            well_of[c] = i
    level_set = set(level)
    adj: dict[int, set] = {BOX: set(), PLUS: set()}
    for z in level_set:
        edges = adj.setdefault(z, set())
        for nb in space.neighbor_codes(z):
            if nb in level_set:
                edges.add(nb)
            elif nb in part.comp_box:
                edges.add(BOX)
                adj[BOX].add(z)
            elif nb in part.comp_plus:
                edges.add(PLUS)
                adj[PLUS].add(z)
            elif nb in well_of:
                wnode = -3 - well_of[nb]
                edges.add(wnode)
                adj.setdefault(wnode, set()).add(z)
    qualifying = vertices_on_simple_path(adj, BOX, PLUS)
    return sorted(z for z in level_set if z in qualifying)


def vertices_on_simple_path(adj: dict, s, t) -> set:
    """All vertices lying on at least one simple s-t path of an undirected graph."""
    if s not in adj or t not in adj:
        return set()
    blocks, _ = biconnected_blocks(adj, s)
    if not any(t in b for b in blocks):
        return set()
    # block-cut tree: bipartite between block ids and cut vertices (vertices
    # appearing in more than one block)
    appears: dict = {}
    for bi, b in enumerate(blocks):
        for v in b:
            appears.setdefault(v, []).append(bi)
    cuts = {v for v, bs in appears.items() if len(bs) > 1}
    tree: dict = {}
    for bi, b in enumerate(blocks):
        tree.setdefault(("b", bi), set())
        for v in b & cuts:
            tree[("b", bi)].add(("c", v))
            tree.setdefault(("c", v), set()).add(("b", bi))

    def anchor(v):
        return ("c", v) if v in cuts else ("b", appears[v][0])

    start, goal = anchor(s), anchor(t)
    prev = {start: None}
    dq = deque([start])
    while dq:
        x = dq.popleft()
        if x == goal:
            break
        for y in tree.get(x, ()):
            if y not in prev:
                prev[y] = x
                dq.append(y)
    if goal not in prev:
        return set()
    out = set()
    node = goal
    while node is not None:
        kind, val = node
        if kind == "b":
            out |= blocks[val]
        else:
            out.add(val)
        node = prev[node]
    return out


def biconnected_blocks(adj: dict, root):
    """Iterative Hopcroft-Tarjan; returns (blocks, cut vertices) of root's component."""
    disc: dict = {}
    low: dict = {}
    parent: dict = {root: None}
    blocks: list[set] = []
    estack: list[tuple] = []
    counter = 0
    stack = [(root, iter(sorted(adj.get(root, ()), key=repr)))]
    disc[root] = low[root] = counter
    counter += 1
    while stack:
        v, it = stack[-1]
        advanced = False
        for w in it:
            if w not in disc:
                parent[w] = v
                disc[w] = low[w] = counter
                counter += 1
                estack.append((v, w))
                stack.append((w, iter(sorted(adj.get(w, ()), key=repr))))
                advanced = True
                break
            elif w != parent.get(v) and disc[w] < disc[v]:
                estack.append((v, w))
                low[v] = min(low[v], disc[w])
        if advanced:
            continue
        stack.pop()
        if stack:
            u = stack[-1][0]
            low[u] = min(low[u], low[v])
            if low[v] >= disc[u]:
                block = set()
                while estack:
                    a, b = estack.pop()
                    block.add(a)
                    block.add(b)
                    if (a, b) == (u, v):
                        break
                if block:
                    blocks.append(block)
    if not blocks and root in adj:
        blocks.append({root})
    cuts = set()
    seen_in: dict = {}
    for bi, b in enumerate(blocks):
        for x in b:
            if x in seen_in and seen_in[x] != bi:
                cuts.add(x)
            seen_in.setdefault(x, bi)
    return blocks, cuts


def _outer_boundary(sites):
    cells = set(sites)
    out = set()
    for (x, y) in cells:
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            s = (x + dx, y + dy)
            if s not in cells:
                out.add(s)
    return out


# ---------------------------------------------------------------------------
# essentiality of saddles (exhaustive, tiny spaces only)
# ---------------------------------------------------------------------------


def _essential_flags(space, part, on_path, path_cap: int = 200000):
    """Essential/dead-end classification by enumerating optimal simple paths.

    A saddle is unessential iff every optimal path through it can be replaced
    by one whose saddle-visits are a strict subset avoiding it.  Returns None
    (undecided) if the path enumeration exceeds the cap.
    """
    gs = part.gamma_star_scaled
    allowed = part.main_component
    traces = enumerate_optimal_saddle_traces(
        space.neighbor_codes,
        lambda c: int(space.H[c]),
        set(allowed),
        space.box_code,
        space.plus_code,
        gs,
        path_cap,
    )
    if traces is None:
        return None
    return classify_essential(traces, on_path)


def enumerate_optimal_saddle_traces(adjacency, energy, allowed, start, end, level, cap):
    """All distinct saddle-visit sets over optimal simple paths start->end."""
    traces: set[frozenset] = set()
    count = 0
    stack = [(start, {start}, frozenset())]
    while stack:
        node, visited, trace = stack.pop()
        count += 1
        if count > cap:
            return None
        if node == end:
            traces.add(trace)
            continue
        for nb in adjacency(node):
            if nb in allowed and nb not in visited:
                t = trace | {nb} if energy(nb) == level else trace
                stack.append((nb, visited | {nb}, t))
    return traces


def classify_essential(traces, saddles):
    """MNOS-style classification given the family of saddle-visit sets."""
    flags = {}
    for z in saddles:
        ess = False
        for t in traces:
            if z in t and not any(o <= (t - {z}) for o in traces):
                ess = True
                break
        flags[z] = ess
    return flags
