"""Pure-Python/numpy fallback kernels (same API as the compiled _core).

Vectorized where numpy allows (tables, audits); the sweeps and the KMC loop
are plain Python and only practical on small boxes.  The compiled extension
is selected automatically when present; see latmet.kernels.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

_CHUNK = 1 << 18


def _digits_chunk(codes: np.ndarray, n: int) -> np.ndarray:
    """(len(codes), n) uint8 base-3 digit matrix."""
    pow3 = 3 ** np.arange(n, dtype=np.int64)
    return ((codes[:, None] // pow3[None, :]) % 3).astype(np.uint8)


def build_energy_table(n, pow3, int_nbr, d1, d2, u):
    total = 3**n
    bonds = []
    for i in range(n):
        for j in int_nbr[i]:
            if j < 0:
                break
            if j > i:
                bonds.append((i, int(j)))
    H = np.empty(total, dtype=np.int64)
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        d = _digits_chunk(np.arange(lo, hi, dtype=np.int64), n)
        n1 = (d == 1).sum(axis=1, dtype=np.int64)
        n2 = (d == 2).sum(axis=1, dtype=np.int64)
        b = np.zeros(hi - lo, dtype=np.int64)
        for (a, c) in bonds:
            b += (d[:, a].astype(np.int16) * d[:, c] == 2)
        H[lo:hi] = d1 * n1 + d2 * n2 - u * b
    return H


def _neighbor_codes_py(code, dig, nn_pairs, bd_sites, pow3):
    out = []
    for a, b in nn_pairs:
        va, vb = dig[a], dig[b]
        if (va == 0) != (vb == 0):
            out.append(code + (int(vb) - int(va)) * (int(pow3[a]) - int(pow3[b])))
    for s in bd_sites:
        vs = dig[s]
        if vs == 0:
            out.append(code + int(pow3[s]))
            out.append(code + 2 * int(pow3[s]))
        else:
            out.append(code - int(vs) * int(pow3[s]))
    return out


def detailed_balance_max_err(H, n, pow3, nn_pairs, bd_sites, den, beta):
    total = 3**n
    inv = 1.0 / float(den)
    maxerr = 0.0
    edges = 0
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        codes = np.arange(lo, hi, dtype=np.int64)
        d = _digits_chunk(codes, n)
        h1 = H[lo:hi] * inv
        targets = []
        for a, b in nn_pairs:
            va, vb = d[:, a].astype(np.int64), d[:, b].astype(np.int64)
            mask = (va == 0) != (vb == 0)
            targets.append((codes[mask] + (vb - va)[mask] * (int(pow3[a]) - int(pow3[b])), h1[mask]))
        for s in bd_sites:
            vs = d[:, s].astype(np.int64)
            empty = vs == 0
            targets.append((codes[empty] + int(pow3[s]), h1[empty]))
            targets.append((codes[empty] + 2 * int(pow3[s]), h1[empty]))
            occm = ~empty
            targets.append((codes[occm] - vs[occm] * int(pow3[s]), h1[occm]))
        for tgt, hsrc in targets:
            if len(tgt) == 0:
                continue
            h2 = H[tgt] * inv
            lhs = np.exp(-beta * hsrc) * np.exp(-beta * np.maximum(h2 - hsrc, 0.0))
            rhs = np.exp(-beta * h2) * np.exp(-beta * np.maximum(hsrc - h2, 0.0))
            scale = np.maximum(np.maximum(lhs, rhs), 1e-300)
            err = float(np.max(np.abs(lhs - rhs) / scale))
            maxerr = max(maxerr, err)
            edges += len(tgt)
    return maxerr, edges


class _DSU:
    __slots__ = ("parent",)

    def __init__(self, total):
        self.parent = np.empty(total, dtype=np.int64)

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x


def stability_sweep(H, order, rank, n, pow3, nn_pairs, bd_sites):
    total = len(H)
    V = np.full(total, -1, dtype=np.int64)
    dsu = _DSU(total)
    parent = dsu.parent
    minH = np.empty(total, dtype=np.int64)
    pend_head = np.empty(total, dtype=np.int64)
    pend_tail = np.empty(total, dtype=np.int64)
    pnext = np.empty(total, dtype=np.int64)
    nn = [(int(a), int(b)) for a, b in nn_pairs]
    bd = [int(s) for s in bd_sites]

    for idx in range(total):
        code = int(order[idx])
        level = int(H[code])
        parent[code] = code
        minH[code] = level
        pend_head[code] = code
        pend_tail[code] = code
        pnext[code] = -1
        dig = [(code // int(pow3[k])) % 3 for k in range(n)]
        for nb in _neighbor_codes_py(code, dig, nn, bd, pow3):
            if rank[nb] < idx:
                ra, rb = dsu.find(code), dsu.find(nb)
                if ra == rb:
                    continue
                if minH[ra] == minH[rb]:
                    pnext[pend_tail[ra]] = pend_head[rb]
                    pend_tail[ra] = pend_tail[rb]
                    parent[rb] = ra
                else:
                    rlow, rhigh = (ra, rb) if minH[ra] < minH[rb] else (rb, ra)
                    s = pend_head[rhigh]
                    while s != -1:
                        V[s] = level - minH[rhigh]
                        s = pnext[s]
                    parent[rhigh] = rlow
    return V


def phi_sweep(H, order, rank, n, pow3, nn_pairs, bd_sites, targets):
    total = len(H)
    phi = np.full(total, -1, dtype=np.int64)
    dsu = _DSU(total)
    parent = dsu.parent
    flagged = np.zeros(total, dtype=np.uint8)
    mhead = np.empty(total, dtype=np.int64)
    mtail = np.empty(total, dtype=np.int64)
    mnext = np.empty(total, dtype=np.int64)
    is_target = np.zeros(total, dtype=np.uint8)
    is_target[np.asarray(targets, dtype=np.int64)] = 1
    nn = [(int(a), int(b)) for a, b in nn_pairs]
    bd = [int(s) for s in bd_sites]

    for idx in range(total):
        code = int(order[idx])
        level = int(H[code])
        parent[code] = code
        mhead[code] = code
        mtail[code] = code
        mnext[code] = -1
        if is_target[code]:
            flagged[code] = 1
            phi[code] = level
        dig = [(code // int(pow3[k])) % 3 for k in range(n)]
        for nb in _neighbor_codes_py(code, dig, nn, bd, pow3):
            if rank[nb] < idx:
                ra, rb = dsu.find(code), dsu.find(nb)
                if ra == rb:
                    continue
                if flagged[ra] == flagged[rb]:
                    mnext[mtail[ra]] = mhead[rb]
                    mtail[ra] = mtail[rb]
                    parent[rb] = ra
                else:
                    rf, ru = (ra, rb) if flagged[ra] else (rb, ra)
                    s = mhead[ru]
                    while s != -1:
                        phi[s] = level
                        s = mnext[s]
                    mnext[mtail[rf]] = mhead[ru]
                    mtail[rf] = mtail[ru]
                    parent[ru] = rf
    return phi


def count_crossing_edges(H, n, pow3, nn_pairs, bd_sites, in_K):
    total = len(H)
    nn = [(int(a), int(b)) for a, b in nn_pairs]
    bd = [int(s) for s in bd_sites]
    cnt = 0
    minlvl = None
    for code in range(total):
        dig = [(code // int(pow3[k])) % 3 for k in range(n)]
        for other in _neighbor_codes_py(code, dig, nn, bd, pow3):
            if other > code and in_K[code] != in_K[other]:
                cnt += 1
                lvl = max(int(H[code]), int(H[other]))
                if minlvl is None or lvl < minlvl:
                    minlvl = lvl
    return cnt, (minlvl if minlvl is not None else 2**62)


def kmc_run(n, nn_pairs, int_nbr, bd_sites, pow3, d1, d2, u, den, beta,
            start_occ, absorb_codes, home_code, gate_codes, gate_level,
            cstar_codes, cstar_level, rng, max_events):
    occ = [int(v) for v in start_occ]
    nn = [(int(a), int(b)) for a, b in nn_pairs]
    bd = [int(s) for s in bd_sites]
    nbrs = [[int(j) for j in int_nbr[i] if j >= 0] for i in range(n)]
    p3 = [int(v) for v in pow3]
    code = sum(occ[i] * p3[i] for i in range(n))
    n1 = sum(1 for v in occ if v == 1)
    n2 = sum(1 for v in occ if v == 2)
    bonds = sum(
        1 for i in range(n) for j in nbrs[i] if j > i and occ[i] * occ[j] == 2
    )
    hcur = d1 * n1 + d2 * n2 - u * bonds
    absorb = set(int(c) for c in absorb_codes)
    gate = set(int(c) for c in gate_codes)
    cstar = set(int(c) for c in cstar_codes)
    inv = 1.0 / float(den)

    cache: dict[int, tuple] = {}
    total_time = 0.0
    events = returns_home = 0
    final_gate = first_gate = -1
    final_cstar = 0
    absorbed = -1
    complete = False
    bufn = min(1 << 14, 2 * max(int(max_events), 1) + 2)
    buf = rng.random(bufn)
    bpos = 0

    while events < max_events:
        entry = cache.get(code)
        if entry is None:
            moves = []
            for a, b in nn:
                va, vb = occ[a], occ[b]
                if (va == 0) != (vb == 0):
                    src, dst, typ = (b, a, vb) if va == 0 else (a, b, va)
                    dB = sum(1 for k in nbrs[dst] if k != src and occ[k] * typ == 2)
                    dB -= sum(1 for k in nbrs[src] if k != dst and occ[k] * typ == 2)
                    dh = -u * dB
                    tgt = code + (vb - va) * (p3[a] - p3[b])
                    r = math.exp(-beta * (dh * inv)) if dh > 0 else 1.0
                    moves.append((tgt, r, dh, dst, typ, src))
            for s in bd:
                vs = occ[s]
                if vs == 0:
                    moves.append((code + p3[s], math.exp(-beta * d1 * inv), d1, s, 1, -1))
                    moves.append((code + 2 * p3[s], math.exp(-beta * d2 * inv), d2, s, 2, -1))
                else:
                    dh = -d1 if vs == 1 else -d2
                    moves.append((code - vs * p3[s], 1.0, dh, s, 0, -1))
            tot = sum(m[1] for m in moves)
            entry = (moves, tot)
            if len(cache) > 1 << 16:
                cache.clear()
            cache[code] = entry
        moves, tot = entry

        if bpos + 2 > len(buf):
            buf = rng.random(bufn)
            bpos = 0
        r = buf[bpos] * tot
        bpos += 1
        acc = 0.0
        chosen = moves[-1]
        for m in moves:
            acc += m[1]
            if r < acc:
                chosen = m
                break
        total_time += -math.log(1.0 - buf[bpos]) / tot
        bpos += 1
        events += 1

        tgt, _, dh, site, val, src = chosen
        occ[site] = val
        if src >= 0:
            occ[src] = 0
        code = tgt
        hcur += dh

        if code == home_code:
            returns_home += 1
            final_gate = -1
            final_cstar = 0
        else:
            if gate and (gate_level < 0 or hcur == gate_level) and code in gate:
                if final_gate == -1:
                    final_gate = code
                if first_gate == -1:
                    first_gate = code
            if cstar and not final_cstar and (cstar_level < 0 or hcur == cstar_level) and code in cstar:
                final_cstar = 1
        if code in absorb:
            complete = True
            break

    absorbed = code  # final state; `complete` says whether it is in the absorb set
    return (absorbed, total_time, events, returns_home, final_gate,
            first_gate, final_cstar, int(complete))
