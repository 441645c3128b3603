# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: exhaustive tables, union-find sweeps, and the KMC loop.

Pure-Python/numpy fallbacks with identical signatures live in _core_py.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

BACKEND = "cython"


# ---------------------------------------------------------------------------
# exhaustive energy table (base-3 odometer, incremental counts)
# ---------------------------------------------------------------------------

def build_energy_table(int n, long long[::1] pow3, int[:, ::1] int_nbr,
                       long long d1, long long d2, long long u):
    """Scaled integer H for every base-3 configuration code of n sites."""
    cdef long long total = 1
    cdef int i
    for i in range(n):
        total *= 3
    H_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] H = H_arr
    dig_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] dig = dig_arr
    cdef long long code
    cdef long long n1 = 0, n2 = 0, b = 0
    cdef int k, j, v, w, vj
    H[0] = 0
    for code in range(1, total):
        k = 0
        while True:
            v = dig[k]
            w = v + 1
            if w == 3:
                w = 0
            if v == 1:
                n1 -= 1
            elif v == 2:
                n2 -= 1
            if w == 1:
                n1 += 1
            elif w == 2:
                n2 += 1
            for j in range(4):
                vj = int_nbr[k, j]
                if vj < 0:
                    break
                if v * dig[vj] == 2:
                    b -= 1
                if w * dig[vj] == 2:
                    b += 1
            dig[k] = w
            if w != 0:
                break
            k += 1
        H[code] = d1 * n1 + d2 * n2 - u * b
    return H_arr


# ---------------------------------------------------------------------------
# detailed-balance audit over every communicating pair
# ---------------------------------------------------------------------------

def detailed_balance_max_err(long long[::1] H, int n, long long[::1] pow3,
                             int[:, ::1] nn_pairs, int[::1] bd_sites,
                             long long den, double beta):
    """Max relative error of mu_beta*c_beta symmetry over all directed edges."""
    cdef long long total = 1
    cdef int i
    for i in range(n):
        total *= 3
    dig_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] dig = dig_arr
    nbr_arr = np.zeros(nn_pairs.shape[0] + 2 * bd_sites.shape[0], dtype=np.int64)
    cdef long long[::1] nbr = nbr_arr
    cdef long long code, other, edges = 0
    cdef int k, m, cnt
    cdef double h1, h2, lhs, rhs, err, maxerr = 0.0, scale
    cdef double inv = 1.0 / <double> den

    for code in range(total):
        if code > 0:
            k = 0
            while True:
                if dig[k] == 2:
                    dig[k] = 0
                    k += 1
                else:
                    dig[k] += 1
                    break
        h1 = H[code] * inv
        cnt = neighbor_codes(code, dig, nn_pairs, bd_sites, pow3, nbr)
        for m in range(cnt):
            other = nbr[m]
            h2 = H[other] * inv
            lhs = exp(-beta * h1) * exp(-beta * (h2 - h1 if h2 > h1 else 0.0))
            rhs = exp(-beta * h2) * exp(-beta * (h1 - h2 if h1 > h2 else 0.0))
            scale = lhs if lhs > rhs else rhs
            if scale > 0:
                err = (lhs - rhs if lhs > rhs else rhs - lhs) / scale
                if err > maxerr:
                    maxerr = err
            edges += 1
    return maxerr, edges


# ---------------------------------------------------------------------------
# union-find machinery shared by the sweeps
# ---------------------------------------------------------------------------

cdef inline long long uf_find(long long[::1] parent, long long x) nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


cdef inline int neighbor_codes(long long code, unsigned char[::1] dig,
                               int[:, ::1] nn_pairs, int[::1] bd_sites,
                               long long[::1] pow3, long long[::1] out) nogil:
    """Fill `out` with all neighbor codes of `code`; returns their count."""
    cdef int cnt = 0, p, a, b, va, vb, i, s, vs
    cdef int npairs = nn_pairs.shape[0], nbd = bd_sites.shape[0]
    for p in range(npairs):
        a = nn_pairs[p, 0]
        b = nn_pairs[p, 1]
        va = dig[a]
        vb = dig[b]
        if (va == 0) != (vb == 0):
            out[cnt] = code + (vb - va) * (pow3[a] - pow3[b])
            cnt += 1
    for i in range(nbd):
        s = bd_sites[i]
        vs = dig[s]
        if vs == 0:
            out[cnt] = code + pow3[s]
            cnt += 1
            out[cnt] = code + 2 * pow3[s]
            cnt += 1
        else:
            out[cnt] = code - vs * pow3[s]
            cnt += 1
    return cnt


cdef inline void fill_digits(long long code, int n, unsigned char[::1] dig) nogil:
    cdef int k
    for k in range(n):
        dig[k] = code % 3
        code = code // 3


def stability_sweep(long long[::1] H, long long[::1] order, long long[::1] rank,
                    int n, long long[::1] pow3, int[:, ::1] nn_pairs,
                    int[::1] bd_sites):
    """Stability level V for every state (scaled; -1 marks the global minima).

    Ascending sweep with union-find; a component's min-energy plateau stays
    pending until the component first meets a strictly lower state, at which
    threshold the plateau's V resolves.
    """
    cdef long long total = H.shape[0]
    V_arr = np.full(total, -1, dtype=np.int64)
    cdef long long[::1] V = V_arr
    parent_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] parent = parent_arr
    minH_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] minH = minH_arr
    ph_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] pend_head = ph_arr
    pt_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] pend_tail = pt_arr
    pn_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] pnext = pn_arr

    dig_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] dig = dig_arr
    nbr_arr = np.zeros(nn_pairs.shape[0] + 2 * bd_sites.shape[0], dtype=np.int64)
    cdef long long[::1] nbr = nbr_arr

    cdef long long idx, code, nb, level, ra, rb, rlow, rhigh, s
    cdef int cnt, i

    for idx in range(total):
        code = order[idx]
        level = H[code]
        parent[code] = code
        minH[code] = level
        pend_head[code] = code
        pend_tail[code] = code
        pnext[code] = -1
        fill_digits(code, n, dig)
        cnt = neighbor_codes(code, dig, nn_pairs, bd_sites, pow3, nbr)
        for i in range(cnt):
            nb = nbr[i]
            if rank[nb] < idx:
                ra = uf_find(parent, code)
                rb = uf_find(parent, nb)
                if ra == rb:
                    continue
                if minH[ra] == minH[rb]:
                    pnext[pend_tail[ra]] = pend_head[rb]
                    pend_tail[ra] = pend_tail[rb]
                    parent[rb] = ra
                else:
                    if minH[ra] < minH[rb]:
                        rlow = ra
                        rhigh = rb
                    else:
                        rlow = rb
                        rhigh = ra
                    s = pend_head[rhigh]
                    while s != -1:
                        V[s] = level - minH[rhigh]
                        s = pnext[s]
                    parent[rhigh] = rlow
    return V_arr


def phi_sweep(long long[::1] H, long long[::1] order, long long[::1] rank,
              int n, long long[::1] pow3, int[:, ::1] nn_pairs,
              int[::1] bd_sites, long long[::1] targets):
    """Phi(eta, targets) for every state, by flag propagation in the sweep."""
    cdef long long total = H.shape[0]
    phi_arr = np.full(total, -1, dtype=np.int64)
    cdef long long[::1] phi = phi_arr
    parent_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] parent = parent_arr
    flag_arr = np.zeros(total, dtype=np.uint8)
    cdef unsigned char[::1] flagged = flag_arr
    mh_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] mhead = mh_arr
    mt_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] mtail = mt_arr
    mn_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] mnext = mn_arr

    tset_arr = np.zeros(total, dtype=np.uint8)
    cdef unsigned char[::1] is_target = tset_arr
    cdef long long t
    for t in range(targets.shape[0]):
        is_target[targets[t]] = 1

    dig_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] dig = dig_arr
    nbr_arr = np.zeros(nn_pairs.shape[0] + 2 * bd_sites.shape[0], dtype=np.int64)
    cdef long long[::1] nbr = nbr_arr

    cdef long long idx, code, nb, level, ra, rb, rf, ru, s
    cdef int cnt, i

    for idx in range(total):
        code = order[idx]
        level = H[code]
        parent[code] = code
        mhead[code] = code
        mtail[code] = code
        mnext[code] = -1
        if is_target[code]:
            flagged[code] = 1
            phi[code] = level
        fill_digits(code, n, dig)
        cnt = neighbor_codes(code, dig, nn_pairs, bd_sites, pow3, nbr)
        for i in range(cnt):
            nb = nbr[i]
            if rank[nb] < idx:
                ra = uf_find(parent, code)
                rb = uf_find(parent, nb)
                if ra == rb:
                    continue
                if flagged[ra] == flagged[rb]:
                    mnext[mtail[ra]] = mhead[rb]
                    mtail[ra] = mtail[rb]
                    parent[rb] = ra
                else:
                    if flagged[ra]:
                        rf = ra
                        ru = rb
                    else:
                        rf = rb
                        ru = ra
                    s = mhead[ru]
                    while s != -1:
                        phi[s] = level
                        s = mnext[s]
                    mnext[mtail[rf]] = mhead[ru]
                    mtail[rf] = mtail[ru]
                    parent[ru] = rf
    return phi_arr


def count_crossing_edges(long long[::1] H, int n, long long[::1] pow3,
                         int[:, ::1] nn_pairs, int[::1] bd_sites,
                         unsigned char[::1] in_K):
    """Unordered edges with exactly one endpoint in K.

    Returns (count, min over crossing edges of max(H, H'))."""
    cdef long long total = H.shape[0]
    dig_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] dig = dig_arr
    nbr_arr = np.zeros(nn_pairs.shape[0] + 2 * bd_sites.shape[0], dtype=np.int64)
    cdef long long[::1] nbr = nbr_arr
    cdef long long code, other, cnt = 0, lvl
    cdef long long minlvl = 0x7FFFFFFFFFFFFFFF
    cdef int k, i, m

    for code in range(total):
        if code > 0:
            k = 0
            while True:
                if dig[k] == 2:
                    dig[k] = 0
                    k += 1
                else:
                    dig[k] += 1
                    break
        m = neighbor_codes(code, dig, nn_pairs, bd_sites, pow3, nbr)
        for i in range(m):
            other = nbr[i]
            if other > code and in_K[code] != in_K[other]:
                cnt += 1
                lvl = H[code] if H[code] > H[other] else H[other]
                if lvl < minlvl:
                    minlvl = lvl
    return cnt, minlvl


# ---------------------------------------------------------------------------
# rejection-free KMC event loop
# ---------------------------------------------------------------------------

cdef inline long long code_in_sorted(long long[::1] arr, long long v) nogil:
    cdef long long lo = 0, hi = arr.shape[0] - 1, mid
    if hi < 0:
        return 0
    while lo <= hi:
        mid = (lo + hi) >> 1
        if arr[mid] == v:
            return 1
        if arr[mid] < v:
            lo = mid + 1
        else:
            hi = mid - 1
    return 0


def kmc_run(int n, int[:, ::1] nn_pairs, int[:, ::1] int_nbr, int[::1] bd_sites,
            long long[::1] pow3, long long d1, long long d2, long long u,
            long long den, double beta, unsigned char[::1] start_occ,
            long long[::1] absorb_codes, long long home_code,
            long long[::1] gate_codes, long long gate_level,
            long long[::1] cstar_codes, long long cstar_level,
            object rng, long long max_events):
    """Simulate until a state in absorb_codes is hit.

    Returns (absorbed_code, time, events, returns_home, final_gate_code,
    first_gate_code, final_passed_cstar, complete).
    """
    cdef int npairs = nn_pairs.shape[0], nbd = bd_sites.shape[0]
    cdef int max_moves = npairs + 2 * nbd

    cdef long long cache_cap = 1 << 16
    cdef long long cache_mask = cache_cap - 1
    slot_code_arr = np.full(cache_cap, -1, dtype=np.int64)
    cdef long long[::1] slot_code = slot_code_arr
    slot_off_arr = np.zeros(cache_cap, dtype=np.int64)
    cdef long long[::1] slot_off = slot_off_arr
    slot_cnt_arr = np.zeros(cache_cap, dtype=np.int32)
    cdef int[::1] slot_cnt = slot_cnt_arr
    slot_tot_arr = np.zeros(cache_cap, dtype=np.float64)
    cdef double[::1] slot_tot = slot_tot_arr
    cdef long long store_cap = cache_cap * 8
    tgt_arr = np.zeros(store_cap, dtype=np.int64)
    cdef long long[::1] store_tgt = tgt_arr
    rate_arr = np.zeros(store_cap, dtype=np.float64)
    cdef double[::1] store_rate = rate_arr
    # move metadata: site1 | val1<<8 | site2<<16 | val2<<24 (site2=0xFF: none)
    meta_arr = np.zeros(store_cap, dtype=np.int64)
    cdef long long[::1] store_meta = meta_arr
    dh_arr = np.zeros(store_cap, dtype=np.int64)
    cdef long long[::1] store_dh = dh_arr
    cdef long long store_used = 0, cache_used = 0

    occ_arr = np.array(start_occ, dtype=np.uint8, copy=True)
    cdef unsigned char[::1] occ = occ_arr

    cdef long long code = 0
    cdef int i, j, k, p, a, b, va, vb, s, vs, cnt, typ
    cdef int moved_from, moved_to
    for i in range(n):
        code += occ[i] * pow3[i]

    cdef long long n1 = 0, n2 = 0, bonds = 0
    for i in range(n):
        if occ[i] == 1:
            n1 += 1
        elif occ[i] == 2:
            n2 += 1
        for j in range(4):
            k = int_nbr[i, j]
            if k < 0:
                break
            if occ[i] * occ[k] == 2:
                bonds += 1
    cdef long long hcur = d1 * n1 + d2 * n2 - u * (bonds // 2)

    cdef long long BUF = 1 << 18
    if 2 * max_events + 2 < BUF:
        BUF = 2 * max_events + 2
    buf_obj = rng.random(BUF)
    cdef double[::1] buf = buf_obj
    cdef long long bpos = 0

    cdef double total_time = 0.0, r, acc, tot, rate, dh_f
    cdef double inv_den = 1.0 / <double> den
    cdef long long events = 0, returns_home = 0
    cdef long long final_gate = -1, first_gate = -1
    cdef int final_cstar = 0
    cdef long long absorbed = -1
    cdef int complete = 0
    cdef long long slot, off, dB, dh, meta
    cdef unsigned long long hashv
    cdef int chosen

    while events < max_events:
        hashv = (<unsigned long long> code) * 2654435769ULL
        slot = <long long> ((hashv >> 13) & <unsigned long long> cache_mask)
        while slot_code[slot] != code and slot_code[slot] != -1:
            slot = (slot + 1) & cache_mask
        if slot_code[slot] != code:
            if cache_used * 5 > cache_cap * 3 or store_used + max_moves > store_cap:
                slot_code_arr.fill(-1)
                cache_used = 0
                store_used = 0
                hashv = (<unsigned long long> code) * 2654435769ULL
                slot = <long long> ((hashv >> 13) & <unsigned long long> cache_mask)
            cnt = 0
            off = store_used
            tot = 0.0
            for p in range(npairs):
                a = nn_pairs[p, 0]
                b = nn_pairs[p, 1]
                va = occ[a]
                vb = occ[b]
                if (va == 0) != (vb == 0):
                    if va == 0:
                        moved_from = b
                        moved_to = a
                        typ = vb
                    else:
                        moved_from = a
                        moved_to = b
                        typ = va
                    dB = 0
                    for j in range(4):
                        k = int_nbr[moved_to, j]
                        if k < 0:
                            break
                        if k != moved_from and occ[k] * typ == 2:
                            dB += 1
                    for j in range(4):
                        k = int_nbr[moved_from, j]
                        if k < 0:
                            break
                        if k != moved_to and occ[k] * typ == 2:
                            dB -= 1
                    dh = -u * dB
                    store_tgt[off + cnt] = code + (vb - va) * (pow3[a] - pow3[b])
                    store_meta[off + cnt] = (moved_to | (typ << 8)
                                             | (moved_from << 16) | (0 << 24))
                    store_dh[off + cnt] = dh
                    dh_f = dh * inv_den
                    rate = exp(-beta * dh_f) if dh > 0 else 1.0
                    store_rate[off + cnt] = rate
                    tot += rate
                    cnt += 1
            for i in range(nbd):
                s = bd_sites[i]
                vs = occ[s]
                if vs == 0:
                    store_tgt[off + cnt] = code + pow3[s]
                    store_meta[off + cnt] = s | (1 << 8) | (0xFF << 16)
                    store_dh[off + cnt] = d1
                    rate = exp(-beta * d1 * inv_den)
                    store_rate[off + cnt] = rate
                    tot += rate
                    cnt += 1
                    store_tgt[off + cnt] = code + 2 * pow3[s]
                    store_meta[off + cnt] = s | (2 << 8) | (0xFF << 16)
                    store_dh[off + cnt] = d2
                    rate = exp(-beta * d2 * inv_den)
                    store_rate[off + cnt] = rate
                    tot += rate
                    cnt += 1
                else:
                    store_tgt[off + cnt] = code - vs * pow3[s]
                    store_meta[off + cnt] = s | (0 << 8) | (0xFF << 16)
                    store_dh[off + cnt] = -d1 if vs == 1 else -d2
                    store_rate[off + cnt] = 1.0
                    tot += 1.0
                    cnt += 1
            slot_code[slot] = code
            slot_off[slot] = off
            slot_cnt[slot] = cnt
            slot_tot[slot] = tot
            store_used += cnt
            cache_used += 1
        off = slot_off[slot]
        cnt = slot_cnt[slot]
        tot = slot_tot[slot]

        if bpos + 2 > BUF:
            buf_obj = rng.random(BUF)
            buf = buf_obj
            bpos = 0
        r = buf[bpos] * tot
        bpos += 1
        acc = 0.0
        chosen = cnt - 1
        for i in range(cnt):
            acc += store_rate[off + i]
            if r < acc:
                chosen = i
                break
        total_time += -log(1.0 - buf[bpos]) / tot
        bpos += 1
        events += 1

        meta = store_meta[off + chosen]
        a = <int> (meta & 0xFF)
        va = <int> ((meta >> 8) & 0xFF)
        b = <int> ((meta >> 16) & 0xFF)
        occ[a] = <unsigned char> va
        if b != 0xFF:
            occ[b] = 0
        code = store_tgt[off + chosen]
        hcur += store_dh[off + chosen]

        if code == home_code:
            returns_home += 1
            final_gate = -1
            final_cstar = 0
        else:
            if gate_codes.shape[0] > 0 and (gate_level < 0 or hcur == gate_level):
                if code_in_sorted(gate_codes, code):
                    if final_gate == -1:
                        final_gate = code
                    if first_gate == -1:
                        first_gate = code
            if cstar_codes.shape[0] > 0 and final_cstar == 0 and (cstar_level < 0 or hcur == cstar_level):
                if code_in_sorted(cstar_codes, code):
                    final_cstar = 1
        if code_in_sorted(absorb_codes, code):
            complete = 1
            break

    absorbed = code  # final state; `complete` says whether it is in the absorb set
    return (absorbed, total_time, events, returns_home, final_gate,
            first_gate, final_cstar, complete)
