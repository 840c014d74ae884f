"""Inner loops for annealing and exhaustive search.

Two interchangeable backends share one contract:

* ``numba``: per-chain loops compiled with ``@njit`` (default when numba
  imports).
* ``numpy``: the same arithmetic vectorised across chains / across blocks
  of assignments.

Select with the ``ECDLP_QUBO_BACKEND`` environment variable (``numba`` or
``numpy``).  Both consume identical random streams and produce identical
annealing results; the acceptance test compares a pre-drawn exponential
variate against ``delta * beta`` so no transcendental function has to agree
bit for bit between the two.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")
NO_STOP = np.iinfo(np.int64).min


def default_backend() -> str:
    choice = os.environ.get("ECDLP_QUBO_BACKEND", "").strip().lower()
    if choice:
        if choice not in BACKENDS:
            raise ValueError(f"ECDLP_QUBO_BACKEND must be one of {BACKENDS}, got {choice!r}")
        if choice == "numba" and not HAVE_NUMBA:
            raise RuntimeError("ECDLP_QUBO_BACKEND=numba but numba is not installed")
        return choice
    return "numba" if HAVE_NUMBA else "numpy"


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


# -----------------------------------------------------------------------
# shared helpers


def local_fields(lin, indptr, indices, weights, x):
    """h_i = lin_i + sum_j w_ij x_j for a single assignment (numpy)."""
    h = lin.astype(np.int64).copy()
    rows = np.repeat(np.arange(len(lin)), np.diff(indptr))
    np.add.at(h, rows, weights * x[indices])
    return h


def full_energy(lin, indptr, indices, weights, x):
    """Energy without offset for 0/1 vector ``x`` (numpy, exact int64)."""
    rows = np.repeat(np.arange(len(lin)), np.diff(indptr))
    pair = weights * x[rows] * x[indices]
    return int(lin @ x) + int(pair.sum()) // 2


# -----------------------------------------------------------------------
# annealing: numpy backend (vectorised over chains)


def anneal_block_numpy(lin, dense, x, h, energy, best_e, best_x, perms, thresholds, betas,
                       active, stop=NO_STOP):
    """Run one block of sweeps for every chain in place.

    ``x``, ``h`` are (chains, N); ``energy``, ``best_e`` and the boolean
    ``active`` are (chains,); ``perms`` and ``thresholds`` are
    (chains, sweeps, N); ``betas`` (sweeps,).  A chain goes inactive as soon
    as its best energy is ``<= stop``.  Returns accepted flips per chain.
    """
    chains, n = x.shape
    rows = np.arange(chains)
    accepted = np.zeros(chains, dtype=np.int64)
    for s in range(betas.shape[0]):
        beta = betas[s]
        for t in range(perms.shape[2]):
            if not active.any():
                return accepted
            i = perms[:, s, t]
            xi = x[rows, i]
            delta = (1 - 2 * xi) * h[rows, i]
            ok = active & ((delta <= 0) | (delta * beta < thresholds[:, s, t]))
            if not ok.any():
                continue
            r = rows[ok]
            ii = i[ok]
            sign = 1 - 2 * xi[ok]
            x[r, ii] = 1 - xi[ok]
            h[r] += sign[:, None] * dense[ii]
            energy[r] += delta[ok]
            accepted[r] += 1
            better = energy[r] < best_e[r]
            if better.any():
                rb = r[better]
                best_e[rb] = energy[rb]
                best_x[rb] = x[rb]
                active[rb[best_e[rb] <= stop]] = False
    return accepted


def relax_numpy(dense, products, groups, x, h):
    """Set products, then group minima, for every chain; returns energy change."""
    de = np.zeros(len(x), dtype=np.int64)
    rows = np.arange(len(x))
    for z, a, b in products:
        want = x[:, a] & x[:, b]
        r = rows[x[:, z] != want]
        if len(r):
            sign = 1 - 2 * x[r, z]
            de[r] += sign * h[r, z]
            x[r, z] = want[r]
            h[r] += sign[:, None] * dense[z]
    for g in groups:
        de += _relax_group_numpy(g, dense, x, h)
    return de


def anneal_relax_numpy(dense, products, groups, x, h, energy, best_e, best_x, perms, thresholds,
                       betas, active, stop=NO_STOP):
    """Compound-move counterpart of :func:`anneal_block_numpy`.

    ``perms`` holds free-variable indices.  Each move flips one free bit,
    re-derives the ``(z, a, b)`` products in order, sets every group in
    ``groups`` (a list of ``GroupTable``) to its conditional minimum in
    order, and accepts or rejects the total change.
    """
    chains, n = x.shape
    rows = np.arange(chains)
    accepted = np.zeros(chains, dtype=np.int64)
    for s in range(betas.shape[0]):
        beta = betas[s]
        for t in range(perms.shape[2]):
            act = rows[active]
            if not len(act):
                return accepted
            x0, h0, e0 = x[act].copy(), h[act].copy(), energy[act].copy()
            xa, ha = x[act], h[act]
            sub = np.arange(len(act))
            i = perms[act, s, t]
            xi = xa[sub, i]
            sign = 1 - 2 * xi
            ea = e0 + sign * ha[sub, i]
            xa[sub, i] = 1 - xi
            ha += sign[:, None] * dense[i]
            ea += relax_numpy(dense, products, groups, xa, ha)
            delta = ea - e0
            ok = (delta <= 0) | (delta * beta < thresholds[act, s, t])
            xa[~ok], ha[~ok], ea[~ok] = x0[~ok], h0[~ok], e0[~ok]
            x[act], h[act], energy[act] = xa, ha, ea
            accepted[act[ok]] += 1
            better = act[energy[act] < best_e[act]]
            if len(better):
                best_e[better] = energy[better]
                best_x[better] = x[better]
                active[better[best_e[better] <= stop]] = False
    return accepted


def _relax_group_numpy(g, dense, x, h):
    m = g.members
    xm = x[:, m]
    # field on each member from everything outside the group
    a = h[:, m] - xm @ g.inner
    E = a @ g.codes_t + g.pair  # (chains, 2^c)
    cur = xm @ g.weights
    rows = np.arange(len(x))
    ecur = E[rows, cur]
    pick = E.argmin(axis=1)
    change = E[rows, pick] < ecur
    if not change.any():
        return np.zeros(len(x), dtype=np.int64)
    r = rows[change]
    diff = g.codes[pick[change]] - xm[change]  # entries in {-1, 0, 1}
    x[np.ix_(r, m)] += diff
    h[r] += diff @ dense[m]
    return np.where(change, E[rows, pick] - ecur, 0)


# -----------------------------------------------------------------------
# exhaustive search: numpy backend (meet in the middle over bit halves)


def _all_assignments(k: int) -> np.ndarray:
    codes = np.arange(1 << k, dtype=np.int64)
    return ((codes[:, None] >> np.arange(k, dtype=np.int64)) & 1).astype(np.int64)


def _half_energy(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    # Q upper triangular; x^T Q x with x binary
    return np.einsum("ai,ij,aj->a", X, Q, X, optimize=True) if X.shape[1] else np.zeros(len(X), np.int64)


def exhaustive_numpy(Q: np.ndarray, max_keep: int, block: int = 1 << 22):
    """Minimum of x^T Q x over {0,1}^N plus up to ``max_keep`` argmins.

    Returns ``(min_energy, codes, count)`` where codes are integers with bit
    i holding x_i, ascending, and ``count`` the exact number of argmins.
    """
    n = Q.shape[0]
    lo_bits = n // 2
    hi_bits = n - lo_bits
    Qll = Q[:lo_bits, :lo_bits]
    Qhh = Q[lo_bits:, lo_bits:]
    Qlh = Q[:lo_bits, lo_bits:]
    Xl = _all_assignments(lo_bits)
    El = _half_energy(Qll, Xl)
    XlC = Xl @ Qlh  # (2^lo, hi)
    best = None
    keep: list[np.ndarray] = []
    count = 0
    chunk = max(1, block >> lo_bits)
    n_hi = 1 << hi_bits
    for start in range(0, n_hi, chunk):
        codes_h = np.arange(start, min(start + chunk, n_hi), dtype=np.int64)
        Xh = ((codes_h[:, None] >> np.arange(hi_bits, dtype=np.int64)) & 1).astype(np.int64)
        Eh = _half_energy(Qhh, Xh)
        E = El[:, None] + Eh[None, :] + XlC @ Xh.T
        emin = int(E.min())
        if best is None or emin < best:
            best, keep, count = emin, [], 0
        if emin == best:
            a, b = np.nonzero(E == best)
            count += len(a)
            if sum(len(k) for k in keep) < max_keep:
                keep.append(a.astype(np.int64) | (codes_h[b] << lo_bits))
    codes = np.sort(np.concatenate(keep))[:max_keep] if keep else np.zeros(0, np.int64)
    return best, codes, count


# -----------------------------------------------------------------------
# numba backend

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def anneal_block_numba(lin, indptr, indices, weights, x, h, energy, best_e, best_x,
                           perms, thresholds, betas, stop):  # pragma: no cover - compiled
        """Single-chain counterpart of :func:`anneal_block_numpy`.

        ``energy``/``best_e`` are length-1 arrays so the state survives
        between blocks.  Returns ``(accepted, stopped)``.
        """
        n = x.shape[0]
        accepted = 0
        e = energy[0]
        be = best_e[0]
        for s in range(betas.shape[0]):
            beta = betas[s]
            for t in range(n):
                i = perms[s, t]
                xi = x[i]
                delta = (1 - 2 * xi) * h[i]
                if delta <= 0 or delta * beta < thresholds[s, t]:
                    sign = 1 - 2 * xi
                    x[i] = 1 - xi
                    for k in range(indptr[i], indptr[i + 1]):
                        h[indices[k]] += sign * weights[k]
                    e += delta
                    accepted += 1
                    if e < be:
                        be = e
                        for k in range(n):
                            best_x[k] = x[k]
                        if be <= stop:
                            energy[0] = e
                            best_e[0] = be
                            return accepted, True
        energy[0] = e
        best_e[0] = be
        return accepted, False

    @njit(cache=True, nogil=True)
    def _flip_numba(i, x, h, indptr, indices, weights):  # pragma: no cover - compiled
        sign = 1 - 2 * x[i]
        x[i] = 1 - x[i]
        for k in range(indptr[i], indptr[i + 1]):
            h[indices[k]] += sign * weights[k]

    @njit(cache=True, nogil=True)
    def anneal_relax_numba(indptr, indices, weights, prods, gptr, gvars, gwptr, gw, x, h, energy,
                           best_e, best_x, perms, thresholds, betas, stop):  # pragma: no cover
        """Single-chain counterpart of :func:`anneal_relax_numpy`.

        ``prods`` rows are ``(z, a, b)``.  Group g has members
        ``gvars[gptr[g]:gptr[g+1]]`` and its dense intra-group coupling
        matrix flattened at ``gw[gwptr[g]:]``.
        """
        n = x.shape[0]
        ngroups = gptr.shape[0] - 1
        x0 = x.copy()
        h0 = h.copy()
        a = np.zeros(16, dtype=np.int64)
        accepted = 0
        e = energy[0]
        be = best_e[0]
        for s in range(betas.shape[0]):
            beta = betas[s]
            for t in range(perms.shape[1]):
                for k in range(n):
                    x0[k] = x[k]
                    h0[k] = h[k]
                i = perms[s, t]
                total = (1 - 2 * x[i]) * h[i]
                _flip_numba(i, x, h, indptr, indices, weights)
                for r in range(prods.shape[0]):
                    z = prods[r, 0]
                    if x[z] != (x[prods[r, 1]] & x[prods[r, 2]]):
                        total += (1 - 2 * x[z]) * h[z]
                        _flip_numba(z, x, h, indptr, indices, weights)
                for g in range(ngroups):
                    lo = gptr[g]
                    c = gptr[g + 1] - lo
                    off = gwptr[g]
                    cur = 0
                    for j in range(c):
                        acc = h[gvars[lo + j]]
                        for l in range(c):
                            acc -= gw[off + j * c + l] * x[gvars[lo + l]]
                        a[j] = acc
                        cur |= x[gvars[lo + j]] << j
                    best_code = -1
                    ecur = 0
                    ebest = 0
                    for code in range(1 << c):
                        val = 0
                        for j in range(c):
                            if (code >> j) & 1:
                                val += a[j]
                                for l in range(j + 1, c):
                                    if (code >> l) & 1:
                                        val += gw[off + j * c + l]
                        if code == cur:
                            ecur = val
                        if best_code < 0 or val < ebest:
                            best_code = code
                            ebest = val
                    if ebest < ecur:
                        total += ebest - ecur
                        for j in range(c):
                            if ((best_code >> j) & 1) != ((cur >> j) & 1):
                                _flip_numba(gvars[lo + j], x, h, indptr, indices, weights)
                if total <= 0 or total * beta < thresholds[s, t]:
                    e += total
                    accepted += 1
                    if e < be:
                        be = e
                        for k in range(n):
                            best_x[k] = x[k]
                        if be <= stop:
                            energy[0] = e
                            best_e[0] = be
                            return accepted, True
                else:
                    for k in range(n):
                        x[k] = x0[k]
                        h[k] = h0[k]
        energy[0] = e
        best_e[0] = be
        return accepted, False

    @njit(cache=True, nogil=True)
    def exhaustive_numba(lin, indptr, indices, weights, max_keep):  # pragma: no cover - compiled
        """Gray-code walk over all 2^N assignments with O(degree) updates."""
        n = lin.shape[0]
        x = np.zeros(n, dtype=np.int64)
        h = lin.copy()
        e = 0
        best = 0
        keep = np.zeros(max_keep, dtype=np.int64)
        nkeep = 1
        keep[0] = 0
        count = 1
        code = 0
        total = np.int64(1) << n
        for step in range(1, total):
            # flip the lowest set bit of step
            i = 0
            s = step
            while (s & 1) == 0:
                s >>= 1
                i += 1
            xi = x[i]
            e += (1 - 2 * xi) * h[i]
            sign = 1 - 2 * xi
            x[i] = 1 - xi
            code ^= np.int64(1) << i
            for k in range(indptr[i], indptr[i + 1]):
                h[indices[k]] += sign * weights[k]
            if e < best:
                best = e
                count = 1
                keep[0] = code
                nkeep = 1
            elif e == best:
                count += 1
                if nkeep < max_keep:
                    keep[nkeep] = code
                    nkeep += 1
        return best, keep[:nkeep], count

else:  # pragma: no cover
    anneal_block_numba = None
    anneal_relax_numba = None
    exhaustive_numba = None
