"""Pure numpy implementations of the hot kernels.

These define the reference semantics; ``_ckernels.pyx`` must agree with them
bit for bit. Floating-point operations are kept in the same order as the
compiled loops (``r*r_j``, ``r*b_j + b``, ``S + x``).
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0

BACKEND = "python"


def mix64(z):
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniforms(keys, step):
    """The ``step``-th uniform of each trajectory stream, in [0, 1)."""
    with np.errstate(over="ignore"):
        z = mix64(keys + np.uint64(step + 1) * GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * _INV53


def stopping_words(ratios, transl, weights, threshold, cap, with_words=True):
    ratios = np.asarray(ratios, dtype=np.float64)
    transl = np.asarray(transl, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    m = ratios.size

    fr = np.ones(1)
    fb = np.zeros(1)
    fp = np.ones(1)
    fw = np.zeros((1, 0), dtype=np.uint16)
    out_r, out_b, out_p, out_w = [], [], [], []
    total = 0
    while fr.size:
        depth = fw.shape[1]
        # children of every live node, parent-major then letter order
        r = (fr[:, None] * ratios[None, :]).ravel()
        b = (fr[:, None] * transl[None, :] + fb[:, None]).ravel()
        p = (fp[:, None] * weights[None, :]).ravel()
        w = np.empty((fr.size * m, depth + 1), dtype=np.uint16)
        w[:, :depth] = np.repeat(fw, m, axis=0)
        w[:, depth] = np.tile(np.arange(m, dtype=np.uint16), fr.size)
        stop = r <= threshold
        total += int(stop.sum())
        if total > cap:
            raise OverflowError(total)
        out_r.append(r[stop])
        out_b.append(b[stop])
        out_p.append(p[stop])
        out_w.append(w[stop])
        live = ~stop
        # each live node has its own descendant in W_t, so this already bounds |W_t|
        if total + int(live.sum()) > cap:
            raise OverflowError(total)
        fr, fb, fp, fw = r[live], b[live], p[live], w[live]

    lengths = np.concatenate([np.full(len(x), x.shape[1], dtype=np.int64) for x in out_w])
    width = int(lengths.max())
    padded = np.zeros((lengths.size, width), dtype=np.int32)
    row = 0
    for block in out_w:
        padded[row:row + len(block), :block.shape[1]] = block
        row += len(block)
    # lexicographic order of a prefix-free set is the depth-first order
    order = np.lexsort(padded.T[::-1])
    r = np.concatenate(out_r)[order]
    b = np.concatenate(out_b)[order]
    p = np.concatenate(out_p)[order]
    if not with_words:
        return r, b, p, None, None
    lengths = lengths[order]
    offsets = np.zeros(lengths.size + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    mask = np.arange(width)[None, :] < lengths[:, None]
    letters = padded[order][mask].astype(np.uint16)
    return r, b, p, letters, offsets


def walk_stop(steps, cum, keys, t):
    """First passage of S_n = X_1 + ... + X_n over level t, one row per key."""
    steps = np.asarray(steps, dtype=np.float64)
    cum = np.asarray(cum, dtype=np.float64)
    keys = np.asarray(keys, dtype=np.uint64)
    n = keys.size
    n_t = np.zeros(n, dtype=np.int64)
    before = np.zeros(n, dtype=np.float64)
    crossing = np.zeros(n, dtype=np.float64)
    S = np.zeros(n, dtype=np.float64)
    idx = np.arange(n)
    k = 0
    last = steps.size - 1
    while idx.size:
        u = uniforms(keys[idx], k)
        j = np.minimum(np.searchsorted(cum, u, side="right"), last)
        x = steps[j]
        s_old = S[idx]
        s_new = s_old + x
        done = s_new >= t
        hit = idx[done]
        n_t[hit] = k + 1
        before[hit] = s_old[done]
        crossing[hit] = x[done]
        S[idx] = s_new
        idx = idx[~done]
        k += 1
    return n_t, before, crossing


def walk_window(steps, cum, keys, lo, hi):
    """All partial sums S_n (n >= 0) lying in [lo, hi], trajectory-major.

    Each walk is followed until S_n > hi. Returns (counts, positions).
    """
    steps = np.asarray(steps, dtype=np.float64)
    cum = np.asarray(cum, dtype=np.float64)
    keys = np.asarray(keys, dtype=np.uint64)
    n = keys.size
    last = steps.size - 1
    S = np.zeros(n, dtype=np.float64)
    owners, values = [], []
    if lo <= 0.0 <= hi:
        owners.append(np.arange(n))
        values.append(S.copy())
    idx = np.arange(n) if 0.0 <= hi else np.arange(0)
    k = 0
    while idx.size:
        u = uniforms(keys[idx], k)
        j = np.minimum(np.searchsorted(cum, u, side="right"), last)
        s_new = S[idx] + steps[j]
        S[idx] = s_new
        inside = (s_new >= lo) & (s_new <= hi)
        owners.append(idx[inside])
        values.append(s_new[inside])
        idx = idx[s_new <= hi]
        k += 1
    if owners:
        own = np.concatenate(owners)
        val = np.concatenate(values)
        order = np.argsort(own, kind="stable")
        own, val = own[order], val[order]
    else:
        own = np.zeros(0, dtype=np.int64)
        val = np.zeros(0, dtype=np.float64)
    counts = np.bincount(own, minlength=n).astype(np.int64)
    return counts, val
