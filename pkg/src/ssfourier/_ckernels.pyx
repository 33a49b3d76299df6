# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics are defined by ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint16_t, uint64_t, int64_t
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memcpy

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, int64_t step) noexcept nogil:
    return <double>(mix64(key + <uint64_t>(step + 1) * GOLDEN) >> 11) * INV53


cdef inline Py_ssize_t pick(const double* cum, Py_ssize_t m, double u) noexcept nogil:
    cdef Py_ssize_t j = 0
    while j < m - 1 and u >= cum[j]:
        j += 1
    return j


cdef struct Buf:
    void* data
    Py_ssize_t size
    Py_ssize_t cap
    Py_ssize_t item


cdef int buf_init(Buf* buf, Py_ssize_t item, Py_ssize_t cap) noexcept nogil:
    buf.item = item
    buf.size = 0
    buf.cap = cap if cap > 16 else 16
    buf.data = malloc(buf.cap * item)
    return 0 if buf.data != NULL else -1


cdef int buf_reserve(Buf* buf, Py_ssize_t extra) noexcept nogil:
    cdef Py_ssize_t need = buf.size + extra
    cdef void* tmp
    if need <= buf.cap:
        return 0
    while buf.cap < need:
        buf.cap *= 2
    tmp = realloc(buf.data, buf.cap * buf.item)
    if tmp == NULL:
        return -1
    buf.data = tmp
    return 0


cdef int buf_ensure(Buf* buf, Py_ssize_t n) noexcept nogil:
    if n > buf.size:
        if buf_reserve(buf, n - buf.size):
            return -1
        buf.size = n
    return 0


cdef object buf_to_array(Buf* buf, object dtype):
    cdef Py_ssize_t nbytes = buf.size * buf.item
    arr = np.empty(buf.size, dtype=dtype)
    cdef char[::1] view
    if nbytes:
        view = arr.view(np.uint8)
        memcpy(&view[0], <char*>buf.data, nbytes)
    return arr


def stopping_words(ratios, transl, weights, double threshold, Py_ssize_t cap, bint with_words=True):
    cdef const double[::1] rr = np.ascontiguousarray(ratios, dtype=np.float64)
    cdef const double[::1] bb = np.ascontiguousarray(transl, dtype=np.float64)
    cdef const double[::1] pp = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t m = rr.shape[0]
    cdef Buf out_r, out_b, out_p, out_w, out_len
    # depth-first stack: per level the partial map and the next letter to try
    cdef Buf st_r, st_b, st_p, st_next
    cdef double cr, cb, cp, pr, pb, ppar
    cdef Py_ssize_t depth, j, total = 0, i
    cdef int err = 0
    cdef uint16_t* word

    buf_init(&out_r, sizeof(double), 1024)
    buf_init(&out_b, sizeof(double), 1024)
    buf_init(&out_p, sizeof(double), 1024)
    buf_init(&out_w, sizeof(uint16_t), 4096)
    buf_init(&out_len, sizeof(int64_t), 1024)
    buf_init(&st_r, sizeof(double), 64)
    buf_init(&st_b, sizeof(double), 64)
    buf_init(&st_p, sizeof(double), 64)
    buf_init(&st_next, sizeof(Py_ssize_t), 64)

    with nogil:
        (<double*>st_r.data)[0] = 1.0
        (<double*>st_b.data)[0] = 0.0
        (<double*>st_p.data)[0] = 1.0
        (<Py_ssize_t*>st_next.data)[0] = 0
        depth = 0
        while depth >= 0:
            j = (<Py_ssize_t*>st_next.data)[depth]
            if j >= m:
                depth -= 1
                continue
            (<Py_ssize_t*>st_next.data)[depth] = j + 1
            pr = (<double*>st_r.data)[depth]
            pb = (<double*>st_b.data)[depth]
            ppar = (<double*>st_p.data)[depth]
            cr = pr * rr[j]
            cb = pr * bb[j] + pb
            cp = ppar * pp[j]
            if (buf_ensure(&st_r, depth + 2) or buf_ensure(&st_b, depth + 2)
                    or buf_ensure(&st_p, depth + 2) or buf_ensure(&st_next, depth + 2)):
                err = 2
                break
            # the letter chosen at this level is next-1
            if cr <= threshold:
                total += 1
                if total > cap:
                    err = 1
                    break
                if (buf_reserve(&out_r, 1) or buf_reserve(&out_b, 1) or buf_reserve(&out_p, 1)
                        or buf_reserve(&out_len, 1)):
                    err = 2
                    break
                (<double*>out_r.data)[out_r.size] = cr
                (<double*>out_b.data)[out_b.size] = cb
                (<double*>out_p.data)[out_p.size] = cp
                (<int64_t*>out_len.data)[out_len.size] = depth + 1
                out_r.size += 1
                out_b.size += 1
                out_p.size += 1
                out_len.size += 1
                if with_words:
                    if buf_reserve(&out_w, depth + 1):
                        err = 2
                        break
                    word = (<uint16_t*>out_w.data) + out_w.size
                    for i in range(depth + 1):
                        word[i] = <uint16_t>((<Py_ssize_t*>st_next.data)[i] - 1)
                    out_w.size += depth + 1
            else:
                depth += 1
                (<double*>st_r.data)[depth] = cr
                (<double*>st_b.data)[depth] = cb
                (<double*>st_p.data)[depth] = cp
                (<Py_ssize_t*>st_next.data)[depth] = 0

    try:
        if err == 1:
            raise OverflowError(total)
        if err == 2:
            raise MemoryError()
        r = buf_to_array(&out_r, np.float64)
        b = buf_to_array(&out_b, np.float64)
        p = buf_to_array(&out_p, np.float64)
        if not with_words:
            return r, b, p, None, None
        lengths = buf_to_array(&out_len, np.int64)
        offsets = np.zeros(lengths.size + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        letters = buf_to_array(&out_w, np.uint16)
        return r, b, p, letters, offsets
    finally:
        free(out_r.data); free(out_b.data); free(out_p.data); free(out_w.data); free(out_len.data)
        free(st_r.data); free(st_b.data); free(st_p.data); free(st_next.data)


def walk_stop(steps, cum, keys, double t):
    cdef const double[::1] xs = np.ascontiguousarray(steps, dtype=np.float64)
    cdef const double[::1] cp = np.ascontiguousarray(cum, dtype=np.float64)
    cdef const uint64_t[::1] ks = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef Py_ssize_t n = ks.shape[0], m = xs.shape[0], i, j
    n_t_arr = np.zeros(n, dtype=np.int64)
    before_arr = np.zeros(n, dtype=np.float64)
    crossing_arr = np.zeros(n, dtype=np.float64)
    cdef int64_t[::1] n_t = n_t_arr
    cdef double[::1] before = before_arr
    cdef double[::1] crossing = crossing_arr
    cdef double S, x, s_new
    cdef int64_t k
    with nogil:
        for i in range(n):
            S = 0.0
            k = 0
            while True:
                j = pick(&cp[0], m, uniform(ks[i], k))
                x = xs[j]
                s_new = S + x
                k += 1
                if s_new >= t:
                    n_t[i] = k
                    before[i] = S
                    crossing[i] = x
                    break
                S = s_new
    return n_t_arr, before_arr, crossing_arr


def walk_window(steps, cum, keys, double lo, double hi):
    cdef const double[::1] xs = np.ascontiguousarray(steps, dtype=np.float64)
    cdef const double[::1] cp = np.ascontiguousarray(cum, dtype=np.float64)
    cdef const uint64_t[::1] ks = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef Py_ssize_t n = ks.shape[0], m = xs.shape[0], i, j
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] counts = counts_arr
    cdef Buf out
    cdef double S
    cdef int64_t k
    cdef int err = 0
    buf_init(&out, sizeof(double), 1024)
    with nogil:
        for i in range(n):
            S = 0.0
            if lo <= S <= hi:
                if buf_reserve(&out, 1):
                    err = 2
                    break
                (<double*>out.data)[out.size] = S
                out.size += 1
                counts[i] += 1
            k = 0
            while S <= hi:
                j = pick(&cp[0], m, uniform(ks[i], k))
                S = S + xs[j]
                k += 1
                if S >= lo and S <= hi:
                    if buf_reserve(&out, 1):
                        err = 2
                        break
                    (<double*>out.data)[out.size] = S
                    out.size += 1
                    counts[i] += 1
            if err:
                break
    try:
        if err:
            raise MemoryError()
        return counts_arr, buf_to_array(&out, np.float64)
    finally:
        free(out.data)
