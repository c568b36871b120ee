"""Numba-compiled hot loops backing the tensor ops.

Everything here is single-threaded and deterministic. BLAS matmuls stay in
numpy; these kernels cover the memory-bound elementwise passes (layernorm,
softmax, GELU, attention head gather/scatter, Adam) where per-op numpy
overhead would otherwise dominate at desk-scale tensor sizes.

fastmath uses only value-safe flags (reassociation/contraction) so NaN and
Inf propagation stays intact for the engine's finite-value checks.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_FM = {"reassoc", "contract", "arcp"}


@njit(cache=True, fastmath=_FM)
def layernorm_fwd(x, gain, bias, eps):
    n, e = x.shape
    y = np.empty_like(x)
    xhat = np.empty_like(x)
    inv = np.empty(n, dtype=x.dtype)
    for i in range(n):
        m = x.dtype.type(0.0)
        for j in range(e):
            m += x[i, j]
        m /= e
        v = x.dtype.type(0.0)
        for j in range(e):
            d = x[i, j] - m
            v += d * d
        v /= e
        iv = x.dtype.type(1.0) / np.sqrt(v + eps)
        inv[i] = iv
        for j in range(e):
            h = (x[i, j] - m) * iv
            xhat[i, j] = h
            y[i, j] = h * gain[j] + bias[j]
    return y, xhat, inv


@njit(cache=True, fastmath=_FM)
def layernorm_bwd(dy, xhat, inv, gain):
    n, e = dy.shape
    dx = np.empty_like(dy)
    dgain = np.zeros(e, dtype=dy.dtype)
    dbias = np.zeros(e, dtype=dy.dtype)
    for i in range(n):
        s1 = dy.dtype.type(0.0)
        s2 = dy.dtype.type(0.0)
        for j in range(e):
            g = dy[i, j]
            dgain[j] += g * xhat[i, j]
            dbias[j] += g
            gh = g * gain[j]
            s1 += gh
            s2 += gh * xhat[i, j]
        s1 /= e
        s2 /= e
        for j in range(e):
            dx[i, j] = (dy[i, j] * gain[j] - s1 - xhat[i, j] * s2) * inv[i]
    return dx, dgain, dbias


@njit(cache=True, fastmath=_FM)
def softmax2d(x, inv_temp):
    n, k = x.shape
    out = np.empty_like(x)
    for i in range(n):
        mx = x[i, 0]
        for j in range(1, k):
            if x[i, j] > mx:
                mx = x[i, j]
        tot = x.dtype.type(0.0)
        for j in range(k):
            e = np.exp((x[i, j] - mx) * inv_temp)
            out[i, j] = e
            tot += e
        for j in range(k):
            out[i, j] /= tot
    return out


@njit(cache=True, fastmath=_FM)
def softmax2d_bwd(s, dy, inv_temp):
    n, k = s.shape
    dx = np.empty_like(s)
    for i in range(n):
        dot = s.dtype.type(0.0)
        for j in range(k):
            dot += s[i, j] * dy[i, j]
        for j in range(k):
            dx[i, j] = s[i, j] * (dy[i, j] - dot) * inv_temp
    return dx


@njit(cache=True, fastmath=_FM)
def softmax3d_inplace(s):
    b, m, k = s.shape
    for i in range(b):
        for r in range(m):
            mx = s[i, r, 0]
            for j in range(1, k):
                if s[i, r, j] > mx:
                    mx = s[i, r, j]
            tot = s.dtype.type(0.0)
            for j in range(k):
                e = np.exp(s[i, r, j] - mx)
                s[i, r, j] = e
                tot += e
            for j in range(k):
                s[i, r, j] /= tot


@njit(cache=True, fastmath=_FM)
def softmax3d_bwd_inplace(s, ds, scale):
    """ds <- s * (ds - sum(ds*s)) * scale, rowwise over the last axis."""
    b, m, k = s.shape
    for i in range(b):
        for r in range(m):
            dot = s.dtype.type(0.0)
            for j in range(k):
                dot += s[i, r, j] * ds[i, r, j]
            for j in range(k):
                ds[i, r, j] = s[i, r, j] * (ds[i, r, j] - dot) * scale


_GELU_C = 0.7978845608028654  # sqrt(2/pi)
_GELU_A = 0.044715


@njit(cache=True, fastmath=_FM)
def gelu_fwd(x):
    n = x.size
    xf = x.ravel()
    y = np.empty(n, dtype=x.dtype)
    t = np.empty(n, dtype=x.dtype)
    c = x.dtype.type(_GELU_C)
    a = x.dtype.type(_GELU_A)
    half = x.dtype.type(0.5)
    one = x.dtype.type(1.0)
    for i in range(n):
        v = xf[i]
        tt = np.tanh(c * (v + a * v * v * v))
        t[i] = tt
        y[i] = half * v * (one + tt)
    return y.reshape(x.shape), t


@njit(cache=True, fastmath=_FM)
def gelu_bwd(x, t, dy):
    n = x.size
    xf = x.ravel()
    tf = t
    df = dy.ravel()
    dx = np.empty(n, dtype=x.dtype)
    c = x.dtype.type(_GELU_C)
    a3 = x.dtype.type(3.0 * _GELU_A)
    half = x.dtype.type(0.5)
    one = x.dtype.type(1.0)
    for i in range(n):
        v = xf[i]
        tt = tf[i]
        dx[i] = df[i] * (half * (one + tt)
                         + half * v * (one - tt * tt) * c * (one + a3 * v * v))
    return dx.reshape(x.shape)


@njit(cache=True, fastmath=_FM)
def gather_heads(src, B, R, C, nh, hd, axis, which, n_keys):
    """Extract one of q/k/v from a (B*R*C, 3E) projection into head-major
    (nb*nh, S_or_K, hd) layout.

    axis 0: sequences run over columns (nb = B*R, S = C).
    axis 1: sequences run over rows (nb = B*C, S = R); only the first
    n_keys rows of each sequence are emitted (context-key restriction).
    """
    if axis == 0:
        nb = B * R
        S = C
    else:
        nb = B * C
        S = R
    L = n_keys if n_keys >= 0 else S
    out = np.empty((nb * nh, L, hd), dtype=src.dtype)
    off = which * nh * hd
    for b in range(B):
        if axis == 0:
            for r in range(R):
                base = b * R + r
                for h in range(nh):
                    for c in range(L):
                        tok = (b * R + r) * C + c
                        for d in range(hd):
                            out[base * nh + h, c, d] = src[tok, off + h * hd + d]
        else:
            for c in range(C):
                base = b * C + c
                for h in range(nh):
                    for r in range(L):
                        tok = (b * R + r) * C + c
                        for d in range(hd):
                            out[base * nh + h, r, d] = src[tok, off + h * hd + d]
    return out


@njit(cache=True, fastmath=_FM)
def scatter_heads_add(dst, part, B, R, C, nh, hd, axis, which, n_keys):
    """Inverse of gather_heads: accumulate head-major gradients back into the
    (B*R*C, 3E) gradient buffer."""
    if axis == 0:
        S = C
    else:
        S = R
    L = n_keys if n_keys >= 0 else S
    off = which * nh * hd
    for b in range(B):
        if axis == 0:
            for r in range(R):
                base = b * R + r
                for h in range(nh):
                    for c in range(L):
                        tok = (b * R + r) * C + c
                        for d in range(hd):
                            dst[tok, off + h * hd + d] += part[base * nh + h, c, d]
        else:
            for c in range(C):
                base = b * C + c
                for h in range(nh):
                    for r in range(L):
                        tok = (b * R + r) * C + c
                        for d in range(hd):
                            dst[tok, off + h * hd + d] += part[base * nh + h, r, d]


@njit(cache=True, fastmath=_FM)
def merge_heads(o, B, R, C, nh, hd, axis):
    """Head-major attention output (nb*nh, S, hd) -> token-major (B*R*C, E)."""
    E = nh * hd
    out = np.empty((B * R * C, E), dtype=o.dtype)
    for b in range(B):
        if axis == 0:
            for r in range(R):
                base = b * R + r
                for h in range(nh):
                    for c in range(C):
                        tok = (b * R + r) * C + c
                        for d in range(hd):
                            out[tok, h * hd + d] = o[base * nh + h, c, d]
        else:
            for c in range(C):
                base = b * C + c
                for h in range(nh):
                    for r in range(R):
                        tok = (b * R + r) * C + c
                        for d in range(hd):
                            out[tok, h * hd + d] = o[base * nh + h, r, d]
    return out


@njit(cache=True, fastmath=_FM)
def split_out_grad(dout, B, R, C, nh, hd, axis):
    """Token-major gradient (B*R*C, E) -> head-major (nb*nh, S, hd)."""
    if axis == 0:
        nb = B * R
        S = C
    else:
        nb = B * C
        S = R
    out = np.empty((nb * nh, S, hd), dtype=dout.dtype)
    for b in range(B):
        if axis == 0:
            for r in range(R):
                base = b * R + r
                for h in range(nh):
                    for c in range(C):
                        tok = (b * R + r) * C + c
                        for d in range(hd):
                            out[base * nh + h, c, d] = dout[tok, h * hd + d]
        else:
            for c in range(C):
                base = b * C + c
                for h in range(nh):
                    for r in range(R):
                        tok = (b * R + r) * C + c
                        for d in range(hd):
                            out[base * nh + h, r, d] = dout[tok, h * hd + d]
    return out


@njit(cache=True, fastmath=_FM)
def cross_entropy_fwd(logits, idx):
    n, k = logits.shape
    probs = np.empty_like(logits)
    loss = logits.dtype.type(0.0)
    for i in range(n):
        mx = logits[i, 0]
        for j in range(1, k):
            if logits[i, j] > mx:
                mx = logits[i, j]
        tot = logits.dtype.type(0.0)
        for j in range(k):
            e = np.exp(logits[i, j] - mx)
            probs[i, j] = e
            tot += e
        for j in range(k):
            probs[i, j] /= tot
        loss += np.log(tot) + mx - logits[i, idx[i]]
    return loss / n, probs


@njit(cache=True, fastmath=_FM)
def cross_entropy_bwd(probs, idx, gscale):
    n, k = probs.shape
    d = np.empty_like(probs)
    s = probs.dtype.type(gscale / n)
    for i in range(n):
        for j in range(k):
            d[i, j] = probs[i, j] * s
        d[i, idx[i]] -= s
    return d


@njit(cache=True, fastmath=_FM)
def adam_update(p, g, m, v, lr, b1, b2, eps, bc1, bc2):
    """In-place Adam step on flat views. bc1/bc2 are the bias corrections
    1-b1^t and 1-b2^t for the already-incremented step count t."""
    n = p.size
    one = p.dtype.type(1.0)
    for i in range(n):
        gi = g[i]
        m[i] = b1 * m[i] + (one - b1) * gi
        v[i] = b2 * v[i] + (one - b2) * gi * gi
        mhat = m[i] / bc1
        vhat = v[i] / bc2
        p[i] -= lr * mhat / (np.sqrt(vhat) + eps)
