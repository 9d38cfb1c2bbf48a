"""Rank truncation of tensor trains.

Three routes:

* ``tt_round``: deterministic QR sweep left-to-right followed by a truncated
  SVD sweep right-to-left; output is right-orthogonal.
* ``tt_rand_round``: randomize-then-orthogonalize.  A single nested sketch
  of the tail chains replaces the orthogonalization sweep; output is
  left-orthogonal.
* ``stta``: two-sided streaming truncation.  Left and right sketches are
  combined through small pseudo-inverses; the map from train to sketch
  streams is linear, so streams of a sum are sums of streams.
"""

import numpy as np

from .contract import (
    left_gaussian_chain,
    left_partial_contractions,
    partial_contractions,
)
from .sketch import SketchSpec, make_sketch
from .tt import TensorTrain, tt_orthogonalize


def _rank_list(ranks, d):
    if np.isscalar(ranks):
        return [1] + [int(ranks)] * (d - 1) + [1]
    ranks = [int(r) for r in ranks]
    if len(ranks) != d + 1:
        raise ValueError("need d+1 ranks")
    return ranks


def pinv_trunc(a, rcond=1e-12):
    """Pseudo-inverse that drops singular values below rcond * sigma_max."""
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((a.shape[1], a.shape[0]), dtype=a.dtype)
    keep = s > rcond * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * inv) @ u.conj().T


def tt_round(x, max_ranks=None, tol=None):
    """Deterministic rounding to rank caps and/or a relative tolerance.

    With ``tol`` set, each truncation sweep step discards a singular-value
    tail of norm at most tol * ||x|| / sqrt(d - 1).
    """
    if max_ranks is None and tol is None:
        raise ValueError("give max_ranks, tol, or both")
    d = x.d
    if d == 1:
        return x.copy()
    caps = _rank_list(max_ranks, d) if max_ranks is not None else None
    left = tt_orthogonalize(x, "left")
    cores = left.cores
    norm = np.linalg.norm(cores[-1])
    delta = tol * norm / np.sqrt(d - 1) if tol is not None else None
    for k in range(d - 1, 0, -1):
        r1, n, r2 = cores[k].shape
        u, s, vh = np.linalg.svd(cores[k].reshape(r1, n * r2), full_matrices=False)
        keep = s.size
        if delta is not None:
            tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]
            # tail[j] is the norm of singular values j..end
            ok = np.nonzero(tail <= delta)[0]
            keep = ok[0] if ok.size else s.size
        if caps is not None:
            keep = min(keep, caps[k])
        keep = max(int(keep), 1)
        cores[k] = vh[:keep].reshape(keep, n, r2)
        cores[k - 1] = np.tensordot(cores[k - 1], u[:, :keep] * s[:keep], axes=(2, 0))
    return TensorTrain(cores)


def default_round_sketch(dims, ranks, field="real", seed=0):
    """Nested Gaussian chain sketch whose bond pattern equals the targets."""
    d = len(dims)
    caps = _rank_list(ranks, d)
    pat = [max(caps[k], 1) for k in range(d)] + [1]
    pat[0] = max(pat[1], 1)
    return make_sketch(
        SketchSpec("gaussian_tt", tuple(dims), P=1, R=max(pat), field=field, seed=seed,
                   ranks=tuple(pat))
    )


def tt_rand_round(x, max_ranks, sk=None, partials=None, seed=0):
    """Randomize-then-orthogonalize rounding; output is left-orthogonal.

    One sketch of the tail chains is shared across all modes.  If the sketch
    carries more columns than the target rank, the range basis is truncated
    through an SVD of the sketched unfolding.  Precomputed partial sketches
    may be passed in; their column layout must match the cores of ``x``.
    """
    d = x.d
    caps = _rank_list(max_ranks, d)
    if d == 1:
        return x.copy()
    if partials is None:
        if sk is None:
            sk = default_round_sketch(x.dims, caps, field=x.field, seed=seed)
        partials = partial_contractions(sk, x)
    ws = partials.Ws
    cores = [c.copy() for c in x.cores]
    out = []
    for k in range(d - 1):
        r1, n, r2 = cores[k].shape
        m = cores[k].reshape(r1 * n, r2)
        z = m @ ws[k + 1].T
        target = min(caps[k + 1], z.shape[0])
        if z.shape[1] > target:
            q, _, _ = np.linalg.svd(z, full_matrices=False)
            q = q[:, :target]
        else:
            q, _ = np.linalg.qr(z)
        out.append(q.reshape(r1, n, q.shape[1]))
        proj = q.conj().T @ m
        cores[k + 1] = np.tensordot(proj, cores[k + 1], axes=(1, 0))
    out.append(cores[d - 1])
    return TensorTrain(out)


class STTASketchPair:
    """Shared left/right sketches for streaming truncation."""

    def __init__(self, dims, ranks, oversample=None, field="real", seed=0):
        self.dims = tuple(dims)
        d = len(self.dims)
        self.ranks = _rank_list(ranks, d)
        if oversample is None:
            over = list(self.ranks)
        elif np.isscalar(oversample):
            over = [int(oversample)] * (d + 1)
        else:
            over = [int(v) for v in oversample]
        self.left_bonds = [1] + self.ranks[1:d] + [1]
        right_pat = [1] * (d + 1)
        for k in range(1, d):
            right_pat[k] = self.ranks[k] + over[k]
        right_pat[0] = max(right_pat[1], 1)
        self.left_cores = left_gaussian_chain(self.dims, self.left_bonds, field, seed)
        self.right = make_sketch(
            SketchSpec("gaussian_tt", self.dims, P=1, R=max(right_pat), field=field,
                       seed=seed, ranks=tuple(right_pat))
        )


def stta_streams(x, sketches):
    """Linear sketch streams of a train: pairs (S_k, Z_k) for each mode.

    S_k pairs the left sketch of modes 1..k with the right sketch of modes
    k+1..d through x; Z_k leaves mode k open.  The last mode has no right
    sketch; its S is the scalar full contraction, kept only so the streams
    stay linear, and assembly treats it as an identity.
    """
    if x.dims != sketches.dims:
        raise ValueError("sketch dims do not match train dims")
    d = x.d
    lam = left_partial_contractions(sketches.left_cores, x)
    ws = partial_contractions(sketches.right, x).Ws
    lam = [np.ones((1, 1))] + lam  # lam[k] pairs modes 1..k
    streams = []
    for k in range(1, d + 1):
        xk = x.cores[k - 1]
        if k < d:
            w_next = ws[k]  # right sketch of modes k+1..d
            s = lam[k] @ w_next.T
            z = np.einsum("ba,aic,dc->bid", lam[k - 1], xk, w_next)
        else:
            s = lam[k]
            z = np.einsum("ba,aic->bic", lam[k - 1], xk)
        streams.append((s, z))
    return streams


def stta_streams_add(a, b, beta=1.0):
    return [(sa + beta * sb, za + beta * zb) for (sa, za), (sb, zb) in zip(a, b)]


def stta_assemble(streams, rcond=1e-12):
    """Cores from streams: Y_k = Z_k pinv(S_k), last core Y_d = Z_d."""
    cores = []
    d = len(streams)
    for k, (s, z) in enumerate(streams):
        if k < d - 1:
            cores.append(np.tensordot(z, pinv_trunc(s, rcond=rcond), axes=(2, 0)))
        else:
            cores.append(z)
    return TensorTrain(cores)


def stta(x, ranks, oversample=None, seed=0, rcond=1e-12, sketches=None):
    """Two-sided streaming rounding to the given target ranks."""
    if sketches is None:
        sketches = STTASketchPair(x.dims, ranks, oversample=oversample,
                                  field=x.field, seed=seed)
    return stta_assemble(stta_streams(x, sketches), rcond=rcond)
