"""Partial-contraction sketching of tensor trains.

``partial_contractions`` produces, for every cut k, the matrix pairing the
sketch chain over modes k..d with the train chain over the same modes.  The
structured variants below produce the same matrices for linear combinations,
operator-vector products, and elementwise products without assembling the
large intermediate train.

Row layout of every W_k is block-major over the P sketch blocks.  The global
1/sqrt(P) factor is applied exactly once, when W_1 is emitted.
"""

import string

import numpy as np

from .tt import STREAM_STTA_LEFT, gaussian, rng_for


class PartialSketchSet:
    """W_1..W_d for one realized sketch against one train.

    ``Ws[k-1]`` holds W_k with shape (P * l_{k-1}, chi_{k-1}) where l is the
    sketch bond pattern and chi the train bond.  Only W_1 carries the global
    scale.
    """

    def __init__(self, Ws, spec, scale):
        self.Ws = Ws
        self.spec = spec
        self.scale = scale

    @property
    def d(self):
        return len(self.Ws)

    def vector(self):
        """The sketched train Omega x (requires scalar left train bond)."""
        w1 = self.Ws[0]
        if w1.shape[1] != 1:
            raise ValueError("train has non-scalar left boundary rank")
        return w1[:, 0]


def _block_partials(block_cores, x_cores):
    """Right-to-left recursion for one sketch block; returns [W_1..W_d]."""
    d = len(x_cores)
    w = np.ones((1, 1), dtype=np.result_type(block_cores[-1].dtype, x_cores[-1].dtype))
    out = [None] * d
    for k in range(d - 1, -1, -1):
        w = np.einsum("bik,ka,cia->bc", block_cores[k], w, x_cores[k])
        out[k] = w
    return out


def _stack(per_block, scale_first, scale):
    d = len(per_block[0])
    ws = [np.concatenate([pb[k] for pb in per_block], axis=0) for k in range(d)]
    if scale_first:
        ws[0] = scale * ws[0]
    return ws


def partial_contractions(sk, x):
    """All partial sketches of a train; per-block and stacked block-major."""
    if sk.spec.dims != x.dims:
        raise ValueError("sketch dims do not match train dims")
    if x.ranks[-1] != 1:
        raise ValueError("right boundary rank must be 1")
    per_block = [_block_partials(sk.blocks[j], x.cores) for j in range(sk.n_blocks)]
    return PartialSketchSet(_stack(per_block, True, sk.scale), sk.spec, sk.scale)


def left_gaussian_chain(dims, bonds, field, seed, stream=STREAM_STTA_LEFT):
    """Left-to-right Gaussian chain: core k is (l_{k-1}, n_k, l_k), l_0 = 1.

    Entry variance is one over the left bond, mirroring the right-oriented
    Gaussian chains.
    """
    cores = []
    for k in range(len(dims)):
        rng = rng_for(seed, stream, 0, k)
        var = 1.0 / bonds[k]
        cores.append(
            gaussian(rng, (bonds[k], dims[k], bonds[k + 1]), field, scale=np.sqrt(var))
        )
    return cores


def left_partial_contractions(chain_cores, x):
    """Left-to-right analogue: V_k pairs modes 1..k of chain and train."""
    v = np.ones((1, 1), dtype=np.result_type(chain_cores[0].dtype, x.cores[0].dtype))
    out = []
    for a_core, x_core in zip(chain_cores, x.cores):
        v = np.einsum("bia,bc,cid->ad", a_core, v, x_core)
        out.append(v)
    return out


def sketch_linear_combination(sk, terms, coefficients):
    """Partial sketches of sum(alpha_j * terms[j]) from per-term sketches.

    Column layout for k >= 2 matches the block structure of the exact
    linear-combination train: term blocks in order, coefficients folded in.
    """
    if len(terms) != len(coefficients):
        raise ValueError("need one coefficient per term")
    per_term = [partial_contractions(sk, t) for t in terms]
    d = per_term[0].d
    ws = []
    for k in range(d):
        if k == 0:
            w = sum(a * ps.Ws[0] for a, ps in zip(coefficients, per_term))
        else:
            w = np.concatenate(
                [a * ps.Ws[k] for a, ps in zip(coefficients, per_term)], axis=1
            )
        ws.append(w)
    return PartialSketchSet(ws, sk.spec, sk.scale)


def sketch_matvec(sk, h, x):
    """Partial sketches of the operator-train product h x.

    The combined bond (rH_k, chi_k) is flattened row-major with the operator
    bond major, matching the assembled product train.
    """
    if sk.spec.dims != h.dims_out:
        raise ValueError("sketch dims do not match operator output dims")
    if h.dims_in != x.dims:
        raise ValueError("operator input dims do not match train dims")
    d = x.d
    per_block = []
    for j in range(sk.n_blocks):
        g = sk.blocks[j]
        w = np.ones((1, 1, 1), dtype=np.result_type(g[-1].dtype, h.cores[-1].dtype, x.cores[-1].dtype))
        out = [None] * d
        for k in range(d - 1, -1, -1):
            w = np.einsum("biB,BAC,aijA,cjC->bac", g[k], w, h.cores[k], x.cores[k])
            out[k] = w.reshape(w.shape[0], w.shape[1] * w.shape[2])
        per_block.append(out)
    return PartialSketchSet(_stack(per_block, True, sk.scale), sk.spec, sk.scale)


def sketch_hadamard(sk, terms):
    """Partial sketches of the elementwise product of plain trains.

    Works one mode slice at a time, so the cost scales with the product of
    the individual bond ranks rather than their assembled product core.
    """
    if len(terms) < 2:
        raise ValueError("need at least two factors")
    dims = terms[0].dims
    for t in terms:
        if t.dims != dims:
            raise ValueError("mode dimension mismatch in product")
    if sk.spec.dims != dims:
        raise ValueError("sketch dims do not match train dims")
    d = len(dims)
    nt = len(terms)
    letters = string.ascii_lowercase
    # einsum: g[b,i,B], w[B, A1..AJ], core_j[a_j, i, A_j] -> out[b, a1..aJ]
    g_sub = "zi" + "Z"
    w_sub = "Z" + letters[nt:2 * nt].upper()
    term_subs = [letters[j] + "i" + letters[nt + j].upper() for j in range(nt)]
    out_sub = "z" + letters[:nt]
    eq = ",".join([g_sub, w_sub] + term_subs) + "->" + out_sub
    per_block = []
    for j in range(sk.n_blocks):
        g = sk.blocks[j]
        w = np.ones((1,) * (nt + 1), dtype=np.result_type(g[-1].dtype, *(t.cores[-1].dtype for t in terms)))
        out = [None] * d
        for k in range(d - 1, -1, -1):
            w = np.einsum(eq, g[k], w, *(t.cores[k] for t in terms))
            out[k] = w.reshape(w.shape[0], -1)
        per_block.append(out)
    return PartialSketchSet(_stack(per_block, True, sk.scale), sk.spec, sk.scale)
