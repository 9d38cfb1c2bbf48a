import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import oracle_dense, oracle_vector, rel_err
from ttsketch.contract import (
    left_gaussian_chain,
    left_partial_contractions,
    partial_contractions,
    sketch_hadamard,
    sketch_linear_combination,
    sketch_matvec,
)
from ttsketch.sketch import SketchSpec, make_sketch, sketch_dense
from ttsketch.tt import (
    TTOperator,
    TensorTrain,
    tt_hadamard_assemble,
    tt_linear_combination,
    tt_random,
    tto_apply_assemble,
)

DIMS = (2, 3, 2, 2)


def tt(seed, ranks=(1, 2, 3, 2, 1), dims=DIMS, field="real"):
    return tt_random(dims, ranks, field=field, seed=seed)


@pytest.mark.parametrize(
    "variant,kw",
    [
        ("tts", dict(P=3, R=2)),
        ("otts", dict(P=2, R=3)),
        ("khatri_rao", dict(P=5, R=1)),
        ("gaussian_tt", dict(P=1, R=4)),
    ],
)
@pytest.mark.parametrize("field", ["real", "complex"])
def test_w1_matches_dense_sketch(variant, kw, field):
    spec = SketchSpec(variant, DIMS, field=field, seed=3, **kw)
    sk = make_sketch(spec)
    x = tt(11, field=field)
    expect = sketch_dense(sk) @ oracle_vector(x)
    got = partial_contractions(sk, x).vector()
    assert rel_err(got, expect) < 1e-12


def test_partial_invariant_every_cut():
    # W_k equals the unfolded tail sketch times the unfolded tail train
    spec = SketchSpec("tts", DIMS, P=2, R=3, seed=5)
    sk = make_sketch(spec)
    x = tt(21)
    ps = partial_contractions(sk, x)
    d = len(DIMS)
    for k in range(1, d):
        tails = []
        for j in range(sk.n_blocks):
            g_tail = oracle_dense(TensorTrain(sk.blocks[j][k:])).reshape(
                sk.blocks[j][k].shape[0], -1)
            x_tail = oracle_dense(TensorTrain(x.cores[k:])).reshape(
                x.cores[k].shape[0], -1)
            tails.append(g_tail @ x_tail.T)
        expect = np.concatenate(tails, axis=0)
        assert rel_err(ps.Ws[k], expect) < 1e-12


def test_scale_applied_only_at_w1():
    spec = SketchSpec("tts", DIMS, P=4, R=2, seed=9)
    sk = make_sketch(spec)
    x = tt(4)
    ps = partial_contractions(sk, x)
    unscaled = partial_contractions(
        type(sk)(spec=sk.spec, blocks=sk.blocks, scale=1.0), x)
    assert_allclose(ps.Ws[0], 0.5 * unscaled.Ws[0])
    for k in range(1, len(DIMS)):
        assert_allclose(ps.Ws[k], unscaled.Ws[k])


def test_vector_requires_scalar_boundary():
    spec = SketchSpec("tts", DIMS, P=1, R=2, seed=0)
    sk = make_sketch(spec)
    x = TensorTrain([np.random.default_rng(0).standard_normal((2, n, 2))
                     if k == 0 else np.random.default_rng(k).standard_normal((2, n, 2))
                     for k, n in enumerate(DIMS[:-1])]
                    + [np.random.default_rng(9).standard_normal((2, DIMS[-1], 1))])
    ps = partial_contractions(sk, x)
    with pytest.raises(ValueError, match="boundary"):
        ps.vector()


def test_dims_mismatch_rejected():
    sk = make_sketch(SketchSpec("tts", (2, 2), P=1, R=2))
    with pytest.raises(ValueError, match="dims"):
        partial_contractions(sk, tt(0))


@pytest.mark.parametrize("field", ["real", "complex"])
def test_linear_combination_matches_assembled(field):
    sk = make_sketch(SketchSpec("tts", DIMS, P=2, R=3, seed=2, field=field))
    terms = [tt(31, field=field), tt(32, (1, 2, 2, 2, 1), field=field),
             tt(33, (1, 1, 2, 1, 1), field=field)]
    coeffs = [1.5, -0.5 + (1j if field == "complex" else 0), 2.0]
    ps = sketch_linear_combination(sk, terms, coeffs)
    assembled = partial_contractions(sk, tt_linear_combination(terms, coeffs))
    for a, b in zip(ps.Ws, assembled.Ws):
        assert rel_err(a, b) < 1e-12


def test_matvec_matches_assembled(rng):
    h = TTOperator([
        rng.standard_normal((1, 2, 2, 3)),
        rng.standard_normal((3, 3, 3, 2)),
        rng.standard_normal((2, 2, 2, 2)),
        rng.standard_normal((2, 2, 2, 1)),
    ])
    x = tt(41)
    sk = make_sketch(SketchSpec("tts", DIMS, P=2, R=2, seed=6))
    ps = sketch_matvec(sk, h, x)
    assembled = partial_contractions(sk, tto_apply_assemble(h, x))
    for a, b in zip(ps.Ws, assembled.Ws):
        assert rel_err(a, b) < 1e-12
    # and against the fully dense route
    from ttsketch.tt import tto_dense
    expect = sketch_dense(sk) @ (tto_dense(h) @ oracle_vector(x))
    assert rel_err(ps.vector(), expect) < 1e-11


@pytest.mark.parametrize("nterms", [2, 3])
def test_hadamard_matches_assembled(nterms):
    sk = make_sketch(SketchSpec("tts", DIMS, P=2, R=2, seed=8))
    terms = [tt(50 + i, (1, 2, 2, 2, 1)) for i in range(nterms)]
    ps = sketch_hadamard(sk, terms)
    assembled = partial_contractions(sk, tt_hadamard_assemble(terms))
    for a, b in zip(ps.Ws, assembled.Ws):
        assert rel_err(a, b) < 1e-12


def test_left_partial_contractions_invariant():
    x = tt(61)
    chain = left_gaussian_chain(DIMS, [1, 2, 3, 2, 1], "real", seed=4)
    vs = left_partial_contractions(chain, x)
    for k in range(1, len(DIMS) + 1):
        g_head = oracle_dense(TensorTrain(chain[:k]))
        x_head = oracle_dense(TensorTrain(x.cores[:k]))
        g_head = g_head.reshape(-1, chain[k - 1].shape[2])
        x_head = x_head.reshape(-1, x.cores[k - 1].shape[2])
        expect = g_head.T @ x_head
        assert rel_err(vs[k - 1], expect) < 1e-12
