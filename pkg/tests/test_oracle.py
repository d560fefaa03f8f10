import math

import numpy as np
import pytest

from zeta import cauchy_attention as ca
from zeta.numerics import ParameterError, make_rng
from zeta.oracle import (
    INV_EUCLID_STAB,
    SoftmaxVariant,
    dense_causal_attention,
    dense_causal_weights,
    house_demo,
    metric_demo,
)


def naive_dense(Q, K, V, variant, eps):
    """Loop-by-loop reference, written without any of the vectorized helpers."""
    n, dk = Q.shape
    out = np.zeros((n, V.shape[1]))
    for i in range(n):
        kbar = K[: i + 1].sum(0) / (i + 1)
        vbar = V[: i + 1].sum(0) / (i + 1)
        keys = [K[j] for j in range(i)] + [kbar]
        vals = [V[j] for j in range(i)] + [vbar]
        scores = []
        for key in keys:
            d2 = sum((Q[i, t] - key[t]) ** 2 for t in range(dk))
            if variant == "cauchy":
                scores.append(1.0 / (d2 + eps))
            elif variant == "negative_euclidean_exp":
                scores.append(math.exp(-d2))
            elif variant == "inverse_euclidean":
                scores.append(1.0 / (math.sqrt(d2) + INV_EUCLID_STAB))
            else:
                scores.append(math.exp(sum(Q[i, t] * key[t] for t in range(dk)) / math.sqrt(dk)))
        z = sum(scores)
        for s, v in zip(scores, vals):
            out[i] += s / z * v
    return out


@pytest.mark.parametrize("variant", [v.value for v in SoftmaxVariant])
def test_dense_matches_naive(variant):
    rng = make_rng(1)
    Q, K, V = rng.normal(size=(20, 3)), rng.normal(size=(20, 3)), rng.normal(size=(20, 4))
    p = ca.AttentionParams(theta=0.3)
    got = dense_causal_attention(Q, K, V, variant, p)
    assert np.abs(got - naive_dense(Q, K, V, variant, p.gamma_sq())).max() < 1e-12
    assert np.array_equal(got, dense_causal_attention(Q, K, V, variant, p, block=7))


@pytest.mark.parametrize("variant", list(SoftmaxVariant))
def test_dense_weights_simplex(variant):
    rng = make_rng(2)
    Q, K = rng.normal(size=(30, 2)), rng.normal(size=(30, 2))
    w = dense_causal_weights(Q, K, variant)
    assert np.all(w >= 0)
    assert np.abs(w.sum(1) - 1).max() < 1e-12
    assert np.all(w[:, :30][np.triu_indices(30)] == 0)


def test_first_row_is_first_value():
    rng = make_rng(3)
    Q, K, V = rng.normal(size=(5, 3)), rng.normal(size=(5, 3)), rng.normal(size=(5, 2))
    assert np.array_equal(dense_causal_attention(Q, K, V)[0], V[0])


def test_dot_product_uniform_on_orthonormal_keys():
    n = 4
    K = np.eye(n)
    Q = np.zeros((n, n))
    w = dense_causal_weights(Q, K, "dot_product")
    # q = 0 gives equal logits for every admissible key and the mean slot
    assert np.allclose(w[3], [0.25, 0.25, 0.25, 0.0, 0.25])


def test_permutation_equivariance():
    rng = make_rng(4)
    n = 10
    Q, K, V = rng.normal(size=(n, 3)), rng.normal(size=(n, 3)), rng.normal(size=(n, 5))
    perm = np.concatenate([rng.permutation(n - 1), [n - 1]])
    p = ca.AttentionParams()
    a = dense_causal_attention(Q, K, V, "cauchy", p)[-1]
    b = dense_causal_attention(Q, K[perm], V[perm], "cauchy", p)[-1]
    assert np.abs(a - b).max() < 1e-13


def test_empty_sequence_rejected():
    with pytest.raises(ParameterError):
        dense_causal_attention(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros((0, 2)))


def test_metric_demo_trivial_cases():
    d = metric_demo([1.0, 2.0], [[1.0, 2.0]])
    assert d.rows[0].euclidean == 0.0
    d = metric_demo([1.0, 0.0], [[0.0, 1.0]])
    assert d.rows[0].dot == 0.0
    assert d.rows[0].euclidean == pytest.approx(math.sqrt(2))


def test_house_demo_qualitative():
    d = house_demo()
    assert d.nearest_euclidean == "B"
    assert d.max_dot == "D"
    assert [r.name for r in d.rows] == ["B", "C", "D"]
