import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cstarhodge.algebra import AlgebraSpec, AlgebraElement
from cstarhodge.errors import SpecMismatch
from cstarhodge.util import rng_for


def random_element(spec, rng):
    return spec.random(rng)


def test_block_dims():
    spec = AlgebraSpec((2, 3))
    assert spec.dim == 13
    assert AlgebraSpec((1,)).dim == 1


def test_invalid_blocks():
    with pytest.raises((ValueError, SpecMismatch)):
        AlgebraSpec(())
    with pytest.raises((ValueError, SpecMismatch)):
        AlgebraSpec((0, 2))


def test_scalar_add():
    spec = AlgebraSpec((1,))
    a = spec.element([np.array([[2 + 1j]])])
    b = spec.element([np.array([[3.0]])])
    c = a + b
    assert c.blocks[0][0, 0] == 5 + 1j


def test_add_matches_concrete_embedding():
    spec = AlgebraSpec((2, 3))
    rng = rng_for(0, "algebra-add", 0)
    for _ in range(20):
        a, b = spec.random(rng), spec.random(rng)
        assert np.allclose((a + b).embed(), a.embed() + b.embed(), atol=1e-13)


def test_nilpotent_product():
    spec = AlgebraSpec((2,))
    n = spec.element([np.array([[0.0, 1.0], [0.0, 0.0]])])
    assert (n * n).norm() == 0.0


def test_product_matches_concrete():
    spec = AlgebraSpec((2, 1))
    rng = rng_for(0, "algebra-mul", 0)
    for _ in range(20):
        a, b = spec.random(rng), spec.random(rng)
        assert np.allclose((a * b).embed(), a.embed() @ b.embed(), atol=1e-12)


def test_star():
    spec = AlgebraSpec((2,))
    n = spec.element([np.array([[0.0, 1.0], [0.0, 0.0]])])
    assert np.allclose(n.star().blocks[0], np.array([[0.0, 0.0], [1.0, 0.0]]))
    one = spec.unit()
    assert (one.star() - one).norm() == 0.0


def test_norm_values():
    assert abs(AlgebraSpec((1,)).element([np.array([[3 + 4j]])]).norm() - 5.0) < 1e-14
    spec = AlgebraSpec((2,))
    d = spec.element([np.diag([1.0, 2.0]).astype(complex)])
    assert abs(d.norm() - 2.0) < 1e-14


def test_norm_matches_concrete_svd():
    spec = AlgebraSpec((2, 3))
    rng = rng_for(0, "algebra-norm", 0)
    for _ in range(20):
        a = spec.random(rng)
        oracle = max(np.linalg.svd(b, compute_uv=False)[0] for b in a.blocks)
        assert abs(a.norm() - oracle) < 1e-12
        assert abs(a.norm() - np.linalg.svd(a.embed(), compute_uv=False)[0]) < 1e-12


def test_cstar_identity():
    spec = AlgebraSpec((2, 2))
    rng = rng_for(0, "algebra-cstar", 0)
    for _ in range(20):
        a = spec.random(rng)
        assert abs((a.star() * a).norm() - a.norm() ** 2) < 1e-10 * max(1, a.norm() ** 2)


def test_positivity():
    spec = AlgebraSpec((2,))
    assert spec.unit().is_positive()
    rng = rng_for(0, "algebra-pos", 0)
    a = spec.random(rng)
    assert (a.star() * a).is_positive()
    n = spec.element([np.array([[0.0, 1.0], [0.0, 0.0]])])
    assert not n.is_positive()
    assert not (-(spec.unit())).is_positive()


def test_scalar_embedding_two_blocks():
    spec = AlgebraSpec((1, 1))
    a = spec.element([np.array([[2.0]]), np.array([[3j]])])
    assert np.allclose(a.embed(), np.diag([2.0, 3j]))


def test_embedding_is_star_homomorphism():
    spec = AlgebraSpec((3,))
    rng = rng_for(0, "algebra-embed", 0)
    a, b = spec.random(rng), spec.random(rng)
    assert np.allclose((a * b).embed(), a.embed() @ b.embed(), atol=1e-12)
    assert np.allclose(a.star().embed(), a.embed().conj().T, atol=1e-13)
    assert np.allclose(spec.unit().embed(), np.eye(spec.dim))


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.integers(min_value=1, max_value=3), min_size=1, max_size=3),
    st.integers(min_value=0, max_value=10**6),
)
def test_norm_triangle_and_scaling(blocks, seed):
    spec = AlgebraSpec(tuple(blocks))
    rng = rng_for(seed, "algebra-hyp", 0)
    a, b = spec.random(rng), spec.random(rng)
    assert (a + b).norm() <= a.norm() + b.norm() + 1e-12
    assert abs((2.5 * a).norm() - 2.5 * a.norm()) < 1e-12
    assert abs(a.star().norm() - a.norm()) < 1e-12
