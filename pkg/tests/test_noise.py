import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svi_epp.noise import (
    STORE_LIMIT,
    BrownianPath,
    PathSpec,
    generate,
    generate_batch,
    iter_increments,
    refine,
)


def test_same_spec_same_bits():
    s = PathSpec(1.0, 1e-3, 42, 7)
    a, b = generate(s).increments, generate(s).increments
    assert a.tobytes() == b.tobytes()


def test_paths_and_seeds_differ():
    a = generate(PathSpec(1.0, 1e-3, 42, 0)).increments
    b = generate(PathSpec(1.0, 1e-3, 42, 1)).increments
    c = generate(PathSpec(1.0, 1e-3, 43, 0)).increments
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    # independent streams: sample correlation at the 1/sqrt(n) scale
    assert abs(np.corrcoef(a, b)[0, 1]) < 5 / math.sqrt(a.size)


def test_step_count_grid_aligned():
    assert PathSpec(1.0, 1e-3, 0).n_steps == 1000
    assert PathSpec(0.3, 0.1, 0).n_steps == 3
    assert PathSpec(1.0, 0.3, 0).n_steps == 4


def test_increment_moments():
    dt = 1e-3
    x = generate_batch(1.0, dt, 5, range(200)).ravel()
    n = x.size
    assert abs(x.mean()) < 4 * math.sqrt(dt / n)
    # var of the sample variance of a normal: 2 sigma^4 / n
    assert abs(x.var() - dt) < 4 * math.sqrt(2 / n) * dt


def test_batch_matches_single():
    rows = generate_batch(0.5, 1e-3, 9, [3, 0, 11], refinements=(2,))
    for row, i in zip(rows, [3, 0, 11]):
        assert row.tobytes() == generate(PathSpec(0.5, 1e-3, 9, i, (2,))).increments.tobytes()


def test_empty_batch_shape():
    assert generate_batch(1.0, 0.1, 0, []).shape == (0, 10)


def test_values_start_at_zero_and_read_only():
    p = generate(PathSpec(1.0, 0.01, 1))
    v = p.values()
    assert v[0] == 0.0 and v.size == p.n_steps + 1
    assert np.allclose(v[-1], p.increments.sum())
    with pytest.raises(ValueError):
        p.increments[0] = 1.0


@given(st.integers(2, 8), st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_refinement_preserves_coarse_sums(factor, seed):
    coarse = generate(PathSpec(1.0, 0.05, seed))
    fine = refine(coarse, factor)
    assert fine.n_steps == coarse.n_steps * factor
    assert fine.dt == pytest.approx(coarse.dt / factor)
    sums = fine.increments.reshape(-1, factor).sum(axis=1)
    np.testing.assert_allclose(sums, coarse.increments, rtol=0, atol=1e-15)


def test_refined_path_is_reproducible_from_its_spec():
    coarse = generate(PathSpec(1.0, 0.01, 3, 4))
    twice = refine(refine(coarse, 2), 5)
    assert twice.spec.refinements == (2, 5)
    again = generate(twice.spec)
    assert again.increments.tobytes() == twice.increments.tobytes()


def test_bridge_statistics():
    # fine increments must be N(0, dt/f), independent, given nothing
    dt, f = 0.01, 4
    fine = np.concatenate([refine(generate(PathSpec(1.0, dt, 2, i)), f).increments for i in range(300)])
    n = fine.size
    assert abs(fine.var() - dt / f) < 4 * math.sqrt(2 / n) * dt / f
    blocks = fine.reshape(-1, f)
    c = np.corrcoef(blocks[:, 0], blocks[:, 1])[0, 1]
    assert abs(c) < 4 / math.sqrt(blocks.shape[0])


def test_iter_increments_matches_generate():
    spec = PathSpec(1.0, 1e-3, 8, 2, (3,))
    chunks = list(iter_increments(spec, chunk=700))
    assert max(c.size for c in chunks) <= 700
    assert np.concatenate(chunks).tobytes() == generate(spec).increments.tobytes()


def test_store_limit():
    spec = PathSpec(1.0, 1.0 / (STORE_LIMIT + 1), 0)
    with pytest.raises(OverflowError):
        generate(spec)


@pytest.mark.parametrize(
    "kw",
    [
        dict(t_end=0.0, dt=0.1, seed=0),
        dict(t_end=1.0, dt=-0.1, seed=0),
        dict(t_end=1.0, dt=float("nan"), seed=0),
        dict(t_end=1.0, dt=0.1, seed=-1),
        dict(t_end=1.0, dt=0.1, seed=0, path_index=-2),
        dict(t_end=1.0, dt=0.1, seed=0, refinements=(1,)),
    ],
)
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        PathSpec(**kw)


def test_spec_overflow():
    with pytest.raises(OverflowError):
        PathSpec(1e10, 1e-10, 0)


def test_refine_rejects_bad_factor():
    p = generate(PathSpec(1.0, 0.1, 0))
    for f in (1, 0, 2.5):
        with pytest.raises(ValueError):
            refine(p, f)


def test_path_shape_checked():
    with pytest.raises(ValueError):
        BrownianPath(np.zeros(3), PathSpec(1.0, 0.1, 0))
