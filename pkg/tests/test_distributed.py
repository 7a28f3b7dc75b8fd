import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flr.distributed import (PAYLOAD_VERSION, average_estimates, export_local_model, fit_distributed,
                             import_local_model, max_workers, partition)
from flr.errors import DivisibilityError, PayloadError, ShardFitError
from flr.estimator import Dataset, SlopeEstimate, fit_local
from flr.grid import Grid, equispaced
from flr.kernelcore import SobolevKernelSpec, kernel_matrix
from flr.operators import discretize, eigendecompose
from flr.synth import NoiseSpec, build_ground_truth, gen_dataset

K = SobolevKernelSpec(2)


@pytest.fixture(scope="module")
def data():
    g = equispaced(32)
    lk = eigendecompose(discretize(kernel_matrix(K, g), g))
    gt = build_ground_truth(lk, 0.5, 1.0, 12, seed=0, kernel=K)
    return gen_dataset(gt, g, 64, NoiseSpec(0.3), seed=5)


def test_partition_examples():
    p1 = partition(8, 1, seed=3)
    assert p1.blocks == (tuple(range(8)),)
    p4 = partition(8, 4, seed=3)
    assert all(len(b) == 2 for b in p4.blocks)
    assert sorted(i for b in p4.blocks for i in b) == list(range(8))
    assert partition(8, 4, seed=3) == p4
    with pytest.raises(DivisibilityError):
        partition(10, 4)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_partition_invariants(M, size, seed):
    p = partition(M * size, M, seed)
    flat = [i for b in p.blocks for i in b]
    assert sorted(flat) == list(range(M * size))
    assert {len(b) for b in p.blocks} == {size}


def test_M1_bitwise(data):
    full = fit_local(data, K, "gf", 0.1)
    dist = fit_distributed(data, K, "gf", 0.1, 1, seed=9)
    assert np.array_equal(dist.coeffs, full.coeffs)


def test_identical_shards(data):
    row = data.subset([0])
    same = Dataset(data.grid, np.repeat(row.X, 16, axis=0), np.repeat(row.y, 16))
    dist = fit_distributed(same, K, "tr", 0.1, 4, seed=1)
    single = fit_local(same.subset(range(4)), K, "tr", 0.1)
    assert np.max(np.abs(dist.coeffs - single.coeffs)) <= 1e-12 * np.abs(single.coeffs).max()
    est = fit_local(data, K, "gf", 0.1)
    assert np.max(np.abs(average_estimates([est] * 4).coeffs - est.coeffs)) <= 1e-12 * np.abs(est.coeffs).max()


@pytest.mark.parametrize("M", [2, 4])
def test_hand_average(data, M):
    dist = fit_distributed(data, K, "gf", 0.1, M, seed=4)
    part = partition(data, M, seed=4)
    locals_ = [fit_local(data.subset(b), K, "gf", 0.1).coeffs for b in part.blocks]
    acc = np.zeros_like(locals_[0])
    for c in locals_:
        acc = acc + c
    assert np.array_equal(dist.coeffs, acc / M)
    assert np.max(np.abs(dist.coeffs - np.mean(locals_, axis=0))) <= 1e-14 * np.abs(acc).max()


def test_shard_order_invariance(data):
    part = partition(data, 4, seed=2)
    locals_ = [fit_local(data.subset(b), K, "gf", 0.1) for b in part.blocks]
    a = average_estimates(locals_).coeffs
    b = average_estimates(locals_[::-1]).coeffs
    assert np.max(np.abs(a - b)) <= 1e-14 * np.abs(a).max()


def test_backends_agree(data):
    ref = fit_distributed(data, K, "gf", 0.1, 4, seed=2).coeffs
    thr = fit_distributed(data, K, "gf", 0.1, 4, seed=2, backend="thread").coeffs
    proc = fit_distributed(data, K, "gf", 0.1, 4, seed=2, backend="process", workers=2).coeffs
    assert np.array_equal(ref, thr)
    assert np.max(np.abs(ref - proc)) <= 1e-15 * max(1.0, np.abs(ref).max())


def test_payload_roundtrip_and_errors(data):
    est = fit_local(data, K, "itr:s=2", 0.2)
    payload = export_local_model(est)
    assert payload[:4] == b"FLRS"
    back = import_local_model(payload)
    assert np.array_equal(back.coeffs, est.coeffs) and back.grid == est.grid
    assert (back.lam, back.filter, back.kernel_spec.alpha) == (0.2, "itr:s=2", 2)
    with pytest.raises(PayloadError):
        import_local_model(b"XXXX" + payload[4:])
    with pytest.raises(PayloadError):
        import_local_model(payload[:4] + (PAYLOAD_VERSION + 1).to_bytes(2, "big") + payload[6:])
    with pytest.raises(PayloadError):
        import_local_model(payload[:-3])
    with pytest.raises(PayloadError):
        import_local_model(payload[:5])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 40), st.integers(0, 10**6))
def test_payload_random_roundtrip(m, seed):
    rng = np.random.default_rng(seed)
    g = Grid(np.r_[0.0, np.sort(rng.random(m - 1)), 1.0]) if m > 1 else Grid(np.array([0.0, 1.0]))
    est = SlopeEstimate(g, rng.standard_normal(m) * 10.0 ** rng.integers(-8, 8), SobolevKernelSpec(1),
                        float(rng.random() * 0.9 + 0.05), "gf")
    back = import_local_model(export_local_model(est))
    assert np.array_equal(back.coeffs, est.coeffs) and back.grid == est.grid and back.lam == est.lam


def test_shard_error_carries_id():
    # the gram is factored inside each worker process, so the failure is tagged with its shard
    g = Grid(np.array([0.0, 0.5, 0.5 + 1e-10, 1.0]))
    d = Dataset(g, np.ones((4, 4)), np.ones(4))
    with pytest.raises(ShardFitError) as info:
        fit_distributed(d, K, "tr", 0.1, 2, backend="process", workers=1)
    assert "shard 0" in str(info.value)
    assert info.value.shard == 0


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("FLR_THREADS", "2")
    assert max_workers(8) == 2
    assert max_workers() == 2
    monkeypatch.delenv("FLR_THREADS")
    assert max_workers(1) == 1
