"""Divide-and-conquer estimation: random equal shards, local fits, plain mean."""

from __future__ import annotations

import json
import os
import struct
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DivisibilityError, DomainError, FLRError, PayloadError, ShardFitError
from .estimator import Dataset, GramFactor, SlopeEstimate, fit_local, gram_factor
from .filters import FilterSpec
from .kernelcore import SobolevKernelSpec

MAGIC = b"FLRS"
PAYLOAD_VERSION = 1
_HEADER = struct.Struct(">4sHI")
BACKENDS = ("serial", "thread", "process")


@dataclass(frozen=True)
class Partition:
    M: int
    blocks: tuple
    seed: int

    @property
    def N(self) -> int:
        return sum(len(b) for b in self.blocks)


def partition(data, M: int, seed: int = 0) -> Partition:
    """Seeded shuffle of 0..N-1 cut into M consecutive equal blocks.

    ``data`` is a Dataset or a sample count.  Indices inside each block are
    sorted so a single block reproduces the original row order.
    """
    N = data.n if isinstance(data, Dataset) else int(data)
    if int(M) != M or M < 1:
        raise DomainError(f"M must be a positive integer, got {M}")
    M = int(M)
    if N % M:
        raise DivisibilityError(f"M={M} does not divide N={N}")
    perm = np.random.default_rng(seed).permutation(N)
    size = N // M
    blocks = tuple(tuple(int(i) for i in np.sort(perm[j * size:(j + 1) * size])) for j in range(M))
    return Partition(M, blocks, seed)


@dataclass(frozen=True)
class DistributedEstimate:
    estimate: SlopeEstimate
    M: int
    shard_diagnostics: list = field(default_factory=list, compare=False)

    @property
    def coeffs(self) -> np.ndarray:
        return self.estimate.coeffs


def export_local_model(estimate: SlopeEstimate) -> bytes:
    body = estimate.to_json().encode("utf-8")
    return _HEADER.pack(MAGIC, PAYLOAD_VERSION, len(body)) + body


def import_local_model(payload: bytes) -> SlopeEstimate:
    if len(payload) < _HEADER.size:
        raise PayloadError("payload shorter than its header")
    magic, version, length = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise PayloadError(f"bad magic bytes {magic!r}")
    if version != PAYLOAD_VERSION:
        raise PayloadError(f"unsupported payload version {version}")
    body = payload[_HEADER.size:]
    if len(body) != length:
        raise PayloadError(f"payload body has {len(body)} bytes, header says {length}")
    try:
        return SlopeEstimate.from_json(body.decode("utf-8"))
    except (ValueError, KeyError, TypeError) as exc:
        raise PayloadError(f"cannot decode payload body: {exc}") from exc


def _shard_task(args):
    shard_id, data, kernel, filt, lam, gram = args
    try:
        return fit_local(data, kernel, filt, lam, gram)
    except FLRError as exc:
        raise ShardFitError(shard_id, exc) from exc
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise ShardFitError(shard_id, exc) from exc


def _remote_shard(args):
    # runs in a worker process; only bytes cross the boundary
    shard_id, X, y, nodes, alpha, filt, lam = args
    from .grid import Grid

    data = Dataset(Grid(nodes), X, y)
    return export_local_model(_shard_task((shard_id, data, SobolevKernelSpec(alpha), filt, lam, None)))


def max_workers(requested: int | None = None) -> int:
    env = os.environ.get("FLR_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    n = requested if requested else cap
    return max(1, min(n, cap))


def average_estimates(locals_: list) -> SlopeEstimate:
    """Sequential mean in list order."""
    acc = np.zeros_like(locals_[0].coeffs)
    for est in locals_:
        acc = acc + est.coeffs
    first = locals_[0]
    return SlopeEstimate(first.grid, acc / len(locals_), first.kernel_spec, first.lam, first.filter)


def fit_distributed(dataset: Dataset, kernel: SobolevKernelSpec, filt, lam: float, M: int,
                    seed: int = 0, backend: str = "serial", workers: int | None = None,
                    gram: GramFactor | None = None) -> DistributedEstimate:
    """Average of local fits over M random equal shards."""
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend {backend!r}")
    filt = filt if isinstance(filt, FilterSpec) else FilterSpec.parse(str(filt))
    part = partition(dataset, M, seed)
    shards = [dataset.subset(b) for b in part.blocks]
    if backend == "process":
        tasks = [(j, s.X, s.y, s.grid.nodes, kernel.alpha, str(filt), lam) for j, s in enumerate(shards)]
        with ProcessPoolExecutor(max_workers=max_workers(workers)) as ex:
            locals_ = [import_local_model(p) for p in ex.map(_remote_shard, tasks)]
    else:
        gram = gram or gram_factor(kernel, dataset.grid)
        tasks = [(j, s, kernel, filt, lam, gram) for j, s in enumerate(shards)]
        if backend == "thread" and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=max_workers(workers)) as ex:
                locals_ = list(ex.map(_shard_task, tasks))
        else:
            locals_ = [_shard_task(t) for t in tasks]
    avg = average_estimates(locals_)
    diags = [dict(shard=j, **est.diagnostics) for j, est in enumerate(locals_)]
    return DistributedEstimate(avg, part.M, diags)
