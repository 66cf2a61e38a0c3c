"""Training loops and timing: sequential baseline, two-worker speculative
pipeline, and shadow instrumentation mode.

Concurrency contract for the speculative pipeline:
  - parameters are frozen between weight updates and readable by both sides;
  - the gradient cache is owned by the resolving (coordinator) thread, which
    serializes all resolutions in sample order;
  - each ForwardTrace is handed from the forward worker to the resolver at a
    stage join and never shared;
  - the pipeline drains at every batch boundary so apply_update runs with
    exclusive access to the parameters.

Per-step timing covers one joined pipeline stage (forward of sample t
overlapped with resolution of sample t-1). Gradient accumulation, weight
updates, and cache stores sit outside the timed span in every mode.
"""
from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass

import numpy as np

from .math_core import Prng, shuffle
from .network import (
    GradientSet,
    NetworkParams,
    TrainConfig,
    accumulate,
    apply_update,
    backward,
    clip,
    evaluate,
    forward,
    init_params,
)
from .speculation import GradientCache, hit_rate


def now() -> int:
    """Monotonic timestamp in nanoseconds."""
    return time.perf_counter_ns()


def elapsed(start: int, end: int) -> int:
    """Nanoseconds between two now() readings."""
    return end - start


def params_digest(params: NetworkParams) -> int:
    """Order-stable 64-bit checksum over the raw parameter bytes."""
    h = hashlib.blake2b(digest_size=8)
    for a in params.arrays():
        h.update(a.tobytes())
    return int.from_bytes(h.digest(), "big")


@dataclass
class EpochRecord:
    epoch: int
    cumulative_time_s: float
    avg_step_us: float  # cumulative mean over all steps since training start
    accuracy_pct: float
    hit_rate: float  # this epoch's rate; 0 for baseline mode
    hits: int = 0
    misses: int = 0
    steps: int = 0
    updates: int = 0


@dataclass
class RunReport:
    config: TrainConfig
    records: list[EpochRecord]
    final_params_digest: int


@dataclass
class ShadowResult:
    """Baseline-trajectory run plus the would-be speculation observations.

    distances holds one entry per resolution in sample order (NaN for cold
    misses); hits holds the would-be decision at the configured threshold.
    """

    report: RunReport
    distances: np.ndarray
    hits: np.ndarray


class _ForwardWorker:
    """Persistent worker thread computing forward passes on request.

    Two locks act as binary semaphores for a strict submit/wait handoff;
    inputs are published before release, results collected after acquire.
    """

    def __init__(self):
        self._go = threading.Lock()
        self._go.acquire()
        self._done = threading.Lock()
        self._done.acquire()
        self._params = None
        self._x = None
        self._trace = None
        self._exc: BaseException | None = None
        self._busy = False
        self._stop = False
        self._thread = threading.Thread(target=self._run, name="forward-worker", daemon=True)
        self._thread.start()

    def _run(self):
        while True:
            self._go.acquire()
            if self._stop:
                self._done.release()
                return
            try:
                self._trace = forward(self._params, self._x)
            except BaseException as e:  # propagated on wait()
                self._exc = e
            self._done.release()

    def submit(self, params: NetworkParams, x: np.ndarray) -> None:
        assert not self._busy, "forward worker already has a pending sample"
        self._busy = True
        self._params = params
        self._x = x
        self._go.release()

    def wait(self):
        self._done.acquire()
        self._busy = False
        self._params = None
        self._x = None
        if self._exc is not None:
            exc, self._exc = self._exc, None
            raise exc
        trace, self._trace = self._trace, None
        return trace

    @property
    def idle(self) -> bool:
        return not self._busy

    def close(self):
        if self._thread.is_alive():
            self._stop = True
            self._go.release()
            self._done.acquire()
            self._thread.join(timeout=5.0)


def _zero(acc: GradientSet) -> None:
    for a in acc.arrays():
        a.fill(0)


def _batches(order: list[int], batch_size: int):
    for i in range(0, len(order), batch_size):
        yield order[i : i + batch_size]


@dataclass
class _Meter:
    """Step-timing and hit accounting, reset per epoch except cumulative sums."""

    step_ns_total: int = 0
    steps_total: int = 0
    epoch_hits: int = 0
    epoch_misses: int = 0
    epoch_updates: int = 0

    def step(self, ns: int, hit: bool | None) -> None:
        self.step_ns_total += ns
        self.steps_total += 1
        if hit is None:
            self.epoch_misses += 1  # baseline/shadow: every sample is a full backward
        elif hit:
            self.epoch_hits += 1
        else:
            self.epoch_misses += 1

    def epoch_record(self, epoch: int, train_ns: int, accuracy: float, speculative: bool) -> EpochRecord:
        resolved = self.epoch_hits + self.epoch_misses
        rec = EpochRecord(
            epoch=epoch,
            cumulative_time_s=train_ns / 1e9,
            avg_step_us=self.step_ns_total / self.steps_total / 1e3,
            accuracy_pct=accuracy * 100.0,
            hit_rate=hit_rate(self.epoch_hits, resolved) if speculative else 0.0,
            hits=self.epoch_hits,
            misses=self.epoch_misses,
            steps=resolved,
            updates=self.epoch_updates,
        )
        self.epoch_hits = self.epoch_misses = self.epoch_updates = 0
        return rec


def _check_run_inputs(cfg: TrainConfig, mode: str, train) -> None:
    if cfg.mode != mode:
        raise ValueError(f"config mode is {cfg.mode!r}, expected {mode!r}")
    if not train:
        raise ValueError("training set is empty")


def train_baseline(cfg: TrainConfig, train, test) -> RunReport:
    """Sequential forward -> backward -> clip -> accumulate loop; single thread."""
    _check_run_inputs(cfg, "baseline", train)
    params = init_params(cfg.seed)
    acc = GradientSet.zeros_like(params)
    meter = _Meter()
    records = []
    train_ns = 0
    for epoch in range(1, cfg.epochs + 1):
        epoch_start = now()
        order = shuffle(range(len(train)), Prng(cfg.seed ^ epoch))
        for batch in _batches(order, cfg.batch_size):
            for idx in batch:
                sample = train[idx]
                t0 = now()
                trace = forward(params, sample.pixels)
                grads = clip(backward(params, trace, sample.label), cfg.clip_bound)
                t1 = now()
                meter.step(elapsed(t0, t1), hit=None)
                accumulate(acc, grads)
            if __debug__:
                trace.validate()
            apply_update(params, acc, cfg, len(batch))
            _zero(acc)
            meter.epoch_updates += 1
        train_ns += elapsed(epoch_start, now())
        records.append(meter.epoch_record(epoch, train_ns, evaluate(params, test), speculative=False))
    return RunReport(cfg, records, params_digest(params))


def train_speculative(cfg: TrainConfig, train, test) -> RunReport:
    """Lag-1 two-worker pipeline: the forward pass of sample t overlaps the
    resolution (cache hit or fresh backward) of sample t-1.

    Resolutions are serialized in sample order and the pipeline drains at
    every batch boundary, so the floating-point accumulation order is
    identical to the baseline; with a threshold below 0 the run reproduces
    the baseline parameters bit for bit.
    """
    _check_run_inputs(cfg, "speculative", train)
    params = init_params(cfg.seed)
    acc = GradientSet.zeros_like(params)
    cache = GradientCache()
    meter = _Meter()
    records = []
    train_ns = 0
    worker = _ForwardWorker()

    def resolve_decision(trace, label):
        # Timed part of a resolution: decision plus (on miss) backward+clip.
        # The cache store happens after the stage join, outside the timed span.
        hit, distance = cache.lookup(trace.probs, label, cfg.threshold, cfg.metric)
        if hit:
            return cache.entry(label).grads, True
        return clip(backward(params, trace, label), cfg.clip_bound), False

    try:
        for epoch in range(1, cfg.epochs + 1):
            epoch_start = now()
            order = shuffle(range(len(train)), Prng(cfg.seed ^ epoch))
            for batch in _batches(order, cfg.batch_size):
                # Refill: first forward of the batch has nothing to overlap.
                first = train[batch[0]]
                worker.submit(params, first.pixels)
                pending_trace = worker.wait()
                pending_label = first.label
                for idx in batch[1:]:
                    sample = train[idx]
                    t0 = now()
                    worker.submit(params, sample.pixels)
                    grads, hit = resolve_decision(pending_trace, pending_label)
                    next_trace = worker.wait()
                    t1 = now()
                    meter.step(elapsed(t0, t1), hit)
                    if not hit:
                        cache.store(pending_label, pending_trace.probs, grads)
                    accumulate(acc, grads)
                    pending_trace = next_trace
                    pending_label = sample.label
                # Drain: resolve the batch's last sample with the worker idle,
                # then update with exclusive access to the parameters.
                t0 = now()
                grads, hit = resolve_decision(pending_trace, pending_label)
                t1 = now()
                meter.step(elapsed(t0, t1), hit)
                if not hit:
                    cache.store(pending_label, pending_trace.probs, grads)
                accumulate(acc, grads)
                if __debug__:
                    pending_trace.validate()
                assert worker.idle, "weight update must not overlap a forward pass"
                apply_update(params, acc, cfg, len(batch))
                _zero(acc)
                meter.epoch_updates += 1
            train_ns += elapsed(epoch_start, now())
            records.append(meter.epoch_record(epoch, train_ns, evaluate(params, test), speculative=True))
    finally:
        worker.close()
    return RunReport(cfg, records, params_digest(params))


def train_shadow(cfg: TrainConfig, train, test) -> ShadowResult:
    """Baseline trajectory plus would-be speculation accounting.

    Updates always use freshly computed gradients, while the cache is
    maintained exactly as the speculative mode would (store on miss only).
    Every would-be distance and hit decision is recorded so any threshold
    can be evaluated offline against the same stream.
    """
    _check_run_inputs(cfg, "shadow", train)
    params = init_params(cfg.seed)
    acc = GradientSet.zeros_like(params)
    cache = GradientCache()
    meter = _Meter()
    records = []
    train_ns = 0
    total = len(train) * cfg.epochs
    distances = np.full(total, np.nan)
    hits = np.zeros(total, dtype=bool)
    pos = 0
    for epoch in range(1, cfg.epochs + 1):
        epoch_start = now()
        order = shuffle(range(len(train)), Prng(cfg.seed ^ epoch))
        for batch in _batches(order, cfg.batch_size):
            for idx in batch:
                sample = train[idx]
                t0 = now()
                trace = forward(params, sample.pixels)
                grads = clip(backward(params, trace, sample.label), cfg.clip_bound)
                t1 = now()
                hit, distance = cache.lookup(trace.probs, sample.label, cfg.threshold, cfg.metric)
                meter.step(elapsed(t0, t1), hit)
                if distance is not None:
                    distances[pos] = distance
                hits[pos] = hit
                pos += 1
                if not hit:
                    cache.store(sample.label, trace.probs, grads)
                accumulate(acc, grads)
            if __debug__:
                trace.validate()
            apply_update(params, acc, cfg, len(batch))
            _zero(acc)
            meter.epoch_updates += 1
        train_ns += elapsed(epoch_start, now())
        records.append(meter.epoch_record(epoch, train_ns, evaluate(params, test), speculative=True))
    report = RunReport(cfg, records, params_digest(params))
    return ShadowResult(report=report, distances=distances, hits=hits)
