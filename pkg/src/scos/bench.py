"""Monte Carlo harness: FER/uFER/complexity, ML lower bound, visited-set size,
genie-aided bias estimation and path-metric histograms."""

from __future__ import annotations

import csv
import io
import multiprocessing as mp
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from .baselines import (BaselineOutcome, DscfConfig, DscfDecoder, ScDecoder, SclConfig,
                        SclDecoder, brute_force_ml)
from .channel import ebn0_to_sigma, frame_rng, transmit
from .codes import CodeSpec, encode_u
from .engine import (calc_pm, channel_layer, frozen_value, genie_pass, path_metric,
                     recursively_calc_c, recursively_calc_l)
from .ordered_search import BiasProfile, ScosConfig, ScosDecoder, compute_bias

DECODERS = ("sc", "scos", "scl", "dscf", "ml")
CSV_COLUMNS = ("snr_db", "frames", "frame_errors", "fer", "undetected_errors", "ufer",
               "erasures", "avg_visit_ratio", "ml_lb_errors", "seed")


class MlDecoder:
    name = "ml"

    def __init__(self, spec, config=None):
        self.spec = spec

    def decode(self, llr):
        u, pm = brute_force_ml(self.spec, llr)
        return BaselineOutcome(u, pm, 1, 0)


def make_decoder(name: str, spec: CodeSpec, config=None):
    """Decoder instance by name; ``config`` defaults to the decoder's defaults."""
    if name == "sc":
        return ScDecoder(spec, config)
    if name == "scos":
        return ScosDecoder(spec, config or ScosConfig())
    if name == "scl":
        return SclDecoder(spec, config or SclConfig())
    if name == "dscf":
        return DscfDecoder(spec, config or DscfConfig())
    if name == "ml":
        return MlDecoder(spec)
    raise ValueError(f"unknown decoder {name!r}; choose from {', '.join(DECODERS)}")


@dataclass(frozen=True)
class SimConfig:
    spec: CodeSpec
    decoder: str
    decoder_config: object = None
    snr_points: tuple[float, ...] = (2.0,)
    min_frames: int = 0
    max_frames: int = 10 ** 6
    min_frame_errors: int = 100
    seed: int = 0
    workers: int = 1
    chunk: int = 1000
    all_zero: bool = False

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if not self.snr_points:
            raise ValueError("snr_points must be non-empty")
        if self.min_frame_errors < 1:
            raise ValueError("min_frame_errors must be at least 1")
        if self.max_frames < 0 or self.min_frames < 0:
            raise ValueError("frame counts must be non-negative")
        if self.workers < 1 or self.chunk < 1:
            raise ValueError("workers and chunk must be positive")


@dataclass
class PointResult:
    snr_db: float
    frames: int = 0
    frame_errors: int = 0
    undetected_errors: int = 0
    erasures: int = 0
    sum_node_visits: int = 0
    ml_lb_errors: int = 0
    wall_time: float = 0.0
    N: int = 1

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def ufer(self) -> float:
        return self.undetected_errors / self.frames if self.frames else float("nan")

    @property
    def avg_visit_ratio(self) -> float:
        return self.sum_node_visits / (self.frames * self.N) if self.frames else float("nan")

    def counters(self) -> tuple[int, ...]:
        return (self.frames, self.frame_errors, self.undetected_errors, self.erasures,
                self.sum_node_visits, self.ml_lb_errors)

    def merge(self, c: "ChunkResult") -> None:
        self.frames += c.frames
        self.frame_errors += c.frame_errors
        self.undetected_errors += c.undetected_errors
        self.erasures += c.erasures
        self.sum_node_visits += c.sum_node_visits
        self.ml_lb_errors += c.ml_lb_errors


@dataclass
class ChunkResult:
    frames: int = 0
    frame_errors: int = 0
    undetected_errors: int = 0
    erasures: int = 0
    sum_node_visits: int = 0
    ml_lb_errors: int = 0


@dataclass
class SimResult:
    config: SimConfig
    points: list[PointResult] = field(default_factory=list)


# ------------------------------------------------------------ frame generation

def draw_frame(spec: CodeSpec, sigma: float, seed: int, frame: int, all_zero: bool = False):
    """(u^N, channel LLRs) of one frame; depends only on (seed, frame)."""
    rng = frame_rng(seed, frame)
    if all_zero:
        payload = np.zeros(spec.payload_bits, dtype=np.uint8)
    else:
        payload = rng.integers(0, 2, spec.payload_bits, dtype=np.uint8)
    u = spec.place(spec.info_from_payload(payload))
    return u, transmit(encode_u(spec, u), sigma, rng)


def _run_chunk(spec, decoder, sigma, seed, start, stop, all_zero) -> ChunkResult:
    r = ChunkResult()
    for f in range(start, stop):
        u, llr = draw_frame(spec, sigma, seed, f, all_zero)
        o = decoder.decode(llr)
        r.frames += 1
        r.sum_node_visits += o.node_visits
        if not o.omega:
            r.frame_errors += 1
            r.erasures += 1
            failed = True
        elif not np.array_equal(o.u_hat, u):
            r.frame_errors += 1
            r.undetected_errors += 1
            failed = True
        else:
            failed = False
        if failed and o.u_hat is not None and not np.array_equal(o.u_hat, u):
            if path_metric(spec, llr, o.u_hat) <= path_metric(spec, llr, u):
                r.ml_lb_errors += 1
    return r


_WORKER: dict = {}


def _worker_init(spec, name, config):
    _WORKER["spec"] = spec
    _WORKER["dec"] = make_decoder(name, spec, config)


def _worker_chunk(args):
    sigma, seed, start, stop, all_zero = args
    return _run_chunk(_WORKER["spec"], _WORKER["dec"], sigma, seed, start, stop, all_zero)


def _chunks(cfg: SimConfig, sigma: float):
    start = 0
    while start < cfg.max_frames:
        stop = min(start + cfg.chunk, cfg.max_frames)
        yield (sigma, cfg.seed, start, stop, cfg.all_zero)
        start = stop


def _done(p: PointResult, cfg: SimConfig) -> bool:
    if p.frames >= cfg.max_frames:
        return True
    return p.frame_errors >= cfg.min_frame_errors and p.frames >= cfg.min_frames


def run_point(cfg: SimConfig, snr_db: float, pool=None) -> PointResult:
    """Simulate one SNR point. Chunks are merged in order and the stopping
    rule is checked only at chunk boundaries, so the result does not depend
    on the number of workers."""
    spec = cfg.spec
    sigma = ebn0_to_sigma(snr_db, spec.rate)
    p = PointResult(snr_db=float(snr_db), N=spec.N)
    t0 = time.perf_counter()
    if cfg.max_frames == 0:
        return p
    if pool is None:
        dec = make_decoder(cfg.decoder, spec, cfg.decoder_config)
        for args in _chunks(cfg, sigma):
            p.merge(_run_chunk(spec, dec, *args))
            if _done(p, cfg):
                break
    else:
        for c in pool.imap(_worker_chunk, _chunks(cfg, sigma)):
            p.merge(c)
            if _done(p, cfg):
                break
    p.wall_time = time.perf_counter() - t0
    return p


def run_fer(cfg: SimConfig, on_point=None) -> SimResult:
    """Run every SNR point of ``cfg``; ``on_point`` is called as each completes."""
    res = SimResult(cfg)
    if cfg.workers > 1 and cfg.max_frames > 0:
        ctx = mp.get_context("fork")
        for snr in cfg.snr_points:
            # a fresh pool per point drops chunks still in flight past the stop
            with ctx.Pool(cfg.workers, _worker_init,
                          (cfg.spec, cfg.decoder, cfg.decoder_config)) as pool:
                pt = run_point(cfg, snr, pool)
                pool.terminate()
            res.points.append(pt)
            if on_point:
                on_point(pt)
    else:
        for snr in cfg.snr_points:
            pt = run_point(cfg, snr)
            res.points.append(pt)
            if on_point:
                on_point(pt)
    return res


# ------------------------------------------------------------------- CSV output

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.6g" % x


def csv_row(p: PointResult, seed: int) -> list[str]:
    return [_fmt(p.snr_db), _fmt(p.frames), _fmt(p.frame_errors), _fmt(p.fer),
            _fmt(p.undetected_errors), _fmt(p.ufer), _fmt(p.erasures),
            _fmt(p.avg_visit_ratio), _fmt(p.ml_lb_errors), _fmt(seed)]


class CsvWriter:
    """Streams result rows; the header is written on construction."""

    def __init__(self, stream):
        self.stream = stream
        self._w = csv.writer(stream, lineterminator="\n")
        self._w.writerow(CSV_COLUMNS)
        stream.flush()

    def write(self, p: PointResult, seed: int) -> None:
        self._w.writerow(csv_row(p, seed))
        self.stream.flush()


def result_csv(res: SimResult) -> str:
    buf = io.StringIO()
    w = CsvWriter(buf)
    for p in res.points:
        w.write(p, res.config.seed)
    return buf.getvalue()


# ------------------------------------------------------------ visited-set size

@njit(cache=True)
def vset_kernel(layer0, is_info, con_ptr, con_idx, threshold, node_cap, all_prefixes):
    """Count code-tree nodes (depths 1..N) whose PM does not exceed ``threshold``.

    Depth-first; the L/C state is snapshotted per depth so each branch resumes
    from its exact prefix. With ``all_prefixes`` frozen phases branch too, so
    every binary prefix is a candidate rather than only code-consistent ones.
    Returns (count, saturated).
    """
    N = layer0.size
    n = 0
    while (1 << n) < N:
        n += 1
    L = np.zeros((n + 1, N))
    C = np.zeros((n + 1, N), dtype=np.uint8)
    L[0, :] = layer0
    SL = np.empty((N, n + 1, N))
    SC = np.empty((N, n + 1, N), dtype=np.uint8)
    v = np.zeros(N, dtype=np.uint8)
    M = np.zeros(N + 1)
    nxt = np.zeros(N, dtype=np.int64)  # next bit to try at each depth (2 = done)
    if threshold < 0:
        return 0, False
    count = 0
    d = 0
    recursively_calc_l(L, C, n, 0)
    SL[0] = L
    SC[0] = C
    nxt[0] = 0
    while d >= 0:
        if nxt[d] >= 2:
            d -= 1
            continue
        b = nxt[d]
        if is_info[d] == 0 and not all_prefixes:
            b = frozen_value(v, con_ptr, con_idx, d)
            nxt[d] = 2
        else:
            nxt[d] = b + 1
        L[:, :] = SL[d]
        C[:, :] = SC[d]
        m = calc_pm(M[d], b, L[n, d])
        if m > threshold:
            continue
        count += 1
        if count > node_cap:
            return count, True
        if d == N - 1:
            continue
        v[d] = b
        M[d + 1] = m
        recursively_calc_c(C, n, d, b)
        recursively_calc_l(L, C, n, d + 1)
        d += 1
        SL[d] = L
        SC[d] = C
        nxt[d] = 0
    return count, False


DEFAULT_NODE_CAP = 10 ** 7


def vset_size(spec: CodeSpec, llr, threshold: float, node_cap: int = DEFAULT_NODE_CAP,
              all_prefixes: bool = False) -> tuple[int, bool]:
    """Number of code-tree nodes with PM <= threshold, and whether the cap was hit."""
    if not np.isfinite(threshold):
        raise ValueError("threshold must be finite")
    cnt, sat = vset_kernel(channel_layer(llr, spec.bitrev), spec.is_info, spec.con_ptr,
                           spec.con_idx, float(threshold), int(node_cap), bool(all_prefixes))
    return int(cnt), bool(sat)


@dataclass
class LemmaResult:
    snr_db: float
    frames: int
    bound: np.ndarray      # per-frame visited-set size / N
    ratio: np.ndarray      # per-frame SCOS node visits / N
    saturated: np.ndarray

    @property
    def mean_bound(self) -> float:
        return float(self.bound.mean())

    @property
    def mean_ratio(self) -> float:
        return float(self.ratio.mean())

    @property
    def violations(self) -> int:
        ok = ~self.saturated
        return int(np.sum(self.ratio[ok] < self.bound[ok]))


def lemma1_bound(spec: CodeSpec, snr_db: float, frames: int, seed: int = 0,
                 bias: BiasProfile | None = None, node_cap: int = DEFAULT_NODE_CAP,
                 all_prefixes: bool = False) -> LemmaResult:
    """Per-frame visited-set size at the ML metric, paired with unbounded SCOS visits."""
    sigma = ebn0_to_sigma(snr_db, spec.rate)
    dec = ScosDecoder(spec, ScosConfig(bias=bias))
    bound = np.empty(frames)
    ratio = np.empty(frames)
    sat = np.zeros(frames, dtype=bool)
    for f in range(frames):
        _, llr = draw_frame(spec, sigma, seed, f)
        o = dec.decode(llr)
        cnt, s = vset_size(spec, llr, o.pm, node_cap, all_prefixes)
        bound[f] = cnt / spec.N
        ratio[f] = o.node_visits / spec.N
        sat[f] = s
    return LemmaResult(float(snr_db), frames, bound, ratio, sat)


# ----------------------------------------------------------- genie-aided passes

@njit(cache=True)
def _genie_frame(L, C, u, llr_dec, is_info):
    return genie_pass(L, C, u, llr_dec, is_info)


def genie_statistics(spec: CodeSpec, snr_db: float, frames: int, seed: int = 0
                     ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Genie-aided SC over ``frames`` frames.

    Returns the per-frame PM M(u^N), the per-frame 1-based first wrong info
    decision (0 if none) and per-phase counts of wrong hard decisions.
    """
    sigma = ebn0_to_sigma(snr_db, spec.rate)
    n, N = spec.n, spec.N
    L = np.zeros((n + 1, N))
    C = np.zeros((n + 1, N), dtype=np.uint8)
    d = np.zeros(N)
    pms = np.empty(frames)
    first = np.empty(frames, dtype=np.int64)
    wrong = np.zeros(N, dtype=np.int64)
    for f in range(frames):
        u, llr = draw_frame(spec, sigma, seed, f)
        L[0] = channel_layer(llr, spec.bitrev)
        pms[f], first[f] = _genie_frame(L, C, u, d, spec.is_info)
        wrong += u != (d < 0)
    return pms, first, wrong


BIAS_KINDS = ("first-error", "bit-channel")


def estimate_bias(spec: CodeSpec, snr_db: float, frames: int, seed: int = 0,
                  kind: str = "first-error") -> BiasProfile:
    """Bias profile from a genie-aided SC run.

    ``first-error``: p_j = fraction of frames whose first wrong info decision
    is at j (frozen phases 0). ``bit-channel``: p_j = error rate of the genie
    hard decision at every phase j, frozen ones included, i.e. the bit-channel
    error probabilities a density-evolution construction would provide.
    """
    if frames < 1:
        raise ValueError("frames must be at least 1")
    if kind not in BIAS_KINDS:
        raise ValueError(f"bias kind must be one of {BIAS_KINDS}")
    _, first, wrong = genie_statistics(spec, snr_db, frames, seed)
    if kind == "first-error":
        counts = np.bincount(first, minlength=spec.N + 1)[1:]
        return compute_bias(counts / frames)
    return compute_bias(wrong / frames)


def write_bias_profile(path, prof: BiasProfile, spec: CodeSpec, snr_db: float,
                       frames: int | None = None, seed: int | None = None) -> None:
    lines = [f"# code_hash={spec.code_hash} snr_db={snr_db:g}"
             + (f" frames={frames}" if frames is not None else "")
             + (f" seed={seed}" if seed is not None else ""),
             "# index p b"]
    for i, (p, b) in enumerate(zip(prof.p, prof.b), start=1):
        lines.append(f"{i} {p:.12g} {b:.12g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_bias_profile(path, spec: CodeSpec | None = None) -> BiasProfile:
    """Load a profile; with ``spec`` the header hash and length are checked."""
    text = Path(path).read_text().splitlines()
    header = dict(kv.split("=", 1) for kv in text[0].lstrip("# ").split() if "=" in kv)
    rows = [ln.split() for ln in text if ln and not ln.startswith("#")]
    p = np.array([float(r[1]) for r in rows])
    if spec is not None:
        if header.get("code_hash") != spec.code_hash:
            raise ValueError("bias profile was estimated for a different code")
        if p.size != spec.N:
            raise ValueError("bias profile length does not match the code")
    return compute_bias(p)


@dataclass
class PmHistogram:
    edges: np.ndarray
    density: np.ndarray
    samples: np.ndarray = field(repr=False)

    def tail_mass(self, threshold: float) -> float:
        return float(np.mean(self.samples > threshold))

    def count_above(self, threshold: float) -> int:
        return int(np.sum(self.samples > threshold))


def pm_histogram(spec: CodeSpec, snr_db: float, frames: int, bins: int | Sequence[float] = 100,
                 seed: int = 0) -> PmHistogram:
    """Empirical density of the genie-path min-sum PM M(u^N)."""
    pms, _, _ = genie_statistics(spec, snr_db, frames, seed)
    if np.isscalar(bins):
        hi = max(float(pms.max()), 1e-9)
        density, edges = np.histogram(pms, bins=int(bins), range=(0.0, hi), density=True)
    else:
        density, edges = np.histogram(pms, bins=np.asarray(bins, dtype=float), density=True)
    return PmHistogram(edges, density, pms)
