"""Reference decoders: CRC-aided SCL, dynamic SC-flip, and a brute-force ML oracle.

All three share the min-sum path metric of :mod:`scos.engine`, so their PMs
are directly comparable with SCOS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .codes import _place_kernel
from .engine import (INF, calc_pm, channel_layer, frozen_value, genie_pass, hard_dec,
                     recursively_calc_c, recursively_calc_l, sc_pass)

ML_MAX_K = 20


@dataclass(frozen=True)
class SclConfig:
    list_size: int = 16

    def __post_init__(self):
        if int(self.list_size) < 1:
            raise ValueError("list_size must be at least 1")


@dataclass(frozen=True)
class DscfConfig:
    t_max: int = 70
    alpha: float = 0.45
    flip_order_max: int = 3

    def __post_init__(self):
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.flip_order_max < 1:
            raise ValueError("flip_order_max must be at least 1")


@dataclass
class BaselineOutcome:
    u_hat: np.ndarray
    pm: float
    omega: int
    node_visits: int
    attempts: int = 0


# ------------------------------------------------------------------ CRC helper

@njit(cache=True)
def _crc_ok(v, info_idx0, poly):
    """True when the info bits of ``v`` (payload then parity) pass the CRC."""
    d = poly.size - 1
    K = info_idx0.size
    reg = np.empty(K, dtype=np.uint8)
    for k in range(K):
        reg[k] = v[info_idx0[k]]
    for k in range(K - d):
        if reg[k]:
            for t in range(d + 1):
                reg[k + t] ^= poly[t]
    for k in range(K - d, K):
        if reg[k]:
            return False
    return True


def _crc_args(spec):
    if spec.crc is None:
        return False, np.ones(1, dtype=np.uint8)
    return True, spec.crc.poly


# ------------------------------------------------------------------------- SCL

@njit(cache=True)
def scl_kernel(layer0, is_info, con_ptr, con_idx, info_idx0, use_crc, poly, Lsize,
               L, C, V, pm, out):
    """List decoding with plain per-path copies. Returns (pm, omega, visits).

    Ties at the pruning boundary keep the candidate enumerated first, i.e. the
    lower path slot, then bit 0 before bit 1.
    """
    n = L.shape[1] - 1
    N = L.shape[2]
    L[0, 0, :] = layer0
    pm[0] = 0.0
    active = np.zeros(Lsize, dtype=np.uint8)
    active[0] = 1
    npaths = 1
    visits = 0
    cand_pm = np.empty(2 * Lsize)
    keep = np.zeros((Lsize, 2), dtype=np.uint8)
    for i0 in range(N):
        for p in range(Lsize):
            if active[p]:
                recursively_calc_l(L[p], C[p], n, i0)
        visits += npaths
        if is_info[i0] == 0:
            for p in range(Lsize):
                if active[p]:
                    b = frozen_value(V[p], con_ptr, con_idx, i0)
                    V[p, i0] = b
                    pm[p] = calc_pm(pm[p], b, L[p, n, i0])
                    recursively_calc_c(C[p], n, i0, b)
            continue
        nc = 0
        for p in range(Lsize):
            if active[p]:
                l = L[p, n, i0]
                cand_pm[2 * p] = calc_pm(pm[p], 0, l)
                cand_pm[2 * p + 1] = calc_pm(pm[p], 1, l)
                nc += 2
            else:
                cand_pm[2 * p] = np.inf
                cand_pm[2 * p + 1] = np.inf
        order = np.argsort(cand_pm, kind="mergesort")
        nkeep = min(Lsize, nc)
        keep[:, :] = 0
        for k in range(nkeep):
            c = order[k]
            keep[c >> 1, c & 1] = 1
        # kill paths with no surviving child
        for p in range(Lsize):
            if active[p] and keep[p, 0] == 0 and keep[p, 1] == 0:
                active[p] = 0
        # paths with both children clone into a free slot
        for p in range(Lsize):
            if active[p] and keep[p, 0] and keep[p, 1]:
                q = 0
                while active[q] or (keep[q, 0] | keep[q, 1]):
                    q += 1
                L[q, :, :] = L[p, :, :]
                C[q, :, :] = C[p, :, :]
                V[q, :] = V[p, :]
                pm[q] = pm[p]
                active[q] = 2  # newly cloned, takes bit 1
        for p in range(Lsize):
            if active[p] == 2:
                continue
            if active[p]:
                b = 0 if keep[p, 0] else 1
                V[p, i0] = b
                pm[p] = calc_pm(pm[p], b, L[p, n, i0])
                recursively_calc_c(C[p], n, i0, b)
        for p in range(Lsize):
            if active[p] == 2:
                active[p] = 1
                V[p, i0] = 1
                pm[p] = calc_pm(pm[p], 1, L[p, n, i0])
                recursively_calc_c(C[p], n, i0, 1)
        npaths = 0
        for p in range(Lsize):
            npaths += active[p]
    # choose output
    best = -1
    best_crc = -1
    for p in range(Lsize):
        if active[p]:
            if best < 0 or pm[p] < pm[best]:
                best = p
            if use_crc and _crc_ok(V[p], info_idx0, poly):
                if best_crc < 0 or pm[p] < pm[best_crc]:
                    best_crc = p
    omega = 1
    if use_crc:
        if best_crc >= 0:
            best = best_crc
        else:
            omega = 0
    out[:] = V[best]
    return pm[best], omega, visits


class SclDecoder:
    """CRC-aided SCL; omega = 0 when no surviving path passes the CRC."""

    name = "scl"

    def __init__(self, spec, config: SclConfig = SclConfig()):
        self.spec = spec
        self.config = config
        Ls = int(config.list_size)
        n, N = spec.n, spec.N
        self._L = np.zeros((Ls, n + 1, N))
        self._C = np.zeros((Ls, n + 1, N), dtype=np.uint8)
        self._V = np.zeros((Ls, N), dtype=np.uint8)
        self._pm = np.zeros(Ls)
        self._use_crc, self._poly = _crc_args(spec)

    def decode(self, llr: np.ndarray) -> BaselineOutcome:
        spec = self.spec
        out = np.empty(spec.N, dtype=np.uint8)
        pm, omega, visits = scl_kernel(
            channel_layer(llr, spec.bitrev), spec.is_info, spec.con_ptr, spec.con_idx,
            spec.info_idx0, self._use_crc, self._poly, int(self.config.list_size),
            self._L, self._C, self._V, self._pm, out)
        return BaselineOutcome(out, float(pm), int(omega), int(visits))


def scl_decode(spec, llr, cfg: SclConfig = SclConfig()) -> tuple[np.ndarray, float]:
    o = SclDecoder(spec, cfg).decode(llr)
    return o.u_hat, o.pm


# ------------------------------------------------------------------------ DSCF

@njit(cache=True, inline="always")
def _softplus_pen(x, alpha):
    # (1/alpha) * log(1 + exp(-alpha * x)) for x >= 0
    return np.log1p(np.exp(-alpha * x)) / alpha


def scf_metric_q1(l_abs, i: int, alpha: float, info_set=None) -> float:
    """Q({i}) for a single flip at 1-based phase ``i``."""
    return dscf_metric((i,), l_abs, alpha, info_set)


def dscf_metric(e, l_abs, alpha: float, info_set=None) -> float:
    """Q(E) = sum_{i in E} |l_i| + sum_{j in A, j <= max E} softplus penalty.

    ``l_abs`` holds |l_j| indexed by 1-based phase minus one; ``info_set``
    defaults to every phase.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    l_abs = np.abs(np.asarray(l_abs, dtype=np.float64))
    e = sorted(int(i) for i in e)
    if not e:
        return 0.0
    imax = e[-1]
    js = range(1, imax + 1) if info_set is None else [j for j in info_set if j <= imax]
    pen = sum(float(np.log1p(np.exp(-alpha * l_abs[j - 1]))) / alpha for j in js)
    return float(sum(l_abs[i - 1] for i in e)) + pen


@njit(cache=True)
def _pool_insert(pool_q, pool_sets, pool_len, size, cap, q, eset, elen):
    """Insert (q, eset) into the ascending pool keeping at most ``cap`` entries."""
    if size == cap and q >= pool_q[size - 1]:
        return size
    pos = size if size < cap else cap - 1
    while pos > 0 and pool_q[pos - 1] > q:
        if pos < cap:
            pool_q[pos] = pool_q[pos - 1]
            pool_sets[pos, :] = pool_sets[pos - 1, :]
            pool_len[pos] = pool_len[pos - 1]
        pos -= 1
    pool_q[pos] = q
    pool_sets[pos, :elen] = eset[:elen]
    pool_len[pos] = elen
    return min(size + 1, cap)


@njit(cache=True)
def dscf_kernel(layer0, is_info, con_ptr, con_idx, info_idx0, poly, t_max, alpha,
                order_max, L, C, v, out):
    """Returns (omega, attempts, visits)."""
    n = L.shape[0] - 1
    N = L.shape[1]
    L[0, :] = layer0
    llr = np.empty(N)
    flip = np.zeros(N, dtype=np.uint8)
    sc_pass(L, C, v, llr, is_info, con_ptr, con_idx, flip, 1)
    visits = N
    if _crc_ok(v, info_idx0, poly) or t_max == 0:
        out[:] = v
        return (1 if _crc_ok(v, info_idx0, poly) else 0), 0, visits
    cap = max(t_max, 1)
    pool_q = np.empty(cap)
    pool_sets = np.zeros((cap, order_max), dtype=np.int64)
    pool_len = np.zeros(cap, dtype=np.int64)
    size = 0
    eset = np.empty(order_max, dtype=np.int64)
    cur = np.empty(order_max, dtype=np.int64)
    ncur = 0
    prev = np.empty(order_max, dtype=np.int64)
    nprev = 0
    # extensions of the empty set from the initial trajectory
    pen = 0.0
    for i0 in range(N):
        if is_info[i0]:
            a = abs(llr[i0])
            pen += _softplus_pen(a, alpha)
            eset[0] = i0
            size = _pool_insert(pool_q, pool_sets, pool_len, size, cap, a + pen, eset, 1)
    attempts = 0
    while attempts < t_max and size > 0:
        # pop best
        ncur = pool_len[0]
        cur[:ncur] = pool_sets[0, :ncur]
        for k in range(1, size):
            pool_q[k - 1] = pool_q[k]
            pool_sets[k - 1, :] = pool_sets[k, :]
            pool_len[k - 1] = pool_len[k]
        size -= 1
        # restart at the first phase whose flip status changes
        start = N
        for k in range(nprev):
            flip[prev[k]] = 0
        for k in range(ncur):
            flip[cur[k]] = 1
        for k in range(nprev):
            found = False
            for t in range(ncur):
                if cur[t] == prev[k]:
                    found = True
            if not found and prev[k] < start:
                start = prev[k]
        for k in range(ncur):
            found = False
            for t in range(nprev):
                if prev[t] == cur[k]:
                    found = True
            if not found and cur[k] < start:
                start = cur[k]
        sc_pass(L, C, v, llr, is_info, con_ptr, con_idx, flip, start + 1)
        visits += N - start
        attempts += 1
        prev[:ncur] = cur[:ncur]
        nprev = ncur
        if _crc_ok(v, info_idx0, poly):
            out[:] = v
            return 1, attempts, visits
        if ncur < order_max:
            imax = cur[ncur - 1]
            base = 0.0
            pen = 0.0
            for k in range(ncur):
                base += abs(llr[cur[k]])
            for i0 in range(imax + 1):
                if is_info[i0]:
                    pen += _softplus_pen(abs(llr[i0]), alpha)
            eset[:ncur] = cur[:ncur]
            for i0 in range(imax + 1, N):
                if is_info[i0]:
                    a = abs(llr[i0])
                    pen += _softplus_pen(a, alpha)
                    eset[ncur] = i0
                    size = _pool_insert(pool_q, pool_sets, pool_len, size, cap,
                                        base + a + pen, eset, ncur + 1)
    out[:] = v
    return 0, attempts, visits


class DscfDecoder:
    """Dynamic SC-flip with CRC; omega = 0 when every attempt fails the CRC."""

    name = "dscf"

    def __init__(self, spec, config: DscfConfig = DscfConfig()):
        if spec.crc is None:
            raise ValueError("DSCF needs a code with a CRC")
        self.spec = spec
        self.config = config
        n, N = spec.n, spec.N
        self._L = np.zeros((n + 1, N))
        self._C = np.zeros((n + 1, N), dtype=np.uint8)
        self._v = np.zeros(N, dtype=np.uint8)

    def decode(self, llr: np.ndarray) -> BaselineOutcome:
        spec, cfg = self.spec, self.config
        out = np.empty(spec.N, dtype=np.uint8)
        omega, attempts, visits = dscf_kernel(
            channel_layer(llr, spec.bitrev), spec.is_info, spec.con_ptr, spec.con_idx,
            spec.info_idx0, spec.crc.poly, int(cfg.t_max), float(cfg.alpha),
            int(cfg.flip_order_max), self._L, self._C, self._v, out)
        pm = _pm_of(spec, llr, out)
        return BaselineOutcome(out, pm, int(omega), int(visits), int(attempts))


def dscf_decode(spec, llr, cfg: DscfConfig = DscfConfig()) -> tuple[np.ndarray | None, int]:
    o = DscfDecoder(spec, cfg).decode(llr)
    return (o.u_hat if o.omega else None), o.attempts


# --------------------------------------------------------------- brute force ML

@njit(cache=True)
def ml_kernel(layer0, is_info, info_idx0, con_ptr, con_idx, L, C, out):
    n = L.shape[0] - 1
    N = L.shape[1]
    K = info_idx0.size
    info = np.empty(K, dtype=np.uint8)
    u = np.empty(N, dtype=np.uint8)
    llr = np.empty(N)
    best = np.inf
    for w in range(1 << K):
        for k in range(K):
            info[k] = (w >> (K - 1 - k)) & 1
        _place_kernel(info, info_idx0, con_ptr, con_idx, u)
        L[0, :] = layer0
        m, _ = genie_pass(L, C, u, llr, is_info)
        if m < best:
            best = m
            out[:] = u
    return best


def brute_force_ml(spec, llr) -> tuple[np.ndarray, float]:
    """Exhaustive min-PM search over all 2^K inputs; ties go to the smallest info word."""
    if spec.K > ML_MAX_K:
        raise ValueError(f"K = {spec.K} exceeds the enumeration limit {ML_MAX_K}")
    n, N = spec.n, spec.N
    L = np.zeros((n + 1, N))
    C = np.zeros((n + 1, N), dtype=np.uint8)
    out = np.zeros(N, dtype=np.uint8)
    pm = ml_kernel(channel_layer(llr, spec.bitrev), spec.is_info, spec.info_idx0,
                   spec.con_ptr, spec.con_idx, L, C, out)
    return out, float(pm)


def _pm_of(spec, llr, u) -> float:
    from .engine import path_metric

    return path_metric(spec, llr, u)


@dataclass(frozen=True)
class ScConfig:
    update: str = "minsum"   # check-node update: minsum | exact

    def __post_init__(self):
        if self.update not in ("minsum", "exact"):
            raise ValueError("update must be 'minsum' or 'exact'")


class ScDecoder:
    """Plain SC wrapped in the common decoder interface."""

    name = "sc"

    def __init__(self, spec, config: ScConfig | None = None):
        self.spec = spec
        self.config = config or ScConfig()
        self._exact = self.config.update == "exact"
        n, N = spec.n, spec.N
        self._L = np.zeros((n + 1, N))
        self._C = np.zeros((n + 1, N), dtype=np.uint8)
        self._v = np.zeros(N, dtype=np.uint8)
        self._llr = np.zeros(N)
        self._flip = np.zeros(N, dtype=np.uint8)
        self._use_crc, self._poly = _crc_args(spec)

    def decode(self, llr: np.ndarray) -> BaselineOutcome:
        spec = self.spec
        self._L[0] = channel_layer(llr, spec.bitrev)
        sc_pass(self._L, self._C, self._v, self._llr, spec.is_info, spec.con_ptr,
                spec.con_idx, self._flip, 1, self._exact)
        u = self._v.copy()
        d = self._llr
        pm = float(np.sum(np.where(u != (d < 0), np.abs(d), 0.0)))
        omega = 1
        if self._use_crc and not _crc_ok(u, spec.info_idx0, self._poly):
            omega = 0
        return BaselineOutcome(u, pm, omega, spec.N)
