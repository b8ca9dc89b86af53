"""Successive cancellation ordered search (SCOS) decoding.

Flipping sets are stored as a record tree: record ``r`` stands for the set
of record ``parent[r]`` plus the index ``last[r]`` (its maximum). Records are
created once and never mutated, so the list only holds record ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .engine import INF, DecoderWorkspace, channel_layer, sc_dec_kernel

UNBOUNDED = -1


@dataclass(frozen=True)
class BiasProfile:
    p: np.ndarray
    b: np.ndarray

    @classmethod
    def zero(cls, N: int) -> "BiasProfile":
        return cls(np.zeros(N), np.zeros(N))


def compute_bias(p) -> BiasProfile:
    """Cumulative bias b[i] = sum_{j<=i} log(1 - p_j)."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0) or np.any(p >= 1):
        raise ValueError("first-error probabilities must lie in [0, 1)")
    return BiasProfile(p.copy(), np.cumsum(np.log1p(-p)) + 0.0)


def eta_from_budget(lambda_max: int | None, N: int) -> int | None:
    """List capacity log2(N) * lambda_max / N; None means unbounded."""
    if lambda_max is None:
        return None
    return int(math.log2(N)) * int(lambda_max) // N


@dataclass(frozen=True)
class FlipRecord:
    flip_set: tuple[int, ...]
    m_bar: float
    s_bar: float


class FlipList:
    """Score-ordered list of flipping records with capacity eta (Alg. InsertList)."""

    def __init__(self, eta: int | None = None):
        self.eta = eta
        self.entries: list[FlipRecord] = []

    def insert(self, rec: FlipRecord) -> None:
        i = len(self.entries)
        while i > 0 and rec.s_bar < self.entries[i - 1].s_bar:
            i -= 1
        self.entries.insert(i, rec)
        if self.eta is not None and len(self.entries) > self.eta:
            self.entries.pop()

    def pop_first(self) -> FlipRecord:
        return self.entries.pop(0)

    def __len__(self):
        return len(self.entries)

    def scores(self) -> list[float]:
        return [e.s_bar for e in self.entries]


def find_start_index(e, e_prev) -> int:
    diff = set(e) ^ set(e_prev)
    if not diff:
        raise ValueError("flipping sets are identical")
    return min(diff)


@dataclass(frozen=True)
class ScosConfig:
    lambda_max: int | None = None
    eta: int | str | None = "auto"
    m_max: float = INF
    bias: BiasProfile | None = None
    budget_check: str = "pass"

    def resolved_eta(self, N: int) -> int | None:
        if self.eta == "auto":
            return eta_from_budget(self.lambda_max, N)
        return None if self.eta is None else int(self.eta)

    def __post_init__(self):
        if self.lambda_max is not None and self.lambda_max < 1:
            raise ValueError("lambda_max must be positive")
        if self.eta not in ("auto", None) and int(self.eta) < 1:
            raise ValueError("eta must be at least 1")
        if self.budget_check not in ("phase", "pass"):
            raise ValueError("budget_check must be 'phase' or 'pass'")


@dataclass
class ScosOutcome:
    u_hat: np.ndarray | None
    pm: float
    omega: int
    node_visits: int
    leaves_found: int
    budget_exhausted: bool
    trace: np.ndarray | None = field(default=None, repr=False)


# ---------------------------------------------------------------- numba kernel

@njit(cache=True)
def _grow_i(a, size):
    out = np.empty(size, dtype=a.dtype)
    out[:a.size] = a
    return out


@njit(cache=True)
def _grow_f(a, size):
    out = np.empty(size, dtype=a.dtype)
    out[:a.size] = a
    return out


@njit(cache=True)
def _chain(rec, parent, last, buf):
    """Write the flipping set of ``rec`` ascending into ``buf``; return its size."""
    k = 0
    r = rec
    while r >= 0:
        k += 1
        r = parent[r]
    r = rec
    j = k - 1
    while r >= 0:
        buf[j] = last[r]
        j -= 1
        r = parent[r]
    return k


@njit(cache=True)
def _first_difference(a, na, b, nb):
    ia = 0
    ib = 0
    while ia < na and ib < nb:
        if a[ia] == b[ib]:
            ia += 1
            ib += 1
        elif a[ia] < b[ib]:
            return a[ia]
        else:
            return b[ib]
    if ia < na:
        return a[ia]
    if ib < nb:
        return b[ib]
    return -1


@njit(cache=True)
def scos_kernel(layer0, is_info, con_ptr, con_idx, bias, m_max, lambda_max, eta,
                per_pass, L, C, v, u_hat, M, Mbar, Sbar, trace):
    """Ordered search main loop. Returns (pm, omega, visits, leaves, exhausted, n_trace).

    The budget is checked before every phase, or with ``per_pass`` only before
    each re-decoding pass (a started pass always runs to its end).
    ``trace`` rows: [i_start, i_end, M_cml before, M_cml after, popped Mbar].
    """
    phase_budget = -1 if per_pass else lambda_max
    n = L.shape[0] - 1
    N = L.shape[1]
    L[0, :] = layer0
    M[0] = 0.0
    Mbar[:] = np.inf
    Sbar[:] = np.inf
    mstate = np.empty(1)
    mstate[0] = m_max
    istate = np.zeros(3, dtype=np.int64)
    flip = np.zeros(N, dtype=np.uint8)
    ntr = 0
    exhausted = False

    cap = 64
    r_parent = np.empty(cap, dtype=np.int64)
    r_last = np.empty(cap, dtype=np.int64)
    r_m = np.empty(cap)
    r_s = np.empty(cap)
    nrec = 0
    lcap = 64
    lst = np.empty(lcap, dtype=np.int64)
    head = 0
    tail = 0

    e_buf = np.empty(N, dtype=np.int64)
    p_buf = np.empty(N, dtype=np.int64)
    n_prev = 0

    i_end = sc_dec_kernel(L, C, v, u_hat, M, Mbar, Sbar, mstate, istate,
                          is_info, con_ptr, con_idx, bias, flip, 0, 1, phase_budget)
    if trace.shape[0] > 0:
        trace[0, 0] = 1
        trace[0, 1] = i_end
        trace[0, 2] = m_max
        trace[0, 3] = mstate[0]
        trace[0, 4] = 0.0
        ntr = 1
    if i_end < 0:
        exhausted = True
        i_end = 0

    rec = -1
    lo = 1
    hi = i_end
    while not exhausted:
        # insert extensions of record ``rec`` for phases lo..hi
        for i in range(lo, hi + 1):
            if is_info[i - 1] and Mbar[i] < mstate[0]:
                if nrec == cap:
                    cap *= 2
                    r_parent = _grow_i(r_parent, cap)
                    r_last = _grow_i(r_last, cap)
                    r_m = _grow_f(r_m, cap)
                    r_s = _grow_f(r_s, cap)
                r_parent[nrec] = rec
                r_last[nrec] = i
                r_m[nrec] = Mbar[i]
                r_s[nrec] = Sbar[i]
                s = Sbar[i]
                # first position whose score exceeds s (new after equals)
                a = head
                z = tail
                while a < z:
                    mid = (a + z) >> 1
                    if r_s[lst[mid]] <= s:
                        a = mid + 1
                    else:
                        z = mid
                if tail == lcap:
                    if head > 0:
                        for k in range(head, tail):
                            lst[k - head] = lst[k]
                        a -= head
                        tail -= head
                        head = 0
                    else:
                        lcap *= 2
                        lst = _grow_i(lst, lcap)
                for k in range(tail, a, -1):
                    lst[k] = lst[k - 1]
                lst[a] = nrec
                tail += 1
                nrec += 1
                if eta >= 0 and tail - head > eta:
                    tail -= 1
        # pop until a record passes the pruning test
        rec = -1
        while head < tail:
            cand = lst[head]
            head += 1
            if r_m[cand] < mstate[0]:
                rec = cand
                break
        if rec < 0:
            break
        if per_pass and lambda_max >= 0 and istate[1] >= lambda_max:
            exhausted = True
            break
        ne = _chain(rec, r_parent, r_last, e_buf)
        fsi = _first_difference(e_buf, ne, p_buf, n_prev)
        if fsi < 0:
            raise RuntimeError("flipping set popped twice")
        i_start = min(fsi, istate[0] + 1)
        for k in range(n_prev):
            flip[p_buf[k] - 1] = 0
        for k in range(ne):
            flip[e_buf[k] - 1] = 1
            p_buf[k] = e_buf[k]
        n_prev = ne
        max_e = r_last[rec]
        before = mstate[0]
        i_end = sc_dec_kernel(L, C, v, u_hat, M, Mbar, Sbar, mstate, istate,
                              is_info, con_ptr, con_idx, bias, flip, max_e, i_start,
                              phase_budget)
        if ntr < trace.shape[0]:
            trace[ntr, 0] = i_start
            trace[ntr, 1] = i_end
            trace[ntr, 2] = before
            trace[ntr, 3] = mstate[0]
            trace[ntr, 4] = r_m[rec]
            ntr += 1
        if i_end < 0:
            exhausted = True
            break
        lo = max_e + 1
        hi = i_end

    omega = 1 if istate[2] > 0 else 0
    return mstate[0], omega, istate[1], istate[2], exhausted, ntr


class ScosDecoder:
    """SCOS decoder bound to one code; owns one workspace."""

    name = "scos"

    def __init__(self, spec, config: ScosConfig = ScosConfig()):
        self.spec = spec
        self.config = config
        N = spec.N
        self.ws = DecoderWorkspace.allocate(spec.n)
        bias = config.bias if config.bias is not None else BiasProfile.zero(N)
        if len(bias.b) != N:
            raise ValueError("bias profile length does not match N")
        self._bias = np.ascontiguousarray(bias.b, dtype=np.float64)
        self._lambda = UNBOUNDED if config.lambda_max is None else int(config.lambda_max)
        eta = config.resolved_eta(N)
        self._eta = UNBOUNDED if eta is None else int(eta)
        self._no_trace = np.zeros((0, 5))

    def decode(self, llr: np.ndarray, trace_len: int = 0) -> ScosOutcome:
        spec = self.spec
        ws = self.ws
        trace = np.zeros((trace_len, 5)) if trace_len else self._no_trace
        pm, omega, visits, leaves, exhausted, ntr = scos_kernel(
            channel_layer(llr, spec.bitrev), spec.is_info, spec.con_ptr, spec.con_idx,
            self._bias, float(self.config.m_max), self._lambda, self._eta,
            self.config.budget_check == "pass",
            ws.L, ws.C, ws.v, ws.u_hat, ws.M, ws.M_bar, ws.S_bar, trace)
        return ScosOutcome(
            u_hat=ws.u_hat.copy() if omega else None,
            pm=float(pm) if omega else INF,
            omega=int(omega),
            node_visits=int(visits),
            leaves_found=int(leaves),
            budget_exhausted=bool(exhausted),
            trace=trace[:ntr] if trace_len else None,
        )


def scos(spec, llr, config: ScosConfig = ScosConfig()) -> ScosOutcome:
    return ScosDecoder(spec, config).decode(llr)


def scos_with_max_pm(spec, llr, config: ScosConfig) -> ScosOutcome:
    if config.m_max < 0:
        raise ValueError("m_max must be non-negative")
    return ScosDecoder(spec, config).decode(llr)
