"""SC decoding substrate shared by every decoder in the package.

Layout: ``L`` and ``C`` have shape (n + 1, N). Layer 0 holds the channel LLRs
in bit-reversed order, layer ``n`` the decision LLRs. The node at layer ``s``
with index ``p`` owns columns ``p * 2**(n-s)`` onward, so every tree node has
its own slot and a pass can resume at any phase whose prefix is committed.

Kernels take 0-based phase indices; path-metric arrays ``M``, ``Mbar`` and
``Sbar`` are indexed by the 1-based phase with ``M[0] = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

INF = np.inf
BUDGET_EXHAUSTED = -1


@njit(cache=True, inline="always")
def f_minsum(a, b):
    m = min(abs(a), abs(b))
    if (a < 0.0) != (b < 0.0):
        return -m
    return m


@njit(cache=True, inline="always")
def f_exact(a, b):
    """Exact check-node update 2 atanh(tanh(a/2) tanh(b/2)) in a stable form."""
    return (f_minsum(a, b) + np.log1p(np.exp(-abs(a + b)))
            - np.log1p(np.exp(-abs(a - b))))


@njit(cache=True, inline="always")
def g_update(a, b, s):
    if s:
        return b - a
    return b + a


@njit(cache=True, inline="always")
def hard_dec(l):
    return 0 if l >= 0.0 else 1


@njit(cache=True, inline="always")
def calc_pm(m, v, l):
    if v == hard_dec(l):
        return m
    return m + abs(l)


@njit(cache=True)
def recursively_calc_l(L, C, n, i, exact=False):
    """Fill ``L[n, i]`` for phase ``i`` (0-based).

    Only layers at or below the split point between phases i-1 and i are
    recomputed; everything above is shared with the previous phase. With
    ``exact`` the check-node update is the exact one instead of min-sum.
    """
    if i == 0:
        s_from = 1
    else:
        t = 0
        while not (i >> t) & 1:
            t += 1
        s_from = n - t
    for s in range(s_from, n + 1):
        B = 1 << (n - s)
        p = i >> (n - s)
        base = p * B
        pb = (p >> 1) * 2 * B
        if p & 1:
            lb = base - B
            for k in range(B):
                L[s, base + k] = g_update(L[s - 1, pb + k], L[s - 1, pb + B + k], C[s, lb + k])
        elif exact:
            for k in range(B):
                L[s, base + k] = f_exact(L[s - 1, pb + k], L[s - 1, pb + B + k])
        else:
            for k in range(B):
                L[s, base + k] = f_minsum(L[s - 1, pb + k], L[s - 1, pb + B + k])


@njit(cache=True)
def recursively_calc_c(C, n, i, bit):
    """Write decision ``bit`` for phase ``i`` and fold completed subtrees upward."""
    C[n, i] = bit
    s = n
    p = i
    while s > 0 and p & 1:
        B = 1 << (n - s)
        lb = (p - 1) * B
        rb = p * B
        pb = (p >> 1) * 2 * B
        for k in range(B):
            C[s - 1, pb + k] = C[s, lb + k] ^ C[s, rb + k]
            C[s - 1, pb + B + k] = C[s, rb + k]
        s -= 1
        p >>= 1


@njit(cache=True, inline="always")
def frozen_value(v, con_ptr, con_idx, i):
    x = 0
    for k in range(con_ptr[i], con_ptr[i + 1]):
        x ^= v[con_idx[k]]
    return x


@njit(cache=True)
def sc_dec_kernel(L, C, v, u_hat, M, Mbar, Sbar, mstate, istate,
                  is_info, con_ptr, con_idx, bias, flip, max_e, i_start, lambda_max):
    """Modified SC pass from 1-based phase ``i_start`` with flip mask ``flip``.

    ``mstate[0]`` is M_cml. ``istate`` = [committed, visits, leaves]. Returns
    the end phase, or BUDGET_EXHAUSTED if the visit budget ran out first.
    """
    n = L.shape[0] - 1
    N = L.shape[1]
    for i in range(i_start, N + 1):
        if lambda_max >= 0 and istate[1] >= lambda_max:
            return -1
        istate[1] += 1
        i0 = i - 1
        recursively_calc_l(L, C, n, i0)
        l = L[n, i0]
        if is_info[i0] == 0:
            b = frozen_value(v, con_ptr, con_idx, i0)
        else:
            b = hard_dec(l) ^ flip[i0]
            if i > max_e:
                Mbar[i] = calc_pm(M[i - 1], b ^ 1, l)
                Sbar[i] = Mbar[i] + bias[i0]
        v[i0] = b
        M[i] = calc_pm(M[i - 1], b, l)
        if M[i] >= mstate[0]:
            istate[0] = i - 1
            return i
        recursively_calc_c(C, n, i0, b)
        istate[0] = i
    mstate[0] = M[N]
    u_hat[:] = v
    istate[2] += 1
    return N


@njit(cache=True)
def sc_pass(L, C, v, llr_dec, is_info, con_ptr, con_idx, flip, i_start, exact=False):
    """Plain SC from 1-based ``i_start`` (no pruning); decision LLRs into ``llr_dec``."""
    n = L.shape[0] - 1
    N = L.shape[1]
    for i0 in range(i_start - 1, N):
        recursively_calc_l(L, C, n, i0, exact)
        l = L[n, i0]
        llr_dec[i0] = l
        if is_info[i0] == 0:
            b = frozen_value(v, con_ptr, con_idx, i0)
        else:
            b = hard_dec(l) ^ flip[i0]
        v[i0] = b
        recursively_calc_c(C, n, i0, b)


@njit(cache=True)
def genie_pass(L, C, u, llr_dec, is_info):
    """SC with every decision forced to ``u``.

    Returns (PM of u, 1-based phase of the first wrong info decision or 0).
    """
    n = L.shape[0] - 1
    N = L.shape[1]
    m = 0.0
    first = 0
    for i0 in range(N):
        recursively_calc_l(L, C, n, i0)
        l = L[n, i0]
        llr_dec[i0] = l
        b = u[i0]
        if first == 0 and is_info[i0] and hard_dec(l) != b:
            first = i0 + 1
        m = calc_pm(m, b, l)
        recursively_calc_c(C, n, i0, b)
    return m, first


def channel_layer(llr: np.ndarray, bitrev: np.ndarray) -> np.ndarray:
    """Layer-0 LLRs: channel LLRs in the order the butterfly consumes them."""
    return np.ascontiguousarray(np.asarray(llr, dtype=np.float64)[bitrev])


@dataclass
class DecoderWorkspace:
    """Arrays of one SC/SCOS decoder instance. Single-threaded."""

    L: np.ndarray
    C: np.ndarray
    v: np.ndarray
    u_hat: np.ndarray
    M: np.ndarray
    M_bar: np.ndarray
    S_bar: np.ndarray
    mstate: np.ndarray
    istate: np.ndarray

    @classmethod
    def allocate(cls, n: int) -> "DecoderWorkspace":
        N = 1 << n
        ws = cls(
            L=np.zeros((n + 1, N)),
            C=np.zeros((n + 1, N), dtype=np.uint8),
            v=np.zeros(N, dtype=np.uint8),
            u_hat=np.zeros(N, dtype=np.uint8),
            M=np.zeros(N + 1),
            M_bar=np.full(N + 1, INF),
            S_bar=np.full(N + 1, INF),
            mstate=np.array([INF]),
            istate=np.zeros(3, dtype=np.int64),
        )
        return ws

    def reset(self, layer0: np.ndarray, m_cml: float = INF) -> None:
        self.L[0, :] = layer0
        self.M[0] = 0.0
        self.M_bar[:] = INF
        self.S_bar[:] = INF
        self.mstate[0] = m_cml
        self.istate[:] = 0

    @property
    def n(self) -> int:
        return self.L.shape[0] - 1

    @property
    def m_cml(self) -> float:
        return float(self.mstate[0])

    @property
    def committed(self) -> int:
        return int(self.istate[0])

    @property
    def node_visits(self) -> int:
        return int(self.istate[1])

    @property
    def leaves(self) -> int:
        return int(self.istate[2])

    def decision_llr(self, i: int) -> float:
        return float(self.L[self.n, i - 1])

    def partial_sums_codeword(self) -> np.ndarray:
        """Top-layer partial sums mapped back to channel order."""
        from .codes import bit_reversal

        return self.C[0][bit_reversal(self.n)]


def sc_dec(ws: DecoderWorkspace, spec, i_start: int, flips=(), bias=None,
           lambda_max: int = -1) -> int:
    """Run the modified SC pass on ``ws``; see :func:`sc_dec_kernel`."""
    N = spec.N
    flip = np.zeros(N, dtype=np.uint8)
    for i in flips:
        flip[i - 1] = 1
    b = np.zeros(N) if bias is None else np.asarray(bias, dtype=np.float64)
    max_e = max(flips) if flips else 0
    return int(sc_dec_kernel(ws.L, ws.C, ws.v, ws.u_hat, ws.M, ws.M_bar, ws.S_bar,
                             ws.mstate, ws.istate, spec.is_info, spec.con_ptr, spec.con_idx,
                             b, flip, max_e, i_start, lambda_max))


def sc_decode(spec, llr: np.ndarray) -> tuple[np.ndarray, float]:
    """Plain SC decoding; returns (u^N, path metric)."""
    ws = DecoderWorkspace.allocate(spec.n)
    ws.reset(channel_layer(llr, spec.bitrev))
    sc_dec(ws, spec, 1)
    return ws.u_hat.copy(), ws.m_cml


def path_metric(spec, llr: np.ndarray, u: np.ndarray) -> float:
    """Min-sum PM M(u^N) accumulated along the genie path ``u``."""
    n = spec.n
    N = spec.N
    L = np.zeros((n + 1, N))
    L[0] = channel_layer(llr, spec.bitrev)
    C = np.zeros((n + 1, N), dtype=np.uint8)
    m, _ = genie_pass(L, C, np.asarray(u, dtype=np.uint8), np.zeros(N), spec.is_info)
    return float(m)
