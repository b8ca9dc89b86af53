"""Modified G_N-coset codes: transform, information sets and dynamic frozen bits.

All index sets exposed here are 1-based, so phase ``i`` of the SC schedule is
index ``i``. Arrays handed to the numba kernels are 0-based.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from numba import njit

DEFAULT_BETA = 2.0 ** 0.25
# g(x) = x^7 + x^6 + x^5 + x^2 + 1
CRC7_TAPS = "11100101"


def bit_reversal(n: int) -> np.ndarray:
    """Permutation ``br`` with ``br[k]`` the n-bit reversal of ``k``."""
    N = 1 << n
    idx = np.arange(N)
    out = np.zeros(N, dtype=np.int64)
    for b in range(n):
        out |= ((idx >> b) & 1) << (n - 1 - b)
    return out


@njit(cache=True)
def _place_kernel(info_bits, info_idx0, con_ptr, con_idx, u):
    u[:] = 0
    for k in range(info_idx0.size):
        u[info_idx0[k]] = info_bits[k]
    for i in range(u.size):
        x = 0
        for k in range(con_ptr[i], con_ptr[i + 1]):
            x ^= u[con_idx[k]]
        if con_ptr[i + 1] > con_ptr[i]:
            u[i] = x


@njit(cache=True)
def _encode_kernel(u, bitrev, out):
    N = u.size
    for k in range(N):
        out[k] = u[bitrev[k]]
    h = 1
    while h < N:
        for start in range(0, N, 2 * h):
            for k in range(start, start + h):
                out[k] ^= out[k + h]
        h *= 2


def polar_transform(u: np.ndarray) -> np.ndarray:
    """Return ``u @ F^{(x)n}`` over GF(2) with F = [[1, 0], [1, 1]]."""
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.size
    h = 1
    while h < N:
        x = x.reshape(-1, 2 * h)
        x[:, :h] ^= x[:, h:]
        x = x.reshape(-1)
        h *= 2
    return x


@dataclass(frozen=True)
class CrcSpec:
    """CRC generator polynomial, coefficients highest degree first."""

    taps: str = CRC7_TAPS

    def __post_init__(self):
        if len(self.taps) < 2 or set(self.taps) - {"0", "1"}:
            raise ValueError(f"bad CRC taps {self.taps!r}")
        if self.taps[0] != "1" or self.taps[-1] != "1":
            raise ValueError("CRC generator needs leading and trailing coefficient 1")

    @property
    def degree(self) -> int:
        return len(self.taps) - 1

    @property
    def poly(self) -> np.ndarray:
        return np.array([int(c) for c in self.taps], dtype=np.uint8)

    def remainder(self, bits: Sequence[int]) -> np.ndarray:
        """Remainder of x^deg * m(x) mod g(x); ``bits[0]`` is the top coefficient."""
        g = self.poly
        d = self.degree
        reg = np.concatenate([np.asarray(bits, dtype=np.uint8), np.zeros(d, np.uint8)])
        for k in range(len(bits)):
            if reg[k]:
                reg[k:k + d + 1] ^= g
        return reg[len(bits):].copy()

    def append(self, payload: Sequence[int]) -> np.ndarray:
        payload = np.asarray(payload, dtype=np.uint8)
        return np.concatenate([payload, self.remainder(payload)])

    def check(self, word: Sequence[int]) -> bool:
        word = np.asarray(word, dtype=np.uint8)
        return bool(np.array_equal(self.remainder(word[:-self.degree]), word[-self.degree:]))


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """An (N, K) modified G_N-coset code.

    ``constraints`` maps every frozen index to the info indices whose XOR gives
    its value; an empty tuple is a static zero.
    """

    n: int
    info_set: tuple[int, ...]
    constraints: Mapping[int, tuple[int, ...]]
    crc: CrcSpec | None = None
    provenance: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        N = 1 << self.n
        info = tuple(sorted(int(i) for i in self.info_set))
        if len(set(info)) != len(info) or (info and (info[0] < 1 or info[-1] > N)):
            raise ValueError("info set must hold distinct indices in [1, N]")
        cons = {int(i): tuple(sorted(int(j) for j in js)) for i, js in self.constraints.items()}
        info_s = set(info)
        if set(cons) & info_s or set(cons) | info_s != set(range(1, N + 1)):
            raise ValueError("constraints must cover exactly the frozen indices")
        for i, js in cons.items():
            for j in js:
                if j >= i or j not in info_s:
                    raise ValueError(f"constraint u_{i} <- u_{j} is not causal on info bits")
        if self.crc is not None and self.crc.degree >= len(info):
            raise ValueError("CRC longer than the information set")
        object.__setattr__(self, "info_set", info)
        object.__setattr__(self, "constraints", dict(sorted(cons.items())))
        object.__setattr__(self, "provenance", dict(self.provenance))
        self._build_arrays()

    def _build_arrays(self):
        N = self.N
        is_info = np.zeros(N, dtype=np.uint8)
        is_info[np.array(self.info_set, dtype=np.int64) - 1] = 1
        ptr = np.zeros(N + 1, dtype=np.int64)
        idx = []
        for i in range(1, N + 1):
            js = self.constraints.get(i, ())
            idx.extend(j - 1 for j in js)
            ptr[i] = len(idx)
        object.__setattr__(self, "is_info", is_info)
        object.__setattr__(self, "con_ptr", ptr)
        object.__setattr__(self, "con_idx", np.array(idx, dtype=np.int64))
        object.__setattr__(self, "bitrev", bit_reversal(self.n))
        object.__setattr__(self, "info_idx0", np.array(self.info_set, dtype=np.int64) - 1)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return len(self.info_set)

    @property
    def payload_bits(self) -> int:
        return self.K - (self.crc.degree if self.crc else 0)

    @property
    def rate(self) -> float:
        """Rate seen by the channel: payload bits over block length."""
        return self.payload_bits / self.N

    @property
    def frozen_set(self) -> tuple[int, ...]:
        return tuple(self.constraints)

    def is_dynamic(self) -> bool:
        return any(self.constraints.values())

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "N": self.N,
            "K": self.K,
            "info_set": list(self.info_set),
            "constraints": {str(i): list(js) for i, js in self.constraints.items() if js},
            "provenance": dict(self.provenance),
        }
        if self.crc is not None:
            d["crc"] = self.crc.taps
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "CodeSpec":
        n = int(d["n"])
        info = tuple(int(i) for i in d["info_set"])
        cons = {i: () for i in range(1, (1 << n) + 1) if i not in set(info)}
        for k, js in d.get("constraints", {}).items():
            cons[int(k)] = tuple(int(j) for j in js)
        crc = CrcSpec(d["crc"]) if d.get("crc") else None
        spec = cls(n, info, cons, crc, d.get("provenance", {}))
        if "K" in d and int(d["K"]) != spec.K:
            raise ValueError("K does not match the info set size")
        return spec

    @property
    def code_hash(self) -> str:
        body = {k: v for k, v in self.to_dict().items() if k != "provenance"}
        blob = json.dumps(body, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CodeSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def info_from_payload(self, payload: np.ndarray) -> np.ndarray:
        """Info-bit vector for a payload, CRC appended when the code has one."""
        payload = np.asarray(payload, dtype=np.uint8)
        if payload.size != self.payload_bits:
            raise ValueError(f"payload has {payload.size} bits, expected {self.payload_bits}")
        return self.crc.append(payload) if self.crc else payload

    def place(self, info_bits: np.ndarray) -> np.ndarray:
        """Full input vector u^N: info bits at A, frozen bits from the constraints."""
        info_bits = np.asarray(info_bits, dtype=np.uint8)
        if info_bits.size != self.K:
            raise ValueError(f"got {info_bits.size} info bits, expected {self.K}")
        u = np.empty(self.N, dtype=np.uint8)
        _place_kernel(info_bits, self.info_idx0, self.con_ptr, self.con_idx, u)
        return u


def encode_u(spec_or_n, u: np.ndarray) -> np.ndarray:
    """c^N = u^N B_N G_2^{(x)n}: bit-reverse, then the XOR butterfly."""
    if isinstance(spec_or_n, CodeSpec):
        br = spec_or_n.bitrev
    else:
        br = bit_reversal(int(spec_or_n))
    u = np.ascontiguousarray(u, dtype=np.uint8)
    out = np.empty_like(u)
    _encode_kernel(u, br, out)
    return out


def encode(spec: CodeSpec, info_bits: Sequence[int]) -> np.ndarray:
    return encode_u(spec, spec.place(np.asarray(info_bits, dtype=np.uint8)))


def _hamming_weights(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return np.array([bin(int(i)).count("1") for i in idx])


def rm_info_set(r: int, n: int) -> tuple[int, ...]:
    if not 0 <= r <= n:
        raise ValueError(f"RM order r={r} outside [0, {n}]")
    w = _hamming_weights(n)
    return tuple(int(i) + 1 for i in np.flatnonzero(w >= n - r))


def polarization_weights(n: int, beta: float = DEFAULT_BETA) -> np.ndarray:
    idx = np.arange(1 << n)
    return np.array([sum(beta ** k for k in range(n) if (i >> k) & 1) for i in idx])


def _top_by_weight(candidates: Sequence[int], K: int, n: int, beta: float) -> tuple[int, ...]:
    w = polarization_weights(n, beta)
    ranked = sorted(candidates, key=lambda i: (w[i - 1], i), reverse=True)
    return tuple(sorted(ranked[:K]))


def polar_info_set_pw(n: int, K: int, beta: float = DEFAULT_BETA) -> tuple[int, ...]:
    N = 1 << n
    if not 0 <= K <= N:
        raise ValueError(f"K={K} outside [0, {N}]")
    return _top_by_weight(range(1, N + 1), K, n, beta)


def rm_polar_info_set(n: int, r: int, K: int, beta: float = DEFAULT_BETA) -> tuple[int, ...]:
    base = rm_info_set(r, n)
    if K > len(base):
        raise ValueError(f"K={K} exceeds |RM({r},{n})| = {len(base)}")
    return _top_by_weight(base, K, n, beta)


def rm_order_for(n: int, K: int) -> int:
    """RM order whose dimension is exactly K."""
    for r in range(n + 1):
        if sum(comb(n, k) for k in range(r + 1)) == K:
            return r
    raise ValueError(f"no RM code of length {1 << n} has dimension {K}")


def static_frozen(n: int, info_set: Sequence[int]) -> dict[int, tuple[int, ...]]:
    info = set(info_set)
    return {i: () for i in range(1, (1 << n) + 1) if i not in info}


def pac_constraints(info_set: Sequence[int], g: Sequence[int], N: int) -> dict[int, tuple[int, ...]]:
    """Convolutional dynamic frozen bits u_i = XOR_{k: g_k=1} u_{i-k}.

    ``g`` holds the taps g_1..g_m at offsets 1..m. Taps that land on frozen
    positions are replaced by that position's own (already resolved) set.
    """
    info = set(info_set)
    taps = [k + 1 for k, gk in enumerate(g) if int(gk)]
    resolved: dict[int, frozenset[int]] = {}
    for i in range(1, N + 1):
        if i in info:
            continue
        acc: frozenset[int] = frozenset()
        for k in taps:
            j = i - k
            if j < 1:
                continue
            acc = acc ^ (frozenset([j]) if j in info else resolved[j])
        resolved[i] = acc
    return {i: tuple(sorted(s)) for i, s in resolved.items()}


def parse_taps(text: str) -> tuple[int, ...]:
    text = text.replace(",", "").replace(" ", "")
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"bad tap string {text!r}")
    return tuple(int(c) for c in text)


def rm_code(r: int, n: int) -> CodeSpec:
    info = rm_info_set(r, n)
    return CodeSpec(n, info, static_frozen(n, info), provenance={"rule": "rm", "r": r})


def polar_code(n: int, K: int, beta: float = DEFAULT_BETA) -> CodeSpec:
    info = polar_info_set_pw(n, K, beta)
    return CodeSpec(n, info, static_frozen(n, info),
                    provenance={"rule": "polar-pw", "beta": beta})


def rm_polar_code(n: int, r: int, K: int, beta: float = DEFAULT_BETA) -> CodeSpec:
    info = rm_polar_info_set(n, r, K, beta)
    return CodeSpec(n, info, static_frozen(n, info),
                    provenance={"rule": "rm-polar", "r": r, "beta": beta})


def pac_code(n: int, K: int, g: Sequence[int] = (0, 1, 1, 0, 1, 1)) -> CodeSpec:
    """PAC code on the RM information set of dimension K."""
    r = rm_order_for(n, K)
    info = rm_info_set(r, n)
    cons = pac_constraints(info, g, 1 << n)
    return CodeSpec(n, info, cons, provenance={"rule": "pac", "r": r, "g": "".join(map(str, g))})


def sample_drm_polar(base: CodeSpec, seed: int, rng=None) -> CodeSpec:
    """Draw a member of the dRM-polar ensemble over ``base.info_set``.

    Draw order: frozen indices ascending, prior info indices ascending. One
    batch ``rng.integers(0, 2, size=total)`` is consumed in that order.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    info = base.info_set
    frozen = [i for i in range(1, base.N + 1) if i not in set(info)]
    priors = [[j for j in info if j < i] for i in frozen]
    total = sum(len(p) for p in priors)
    draws = np.asarray(rng.integers(0, 2, size=total), dtype=np.uint8)
    cons = {}
    pos = 0
    for i, prior in zip(frozen, priors):
        bits = draws[pos:pos + len(prior)]
        pos += len(prior)
        cons[i] = tuple(j for j, b in zip(prior, bits) if b)
    prov = dict(base.provenance)
    prov.update(rule="drm-polar", seed=int(seed))
    return CodeSpec(base.n, info, cons, base.crc, prov)


def crc_polar_spec(n: int, K_outer: int, crc: CrcSpec | None = None, rule: str = "polar-pw",
                   beta: float = DEFAULT_BETA, design_snr_db: float = 0.0) -> CodeSpec:
    """Polar code of dimension K_outer + deg carrying a CRC-protected payload."""
    crc = crc or CrcSpec()
    N = 1 << n
    K = K_outer + crc.degree
    if K > N:
        raise ValueError(f"K_outer + CRC degree = {K} exceeds N = {N}")
    if rule == "polar-pw":
        info = polar_info_set_pw(n, K, beta)
        prov = {"rule": "crc-polar", "reliability": rule, "beta": beta}
    elif rule == "ga":
        info = ga_info_set(n, K, design_snr_db)
        prov = {"rule": "crc-polar", "reliability": rule, "design_snr_db": design_snr_db}
    else:
        raise ValueError(f"unknown reliability rule {rule!r}")
    return CodeSpec(n, info, static_frozen(n, info), crc, prov)


def _phi(x: np.ndarray) -> np.ndarray:
    # Chung's piecewise approximation of the Gaussian-approximation phi function.
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 10
    xs = np.maximum(x[small], 1e-12)
    out[small] = np.exp(-0.4527 * xs ** 0.86 + 0.0218)
    xl = x[~small]
    out[~small] = np.sqrt(np.pi / xl) * np.exp(-xl / 4) * (1 - 10 / (7 * xl))
    return out


def _phi_inv(y: float) -> float:
    from scipy.optimize import brentq

    if y >= 1.0:
        return 0.0
    return brentq(lambda x: float(_phi(np.array([x]))[0]) - y, 1e-12, 1e4)


def ga_info_set(n: int, K: int, design_snr_db: float) -> tuple[int, ...]:
    """Gaussian-approximation construction at a design E_b/N_0 (rate K/N)."""
    N = 1 << n
    sigma2 = 1.0 / (2 * (K / N) * 10 ** (design_snr_db / 10))
    means = np.array([2.0 / sigma2])
    for _ in range(n):
        nxt = np.empty(2 * means.size)
        # Interleaved children (check, variable) give the phase order of B_N G_2^{(x)n}.
        nxt[0::2] = [_phi_inv(1 - (1 - float(_phi(np.array([m]))[0])) ** 2) for m in means]
        nxt[1::2] = 2 * means
        means = nxt
    ranked = sorted(range(1, N + 1), key=lambda i: (means[i - 1], i), reverse=True)
    return tuple(sorted(ranked[:K]))
