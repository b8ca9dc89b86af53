"""Independent oracles shared by the test modules.

None of these reuse the package's kernels: encoding is a dense GF(2) matrix
product, SC is the textbook halves recursion written with numpy, and ML is a
correlation-discrepancy search over the explicit codebook.
"""

import itertools

import numpy as np
import pytest

from scos.codes import CodeSpec, bit_reversal


def generator_matrix(n: int) -> np.ndarray:
    """B_N G_2^{(x)n} as a dense 0/1 matrix."""
    F = np.array([[1, 0], [1, 1]], dtype=np.int64)
    G = np.ones((1, 1), dtype=np.int64)
    for _ in range(n):
        G = np.kron(G, F)
    N = 1 << n
    B = np.zeros((N, N), dtype=np.int64)
    br = [int(format(i, f"0{n}b")[::-1], 2) if n else 0 for i in range(N)]
    for i in range(N):
        B[i, br[i]] = 1
    return (B @ G) % 2


def matrix_encode(n: int, u) -> np.ndarray:
    return (np.asarray(u, dtype=np.int64) @ generator_matrix(n) % 2).astype(np.uint8)


def _f(a, b):
    return np.sign(np.where(a >= 0, 1.0, -1.0) * np.where(b >= 0, 1.0, -1.0)) * np.minimum(
        np.abs(a), np.abs(b))


def _xform(u):
    """u F^{(x)m} without bit reversal, by explicit recursion."""
    u = np.asarray(u, dtype=np.uint8)
    if u.size == 1:
        return u.copy()
    h = u.size // 2
    return np.concatenate([_xform(u[:h] ^ u[h:]), _xform(u[h:])])


def naive_decision_llrs(llr, n: int, decide, f=_f) -> tuple[np.ndarray, np.ndarray]:
    """Textbook recursive min-sum SC.

    ``decide(i, l)`` returns the bit for 0-based phase i given its LLR. The
    code word is c = x[bitrev] with x = u F^{(x)n}, so the recursion runs on
    channel values reordered by the bit reversal.
    """
    y = np.asarray(llr, dtype=np.float64)[bit_reversal(n)]
    out = np.empty(1 << n)
    u = np.empty(1 << n, dtype=np.uint8)

    def rec(y, off):
        if y.size == 1:
            out[off] = y[0]
            u[off] = decide(off, y[0])
            return
        h = y.size // 2
        rec(f(y[:h], y[h:]), off)
        a = _xform(u[off:off + h])
        rec(y[h:] + (1.0 - 2.0 * a) * y[:h], off + h)

    rec(y, 0)
    return out, u


def naive_sc(spec: CodeSpec, llr, f=_f) -> tuple[np.ndarray, np.ndarray]:
    def decide(i, l):
        if spec.is_info[i]:
            return 0 if l >= 0 else 1
        return sum(int(u_partial[j - 1]) for j in spec.constraints[i + 1]) % 2

    u_partial = np.zeros(spec.N, dtype=np.uint8)

    def tracking(i, l):
        b = decide(i, l)
        u_partial[i] = b
        return b

    return naive_decision_llrs(llr, spec.n, tracking, f)


def codebook(spec: CodeSpec):
    """All (info word, u^N, c^N), info words in lexicographic order."""
    G = generator_matrix(spec.n)
    for w in itertools.product([0, 1], repeat=spec.K):
        info = np.array(w, dtype=np.uint8)
        u = np.zeros(spec.N, dtype=np.int64)
        for k, i in enumerate(spec.info_set):
            u[i - 1] = info[k]
        for i in sorted(spec.constraints):
            u[i - 1] = sum(u[j - 1] for j in spec.constraints[i]) % 2
        yield info, u.astype(np.uint8), (u @ G % 2).astype(np.uint8)


def correlation_discrepancy(llr, c) -> float:
    llr = np.asarray(llr)
    return float(np.sum(np.abs(llr)[c != (llr < 0)]))


def ml_by_discrepancy(spec: CodeSpec, llr):
    best = None
    for _, u, c in codebook(spec):
        d = correlation_discrepancy(llr, c)
        if best is None or d < best[1]:
            best = (u, d)
    return best


@pytest.fixture(scope="session")
def pac128():
    from scos.codes import pac_code

    return pac_code(7, 64)
