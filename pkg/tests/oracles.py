"""Independent reference computations used by the tests.

Nothing here calls into the package's simulator or enumerator; it works
with dense Kronecker products, plain lists and matrix powers.
"""

from __future__ import annotations

import itertools
from functools import reduce

import numpy as np

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def grid_edges(n: int, m: int) -> list[tuple[int, int]]:
    out = []
    for r in range(n):
        for c in range(m):
            v = r * m + c + 1
            if c + 1 < m:
                out.append((v, v + 1))
            if r + 1 < n:
                out.append((v, v + m))
    return out


def op_on(N: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    return reduce(np.kron, [ops.get(q, I2) for q in range(1, N + 1)])


def graph_state_dense(N: int, edges) -> np.ndarray:
    plus = np.ones(2) / np.sqrt(2)
    psi = reduce(np.kron, [plus] * N).astype(complex)
    for a, b in edges:
        # CZ = |0><0| x I + |1><1| x Z
        P0 = np.diag([1.0, 0.0])
        P1 = np.diag([0.0, 1.0])
        cz = op_on(N, {a: P0}) + op_on(N, {a: P1, b: Z})
        psi = cz @ psi
    return psi


def xy_ket(angle8: int, outcome: int) -> np.ndarray:
    a = angle8 * np.pi / 4
    return np.array([1, (-1) ** outcome * np.exp(1j * a)]) / np.sqrt(2)


def xy_projector(N: int, q: int, angle8: int, outcome: int) -> np.ndarray:
    k = xy_ket(angle8, outcome)
    return op_on(N, {q: np.outer(k, k.conj())})


def positive_branch_dense(n: int, m: int, outputs, angles) -> dict[tuple[int, ...], float]:
    """Project non-outputs onto |+_a>, then read the output XY statistics."""
    N = n * m
    psi = graph_state_dense(N, grid_edges(n, m))
    for v in range(1, N + 1):
        if v not in outputs:
            psi = xy_projector(N, v, angles[v - 1], 0) @ psi
    psi = psi / np.linalg.norm(psi)
    outs = sorted(outputs)
    dist = {}
    for bits in itertools.product((0, 1), repeat=len(outs)):
        P = reduce(lambda A, B: A @ B, [xy_projector(N, v, angles[v - 1], b) for v, b in zip(outs, bits)], np.eye(2**N))
        phi = P @ psi
        dist[bits] = float(np.vdot(phi, phi).real)
    return dist


def fib_matrix(k: int) -> int:
    """F_k from the k-th power of [[1,1],[1,0]] over Python ints."""
    def mul(A, B):
        return [
            [A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]],
            [A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]],
        ]

    R = [[1, 0], [0, 1]]
    M = [[1, 1], [1, 0]]
    while k:
        if k & 1:
            R = mul(R, M)
        M = mul(M, M)
        k >>= 1
    return R[0][1]


def path_matchings(edges: int) -> int:
    """Matchings of a path with ``edges`` edges, by brute force over edge subsets."""
    count = 0
    for mask in range(1 << edges):
        if mask & (mask >> 1) == 0:
            count += 1
    return count


def brute_force_arrow_systems(n: int, m: int):
    """All successor assignments (none/right/down per vertex) in lexicographic order."""
    N = n * m
    choices = []
    for v in range(1, N + 1):
        r, c = divmod(v - 1, m)
        ch = [None]
        if c + 1 < m:
            ch.append(v + 1)
        if r + 1 < n:
            ch.append(v + m)
        choices.append(ch)
    for combo in itertools.product(*choices):
        yield {v: t for v, t in zip(range(1, N + 1), combo) if t is not None}
