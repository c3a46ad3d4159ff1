"""Combinatorics of Young indices.

Enumeration of partitions, irreducible-representation dimensions for the
unitary and symmetric groups, symmetric-group characters via the
Murnaghan-Nakayama rule, Schur polynomial evaluation, and the
entropy / large-deviation bounds used by the block-weight analysis.

All combinatorial quantities are computed in exact integer arithmetic
(Python integers are unbounded, so the dimension formulas never overflow).
Entropies and divergences are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence


@dataclass(frozen=True)
class Partition:
    """A Young index: non-increasing non-negative parts summing to n.

    Trailing zeros are kept explicit; ``len(parts)`` is the number of slots
    d, which for unitary-group dimensions means the number of tensor-factor
    levels.
    """

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise ValueError("partition needs at least one part")
        if any(p < 0 for p in parts):
            raise ValueError(f"negative part in {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts not non-increasing: {parts}")
        if sum(parts) < 1:
            raise ValueError("partition of 0 is not supported")

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def num_parts(self) -> int:
        """Number of slots d, trailing zeros included."""
        return len(self.parts)

    def trimmed(self) -> tuple[int, ...]:
        """Parts with trailing zeros removed."""
        return tuple(p for p in self.parts if p > 0)

    def padded(self, d: int) -> "Partition":
        if d < len(self.trimmed()):
            raise ValueError(f"cannot pad {self.parts} to {d} parts")
        return Partition(self.trimmed() + (0,) * (d - len(self.trimmed())))

    def normalized(self) -> tuple[float, ...]:
        """The point lambda/n on the probability simplex."""
        n = self.n
        return tuple(p / n for p in self.parts)

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.parts) + ")"


def enumerate_partitions(n: int, d: int) -> list[Partition]:
    """All partitions of n with at most d parts, zero-padded to length d.

    Returned in decreasing lexicographic order, e.g. (4,2) ->
    [(4,0), (3,1), (2,2)].
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")

    out: list[Partition] = []

    def fill(prefix: list[int], remaining: int, slots: int, cap: int):
        if slots == 0:
            if remaining == 0:
                out.append(Partition(tuple(prefix)))
            return
        lo = -(-remaining // slots)  # ceil: keep parts non-increasing feasible
        for p in range(min(cap, remaining), lo - 1, -1):
            fill(prefix + [p], remaining - p, slots - 1, p)

    fill([], n, d, n)
    return out


def dim_u(lam: Partition) -> int:
    """Dimension of the unitary-group irreducible block for lam.

    Uses the Weyl dimension formula with l_i = lam_i + d - i over the d
    explicit slots of lam; exact integer arithmetic.
    """
    d = lam.num_parts
    ls = [lam.parts[i] + d - 1 - i for i in range(d)]
    num = 1
    for i in range(d):
        for j in range(i + 1, d):
            num *= ls[i] - ls[j]
    den = 1
    for i in range(1, d):
        den *= math.factorial(d - i)
    q, r = divmod(num, den)
    assert r == 0, f"non-integer dimension for {lam}"
    return q


def dim_v(lam: Partition) -> int:
    """Dimension of the symmetric-group irreducible block (number of
    standard tableaux of shape lam); exact integer arithmetic."""
    d = lam.num_parts
    n = lam.n
    ls = [lam.parts[i] + d - 1 - i for i in range(d)]
    num = math.factorial(n)
    diffs = 1
    for i in range(d):
        for j in range(i + 1, d):
            diffs *= ls[i] - ls[j]
    den = 1
    for l in ls:
        den *= math.factorial(l)
    q, r = divmod(num * diffs, den)
    assert r == 0, f"non-integer dimension for {lam}"
    return q


def cycle_type(sigma: Sequence[int]) -> Partition:
    """Cycle type of a permutation in one-line notation, as a partition."""
    n = len(sigma)
    seen = [False] * n
    lengths = []
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = sigma[k]
            length += 1
        lengths.append(length)
    lengths.sort(reverse=True)
    return Partition(tuple(lengths))


def class_size(mu: Partition) -> int:
    """Size of the conjugacy class with cycle type mu: n!/z_mu."""
    n = mu.n
    z = 1
    counts: dict[int, int] = {}
    for p in mu.trimmed():
        counts[p] = counts.get(p, 0) + 1
    for length, mult in counts.items():
        z *= length**mult * math.factorial(mult)
    return math.factorial(n) // z


@lru_cache(maxsize=None)
def _mn_character(lam: tuple[int, ...], mu: tuple[int, ...]) -> int:
    """Murnaghan-Nakayama recursion on trimmed shapes.

    Works on first-column hook lengths (beta numbers): removing a border
    strip of length k replaces some beta number b with b - k, provided
    b - k >= 0 and b - k is not already a beta number; the sign is (-1)
    to the number of beta numbers strictly between b - k and b.
    """
    if not lam and not mu:
        return 1
    if not lam or not mu:
        return 0
    k = mu[0]
    rest = mu[1:]
    m = len(lam)
    betas = [lam[i] + m - 1 - i for i in range(m)]
    beta_set = set(betas)
    total = 0
    for idx, b in enumerate(betas):
        nb = b - k
        if nb < 0 or nb in beta_set:
            continue
        new_betas = sorted(betas, reverse=True)
        new_betas.remove(b)
        new_betas.append(nb)
        new_betas.sort(reverse=True)
        height = sum(1 for c in betas if nb < c < b)
        new_lam = tuple(new_betas[i] - (m - 1 - i) for i in range(m))
        new_lam = tuple(p for p in new_lam if p > 0)
        total += (-1) ** height * _mn_character(new_lam, rest)
    return total


def character(lam: Partition, mu: Partition) -> int:
    """Symmetric-group character chi_lam evaluated on cycle type mu."""
    if lam.n != mu.n:
        raise ValueError(f"sizes differ: {lam} vs {mu}")
    mu_sorted = tuple(sorted(mu.trimmed(), reverse=True))
    return _mn_character(lam.trimmed(), mu_sorted)


def _ssyt_sum(shape: tuple[int, ...], p: Sequence[float]) -> float:
    """Schur polynomial by direct enumeration of semistandard tableaux.

    Rows weakly increase, columns strictly increase, entries in 1..d.
    Exponential in general; intended for d <= 3 at small n.
    """
    d = len(p)
    rows = len(shape)
    total = 0.0

    def fill(r: int, c: int, above: list[list[int]], row: list[int], weight: float):
        nonlocal total
        if r == rows:
            total += weight
            return
        if c == shape[r]:
            fill(r + 1, 0, above + [row], [], weight)
            return
        lo = row[c - 1] if c > 0 else 1
        if r > 0:
            lo = max(lo, above[r - 1][c] + 1)
        for v in range(lo, d + 1):
            fill(r, c + 1, above, row + [v], weight * p[v - 1])

    fill(0, 0, [], [], 1.0)
    return total


def _complete_homogeneous(max_deg: int, p: Sequence[float]) -> list[float]:
    """h_0..h_max_deg of the variables p, by one-variable-at-a-time DP."""
    h = [0.0] * (max_deg + 1)
    h[0] = 1.0
    for x in p:
        acc = list(h)
        for k in range(1, max_deg + 1):
            acc[k] = h[k] + x * acc[k - 1]
        h = acc
    return h


def _jacobi_trudi(shape: tuple[int, ...], p: Sequence[float]) -> float:
    """Schur polynomial as det(h_{shape_i - i + j})."""
    import numpy as np

    m = len(shape)
    h = _complete_homogeneous(max(shape) + m, p)

    def h_at(k: int) -> float:
        if k < 0:
            return 0.0
        return h[k]

    mat = np.array(
        [[h_at(shape[i] - (i + 1) + (j + 1)) for j in range(m)] for i in range(m)]
    )
    return float(np.linalg.det(mat))


def schur_polynomial(lam: Partition, p: Sequence[float]) -> float:
    """Evaluate the Schur polynomial s_lam at the point p.

    For probability vectors p this is the per-copy block weight divided by
    the symmetric-group dimension. Enumeration over semistandard tableaux
    for d <= 3, Jacobi-Trudi determinant beyond.
    """
    d = len(p)
    shape = lam.trimmed()
    if len(shape) > d:
        return 0.0
    if d <= 3:
        return _ssyt_sum(shape, p)
    return _jacobi_trudi(shape, p)


def as_spectrum(values: Iterable[float], tol: float = 1e-12) -> tuple[float, ...]:
    """Validate a Schmidt-coefficient spectrum: non-increasing, sums to 1."""
    vec = tuple(float(v) for v in values)
    if not vec:
        raise ValueError("empty spectrum")
    if any(v < -tol or v > 1 + tol for v in vec):
        raise ValueError(f"entries outside [0,1]: {vec}")
    if any(vec[i] < vec[i + 1] - tol for i in range(len(vec) - 1)):
        raise ValueError(f"spectrum not sorted non-increasing: {vec}")
    if abs(sum(vec) - 1.0) > max(tol, 1e-12):
        raise ValueError(f"spectrum sums to {sum(vec)}, not 1")
    return vec


def shannon_entropy(q: Sequence[float]) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    return -sum(x * math.log(x) for x in q if x > 0.0)


def relative_entropy(q: Sequence[float], p: Sequence[float]) -> float:
    """KL divergence D(q||p) in nats; +inf when q charges a null atom of p."""
    total = 0.0
    for qi, pi in zip(q, p):
        if qi <= 0.0:
            continue
        if pi <= 0.0:
            return math.inf
        total += qi * math.log(qi / pi)
    return total


def entropy_bound_check(lam: Partition) -> tuple[float, float, bool]:
    """Check |log(dim_v)/n - H(lam/n)| <= (d^2+2d)/(2n) * log(n+d).

    Returns (lhs, rhs, holds).
    """
    n = lam.n
    d = lam.num_parts
    lhs = abs(math.log(dim_v(lam)) / n - shannon_entropy(lam.normalized()))
    rhs = (d * d + 2 * d) / (2 * n) * math.log(n + d)
    return lhs, rhs, lhs <= rhs


def large_deviation_bound(
    p: Sequence[float],
    region: Callable[[tuple[float, ...]], bool],
    n: int,
) -> tuple[float, float, bool]:
    """Check the exponential bound on the total weight of a block region.

    lhs is the summed weight dim_v * s_lam(p) over partitions whose
    normalized point lam/n lies in ``region``; rhs is
    (n+1)^{d(d+1)/2} * exp(-n * min D(lam/n || p)) with the minimum over the
    realized points in the region (discrete form). Returns (lhs, rhs, holds).
    """
    spectrum = as_spectrum(p)
    d = len(spectrum)
    members = [
        lam for lam in enumerate_partitions(n, d) if region(lam.normalized())
    ]
    if not members:
        return 0.0, 0.0, True
    lhs = sum(dim_v(lam) * schur_polynomial(lam, spectrum) for lam in members)
    min_div = min(relative_entropy(lam.normalized(), spectrum) for lam in members)
    rhs = (n + 1) ** (d * (d + 1) / 2) * math.exp(-n * min_div)
    return lhs, rhs, lhs <= rhs
