"""Multi-indices, product weight families, and threshold index sets.

A multi-index is a finitely supported sequence of nonnegative integer
exponents; it labels one tensor Hermite polynomial and one tensor grid.
Weight families assign each multi-index a computable surrogate size, and
`build_threshold_set` enumerates all indices whose surrogate reciprocal
stays above a threshold, walking the lattice in linear time in the output
size.
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import comb, factorial, sqrt

import numpy as np

from .errors import ThresholdTooSmall


@dataclass(frozen=True)
class MultiIndex:
    """Finitely supported exponent sequence, stored sparsely.

    ``entries`` is a tuple of (dimension, exponent) pairs with strictly
    increasing 0-based dimensions and positive exponents, so equality and
    hashing are structural.
    """

    entries: tuple = ()

    def __post_init__(self):
        prev = -1
        for dim, exp in self.entries:
            if dim <= prev:
                raise ValueError("dimensions must be strictly increasing")
            if exp <= 0 or int(exp) != exp:
                raise ValueError("stored exponents must be positive integers")
            prev = dim

    @classmethod
    def from_dict(cls, mapping) -> "MultiIndex":
        pairs = tuple(sorted((int(d), int(e)) for d, e in mapping.items() if e != 0))
        return cls(pairs)

    @classmethod
    def from_exponents(cls, exponents) -> "MultiIndex":
        """Build from a dense exponent list, dropping zeros."""
        return cls(tuple((j, int(e)) for j, e in enumerate(exponents) if e != 0))

    @classmethod
    def unit(cls, dim: int, exp: int = 1) -> "MultiIndex":
        return cls(((dim, exp),)) if exp else cls()

    @property
    def order(self) -> int:
        """Total degree (sum of exponents)."""
        return sum(e for _, e in self.entries)

    @property
    def support(self) -> tuple:
        return tuple(d for d, _ in self.entries)

    def exponent(self, dim: int) -> int:
        for d, e in self.entries:
            if d == dim:
                return e
        return 0

    def max_dim(self) -> int:
        """Largest active dimension plus one (0 for the empty index)."""
        return self.entries[-1][0] + 1 if self.entries else 0

    def incremented(self, dim: int) -> "MultiIndex":
        return MultiIndex.from_dict({**dict(self.entries), dim: self.exponent(dim) + 1})

    def decremented(self, dim: int) -> "MultiIndex":
        e = self.exponent(dim)
        if e == 0:
            raise ValueError(f"dimension {dim} not in support")
        return MultiIndex.from_dict({**dict(self.entries), dim: e - 1})

    def dominates(self, other: "MultiIndex") -> bool:
        """Componentwise ``other <= self``."""
        mine = dict(self.entries)
        return all(mine.get(d, 0) >= e for d, e in other.entries)

    def dense(self, length: int) -> np.ndarray:
        out = np.zeros(length, dtype=np.int64)
        for d, e in self.entries:
            if d < length:
                out[d] = e
        return out

    def sort_key(self):
        return (self.order, self.entries)

    def __str__(self) -> str:
        if not self.entries:
            return "-"
        return " ".join(f"{d}:{e}" for d, e in self.entries)

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        text = text.strip()
        if text == "-" or not text:
            return cls()
        pairs = []
        for token in text.split():
            dim, _, exp = token.partition(":")
            pairs.append((int(dim), int(exp)))
        return cls(tuple(sorted(pairs)))


EMPTY_INDEX = MultiIndex()


class IndexSet:
    """Finite set of multi-indices with a cached downward-closure flag."""

    def __init__(self, members):
        self._members = frozenset(members)

    @cached_property
    def sorted_members(self) -> tuple:
        return tuple(sorted(self._members, key=MultiIndex.sort_key))

    @cached_property
    def downward_closed(self) -> bool:
        return is_downward_closed(self)

    @property
    def members(self) -> frozenset:
        return self._members

    def dimension(self) -> int:
        """Number of coordinates needed to address every member."""
        return max((nu.max_dim() for nu in self._members), default=0)

    def __iter__(self):
        return iter(self.sorted_members)

    def __len__(self):
        return len(self._members)

    def __contains__(self, nu):
        return nu in self._members

    def __eq__(self, other):
        if isinstance(other, IndexSet):
            return self._members == other._members
        return NotImplemented

    def __hash__(self):
        return hash(self._members)

    def __repr__(self):
        return f"IndexSet({len(self._members)} members)"

    def union(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(self._members | other._members)

    def to_lines(self) -> str:
        """One multi-index per line as space-separated dim:exp pairs."""
        return "\n".join(str(nu) for nu in self.sorted_members) + "\n"

    @classmethod
    def from_lines(cls, text: str) -> "IndexSet":
        members = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            members.append(MultiIndex.parse(line))
        return cls(members)


def is_downward_closed(index_set) -> bool:
    """True iff every member keeps all its single-step predecessors inside."""
    members = set(index_set)
    for nu in members:
        for dim in nu.support:
            if nu.decremented(dim) not in members:
                return False
    return True


def drop_unit_exponents(index_set: IndexSet) -> IndexSet:
    """Members with no exponent equal to 1."""
    return IndexSet(
        nu for nu in index_set if all(e != 1 for _, e in nu.entries)
    )


# -- weight families ------------------------------------------------------

def degree_weight(nu: MultiIndex, tau: float, lam: float = 1.0) -> float:
    """Product weight ``prod_j (1 + lam * nu_j)**tau`` (1 on the empty index)."""
    out = 1.0
    for _, e in nu.entries:
        out *= (1.0 + lam * e) ** tau
    return out


def binomial_weight(nu: MultiIndex, r: int, rho) -> float:
    """Product over dims of ``sum_{l=0..r} C(nu_j, l) rho_j**(2l)``.

    Factors for dimensions outside the support are 1; binomials vanish for
    ``l > nu_j``.
    """
    rho = np.asarray(rho, dtype=np.float64)
    out = 1.0
    for dim, e in nu.entries:
        if dim >= rho.size:
            raise ValueError(f"dimension {dim} outside weight family truncation")
        out *= sum(comb(e, l) * rho[dim] ** (2 * l) for l in range(r + 1))
    return out


@dataclass(frozen=True)
class WeightFamily:
    """Parameter bundle producing the computable threshold surrogates.

    ``b`` holds the positive decay weights of the representation system
    (nonincreasing, so earlier dimensions matter more), ``p`` the
    summability exponent in (0, 1), and ``k`` selects the interpolation
    (1) or quadrature (2) variant.  The derived ``rho`` sequence is
    ``b_j**(p-1) * xi / (4 sqrt(r!) ||b||_p)``.
    """

    b: np.ndarray
    p: float
    xi: float
    r: int
    tau: float
    k: int
    K: float
    rho: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        if b.ndim != 1 or b.size == 0 or np.any(b <= 0):
            raise ValueError("b must be a nonempty positive vector")
        if np.any(np.diff(b) > 0):
            raise ValueError("b must be nonincreasing (anisotropy ordering)")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.xi <= 0 or self.K <= 0 or self.tau < 0:
            raise ValueError("xi, K must be positive and tau nonnegative")
        if self.k not in (1, 2):
            raise ValueError("k must be 1 (interpolation) or 2 (quadrature)")
        if not self.r > max(self.tau, self.k):
            raise ValueError("r must exceed max(tau, k)")
        norm_p = float(np.sum(b ** self.p)) ** (1.0 / self.p)
        rho = b ** (self.p - 1.0) * self.xi / (4.0 * sqrt(factorial(self.r)) * norm_p)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "rho", rho)
        self.b.setflags(write=False)
        self.rho.setflags(write=False)

    @property
    def d_max(self) -> int:
        return self.b.size

    def beta(self, nu: MultiIndex) -> float:
        return binomial_weight(nu, self.r, self.rho)


def surrogate_weight(family: WeightFamily, nu: MultiIndex) -> float:
    """Computable product surrogate ``prod_j max(1, K rho_j)**(2k) nu_j**(r-tau)``.

    Monotone increasing in the exponents and anisotropy-ordered whenever
    ``rho`` is nondecreasing (guaranteed by nonincreasing ``b``).
    """
    out = 1.0
    for dim, e in nu.entries:
        if dim >= family.rho.size:
            raise ValueError(f"dimension {dim} outside weight family truncation")
        out *= max(1.0, family.K * family.rho[dim]) ** (2 * family.k) * float(e) ** (
            family.r - family.tau
        )
    return out


# -- threshold set construction -------------------------------------------

def build_threshold_set(
    surrogate,
    eps: float,
    d_max: int,
    mode: str = "grows",
    cap: int = 10_000_000,
    stats: dict = None,
) -> IndexSet:
    """All multi-indices whose decreasing surrogate stays at or above ``eps``.

    ``surrogate`` maps a MultiIndex to a positive real.  In ``grows`` mode
    it must be monotone increasing with anisotropy ordering (activating an
    earlier dimension never costs more), and the walk thresholds the
    reciprocal: the result is exactly ``{nu : 1/surrogate(nu) >= eps}``.
    In ``decays`` mode the callable is the decreasing null-sequence itself
    and the result is ``{nu : surrogate(nu) >= eps}``.

    The lattice walk evaluates its acceptance test at most ``4 |result| + 1``
    times; pass a ``stats`` dict to read back the counter.

    Raises ``ThresholdTooSmall`` once the result exceeds ``cap`` members.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if mode not in ("grows", "decays"):
        raise ValueError(f"unknown mode {mode!r}")

    memo = {}

    def accept(dense_nu) -> bool:
        key = tuple(dense_nu)
        hit = memo.get(key)
        if hit is None:
            value = surrogate(MultiIndex.from_exponents(dense_nu))
            hit = (1.0 / value if mode == "grows" else value) >= eps
            memo[key] = hit
        return hit

    tests = 0
    nu = [0] * d_max
    tests += 1
    if not accept(nu):
        if stats is not None:
            stats["tests"] = tests
        return IndexSet([])
    members = [MultiIndex()]

    while True:
        d = 0
        while True:
            tests += 1
            if d < d_max:
                nu[d] += 1
                ok = accept(nu)
                nu[d] -= 1
                if ok:
                    break
            # candidate rejected (or beyond the truncation dimension)
            if d < d_max and nu[d] != 0:
                nu[d] = 0
                d += 1
            else:
                support = [j for j in range(d_max) if nu[j] != 0]
                if support:
                    d = support[0]
                else:
                    if stats is not None:
                        stats["tests"] = tests
                    return IndexSet(members)
        nu[d] += 1
        members.append(MultiIndex.from_exponents(nu))
        if len(members) > cap:
            raise ThresholdTooSmall(
                f"threshold set exceeded cap of {cap} members (eps={eps})"
            )
