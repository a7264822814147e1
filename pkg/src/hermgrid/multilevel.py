"""Multilevel Smolyak operators: level allocation, nested sets, and work.

A level allocation assigns each multi-index a discretization level for the
underlying approximation family (for instance FEM meshes of growing
resolution).  The induced nested index sets drive telescoped interpolation
and quadrature sums whose cost is measured by an abstract work sequence.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyAllocation, ThresholdTooSmall
from .indexset import IndexSet, MultiIndex, build_threshold_set
from .smolyak import HermitePolynomial, interpolate, quadrature, zero_polynomial


@dataclass(frozen=True)
class WorkSequence:
    """Strictly increasing per-level cost measures with ``values[0] == 0``.

    ``growth_constant`` bounds the partial sums, the level count against
    the log of the cost, and the level-to-level growth; all three bounds
    are validated on the stored prefix.
    """

    values: tuple
    growth_constant: float = 2.0

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if len(vals) < 1 or vals[0] != 0:
            raise ValueError("work sequence must start at 0")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("work sequence must be strictly increasing")
        if any(v < 0 for v in vals):
            raise ValueError("work values must be nonnegative")
        kw = self.growth_constant
        for l in range(1, len(vals)):
            if sum(vals[: l + 1]) > kw * vals[l]:
                raise ValueError("partial-sum bound violated")
            if l > kw * (1.0 + math.log(vals[l])):
                raise ValueError("level-count bound violated")
            if vals[l] > kw * (1.0 + vals[l - 1]):
                raise ValueError("growth bound violated")
        object.__setattr__(self, "values", vals)

    @property
    def max_level(self) -> int:
        return len(self.values) - 1

    def cumulative(self, level: int) -> int:
        """Total cost of carrying one point through levels 1..level."""
        return sum(self.values[1 : level + 1])

    def floor_level(self, budget: float) -> int:
        """Largest level whose cost does not exceed ``budget``."""
        level = 0
        for l, v in enumerate(self.values):
            if v <= budget:
                level = l
        return level


def default_work_sequence(max_level: int, growth_constant: float = 2.0) -> WorkSequence:
    """Doubling cost model: 0, 2, 4, 8, ..., 2**max_level."""
    if max_level < 1:
        raise ValueError("max_level must be positive")
    return WorkSequence((0,) + tuple(2 ** l for l in range(1, max_level + 1)),
                        growth_constant)


@dataclass(frozen=True)
class LevelAllocation:
    """Map from multi-indices to discretization levels (zeros dropped)."""

    levels: dict
    work_sequence: WorkSequence

    def __post_init__(self):
        object.__setattr__(
            self, "levels", {nu: int(l) for nu, l in self.levels.items() if l > 0}
        )

    def level(self, nu: MultiIndex) -> int:
        return self.levels.get(nu, 0)

    @property
    def max_level(self) -> int:
        return max(self.levels.values(), default=0)

    def active(self) -> IndexSet:
        return IndexSet(self.levels.keys())

    def to_lines(self) -> str:
        entries = sorted(self.levels.items(), key=lambda kv: kv[0].sort_key())
        return "\n".join(f"{nu}\t{l}" for nu, l in entries) + "\n"

    @classmethod
    def from_lines(cls, text: str, work_sequence: WorkSequence) -> "LevelAllocation":
        levels = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            nu_part, _, level_part = line.partition("\t")
            levels[MultiIndex.parse(nu_part)] = int(level_part)
        return cls(levels, work_sequence)


def construct_levels(
    c_surrogate,
    d_surrogate,
    q1: float,
    alpha: float,
    eps: float,
    work_sequence: WorkSequence,
    d_max: int,
    cap: int = 10_000_000,
) -> LevelAllocation:
    """Allocate discretization levels over the threshold set of ``c_surrogate``.

    Every member nu of the threshold set receives the largest stored level
    whose cost stays below
    ``eps**(-(1/2 - q1/4)/alpha) * d_nu**(-1/(1+2 alpha)) * S**(1/(2 alpha))``
    with ``S`` the sum of ``d_mu**(-1/(1+2 alpha))`` over the set; indices
    outside the set stay at level 0.
    """
    if not 0.0 < q1 < 2.0:
        raise ValueError("q1 must lie in (0, 2)")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    selected = build_threshold_set(c_surrogate, eps, d_max, cap=cap)
    if len(selected) == 0:
        raise EmptyAllocation(f"threshold {eps} admits no multi-indices")
    exponent = -1.0 / (1.0 + 2.0 * alpha)
    d_values = {nu: float(d_surrogate(nu)) ** exponent for nu in selected}
    total = sum(d_values[nu] for nu in selected)
    prefactor = eps ** (-(0.5 - q1 / 4.0) / alpha) * total ** (1.0 / (2.0 * alpha))
    levels = {}
    for nu in selected:
        delta = prefactor * d_values[nu]
        levels[nu] = work_sequence.floor_level(delta)
    return LevelAllocation(levels, work_sequence)


def gamma_sets(allocation: LevelAllocation) -> list:
    """Nested downward closed sets of indices at or above each level."""
    out = []
    for j in range(1, allocation.max_level + 1):
        out.append(IndexSet(nu for nu, l in allocation.levels.items() if l >= j))
    return out


def _point_factor(nu: MultiIndex) -> int:
    out = 1
    for _, exp in nu.entries:
        out *= exp + 1
    return out


def work(allocation: LevelAllocation) -> int:
    """Total cost: per-index tensor point count times cumulative level cost."""
    sw = allocation.work_sequence
    return sum(
        _point_factor(nu) * sw.cumulative(l) for nu, l in allocation.levels.items()
    )


def work_level_major(allocation: LevelAllocation) -> int:
    """Same total accumulated level by level; must agree with `work` exactly."""
    sw = allocation.work_sequence
    total = 0
    for j, gamma in enumerate(gamma_sets(allocation), start=1):
        total += sw.values[j] * sum(_point_factor(nu) for nu in gamma)
    return total


def ml_interpolate(allocation: LevelAllocation, u_levels) -> HermitePolynomial:
    """Telescoped multilevel interpolant over the allocation's nested sets.

    ``u_levels[j-1]`` is the level-j approximation of the target map; the
    term for the empty set above the top level is the zero operator.
    """
    top = allocation.max_level
    if top == 0:
        return zero_polynomial()
    if len(u_levels) < top:
        raise ValueError(f"need {top} level approximations, got {len(u_levels)}")
    gammas = gamma_sets(allocation)
    result = None
    for j in range(1, top + 1):
        term = interpolate(gammas[j - 1], u_levels[j - 1])
        if j < top and len(gammas[j]) > 0:
            term = term.minus(interpolate(gammas[j], u_levels[j - 1]))
        result = term if result is None else result.plus(term)
    return result


def ml_quadrature(allocation: LevelAllocation, u_levels) -> np.ndarray:
    """Telescoped multilevel quadrature; matches the constant coefficient of
    `ml_interpolate` on the same inputs."""
    top = allocation.max_level
    if top == 0:
        return np.zeros(1)
    if len(u_levels) < top:
        raise ValueError(f"need {top} level approximations, got {len(u_levels)}")
    gammas = gamma_sets(allocation)
    result = None
    for j in range(1, top + 1):
        term = quadrature(gammas[j - 1], u_levels[j - 1])
        if j < top and len(gammas[j]) > 0:
            term = term - quadrature(gammas[j], u_levels[j - 1])
        result = term if result is None else result + term
    return result


# -- dyadic level-times-index threshold sets -------------------------------

def _theta_exponent(q1: float, q2: float, alpha: float) -> float:
    return 1.0 / q1 + (1.0 / q1 - 1.0 / q2) / (2.0 * alpha)


def build_level_index_set(
    xi: float,
    sigma1,
    sigma2,
    q1: float,
    q2: float,
    alpha: float,
    d_max: int,
    cap: int = 10_000_000,
    even_only: bool = False,
) -> tuple:
    """Pairs (k, nu) of dyadic spatial levels and multi-indices below ``xi``.

    For slow spatial convergence (``alpha <= 1/q2 - 1/2``) the admission
    test is ``2**k * sigma2(nu)**q2 <= xi``; otherwise a pair is admitted
    when ``sigma1(nu)**q1 <= xi`` and ``2**((alpha+1/2) k) * sigma2(nu)``
    stays below ``xi**theta`` with
    ``theta = 1/q1 + (1/q1 - 1/q2)/(2 alpha)``.
    """
    if not (0.0 < q1 <= q2):
        raise ValueError("need 0 < q1 <= q2")
    if q1 >= 2.0:
        raise ValueError("q1 must be below 2")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if xi <= 0:
        raise ValueError("xi must be positive")

    def keep(nu):
        return not even_only or all(e % 2 == 0 for _, e in nu.entries)

    pairs = []
    if alpha <= 1.0 / q2 - 0.5:
        k = 0
        while True:
            eps_k = 2.0 ** k / xi
            level_set = build_threshold_set(
                lambda nu: sigma2(nu) ** q2, eps_k, d_max, cap=cap
            )
            if len(level_set) == 0:
                break
            pairs.extend((k, nu) for nu in level_set if keep(nu))
            k += 1
    else:
        theta = _theta_exponent(q1, q2, alpha)
        base = build_threshold_set(
            lambda nu: sigma1(nu) ** q1, 1.0 / xi, d_max, cap=cap
        )
        bound = xi ** theta
        k = 0
        while True:
            factor = 2.0 ** ((alpha + 0.5) * k)
            admitted = [
                nu for nu in base if keep(nu) and factor * sigma2(nu) <= bound
            ]
            if not any(factor * sigma2(nu) <= bound for nu in base):
                break
            pairs.extend((k, nu) for nu in admitted)
            k += 1
    if len(pairs) > cap:
        raise ThresholdTooSmall(f"level-index set exceeded cap of {cap} pairs")
    pairs.sort(key=lambda kn: (kn[0], kn[1].sort_key()))
    return tuple(pairs)


def build_level_index_set_even(
    xi, sigma1, sigma2, q1, q2, alpha, d_max, cap=10_000_000
) -> tuple:
    """`build_level_index_set` restricted to all-even multi-indices."""
    return build_level_index_set(
        xi, sigma1, sigma2, q1, q2, alpha, d_max, cap=cap, even_only=True
    )
