"""Shared test helpers: oracles and randomized structures."""

import itertools

import numpy as np

from hermgrid.indexset import IndexSet, MultiIndex


def gaussian_moment(degree: int) -> float:
    """Exact standard-normal moment: 0 for odd degree, (d-1)!! for even."""
    if degree % 2:
        return 0.0
    out = 1
    k = degree - 1
    while k > 1:
        out *= k
        k -= 2
    return float(out)


def random_downward_closed(rng, dims: int, max_size: int) -> IndexSet:
    """Grow a random downward closed set by admissible completions."""
    members = {MultiIndex()}
    target = rng.integers(1, max_size + 1)
    while len(members) < target:
        nu = list(members)[rng.integers(0, len(members))]
        dim = int(rng.integers(0, dims))
        candidate = nu.incremented(dim)
        admissible = all(
            candidate.decremented(d) in members for d in candidate.support
        )
        if admissible:
            members.add(candidate)
    return IndexSet(members)


def random_product_surrogate(rng, dims: int):
    """Monotone, anisotropy-ordered product weight with growth >= 1.5 per step.

    Returns (callable, activation, growth) where
    ``c(nu) = prod_j activation_j**(nu_j > 0) * growth_j**nu_j`` and both
    parameter vectors are nondecreasing in the dimension.
    """
    growth = np.sort(rng.uniform(1.5, 3.5, dims))
    activation = np.sort(rng.uniform(1.0, 4.0, dims))

    def surrogate(nu):
        out = 1.0
        for dim, exp in nu.entries:
            out *= activation[dim] * growth[dim] ** exp
        return out

    return surrogate, activation, growth


def brute_force_threshold(surrogate, eps: float, dims: int, box: int) -> set:
    """All indices in the box whose surrogate reciprocal clears the threshold."""
    out = set()
    for combo in itertools.product(range(box + 1), repeat=dims):
        nu = MultiIndex.from_exponents(combo)
        if 1.0 / surrogate(nu) >= eps:
            out.add(nu)
    return out


def pad(y, length: int) -> np.ndarray:
    """Zero-extend a parameter vector (inactive grid coordinates are 0)."""
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if y.size >= length:
        return y
    out = np.zeros(length)
    out[: y.size] = y
    return out


def monomial_map(nu: MultiIndex):
    """The monomial ``y**nu`` as a scalar parametric map."""
    needed = nu.max_dim()

    def fn(y):
        y = pad(y, needed)
        out = 1.0
        for dim, exp in nu.entries:
            out *= float(y[dim]) ** exp
        return [out]

    return fn


def tensor_moment(nu: MultiIndex) -> float:
    """Gaussian product moment of the monomial ``y**nu``."""
    out = 1.0
    for _, exp in nu.entries:
        out *= gaussian_moment(exp)
    return out
