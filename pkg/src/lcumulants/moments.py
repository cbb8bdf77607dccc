"""Probability tables and moment coordinates for finite discrete vectors.

A vector ``X = (X_1..X_n)`` takes values in the box ``prod_i {0..r_i-1}``;
variable ``i`` maps level ``k`` to a real value via its value map (default
``k``).  Every coordinate system used here (probabilities, raw moments,
central moments, cumulant-like systems) is indexed by the same box: the
entry at exponent vector ``x`` holds the coordinate of the index multiset
that repeats variable ``i`` exactly ``x_i`` times.  With that aliasing the
box is simultaneously the state space and the moment index set, and all
changes of coordinates are exact polynomial maps over ``Fraction``.

Conventions for the degenerate indices: the moment at the zero exponent is
1, central moments are 1 at the zero exponent and 0 on first-order
indices, and cumulant-type systems store 0 at the zero exponent.

Everything is immutable and pure; a signed table summing to one is allowed
when ``algebraic=True`` since no transform here uses nonnegativity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .partition import SetPartition

Exponent = tuple[int, ...]

PROBABILITIES = "probabilities"
MOMENTS = "moments"
CENTRAL_MOMENTS = "central_moments"
CLASSICAL_CUMULANTS = "classical_cumulants"
LCUMULANTS = "lcumulants"

FLOAT_TOLERANCE = 1e-12


def within_tolerance(left, right, tol: float = FLOAT_TOLERANCE) -> bool:
    """Absolute-gap comparison for float-mode values; exact values hit 0."""
    return abs(float(left) - float(right)) <= tol


def _frac(value) -> Fraction:
    if isinstance(value, float):
        raise TypeError("floats are not allowed in exact mode; pass Fraction, int or 'p/q'")
    return Fraction(value)


@dataclass(frozen=True)
class StateSpace:
    """Arities plus per-variable value maps (level -> value)."""

    arities: tuple[int, ...]
    values: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def of(cls, arities: Sequence[int], values: Sequence[Sequence] | None = None) -> StateSpace:
        arities = tuple(int(r) for r in arities)
        if any(r < 2 for r in arities):
            raise ValueError("each variable needs at least two levels")
        if values is None:
            vmaps = tuple(tuple(Fraction(k) for k in range(r)) for r in arities)
        else:
            if len(values) != len(arities):
                raise ValueError("one value map per variable required")
            vmaps = tuple(
                tuple(_frac(v) for v in vm) for vm in values
            )
            for r, vm in zip(arities, vmaps):
                if len(vm) != r:
                    raise ValueError("value map length must equal the arity")
        return cls(arities, vmaps)

    @classmethod
    def binary(cls, n: int, values: Sequence[Sequence] | None = None) -> StateSpace:
        return cls.of([2] * n, values)

    @property
    def n(self) -> int:
        return len(self.arities)

    @property
    def size(self) -> int:
        out = 1
        for r in self.arities:
            out *= r
        return out

    def states(self) -> Iterator[Exponent]:
        return itertools.product(*[range(r) for r in self.arities])

    def value(self, variable: int, level: int) -> Fraction:
        """Value of 1-based variable at a level."""
        return self.values[variable - 1][level]

    def index_multiset(self, x: Exponent) -> tuple[int, ...]:
        """The sorted multiset of 1-based variable indices that x aliases."""
        out: list[int] = []
        for i, count in enumerate(x):
            out.extend([i + 1] * count)
        return tuple(out)

    def exponent_of(self, multiset: Iterable[int]) -> Exponent:
        x = [0] * self.n
        for i in multiset:
            x[i - 1] += 1
        for count, r in zip(x, self.arities):
            if count >= r:
                raise ValueError(f"multiplicity {count} outside the box of arities {self.arities}")
        return tuple(x)

    def has_default_values(self) -> bool:
        return all(vm == tuple(Fraction(k) for k in range(r)) for vm, r in zip(self.values, self.arities))


class DiscreteDistribution:
    """An exact table over the box; must sum to one.

    ``algebraic=True`` admits signed entries; the default probabilistic
    mode insists on nonnegativity.
    """

    __slots__ = ("space", "table", "algebraic")

    def __init__(self, space: StateSpace, table: Mapping[Exponent, Fraction], algebraic: bool = False):
        full: dict[Exponent, Fraction] = {}
        total = Fraction(0)
        for x in space.states():
            p = _frac(table.get(x, 0))
            if not algebraic and p < 0:
                raise ValueError(f"negative mass {p} at {x}; use algebraic=True for signed tables")
            full[x] = p
            total += p
        if total != 1:
            raise ValueError(f"table sums to {total}, not 1")
        extra = set(table) - set(full)
        if extra:
            raise ValueError(f"states outside the box: {sorted(extra)[:3]}")
        self.space = space
        self.table = full
        self.algebraic = algebraic

    def p(self, x: Exponent) -> Fraction:
        return self.table[x]

    @classmethod
    def from_function(cls, space: StateSpace, fn: Callable[[Exponent], Fraction], algebraic: bool = False) -> DiscreteDistribution:
        return cls(space, {x: fn(x) for x in space.states()}, algebraic=algebraic)

    @classmethod
    def point_mass(cls, space: StateSpace, x: Exponent) -> DiscreteDistribution:
        return cls(space, {x: Fraction(1)})

    @classmethod
    def uniform(cls, space: StateSpace) -> DiscreteDistribution:
        w = Fraction(1, space.size)
        return cls(space, {x: w for x in space.states()})

    @classmethod
    def product(cls, space: StateSpace, marginals: Sequence[Sequence[Fraction]]) -> DiscreteDistribution:
        table = {}
        for x in space.states():
            p = Fraction(1)
            for level, m in zip(x, marginals):
                p *= _frac(m[level])
            table[x] = p
        return cls(table=table, space=space)

    def expectation(self, fn: Callable[[Exponent], Fraction]) -> Fraction:
        return sum((p * fn(x) for x, p in self.table.items()), Fraction(0))

    def raw_moment(self, multiset: Iterable[int]) -> Fraction:
        """E of the product of values over an arbitrary index multiset.

        Repeats beyond the box exponent range are fine here: the value of
        each variable is just raised to the multiplicity.
        """
        counts: dict[int, int] = {}
        for i in multiset:
            counts[i] = counts.get(i, 0) + 1
        total = Fraction(0)
        for x, p in self.table.items():
            if p == 0:
                continue
            term = p
            for i, c in counts.items():
                term *= self.space.value(i, x[i - 1]) ** c
            total += term
        return total

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, DiscreteDistribution)
            and self.space == other.space
            and self.table == other.table
        )

    def to_json(self) -> dict:
        out: dict = {"arities": list(self.space.arities)}
        if not self.space.has_default_values():
            out["values"] = [[str(v) for v in vm] for vm in self.space.values]
        out["table"] = {
            ",".join(str(c) for c in x): str(p) for x, p in sorted(self.table.items())
        }
        if self.algebraic:
            out["algebraic"] = True
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> DiscreteDistribution:
        space = StateSpace.of(
            data["arities"],
            [[Fraction(v) for v in vm] for vm in data["values"]] if "values" in data else None,
        )
        table = {
            tuple(int(c) for c in key.split(",")): Fraction(value)
            for key, value in data["table"].items()
        }
        return cls(space, table, algebraic=bool(data.get("algebraic", False)))


@dataclass(frozen=True)
class CoordinateVector:
    """Exact coordinates over the box, tagged with their system.

    ``system`` is one of the module tags; cumulant-like systems carry the
    lattice family that produced them in ``family`` (tree families embed
    their topology there).
    """

    space: StateSpace
    system: str
    entries: Mapping[Exponent, Fraction]
    family: object | None = None

    def __post_init__(self):
        missing = [x for x in self.space.states() if x not in self.entries]
        if missing:
            raise ValueError(f"missing entries, e.g. {missing[0]}")

    def __getitem__(self, x: Exponent) -> Fraction:
        return self.entries[x]

    def of_multiset(self, multiset: Iterable[int]) -> Fraction:
        return self.entries[self.space.exponent_of(multiset)]

    def map_entries(self, fn: Callable[[Exponent, Fraction], Fraction]) -> dict[Exponent, Fraction]:
        return {x: fn(x, v) for x, v in self.entries.items()}

    def to_json(self) -> dict:
        out: dict = {"arities": list(self.space.arities), "system": self.system}
        if not self.space.has_default_values():
            out["values"] = [[str(v) for v in vm] for vm in self.space.values]
        if self.family is not None:
            out["family"] = str(self.family)
        out["table"] = {
            ",".join(str(c) for c in x): str(v) for x, v in sorted(self.entries.items())
        }
        return out

    @classmethod
    def from_json(cls, data: Mapping, family: object | None = None) -> CoordinateVector:
        space = StateSpace.of(
            data["arities"],
            [[Fraction(v) for v in vm] for vm in data["values"]] if "values" in data else None,
        )
        entries = {
            tuple(int(c) for c in key.split(",")): Fraction(value)
            for key, value in data["table"].items()
        }
        return cls(space, data["system"], entries, family=family)


def vector_from_distribution(dist: DiscreteDistribution) -> CoordinateVector:
    return CoordinateVector(dist.space, PROBABILITIES, dict(dist.table))


def distribution_from_vector(vec: CoordinateVector, algebraic: bool = False) -> DiscreteDistribution:
    if vec.system != PROBABILITIES:
        raise ValueError(f"expected probabilities, got {vec.system}")
    return DiscreteDistribution(vec.space, dict(vec.entries), algebraic=algebraic)


# -- raw moments -----------------------------------------------------------


def moments_from_distribution(dist: DiscreteDistribution) -> CoordinateVector:
    """Raw moments over the box: entry at x is E of prod values^x."""
    space = dist.space
    entries: dict[Exponent, Fraction] = {}
    for x in space.states():
        total = Fraction(0)
        for y, p in dist.table.items():
            if p == 0:
                continue
            term = p
            for i, e in enumerate(x):
                if e:
                    term *= space.values[i][y[i]] ** e
            total += term
        entries[x] = total
    return CoordinateVector(space, MOMENTS, entries)


def _invert(matrix: list[list[Fraction]]) -> list[list[Fraction]]:
    """Exact inverse by Gauss-Jordan elimination."""
    n = len(matrix)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular matrix: value maps must be injective per variable")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv_p = Fraction(1) / aug[col][col]
        aug[col] = [v * inv_p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def distribution_from_moments(mv: CoordinateVector, algebraic: bool = False) -> DiscreteDistribution:
    """Invert the moment map exactly; needs injective value maps."""
    if mv.system != MOMENTS:
        raise ValueError(f"expected moments, got {mv.system}")
    space = mv.space
    data = dict(mv.entries)
    for i, (r, vm) in enumerate(zip(space.arities, space.values)):
        if len(set(vm)) != r:
            raise ValueError(f"variable {i + 1} has a non-injective value map")
        vander = [[vm[level] ** k for level in range(r)] for k in range(r)]
        inv = _invert(vander)
        new: dict[Exponent, Fraction] = {}
        for x in space.states():
            total = Fraction(0)
            for level in range(r):
                coeff = inv[x[i]][level]
                if coeff:
                    key = x[:i] + (level,) + x[i + 1 :]
                    total += coeff * data[key]
            new[x] = total
        data = new
    return DiscreteDistribution(space, data, algebraic=algebraic)


# -- central moments -------------------------------------------------------


def central_moments(mv: CoordinateVector) -> CoordinateVector:
    """Central moments from raw moments by the subset expansion.

    For an index multiset A the value is the alternating sum over
    sub-multisets B of mu_B times the product of first moments over the
    dropped positions.  Grouping equal sub-multisets turns the sum over
    position subsets into one over componentwise-smaller exponents with
    binomial weights.
    """
    if mv.system != MOMENTS:
        raise ValueError(f"expected moments, got {mv.system}")
    space = mv.space
    mean = [mv.entries[_unit(space.n, i)] for i in range(space.n)]
    entries: dict[Exponent, Fraction] = {}
    for x in space.states():
        d = sum(x)
        if d == 0:
            entries[x] = Fraction(1)
            continue
        if d == 1:
            entries[x] = Fraction(0)
            continue
        total = Fraction(0)
        for y in itertools.product(*[range(e + 1) for e in x]):
            weight = Fraction((-1) ** (d - sum(y)))
            for xi, yi in zip(x, y):
                weight *= comb(xi, yi)
            term = weight * mv.entries[tuple(y)]
            for i, (xi, yi) in enumerate(zip(x, y)):
                if xi - yi:
                    term *= mean[i] ** (xi - yi)
            total += term
        entries[x] = total
    return CoordinateVector(space, CENTRAL_MOMENTS, entries)


def central_moments_direct(dist: DiscreteDistribution) -> CoordinateVector:
    """Expectation of centered products; the independent oracle."""
    space = dist.space
    mean = [dist.raw_moment([i]) for i in range(1, space.n + 1)]
    entries: dict[Exponent, Fraction] = {}
    for x in space.states():
        if sum(x) == 0:
            entries[x] = Fraction(1)
            continue
        total = Fraction(0)
        for y, p in dist.table.items():
            if p == 0:
                continue
            term = p
            for i, e in enumerate(x):
                if e:
                    term *= (space.values[i][y[i]] - mean[i]) ** e
            total += term
        entries[x] = total
    return CoordinateVector(space, CENTRAL_MOMENTS, entries)


def _unit(n: int, i: int) -> Exponent:
    return tuple(1 if j == i else 0 for j in range(n))


# -- marginals and conditioning ---------------------------------------------


def marginal(dist: DiscreteDistribution, variables: Sequence[int]) -> DiscreteDistribution:
    """Marginal over the given 1-based variables, in increasing order."""
    variables = sorted(set(variables))
    if not variables:
        raise ValueError("need at least one variable")
    space = dist.space
    sub = StateSpace(
        tuple(space.arities[i - 1] for i in variables),
        tuple(space.values[i - 1] for i in variables),
    )
    table: dict[Exponent, Fraction] = {}
    for x, p in dist.table.items():
        key = tuple(x[i - 1] for i in variables)
        table[key] = table.get(key, Fraction(0)) + p
    return DiscreteDistribution(sub, table, algebraic=dist.algebraic)


def conditional_moments(
    dist: DiscreteDistribution,
    multiset: Sequence[int],
    given: Sequence[int],
) -> dict[Exponent, Fraction | None]:
    """Conditional moment of an index multiset given the variables in C.

    Returns a map from each C-configuration to the conditional expectation
    of the product over the multiset; configurations with zero marginal
    mass map to None.
    """
    given = sorted(set(given))
    if set(multiset) & set(given):
        raise ValueError("the conditioned product and the conditioning set overlap")
    counts: dict[int, int] = {}
    for i in multiset:
        counts[i] = counts.get(i, 0) + 1
    space = dist.space
    mass: dict[Exponent, Fraction] = {}
    accum: dict[Exponent, Fraction] = {}
    for x, p in dist.table.items():
        key = tuple(x[i - 1] for i in given)
        mass[key] = mass.get(key, Fraction(0)) + p
        term = p
        for i, c in counts.items():
            term *= space.values[i - 1][x[i - 1]] ** c
        accum[key] = accum.get(key, Fraction(0)) + term
    return {key: (accum[key] / m if m != 0 else None) for key, m in mass.items()}


# -- affine value changes ----------------------------------------------------


def transform_values(
    mv: CoordinateVector,
    scale: Sequence | None = None,
    shift: Sequence | None = None,
) -> CoordinateVector:
    """Moments of the componentwise image scale*X + shift.

    Works by binomial expansion on the moment coordinates, not by touching
    any table, so it applies to algebraic points as well.
    """
    if mv.system != MOMENTS:
        raise ValueError(f"expected moments, got {mv.system}")
    space = mv.space
    lam = [
        _frac(scale[i]) if scale is not None else Fraction(1) for i in range(space.n)
    ]
    off = [
        _frac(shift[i]) if shift is not None else Fraction(0) for i in range(space.n)
    ]
    entries: dict[Exponent, Fraction] = {}
    for x in space.states():
        total = Fraction(0)
        for y in itertools.product(*[range(e + 1) for e in x]):
            coeff = Fraction(1)
            for xi, yi, l, a in zip(x, y, lam, off):
                coeff *= comb(xi, yi) * l**yi * a ** (xi - yi)
            if coeff:
                total += coeff * mv.entries[tuple(y)]
        entries[x] = total
    return CoordinateVector(space, MOMENTS, entries)


# -- independence ------------------------------------------------------------


def factorizes_over(mv: CoordinateVector, pi0: SetPartition) -> bool:
    """Whether every moment splits as the product over pi0's blocks.

    Position j of pi0 is variable j+1; this is the moment formulation of
    joint block independence.
    """
    if mv.system != MOMENTS:
        raise ValueError(f"expected moments, got {mv.system}")
    space = mv.space
    if pi0.size != space.n:
        raise ValueError("partition size must match the number of variables")
    for x in space.states():
        product = Fraction(1)
        for block in pi0.blocks:
            masked = tuple(x[i] if i in block else 0 for i in range(space.n))
            product *= mv.entries[masked]
        if mv.entries[x] != product:
            return False
    return True


def independence_test(mv: CoordinateVector, pi0: SetPartition) -> bool:
    return factorizes_over(mv, pi0)
