"""Moment/cumulant transforms over a chosen partition-lattice family.

The forward map sends raw moments to lattice cumulants: the coordinate of
an index multiset A is the Moebius-to-top weighted sum, over the family
lattice on A's positions, of products of moments over blocks.  Choosing
the full lattice gives classical cumulants, interval partitions give
Boolean cumulants, non-crossing partitions give free cumulants, one
cluster partitions give central moments, and tree partitions give the
coordinates adapted to latent tree models.

The inverse is Moebius inversion.  When the family's intervals factor
blockwise (verified, never assumed), the inverse is the sum of products of
cumulants over the lattice; otherwise a triangular solve by index size is
used.  Both paths are exact.

Also here: the classical-cumulant bridge, cumulant tensors with their
multilinear transformation law, shift (semi-)invariance, detection of
independence structure from vanishing coordinates, the conditional
cumulant (Brillinger) formula, and the conditional-independence collapse.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .lattice import (
    FULL,
    INTERVAL,
    TREE,
    Family,
    PartitionLattice,
    build,
    check_condition,
)
from .moments import (
    CLASSICAL_CUMULANTS,
    LCUMULANTS,
    MOMENTS,
    CoordinateVector,
    DiscreteDistribution,
    StateSpace,
    distribution_from_moments,
)
from .partition import DEFAULT_CAPACITY, SetPartition, all_partitions, refines
from .topology import is_caterpillar

MomentFunction = Callable[[Sequence[int]], Fraction]


class UnsupportedFamilyError(ValueError):
    """The requested operation is not defined for this lattice family."""


class LCumulantSystem:
    """Lattice cache for one family over one state space.

    Size-indexed families share one lattice per index size; tree families
    key their lattices by the leaf subset.  Cache fills are idempotent, so
    concurrent readers may duplicate work but never see torn values.
    """

    def __init__(self, fam: Family, space: StateSpace, capacity: int | None = DEFAULT_CAPACITY):
        if fam.kind == TREE:
            if any(r != 2 for r in space.arities):
                raise UnsupportedFamilyError("tree families require a binary state space")
            assert fam.tree is not None
            if set(range(1, space.n + 1)) - set(fam.tree.leaves):
                raise UnsupportedFamilyError("tree leaves must cover the variables")
        self.family = fam
        self.space = space
        self.capacity = capacity
        self._cache: dict[tuple, PartitionLattice] = {}

    def lattice(self, multiset: Sequence[int]) -> PartitionLattice:
        """The family lattice on the positions of an index multiset."""
        multiset = tuple(multiset)
        if self.family.size_indexed:
            key: tuple = (len(multiset),)
            ground: int | tuple[int, ...] = len(multiset)
        else:
            support = tuple(sorted(set(multiset)))
            if len(support) != len(multiset):
                raise UnsupportedFamilyError("tree lattices are defined for plain index sets only")
            key = support
            ground = support
        found = self._cache.get(key)
        if found is None:
            found = build(self.family, ground, capacity=self.capacity)
            self._cache[key] = found
        return found


def _moment_of_blocks(
    values: CoordinateVector, multiset: tuple[int, ...], pi: SetPartition
) -> Fraction:
    out = Fraction(1)
    for block in pi.blocks:
        out *= values.of_multiset(multiset[j] for j in block)
    return out


def to_lcumulants(
    mv: CoordinateVector,
    fam: Family,
    capacity: int | None = DEFAULT_CAPACITY,
    system: str = LCUMULANTS,
) -> CoordinateVector:
    """Forward transform: raw moments to the family's cumulants."""
    if mv.system != MOMENTS:
        raise ValueError(f"expected moments, got {mv.system}")
    sys_ = LCumulantSystem(fam, mv.space, capacity)
    entries: dict[tuple[int, ...], Fraction] = {}
    for x in mv.space.states():
        multiset = mv.space.index_multiset(x)
        if not multiset:
            entries[x] = Fraction(0)
            continue
        lat = sys_.lattice(multiset)
        total = Fraction(0)
        for pi in lat.elements:
            total += lat.mobius_to_top(pi) * _moment_of_blocks(mv, multiset, pi)
        entries[x] = total
    return CoordinateVector(mv.space, system, entries, family=fam)


def classical_cumulants(mv: CoordinateVector, capacity: int | None = DEFAULT_CAPACITY) -> CoordinateVector:
    return to_lcumulants(mv, Family(FULL), capacity, system=CLASSICAL_CUMULANTS)


_c0_verified: dict[tuple, int] = {}


def _product_form_applies(fam: Family, max_size: int) -> bool:
    """Machine-verify the blockwise interval factorisation up to a size.

    Results are cached per family; a verification at size s covers all
    smaller sizes.  Sizes beyond the exhaustive-check limit report False,
    which routes the inverse through the triangular solve.
    """
    key = (fam.kind, fam.tree)
    verified = _c0_verified.get(key, 0)
    if verified >= max_size:
        return True
    report = check_condition(fam, "C0", max_size)
    if report.holds is None:
        return False
    if report.holds:
        _c0_verified[key] = max_size
        return True
    return False


def from_lcumulants(
    lv: CoordinateVector,
    fam: Family | None = None,
    capacity: int | None = DEFAULT_CAPACITY,
) -> CoordinateVector:
    """Inverse transform: the family's cumulants back to raw moments."""
    if lv.system not in (LCUMULANTS, CLASSICAL_CUMULANTS):
        raise ValueError(f"expected a cumulant system, got {lv.system}")
    fam = fam if fam is not None else lv.family  # type: ignore[assignment]
    if not isinstance(fam, Family):
        raise ValueError("the cumulant vector does not carry its family; pass one")
    sys_ = LCumulantSystem(fam, lv.space, capacity)
    max_size = sum(r - 1 for r in lv.space.arities)
    if _product_form_applies(fam, min(max_size, 6)) and max_size <= 6:
        return _from_lcumulants_product(lv, sys_)
    return _from_lcumulants_triangular(lv, sys_)


def _from_lcumulants_product(lv: CoordinateVector, sys_: LCumulantSystem) -> CoordinateVector:
    entries: dict[tuple[int, ...], Fraction] = {}
    for x in lv.space.states():
        multiset = lv.space.index_multiset(x)
        if not multiset:
            entries[x] = Fraction(1)
            continue
        lat = sys_.lattice(multiset)
        total = Fraction(0)
        for pi in lat.elements:
            total += _moment_of_blocks(lv, multiset, pi)
        entries[x] = total
    return CoordinateVector(lv.space, MOMENTS, entries)


def _from_lcumulants_triangular(lv: CoordinateVector, sys_: LCumulantSystem) -> CoordinateVector:
    """Solve for moments by increasing index size.

    The top term of the forward sum is the moment itself (Moebius value 1),
    and every other term multiplies moments of strictly smaller indices,
    so the system is triangular in the size filtration.
    """
    space = lv.space
    entries: dict[tuple[int, ...], Fraction] = {}

    def lookup(multiset: Iterable[int]) -> Fraction:
        return entries[space.exponent_of(multiset)]

    for x in sorted(space.states(), key=lambda s: (sum(s), s)):
        multiset = space.index_multiset(x)
        if not multiset:
            entries[x] = Fraction(1)
            continue
        lat = sys_.lattice(multiset)
        lower = Fraction(0)
        for pi in lat.elements:
            if pi.num_blocks == 1:
                continue
            term = Fraction(lat.mobius_to_top(pi))
            for block in pi.blocks:
                term *= lookup(multiset[j] for j in block)
            lower += term
        entries[x] = lv.entries[x] - lower
    return CoordinateVector(space, MOMENTS, entries)


def l_from_classical(
    kv: CoordinateVector,
    fam: Family,
    capacity: int | None = DEFAULT_CAPACITY,
) -> CoordinateVector:
    """Family cumulants as sums of products of classical cumulants.

    For each index, the partitions that see no family element between
    themselves and the top contribute the product of their blockwise
    classical cumulants.  The full family therefore returns its input.
    """
    if kv.system != CLASSICAL_CUMULANTS:
        raise ValueError(f"expected classical cumulants, got {kv.system}")
    sys_ = LCumulantSystem(fam, kv.space, capacity)
    entries: dict[tuple[int, ...], Fraction] = {}
    for x in kv.space.states():
        multiset = kv.space.index_multiset(x)
        if not multiset:
            entries[x] = Fraction(0)
            continue
        lat = sys_.lattice(multiset)
        total = Fraction(0)
        for pi in all_partitions(len(multiset), capacity=None):
            upper = [nu for nu in lat.elements if refines(pi, nu)]
            if len(upper) == 1:  # only the top block survives above pi
                total += _moment_of_blocks(kv, multiset, pi)
        entries[x] = total
    return CoordinateVector(kv.space, LCUMULANTS, entries, family=fam)


# -- cumulant tensors ---------------------------------------------------------


@dataclass(frozen=True)
class CumulantTensor:
    """Dense order-d tensor of cumulants over 1-based variable tuples."""

    order: int
    n: int
    entries: Mapping[tuple[int, ...], Fraction]

    def __getitem__(self, idx: tuple[int, ...]) -> Fraction:
        return self.entries[idx]


def _moment_function(source, n: int | None = None) -> tuple[MomentFunction, int]:
    if isinstance(source, DiscreteDistribution):
        return source.raw_moment, source.space.n
    if isinstance(source, CoordinateVector):
        if source.system != MOMENTS:
            raise ValueError(f"expected moments, got {source.system}")
        dist = distribution_from_moments(source, algebraic=True)
        return dist.raw_moment, source.space.n
    if callable(source):
        if n is None:
            raise ValueError("a bare moment function needs the variable count")
        return source, n
    raise TypeError(f"cannot read moments from {type(source).__name__}")


def cumulant_tensor(
    source,
    fam: Family,
    order: int,
    n: int | None = None,
    capacity: int | None = DEFAULT_CAPACITY,
) -> CumulantTensor:
    """Order-d tensor whose entry at (i1..id) sums over the size-d lattice.

    Index tuples may repeat and permute variables, so the moments of
    arbitrary powers are taken from the source distribution (or moment
    function) rather than from box-aliased coordinates.  Tree families are
    not size-indexed and are rejected.
    """
    if not fam.size_indexed:
        raise UnsupportedFamilyError(
            "cumulant tensors need one lattice per order; tree families are tied to leaf sets"
        )
    moment_fn, n = _moment_function(source, n)
    lat = build(fam, order, capacity=capacity)
    entries: dict[tuple[int, ...], Fraction] = {}
    weights = [(pi, lat.mobius_to_top(pi)) for pi in lat.elements]
    for idx in itertools.product(range(1, n + 1), repeat=order):
        total = Fraction(0)
        for pi, weight in weights:
            term = Fraction(weight)
            for block in pi.blocks:
                term *= moment_fn([idx[j] for j in block])
            total += term
        entries[idx] = total
    return CumulantTensor(order, n, entries)


def multilinear_action(Q: Sequence[Sequence], tensor: CumulantTensor) -> CumulantTensor:
    """Contract each tensor slot with the rows of Q."""
    rows = [tuple(Fraction(v) for v in row) for row in Q]
    m = len(rows)
    if any(len(row) != tensor.n for row in rows):
        raise ValueError("matrix width must match the tensor dimension")
    entries: dict[tuple[int, ...], Fraction] = {}
    for idx in itertools.product(range(1, m + 1), repeat=tensor.order):
        total = Fraction(0)
        for js in itertools.product(range(1, tensor.n + 1), repeat=tensor.order):
            coeff = Fraction(1)
            for i, j in zip(idx, js):
                coeff *= rows[i - 1][j - 1]
                if coeff == 0:
                    break
            if coeff:
                total += coeff * tensor.entries[js]
        entries[idx] = total
    return CumulantTensor(tensor.order, m, entries)


def linear_image_moments(Q: Sequence[Sequence], source, n: int | None = None) -> MomentFunction:
    """Moment function of the linear image QX by multilinear expansion."""
    rows = [tuple(Fraction(v) for v in row) for row in Q]
    moment_fn, n = _moment_function(source, n)
    if any(len(row) != n for row in rows):
        raise ValueError("matrix width must match the variable count")

    def image_moment(multiset: Sequence[int]) -> Fraction:
        idx = tuple(multiset)
        total = Fraction(0)
        for js in itertools.product(range(1, n + 1), repeat=len(idx)):
            coeff = Fraction(1)
            for i, j in zip(idx, js):
                coeff *= rows[i - 1][j - 1]
                if coeff == 0:
                    break
            if coeff:
                total += coeff * moment_fn(js)
        return total

    return image_moment


# -- shift invariance ---------------------------------------------------------


@dataclass
class ShiftReport:
    family: Family
    shift: tuple[Fraction, ...]
    first_order_ok: bool
    invariant: bool
    mismatches: list[tuple[tuple[int, ...], Fraction, Fraction]]


def shift_invariance_check(
    mv: CoordinateVector,
    fam: Family,
    shift: Sequence,
    capacity: int | None = DEFAULT_CAPACITY,
) -> ShiftReport:
    """Compare the family cumulants of X and X + shift.

    Families containing every single-element split leave all coordinates
    of order two and higher unchanged; the interval family does not, and
    the report then carries the violating indices.
    """
    from .moments import transform_values

    shift_f = tuple(Fraction(a) for a in shift)
    before = to_lcumulants(mv, fam, capacity)
    after = to_lcumulants(transform_values(mv, shift=shift_f), fam, capacity)
    first_ok = True
    mismatches = []
    for x in mv.space.states():
        d = sum(x)
        if d == 1:
            i = x.index(1)
            if after.entries[x] != before.entries[x] + shift_f[i]:
                first_ok = False
        elif d >= 2 and after.entries[x] != before.entries[x]:
            mismatches.append((x, before.entries[x], after.entries[x]))
    return ShiftReport(fam, shift_f, first_ok, not mismatches, mismatches)


# -- independence structure ---------------------------------------------------


def vanishes_outside(lv: CoordinateVector, pi0: SetPartition) -> bool:
    """True iff every coordinate whose support leaves a block of pi0 is 0."""
    n = lv.space.n
    if pi0.size != n:
        raise ValueError("partition size must match the number of variables")
    for x, value in lv.entries.items():
        support = [i for i, e in enumerate(x) if e]
        if len(support) < 1:
            continue
        if any(pi0.rgs[i] != pi0.rgs[support[0]] for i in support[1:]):
            if value != 0:
                return False
    return True


def detect_independence_structure(
    lv: CoordinateVector,
    fam: Family | None = None,
    capacity: int | None = DEFAULT_CAPACITY,
) -> SetPartition:
    """Finest family partition certified by vanishing cumulants.

    Certification is monotone under coarsening and the certified set is
    closed under meets, so scanning from fine to coarse returns the unique
    finest certificate; the top means no structure was detected.
    """
    if lv.system not in (LCUMULANTS, CLASSICAL_CUMULANTS):
        raise ValueError(f"expected a cumulant system, got {lv.system}")
    fam = fam if fam is not None else lv.family  # type: ignore[assignment]
    if not isinstance(fam, Family):
        raise ValueError("the cumulant vector does not carry its family; pass one")
    lat = LCumulantSystem(fam, lv.space, capacity).lattice(tuple(range(1, lv.space.n + 1)))
    for pi0 in lat.elements:  # enumeration order is finest-first
        if vanishes_outside(lv, pi0):
            return pi0
    return lat.top


# -- conditional cumulants ----------------------------------------------------

_BRILLINGER_FAMILIES = "the full, interval, and caterpillar-tree families"


def _brillinger_supported(fam: Family) -> bool:
    if fam.kind in (FULL, INTERVAL):
        return True
    if fam.kind == TREE and fam.tree is not None and is_caterpillar(fam.tree):
        return True
    return False


def _y_table(y_dist) -> list[tuple[object, Fraction]]:
    if isinstance(y_dist, DiscreteDistribution):
        return [(x, p) for x, p in sorted(y_dist.table.items())]
    return [(y, Fraction(p)) for y, p in y_dist.items()]


def brillinger(
    y_dist,
    conditional_cumulants: Mapping,
    fam: Family,
    capacity: int | None = DEFAULT_CAPACITY,
) -> CoordinateVector:
    """Unconditional cumulants from conditional ones over a mixing variable.

    For each index, the sum runs over the lattice; the term of a partition
    couples the conditional cumulants of its blocks through the coarsening
    interval above it, with the blocks of each coarser partition grouping
    which conditional cumulants meet inside one expectation over Y.  The
    coarsening intervals of the supported families carry exactly the
    Moebius weights of the family lattice on the blocks, which is what
    makes the output the cumulant of the mixture.
    """
    if not _brillinger_supported(fam):
        raise UnsupportedFamilyError(
            f"conditional cumulants are supported for {_BRILLINGER_FAMILIES}"
        )
    ys = _y_table(y_dist)
    if not ys:
        raise ValueError("empty mixing distribution")
    total_mass = sum(p for _, p in ys)
    if total_mass != 1:
        raise ValueError(f"mixing weights sum to {total_mass}, not 1")
    cond = {y: conditional_cumulants[y] for y, _ in ys}
    space = next(iter(cond.values())).space
    if any(vec.space != space for vec in cond.values()):
        raise ValueError("conditional cumulant vectors live on different state spaces")
    sys_ = LCumulantSystem(fam, space, capacity)
    entries: dict[tuple[int, ...], Fraction] = {}
    for x in space.states():
        multiset = space.index_multiset(x)
        if not multiset:
            entries[x] = Fraction(0)
            continue
        lat = sys_.lattice(multiset)
        total = Fraction(0)
        for delta in lat.elements:
            for nu in lat.interval(delta, lat.top):
                weight = lat.mobius_to_top(nu)
                term = Fraction(weight)
                for group in nu.blocks:
                    inner_blocks = [
                        tuple(multiset[j] for j in block)
                        for block in delta.blocks
                        if block[0] in group
                    ]
                    mean = Fraction(0)
                    for y, p in ys:
                        if p == 0:
                            continue
                        prod = p
                        for inner in inner_blocks:
                            prod *= cond[y].of_multiset(inner)
                        mean += prod
                    term *= mean
                total += term
        entries[x] = total
    return CoordinateVector(space, LCUMULANTS, entries, family=fam)


def conditional_collapse(
    y_dist,
    conditional_means: Mapping,
    fam: Family,
    capacity: int | None = DEFAULT_CAPACITY,
) -> Fraction:
    """Top cumulant when all variables are independent given Y.

    Equals the family cumulant of the vector of conditional means, whose
    joint moments are plain expectations over Y; valid for every family.
    """
    ys = _y_table(y_dist)
    means = {y: [Fraction(v) for v in conditional_means[y]] for y, _ in ys}
    n = len(next(iter(means.values())))
    lat = build(fam, tuple(range(1, n + 1)) if fam.kind == TREE else n, capacity=capacity)
    total = Fraction(0)
    for pi in lat.elements:
        term = Fraction(lat.mobius_to_top(pi))
        for block in pi.blocks:
            mean = Fraction(0)
            for y, p in ys:
                if p == 0:
                    continue
                prod = p
                for j in block:
                    prod *= means[y][j]
                mean += prod
            term *= mean
        total += term
    return total
