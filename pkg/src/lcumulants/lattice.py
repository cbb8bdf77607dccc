"""Explicit partition lattices, their Moebius functions, and structure checks.

A :class:`PartitionLattice` holds a deduplicated element list (partitions of
positions ``0..d-1``), the refinement order as explicit up/down sets, and a
memoized Moebius table.  Five families are built in:

* ``full``         all partitions,
* ``noncrossing``  no interleaved pair of blocks (free-cumulant lattice),
* ``interval``     blocks are contiguous runs (Boolean-cumulant lattice),
* ``onecluster``   at most one non-singleton block (central moments),
* ``tree``         partitions induced by cutting edges of a fixed leaf tree.

All families contain the all-singletons bottom and the one-block top, and
are closed under common refinement, so meets inside the lattice agree with
meets in the full partition lattice.

The Moebius memo table is filled lazily.  Writes are idempotent (a key is
always recomputed to the same value), so concurrent readers may at worst
duplicate work; no locking is required under the usual dict atomicity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .partition import (
    DEFAULT_CAPACITY,
    CapacityError,
    SetPartition,
    all_partitions,
    format_partition,
    is_interval,
    is_noncrossing,
    is_one_cluster,
    meet,
    refines,
    restrict,
)
from .topology import TreeTopology, induced_subtree

FULL = "full"
NONCROSSING = "noncrossing"
INTERVAL = "interval"
ONECLUSTER = "onecluster"
TREE = "tree"

_PREDICATES: dict[str, Callable[[SetPartition], bool]] = {
    FULL: lambda p: True,
    NONCROSSING: is_noncrossing,
    INTERVAL: is_interval,
    ONECLUSTER: is_one_cluster,
}


@dataclass(frozen=True)
class Family:
    """A lattice family tag; tree families carry their topology."""

    kind: str
    tree: TreeTopology | None = None

    def __post_init__(self):
        if self.kind == TREE:
            if self.tree is None:
                raise ValueError("tree family needs a topology")
        elif self.kind not in _PREDICATES:
            raise ValueError(f"unknown family kind {self.kind!r}")
        elif self.tree is not None:
            raise ValueError("only tree families carry a topology")

    @property
    def size_indexed(self) -> bool:
        """Whether the lattice depends only on the ground-set size."""
        return self.kind != TREE

    def __str__(self) -> str:
        return self.kind


def family(kind: str, tree: TreeTopology | None = None) -> Family:
    return Family(kind, tree)


class PartitionLattice:
    """An explicit lattice of set partitions over positions ``0..d-1``.

    ``labels`` names what each position aliases (1-based variable indices
    by default); it only affects formatting and the JSON dump.
    """

    def __init__(
        self,
        elements: Sequence[SetPartition],
        family_tag: Family | None = None,
        labels: Sequence[int] | None = None,
        validate: bool = True,
    ):
        if not elements:
            raise ValueError("empty lattice")
        d = elements[0].size
        if any(p.size != d for p in elements):
            raise ValueError("mixed ground sets")
        uniq: dict[tuple[int, ...], SetPartition] = {}
        for p in elements:
            uniq.setdefault(p.rgs, p)
        ordered = sorted(uniq.values(), key=lambda p: (-p.num_blocks, p.rgs))
        self.family = family_tag
        self.size = d
        self.labels = tuple(labels) if labels is not None else tuple(range(1, d + 1))
        self.elements: tuple[SetPartition, ...] = tuple(ordered)
        self.index: dict[tuple[int, ...], int] = {p.rgs: i for i, p in enumerate(self.elements)}
        n = len(self.elements)
        below: list[set[int]] = [set() for _ in range(n)]
        above: list[set[int]] = [set() for _ in range(n)]
        for i, p in enumerate(self.elements):
            for j, q in enumerate(self.elements):
                if refines(p, q):
                    below[j].add(i)
                    above[i].add(j)
        self._below = tuple(frozenset(s) for s in below)
        self._above = tuple(frozenset(s) for s in above)
        self._mobius: dict[tuple[int, int], int] = {}
        bottom = SetPartition.singletons(d)
        top = SetPartition.one_block(d)
        if validate:
            if bottom.rgs not in self.index or top.rgs not in self.index:
                raise ValueError("a partition lattice must contain the bottom and the top")
            if family_tag is None:
                self._check_meets_generic()
            elif d <= 5:
                self._check_meets_refinement()
        self.bottom_id = self.index[bottom.rgs]
        self.top_id = self.index[top.rgs]

    def _check_meets_refinement(self) -> None:
        """Built-in families: the common refinement must stay inside."""
        for i, p in enumerate(self.elements):
            for q in self.elements[i + 1 :]:
                if meet(p, q).rgs not in self.index:
                    raise ValueError(f"common refinement of {p} and {q} escapes the lattice")

    def _check_meets_generic(self) -> None:
        """Custom element lists: every pair needs a unique greatest lower bound."""
        n = len(self.elements)
        for i in range(n):
            for j in range(i + 1, n):
                common = self._below[i] & self._below[j]
                maximal = [k for k in common if not any(k in self._below[m] and m != k for m in common)]
                if len(maximal) != 1:
                    raise ValueError(
                        "not a lattice: no unique meet for "
                        f"{self.elements[i]} and {self.elements[j]}"
                    )

    # -- basic queries -------------------------------------------------

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, p: SetPartition) -> bool:
        return p.rgs in self.index

    def id_of(self, p: SetPartition) -> int:
        try:
            return self.index[p.rgs]
        except KeyError:
            raise ValueError(f"{p} is not an element of this lattice") from None

    @property
    def bottom(self) -> SetPartition:
        return self.elements[self.bottom_id]

    @property
    def top(self) -> SetPartition:
        return self.elements[self.top_id]

    def leq(self, p: SetPartition, q: SetPartition) -> bool:
        return self.id_of(p) in self._below[self.id_of(q)]

    def interval(self, lo: SetPartition, hi: SetPartition) -> list[SetPartition]:
        """All elements between lo and hi inclusive, in enumeration order."""
        lo_id, hi_id = self.id_of(lo), self.id_of(hi)
        ids = self._above[lo_id] & self._below[hi_id]
        return [self.elements[i] for i in sorted(ids)]

    # -- Moebius function ----------------------------------------------

    def mobius(self, lo: SetPartition, hi: SetPartition) -> int:
        """Moebius value of the pair lo <= hi; errors if incomparable."""
        lo_id, hi_id = self.id_of(lo), self.id_of(hi)
        if lo_id not in self._below[hi_id]:
            raise ValueError(f"{lo} is not below {hi}")
        return self._mobius_ids(lo_id, hi_id)

    def _mobius_ids(self, lo_id: int, hi_id: int) -> int:
        key = (lo_id, hi_id)
        cached = self._mobius.get(key)
        if cached is not None:
            return cached
        if lo_id == hi_id:
            value = 1
        else:
            between = self._above[lo_id] & self._below[hi_id]
            value = -sum(self._mobius_ids(lo_id, mid) for mid in between if mid != hi_id)
        self._mobius[key] = value
        return value

    def mobius_to_top(self, p: SetPartition) -> int:
        return self._mobius_ids(self.id_of(p), self.top_id)

    # -- lattice operations --------------------------------------------

    def meet(self, p: SetPartition, q: SetPartition) -> SetPartition:
        """Greatest lower bound within the lattice.

        The common refinement is used when it is an element (true for all
        built-in families); otherwise the order matrix is consulted and a
        unique maximal lower bound is required.
        """
        candidate = meet(p, q)
        if candidate.rgs in self.index:
            return candidate
        common = self._below[self.id_of(p)] & self._below[self.id_of(q)]
        maximal = [k for k in common if not any(k in self._below[m] and m != k for m in common)]
        if len(maximal) != 1:
            raise ValueError(f"no unique meet of {p} and {q} in this lattice")
        return self.elements[maximal[0]]

    def closure(self, delta: SetPartition) -> SetPartition:
        """Smallest lattice element above an arbitrary partition.

        Computed as the common refinement of all upper bounds; if that
        refinement escapes the lattice, the unique minimal upper bound is
        sought instead and ambiguity is an error.
        """
        if delta.size != self.size:
            raise ValueError("partition lives on a different ground set")
        if delta.rgs in self.index:
            return delta
        upper = [p for p in self.elements if refines(delta, p)]
        acc = upper[0]
        for p in upper[1:]:
            acc = meet(acc, p)
        if acc.rgs in self.index and refines(delta, acc):
            return acc
        upper_ids = {self.id_of(p) for p in upper}
        minimal = [i for i in upper_ids if not any(j in upper_ids and j != i and j in self._below[i] for j in upper_ids)]
        if len(minimal) != 1:
            raise ValueError(f"no unique closure of {delta} in this lattice")
        return self.elements[minimal[0]]

    def weisner_sum(self, pi0: SetPartition, delta: SetPartition) -> int:
        """Sum of Moebius-to-top over the meet fiber of pi0 at delta.

        Vanishes whenever pi0 is not the top element; that vanishing is the
        engine behind independence implying zero coordinates.
        """
        pi0_id = self.id_of(pi0)
        if pi0_id == self.top_id:
            raise ValueError("the reference partition must differ from the top")
        self.id_of(delta)
        total = 0
        for p in self.elements:
            if self.meet(p, pi0) == delta:
                total += self.mobius_to_top(p)
        return total

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "family": str(self.family) if self.family is not None else "custom",
            "ground_size": self.size,
            "elements": [",".join(str(v) for v in p.rgs) for p in self.elements],
            "partitions": [format_partition(p, self.labels) for p in self.elements],
            "mobius_to_top": [str(Fraction(self.mobius_to_top(p))) for p in self.elements],
        }


# -- construction --------------------------------------------------------


def build(
    fam: Family,
    ground: int | Sequence[int],
    capacity: int | None = DEFAULT_CAPACITY,
) -> PartitionLattice:
    """Build the lattice of a family over a ground set.

    ``ground`` is either a size d (positions alias variables 1..d) or an
    increasing sequence of 1-based variable labels; tree families require
    the labels to be leaves of their topology.
    """
    if isinstance(ground, int):
        labels: tuple[int, ...] = tuple(range(1, ground + 1))
    else:
        labels = tuple(ground)
        if list(labels) != sorted(set(labels)):
            raise ValueError("ground labels must be strictly increasing")
    d = len(labels)
    if d < 1:
        raise ValueError("empty ground set")
    if capacity is not None and d > capacity:
        raise CapacityError(f"ground set of size {d} exceeds the cap of {capacity}")
    if fam.kind == TREE:
        assert fam.tree is not None
        if not set(labels) <= set(fam.tree.leaves):
            raise ValueError(f"labels {labels} are not leaves of the tree")
        elements = _tree_elements(fam.tree, labels)
    else:
        predicate = _PREDICATES[fam.kind]
        elements = [p for p in all_partitions(d, capacity=None) if predicate(p)]
    return PartitionLattice(elements, family_tag=fam, labels=labels, validate=True)


def _tree_elements(tree: TreeTopology, labels: Sequence[int]) -> list[SetPartition]:
    """Partitions of the leaf subset induced by cutting edges of the subtree.

    A partition qualifies exactly when the minimal subtrees spanning its
    non-singleton blocks are pairwise node-disjoint: the spanning subtrees
    then serve as the connected components, and a leaf never sits on the
    path between two other leaves, so no foreign leaf is swept in.
    """
    if len(labels) == 1:
        return [SetPartition.singletons(1)]
    sub = induced_subtree(tree, labels)
    span_cache: dict[tuple[int, ...], frozenset] = {}

    def span(block_labels: tuple[int, ...]) -> frozenset:
        if block_labels not in span_cache:
            nodes: set = set()
            base = block_labels[0]
            for other in block_labels[1:]:
                nodes.update(sub.path(base, other))
            span_cache[block_labels] = frozenset(nodes)
        return span_cache[block_labels]

    out = []
    for p in all_partitions(len(labels), capacity=None):
        spans = [span(tuple(labels[i] for i in block)) for block in p.blocks if len(block) > 1]
        ok = True
        for a, b in itertools.combinations(spans, 2):
            if a & b:
                ok = False
                break
        if ok:
            out.append(p)
    return out


def custom_lattice(elements: Iterable[SetPartition], labels: Sequence[int] | None = None) -> PartitionLattice:
    """Wrap a user-supplied element list after validating lattice structure."""
    return PartitionLattice(list(elements), family_tag=None, labels=labels, validate=True)


# -- structural conditions -------------------------------------------------


@dataclass
class ConditionReport:
    condition: str
    holds: bool | None
    witness: str | None = None
    checked_sizes: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        if self.holds is None:
            raise ValueError(f"condition {self.condition} was not checked: {self.witness}")
        return self.holds


CONDITION_CHECK_LIMIT = 6


def _subsets(labels: Sequence[int]) -> Iterable[tuple[int, ...]]:
    for r in range(1, len(labels) + 1):
        yield from itertools.combinations(labels, r)


def _lattice_family_sizes(fam: Family, max_size: int) -> list[int]:
    if fam.kind == TREE:
        assert fam.tree is not None
        return [fam.tree.num_leaves]
    return list(range(1, max_size + 1))


def check_condition(
    fam: Family,
    which: str,
    max_size: int = 4,
    capacity: int | None = DEFAULT_CAPACITY,
) -> ConditionReport:
    """Exhaustively verify one of the structural conditions C0..C3.

    C0: every interval factors through restriction into the per-block
        lattices (the product property behind multiplicative inversion).
    C1: every single-element split belongs to the lattice (shift
        invariance of higher coordinates).
    C2: the lattice over any index subset matches the lattice over an
        initial segment of the same size, via the order isomorphism.
    C3: every coarsening interval, read on the blocks, reproduces the
        family lattice of the block count (conditional cumulant formula).

    Verification is exhaustive for the given sizes and never extrapolates:
    sizes above :data:`CONDITION_CHECK_LIMIT` return ``holds=None``.
    """
    which = which.upper()
    if which not in {"C0", "C1", "C2", "C3"}:
        raise ValueError(f"unknown condition {which!r}")
    if max_size > CONDITION_CHECK_LIMIT:
        return ConditionReport(which, None, f"size {max_size} above the exhaustive-check limit", ())
    sizes = _lattice_family_sizes(fam, max_size)
    if any(n > max_size for n in sizes):
        # A tree family cannot be truncated to a smaller ground set, so a
        # tree wider than the requested size is reported unchecked rather
        # than vacuously true.
        return ConditionReport(
            which, None, f"tree with {max(sizes)} leaves exceeds the requested size {max_size}", ()
        )
    checker = {"C0": _check_c0, "C1": _check_c1, "C2": _check_c2, "C3": _check_c3}[which]
    for n in sizes:
        witness = checker(fam, n, capacity)
        if witness is not None:
            return ConditionReport(which, False, witness, tuple(sizes))
    return ConditionReport(which, True, None, tuple(sizes))


def _ground_lattice(fam: Family, labels: Sequence[int], capacity) -> PartitionLattice:
    return build(fam, labels, capacity=capacity)


def _check_c1(fam: Family, n: int, capacity) -> str | None:
    labels = _root_labels(fam, n)
    for ground in _subsets(labels):
        if len(ground) < 2:
            continue
        lat = _ground_lattice(fam, ground, capacity)
        d = len(ground)
        for i in range(d):
            split = SetPartition.from_blocks([[i], [j for j in range(d) if j != i]], size=d)
            if split not in lat:
                return f"split {format_partition(split, ground)} missing from the lattice on {ground}"
    return None


def _root_labels(fam: Family, n: int) -> tuple[int, ...]:
    if fam.kind == TREE:
        assert fam.tree is not None
        return fam.tree.leaves[:n]
    return tuple(range(1, n + 1))


def _check_c0(fam: Family, n: int, capacity) -> str | None:
    root_labels = _root_labels(fam, n)
    sub_cache: dict[tuple[int, ...], PartitionLattice] = {}

    def sub_lattice(block_labels: tuple[int, ...]) -> PartitionLattice:
        if block_labels not in sub_cache:
            sub_cache[block_labels] = _ground_lattice(fam, block_labels, capacity)
        return sub_cache[block_labels]

    # Size-indexed families are covered by the initial segment; tree
    # lattices differ per leaf subset, so every ground set is visited.
    grounds: list[tuple[int, ...]] = (
        list(_subsets(root_labels)) if fam.kind == TREE else [root_labels]
    )
    for labels in grounds:
        lat = sub_lattice(labels)
        for hi in lat.elements:
            blocks = [tuple(labels[i] for i in block) for block in hi.blocks]
            for lo in lat.elements:
                if not refines(lo, hi):
                    continue
                inside = lat.interval(lo, hi)
                factor_sets = []
                for block, block_labels in zip(hi.blocks, blocks):
                    sub = sub_lattice(block_labels)
                    lo_b = restrict(lo, block)
                    hi_b = restrict(hi, block)
                    factor_sets.append({q.rgs for q in sub.interval(lo_b, hi_b)})
                product = set(itertools.product(*factor_sets))
                image = {tuple(restrict(delta, block).rgs for block in hi.blocks) for delta in inside}
                if len(image) != len(inside) or image != product:
                    return (
                        f"interval [{format_partition(lo, labels)}, {format_partition(hi, labels)}] "
                        "does not restrict bijectively onto the blockwise product"
                    )
    return None


def _check_c2(fam: Family, n: int, capacity) -> str | None:
    labels = _root_labels(fam, n)
    for ground in _subsets(labels):
        lat = _ground_lattice(fam, ground, capacity)
        ref = _ground_lattice(fam, labels[: len(ground)], capacity)
        if {p.rgs for p in lat.elements} != {p.rgs for p in ref.elements}:
            return (
                f"lattice on {ground} does not match the lattice on "
                f"{labels[: len(ground)]} under the order bijection"
            )
    return None


def _check_c3(fam: Family, n: int, capacity) -> str | None:
    labels = _root_labels(fam, n)
    lat = _ground_lattice(fam, labels, capacity)
    for pi in lat.elements:
        m = pi.num_blocks
        if fam.kind == TREE:
            assert fam.tree is not None
            if m > fam.tree.num_leaves:
                return f"cannot form a block lattice of size {m}"
            ref = _ground_lattice(fam, fam.tree.leaves[:m], capacity)
        else:
            ref = _ground_lattice(fam, m, capacity)
        above = lat.interval(pi, lat.top)
        image = set()
        for nu in above:
            image.add(_blocks_partition(pi, nu).rgs)
        if image != {p.rgs for p in ref.elements}:
            missing = {p.rgs for p in ref.elements} - image
            extra = image - {p.rgs for p in ref.elements}
            detail = []
            if missing:
                detail.append(f"missing {format_partition(SetPartition(next(iter(missing))))}")
            if extra:
                detail.append(f"extra {format_partition(SetPartition(next(iter(extra))))}")
            return (
                f"coarsenings of {format_partition(pi, labels)} do not match the "
                f"family lattice on {m} blocks ({'; '.join(detail)})"
            )
    return None


def _blocks_partition(pi: SetPartition, nu: SetPartition) -> SetPartition:
    """Read a coarsening nu >= pi as a partition of pi's blocks.

    Blocks of pi are numbered 0..m-1 by their minimum element; two block
    numbers land together iff nu merges those blocks.
    """
    labels = []
    for block in pi.blocks:
        labels.append(nu.rgs[block[0]])
    return SetPartition.from_blocks(
        [[i for i, l in enumerate(labels) if l == v] for v in sorted(set(labels))],
        size=pi.num_blocks,
    )
