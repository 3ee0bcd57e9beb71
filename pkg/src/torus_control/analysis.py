"""Eigenvalue multiplicity classes, symmetry hypotheses and gap statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .spectral import ModeIndex, lattice_flat
from .symbols import EigenvalueTable

GAMMA_PRIME_NOTE = (
    "gamma' is a supremum over all finite exclusion sets of Z^2 and cannot be "
    "computed from a finite box; gamma_prime_lattice is the box gap after the "
    "given exclusions and analytic_gamma_prime is the registered model value"
)


@dataclass(frozen=True)
class MultiplicityReport:
    """Partition of the box into classes of equal eigenvalue.

    ``representatives`` is ordered by increasing eigenvalue; each
    representative is the lexicographically smallest member of its class.
    ``class_of[i]`` is the class position of flat mode ``i``.
    """

    table: EigenvalueTable = field(repr=False)
    representatives: list[ModeIndex]
    classes: dict[ModeIndex, list[ModeIndex]] = field(repr=False)
    values: np.ndarray = field(repr=False)
    class_of: np.ndarray = field(repr=False)

    @property
    def multiplicity(self) -> dict[ModeIndex, int]:
        return {r: len(m) for r, m in self.classes.items()}

    def histogram(self) -> dict[int, int]:
        """Number of classes with each multiplicity."""
        return dict(sorted(Counter(self.multiplicity.values()).items()))

    def class_containing(self, k) -> list[ModeIndex]:
        i = (k[0] + self.table.radius) * (2 * self.table.radius + 1) + (k[1] + self.table.radius)
        return self.classes[self.representatives[int(self.class_of[i])]]


def multiplicity_classes(table: EigenvalueTable) -> MultiplicityReport:
    """Group box modes by eigenvalue.

    Integer symbols are grouped by exact equality; real symbols by chaining
    sorted values that agree within ``1e-9 max(1, |lambda|)``.
    """
    lam = table.flat
    k1, k2 = lattice_flat(table.radius)
    order = np.lexsort((k2, k1, lam))  # primary key lam, then k1, then k2
    class_of = np.empty(lam.size, dtype=int)
    starts = [0]
    for pos in range(1, order.size):
        if not table.same(lam[order[pos]], lam[order[pos - 1]]):
            starts.append(pos)
    starts.append(order.size)
    reps, classes, values = [], {}, []
    for c, (lo, hi) in enumerate(zip(starts[:-1], starts[1:])):
        members = sorted(ModeIndex(int(k1[i]), int(k2[i])) for i in order[lo:hi])
        class_of[order[lo:hi]] = c
        reps.append(members[0])
        classes[members[0]] = members
        values.append(float(lam[order[lo]]))
    return MultiplicityReport(table, reps, classes, np.array(values), class_of)


@dataclass(frozen=True)
class HypothesisReport:
    hypothesis: str
    holds: bool
    counterexample: dict | None = None
    radius: int = 0
    caveat: str = "certified on the lattice box only, not on all of Z^2"

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "holds": self.holds,
            "counterexample": self.counterexample,
            "radius": self.radius,
            "caveat": self.caveat,
        }


def _verify(table: EigenvalueTable, hyp: str) -> HypothesisReport:
    N = table.radius
    lam = table.lam
    r = np.arange(-N, N + 1)
    same = table.same
    # parities: H2 even in k1 / odd in k2, H3 odd in k1 / even in k2
    flip1 = lam[::-1, :]
    flip2 = lam[:, ::-1]
    if hyp == "H2":
        checks = [("even in k1", flip1, lam), ("odd in k2", flip2, -lam)]
    else:
        checks = [("odd in k1", flip1, -lam), ("even in k2", flip2, lam)]
    for label, lhs, rhs in checks:
        bad = ~same(lhs, rhs)
        if bad.any():
            a, b = np.argwhere(bad)[0]
            return HypothesisReport(
                hyp,
                False,
                {"clause": f"parity: {label}", "mode": [int(r[a]), int(r[b])]},
                N,
            )
    # uniqueness along rows (fixed k1 != 0) and columns (fixed k2 != 0)
    for a, k1 in enumerate(r):
        if k1 == 0:
            continue
        row = lam[a]
        eq = same(row[:, None], row[None, :])
        for b, k2 in enumerate(r):
            sols = set(int(x) for x in r[eq[b]])
            expect = {int(k2)} if hyp == "H2" else {int(k2), -int(k2)}
            if sols != expect:
                return HypothesisReport(
                    hyp,
                    False,
                    {
                        "clause": "j2-uniqueness",
                        "mode": [int(k1), int(k2)],
                        "solutions": sorted(sols),
                        "expected": sorted(expect),
                    },
                    N,
                )
    for b, k2 in enumerate(r):
        if k2 == 0:
            continue
        col = lam[:, b]
        eq = same(col[:, None], col[None, :])
        for a, k1 in enumerate(r):
            sols = set(int(x) for x in r[eq[a]])
            expect = {int(k1), -int(k1)} if hyp == "H2" else {int(k1)}
            if sols != expect:
                return HypothesisReport(
                    hyp,
                    False,
                    {
                        "clause": "j1-uniqueness",
                        "mode": [int(k1), int(k2)],
                        "solutions": sorted(sols),
                        "expected": sorted(expect),
                    },
                    N,
                )
    return HypothesisReport(hyp, True, None, N)


def verify_H2(table: EigenvalueTable) -> HypothesisReport:
    """Brute-force check of H2 on the box.

    Parity: ``lambda`` even in ``k1`` and odd in ``k2``.  For ``k1 != 0``
    the only ``j2`` with ``lambda(k1, j2) = lambda(k1, k2)`` is ``k2``; for
    ``k2 != 0`` the only ``j1`` with ``lambda(j1, k2) = lambda(k1, k2)`` are
    ``+-k1``.
    """
    return _verify(table, "H2")


def verify_H3(table: EigenvalueTable) -> HypothesisReport:
    """Mirror of :func:`verify_H2`: odd in ``k1``, even in ``k2``, ``j2 = +-k2``, ``j1 = k1``."""
    return _verify(table, "H3")


def verify_hypothesis(table: EigenvalueTable, hyp: str) -> HypothesisReport:
    if hyp == "H2":
        return verify_H2(table)
    if hyp == "H3":
        return verify_H3(table)
    raise ValueError(f"unknown hypothesis {hyp!r}")


@dataclass(frozen=True)
class GapReport:
    gamma: float
    gamma_prime_lattice: float
    analytic_gamma_prime: float | None
    min_pair: tuple[ModeIndex, ModeIndex]
    excluded: tuple[ModeIndex, ...] = ()
    note: str = GAMMA_PRIME_NOTE

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "gamma_prime_lattice": self.gamma_prime_lattice,
            "analytic_gamma_prime": self.analytic_gamma_prime,
            "min_pair": [list(self.min_pair[0]), list(self.min_pair[1])],
            "excluded": [list(k) for k in self.excluded],
            "note": self.note,
        }


def _min_gap(values: np.ndarray, reps: list) -> tuple[float, tuple]:
    order = np.argsort(values, kind="stable")
    diffs = np.diff(values[order])
    i = int(np.argmin(diffs))
    return float(diffs[i]), (reps[order[i]], reps[order[i + 1]])


def gap_statistics(report: MultiplicityReport, exclusion=()) -> GapReport:
    """Smallest distance between distinct representative eigenvalues.

    ``exclusion`` is a collection of representative modes removed before
    computing ``gamma_prime_lattice``.
    """
    reps = list(report.representatives)
    if len(reps) < 2:
        raise ValueError("gap statistics need at least two distinct eigenvalues")
    gamma, pair = _min_gap(report.values, reps)
    excl = tuple(ModeIndex(*k) for k in exclusion)
    unknown = [k for k in excl if k not in report.classes]
    if unknown:
        raise ValueError(f"exclusion modes {unknown} are not class representatives")
    keep = [i for i, r in enumerate(reps) if r not in excl]
    if len(keep) < 2:
        raise ValueError("fewer than two representatives remain after exclusion")
    gp, _ = _min_gap(report.values[keep], [reps[i] for i in keep])
    return GapReport(
        gamma, gp, report.table.symbol.analytic_gamma_prime, pair, excl
    )
