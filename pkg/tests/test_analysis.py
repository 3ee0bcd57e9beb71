from collections import defaultdict

import numpy as np
import pytest

from torus_control import (
    DispersionSymbol,
    EigenvalueTable,
    ModeIndex,
    gap_statistics,
    multiplicity_classes,
    verify_H3,
    verify_hypothesis,
)

from conftest import BUILTINS, table


def _brute_classes(tab):
    """Oracle: dictionary grouping of eigenvalues rounded to 9 significant digits."""
    groups = defaultdict(list)
    N = tab.radius
    for k1 in range(-N, N + 1):
        for k2 in range(-N, N + 1):
            groups[float(f"{tab[(k1, k2)]:.9e}")].append((k1, k2))
    return sorted(sorted(v) for v in groups.values())


@pytest.mark.parametrize("model", BUILTINS)
@pytest.mark.parametrize("N", [3, 6])
def test_classes_match_brute_force(model, N):
    tab = table(model, N)
    rep = multiplicity_classes(tab)
    got = sorted([list(map(tuple, m)) for m in rep.classes.values()])
    assert got == _brute_classes(tab)
    assert np.all(np.diff(rep.values) > 0)
    for r, members in rep.classes.items():
        assert r == min(members)
        assert all(tab[m] == tab[r] for m in members)
    assert sum(len(m) for m in rep.classes.values()) == (2 * N + 1) ** 2


def test_bo2d_axis_class():
    rep = multiplicity_classes(table("bo2d", 12))
    zero = rep.class_containing((0, 5))
    assert len(zero) == 4 * 12 + 1
    assert ModeIndex(7, 0) in zero and ModeIndex(0, 0) in zero


def test_histogram_counts_modes():
    rep = multiplicity_classes(table("zk", 4))
    hist = rep.histogram()
    assert sum(m * c for m, c in hist.items()) == 81
    # zk: lambda(k1, k2) = lambda(k1, -k2), so all off-axis classes have even size
    assert rep.multiplicity[ModeIndex(0, -4)] == 9  # the k1 = 0 column is the zero class


@pytest.mark.parametrize("model,hyp", [("zk", "H3"), ("bozk", "H3"), ("dgbozk:1.5", "H3"), ("bo2d", "H2")])
def test_declared_hypotheses_hold(model, hyp):
    rep = verify_hypothesis(table(model, 12), hyp)
    assert rep.holds and rep.counterexample is None
    assert "box" in rep.caveat


@pytest.mark.parametrize("model,hyp", [("zk", "H2"), ("bo2d", "H3")])
def test_wrong_hypothesis_gives_parity_counterexample(model, hyp):
    rep = verify_hypothesis(table(model, 4), hyp)
    assert not rep.holds
    assert rep.counterexample["clause"].startswith("parity")


def test_uniqueness_counterexample():
    # b(k2) = k2^2 (k2^2 - 5) takes the value -4 at k2 = +-1 and +-2
    sym = DispersionSymbol("collide", lambda k1, k2: k2**2 * (k2**2 - 5), 5.0, 10.0, integer_valued=True)
    rep = verify_H3(EigenvalueTable.build(sym, 3))
    assert not rep.holds
    assert rep.counterexample["clause"] == "j2-uniqueness"
    assert set(rep.counterexample["solutions"]) >= {1, 2}


def test_unknown_hypothesis():
    with pytest.raises(ValueError):
        verify_hypothesis(table("zk", 2), "H4")


@pytest.mark.parametrize("model", ["zk", "bo2d", "bozk"])
def test_unit_gap_for_integer_models(model):
    gaps = gap_statistics(multiplicity_classes(table(model, 12)))
    assert gaps.gamma == 1.0
    assert gaps.gamma_prime_lattice == 1.0
    assert gaps.analytic_gamma_prime == 1.0


def test_gap_brute_force_dgbozk():
    tab = table("dgbozk:1.5", 6)
    vals = np.unique(np.round(tab.flat, 9))
    gaps = gap_statistics(multiplicity_classes(tab))
    assert gaps.gamma == pytest.approx(np.diff(vals).min(), abs=1e-8)
    assert gaps.analytic_gamma_prime is None
    a, b = gaps.min_pair
    assert abs(tab[a] - tab[b]) == pytest.approx(gaps.gamma)


def test_exclusion_never_shrinks_gap():
    rep = multiplicity_classes(table("dgbozk:1.5", 6))
    base = gap_statistics(rep)
    excl = gap_statistics(rep, exclusion=[base.min_pair[0]])
    assert excl.gamma_prime_lattice >= base.gamma
    assert excl.to_dict()["excluded"] == [list(base.min_pair[0])]
    with pytest.raises(ValueError):
        gap_statistics(rep, exclusion=[(99, 99)])
