import mpmath as mp
import pytest

from symtriquad.errors import PrecisionError
from symtriquad.functions import (
    Custom,
    LogCorner2D,
    LogEdge2D,
    LogMono1D,
    Monomial1D,
    Monomial2D,
    Swapped,
    build_group_sequence_2d,
    build_sequence_1d,
)
from symtriquad.geometry import Triangle
from symtriquad.integrals import (
    IntegralTable,
    integrate_reference,
    oracle_integrate_1d,
    oracle_integrate_2d,
    reference_entry,
)


def _close(a, b, digits):
    return abs(a - b) <= mp.mpf(10) ** -digits * max(abs(b), 1)


def test_analytic_monomials():
    v, prov = integrate_reference(Monomial2D(1, 0))
    assert prov == "analytic" and _close(v, mp.mpf(1) / 6, 64)
    assert _close(integrate_reference(Monomial2D(2, 1))[0], mp.mpf(2) / 120, 64)
    assert _close(integrate_reference(Monomial2D(0, 0))[0], mp.mpf(1) / 2, 64)
    assert _close(integrate_reference(Monomial1D(3))[0], mp.mpf(1) / 4, 64)
    assert _close(integrate_reference(LogMono1D(1))[0], -mp.mpf(1) / 4, 64)


def test_monomial_against_oracle():
    assert _close(oracle_integrate_2d(lambda x, y: mp.mpf(1)), mp.mpf(1) / 2, 40)
    assert _close(oracle_integrate_2d(lambda x, y: x * y), mp.mpf(1) / 24, 40)
    for p, q in ((4, 1), (3, 3), (6, 0)):
        f = Monomial2D(p, q)
        assert _close(oracle_integrate_2d(f.value), integrate_reference(f)[0], 40)


def test_log_1d_against_oracle():
    for k in (1, 3, 6):
        f = LogMono1D(k)
        assert _close(oracle_integrate_1d(f.value, 40), integrate_reference(f)[0], 40)


@pytest.mark.parametrize("f", [LogEdge2D(1), LogEdge2D(3), LogCorner2D(2), LogCorner2D(4)], ids=lambda f: f.label())
def test_singular_entries_against_oracle(f):
    e = reference_entry(f)
    assert e.provenance == "numeric" and e.certified_digits >= 40
    assert _close(oracle_integrate_2d(f.value, target_digits=40), e.value, 38)


def test_swapped_equals_base():
    assert integrate_reference(Swapped(LogEdge2D(1)))[0] == integrate_reference(LogEdge2D(1))[0]
    with mp.workdps(40):
        v = oracle_integrate_2d(Swapped(LogCorner2D(2)).value, target_digits=30)
    assert _close(v, integrate_reference(LogCorner2D(2))[0], 28)


def test_oracle_on_other_triangle():
    tri = Triangle((mp.mpf(1), mp.mpf(0)), (mp.mpf(3), mp.mpf(1)), (mp.mpf(0), mp.mpf(2)))
    assert _close(oracle_integrate_2d(lambda x, y: mp.mpf(1), tri), tri.area(), 40)
    # centroid times area for a linear function
    cx, cy = tri.centroid()
    assert _close(oracle_integrate_2d(lambda x, y: x, tri), cx * tri.area(), 40)


def test_oracle_degenerate_triangle_is_zero():
    assert oracle_integrate_2d(lambda x, y: mp.mpf(1), Triangle((0, 0), (1, 1), (2, 2))) == 0


def test_oracle_reports_uncertified():
    with pytest.raises(PrecisionError):
        oracle_integrate_1d(lambda x: mp.cos(10**4 * x), 40)


def test_custom_function_entry():
    f = Custom("e^x y", lambda x, y: mp.exp(x) * y, dim=2, singular=False)
    e = reference_entry(f)
    # integral of e^x (1-x)^2 / 2 over [0, 1]
    assert _close(e.value, (2 * mp.e - 5) / 2, 38)
    g = Custom("known", lambda x: x, dim=1, singular=False, integral="0.5")
    assert reference_entry(g).provenance == "analytic"


def test_table_save_load_round_trip(tmp_path):
    seq = build_group_sequence_2d(9)
    table = IntegralTable.for_sequence(seq)
    table.extend(build_sequence_1d(3))
    path = tmp_path / "table.txt"
    table.save(path)
    loaded = IntegralTable.load(path)
    assert loaded.covers(seq)
    for f in seq.functions():
        assert _close(loaded[f], table[f], 62)
    assert path.read_text() == (table.save(tmp_path / "again.txt") or (tmp_path / "again.txt").read_text())


def test_table_values_follow_sequence_order():
    seq = build_group_sequence_2d(5)
    table = IntegralTable.for_sequence(seq)
    assert table.values(seq) == [integrate_reference(f)[0] for f in seq.functions()]
    assert len(table) == seq.m
