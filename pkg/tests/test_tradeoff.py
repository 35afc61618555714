import io
import math

import pytest

from mimofb.tradeoff import (TradeoffCurve, d_beamforming, d_joint, d_no_csit,
                             d_perfect, d_quantized, d_temporal_perfect,
                             g_function, quantized_curve, simple_curve,
                             write_curve_csv)


def test_no_csit_integer_points():
    assert d_no_csit(2, 2, 0) == 4
    assert d_no_csit(2, 2, 1) == 1
    assert d_no_csit(2, 2, 2) == 0
    assert d_no_csit(3, 5, 1) == 8


def test_no_csit_piecewise_linear():
    assert d_no_csit(2, 2, 0.5) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        d_no_csit(2, 2, 2.5)


def test_beamforming_equals_no_csit():
    assert d_beamforming(2, 2, 1) == 1
    assert d_beamforming(3, 4, 0) == 12
    for t in range(0, 41):
        r = 2.0 * t / 40
        assert d_beamforming(2, 4, r) == d_no_csit(2, 4, r)


def test_quantized_figure_anchor():
    # One feedback bit on a 2x3 link, zero multiplexing: 42.
    pt = d_quantized(2, 3, 2, 0.0)
    assert pt.envelope == 42
    assert pt.argmax == 1
    assert pt.branches[1] == 42
    assert pt.branches[2] == 18


def test_quantized_siso_feedback_diversity():
    for b in (1, 2, 3):
        assert d_quantized(1, 1, 2**b, 0.0).envelope == 2**b


def test_quantized_vanishes_at_full_multiplexing():
    for m, n in ((1, 1), (2, 3), (3, 4)):
        assert d_quantized(m, n, 4, float(m)).envelope == 0


def test_quantized_envelope_is_brute_force_max():
    for (m, n, L) in ((2, 3, 1), (3, 4, 2), (4, 4, 3), (3, 5, 2)):
        for t in range(0, 33):
            r = m * t / 32
            pt = d_quantized(m, n, L, r)
            j = max(1, math.ceil(r))
            brute = max((1 - r / i) * (n - j + 1) * (m - j + 1) * g_function(m, n, i, L)
                        for i in range(j, m + 1))
            assert pt.envelope == pytest.approx(brute)
            assert pt.envelope == pytest.approx(max(pt.branches.values()))


def test_quantized_monotone_and_dominant():
    for m, n in ((2, 2), (2, 3), (3, 4), (4, 4)):
        for L in (2, 4, 8):
            vals = [d_quantized(m, n, L, m * t / 200).envelope for t in range(201)]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
            for r in range(0, m):
                assert d_quantized(m, n, L, r).envelope >= d_no_csit(m, n, r)


def test_quantized_more_bins_help():
    for m, n in ((2, 3), (3, 3)):
        for t in range(0, 20):
            r = (m - 1e-9) * t / 19
            prev = 0.0
            for L in (1, 2, 3, 4, 6, 8):
                cur = d_quantized(m, n, L, r).envelope
                assert cur >= prev - 1e-12
                prev = cur


def test_perfect_csit_regimes():
    assert d_perfect(2, 5, 2.0).d == math.inf
    assert d_perfect(1, 1, 0.5).d == math.inf
    pt = d_perfect(2, 3, 2.0)
    assert pt.status == "unresolved-conjecture"
    assert math.isnan(pt.d)


def test_temporal_perfect_regimes():
    assert d_temporal_perfect(2, 4, 2.0) == math.inf
    assert d_temporal_perfect(2, 3, 2.0) == 0.0
    assert d_temporal_perfect(1, 2, 1.0) == math.inf
    assert d_temporal_perfect(3, 3, 1.0) == math.inf


def test_joint_variants_anchor_points():
    assert d_joint(2, 3, 2, 0.0, "figure") == 42
    assert d_joint(2, 3, 2, 1.0, "figure") == 6
    assert d_joint(2, 3, 2, 2.0, "figure") == 2
    assert d_joint(2, 3, 2, 2.0, "printed") == 0.0
    assert d_joint(2, 3, 2, 1.0, "printed") == 0.0
    with pytest.raises(ValueError):
        d_joint(2, 3, 1, 0.0)
    with pytest.raises(ValueError):
        d_joint(2, 3, 2, 0.0, "other")


def test_curve_csv_format():
    curves = quantized_curve(2, 3, 2, grid_points=3)
    curves.append(simple_curve("no-csit", lambda r: d_no_csit(2, 3, r), 2, 3))
    curves.append(TradeoffCurve("perfect", [(0.0, math.inf, 0)]))
    buf = io.StringIO()
    write_curve_csv(buf, curves, ["command=tradeoff"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# command=tradeoff"
    assert lines[1] == "r,d,branch_i,scheme"
    assert "0,42,1,quantized" in lines
    assert "0,inf,0,perfect" in lines


def test_envelope_discontinuity_convention():
    # At integer r the value belongs to the j = r branch (closed left).
    at1 = d_quantized(2, 3, 2, 1.0)
    just_above = d_quantized(2, 3, 2, 1.0 + 1e-9)
    assert at1.envelope == pytest.approx(9.0)  # (1 - 1/2) * 6 * G(2,3,2,2)
    assert just_above.envelope < at1.envelope / 2
