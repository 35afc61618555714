"""Closed-form diversity-multiplexing curves for every transmitter-knowledge regime.

Diversity d is the decay exponent of outage versus SNR; multiplexing r is the
rate growth ratio.  Infinite diversity is represented by math.inf and
serialized as the string "inf" in curve CSV files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf


def g_function(m: int, n: int, i: int, bins: int) -> int:
    """Feedback amplification factor: sum of [(n-i+1)(m-i+1)]^l for l < L.

    Exact arbitrary-precision integer; values grow doubly exponentially in the
    feedback bit count, so convert to float with care.
    """
    if not 1 <= i <= m <= n:
        raise ValueError(f"need 1 <= i <= m <= n, got i={i}, m={m}, n={n}")
    if bins < 1:
        raise ValueError(f"bin count must be >= 1, got {bins}")
    base = (n - i + 1) * (m - i + 1)
    if base == 1:
        return bins
    return (base**bins - 1) // (base - 1)


def _check_r(m: int, r: float):
    if not 0 <= r <= m:
        raise ValueError(f"multiplexing gain must lie in [0, {m}], got {r}")


def d_no_csit(m: int, n: int, r: float) -> float:
    """Receiver-only-CSI tradeoff: piecewise linear through (k, (m-k)(n-k))."""
    _check_r(m, r)
    k = int(math.floor(r))
    if k == m:
        return 0.0
    d0 = (m - k) * (n - k)
    d1 = (m - k - 1) * (n - k - 1)
    return d0 + (r - k) * (d1 - d0)


def d_beamforming(m: int, n: int, r: float) -> float:
    """Spatial-only power control achieves exactly the no-CSIT curve."""
    return d_no_csit(m, n, r)


@dataclass(frozen=True)
class QuantizedPoint:
    envelope: float
    branches: dict  # quantization index i -> branch diversity at this r
    argmax: int


def d_quantized(m: int, n: int, bins: int, r: float) -> QuantizedPoint:
    """Quantized temporal power control: envelope over quantization indices.

    Branch i is live for r <= i; the active rate index j = max(1, ceil(r))
    picks which eigenvalue's near-origin law controls the outage, while the
    quantizer on eigenvalue i contributes its G factor unchanged.
    """
    _check_r(m, r)
    j = max(1, math.ceil(r))
    branches = {}
    best, best_i = -1.0, j
    for i in range(j, m + 1):
        d = (1.0 - r / i) * (n - j + 1) * (m - j + 1) * g_function(m, n, i, bins)
        branches[i] = d
        if d > best:
            best, best_i = d, i
    return QuantizedPoint(best, branches, best_i)


@dataclass(frozen=True)
class PerfectPoint:
    d: float  # math.inf, 0.0, or nan for the unresolved conjecture region
    status: str  # "infinite" | "unresolved-conjecture"


def d_perfect(m: int, n: int, r: float) -> PerfectPoint:
    """Optimal (joint temporal+spatial) power control with perfect CSIT."""
    _check_r(m, r)
    if r < m or (r == m and n > 2 * m):
        return PerfectPoint(INF, "infinite")
    # r = m with m <= n <= 2m: open region; conjectured 0 when r = m = n.
    return PerfectPoint(float("nan"), "unresolved-conjecture")


def d_temporal_perfect(m: int, n: int, r: float) -> float:
    """Equal power across antennas, total varying with the channel."""
    _check_r(m, r)
    if r < m:
        return INF
    return INF if n >= 2 * m else 0.0


def d_joint(m: int, n: int, bins: int, r: float, variant: str = "figure") -> float:
    """Joint rate+power control diversity (two-codebook construction).

    variant "printed": (1-r/i)(n-i+1)(m-i+1) G(m,n,i,L-1), which vanishes at
    integer r.  variant "figure": the same without the (1-r/i) factor for
    r > 0 -- the protected codebook carries zero multiplexing, so the rate
    split does not dilute its diversity -- and the pure power-control value at
    r = 0.  The two variants disagree at integer multiplexing gains; both are
    exposed because the question has no single established answer.
    """
    _check_r(m, r)
    if bins < 2:
        raise ValueError("joint rate+power control needs at least 2 bins")
    if variant not in ("printed", "figure"):
        raise ValueError(f"unknown variant {variant!r}")
    i = max(1, math.ceil(r))
    if variant == "printed":
        return (1.0 - r / i) * (n - i + 1) * (m - i + 1) * g_function(m, n, i, bins - 1)
    if r == 0:
        return d_quantized(m, n, bins, 0.0).envelope
    return float((n - i + 1) * (m - i + 1) * g_function(m, n, i, bins - 1))


@dataclass
class TradeoffCurve:
    scheme_label: str
    points: list  # (r, d, branch_i) tuples; d may be math.inf


def _format_d(d: float) -> str:
    if math.isinf(d):
        return "inf"
    if math.isnan(d):
        return "unresolved"
    return f"{d:.12g}"


def quantized_curve(m: int, n: int, bins: int, grid_points: int = 201) -> list:
    """Envelope plus one branch curve per quantization index (dashed family).

    At integer r the value belongs to the branch with j = r (the jump's
    closed-left convention), which ceil() delivers naturally.
    """
    rs = [m * t / (grid_points - 1) for t in range(grid_points)]
    curves = [TradeoffCurve("quantized", [])]
    branch_curves = {i: TradeoffCurve("quantized-branch", []) for i in range(1, m + 1)}
    for r in rs:
        pt = d_quantized(m, n, bins, r)
        curves[0].points.append((r, pt.envelope, pt.argmax))
        for i, d in pt.branches.items():
            branch_curves[i].points.append((r, d, i))
    curves.extend(branch_curves.values())
    return curves


def simple_curve(label: str, fn, m: int, grid_points: int = 201) -> TradeoffCurve:
    rs = [m * t / (grid_points - 1) for t in range(grid_points)]
    return TradeoffCurve(label, [(r, fn(r), 0) for r in rs])


def write_curve_csv(f, curves, header_lines=()) -> None:
    """Emit `r,d,branch_i,scheme` rows; d = "inf" marks infinite diversity."""
    for line in header_lines:
        f.write(f"# {line}\n")
    f.write("r,d,branch_i,scheme\n")
    for curve in curves:
        for r, d, branch in curve.points:
            f.write(f"{r:.12g},{_format_d(d)},{branch},{curve.scheme_label}\n")
