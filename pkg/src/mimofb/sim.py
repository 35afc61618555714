"""Monte Carlo outage engine: SNR sweeps, analytic sweeps, slope fits, figures.

Determinism contract: trials are split into fixed-size chunks; chunk (point_i,
chunk_i) draws from the substream keyed (seed, point_i, chunk_i) and results
reduce by summation in chunk order, so output bytes do not depend on the
worker count.  Below roughly 30 expected outage events per point the engine
switches to analytic evaluation where the scheme supports it (the deep-tail
CDF extension is what makes that possible).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backend, schemes
from .eigdist import EigDistribution, SmallestAnalytic, build_empirical
from .quantizer import design_equi_power, design_kkt, outage_analytic
from .randmat import AntennaConfig, substream

SWEEP_COLUMNS = ("snr_db", "rate_bits", "outage", "stderr", "trials",
                 "transmit_fraction", "no_tx_outage", "decode_outage", "mode")

MIN_OUTAGE_EVENTS = 30

# Substream namespaces (spawn keys) reserved by the engine.
_KEY_DIST = 0xD157
_KEY_CUT = 0xC07


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    cfg: AntennaConfig
    scheme: str
    snr_db: tuple
    trials: int = 10**6
    seed: int = 42
    mode: str = "mc"  # mc | analytic | both
    mux: float | None = None
    rate_bits: float | None = None
    bins: int = 2
    quant_index: int | None = None  # default: smallest eigenvalue (index m)
    decode_index: int | None = None
    method: str = "equi"  # equi | kkt
    dist_kind: str = "auto"  # auto | analytic | empirical
    dist_samples: int = 10**6
    alpha: float = 0.5
    threads: int = 1
    chunk: int = 1 << 16

    def __post_init__(self):
        if self.scheme not in ("no-csit", "beamforming", "temporal-perfect",
                               "optimal-perfect", "quantized", "joint"):
            raise SweepError(f"unknown scheme {self.scheme!r}")
        if self.mode not in ("mc", "analytic", "both"):
            raise SweepError(f"unknown mode {self.mode!r}")
        if len(self.snr_db) == 0 or any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise SweepError("SNR grid must be nonempty and strictly increasing")
        if (self.mux is None) == (self.rate_bits is None):
            raise SweepError("exactly one of mux and rate_bits must be set")
        if self.mode in ("mc", "both") and self.trials < 1000:
            raise SweepError("monte-carlo mode needs at least 1e3 trials")
        if self.method not in ("equi", "kkt"):
            raise SweepError(f"unknown design method {self.method!r}")


@dataclass(frozen=True)
class OutagePoint:
    snr_db: float
    rate_bits: float
    outage: float
    stderr: float
    trials: int
    transmit_fraction: float
    no_tx_outage: float
    decode_outage: float
    mode: str


def _rate_at(config: SweepConfig, p_av: float) -> float:
    if config.mux is not None:
        r = config.mux * math.log2(p_av)
        if r <= 0:
            raise SweepError(
                f"SNR too low for multiplexing {config.mux} (rate would be {r:.3g})")
        return r
    return float(config.rate_bits)


class _SchemeFactory:
    """Builds per-point scheme objects, sharing the eigenvalue law across points."""

    def __init__(self, config: SweepConfig):
        self.config = config
        self.cfg = config.cfg
        self.quant_index = config.quant_index or self.cfg.m
        self._dist = None
        self._decode_dist = None

    def dist(self) -> EigDistribution:
        if self._dist is None:
            self._dist = self._build(self.quant_index)
        return self._dist

    def decode_dist(self) -> EigDistribution:
        decode = self.config.decode_index or self.quant_index
        if decode == self.quant_index:
            return self.dist()
        if self._decode_dist is None:
            self._decode_dist = self._build(decode)
        return self._decode_dist

    def _build(self, index: int) -> EigDistribution:
        c = self.config
        kind = c.dist_kind
        if kind == "auto":
            kind = "analytic" if self.cfg.m == 1 else "empirical"
        if kind == "analytic":
            if index != self.cfg.m:
                raise SweepError("analytic law exists only for the smallest eigenvalue")
            return SmallestAnalytic(self.cfg)
        rng = substream(c.seed, _KEY_DIST, index)
        return build_empirical(self.cfg, index, c.dist_samples, rng, seed=c.seed)

    def scheme_at(self, point_i: int, p_av: float, rate: float):
        c, cfg = self.config, self.cfg
        name = c.scheme
        if name == "no-csit":
            return schemes.NoCsit(p_av, rate)
        if name == "beamforming":
            return schemes.Beamforming(p_av, rate)
        if name == "temporal-perfect":
            g0 = schemes.temporal_cutoff_budget(cfg, rate, p_av)
            return schemes.TemporalPerfect(p_av, rate, g0, cfg.tx, cfg.m)
        if name == "optimal-perfect":
            rng = substream(c.seed, _KEY_CUT, point_i)
            cut = schemes.calibrate_power_cut(cfg, rate, p_av,
                                              min(c.dist_samples, 200_000), rng)
            return schemes.OptimalPerfect(p_av, rate, cut, cfg.m)
        if name == "quantized":
            decode = c.decode_index or self.quant_index
            k = schemes.effective_k(cfg.tx, rate, decode)
            design = design_kkt if c.method == "kkt" else design_equi_power
            rep = design(self.dist(), c.bins, p_av, k, rate_bits=rate,
                         snr_db=10 * math.log10(p_av), m=cfg.m, n=cfg.n,
                         eig_index=self.quant_index)
            return schemes.QuantizedTemporal(p_av, rate, rep.quantizer, cfg.tx,
                                             cfg.m, self.quant_index, c.decode_index)
        if name == "joint":
            if c.mux is None:
                raise SweepError("joint scheme requires --mux")
            if c.bins < 2:
                raise SweepError("joint scheme needs at least 2 bins")
            idx = self.quant_index
            gth = schemes.joint_threshold(cfg, idx, c.alpha, p_av)
            k2 = schemes.effective_k(cfg.tx, 1.0, idx)
            rep = design_equi_power(self.dist(), c.bins - 1, (1 - c.alpha) * p_av,
                                    k2, rate_bits=1.0, m=cfg.m, n=cfg.n,
                                    eig_index=idx)
            return schemes.JointRatePower(p_av, c.alpha, c.mux, gth, rep.quantizer,
                                          cfg.tx, cfg.m, idx)
        raise SweepError(f"unknown scheme {name!r}")


def _mc_point(config: SweepConfig, scheme, point_i: int) -> tuple[int, int, float]:
    cfg = config.cfg
    width = 2 * cfg.tx * cfg.rx
    sizes = []
    left = config.trials
    while left > 0:
        sizes.append(min(config.chunk, left))
        left -= sizes[-1]

    def work(chunk_i: int) -> tuple[int, int, float]:
        rng = substream(config.seed, point_i, chunk_i)
        normals = rng.standard_normal((sizes[chunk_i], width))
        lam = backend.eig_batch(normals, cfg.tx, cfg.rx)
        no_tx, fail, txp = schemes.batch_outage(scheme, lam)
        return int(no_tx.sum()), int(fail.sum()), float(txp.sum())

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(work, range(len(sizes))))
    else:
        results = [work(i) for i in range(len(sizes))]
    n_no = sum(r[0] for r in results)
    n_fail = sum(r[1] for r in results)
    power = sum(r[2] for r in results)
    return n_no, n_fail, power


def _analytic_point(config: SweepConfig, factory: _SchemeFactory, scheme,
                    snr_db: float, rate: float) -> OutagePoint:
    if isinstance(scheme, schemes.QuantizedTemporal):
        out = outage_analytic(scheme.quantizer, factory.decode_dist())
        return OutagePoint(snr_db, rate, out, 0.0, 0, 1.0, 0.0, out, "analytic")
    if isinstance(scheme, schemes.TemporalPerfect):
        out = SmallestAnalytic(config.cfg).cdf(scheme.gamma0)
        return OutagePoint(snr_db, rate, out, 0.0, 0, 1.0 - out, out, 0.0, "analytic")
    raise SweepError(f"analytic mode unsupported for scheme {config.scheme!r}")


def run_sweep(config: SweepConfig) -> list:
    """Outage per SNR point; see the module docstring for the determinism rules."""
    factory = _SchemeFactory(config)
    points = []
    for point_i, snr_db in enumerate(config.snr_db):
        p_av = 10.0 ** (snr_db / 10.0)
        rate = _rate_at(config, p_av)
        scheme = factory.scheme_at(point_i, p_av, rate)
        if config.mode in ("mc", "both"):
            n_no, n_fail, _power = _mc_point(config, scheme, point_i)
            events = n_no + n_fail
            outage = events / config.trials
            # Below the statistical floor, switch to the analytic law -- but
            # only where it measures the same quantity: with one eigenmode the
            # decode event is exactly lambda < gamma0, while for m > 1 the
            # closed form F(gamma0) is the conservative proxy (joint decoding
            # across modes can rescue slots the proxy counts as lost).
            if config.mode == "mc" and events < MIN_OUTAGE_EVENTS and \
                    config.cfg.m == 1 and \
                    config.scheme in ("quantized", "temporal-perfect"):
                points.append(_analytic_point(config, factory, scheme, snr_db, rate))
            else:
                stderr = math.sqrt(max(outage * (1 - outage), 1e-300) / config.trials)
                points.append(OutagePoint(
                    snr_db, rate, outage, stderr, config.trials,
                    1.0 - n_no / config.trials, n_no / config.trials,
                    n_fail / config.trials, "mc"))
        if config.mode in ("analytic", "both"):
            points.append(_analytic_point(config, factory, scheme, snr_db, rate))
    return points


def mean_tx_power(config: SweepConfig, snr_db: float) -> tuple[float, float]:
    """Empirical mean transmit power at one sweep point (budget-compliance probe)."""
    idx = config.snr_db.index(snr_db)
    p_av = 10.0 ** (snr_db / 10.0)
    rate = _rate_at(config, p_av)
    factory = _SchemeFactory(config)
    scheme = factory.scheme_at(idx, p_av, rate)
    _no, _fail, power = _mc_point(config, scheme, idx)
    return power / config.trials, p_av


@dataclass(frozen=True)
class DiversityFit:
    d_hat: float
    ci95: float
    r2: float
    n_used: int
    n_zero: int
    infinite: bool = False


def fit_diversity(points, window: tuple) -> DiversityFit:
    """Least-squares slope of -log10(outage) against log10(p_av) in the window."""
    lo, hi = window
    sel = [p for p in points if lo <= p.snr_db <= hi]
    used = [p for p in sel if p.outage > 0.0]
    n_zero = len(sel) - len(used)
    if not sel:
        raise SweepError("no sweep points inside the fit window")
    if not used:
        return DiversityFit(math.inf, 0.0, 1.0, 0, n_zero, infinite=True)
    if len(used) < 4:
        raise SweepError(f"need >= 4 nonzero points in the window, got {len(used)}")
    x = np.array([p.snr_db / 10.0 for p in used])
    y = np.array([-math.log10(p.outage) for p in used])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(len(used) - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(np.sum((x - x.mean()) ** 2))
    ci = 1.96 * math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return DiversityFit(float(slope), ci, r2, len(used), n_zero)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)  # shortest exact round-trip representation
    return str(x)


def write_sweep_csv(f, points, header: dict | None = None) -> None:
    if header:
        for key, value in header.items():
            f.write(f"# {key}={value}\n")
    f.write(",".join(SWEEP_COLUMNS) + "\n")
    for p in points:
        f.write(",".join(_fmt(getattr(p, c)) for c in SWEEP_COLUMNS) + "\n")


def read_sweep_csv(f):
    """Parse a sweep CSV back into (points, header dict)."""
    header = {}
    points = []
    cols = None
    for line in f:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
            continue
        if cols is None:
            cols = line.split(",")
            continue
        vals = dict(zip(cols, line.split(",")))
        points.append(OutagePoint(
            snr_db=float(vals["snr_db"]), rate_bits=float(vals["rate_bits"]),
            outage=float(vals["outage"]), stderr=float(vals["stderr"]),
            trials=int(vals["trials"]),
            transmit_fraction=float(vals["transmit_fraction"]),
            no_tx_outage=float(vals["no_tx_outage"]),
            decode_outage=float(vals["decode_outage"]), mode=vals["mode"]))
    return points, header


# --- figure reproduction ---------------------------------------------------------


def _figure_header(figure_id: str, **extra) -> dict:
    header = {"command": "figure", "id": figure_id}
    header.update(extra)
    return header


def _fig3_curves(out_dir, seed: int):
    cfg = AntennaConfig(1, 1)
    dist = SmallestAnalytic(cfg)
    grid = tuple(float(s) for s in range(0, 21))
    k = 3.0
    paths = []
    curves = {"perfect": [], "equi": [], "kkt": [], "l1": []}
    for snr in grid:
        p = 10.0 ** (snr / 10.0)
        g0 = schemes.temporal_cutoff_budget(cfg, 2.0, p)
        curves["perfect"].append(OutagePoint(
            snr, 2.0, dist.cdf(g0), 0.0, 0, 1.0 - dist.cdf(g0), dist.cdf(g0), 0.0,
            "analytic"))
        for method, design in (("equi", design_equi_power), ("kkt", design_kkt)):
            rep = design(dist, 3, p, k, rate_bits=2.0, snr_db=snr)
            out = outage_analytic(rep.quantizer, dist)
            curves[method].append(OutagePoint(snr, 2.0, out, 0.0, 0, 1.0, 0.0, out,
                                              "analytic"))
        rep1 = design_equi_power(dist, 1, p, k, rate_bits=2.0, snr_db=snr)
        out1 = outage_analytic(rep1.quantizer, dist)
        curves["l1"].append(OutagePoint(snr, 2.0, out1, 0.0, 0, 1.0, 0.0, out1,
                                        "analytic"))
    for label, pts in curves.items():
        path = out_dir / f"fig3_{label}.csv"
        with open(path, "w", encoding="utf-8") as f:
            write_sweep_csv(f, pts, _figure_header("fig3", curve=label, seed=seed))
        paths.append(path)
    return paths


def _fig4_curves(out_dir, seed: int):
    from . import tradeoff

    paths = []
    for m, n in ((3, 4), (3, 5)):
        curves = tradeoff.quantized_curve(m, n, 2)
        curves.append(tradeoff.simple_curve("no-csit",
                                            lambda r: tradeoff.d_no_csit(m, n, r), m))
        path = out_dir / f"fig4_m{m}n{n}.csv"
        with open(path, "w", encoding="utf-8") as f:
            tradeoff.write_curve_csv(
                f, curves, ["command=figure", "id=fig4", f"m={m}", f"n={n}", "bins=2"])
        paths.append(path)
    return paths


def _fig5_curves(out_dir, seed: int):
    cfg = AntennaConfig(2, 1)
    dist = SmallestAnalytic(cfg)
    k = schemes.effective_k(2, 2.0, 1)
    paths = []
    for bins in (2, 3, 4):
        for method, design in (("equi", design_equi_power), ("kkt", design_kkt)):
            pts = []
            for snr in range(0, 21):
                p = 10.0 ** (snr / 10.0)
                rep = design(dist, bins, p, k, rate_bits=2.0, snr_db=float(snr),
                             m=1, n=2)
                out = outage_analytic(rep.quantizer, dist)
                pts.append(OutagePoint(float(snr), 2.0, out, 0.0, 0, 1.0, 0.0, out,
                                       "analytic"))
            path = out_dir / f"fig5a_L{bins}_{method}.csv"
            with open(path, "w", encoding="utf-8") as f:
                write_sweep_csv(f, pts, _figure_header(
                    "fig5a", bins=bins, method=method, seed=seed))
            paths.append(path)
    # Panel (b): local diversity slope of the suboptimal designs, high SNR.
    path = out_dir / "fig5b.csv"
    with open(path, "w", encoding="utf-8") as f:
        for key, value in _figure_header("fig5b", seed=seed).items():
            f.write(f"# {key}={value}\n")
        f.write("snr_db,d_local,bins\n")
        for bins in (3, 4):
            prev = None
            for snr in range(20, 61, 2):
                p = 10.0 ** (snr / 10.0)
                rep = design_equi_power(dist, bins, p, k, rate_bits=2.0,
                                        snr_db=float(snr), m=1, n=2)
                out = outage_analytic(rep.quantizer, dist)
                if prev is not None:
                    d_local = -(math.log10(out) - math.log10(prev[1])) / \
                        ((snr - prev[0]) / 10.0)
                    f.write(f"{(snr + prev[0]) / 2:.12g},{d_local:.12g},{bins}\n")
                prev = (snr, out)
    paths.append(path)
    return paths


def _fig6_curves(out_dir, seed: int):
    from . import tradeoff

    m, n, bins = 2, 3, 2
    paths = []
    grid = [t * m / 200 for t in range(201)]
    for variant in ("printed", "figure"):
        curve = tradeoff.TradeoffCurve(
            f"joint-{variant}",
            [(r, tradeoff.d_joint(m, n, bins, r, variant), max(1, math.ceil(r)))
             for r in grid])
        path = out_dir / f"fig6_joint_{variant}.csv"
        with open(path, "w", encoding="utf-8") as f:
            tradeoff.write_curve_csv(
                f, [curve], ["command=figure", "id=fig6", f"variant={variant}",
                             f"m={m}", f"n={n}", f"bins={bins}"])
        paths.append(path)
    curve = tradeoff.simple_curve("no-csit", lambda r: tradeoff.d_no_csit(m, n, r), m)
    path = out_dir / "fig6_no_csit.csv"
    with open(path, "w", encoding="utf-8") as f:
        tradeoff.write_curve_csv(f, [curve],
                                 ["command=figure", "id=fig6", "curve=no-csit"])
    paths.append(path)
    return paths


def reproduce_figure(figure_id: str, out_dir, seed: int = 42) -> list:
    """Emit the data files behind one of the published figures."""
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    builders = {
        "fig3": _fig3_curves,
        "fig4": _fig4_curves,
        "fig5a": _fig5_curves,
        "fig5b": _fig5_curves,
        "fig6": _fig6_curves,
    }
    if figure_id not in builders:
        raise SweepError(f"unknown figure id {figure_id!r}")
    return builders[figure_id](out_dir, seed)
