"""Command-line front end.

Every output file starts with `# key=value` lines carrying the fully resolved
configuration (seed included), so any result can be regenerated from its own
header.  Execution-only knobs (thread count, output paths) are deliberately
not part of the header: they do not affect the produced bytes.

SNR convention: --snr-db and the sweep grid are 10 log10(p_av) with unit noise
variance, so average power doubles as SNR.
"""

from __future__ import annotations

import math
import os
import sys
from pathlib import Path

import numpy as np

from . import schemes, sim, tradeoff
from .eigdist import EmpiricalTable, SmallestAnalytic, build_empirical
from .quantizer import design_equi_power, design_kkt, quantizer_to_json
from .randmat import AntennaConfig, substream

_EXCLUDE_FROM_HEADER = {"out", "out-dir", "threads", "config"}

# (key, type, default, help); key doubles as the --flag name and the config
# file key.  None defaults mean "required".
_SPECS = {
    "design-quantizer": [
        ("m", int, None, "transmit antenna count"),
        ("n", int, None, "receive antenna count"),
        ("eig-index", int, 0, "quantized eigenvalue, largest-first (0 = smallest)"),
        ("bins", int, None, "quantization bin count L"),
        ("snr-db", float, None, "average power in dB (10 log10 p_av, unit noise)"),
        ("rate-bits", float, None, "target rate R in bits/s/Hz"),
        ("method", str, "equi", "design method: equi | kkt"),
        ("dist", str, "auto", "eigenvalue law: auto | analytic | empirical"),
        ("samples", int, 10**6, "samples for an empirical law"),
        ("seed", int, 42, "seed for empirical sampling"),
        ("out", str, "", "output JSON path (default: stdout)"),
    ],
    "sweep": [
        ("scheme", str, None, "no-csit | beamforming | temporal-perfect | "
                              "optimal-perfect | quantized | joint"),
        ("m", int, None, "transmit antenna count"),
        ("n", int, None, "receive antenna count"),
        ("bins", int, 2, "quantizer bin count"),
        ("eig-index", int, 0, "quantized eigenvalue, largest-first (0 = smallest)"),
        ("decode-index", int, 0, "decode eigenvalue (0 = same as quantized)"),
        ("mux", float, math.nan, "multiplexing gain (rate = mux log2 p_av)"),
        ("rate-bits", float, math.nan, "fixed rate in bits/s/Hz"),
        ("snr-start", float, None, "first SNR point in dB"),
        ("snr-stop", float, None, "last SNR point in dB"),
        ("snr-step", float, 1.0, "grid step in dB"),
        ("trials", int, 10**6, "Monte Carlo trials per point"),
        ("seed", int, 42, "master seed"),
        ("mode", str, "mc", "mc | analytic | both"),
        ("method", str, "equi", "quantizer design: equi | kkt"),
        ("dist", str, "auto", "eigenvalue law: auto | analytic | empirical"),
        ("samples", int, 10**6, "samples for an empirical law"),
        ("alpha", float, 0.5, "joint scheme power split"),
        ("threads", int, 0, "worker threads (0 = hardware parallelism)"),
        ("out", str, "", "output CSV path (default: stdout)"),
    ],
    "tradeoff": [
        ("scheme", str, None, "no-csit | beamforming | quantized | perfect | "
                              "temporal-perfect | joint"),
        ("m", int, None, "transmit antenna count"),
        ("n", int, None, "receive antenna count"),
        ("bins", int, 2, "quantizer bin count"),
        ("joint-variant", str, "figure", "joint curve variant: printed | figure"),
        ("grid-points", int, 201, "multiplexing grid resolution"),
        ("out", str, "", "output CSV path (default: stdout)"),
    ],
    "fit": [
        ("in", str, None, "sweep CSV to fit"),
        ("window-start-db", float, None, "fit window start"),
        ("window-stop-db", float, None, "fit window stop"),
    ],
    "figure": [
        ("id", str, None, "fig3 | fig4 | fig5a | fig5b | fig6"),
        ("out-dir", str, "figures", "output directory"),
        ("seed", int, 42, "seed echoed into headers"),
    ],
    "cache": [
        ("build", bool, False, "build one empirical CDF table"),
        ("list", bool, False, "list cached tables"),
        ("clear", bool, False, "remove cached tables"),
        ("m", int, 0, "transmit antenna count"),
        ("n", int, 0, "receive antenna count"),
        ("eig-index", int, 0, "eigenvalue index (0 = smallest)"),
        ("samples", int, 10**6, "table sample count"),
        ("seed", int, 42, "sampling seed"),
    ],
}


class CliError(ValueError):
    pass


def _parse_value(key: str, typ, raw: str):
    if typ is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    try:
        return typ(raw)
    except ValueError:
        raise CliError(f"--{key}: invalid {typ.__name__} value {raw!r}") from None


def load_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected `key = value`")
            key, _, raw = line.partition("=")
            values[key.strip()] = raw.strip()
    return values


def _resolve(command: str, argv: list) -> dict:
    """Merge CLI flags over config-file values over defaults."""
    spec = {key: (typ, default) for key, typ, default, _ in _SPECS[command]}
    cli_vals = {}
    config_path = None
    i = 0
    while i < len(argv):
        tok = argv[i]
        if not tok.startswith("--"):
            raise CliError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if key == "help":
            _print_help(command)
            raise SystemExit(0)
        if key == "config":
            if i + 1 >= len(argv):
                raise CliError("--config needs a path")
            config_path = argv[i + 1]
            i += 2
            continue
        if key not in spec:
            raise CliError(f"unknown flag --{key} for {command}")
        typ, _default = spec[key]
        if typ is bool:
            cli_vals[key] = True
            i += 1
            continue
        if i + 1 >= len(argv):
            raise CliError(f"--{key} needs a value")
        cli_vals[key] = _parse_value(key, typ, argv[i + 1])
        i += 2

    file_vals = {}
    if config_path:
        for key, raw in load_config_file(config_path).items():
            if key in spec:
                file_vals[key] = _parse_value(key, spec[key][0], raw)
            elif key != "command":
                raise CliError(f"unknown config key {key!r} for {command}")

    resolved = {}
    for key, (typ, default) in spec.items():
        if key in cli_vals:
            resolved[key] = cli_vals[key]
        elif key in file_vals:
            resolved[key] = file_vals[key]
        elif default is None:
            raise CliError(f"missing required flag --{key}")
        else:
            resolved[key] = default
    return resolved


def _print_help(command: str | None = None):
    if command is None:
        print("usage: mimofb <command> [--flags]\n\ncommands:")
        for name in _SPECS:
            print(f"  {name}")
        print("\nSNR convention: --snr-db = 10 log10(p_av), unit noise variance.")
        return
    print(f"usage: mimofb {command} [--config file] ...")
    for key, typ, default, help_text in _SPECS[command]:
        d = "" if default is None else f" (default {default})"
        print(f"  --{key} <{typ.__name__}>: {help_text}{d}")


def _header(command: str, resolved: dict) -> dict:
    header = {"command": command}
    for key, value in resolved.items():
        if key in _EXCLUDE_FROM_HEADER:
            continue
        if isinstance(value, float) and math.isnan(value):
            continue
        header[key] = value
    return header


def _open_out(path: str):
    if path:
        return open(path, "w", encoding="utf-8"), True
    return sys.stdout, False


def cache_dir() -> Path:
    env = os.environ.get("MIMOFB_CACHE_DIR", "")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "mimofb"


def _cache_path(m: int, n: int, i: int, samples: int, seed: int) -> Path:
    return cache_dir() / f"eigdist_m{m}_n{n}_i{i}_s{samples}_seed{seed}.csv"


def _build_dist(cfg: AntennaConfig, index: int, kind: str, samples: int, seed: int):
    if kind == "auto":
        kind = "analytic" if cfg.m == 1 else "empirical"
    if kind == "analytic":
        if index != cfg.m:
            raise CliError("analytic law exists only for the smallest eigenvalue")
        return SmallestAnalytic(cfg), "analytic"
    if kind != "empirical":
        raise CliError(f"unknown dist kind {kind!r}")
    path = _cache_path(cfg.m, cfg.n, index, samples, seed)
    if path.exists():
        return EmpiricalTable.load_csv(path), "empirical"
    dist = build_empirical(cfg, index, samples, substream(seed, 0xD157, index),
                           seed=seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    dist.save_csv(path)
    return dist, "empirical"


def _cmd_design_quantizer(resolved: dict) -> int:
    cfg = AntennaConfig(resolved["m"], resolved["n"])
    index = resolved["eig-index"] or cfg.m
    if not 1 <= index <= cfg.m:
        raise CliError(f"--eig-index must lie in [1, {cfg.m}]")
    p_av = 10.0 ** (resolved["snr-db"] / 10.0)
    k = schemes.effective_k(cfg.tx, resolved["rate-bits"], index)
    dist, kind = _build_dist(cfg, index, resolved["dist"], resolved["samples"],
                             resolved["seed"])
    design = design_kkt if resolved["method"] == "kkt" else design_equi_power
    rep = design(dist, resolved["bins"], p_av, k, rate_bits=resolved["rate-bits"],
                 snr_db=resolved["snr-db"], m=cfg.m, n=cfg.n, eig_index=index)
    residual_max = max(abs(r) for r in rep.residuals) if rep.residuals else 0.0
    doc = quantizer_to_json(rep.quantizer, dist_kind=kind,
                            dist_samples=resolved["samples"] if kind == "empirical" else 0,
                            dist_seed=resolved["seed"] if kind == "empirical" else 0,
                            avg_power_used=rep.avg_power_used,
                            residual_max=residual_max,
                            config=_header("design-quantizer", resolved))
    out, close = _open_out(resolved["out"])
    try:
        out.write(doc + "\n")
    finally:
        if close:
            out.close()
    return 0


def _cmd_sweep(resolved: dict) -> int:
    cfg = AntennaConfig(resolved["m"], resolved["n"])
    mux = None if math.isnan(resolved["mux"]) else resolved["mux"]
    rate = None if math.isnan(resolved["rate-bits"]) else resolved["rate-bits"]
    if (mux is None) == (rate is None):
        raise CliError("exactly one of --mux and --rate-bits must be given")
    start, stop, step = (resolved["snr-start"], resolved["snr-stop"],
                         resolved["snr-step"])
    if step <= 0 or stop < start:
        raise CliError("need snr-start <= snr-stop and a positive snr-step")
    grid = tuple(float(s) for s in np.arange(start, stop + step / 2, step))
    threads = resolved["threads"] or (os.cpu_count() or 1)
    config = sim.SweepConfig(
        cfg=cfg, scheme=resolved["scheme"], snr_db=grid, trials=resolved["trials"],
        seed=resolved["seed"], mode=resolved["mode"], mux=mux, rate_bits=rate,
        bins=resolved["bins"], quant_index=resolved["eig-index"] or None,
        decode_index=resolved["decode-index"] or None, method=resolved["method"],
        dist_kind=resolved["dist"], dist_samples=resolved["samples"],
        alpha=resolved["alpha"], threads=threads)
    points = sim.run_sweep(config)
    out, close = _open_out(resolved["out"])
    try:
        sim.write_sweep_csv(out, points, _header("sweep", resolved))
    finally:
        if close:
            out.close()
    return 0


def _cmd_tradeoff(resolved: dict) -> int:
    cfg = AntennaConfig(resolved["m"], resolved["n"])
    m, n = cfg.m, cfg.n
    bins = resolved["bins"]
    scheme = resolved["scheme"]
    grid_points = resolved["grid-points"]
    if scheme == "quantized":
        curves = tradeoff.quantized_curve(m, n, bins, grid_points)
    elif scheme in ("no-csit", "beamforming"):
        curves = [tradeoff.simple_curve(scheme,
                                        lambda r: tradeoff.d_no_csit(m, n, r),
                                        m, grid_points)]
    elif scheme == "temporal-perfect":
        curves = [tradeoff.simple_curve(scheme,
                                        lambda r: tradeoff.d_temporal_perfect(m, n, r),
                                        m, grid_points)]
    elif scheme == "perfect":
        curves = [tradeoff.simple_curve(scheme,
                                        lambda r: tradeoff.d_perfect(m, n, r).d,
                                        m, grid_points)]
    elif scheme == "joint":
        variant = resolved["joint-variant"]
        curves = [tradeoff.simple_curve(
            f"joint-{variant}",
            lambda r: tradeoff.d_joint(m, n, bins, r, variant), m, grid_points)]
    else:
        raise CliError(f"unknown tradeoff scheme {scheme!r}")
    out, close = _open_out(resolved["out"])
    try:
        header = _header("tradeoff", resolved)
        tradeoff.write_curve_csv(out, curves,
                                 [f"{k}={v}" for k, v in header.items()])
    finally:
        if close:
            out.close()
    return 0


def _cmd_fit(resolved: dict) -> int:
    with open(resolved["in"], "r", encoding="utf-8") as f:
        points, _header_in = sim.read_sweep_csv(f)
    fit = sim.fit_diversity(points, (resolved["window-start-db"],
                                     resolved["window-stop-db"]))
    if fit.infinite:
        print("infinite diversity indicated (all in-window outages are zero)")
        return 0
    print(f"d_hat = {fit.d_hat:.3f}")
    print(f"ci95 = {fit.ci95:.3f}")
    print(f"r2 = {fit.r2:.6f}")
    print(f"points_used = {fit.n_used} ({fit.n_zero} zero-outage excluded)")
    return 0


def _cmd_figure(resolved: dict) -> int:
    paths = sim.reproduce_figure(resolved["id"], resolved["out-dir"],
                                 seed=resolved["seed"])
    for p in paths:
        print(p)
    return 0


def _cmd_cache(resolved: dict) -> int:
    chosen = sum(bool(resolved[k]) for k in ("build", "list", "clear"))
    if chosen != 1:
        raise CliError("cache needs exactly one of --build, --list, --clear")
    base = cache_dir()
    if resolved["list"]:
        if base.is_dir():
            for path in sorted(base.glob("eigdist_*.csv")):
                with open(path, "r", encoding="utf-8") as f:
                    print(f"{path}: {f.readline().strip()}")
        return 0
    if resolved["clear"]:
        if base.is_dir():
            for path in sorted(base.glob("eigdist_*.csv")):
                path.unlink()
                print(f"removed {path}")
        return 0
    if not (resolved["m"] and resolved["n"]):
        raise CliError("cache --build needs --m and --n")
    cfg = AntennaConfig(resolved["m"], resolved["n"])
    index = resolved["eig-index"] or cfg.m
    dist, _ = _build_dist(cfg, index, "empirical", resolved["samples"],
                          resolved["seed"])
    print(_cache_path(cfg.m, cfg.n, index, dist.samples, resolved["seed"]))
    return 0


_COMMANDS = {
    "design-quantizer": _cmd_design_quantizer,
    "sweep": _cmd_sweep,
    "tradeoff": _cmd_tradeoff,
    "fit": _cmd_fit,
    "figure": _cmd_figure,
    "cache": _cmd_cache,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help", "help"):
        _print_help()
        return 0
    command = argv[0]
    if command not in _COMMANDS:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        _print_help()
        return 2
    try:
        resolved = _resolve(command, argv[1:])
        return _COMMANDS[command](resolved)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
