"""``focuslab`` command-line driver.

Subcommands ``simulate``, ``scan`` and ``wigner`` compute their tables in
memory, write them to the output directory, then write ``manifest.json``
with a sha256 checksum per file.  Exit codes: 0 success, 1 configuration
error, 2 numerical or runtime error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from focuslab import __version__, automaton, continuum, measures, tightbinding, wigner
from focuslab.config import ScenarioConfig, build_config, load_config
from focuslab.errors import ConfigError, NumericalConsistencyError
from focuslab.fields import LatticeField
from focuslab.numerics import bessel_radius

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
DEFAULT_SAMPLES = 400
CONTINUUM_SAMPLES = 200
CONTINUUM_X_NODES = 201
AUTOMATON_DEFAULT_STEPS = 60
SHEAR_SMALL_K = 0.2


@dataclass
class Table:
    name: str
    comment: str
    corner: str
    columns: list
    rows: list
    data: list


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def write_table(table: Table, directory: str, fmt: str) -> str:
    path = os.path.join(directory, f"{table.name}.{fmt}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            fh.write(f"# {table.comment}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([table.corner] + [_cell(c) for c in table.columns])
            for label, row in zip(table.rows, table.data):
                writer.writerow([_cell(label)] + [_cell(v) for v in row])
        else:
            doc = {
                "comment": table.comment,
                "corner": table.corner,
                "columns": [_json_value(c) for c in table.columns],
                "rows": [_json_value(r) for r in table.rows],
                "data": [[_json_value(v) for v in row] for row in table.data],
            }
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    return path


def _grid_table(name, comment, grid) -> Table:
    return Table(name, comment, "t", list(grid.positions), list(grid.times), grid.intensity.tolist())


def _describe(cfg: ScenarioConfig, **extra) -> str:
    parts = [f"model={cfg.model}"]
    parts += [f"{k}={v}" for k, v in extra.items()]
    return " ".join(parts)


def _time_grid(cfg: ScenarioConfig, n_half: int):
    samples = cfg.samples or DEFAULT_SAMPLES
    if cfg.t_max is not None:
        return np.linspace(0.0, cfg.t_max, samples)
    return tightbinding.default_time_grid(n_half, cfg.lam, samples)


def _single(cfg: ScenarioConfig, what: str):
    if cfg.n_range is not None and cfg.n_range[0] != cfg.n_range[1]:
        raise ConfigError(f"{what} takes a single N, not a range")
    if len(cfg.delta) != 1 and cfg.model == "automaton":
        raise ConfigError(f"{what} takes a single delta")
    return cfg.sizes()[0]


def cmd_simulate(cfg: ScenarioConfig, threads: int) -> tuple[list[Table], list[str]]:
    if cfg.model == "continuum":
        L = cfg.length
        t_max = cfg.t_max if cfg.t_max is not None else 0.1 * L * L
        ts = np.linspace(0.0, t_max, cfg.samples or CONTINUUM_SAMPLES)
        xs = np.linspace(-L, L, CONTINUUM_X_NODES)
        inten = np.abs(continuum.free_propagate_square(L, xs[None, :], ts[:, None])) ** 2
        check = continuum.convention_check(L)
        summary = Table("summary", _describe(cfg, L=L), "key", ["value"],
                        ["focusing_time", "constant", "convention_flag"],
                        [[check.constant * L * L], [check.constant], [check.flagged]])
        lines = [f"focusing time {check.constant * L * L:.6g} (constant {check.constant:.5f})"]
        if check.flagged:
            lines.append(f"convention flag: {check.note}")
        grid_table = Table("intensity", _describe(cfg, L=L, rows="t", columns="x"), "t",
                           list(xs), list(ts), inten.tolist())
        return [grid_table, summary], lines

    n = _single(cfg, "simulate")
    if cfg.model == "automaton":
        steps = int(cfg.t_max) if cfg.t_max is not None else AUTOMATON_DEFAULT_STEPS
        delta = cfg.delta[0]
        grid = automaton.evolve_square(n, delta, steps)
        series = measures.series_from_grid(grid.normalized_rows(), cfg.n0, n)
        meta = dict(N=n, delta=delta, n0=cfg.n0)
    else:
        times = _time_grid(cfg, n)
        if cfg.packets > 1:
            spec = tightbinding.PacketArraySpec(cfg.packets, n, cfg.spacing)
            grid = tightbinding.evolve_packet_array(spec, cfg.lam, times)
            meta = dict(N=n, packets=cfg.packets, spacing=spec.spacing, n0=cfg.n0)
        else:
            grid = tightbinding.evolve_square_tb(n, cfg.lam, times)
            meta = dict(N=n, n0=cfg.n0)
        meta["lambda"] = cfg.lam
        series = measures.series_from_grid(grid, cfg.n0, n)
    verdict = measures.detect_focusing(series) if len(series.values) >= 3 else None
    perm = Table("permanence", _describe(cfg, **meta, rows="t"), "t", ["permanence", "normalized"],
                 list(series.times), np.column_stack([series.values, series.normalized()]).tolist())
    tables = [_grid_table("intensity", _describe(cfg, **meta, rows="t", columns="site"), grid), perm]
    lines = []
    if verdict is not None:
        lines.append(f"focusing={verdict.focusing} t_peak={verdict.t_peak} "
                     f"normalized_peak={verdict.normalized_peak:.6g}")
    return tables, lines


def _map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_scan(cfg: ScenarioConfig, threads: int) -> tuple[list[Table], list[str]]:
    ns = cfg.sizes()
    columns = ["t_peak", "normalized_peak", "focusing"]
    if cfg.model == "automaton":
        steps = int(cfg.t_max) if cfg.t_max is not None else AUTOMATON_DEFAULT_STEPS
        pairs = [(d, n) for d in cfg.delta for n in ns]
        verdicts = _map(lambda p: measures.classify_automaton(p[1], p[0], steps, cfg.n0), pairs, threads)
        data = [[d, v.t_peak, v.normalized_peak, v.focusing] for (d, _), v in zip(pairs, verdicts)]
        table = Table("scan", _describe(cfg, n0=cfg.n0, steps=steps), "N", ["delta"] + columns,
                      [n for _, n in pairs], data)
        lines = [f"delta={d} N={n} focusing={v.focusing}" for (d, n), v in zip(pairs, verdicts)]
        return [table], lines
    if cfg.model != "tightbinding":
        raise ConfigError("scan supports the automaton and tightbinding models")
    grid = None
    if cfg.t_max is not None:
        grid = np.linspace(0.0, cfg.t_max, cfg.samples or DEFAULT_SAMPLES)
        rows = _map(lambda n: measures.scan_row(n, cfg.n0, cfg.lam, grid), ns, threads)
    else:
        samples = cfg.samples or DEFAULT_SAMPLES
        rows = _map(lambda n: measures.scan_row(
            n, cfg.n0, cfg.lam, tightbinding.default_time_grid(n, cfg.lam, samples)), ns, threads)
    result = measures.plateau_analysis(rows)
    table = Table("scan", _describe(cfg, n0=cfg.n0, **{"lambda": cfg.lam}), "N", columns,
                  [r.n for r in rows], [[r.t_peak, r.normalized_peak, r.focusing] for r in rows])
    summary = Table("summary", _describe(cfg), "key", ["value"],
                    ["critical_N", "first_plateau_N", "plateau", "inconclusive", "reason"],
                    [[result.critical_n], [result.first_plateau_n], [result.plateau],
                     [result.inconclusive], [result.reason]])
    if result.inconclusive:
        line = f"inconclusive: {result.reason}"
    else:
        line = (f"critical N = {result.critical_n} "
                f"(plateau {result.plateau:.6g} from N = {result.first_plateau_n})")
    return [table, summary], [line]


def cmd_wigner(cfg: ScenarioConfig, threads: int) -> tuple[list[Table], list[str]]:
    if cfg.model != "tightbinding":
        raise ConfigError("wigner needs the tightbinding model")
    n = _single(cfg, "wigner")
    times = []
    for item in cfg.times:
        times.append(measures.tb_focusing_time(n, cfg.lam, cfg.n0) if item == "focus" else float(item))
    k = wigner.default_k_grid(cfg.k_nodes)
    reach = n + bessel_radius(2 * abs(cfg.lam) * max(times))
    sites = np.arange(-reach, reach + 1)
    packet = LatticeField.square(n)
    small = np.abs(k) <= SHEAR_SMALL_K

    def one(t):
        return wigner.discrete_wigner(tightbinding.propagate(packet, cfg.lam, t), k, sites)

    grids = _map(one, times, threads)
    tables, lines, summary = [], [], []
    for i, (t, g) in enumerate(zip(times, grids)):
        meta = dict(N=n, t=format(t, ".17g"), rows="n", columns="k", **{"lambda": cfg.lam})
        tables.append(Table(f"wigner_{i}", _describe(cfg, **meta), "n", list(k), list(sites),
                            g.values.tolist()))
        row = [t, wigner.positive_fraction(g)]
        if cfg.shear:
            approx = wigner.shear_approximation(n, sites[:, None], k[None, :], t, cfg.lam)
            tables.append(Table(f"shear_{i}", _describe(cfg, **meta, approximation="shear"), "n",
                                list(k), list(sites), approx.tolist()))
            cmp = wigner.shear_discrepancy(g, n, t, cfg.lam, columns=small)
            row += [float(np.max(np.abs(g.values - approx))), cmp.pointwise]
        summary.append(row)
        lines.append(f"t={t:.6g} positive_fraction={row[1]:.4f}"
                     + (f" shear_small_k_rel={row[3]:.4f}" if cfg.shear else ""))
    columns = ["t", "positive_fraction"] + (["shear_max_abs", "shear_small_k_rel"] if cfg.shear else [])
    tables.append(Table("summary", _describe(cfg, N=n), "index", columns, list(range(len(times))),
                        summary))
    return tables, lines


COMMANDS = {"simulate": cmd_simulate, "scan": cmd_scan, "wigner": cmd_wigner}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="focuslab", description="Diffractive focusing of square wavepackets.")
    parser.add_argument("--version", action="version", version=f"focuslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--model", help="automaton, tightbinding or continuum")
        p.add_argument("--N", dest="N", help="packet half-width or range a..b")
        p.add_argument("--delta", help="automaton coupling, comma-separated for scans")
        p.add_argument("--lambda", dest="lam", help="tight-binding coupling")
        p.add_argument("--n0", help="permanence window half-width")
        p.add_argument("--L", dest="L", help="continuum packet length")
        p.add_argument("--tmax", help="final time (automaton: number of steps)")
        p.add_argument("--samples", help="number of time samples")
        p.add_argument("--packets", help="number of packets in an array")
        p.add_argument("--spacing", help="distance between packet centres")
        p.add_argument("--k-nodes", dest="k_nodes", help="momentum samples on the strip")
        p.add_argument("--times", help="Wigner times, comma-separated; 'focus' allowed")
        p.add_argument("--shear", help="write shear-approximation companions (true/false)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", help="csv or json")
        p.add_argument("--threads", help="worker threads (default: FOCUSLAB_THREADS or all cores)")
    return parser


def _overrides(args) -> dict:
    return {
        "model": args.model, "N": args.N, "delta": args.delta, "lambda": args.lam,
        "n0": args.n0, "L": args.L, "tmax": args.tmax, "samples": args.samples,
        "count": args.packets, "spacing": args.spacing, "k_nodes": args.k_nodes,
        "times": args.times, "shear": args.shear, "dir": args.out, "format": args.format,
        "threads": args.threads,
    }


def resolve_threads(cfg: ScenarioConfig) -> int:
    if cfg.threads is not None:
        return cfg.threads
    env = os.environ.get("FOCUSLAB_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"FOCUSLAB_THREADS must be an integer, got {env!r}") from None
        if value < 1:
            raise ConfigError("FOCUSLAB_THREADS must be positive")
        return value
    return os.cpu_count() or 1


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def run(argv=None) -> int:
    started = time.perf_counter()
    stamp = datetime.now(timezone.utc).isoformat()
    args = build_parser().parse_args(argv)
    overrides = _overrides(args)
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = build_config(overrides=overrides)
    threads = resolve_threads(cfg)
    tables, lines = COMMANDS[args.command](cfg, threads)

    os.makedirs(cfg.out, exist_ok=True)
    outputs = {}
    for table in tables:
        path = write_table(table, cfg.out, cfg.format)
        outputs[os.path.basename(path)] = _sha256(path)
    config_echo = {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.to_dict().items()}
    manifest = {
        "command": args.command,
        "version": __version__,
        "config": config_echo,
        "config_text": cfg.to_text(),
        "threads": threads,
        "started": stamp,
        "finished": datetime.now(timezone.utc).isoformat(),
        "duration_s": time.perf_counter() - started,
        "outputs": outputs,
    }
    with open(os.path.join(cfg.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    for line in lines:
        print(line)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except ConfigError as exc:
        print(f"focuslab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"focuslab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalConsistencyError, ArithmeticError, ValueError) as exc:
        print(f"focuslab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
