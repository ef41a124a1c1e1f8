"""Command-line driver: run a configured experiment and write CSV/JSON results.

Usage::

    onsager-scars --config run.ini --out results/ [--seed 7] [--experiment dynamics] [--threads 2]

Each run writes its data files, a ``provenance.json`` with the resolved
configuration, and gnuplot-ready ``plot_*.csv`` tables.  Failures produce
``error.json`` (when the output directory is writable) plus the same report
on stderr, and a nonzero exit status.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, InitialState
from .dynamics import default_time_grid, ee_trace, fidelity_trace, product_state, random_state, revival_period
from .eigensolve import diagonalize, level_spacing_stats, reference_pdf
from .entanglement import (ee_scatter, observable_expectation, one_magnon_states, page_value,
                           scar_ee_closed_form, tower_candidates)
from .models import build_h_s, substream
from .tensornet import coherent_state, scar_tower, two_param_state
from .verify import run_checks

__all__ = ["ExperimentRecord", "DeskScaleExceeded", "run", "emit_plot_data", "main"]

log = logging.getLogger("onsager_scars")

DESK_SCALE_LIMIT = 2**20


class DeskScaleExceeded(RuntimeError):
    pass


@dataclass
class ExperimentRecord:
    """Tables produced by one run; ``tables`` maps file stem to (header, rows)."""

    config: ExperimentConfig
    tables: dict[str, tuple[list[str], list[list[Any]]]] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0
    ok: bool = True


# -- helpers ------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.16e" % float(x)
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _guard(cfg: ExperimentConfig) -> None:
    if cfg.n**cfg.L > DESK_SCALE_LIMIT:
        raise DeskScaleExceeded(f"desk-scale exceeded: n^L = {cfg.n**cfg.L} > {DESK_SCALE_LIMIT}")


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", text).strip("_")


def build_initial_state(desc: InitialState, cfg: ExperimentConfig) -> np.ndarray:
    n, L = cfg.n, cfg.L
    if desc.kind == "coherent":
        psi = coherent_state(n, desc.params[0], L)
    elif desc.kind == "two_param":
        if n != 2:
            raise ConfigError("two-parameter coherent states exist for n = 2 only")
        psi = two_param_state(desc.params[0], desc.params[1], L)
    elif desc.kind == "tower":
        psi = scar_tower(n, L, desc.params[0])
        if not psi.any():
            raise ConfigError(f"tower({desc.params[0]}) vanishes for n={n}, L={L}")
    elif desc.kind == "product":
        label = desc.params[0]
        if len(label) != L or any(int(ch) >= n for ch in label):
            raise ConfigError(f"product state {label!r} does not fit n={n}, L={L}")
        psi = product_state(label, n)
    elif desc.kind == "random":
        psi = random_state(n**L, substream(cfg.seed, "random_state"))
    else:  # pragma: no cover - parse_initial_state rejects other kinds
        raise ConfigError(f"unknown initial state {desc.kind!r}")
    return psi / np.linalg.norm(psi)


# -- experiments ----------------------------------------------------------------


def _levelstats(cfg: ExperimentConfig, record: ExperimentRecord) -> None:
    _guard(cfg)

    def one(r: int):
        H = build_h_s(cfg.model_spec(r))
        d = diagonalize(H, sector=cfg.sector, vectors=False)
        return d.eigenvalues, level_spacing_stats(d.eigenvalues, cfg.window, bins=cfg.bins)

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        results = list(pool.map(one, range(cfg.realizations)))
    spectrum, spacings, ratios = [], [], []
    for r, (eigs, st) in enumerate(results):
        spectrum += [[r, i, e] for i, e in enumerate(eigs)]
        spacings += [[r, s] for s in st.spacings]
        ratios += [[r, x] for x in st.r_values]
    record.tables["spectrum"] = (["realization", "index", "eigenvalue"], spectrum)
    record.tables["spacings"] = (["realization", "s"], spacings)
    record.tables["r_values"] = (["realization", "r"], ratios)
    per = [st.mean_r for _, st in results]
    record.summary.update(mean_r=float(np.mean(per)), mean_r_per_realization=per,
                          discarded_spacings=[st.discarded for _, st in results],
                          dimension=len(results[0][0]), sector=cfg.sector)


def _ee_scatter(cfg: ExperimentConfig, record: ExperimentRecord) -> None:
    _guard(cfg)
    d = diagonalize(build_h_s(cfg.model_spec()))
    cands = tower_candidates(cfg.n, cfg.L)
    if cfg.n == 3:
        cands += one_magnon_states(cfg.n, cfg.L)
    points = ee_scatter(d, cfg.cut, cands, cfg.overlap_threshold)
    record.tables["ee_scatter"] = (["energy", "entropy", "scar_tag", "overlap"],
                                   [[p.energy, p.entropy, p.scar_tag, p.overlap] for p in points])
    tagged = [p for p in points if p.scar_tag != "none"]
    record.summary.update(page_value=page_value(cfg.L, cfg.n), tagged=len(tagged),
                          max_tagged_entropy=max((p.entropy for p in tagged), default=None),
                          median_entropy=float(np.median([p.entropy for p in points])))
    if cfg.n == 2:
        values = observable_expectation(d)
        tags = {p.index: p.scar_tag for p in points}
        record.tables["observable"] = (["index", "energy", "expectation", "scar_tag"],
                                       [[i, d.eigenvalues[i], v, tags[i]] for i, v in enumerate(values)])


def _dynamics(cfg: ExperimentConfig, record: ExperimentRecord) -> None:
    _guard(cfg)
    if not cfg.initial_states:
        raise ConfigError("dynamics needs at least one initial state")
    if cfg.t_max is None:
        if cfg.h == 0:
            raise ConfigError("t_max is required when h = 0")
        times = default_time_grid(cfg.n, cfg.h, cfg.time_points)
    else:
        times = np.linspace(0.0, cfg.t_max, cfg.time_points)
    states = [(str(s), build_initial_state(s, cfg)) for s in cfg.initial_states]
    d = diagonalize(build_h_s(cfg.model_spec()))
    for label, psi in states:
        f = fidelity_trace(psi, d, times).fidelity
        e = ee_trace(psi, d, times, cfg.cut).entropy
        stem = _slug(label)
        record.tables[f"fidelity_{stem}"] = (["t", "fidelity"], list(zip(times, f)))
        record.tables[f"entropy_{stem}"] = (["t", "entropy"], list(zip(times, e)))
    if cfg.h != 0:
        record.summary["revival_period"] = revival_period(cfg.n, cfg.h)
    record.summary["page_value"] = page_value(cfg.L, cfg.n)


def _closed_form(cfg: ExperimentConfig, record: ExperimentRecord) -> None:
    rows = []
    for L in cfg.closed_form_sizes:
        c = scar_ee_closed_form(L)
        rows.append([L, L // 4, c.entropy, c.bound, c.normalization])
    record.tables["closed_form"] = (["L", "k", "entropy", "bound", "normalization"], rows)


def _verify(cfg: ExperimentConfig, record: ExperimentRecord) -> None:
    results = run_checks()
    record.tables["verify"] = (["check", "value", "tolerance", "passed"],
                               [[r.name, r.value, r.tolerance, r.passed] for r in results])
    record.ok = all(r.passed for r in results)
    record.summary["failed"] = [r.name for r in results if not r.passed]


_RUNNERS = {"levelstats": _levelstats, "ee_scatter": _ee_scatter, "dynamics": _dynamics,
            "closed_form_ee": _closed_form, "verify": _verify}


def emit_plot_data(record: ExperimentRecord) -> dict[str, tuple[list[str], list[list[Any]]]]:
    """Columnar tables, one per figure panel."""
    cfg, out = record.config, {}
    tables = record.tables
    if "spacings" in tables:
        s = np.array([row[1] for row in tables["spacings"][1]])
        edges = np.linspace(0.0, 4.0, cfg.bins + 1)
        hist, _ = np.histogram(s, bins=edges)
        centers = 0.5 * (edges[1:] + edges[:-1])
        density = hist / (len(s) * (edges[1] - edges[0]))
        out["plot_levelstats"] = (["s", "density", "poisson", "wigner_dyson"],
                                  [[c, p, reference_pdf("poisson", c), reference_pdf("wigner_dyson", c)]
                                   for c, p in zip(centers, density)])
    if "ee_scatter" in tables:
        out["plot_ee_scatter"] = (["energy", "entropy", "scar_tag"], [row[:3] for row in tables["ee_scatter"][1]])
    for name in tables:
        if name.startswith("fidelity_"):
            stem = name[len("fidelity_"):]
            fid = tables[name][1]
            ent = tables[f"entropy_{stem}"][1]
            out[f"plot_dynamics_{stem}"] = (["t", "fidelity", "entropy"],
                                            [[t, f, e] for (t, f), (_, e) in zip(fid, ent)])
    return out


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> ExperimentRecord:
    """Execute one experiment and write its files into ``out_dir``."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    record = ExperimentRecord(cfg)
    start = time.perf_counter()
    _RUNNERS[cfg.kind](cfg, record)
    record.wall_time = time.perf_counter() - start
    written = []
    for name, (header, rows) in {**record.tables, **emit_plot_data(record)}.items():
        write_csv(out / f"{name}.csv", header, rows)
        written.append(f"{name}.csv")
    provenance = {
        "library": "onsager_scars",
        "version": __version__,
        "experiment": cfg.kind,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "config_ini": cfg.to_ini(),
        "wall_time_seconds": record.wall_time,
        "outputs": sorted(written),
        "summary": record.summary,
        "status": "ok" if record.ok else "failed",
    }
    (out / "provenance.json").write_text(json.dumps(provenance, indent=2, default=float) + "\n",
                                         encoding="utf-8")
    return record


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="onsager-scars", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="INI experiment configuration")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.add_argument("--experiment", choices=sorted(_RUNNERS), help="experiment kind (overrides the config)")
    p.add_argument("--threads", type=int, help="worker threads for independent realizations")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _report_error(exc: Exception, out: Path | None, code: str) -> None:
    report = {"status": "error", "error": code, "type": type(exc).__name__, "message": str(exc)}
    text = json.dumps(report, indent=2)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n", encoding="utf-8")
        except OSError:
            pass


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = args.out
    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
        overrides = {k: v for k, v in (("seed", args.seed), ("kind", args.experiment),
                                       ("threads", args.threads)) if v is not None}
        if out is not None:
            overrides["output_dir"] = str(out)
        cfg = replace(cfg, **overrides)
        out = Path(cfg.output_dir)
        record = run(cfg, out)
    except DeskScaleExceeded as exc:
        _report_error(exc, out, "desk_scale_exceeded")
        return 3
    except (ConfigError, OSError) as exc:
        _report_error(exc, out, "invalid_config")
        return 2
    except ValueError as exc:
        _report_error(exc, out, "invalid_input")
        return 2
    if not record.ok:
        log.error("checks failed: %s", ", ".join(record.summary.get("failed", [])))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
