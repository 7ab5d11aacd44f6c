"""Batch driver for verification campaigns.

Usage::

    omcert COMMAND [--config PATH] [--out DIR] [--seed INT]
                   [--quad-order INT] [--grid-radius FLOAT] [--jobs INT]

Commands: split-matrix, mollify-1d, mollify-2d, check-pr, proj1, report.
Exit status is 0 when every certificate passes, 1 when any fails and 2 on a
usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .core import Grid, ParameterError
from .families import FAMILIES, default_corpus_1d, default_corpus_2d, make_family, product
from .kernel import KernelParams
from .quadrature import QuadratureSettings
from .sequence_split import PatternMatrix, WeightedMatrix, pattern_corpus, read_matrix_csv, split
from .smoothing import QUAD_1D, QUAD_2D, assemble_1d, assemble_2d
from .spectra import FiniteLinearSpectrum, SpectrumDescriptor, check_pr_condition, proj1_finite

SCHEMA_VERSION = "1"
COMMANDS = ("split-matrix", "mollify-1d", "mollify-2d", "check-pr", "proj1", "report")
CSV_HEADER = ["x", "alpha", "required", "achieved", "slack", "pass"]

log = logging.getLogger("omcert")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class RunConfig:
    command: str
    out: Path
    seed: int = 0
    grid: dict = field(default_factory=dict)
    quadrature: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: {"slack": 1e-6})
    corpus: list | None = None
    corpus_2d: list | None = None
    n: list | None = None
    matrices: dict = field(default_factory=dict)
    spectra: dict = field(default_factory=dict)
    check_pr: dict = field(default_factory=dict)
    kernel: dict = field(default_factory=dict)
    jobs: int = 1

    @property
    def slack(self) -> float:
        return float(self.tolerances.get("slack", 1e-6))

    def grid_for(self, dim: int) -> Grid:
        return Grid.symmetric(
            dim,
            radius=float(self.grid.get("radius", 20.0)),
            count=self.grid.get("count" if dim == 1 else "count_2d"),
            spacing=self.grid.get("spacing", "uniform"),
        )

    def kernel_for(self, dim: int) -> KernelParams | None:
        """Explicit kernel override, or ``None`` for the automatic choice."""
        if not self.kernel:
            return None
        return KernelParams(float(self.kernel["eps"]), float(self.kernel["mu"]), dim)

    def quad_for(self, dim: int) -> QuadratureSettings:
        base = QUAD_1D if dim == 1 else QUAD_2D
        q = self.quadrature
        return QuadratureSettings(
            kernel_order=q.get("kernel_order", base.kernel_order),
            panel_width=float(q.get("panel_width" if dim == 1 else "panel_width_2d", base.panel_width)),
            panel_order=int(q.get("panel_order" if dim == 1 else "panel_order_2d", base.panel_order)),
        )


_KNOWN_KEYS = {
    "schema_version", "seed", "grid", "quadrature", "tolerances", "corpus", "corpus_2d",
    "n", "matrices", "spectra", "check_pr", "kernel",
}


def load_config(command: str, args: argparse.Namespace) -> RunConfig:
    raw: dict[str, Any] = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be a JSON object")
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"config: unknown field(s) {', '.join(unknown)}")
    version = str(raw.get("schema_version", SCHEMA_VERSION))
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION!r}, got {version!r}")
    cfg = RunConfig(
        command=command,
        out=Path(args.out),
        seed=int(raw.get("seed", 0)),
        grid=dict(raw.get("grid", {})),
        quadrature=dict(raw.get("quadrature", {})),
        tolerances={"slack": 1e-6, **raw.get("tolerances", {})},
        corpus=raw.get("corpus"),
        corpus_2d=raw.get("corpus_2d"),
        n=raw.get("n"),
        matrices=dict(raw.get("matrices", {})),
        spectra=dict(raw.get("spectra", {})),
        check_pr=dict(raw.get("check_pr", {})),
        kernel=dict(raw.get("kernel", {})),
        jobs=max(1, int(args.jobs)),
    )
    if args.seed is not None:
        cfg.seed = args.seed
    if args.quad_order is not None:
        cfg.quadrature["kernel_order"] = args.quad_order
    if args.grid_radius is not None:
        cfg.grid["radius"] = args.grid_radius
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    for key, value in cfg.tolerances.items():
        if not isinstance(value, (int, float)) or value <= 0:
            raise ConfigError(f"tolerances.{key}: must be a positive number")
    radius = cfg.grid.get("radius", 20.0)
    if not isinstance(radius, (int, float)) or radius <= 0:
        raise ConfigError("grid.radius: must be positive")
    if cfg.grid.get("spacing", "uniform") not in ("uniform", "geometric", "mixed"):
        raise ConfigError("grid.spacing: must be uniform, geometric or mixed")
    order = cfg.quadrature.get("kernel_order")
    if order is not None and (not isinstance(order, int) or order < 2):
        raise ConfigError("quadrature.kernel_order: must be an integer >= 2")
    if cfg.n is not None and (
        not isinstance(cfg.n, list) or not all(isinstance(v, int) and v >= 0 for v in cfg.n)
    ):
        raise ConfigError("n: must be a list of nonnegative integers")
    if cfg.kernel:
        try:
            cfg.kernel_for(1)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"kernel: needs positive 'eps' and nonnegative 'mu' ({exc})") from None
    for idx, entry in enumerate(cfg.corpus or []):
        _family_from_entry(entry, f"corpus[{idx}]")
    for idx, entry in enumerate(cfg.corpus_2d or []):
        _function_2d(entry, f"corpus_2d[{idx}]")


def _family_from_entry(entry, where: str):
    if not isinstance(entry, dict) or "family" not in entry:
        raise ConfigError(f"{where}: expected an object with a 'family' field")
    name = entry["family"]
    if name not in FAMILIES:
        raise ConfigError(f"{where}.family: unknown test-function family {name!r}")
    try:
        return make_family(name, *entry.get("params", []))
    except TypeError as exc:
        raise ConfigError(f"{where}.params: {exc}") from None


def _function_2d(entry, where: str):
    terms = entry.get("terms") if isinstance(entry, dict) else None
    if not terms:
        raise ConfigError(f"{where}: expected an object with a nonempty 'terms' list")
    out = None
    for t, term in enumerate(terms):
        factors = term.get("factors", [])
        if len(factors) != 2:
            raise ConfigError(f"{where}.terms[{t}].factors: need exactly two factors")
        fs = [_family_from_entry(fac, f"{where}.terms[{t}].factors[{k}]") for k, fac in enumerate(factors)]
        piece = product(*fs, coef=float(term.get("coef", 1.0)))
        out = piece if out is None else out + piece
    return out


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")[:60]


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _pmap(cfg: RunConfig, fn, items) -> list:
    if cfg.jobs == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- commands


def _matrix_corpus(cfg: RunConfig) -> list[PatternMatrix]:
    spec = cfg.matrices
    if spec.get("csv"):
        if "M" not in spec or "p" not in spec:
            raise ConfigError("matrices: CSV input needs the declared exponents 'p' and 'M'")
        return [PatternMatrix(read_matrix_csv(p), int(spec["p"]), int(spec["M"])) for p in spec["csv"]]
    count = int(spec.get("count", 100))
    if spec.get("zero"):
        sizes = [(s, s) for s in range(1, count + 1)]
        return [PatternMatrix(WeightedMatrix(np.zeros(shape)), 0, 0) for shape in sizes]
    return pattern_corpus(
        count,
        cfg.seed,
        max_size=int(spec.get("max_size", 50)),
        max_p=int(spec.get("max_p", 3)),
        max_q=int(spec.get("max_q", 3)),
        min_p=int(spec.get("min_p", 0)),
    )


def cmd_split_matrix(cfg: RunConfig) -> list[dict]:
    corpus = _matrix_corpus(cfg)
    ns = cfg.n if cfg.n is not None else [0, 1, 2, 3]
    include_parts = bool(cfg.matrices.get("include_parts", False))

    def run(item):
        idx, sample = item
        certs = [split(sample.matrix, n, sample.growth, k) for n in ns for k in (n + 1, n + 2, n + 3)]
        return idx, sample, certs

    results = _pmap(cfg, run, list(enumerate(corpus)))
    summaries, rows = [], []
    for idx, sample, certs in results:
        payload = {
            "kind": "split_batch",
            "index": idx,
            "law": {"p": sample.p, "q": sample.q, "shape": list(sample.matrix.shape)},
            "certificates": [c.to_dict(include_parts=include_parts) for c in certs],
            "passed": all(c.passed for c in certs),
        }
        _write_json(cfg.out / "split" / f"matrix_{idx:03d}.json", payload)
        summaries.append({"name": f"matrix_{idx:03d}", "passed": payload["passed"]})
        for c in certs:
            rows.append([idx, c.n, c.m, c.M, c.k, c.K, repr(c.c), repr(c.z_norm), repr(c.y_norm), repr(c.y_bound), c.passed])
    _write_csv(
        cfg.out / "split" / "summary.csv",
        ["matrix", "n", "m", "M", "k", "K", "c", "z_norm", "y_norm", "y_bound", "pass"],
        rows,
    )
    return summaries


def _mollify(cfg: RunConfig, dim: int) -> list[dict]:
    if dim == 1:
        corpus = [_family_from_entry(e, f"corpus[{i}]") for i, e in enumerate(cfg.corpus)] if cfg.corpus else default_corpus_1d()
    else:
        corpus = (
            [_function_2d(e, f"corpus_2d[{i}]") for i, e in enumerate(cfg.corpus_2d)]
            if cfg.corpus_2d
            else default_corpus_2d()
        )
    ns = cfg.n if cfg.n is not None else [1, 2]
    if any(n < 1 for n in ns):
        raise ConfigError("n: the reconstruction needs n >= 1")
    grid = cfg.grid_for(dim)
    quad = cfg.quad_for(dim)
    folder = cfg.out / f"mollify_{dim}d"

    def run(item):
        idx, f = item
        out = []
        for n in ns:
            if dim == 1:
                res = assemble_1d(f, n, f.growth, grid, kp=cfg.kernel_for(1), slack=cfg.slack, quad=quad)
            else:
                res = assemble_2d(
                    f, n, f.growth, grid, kp=cfg.kernel_for(2), slack=cfg.slack, quad=quad, quad_1d=cfg.quad_for(1)
                )
            out.append(res)
        return idx, f, out

    summaries = []
    for idx, f, results in _pmap(cfg, run, list(enumerate(corpus))):
        stem = f"{idx:02d}_{_slug(f.name)}"
        for res in results:
            _write_csv(folder / f"{stem}_n{res.n}_final.csv", CSV_HEADER, res.rows())
            _write_csv(folder / f"{stem}_n{res.n}_gap.csv", CSV_HEADER, res.gap.rows())
        passed = all(r.passed and r.gap.passed for r in results)
        _write_json(
            folder / f"{stem}.json",
            {"kind": f"mollify_{dim}d", "function": f.name, "results": [r.to_dict() for r in results], "passed": passed},
        )
        summaries.append({"name": stem, "passed": passed})
    return summaries


def cmd_check_pr(cfg: RunConfig) -> list[dict]:
    spec = cfg.check_pr
    ns = spec.get("n", cfg.n if cfg.n is not None else [1, 2])
    families = spec.get("families", ["s_pi_s_prime", "O_M"])
    dims = spec.get("dims", [1])
    summaries = []
    for family in families:
        if family not in ("s_pi_s_prime", "O_M"):
            raise ConfigError(f"check_pr.families: unknown spectrum family {family!r}")
        for dim in dims if family == "O_M" else [1]:
            sd = SpectrumDescriptor(family, dim)
            if family == "s_pi_s_prime":
                matrices = {"count": 50, "max_p": 6, "max_q": 3, **cfg.matrices}
                corpus = _matrix_corpus(RunConfig(cfg.command, cfg.out, cfg.seed, matrices=matrices))
                extra = {}
            elif dim == 1:
                corpus = (
                    [_family_from_entry(e, f"corpus[{i}]") for i, e in enumerate(cfg.corpus)]
                    if cfg.corpus
                    else [make_family("poly_sin", 1, 1), make_family("polynomial", 0, 0, 1), make_family("gauss_poly", 3)]
                )
                extra = {"grid": cfg.grid_for(1), "slack": cfg.slack, "quad": cfg.quad_for(1)}
            else:
                corpus = (
                    [_function_2d(e, f"corpus_2d[{i}]") for i, e in enumerate(cfg.corpus_2d)]
                    if cfg.corpus_2d
                    else default_corpus_2d()[:1]
                )
                extra = {"grid": cfg.grid_for(2), "slack": cfg.slack, "quad": cfg.quad_for(2), "quad_1d": cfg.quad_for(1)}
            for n in ns:
                report = check_pr_condition(sd, n, corpus, **extra)
                name = f"{family}_d{dim}_n{n}"
                _write_json(cfg.out / "check_pr" / f"{name}.json", report.to_dict())
                summaries.append({"name": name, "passed": report.passed})
    return summaries


def cmd_proj1(cfg: RunConfig) -> list[dict]:
    spec = cfg.spectra
    if "inline" in spec:
        try:
            spectra = [FiniteLinearSpectrum.from_json(s) for s in spec["inline"]]
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"spectra.inline: {exc}") from None
    else:
        rng = np.random.default_rng(cfg.seed)
        spectra = [
            FiniteLinearSpectrum.random(rng, int(spec.get("max_levels", 6)), int(spec.get("max_dim", 8)))
            for _ in range(int(spec.get("random", 100)))
        ]
    rows, entries = [], []
    for idx, fs in enumerate(spectra):
        proj, proj1 = proj1_finite(fs)
        entries.append({"index": idx, "spectrum": fs.to_json(), "proj_dim": proj, "proj1_dim": proj1, "passed": proj1 == 0})
        rows.append([idx, fs.levels, ";".join(map(str, fs.dims)), proj, proj1, proj1 == 0])
    passed = all(e["passed"] for e in entries)
    _write_json(cfg.out / "proj1" / "spectra.json", {"kind": "proj1", "results": entries, "passed": passed})
    _write_csv(cfg.out / "proj1" / "summary.csv", ["spectrum", "levels", "dims", "proj_dim", "proj1_dim", "pass"], rows)
    return [{"name": "proj1", "passed": passed}]


def cmd_report(cfg: RunConfig) -> list[dict]:
    if not cfg.out.is_dir():
        raise ConfigError(f"--out: {cfg.out} is not a directory with artifacts")
    summaries = []
    for path in sorted(cfg.out.rglob("*.json")):
        if path.name == "report.json":
            continue
        data = json.loads(path.read_text())
        if "passed" in data:
            summaries.append({"name": str(path.relative_to(cfg.out)), "passed": bool(data["passed"])})
    _write_csv(cfg.out / "report.csv", ["artifact", "pass"], [[s["name"], s["passed"]] for s in summaries])
    _write_json(
        cfg.out / "report.json",
        {"kind": "report", "artifacts": summaries, "passed": all(s["passed"] for s in summaries)},
    )
    return summaries


HANDLERS = {
    "split-matrix": cmd_split_matrix,
    "mollify-1d": lambda cfg: _mollify(cfg, 1),
    "mollify-2d": lambda cfg: _mollify(cfg, 2),
    "check-pr": cmd_check_pr,
    "proj1": cmd_proj1,
    "report": cmd_report,
}


def run(command: str, cfg: RunConfig) -> int:
    """Execute ``command``; 0 if every certificate passed, 1 otherwise."""
    summaries = HANDLERS[command](cfg)
    failed = [s for s in summaries if not s["passed"]]
    if failed:
        print(f"{command}: certificate failed: {failed[0]['name']} ({len(failed)} of {len(summaries)} failing)", file=sys.stderr)
        return 1
    log.info("%s: %d certificate batches passed", command, len(summaries))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omcert", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", default="out", help="artifact directory (default: out)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--quad-order", type=int, default=None, help="kernel Gauss-Legendre order per axis")
    parser.add_argument("--grid-radius", type=float, default=None)
    parser.add_argument("--jobs", type=int, default=1, help="corpus items processed concurrently")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.command, args)
        return run(args.command, cfg)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
