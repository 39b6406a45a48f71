"""Batch front end: ``conjclt <subcommand> CONFIG [--output-dir DIR]``.

One YAML/JSON config per run.  Every run writes its data files first and
``manifest.json`` last; a directory without a manifest is not a finished run.
Data files are byte-identical for identical config and seed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from . import __version__
from .conjugacy import (
    ConjugacyClass,
    EnumerationCapError,
    TrivialClassError,
    class_of,
    class_sphere_array,
    class_sphere_size,
)
from .stats import (
    DegenerateWeightError,
    characteristic_function,
    clt_experiment,
    collect_class_sample,
    mean_convergence,
    variance_ratio,
)
from .symbolic import WeightFunction, WeightSpecError, entropy, weight_from_spec
from .thermo import (
    build_transfer_matrix,
    derivatives,
    perron,
    spectral_projection_value,
)
from .words import Word, render_rows

SUBCOMMANDS = ("count", "pressure", "derivatives", "mean", "clt", "ratio", "charfn", "sample")


class ConfigError(ValueError):
    pass


@dataclass
class Tolerances:
    ks_max: float = 0.1
    ratio_band: tuple[float, float] = (1.7, 2.3)
    derivative_tol: float = 1e-6


@dataclass
class ExperimentConfig:
    p: int
    weight: dict | None = None
    class_rep: str | None = None
    m_grid: list[int] = field(default_factory=lambda: [1])
    mode: str = "exact"
    count: int | None = None
    seed: int = 0
    enumeration_cap: int = 10**7
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: str = "out"
    t_grid: list[float] = field(default_factory=lambda: [-1.0, -0.5, 0.0, 0.5, 1.0])
    t_list: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    cdf_grid: list[float] | None = None
    sphere_count: int | None = None

    @classmethod
    def from_mapping(cls, raw: Any) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "p" not in raw:
            raise ConfigError("missing required key 'p'")
        data = dict(raw)
        tol = data.pop("tolerances", None) or {}
        try:
            tolerances = Tolerances(
                ks_max=float(tol.get("ks_max", 0.1)),
                ratio_band=tuple(float(x) for x in tol.get("ratio_band", (1.7, 2.3))),
                derivative_tol=float(tol.get("derivative_tol", 1e-6)),
            )
            cfg = cls(tolerances=tolerances, **data)
            cfg.p = int(cfg.p)
            cfg.m_grid = _parse_grid(cfg.m_grid)
            cfg.seed = int(cfg.seed)
            cfg.enumeration_cap = int(cfg.enumeration_cap)
            cfg.count = None if cfg.count is None else int(cfg.count)
            cfg.sphere_count = None if cfg.sphere_count is None else int(cfg.sphere_count)
            cfg.t_grid = [float(x) for x in cfg.t_grid]
            cfg.t_list = [float(x) for x in cfg.t_list]
            if cfg.cdf_grid is not None:
                cfg.cdf_grid = [float(x) for x in cfg.cdf_grid]
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.p < 2:
            raise ConfigError("p must be >= 2")
        if not self.m_grid:
            raise ConfigError("m_grid must be non-empty")
        if self.m_grid != sorted(self.m_grid) or self.m_grid[0] < 0:
            raise ConfigError("m_grid must be ascending and non-negative")
        if self.mode not in ("exact", "sampled"):
            raise ConfigError(f"mode must be exact or sampled, got {self.mode!r}")
        if self.mode == "sampled" and (self.count is None or self.count < 1000):
            raise ConfigError("sampled mode needs count >= 1000")
        if len(self.tolerances.ratio_band) != 2:
            raise ConfigError("ratio_band must have two entries")
        if self.mode == "exact" and self.class_rep is not None:
            C = self.conjugacy_class()
            biggest = class_sphere_size(C, self.m_grid[-1])
            if biggest > self.enumeration_cap:
                raise EnumerationCapError(
                    f"enumeration cap exceeded: {biggest} elements > cap {self.enumeration_cap}"
                )

    def conjugacy_class(self) -> ConjugacyClass:
        if self.class_rep is None:
            raise ConfigError("this subcommand needs class_rep")
        try:
            return class_of(Word.parse(str(self.class_rep)), self.p)
        except TrivialClassError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad class_rep: {exc}") from exc

    def weight_function(self) -> WeightFunction:
        if self.weight is None:
            raise ConfigError("this subcommand needs a weight")
        return weight_from_spec(self.p, self.weight)

    def echo(self) -> dict:
        d = asdict(self)
        d["tolerances"]["ratio_band"] = list(self.tolerances.ratio_band)
        return d


def _parse_grid(g) -> list[int]:
    if isinstance(g, str) and ".." in g:
        lo, hi = g.split("..")
        return list(range(int(lo), int(hi) + 1))
    if isinstance(g, int):
        return [g]
    return [int(x) for x in g]


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return ExperimentConfig.from_mapping(raw)


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return format(x, ".17g")
    return str(x)


class Run:
    """Collects output files and stage timings for one invocation."""

    def __init__(self, out: Path, subcommand: str, cfg: ExperimentConfig):
        self.out = out
        self.subcommand = subcommand
        self.cfg = cfg
        self.files: list[str] = []
        self.timings: dict[str, float] = {}
        out.mkdir(parents=True, exist_ok=True)
        stale = out / "manifest.json"
        if stale.exists():
            stale.unlink()

    def stage(self, name: str, fn: Callable, *args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        self.timings[name] = round(time.perf_counter() - t0, 6)
        return res

    def csv(self, name: str, header: list[str], rows) -> None:
        path = self.out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(x) for x in r])
        self.files.append(name)

    def json(self, name: str, data: dict) -> None:
        path = self.out / name
        path.write_text(json.dumps(_plain(data), indent=2, sort_keys=True) + "\n")
        self.files.append(name)

    def finish(self) -> None:
        files = []
        for name in self.files:
            digest = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
            files.append({"name": name, "sha256": digest})
        manifest = {
            "subcommand": self.subcommand,
            "version": __version__,
            "config": self.cfg.echo(),
            "files": files,
            "wall_clock_seconds": self.timings,
        }
        tmp = self.out / "manifest.json.tmp"
        tmp.write_text(json.dumps(_plain(manifest), indent=2, sort_keys=True) + "\n")
        tmp.replace(self.out / "manifest.json")


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if hasattr(x, "item"):
        return _plain(x.item())
    return x


def _base_summary(cfg: ExperimentConfig, **extra) -> dict:
    d = {
        "p": cfg.p,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "count": cfg.count,
        "tolerances": cfg.echo()["tolerances"],
    }
    if cfg.class_rep is not None:
        C = cfg.conjugacy_class()
        d.update(class_rep=str(C.representative), k=C.k, orbit_size=len(C.orbit))
    if cfg.weight is not None:
        d["weight"] = cfg.weight
    d.update(extra)
    return d


def cmd_count(run: Run, cfg: ExperimentConfig) -> None:
    C = cfg.conjugacy_class()
    h = entropy(cfg.p)
    rows = []
    for m in cfg.m_grid:
        enumerated = run.stage(f"enumerate_m{m}", lambda: len(class_sphere_array(C, m, cfg.enumeration_cap)))
        formula = class_sphere_size(C, m)
        rows.append((m, C.k + 2 * m, enumerated, formula, enumerated == formula,
                     enumerated / math.exp(m * h)))
    run.csv("count.csv", ["m", "n", "enumerated", "formula", "match", "count_over_exp_mh"], rows)
    zero = weight_from_spec(cfg.p, {"kind": "constant", "value": 0.0})
    limit = run.stage("spectral_projection",
                      lambda: math.fsum(spectral_projection_value(zero, g) for g in C.orbit))
    run.json("summary.json", _base_summary(cfg, spectral_limit=limit,
                                           all_match=all(r[4] for r in rows)))


def cmd_pressure(run: Run, cfg: ExperimentConfig) -> None:
    f = cfg.weight_function()
    rows = []
    for t in cfg.t_grid:
        beta = run.stage(f"perron_t{t:g}", lambda: perron(build_transfer_matrix(f, t)).beta)
        rows.append((t, math.log(beta), beta))
    run.csv("pressure.csv", ["t", "pressure", "beta"], rows)
    run.json("summary.json", _base_summary(cfg, entropy=entropy(cfg.p)))


def cmd_derivatives(run: Run, cfg: ExperimentConfig) -> None:
    f = cfg.weight_function()
    d = run.stage("derivatives", derivatives, f)
    tol = cfg.tolerances.derivative_tol
    run.csv("derivatives.csv",
            ["lambda_cylinder", "lambda_fd", "lambda_discrepancy",
             "sigma2_fd", "sigma2_green_kubo", "sigma2_discrepancy"],
            [(d.lambda_cylinder, d.lambda_fd, d.lambda_discrepancy,
              d.sigma2_fd, d.sigma2_gk, d.sigma2_discrepancy)])
    run.json("summary.json", _base_summary(
        cfg, **{"lambda": d.lambda_cylinder, "sigma2": d.sigma2_fd,
                "lambda_fd": d.lambda_fd, "sigma2_green_kubo": d.sigma2_gk,
                "lambda_discrepancy": d.lambda_discrepancy,
                "sigma2_discrepancy": d.sigma2_discrepancy,
                "within_tolerance": max(d.lambda_discrepancy, d.sigma2_discrepancy) <= tol}))


def _sampling_kwargs(cfg: ExperimentConfig) -> dict:
    return dict(mode=cfg.mode, count=cfg.count, seed=cfg.seed, cap=cfg.enumeration_cap)


def cmd_mean(run: Run, cfg: ExperimentConfig) -> None:
    C, f = cfg.conjugacy_class(), cfg.weight_function()
    mc = run.stage("mean_convergence", mean_convergence, C, f, cfg.m_grid, **_sampling_kwargs(cfg))
    run.csv("convergence.csv", ["m", "mean", "lambda", "abs_diff"],
            [(r.m, r.mean, mc.lam, r.discrepancy) for r in mc.rows])
    run.json("summary.json", _base_summary(cfg, **{"lambda": mc.lam,
                                                   "final_abs_diff": mc.rows[-1].discrepancy}))


def cmd_clt(run: Run, cfg: ExperimentConfig) -> None:
    C, f = cfg.conjugacy_class(), cfg.weight_function()
    per_m = {}
    for m in cfg.m_grid:
        res = run.stage(f"clt_m{m}", clt_experiment, C, f, m, grid=cfg.cdf_grid,
                        **_sampling_kwargs(cfg))
        run.csv(f"cdf_m{m}.csv", ["y", "empirical", "reference"],
                zip(res.grid.tolist(), res.empirical_cdf.tolist(), res.reference_cdf.tolist()))
        per_m[str(m)] = {"ks": res.ks, "n": res.n, "within_ks_max": res.ks <= cfg.tolerances.ks_max,
                         "empirical_variance": res.summary.variance}
    run.json("summary.json", _base_summary(cfg, target_variance=res.target_variance, by_m=per_m))


def cmd_ratio(run: Run, cfg: ExperimentConfig) -> None:
    C, f = cfg.conjugacy_class(), cfg.weight_function()
    lo, hi = cfg.tolerances.ratio_band
    sphere_count = cfg.sphere_count or cfg.count or 100_000
    rows = []
    for m in cfg.m_grid:
        vr = run.stage(f"ratio_m{m}", variance_ratio, C, f, m, mode=cfg.mode, count=cfg.count,
                       seed=cfg.seed, sphere_count=sphere_count, cap=cfg.enumeration_cap)
        rows.append((m, vr.n, vr.var_class, vr.var_sphere, vr.ratio, lo <= vr.ratio <= hi))
    run.csv("ratio.csv", ["m", "n", "var_class", "var_sphere", "ratio", "in_band"], rows)
    run.json("summary.json", _base_summary(cfg, sphere_count=sphere_count,
                                           ratios={str(r[0]): r[4] for r in rows}))


def cmd_charfn(run: Run, cfg: ExperimentConfig) -> None:
    C, f = cfg.conjugacy_class(), cfg.weight_function()
    rows = []
    for m in cfg.m_grid:
        res = run.stage(f"charfn_m{m}", characteristic_function, C, f, m, cfg.t_list,
                        **_sampling_kwargs(cfg))
        rows += [(m, r.t, r.phi.real, r.phi.imag, r.deviation) for r in res]
    run.csv("charfn.csv", ["m", "t", "re_phi", "im_phi", "deviation"], rows)
    run.json("summary.json", _base_summary(cfg, max_deviation={
        str(m): max(r[4] for r in rows if r[0] == m) for m in cfg.m_grid}))


def cmd_sample(run: Run, cfg: ExperimentConfig) -> None:
    C, f = cfg.conjugacy_class(), cfg.weight_function()
    for m in cfg.m_grid:
        s = run.stage(f"sample_m{m}", collect_class_sample, C, f, m, keep_words=True,
                      **_sampling_kwargs(cfg))
        words = render_rows(s.words)
        run.csv(f"sample_m{m}.csv", ["index", "word", "F"],
                ((i, w, float(v)) for i, (w, v) in enumerate(zip(words, s.values))))
    run.json("summary.json", _base_summary(cfg))


COMMANDS: dict[str, Callable[[Run, ExperimentConfig], None]] = {
    "count": cmd_count,
    "pressure": cmd_pressure,
    "derivatives": cmd_derivatives,
    "mean": cmd_mean,
    "clt": cmd_clt,
    "ratio": cmd_ratio,
    "charfn": cmd_charfn,
    "sample": cmd_sample,
}

EXIT_CODES = {ConfigError: 2, WeightSpecError: 2, TrivialClassError: 2,
              DegenerateWeightError: 3, EnumerationCapError: 4}


def run(subcommand: str, config_path: str | Path, output_dir: str | Path | None = None) -> Path:
    cfg = load_config(config_path)
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    r = Run(out, subcommand, cfg)
    COMMANDS[subcommand](r, cfg)
    r.finish()
    return out


def _error_kind(exc: BaseException) -> str:
    return {ConfigError: "config", WeightSpecError: "config", TrivialClassError: "config",
            DegenerateWeightError: "degenerate_weight",
            EnumerationCapError: "enumeration_cap"}.get(type(exc), "runtime")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="conjclt", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("config", help="YAML or JSON experiment config")
    parser.add_argument("--output-dir", default=None, help="override output_dir from the config")
    args = parser.parse_args(argv)
    try:
        out = run(args.subcommand, args.config, args.output_dir)
    except Exception as exc:  # noqa: BLE001 - reported as one parsable line
        msg = " ".join(str(exc).split())
        print(f"error kind={_error_kind(exc)} message={json.dumps(msg)}", file=sys.stderr)
        return EXIT_CODES.get(type(exc), 1)
    print(out / "manifest.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
