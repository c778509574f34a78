"""Command-line pipeline: ingest -> cluster -> solve -> studies -> report.

Usage::

    flexdesign [--config run.json] [--seed N] [--out DIR] <verb> [options]

Without ``--config`` the shipped fixture configuration is used. The output
directory comes from ``--out``, else ``$FLEXDESIGN_OUT``, else the config.
Exit codes: 0 success, 1 a pipeline stage failed, 2 bad configuration or
missing input.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from . import lp
from .domain import ProcessSpec, TechEconSpec
from .ingest import (
    SERIES, IngestError, IngestResult, atomic_write, csv_text, days_to_dict, ingest, json_text,
)
from .model import MarketMode, ModelConfig, Objective, solve_design
from .scenarios import cluster_days, deviation_std_report, standardize, tree_from_dict, tree_to_dict, wcss_curve
from .studies import (
    StudyInputs, SweepParameter, SweepSpec, capacity_heatmap, flexibility_sweep, front_rows, market_mode_comparison,
    pareto_front, savings_decomposition,
)
from .weather import PerformanceCurve, PvSpec, WindSiteSpec

log = logging.getLogger("flexdesign")
OUT_ENV = "FLEXDESIGN_OUT"
EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """Invalid or incomplete run configuration (exit code 2)."""


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def _build(cls, doc: dict | None, where: str, **extra):
    doc = dict(doc or {})
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")
    try:
        return cls(**{**extra, **doc})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class ClusterSettings:
    k: int = 4
    n_init: int = 10


@dataclass(frozen=True)
class EconSettings:
    interest_rate: float = 0.08
    grid_fee: float = 29.6
    battery_rate: float = 4.0
    eta_in: float = 0.9 ** 0.5
    eta_out: float = 0.9 ** 0.5
    gwi_embodied: dict = field(default_factory=dict)
    capacity_scale: float = 1.0

    def spec(self, p_nom: float) -> TechEconSpec:
        econ = TechEconSpec.reference(p_nom, self.gwi_embodied, interest_rate=self.interest_rate,
                                      grid_fee=self.grid_fee, battery_rate=self.battery_rate,
                                      eta_in=self.eta_in, eta_out=self.eta_out)
        return econ.scaled_capacity(self.capacity_scale)


@dataclass(frozen=True)
class StudySettings:
    pareto_points: int = 5
    sweep_parameters: tuple = tuple(p.value for p in SweepParameter)
    sweep_points: int = 5
    heatmap_oversizing: tuple = (0.0, 0.1, 0.2, 0.3, 0.4)
    heatmap_scales: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    inputs: dict
    base_dir: Path
    process: ProcessSpec = ProcessSpec()
    econ: EconSettings = EconSettings()
    wind_site: WindSiteSpec = WindSiteSpec()
    pv: PvSpec = PvSpec()
    performance_curve: str | None = None
    clustering: ClusterSettings = ClusterSettings()
    seed: int = 0
    market_mode: MarketMode = MarketMode.SIMULTANEOUS
    objective: Objective = Objective.TAC
    gwi_bound: float | None = None
    solver: str = "auto"
    studies: StudySettings = StudySettings()
    output_dir: str = "flexdesign-out"
    source: dict = field(default_factory=dict, compare=False)

    KEYS = ("inputs", "process", "econ", "wind_site", "pv", "performance_curve", "clustering", "seed",
            "market_mode", "objective", "gwi_bound", "solver", "studies", "output_dir")

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str | Path = ".") -> "RunConfig":
        unknown = sorted(set(doc) - set(cls.KEYS))
        if unknown:
            raise ConfigError(f"config: unknown field(s) {', '.join(unknown)}")
        inputs = doc.get("inputs")
        if not isinstance(inputs, dict):
            raise ConfigError("inputs: missing table of input files")
        for s in SERIES:
            if not inputs.get(s):
                raise ConfigError(f"inputs.{s}: no file given")
        extra = sorted(set(inputs) - set(SERIES))
        if extra:
            raise ConfigError(f"inputs: unknown series {', '.join(extra)}")
        studies = dict(doc.get("studies") or {})
        for key in ("sweep_parameters", "heatmap_oversizing", "heatmap_scales"):
            if key in studies:
                studies[key] = tuple(studies[key])
        try:
            mode, objective = MarketMode(doc.get("market_mode", "simultaneous")), Objective(doc.get("objective", "tac"))
        except ValueError as exc:
            raise ConfigError(f"config: {exc}") from exc
        cfg = cls(
            inputs=dict(inputs), base_dir=Path(base_dir),
            process=_build(ProcessSpec, doc.get("process"), "process"),
            econ=_build(EconSettings, doc.get("econ"), "econ"),
            wind_site=_build(WindSiteSpec, doc.get("wind_site"), "wind_site"),
            pv=_build(PvSpec, doc.get("pv"), "pv"),
            performance_curve=doc.get("performance_curve"),
            clustering=_build(ClusterSettings, doc.get("clustering"), "clustering"),
            seed=int(doc.get("seed", 0)), market_mode=mode, objective=objective,
            gwi_bound=doc.get("gwi_bound"), solver=str(doc.get("solver", "auto")),
            studies=_build(StudySettings, studies, "studies"),
            output_dir=str(doc.get("output_dir", "flexdesign-out")), source=dict(doc),
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"--config: file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--config: {path} is not valid JSON ({exc})") from exc
        return cls.from_dict(doc, path.parent)

    def validate(self) -> None:
        problems = self.process.violations() + self.econ_spec().violations()
        if problems:
            raise ConfigError("; ".join(problems))
        if self.clustering.k < 1:
            raise ConfigError("clustering.k: must be >= 1")
        try:
            self.wind_site.check()
            self.pv.check()
            ModelConfig(self.market_mode, self.objective, self.gwi_bound)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p

    def input_paths(self) -> dict[str, Path]:
        paths = {s: self.resolve(self.inputs[s]) for s in SERIES}
        for s, p in paths.items():
            if not p.is_file():
                raise ConfigError(f"inputs.{s}: file not found: {p}")
        if self.performance_curve and not self.resolve(self.performance_curve).is_file():
            raise ConfigError(f"performance_curve: file not found: {self.resolve(self.performance_curve)}")
        return paths

    def econ_spec(self) -> TechEconSpec:
        return self.econ.spec(self.process.p_nom)

    def model_config(self, mode: MarketMode | None = None) -> ModelConfig:
        return ModelConfig(mode or self.market_mode, self.objective, self.gwi_bound)

    def solve_options(self) -> lp.SolveOptions:
        return lp.SolveOptions(method=self.solver, seed=self.seed)

    def digest(self) -> str:
        canon = json.dumps(self.source, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(f"{canon}|seed={self.seed}".encode()).hexdigest()


def fixture_config_path() -> Path:
    return Path(str(resources.files("flexdesign") / "data" / "fixture" / "config.json"))


# --- pipeline stages ---------------------------------------------------------------

class Pipeline:
    """Runs stages on demand and records every artifact in the manifest."""

    def __init__(self, cfg: RunConfig, out: Path, command: str):
        self.cfg, self.out, self.command = cfg, out, command
        self.artifacts: dict[str, str] = {}
        self._days: IngestResult | None = None
        self._tree = None

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        self.artifacts[name] = atomic_write(path, text)
        log.info("wrote %s", path)
        return path

    def days(self) -> IngestResult:
        # always recomputed from the inputs: cheap, and never stale
        if self._days is None:
            curve = None
            if self.cfg.performance_curve:
                curve = PerformanceCurve.from_file(self.cfg.resolve(self.cfg.performance_curve))
            self._days = ingest(self.cfg.input_paths(), self.cfg.wind_site, self.cfg.pv, curve)
            self.write("days.json", json_text(days_to_dict(self._days), rounded=False))
        return self._days

    def tree(self, path: str | None = None):
        if self._tree is None:
            if path:
                src = Path(path)
                if not src.is_file():
                    raise ConfigError(f"--tree: file not found: {src}")
                self._tree = tree_from_dict(json.loads(src.read_text()))
            else:
                data = self.days().data
                k = min(self.cfg.clustering.k, data.n_days)
                self._tree, cl = cluster_days(data, k, self.cfg.seed, self.cfg.clustering.n_init)
                meta = {"k": k, "seed": self.cfg.seed, "wcss": cl.wcss,
                        "deviation_std": deviation_std_report(self._tree).mean}
                # full precision so a reloaded tree rebuilds the identical LP
                self.write("tree.json", json_text(tree_to_dict(self._tree, meta), rounded=False))
        return self._tree

    def inputs(self, mode: MarketMode | None = None) -> StudyInputs:
        c = self.cfg
        return StudyInputs(self.tree(), c.process, c.econ_spec(), mode or c.market_mode, c.solve_options(),
                           c.studies.workers)

    def manifest(self, status: str = "ok", failed_stage: str | None = None) -> None:
        """Record this command's artifacts, keeping earlier ones from the same configuration."""
        path = self.out / "manifest.json"
        artifacts = {}
        if path.is_file():
            old = json.loads(path.read_text())
            if old.get("config_sha256") == self.cfg.digest():
                artifacts = old.get("artifacts", {})
        artifacts.update(self.artifacts)
        doc = {
            "tool": "flexdesign", "version": _tool_version(), "command": self.command,
            "status": status, "seed": self.cfg.seed, "config_sha256": self.cfg.digest(),
            "config": self.cfg.source, "artifacts": dict(sorted(artifacts.items())),
        }
        if failed_stage:
            doc["failed_stage"] = failed_stage
        atomic_write(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


def cmd_preprocess(p: Pipeline, args) -> None:
    res = p.days()
    print(f"{res.data.n_days} days kept, {len(res.rejected)} dropped")


def cmd_cluster(p: Pipeline, args) -> None:
    tree = p.tree()
    if args.wcss:
        data = p.days().data
        ks = [k for k in range(1, args.wcss + 1) if k <= data.n_days]
        curve = wcss_curve(standardize(data.wind, data.pv, data.gwi), ks, seed=p.cfg.seed)
        p.write("wcss.csv", csv_text({"k": k, "wcss": w} for k, w in curve))
    print(f"{tree.n_scenarios} scenarios in {tree.n_clusters} clusters")


def cmd_solve(p: Pipeline, args) -> None:
    tree = p.tree(args.tree)
    c = p.cfg
    cfg = c.model_config(MarketMode(args.mode) if args.mode else None)
    run = solve_design(tree, c.process, c.econ_spec(), cfg, c.solve_options())
    if not run.verified:
        raise lp.SolveError(f"solution failed the residual check: {run.residuals}")
    res = run.result
    doc = {"summary": res.summary(), "lp_fingerprint": run.model.problem.fingerprint(),
           "solver": run.solution.method, "residuals": dataclasses.asdict(run.residuals)}
    if args.schedules:
        doc["schedules"] = {k: v for k, v in res.schedules.items()}
    p.write("result.json", json_text(doc))
    if args.dump_lp:
        p.write("model.lp", _lp_text(run.model.problem))
    print(f"TAC {res.tac:.6g} EUR/a  GWI {res.gwi:.6g} kg/a  "
          f"PV {res.q_pv:.4g} MW  wind {res.q_wind:.4g} MW  battery {res.q_batt:.4g} MWh")


def _lp_text(problem) -> str:
    buf = io.StringIO()
    lp.write_lp(problem, buf)
    return buf.getvalue()


def cmd_pareto(p: Pipeline, args) -> None:
    front = pareto_front(p.inputs(), args.points or p.cfg.studies.pareto_points)
    p.write("pareto.csv", csv_text(front_rows(front)))
    print(f"{len(front)} Pareto points, TAC {front[0].tac:.6g} .. {front[-1].tac:.6g}")


def cmd_sweep(p: Pipeline, args) -> None:
    c = p.cfg
    params = args.parameter or list(c.studies.sweep_parameters)
    rows, issues = [], []
    for name in params:
        try:
            spec = SweepSpec.default(name, c.process, c.econ_spec(), market_mode=c.market_mode)
            spec = dataclasses.replace(spec, values=tuple(SweepParameter(name).default_values(
                c.process, c.studies.sweep_points)))
        except ValueError as exc:
            raise ConfigError(f"studies.sweep_parameters: {exc}") from exc
        sweep = flexibility_sweep(spec, p.tree(), c.solve_options(), c.studies.workers)
        rows += sweep.rows()
        issues += sweep.monotonicity_violations()
    p.write("sweep.csv", csv_text(rows))
    for msg in issues:
        log.warning("monotonicity: %s", msg)
    print(f"{len(rows)} sweep rows")


def cmd_heatmap(p: Pipeline, args) -> None:
    s = p.cfg.studies
    hm = capacity_heatmap(p.inputs(), s.heatmap_oversizing, s.heatmap_scales)
    p.write("heatmap.csv", csv_text(hm.long_rows()))
    add = hm.additivity()
    if add is not None:
        print(f"max additivity gap {add.max():.3%}")


def cmd_compare(p: Pipeline, args) -> None:
    cmp_ = market_mode_comparison(p.inputs())
    p.write("markets.csv", csv_text(cmp_.rows()))
    dec = savings_decomposition(p.inputs())
    p.write("decomposition.csv", csv_text(dec.rows()))
    print(f"simultaneous market saves {cmp_.savings:.6g} EUR/a ({cmp_.relative_savings:.2%})")


def cmd_report(p: Pipeline, args) -> None:
    out = p.out
    lines = ["# flexdesign run report", ""]
    man = out / "manifest.json"
    if man.is_file():
        m = json.loads(man.read_text())
        lines += [f"- last command: `{m['command']}` (status {m['status']})", f"- seed: {m['seed']}",
                  f"- config hash: `{m['config_sha256'][:16]}`", ""]
    if (out / "days.json").is_file():
        d = json.loads((out / "days.json").read_text())
        lines += ["## Days", "", f"{len(d['days'])} kept, {len(d['rejected'])} dropped", ""]
        lines += [f"- {day}: {why}" for day, why in d["rejected"].items()] + [""]
    if (out / "result.json").is_file():
        s = json.loads((out / "result.json").read_text())["summary"]
        lines += ["## Design", "", "| quantity | value |", "|---|---|"]
        lines += [f"| {k} | {v} |" for k, v in s.items() if not isinstance(v, dict)] + [""]
    for name in ("pareto.csv", "sweep.csv", "markets.csv", "decomposition.csv", "heatmap.csv"):
        f = out / name
        if f.is_file():
            rows = f.read_text().splitlines()
            lines += [f"## {name}", "", f"{len(rows) - 1} rows, columns: {rows[0]}", ""]
    p.write("report.md", "\n".join(lines))
    print("\n".join(lines))


COMMANDS = {
    "preprocess": cmd_preprocess, "cluster": cmd_cluster, "solve": cmd_solve, "pareto": cmd_pareto,
    "sweep": cmd_sweep, "heatmap": cmd_heatmap, "compare-markets": cmd_compare, "report": cmd_report,
}


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flexdesign", description=__doc__.split("\n")[0])
    ap.add_argument("--config", help="run configuration (JSON); default: shipped fixture")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    ap.add_argument("--out", help=f"output directory (else ${OUT_ENV}, else config output_dir)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("preprocess", help="ingest raw CSV series into aligned days")
    c = sub.add_parser("cluster", help="build the scenario tree")
    c.add_argument("--wcss", type=int, metavar="KMAX", help="also write the WCSS curve for k = 1..KMAX")
    s = sub.add_parser("solve", help="optimal design for the configured objective")
    s.add_argument("--tree", help="use this scenario tree JSON instead of clustering")
    s.add_argument("--mode", choices=[m.value for m in MarketMode])
    s.add_argument("--dump-lp", action="store_true", help="also write model.lp")
    s.add_argument("--schedules", action="store_true", help="include schedules in result.json")
    pa = sub.add_parser("pareto", help="TAC/GWI Pareto front")
    pa.add_argument("--points", type=int)
    sw = sub.add_parser("sweep", help="flexibility sweeps")
    sw.add_argument("--parameter", action="append", choices=[x.value for x in SweepParameter])
    sub.add_parser("heatmap", help="TAC over oversizing and capacity scale")
    sub.add_parser("compare-markets", help="ID-only vs simultaneous, plus savings decomposition")
    sub.add_parser("report", help="summarize the artifacts in the output directory")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = RunConfig.load(args.config or fixture_config_path())
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        out = Path(args.out or os.environ.get(OUT_ENV) or cfg.output_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    pipe = Pipeline(cfg, out, args.command)
    try:
        COMMANDS[args.command](pipe, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IngestError, lp.SolveError, ValueError) as exc:
        print(f"error in {args.command}: {exc}", file=sys.stderr)
        pipe.manifest("failed", args.command)
        return EXIT_FAILED
    pipe.manifest()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
