"""Reproducible experiment orchestration.

A run is fully determined by its JSON config: the ground-truth model (inline
generator parameters or a file), the SPAM model, the shot schedule, constant
overrides and a master seed.  Stages persist artifacts into the output
directory and can be resumed; every artifact is bit-identical across reruns
of the same config (wall-clock timings are kept out of the deterministic
artifact set, in a sidecar).
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .channel import PauliChannel, SPAMModel
from .circuits import ShotBank, batch_simulate
from .coefficients import (LearnedModel, diamond_distance, learn_potentials,
                           potential_errors, regional_tv_report, tv_distance)
from .errors import ConfigError, StageError
from .estimator import (DEFAULT_FLOOR_SIGMA, DEFAULT_GROUPS, EigenvalueTable,
                        estimate_pauli)
from .gibbs import (GibbsNoiseModel, compute_constants, derived_graph,
                    generate_model, structure_sample_budget)
from .pauli import ENUMERATION_CAP, PauliString
from .structure import (LearnedStructure, OracleProvider, ProtocolProvider,
                        learn_graph)

ARTIFACTS = {
    "model": "model.json",
    "bank": "bank.txt",
    "alphas": "alphas.tsv",
    "structure": "structure.json",
    "learned_model": "learned_model.json",
    "report": "report.json",
}

DEFAULT_CONFIG = {
    "master_seed": 0,
    "out_dir": None,
    "provider": "protocol",
    "model": {"topology": "chain", "n": 6, "r": 2,
              "min_interaction": 0.4, "max_interaction": 0.4},
    "spam": None,
    "schedule": [[1, 100000], [2, 100000]],
    "constants": {
        "score_threshold": None,      # default: conservative formula value
        "superset_cap": 4,
        "groups": DEFAULT_GROUPS,
        "floor_sigma": DEFAULT_FLOOR_SIGMA,
        "prob_floor": None,           # default: 1e-6 * 4**-|region|
        "weight_cap": None,           # eager estimation only
        "desk_scale": 1e3,
    },
    "report_threshold": None,         # default: min_interaction / 2
    "symmetrize": "intersection",
    "amplitude_mode": "free",         # "unit" pins C_P = 1 (SPAM-free configs)
    "workers": 1,
    "evaluate": True,
}


def merged_config(raw: dict) -> dict:
    """Fill a partial config with defaults; reject unknown keys."""
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    for key, value in raw.items():
        if key not in cfg:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "constants":
            for ck, cv in value.items():
                if ck not in cfg["constants"]:
                    raise ConfigError(f"unknown constants key {ck!r}")
                cfg["constants"][ck] = cv
        else:
            cfg[key] = value
    if cfg["provider"] not in ("protocol", "oracle"):
        raise ConfigError(f"unknown provider {cfg['provider']!r}")
    if "master_seed" not in raw:
        raise ConfigError("config must set master_seed explicitly")
    for k, count in cfg["schedule"]:
        if int(k) < 1 or int(count) < 1:
            raise ConfigError(f"invalid schedule entry ({k}, {count})")
    if cfg["amplitude_mode"] not in ("free", "unit"):
        raise ConfigError(f"unknown amplitude mode {cfg['amplitude_mode']!r}")
    if cfg["amplitude_mode"] == "unit":
        spam = cfg["spam"]
        if spam is not None and spam.get("kind") not in (None, "none"):
            raise ConfigError("unit amplitude mode requires a SPAM-free config; "
                              "with SPAM present the attenuation must be fitted")
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def default_k_grid(p0: float, alpha_min: float = 0.5, cap: int = 16) -> list:
    """Doubling repetition grid 1, 2, 4, ... up to the p0-dependent maximum."""
    if not 0.0 < p0 <= 1.0:
        raise ConfigError("p0 must lie in (0, 1]")
    if p0 >= 1.0:
        k_max = 2
    else:
        k_max = max(2, math.ceil(2.0 * math.log(1.0 / (1.0 - p0))
                                 / max(1.0 - alpha_min, 1e-9)))
    k_max = min(k_max, cap)
    grid, k = [], 1
    while k <= k_max:
        grid.append(k)
        k *= 2
    return grid


@dataclass
class RunReport:
    config_hash: str
    provider_mode: str
    effective_constants: dict
    schedule: list
    total_shots: int
    structure: dict = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict)
    eigenvalue_errors: dict = field(default_factory=dict)
    distances: dict = field(default_factory=dict)
    sample_budget: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    timings_s: dict = field(default_factory=dict)

    def deterministic_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "timings_s"}
        return d

    def text(self) -> str:
        lines = [f"provider: {self.provider_mode}",
                 f"config hash: {self.config_hash}",
                 f"total shots: {self.total_shots}"]
        lines.append("effective constants: " + json.dumps(self.effective_constants))
        if self.sample_budget:
            lines.append("sample budget: " + json.dumps(self.sample_budget))
        if self.structure:
            lines.append("structure: " + json.dumps(self.structure))
        if self.eigenvalue_errors:
            lines.append("eigenvalue errors: " + json.dumps(self.eigenvalue_errors))
        if self.coefficients:
            lines.append("coefficients: " + json.dumps(self.coefficients))
        if self.distances:
            lines.append("distances: " + json.dumps(self.distances))
        for w in self.warnings:
            lines.append(f"warning: {w}")
        for f in self.failures:
            lines.append(f"FAILED: {f}")
        if self.timings_s:
            lines.append("timings (s): " + json.dumps(self.timings_s))
        return "\n".join(lines) + "\n"


class ExperimentRun:
    """Stage-by-stage pipeline with artifact persistence and resume."""

    def __init__(self, cfg: dict, resume: bool = True):
        self.cfg = merged_config(cfg)
        self.hash = config_hash(self.cfg)
        self.out_dir = Path(self.cfg["out_dir"]) if self.cfg["out_dir"] else None
        self.resume = resume
        self.timings: Dict[str, float] = {}
        self.model: Optional[GibbsNoiseModel] = None
        self.bank: Optional[ShotBank] = None
        self.provider = None
        self.structure: Optional[LearnedStructure] = None
        self.learned: Optional[LearnedModel] = None
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    # -- manifest-based resume ----------------------------------------------

    def _manifest_path(self) -> Path:
        return self.out_dir / "manifest.json"

    def _manifest_ok(self) -> bool:
        if not self.out_dir or not self.resume:
            return False
        path = self._manifest_path()
        if not path.exists():
            return False
        try:
            return json.loads(path.read_text()).get("config_hash") == self.hash
        except (json.JSONDecodeError, OSError):
            return False

    def _write_manifest(self) -> None:
        if self.out_dir:
            self._manifest_path().write_text(
                json.dumps({"config_hash": self.hash}, indent=1) + "\n")

    def _artifact(self, name: str) -> Optional[Path]:
        return self.out_dir / ARTIFACTS[name] if self.out_dir else None

    def _reusable(self, name: str) -> bool:
        path = self._artifact(name)
        return bool(path and path.exists() and self._manifest_ok())

    def _timed(self, stage, fn):
        t0 = time.perf_counter()
        out = fn()
        self.timings[stage] = time.perf_counter() - t0
        return out

    # -- stages ---------------------------------------------------------------

    def stage_model(self) -> GibbsNoiseModel:
        if self.model is not None:
            return self.model

        def build():
            if self._reusable("model"):
                return GibbsNoiseModel.load(self._artifact("model"))
            spec = self.cfg["model"]
            if "file" in spec:
                model = GibbsNoiseModel.load(spec["file"])
            else:
                params = dict(spec)
                params.setdefault("seed", self.cfg["master_seed"])
                model = generate_model(**params)
            if self.out_dir:
                self._write_manifest()
                model.save(self._artifact("model"))
            return model

        self.model = self._timed("model", build)
        return self.model

    def _spam(self) -> SPAMModel:
        return SPAMModel.from_dict(self.cfg["spam"], self.stage_model().n)

    def stage_simulate(self) -> ShotBank:
        if self.bank is not None:
            return self.bank
        if self.cfg["provider"] == "oracle":
            raise StageError("oracle mode has no simulation stage")

        def build():
            if self._reusable("bank"):
                return ShotBank.load(self._artifact("bank"))
            model = self.stage_model()
            bank = batch_simulate(PauliChannel(model), self._spam(),
                                  self.cfg["schedule"], self.cfg["master_seed"],
                                  workers=int(self.cfg["workers"]))
            if self.out_dir:
                self._write_manifest()
                bank.save(self._artifact("bank"))
            return bank

        self.bank = self._timed("simulate", build)
        return self.bank

    def effective_constants(self) -> dict:
        model = self.stage_model()
        cc = self.cfg["constants"]
        consts = compute_constants(
            model,
            model.min_interaction if model.min_interaction is not None else 0.4,
            model.max_interaction if model.max_interaction is not None else 1.0,
            score_threshold=cc["score_threshold"],
            superset_cap=cc["superset_cap"])
        return {
            "score_threshold": consts.score_threshold,
            "superset_cap": consts.superset_cap,
            "interaction_strength": consts.interaction_strength,
            "conditional_floor": consts.conditional_floor,
            "groups": int(cc["groups"]),
            "floor_sigma": float(cc["floor_sigma"]),
            "prob_floor": cc["prob_floor"],
        }

    def make_provider(self):
        if self.provider is not None:
            return self.provider
        cc = self.cfg["constants"]
        floor = cc["prob_floor"]
        if self.cfg["provider"] == "oracle":
            self.provider = OracleProvider(self.stage_model(), floor)
        else:
            bank = self.stage_simulate()
            table = None
            if self._reusable("alphas"):
                table = EigenvalueTable.load(self._artifact("alphas"))
            fixed = 1.0 if self.cfg["amplitude_mode"] == "unit" else None
            self.provider = ProtocolProvider(
                bank, groups=int(cc["groups"]),
                floor_sigma=float(cc["floor_sigma"]), floor=floor, table=table,
                fixed_amplitude=fixed)
        return self.provider

    def stage_structure(self) -> LearnedStructure:
        if self.structure is not None:
            return self.structure

        def build():
            if self._reusable("structure"):
                return LearnedStructure.load(self._artifact("structure"))
            model = self.stage_model()
            consts = self.effective_constants()
            structure = learn_graph(self.make_provider(), model.n,
                                    model.hypergraph.r,
                                    consts["score_threshold"],
                                    consts["superset_cap"],
                                    self.cfg["symmetrize"])
            if self.out_dir:
                self._write_manifest()
                structure.save(self._artifact("structure"))
            return structure

        self.structure = self._timed("structure", build)
        return self.structure

    def stage_coefficients(self) -> LearnedModel:
        if self.learned is not None:
            return self.learned

        def build():
            structure = self.stage_structure()
            if self._reusable("learned_model"):
                return LearnedModel.load(self._artifact("learned_model"))
            model = self.stage_model()
            threshold = self.cfg["report_threshold"]
            if threshold is None:
                threshold = (model.min_interaction / 2.0
                             if model.min_interaction else 0.2)
            candidates = structure.clique_candidates or [(u,) for u in range(model.n)]
            learned = learn_potentials(
                candidates, self.make_provider(), model.n, model.hypergraph.r,
                report_threshold=threshold, structure=structure,
                provenance={"config_hash": self.hash,
                            "provider_mode": self.cfg["provider"],
                            "schedule": self.cfg["schedule"]
                            if self.cfg["provider"] == "protocol" else []})
            if self.out_dir:
                self._write_manifest()
                learned.save(self._artifact("learned_model"))
                provider = self.make_provider()
                if isinstance(provider, ProtocolProvider):
                    provider.table.save(self._artifact("alphas"))
            return learned

        self.learned = self._timed("coefficients", build)
        return self.learned

    # -- evaluation and report -------------------------------------------------

    def _evaluate(self, report: RunReport) -> None:
        model = self.stage_model()
        structure = self.structure
        learned = self.learned
        truth_adj = derived_graph(model.hypergraph)
        if structure is not None:
            true_edges = {(a, b) for a in range(model.n) for b in range(a + 1, model.n)
                          if truth_adj[a, b]}
            got_edges = set(structure.edges())
            report.structure = {
                "exact": got_edges == true_edges,
                "missing_edges": sorted(true_edges - got_edges),
                "extra_edges": sorted(got_edges - true_edges),
                "warnings": structure.warnings,
            }
        provider = self.provider
        if isinstance(provider, ProtocolProvider) and model.n <= ENUMERATION_CAP:
            channel = PauliChannel(model)
            errs = [abs(e.value - channel.eigenvalue(p))
                    for p, e in provider.table.estimates.items()]
            if errs:
                report.eigenvalue_errors = {
                    "count": len(errs),
                    "max": max(errs),
                    "mean": sum(errs) / len(errs),
                }
        if learned is not None:
            errors = potential_errors(learned, model)
            report.coefficients = {
                "max_error": max(errors.values()) if errors else 0.0,
                "spurious": [list(h) for h in learned.spurious],
            }
            if model.n <= ENUMERATION_CAP:
                tv = tv_distance(model.full_table(), learned.model.full_table())
                report.distances = {"tv": tv, "diamond": 2.0 * tv, "proxy": False}
            else:
                regions = [tuple(h) for h in learned.potentials]
                report.distances = regional_tv_report(model, learned.model, regions)

    def run(self) -> RunReport:
        """Run all stages; failures are recorded and downstream stages skipped."""
        consts_for_report: dict = {}
        report_kwargs = dict(config_hash=self.hash,
                             provider_mode=self.cfg["provider"],
                             schedule=self.cfg["schedule"]
                             if self.cfg["provider"] == "protocol" else [],
                             effective_constants=consts_for_report,
                             total_shots=0)
        report = RunReport(**report_kwargs)
        try:
            self.stage_model()
            consts_for_report.update(self.effective_constants())
            if self.cfg["provider"] == "protocol":
                self.stage_simulate()
                report.total_shots = self.bank.total_shots
                model = self.stage_model()
                nominal = structure_sample_budget(
                    compute_constants(model, model.min_interaction or 0.4,
                                      model.max_interaction or 1.0,
                                      score_threshold=consts_for_report["score_threshold"],
                                      superset_cap=consts_for_report["superset_cap"]),
                    model.n, model.hypergraph.r,
                    PauliChannel(model).p0 if model.n <= ENUMERATION_CAP else 0.0,
                    desk_scale=float(self.cfg["constants"]["desk_scale"]))
                report.sample_budget = {
                    "nominal_scaled": nominal,
                    "actual": report.total_shots,
                    "implied_desk_scale": (nominal * float(self.cfg["constants"]["desk_scale"])
                                           / report.total_shots),
                }
            self.stage_structure()
            self.stage_coefficients()
            if self.cfg["evaluate"]:
                self._evaluate(report)
            report.warnings.extend(self.structure.warnings if self.structure else [])
        except Exception as exc:  # recorded, not raised: downstream stages skipped
            report.failures.append(f"{type(exc).__name__}: {exc}")
        report.timings_s = dict(self.timings)
        if self.out_dir:
            self._write_manifest()
            path = self._artifact("report")
            path.write_text(json.dumps(report.deterministic_dict(), indent=1,
                                       sort_keys=True) + "\n")
            (self.out_dir / "timings.json").write_text(
                json.dumps(report.timings_s, indent=1) + "\n")
            (self.out_dir / "report.txt").write_text(report.text())
        return report


def eager_estimate(run: ExperimentRun, weight_cap: Optional[int] = None) -> EigenvalueTable:
    """Estimate every Pauli of weight <= cap; the `estimate` subcommand."""
    model = run.stage_model()
    bank = run.stage_simulate()
    if weight_cap is None:
        weight_cap = run.cfg["constants"]["weight_cap"] or model.hypergraph.r
    provider = run.make_provider()
    if not isinstance(provider, ProtocolProvider):
        raise StageError("eager estimation requires protocol mode")
    import itertools

    cc = run.cfg["constants"]
    for support_size in range(1, weight_cap + 1):
        for support in itertools.combinations(range(model.n), support_size):
            for letters in itertools.product((1, 2, 3), repeat=support_size):
                x = z = 0
                for q, letter in zip(support, letters):
                    x |= (letter & 1) << q
                    z |= (letter >> 1) << q
                p = PauliString(model.n, x, z)
                if p not in provider.table:
                    provider.table.add(estimate_pauli(
                        p, bank, int(cc["groups"]), float(cc["floor_sigma"])))
    if run.out_dir:
        run._write_manifest()
        provider.table.save(run._artifact("alphas"))
    return provider.table
