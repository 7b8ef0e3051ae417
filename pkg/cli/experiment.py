import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional

from config import config
from distributions import TailDistribution, VaryingFamily
from generators import CounterexampleModel, IidModel, SequenceModel
from maxsum_stats import StatisticKind
from slowly_varying import Normalizer, SlowlyVaryingFn

SCHEMA_VERSION = 1
SEED_LIMIT = 2 ** 64

KINDS = ("check-condition", "simulate", "counterexample", "dyadic", "sv-verify", "ui-check", "variance-check")

PARAM_KEYS = {
    "check-condition": {"compare_L"},
    "simulate": set(),
    "counterexample": {"p_values", "restricted_n_max", "mc_n_grid"},
    "dyadic": {"a", "b", "ab", "eps1", "lambda_n_max", "bound_n_max", "km_m_max", "paths", "scales"},
    "sv-verify": {"gammas", "log_x_grid", "karamata", "regularize_r"},
    "ui-check": {"a_levels", "t_grid", "r"},
    "variance-check": {"transforms", "ells", "offset", "pairwise_q", "extra_models"},
}

NORMALIZER_KEYS = {"p", "L", "rule"}
THRESHOLD_KEYS = {"converge_upper", "diverge_lower"}


class ConfigError(ValueError):
    """Invalid experiment config; carries one diagnostic per problem"""

    def __init__(self, diagnostics: List[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("invalid experiment config: " + "; ".join(self.diagnostics))


@dataclass
class ExperimentConfig:
    """Versioned experiment description, loaded from JSON"""
    kind: str
    normalizer: Dict = field(default_factory=lambda: {"p": 1.0, "L": "1", "rule": "standard"})
    model: Optional[Dict] = None
    distribution: Optional[Dict] = None
    statistics: List[str] = field(default_factory=lambda: ["max_centered_truncmean"])
    n_grid: List[int] = field(default_factory=list)
    eps: List[float] = field(default_factory=list)
    reps: Optional[int] = None
    seed: Optional[int] = None
    out_dir: Optional[str] = None
    thresholds: Dict = field(default_factory=dict)
    params: Dict = field(default_factory=dict)
    version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentConfig":
        """Validate a raw mapping; every problem is collected before raising"""
        if not isinstance(data, dict):
            raise ConfigError([f"config must be a JSON object, got {type(data).__name__}"])
        known = {f.name for f in fields(cls)}
        problems = [f"unknown key {key!r}" for key in sorted(set(data) - known)]
        if "kind" not in data:
            problems.append("missing key 'kind'")
        if problems:
            raise ConfigError(problems)

        normalizer = data.get("normalizer", {"p": 1.0, "L": "1"})
        cfg = cls(
            kind=data["kind"],
            normalizer=dict(normalizer) if isinstance(normalizer, dict) else normalizer,
            model=data.get("model"),
            distribution=data.get("distribution"),
            statistics=list(data.get("statistics", ["max_centered_truncmean"])),
            n_grid=list(data.get("n_grid", [])),
            eps=list(data.get("eps", [])),
            reps=data.get("reps"),
            seed=data.get("seed"),
            out_dir=data.get("out_dir"),
            thresholds=dict(data.get("thresholds", {})),
            params=dict(data.get("params", {})),
            version=data.get("version", SCHEMA_VERSION),
        )
        cfg.validate()
        return cfg

    def to_dict(self) -> Dict:
        return asdict(self)

    @property
    def stochastic(self) -> bool:
        if self.kind == "simulate":
            return True
        if self.kind == "variance-check":
            return self.model is not None
        if self.kind == "counterexample":
            return self.reps is not None
        if self.kind == "dyadic":
            return self.reps is not None or int(self.params.get("paths", 0)) > 0
        return False

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form; the output directory is not part of it"""
        payload = self.to_dict()
        payload.pop("out_dir")
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    # Builders
    def build_normalizer(self) -> Normalizer:
        return Normalizer(
            p=float(self.normalizer["p"]),
            L=SlowlyVaryingFn.parse(str(self.normalizer.get("L", "1"))),
            rule=self.normalizer.get("rule", "standard"),
        )

    def build_model(self) -> Optional[SequenceModel]:
        return None if self.model is None else SequenceModel.from_descriptor(self.model)

    def build_models(self) -> List[SequenceModel]:
        """The configured model followed by params.extra_models (variance-check arms)"""
        if self.model is None:
            return []
        return [self.build_model()] + [SequenceModel.from_descriptor(d) for d in self.params.get("extra_models", [])]

    def build_family(self) -> Optional[VaryingFamily]:
        """Marginal laws of the configured distribution, else of the model"""
        if self.distribution is not None:
            return VaryingFamily.from_descriptor(self.distribution)
        if self.model is not None:
            return self.build_model().family()
        return None

    def build_distribution(self) -> Optional[TailDistribution]:
        """The common law when the marginals are identical, otherwise None"""
        fam = self.build_family()
        return fam.base if fam is not None and fam.identical else None

    def build_sampling_model(self) -> Optional[SequenceModel]:
        """The model, or the independent sequence with the distribution's marginals"""
        if self.model is not None:
            return self.build_model()
        fam = self.build_family()
        if fam is None:
            return None
        return IidModel(fam.base) if fam.identical else CounterexampleModel(fam.p)

    def with_overrides(self, seed: int = None, reps: int = None, out_dir: str = None) -> "ExperimentConfig":
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if reps is not None:
            changes["reps"] = reps
        if out_dir is not None:
            changes["out_dir"] = str(out_dir)
        cfg = replace(self, **changes)
        cfg.validate()
        return cfg

    # Validation
    def validate(self):
        problems = []
        if self.version != SCHEMA_VERSION:
            problems.append(f"unsupported version {self.version!r} (expected {SCHEMA_VERSION})")
        if self.kind not in KINDS:
            problems.append(f"unknown kind {self.kind!r} (known: {', '.join(KINDS)})")
            raise ConfigError(problems)

        problems += self._check_normalizer()
        problems += self._check_descriptors()
        problems += self._check_grids()
        problems += self._check_thresholds()

        extra = set(self.params) - PARAM_KEYS[self.kind]
        if extra:
            problems.append(f"unknown params {sorted(extra)} for kind {self.kind!r}")

        if self.stochastic:
            if self.seed is None:
                problems.append(f"kind {self.kind!r} is stochastic and needs a seed")
            elif not isinstance(self.seed, int) or not 0 <= self.seed < SEED_LIMIT:
                problems.append(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        problems += self._check_requirements()
        if problems:
            raise ConfigError(problems)
        return True

    def _check_normalizer(self) -> List[str]:
        if not isinstance(self.normalizer, dict):
            return ["normalizer must be an object with keys p, L, rule"]
        problems = [f"unknown normalizer key {k!r}" for k in sorted(set(self.normalizer) - NORMALIZER_KEYS)]
        if "p" not in self.normalizer:
            problems.append("normalizer needs 'p'")
            return problems
        self.normalizer.setdefault("L", "1")
        self.normalizer.setdefault("rule", "standard")
        try:
            self.build_normalizer()
        except (ValueError, TypeError) as e:
            problems.append(f"normalizer: {e}")
        return problems

    def _check_descriptors(self) -> List[str]:
        problems = []
        if self.model is not None:
            try:
                self.build_model()
            except (ValueError, TypeError, KeyError) as e:
                problems.append(f"model: {e}")
        if self.distribution is not None:
            try:
                VaryingFamily.from_descriptor(self.distribution)
            except (ValueError, TypeError, KeyError) as e:
                problems.append(f"distribution: {e}")
        for i, desc in enumerate(self.params.get("extra_models", [])):
            try:
                SequenceModel.from_descriptor(desc)
            except (ValueError, TypeError, KeyError) as e:
                problems.append(f"params.extra_models[{i}]: {e}")
        for name in self.statistics:
            try:
                StatisticKind.parse(name)
            except ValueError as e:
                problems.append(str(e))
        return problems

    def _check_grids(self) -> List[str]:
        problems = []
        grid = self.n_grid
        if not all(isinstance(n, int) and not isinstance(n, bool) for n in grid):
            problems.append("n_grid entries must be integers")
        elif grid and (grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:]))):
            problems.append("n_grid must be strictly increasing positive integers")
        if not all(isinstance(e, (int, float)) and e > 0 for e in self.eps):
            problems.append("eps values must be positive numbers")
        if self.reps is not None and (not isinstance(self.reps, int) or self.reps < config.MIN_REPS):
            problems.append(f"reps must be an integer >= {config.MIN_REPS}, got {self.reps!r}")
        return problems

    def _check_thresholds(self) -> List[str]:
        problems = [f"unknown threshold {k!r}" for k in sorted(set(self.thresholds) - THRESHOLD_KEYS)]
        upper = self.thresholds.get("converge_upper", config.CONVERGE_UPPER)
        lower = self.thresholds.get("diverge_lower", config.DIVERGE_LOWER)
        if not 0 < upper < 1 or not 0 < lower < 1:
            problems.append("verdict thresholds must lie in (0, 1)")
        elif upper >= lower:
            problems.append("converge_upper must be below diverge_lower")
        return problems

    def _check_requirements(self) -> List[str]:
        problems = []
        kind = self.kind
        if self.model is not None and self.distribution is not None:
            problems.append("give either a model or a distribution, not both")
        if kind == "simulate":
            for name in ("model", "reps"):
                if getattr(self, name) is None:
                    problems.append(f"simulate needs '{name}'")
            if not self.n_grid or not self.eps:
                problems.append("simulate needs a nonempty n_grid and eps")
            if not self.statistics:
                problems.append("simulate needs at least one statistic")
        elif kind == "counterexample":
            if not self.n_grid or not self.eps:
                problems.append("counterexample needs a nonempty n_grid and eps")
            elif not all(0 < e < 0.25 for e in self.eps):
                problems.append("counterexample eps must lie in (0, 1/4)")
        elif kind == "check-condition":
            if not self.n_grid:
                problems.append("check-condition needs a nonempty n_grid")
            if self.distribution is None and self.model is None:
                problems.append("check-condition needs a distribution or a model")
            elif not self._identical_marginals():
                problems.append("check-condition needs an identically distributed law, not a varying family")
        elif kind == "dyadic":
            if self.distribution is None and self.model is None:
                problems.append("dyadic needs a distribution or a model")
            if self.reps is not None and (not self.n_grid or not self.eps):
                problems.append("dyadic reduction runs need n_grid and eps")
        elif kind == "ui-check":
            if self.distribution is None and self.model is None:
                problems.append("ui-check needs a distribution or a model")
        elif kind == "variance-check":
            if self.model is None and not self.params.get("pairwise_q"):
                problems.append("variance-check needs a model or params.pairwise_q")
            if self.model is not None and self.reps is None:
                problems.append("variance-check with a model needs 'reps'")
            if self.params.get("extra_models") and self.model is None:
                problems.append("params.extra_models needs a primary model")
        return problems

    def _identical_marginals(self) -> bool:
        try:
            return self.build_distribution() is not None
        except (ValueError, TypeError, KeyError):
            # already reported by _check_descriptors
            return True


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON experiment file"""
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError([f"cannot read {path}: {e.strerror}"]) from e
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"]) from e
    return ExperimentConfig.from_dict(data)


PARETO_1 = {"kind": "pareto", "q": 1.0, "c": 1.0, "L0": "1"}

PRESETS: Dict[str, Dict] = {
    "counterexample-nonconvergence": {
        "kind": "counterexample",
        "normalizer": {"p": 1.0, "L": "1", "rule": "standard"},
        "statistics": ["max_abs", "max_centered_truncmean"],
        "n_grid": [1000, 10000, 100000],
        "eps": [0.2],
        "reps": 10000,
        "seed": 20240601,
        "params": {"mc_n_grid": [1000, 10000]},
    },
    "counterexample-lower-bound": {
        "kind": "counterexample",
        "normalizer": {"p": 1.0, "L": "1", "rule": "standard"},
        "n_grid": [10, 1000, 1000000],
        "eps": [0.2],
        "params": {"p_values": [1.0, 1.5, 1.9], "restricted_n_max": 1000000},
    },
    "ui-failure": {
        "kind": "ui-check",
        "model": {"kind": "counterexample", "p": 1.0},
        "normalizer": {"p": 1.0, "L": "1", "rule": "standard"},
        "params": {"a_levels": [1.0, 10.0, 1000.0]},
    },
    "joffe-positive": {
        "kind": "simulate",
        "model": {"kind": "joffe", "q": 4099, "marginal": PARETO_1, "block_mode": True},
        "normalizer": {"p": 1.0, "L": "log", "rule": "standard"},
        "statistics": ["max_centered_truncmean"],
        "n_grid": [2 ** k for k in range(10, 17)],
        "eps": [0.1],
        "reps": 2000,
        "seed": 20240602,
    },
    "gut-boundary": {
        "kind": "check-condition",
        "distribution": PARETO_1,
        "normalizer": {"p": 1.0, "L": "1", "rule": "standard"},
        "n_grid": [10 ** k for k in range(1, 10)],
        "params": {"compare_L": ["log"]},
    },
    "dyadic-slack": {
        "kind": "dyadic",
        "distribution": PARETO_1,
        "normalizer": {"p": 1.0, "L": "log", "rule": "standard"},
        "seed": 20240603,
        "params": {"paths": 1000, "scales": list(range(1, 13)), "lambda_n_max": 12, "bound_n_max": 12,
                   "km_m_max": 12},
    },
    "lambda-thresholds": {
        "kind": "dyadic",
        "distribution": PARETO_1,
        "normalizer": {"p": 1.0, "L": "log", "rule": "standard"},
        "params": {"ab": [[0.75, 0.25], [0.6, 0.4], [0.9, 0.1]], "lambda_n_max": 60, "bound_n_max": 60,
                   "km_m_max": 20},
    },
    "bound-decay": {
        "kind": "dyadic",
        "distribution": PARETO_1,
        "normalizer": {"p": 1.0, "L": "log", "rule": "standard"},
        "params": {"bound_n_max": 2000, "lambda_n_max": 60, "km_m_max": 30},
    },
    "joffe-exactness": {
        "kind": "variance-check",
        "params": {"pairwise_q": [5, 7, 11, 31]},
    },
    "de-bruijn": {
        "kind": "sv-verify",
        "normalizer": {"p": 1.0, "L": "log", "rule": "standard"},
        "params": {"gammas": [-1.0, 1.0, 2.0], "log_x_grid": [10.0, 20.0, 50.0, 100.0, 200.0]},
    },
    "variance-sanity": {
        "kind": "variance-check",
        "model": {"kind": "joffe", "q": 101, "marginal": {"kind": "uniform", "v": 1.0}, "block_mode": True},
        "reps": 10000,
        "seed": 20240604,
        "params": {"transforms": ["identity", "clip:0.5"], "ells": [4, 16, 64], "offset": 0,
                   "extra_models": [{"kind": "iid", "marginal": {"kind": "uniform", "v": 1.0}}]},
    },
    "open-problem-pairwise": {
        "kind": "simulate",
        "model": {"kind": "joffe", "q": 4099, "block_mode": True,
                  "marginal": {"kind": "pareto", "q": 1.5, "c": 1.0, "L0": "log"}},
        "normalizer": {"p": 1.5, "L": "1", "rule": "standard"},
        "statistics": ["max_centered_truncmean", "plain_centered_sum"],
        "n_grid": [2 ** k for k in range(10, 16)],
        "eps": [0.1, 0.2],
        "reps": 1000,
        "seed": 20240605,
    },
    "iid-boundary-drift": {
        "kind": "simulate",
        "model": {"kind": "iid", "marginal": PARETO_1},
        "normalizer": {"p": 1.0, "L": "1", "rule": "standard"},
        "statistics": ["max_centered_truncmean", "centering_drift"],
        "n_grid": [2 ** k for k in range(8, 15)],
        "eps": [0.2],
        "reps": 1000,
        "seed": 20240606,
    },
}


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r} (known: {', '.join(sorted(PRESETS))})"])
    return ExperimentConfig.from_dict(json.loads(json.dumps(PRESETS[name])))


def write_presets(out_dir) -> List[Path]:
    """Write every preset as <name>.json"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(PRESETS):
        path = out_dir / f"{name}.json"
        with path.open("w", encoding="utf-8") as f:
            json.dump(load_preset(name).to_dict(), f, indent=2)
        paths.append(path)
    return paths
