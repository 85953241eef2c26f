import hashlib
import json
import math
import tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from cs_qaoa_lab.constraints import KINDS, ConstraintSpec
from cs_qaoa_lab.errors import ConfigError
from cs_qaoa_lab.qaoa import MODES, XY_SCOPES

PROBLEM_KINDS = ("maxkcut", "qap", "qkp", "toy")
CS_VARIANTS = ("onehot", "onehot-gate", "binary", "binary-parity", "C", "D")
DEFAULT_INSTANCES = {"maxkcut": 10, "qap": 10, "qkp": 6, "toy": 1}


def load_config(config_file: Path | None) -> dict[str, Any]:
    if config_file is None:
        return {}

    if not config_file.exists():
        raise FileNotFoundError(f"Config file not found: {config_file}")

    suffix = config_file.suffix.lower()
    with open(config_file, "rb") as f:
        try:
            if suffix == ".toml":
                data = tomllib.load(f)
            elif suffix == ".json":
                data = json.loads(f.read().decode("utf-8"))
            else:
                raise ConfigError(f"Unsupported config format '{suffix}'. Use .toml or .json")
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Invalid TOML config file: {config_file}. {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON config file: {config_file}. {e}") from e

    if not isinstance(data, dict):
        raise ConfigError("Config file must contain a table at the top level")

    return data


def parse_mode(label: str) -> tuple[str, str | None]:
    """'x' -> ('x', None); 'cs-binary-parity' -> ('cs', 'binary-parity')."""
    base, _, variant = label.partition("-")
    if base not in MODES:
        raise ConfigError(f"Unknown mode '{label}'. Use one of {', '.join(MODES)}, optionally cs-<variant>")
    if not variant:
        return base, None
    if base != "cs" or variant not in CS_VARIANTS:
        raise ConfigError(f"Unknown mode variant '{label}'. CS variants: {', '.join(CS_VARIANTS)}")
    return base, variant


def _section(config: dict[str, Any], name: str) -> dict[str, Any]:
    section = config.get(name)
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"Config key '{name}' must be a table")
    return section


def _reject_unknown(section: dict[str, Any], allowed: set[str], prefix: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        where = f"'{prefix}'" if prefix else "the top level"
        raise ConfigError(f"Unknown config key(s) in {where}: {', '.join(unknown)}")


def _key(prefix: str, key: str) -> str:
    return f"{prefix}.{key}" if prefix else key


def _int(section: dict[str, Any], prefix: str, key: str, default: int, minimum: int | None = None) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"Config key '{_key(prefix, key)}' must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"Config key '{_key(prefix, key)}' must be >= {minimum}, got {value}")
    return value


def _float(
    section: dict[str, Any],
    prefix: str,
    key: str,
    default: float | None,
    minimum: float | None = None,
) -> float | None:
    value = section.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"Config key '{_key(prefix, key)}' must be a finite number")
    if minimum is not None and value < minimum:
        raise ConfigError(f"Config key '{_key(prefix, key)}' must be >= {minimum}, got {value}")
    return float(value)


def _bool(section: dict[str, Any], prefix: str, key: str, default: bool) -> bool:
    value = section.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"Config key '{_key(prefix, key)}' must be true or false")
    return value


def _str(
    section: dict[str, Any],
    prefix: str,
    key: str,
    default: str | None,
    choices: tuple[str, ...] | None = None,
) -> str | None:
    value = section.get(key, default)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ConfigError(f"Config key '{_key(prefix, key)}' must be a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"Config key '{_key(prefix, key)}' must be one of {', '.join(choices)}, got '{value}'")
    return value


def _list(section: dict[str, Any], prefix: str, key: str, default: list[Any]) -> list[Any]:
    value = section.get(key, default)
    if not isinstance(value, list) or not value:
        raise ConfigError(f"Config key '{_key(prefix, key)}' must be a non-empty list")
    return value


def _int_list(section: dict[str, Any], prefix: str, key: str, default: list[int], minimum: int = 0) -> tuple[int, ...]:
    values = _list(section, prefix, key, default)
    if any(isinstance(v, bool) or not isinstance(v, int) or v < minimum for v in values):
        raise ConfigError(f"Config key '{_key(prefix, key)}' must list integers >= {minimum}")
    return tuple(values)


def _float_list(section: dict[str, Any], prefix: str, key: str, default: list[float]) -> tuple[float, ...]:
    values = _list(section, prefix, key, default)
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise ConfigError(f"Config key '{_key(prefix, key)}' must list finite non-negative numbers")
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class ProblemSection:
    kind: str = "maxkcut"
    sizes: tuple[int, ...] = (4,)
    k: int = 3
    n_instances: int = 10
    benchmark: str | None = None
    benchmark_items: int = 100
    benchmark_density: float = 0.5
    filter: bool = False
    accept_low: float = 0.1
    accept_high: float = 0.5
    max_draws: int = 100

    @classmethod
    def from_dict(cls, section: dict[str, Any]) -> "ProblemSection":
        p = "problem"
        _reject_unknown(section, {f.name for f in fields(cls)}, p)
        kind = _str(section, p, "kind", "maxkcut", PROBLEM_KINDS)
        assert kind is not None
        minimum = 1 if kind == "qkp" else 2
        low = _float(section, p, "accept_low", 0.1, 0.0)
        high = _float(section, p, "accept_high", 0.5, 0.0)
        assert low is not None and high is not None
        if low > high or high > 1.0:
            raise ConfigError("Config keys 'problem.accept_low' <= 'problem.accept_high' <= 1 must hold")
        density = _float(section, p, "benchmark_density", 0.5, 0.0)
        assert density is not None
        if not 0.0 < density <= 1.0:
            raise ConfigError("Config key 'problem.benchmark_density' must lie in (0, 1]")
        return cls(
            kind=kind,
            sizes=_int_list(section, p, "sizes", [4], minimum),
            k=_int(section, p, "k", 3, 2),
            n_instances=_int(section, p, "n_instances", DEFAULT_INSTANCES[kind], 1),
            benchmark=_str(section, p, "benchmark", None),
            benchmark_items=_int(section, p, "benchmark_items", 100, 1),
            benchmark_density=density,
            filter=_bool(section, p, "filter", False),
            accept_low=low,
            accept_high=high,
            max_draws=_int(section, p, "max_draws", 100, 1),
        )


@dataclass(frozen=True)
class QaoaSection:
    modes: tuple[str, ...] = ("x", "cs")
    layers: tuple[int, ...] = (1,)
    n_starts: int = 11
    start_range: float = 2.0 * math.pi
    xy_scope: str = "block"
    ftol: float = 1e-3
    xtol: float = 1e-4
    max_iter: int = 1000

    @classmethod
    def from_dict(cls, section: dict[str, Any]) -> "QaoaSection":
        p = "qaoa"
        _reject_unknown(section, {f.name for f in fields(cls)}, p)
        modes = _list(section, p, "modes", ["x", "cs"])
        if any(not isinstance(m, str) for m in modes):
            raise ConfigError("Config key 'qaoa.modes' must list strings")
        for mode in modes:
            parse_mode(mode)
        start_range = _float(section, p, "start_range", 2.0 * math.pi, 0.0)
        ftol = _float(section, p, "ftol", 1e-3, 0.0)
        xtol = _float(section, p, "xtol", 1e-4, 0.0)
        assert start_range is not None and ftol is not None and xtol is not None
        if ftol == 0.0 or xtol == 0.0:
            raise ConfigError("Config keys 'qaoa.ftol' and 'qaoa.xtol' must be positive")
        xy_scope = _str(section, p, "xy_scope", "block", XY_SCOPES)
        assert xy_scope is not None
        return cls(
            modes=tuple(modes),
            layers=_int_list(section, p, "layers", [1], 0),
            n_starts=_int(section, p, "n_starts", 11, 1),
            start_range=start_range,
            xy_scope=xy_scope,
            ftol=ftol,
            xtol=xtol,
            max_iter=_int(section, p, "max_iter", 1000, 1),
        )


@dataclass(frozen=True)
class PenaltySection:
    lower: float = 0.0
    upper: float = 10.0
    precision: float = 0.5
    grid_points: int = 5
    fixed: float | None = None

    @classmethod
    def from_dict(cls, section: dict[str, Any]) -> "PenaltySection":
        p = "penalty"
        _reject_unknown(section, {f.name for f in fields(cls)}, p)
        lower = _float(section, p, "lower", 0.0, 0.0)
        upper = _float(section, p, "upper", 10.0, 0.0)
        precision = _float(section, p, "precision", 0.5, 0.0)
        assert lower is not None and upper is not None and precision is not None
        if lower > upper:
            raise ConfigError(f"Config key 'penalty.lower' ({lower}) exceeds 'penalty.upper' ({upper})")
        if precision == 0.0:
            raise ConfigError("Config key 'penalty.precision' must be positive")
        return cls(
            lower=lower,
            upper=upper,
            precision=precision,
            grid_points=_int(section, p, "grid_points", 5, 4),
            fixed=_float(section, p, "fixed", None, 0.0),
        )


@dataclass(frozen=True)
class CompressorTarget:
    """Constraint on variables 0..n-1 for standalone compressor training."""

    kind: str
    n: int
    lower: float | None = None
    upper: float | None = None
    coefficients: tuple[float, ...] | None = None
    m: int | None = None

    def constraint(self) -> ConstraintSpec:
        return ConstraintSpec(
            tuple(range(self.n)),
            self.kind,
            self.coefficients,
            lower=self.lower,
            upper=self.upper,
        )

    @classmethod
    def from_dict(cls, section: dict[str, Any], prefix: str) -> "CompressorTarget":
        _reject_unknown(section, {f.name for f in fields(cls)}, prefix)
        kind = _str(section, prefix, "kind", "range", tuple(k for k in KINDS if k != "general"))
        assert kind is not None
        n = _int(section, prefix, "n", 0, 1)
        coefficients = section.get("coefficients")
        if coefficients is not None:
            if not isinstance(coefficients, list) or len(coefficients) != n:
                raise ConfigError(f"Config key '{prefix}.coefficients' must list {n} numbers")
            coefficients = tuple(float(c) for c in coefficients)
        m = section.get("m")
        if m is not None:
            m = _int(section, prefix, "m", 1, 1)
            if m > n:
                raise ConfigError(f"Config key '{prefix}.m' must not exceed n={n}")
        target = cls(kind, n, _float(section, prefix, "lower", None), _float(section, prefix, "upper", None), coefficients, m)
        try:
            target.constraint()
        except ValueError as e:
            raise ConfigError(f"Config key '{prefix}': {e}") from e
        return target


@dataclass(frozen=True)
class CompressorSection:
    ansatz: str = "D"
    layers: int = 1
    n_rep: int = 10
    n_loop: int = 1000
    t_initial: float = 1.0
    t_final: float = 1e-3
    threshold: float | None = None
    max_escalations: int = 3
    n_compressors: int = 5
    form: str = "permutation"
    database: str | None = None
    targets: tuple[CompressorTarget, ...] = ()

    @classmethod
    def from_dict(cls, section: dict[str, Any]) -> "CompressorSection":
        p = "compressor"
        _reject_unknown(section, {f.name for f in fields(cls)}, p)
        t_initial = _float(section, p, "t_initial", 1.0, 0.0)
        t_final = _float(section, p, "t_final", 1e-3, 0.0)
        assert t_initial is not None and t_final is not None
        if not t_initial >= t_final > 0:
            raise ConfigError("Config keys 'compressor.t_initial' >= 'compressor.t_final' > 0 must hold")
        threshold = _float(section, p, "threshold", None, 0.0)
        if threshold is not None and threshold > 1.0:
            raise ConfigError("Config key 'compressor.threshold' must lie in [0, 1]")
        raw_targets = section.get("targets", [])
        if not isinstance(raw_targets, list) or any(not isinstance(t, dict) for t in raw_targets):
            raise ConfigError("Config key 'compressor.targets' must be a list of tables")
        ansatz = _str(section, p, "ansatz", "D", ("C", "D"))
        form = _str(section, p, "form", "permutation", ("permutation", "gate"))
        assert ansatz is not None and form is not None
        return cls(
            ansatz=ansatz,
            layers=_int(section, p, "layers", 1, 1),
            n_rep=_int(section, p, "n_rep", 10, 1),
            n_loop=_int(section, p, "n_loop", 1000, 1),
            t_initial=t_initial,
            t_final=t_final,
            threshold=threshold,
            max_escalations=_int(section, p, "max_escalations", 3, 0),
            n_compressors=_int(section, p, "n_compressors", 5, 1),
            form=form,
            database=_str(section, p, "database", None),
            targets=tuple(CompressorTarget.from_dict(t, f"{p}.targets[{i}]") for i, t in enumerate(raw_targets)),
        )


@dataclass(frozen=True)
class NoiseSection:
    epsilons: tuple[float, ...] = (0.0,)
    trajectories: int = 10

    @classmethod
    def from_dict(cls, section: dict[str, Any]) -> "NoiseSection":
        p = "noise"
        _reject_unknown(section, {f.name for f in fields(cls)}, p)
        epsilons = _float_list(section, p, "epsilons", [0.0])
        if any(e >= 0.8 for e in epsilons):
            raise ConfigError("Config key 'noise.epsilons' must list gate errors below 0.8")
        return cls(epsilons=epsilons, trajectories=_int(section, p, "trajectories", 10, 1))


@dataclass(frozen=True)
class FluctuationSection:
    samples: int = 100

    @classmethod
    def from_dict(cls, section: dict[str, Any]) -> "FluctuationSection":
        p = "fluctuation"
        _reject_unknown(section, {f.name for f in fields(cls)}, p)
        return cls(samples=_int(section, p, "samples", 100, 2))


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    out: str = "results"
    problem: ProblemSection = field(default_factory=ProblemSection)
    qaoa: QaoaSection = field(default_factory=QaoaSection)
    penalty: PenaltySection = field(default_factory=PenaltySection)
    compressor: CompressorSection = field(default_factory=CompressorSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    fluctuation: FluctuationSection = field(default_factory=FluctuationSection)

    def to_dict(self) -> dict[str, Any]:
        """Fully resolved document; the input to config_hash."""
        return _jsonable(asdict(self))

    @property
    def hash(self) -> str:
        document = self.to_dict()
        document.pop("out", None)
        return config_hash(document)


_SECTIONS = {
    "problem": ProblemSection,
    "qaoa": QaoaSection,
    "penalty": PenaltySection,
    "compressor": CompressorSection,
    "noise": NoiseSection,
    "fluctuation": FluctuationSection,
}


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def build_config(document: dict[str, Any], seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    """Validate a raw document. ``seed`` and ``out`` override the document."""
    _reject_unknown(document, {"seed", "out", *_SECTIONS}, "")
    sections = {name: cls.from_dict(_section(document, name)) for name, cls in _SECTIONS.items()}
    resolved_seed = seed if seed is not None else _int(document, "", "seed", 0, 0)
    if resolved_seed < 0:
        raise ConfigError(f"Seed must be non-negative, got {resolved_seed}")
    resolved_out = out if out is not None else _str(document, "", "out", "results")
    assert resolved_out is not None
    return ExperimentConfig(seed=resolved_seed, out=resolved_out, **sections)


def config_hash(document: dict[str, Any]) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
