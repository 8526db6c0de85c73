"""Study configuration.

A study is described by a JSON object::

    {
      "population": {"generator": "sym", "params": {}, "size": 7142, "seed": 1},
      "scenario": {"n": 100, "f": 0.3},
      "design": "srswor",
      "p": 0.5,
      "methods": ["UNSMTHD", {"type": "FIXED", "C": 13.71}, "PLUG-IN",
                  {"type": "BOOT", "grid": {"c_lo": 5, "c_hi": 25, "m": 10}, "D": 25}],
      "B": 500, "R": 200, "S_mse": 3000, "alpha": 0.05, "seed": 2024,
      "output": "out/study"
    }

``population`` may instead be ``{"csv": "path/to/pop.csv"}``. The study
population is the first ``N = floor(n / f)`` units of the master population.
Unknown keys are rejected at every level.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..popgen import GENERATORS, MASTER_SIZE, scenario_size

DESIGNS = ("srswor", "poisson", "pps")
METHOD_TYPES = ("UNSMTHD", "FIXED", "PLUG-IN", "BOOT")


class ConfigError(ValueError):
    pass


def _check_keys(obj: dict, allowed, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


@dataclass(frozen=True)
class PopulationSpec:
    generator: Optional[str] = None
    params: dict = field(default_factory=dict)
    size: Optional[int] = None
    seed: Optional[int] = None
    csv: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "PopulationSpec":
        _check_keys(d, ("generator", "params", "size", "seed", "csv"), "population")
        spec = cls(**d)
        if (spec.generator is None) == (spec.csv is None):
            raise ConfigError("population: give exactly one of 'generator' or 'csv'")
        if spec.generator is not None and spec.generator not in GENERATORS:
            raise ConfigError(f"population: unknown generator {spec.generator!r}; choose from {sorted(GENERATORS)}")
        if spec.csv is not None and (spec.params or spec.seed is not None or spec.size is not None):
            raise ConfigError("population: 'params', 'seed' and 'size' only apply to generators")
        if spec.generator is not None:
            size = MASTER_SIZE if spec.size is None else int(spec.size)
            if size < 1:
                raise ConfigError("population: size must be positive")
            spec = cls(spec.generator, dict(spec.params), size, spec.seed)
        return spec


@dataclass(frozen=True)
class MethodSpec:
    """One bootstrap method of the study.

    ``FIXED`` takes either a bandwidth ``h`` or a constant ``C`` (then
    ``h = C n^(-1/5)``). ``BOOT`` takes a constant grid and the number ``D``
    of second-level replicates.
    """

    type: str
    label: str
    h: Optional[float] = None
    C: Optional[float] = None
    grid: Optional[dict] = None
    D: int = 50
    reuse: bool = True

    @classmethod
    def parse(cls, item: Union[str, dict]) -> "MethodSpec":
        if isinstance(item, str):
            item = {"type": item}
        _check_keys(item, ("type", "label", "h", "C", "grid", "D", "reuse"), "method")
        kind = item.get("type")
        if kind not in METHOD_TYPES:
            raise ConfigError(f"method: unknown type {kind!r}; choose from {list(METHOD_TYPES)}")
        extra = set(item) - {"type", "label"}
        if kind in ("UNSMTHD", "PLUG-IN") and extra:
            raise ConfigError(f"method {kind} takes no parameters, got {sorted(extra)}")
        if kind == "FIXED":
            if ("h" in item) == ("C" in item) or extra - {"h", "C"}:
                raise ConfigError("method FIXED needs exactly one of 'h' or 'C'")
            value = item.get("h", item.get("C"))
            if not value >= 0:
                raise ConfigError("method FIXED: bandwidth must be nonnegative")
        if kind == "BOOT":
            if extra - {"grid", "D", "reuse"} or "grid" not in item:
                raise ConfigError("method BOOT needs 'grid' and optionally 'D' and 'reuse'")
            _check_keys(item["grid"], ("c_lo", "c_hi", "m"), "method BOOT grid")
            if set(item["grid"]) != {"c_lo", "c_hi", "m"}:
                raise ConfigError("method BOOT grid needs c_lo, c_hi and m")
            if int(item.get("D", 50)) < 2:
                raise ConfigError("method BOOT: D must be at least 2")
        label = item.get("label") or _default_label(item)
        return cls(
            type=kind,
            label=label,
            h=item.get("h"),
            C=item.get("C"),
            grid=dict(item["grid"]) if "grid" in item else None,
            D=int(item.get("D", 50)),
            reuse=bool(item.get("reuse", True)),
        )

    def to_dict(self) -> dict:
        out = {"type": self.type, "label": self.label}
        if self.type == "FIXED":
            out["h" if self.h is not None else "C"] = self.h if self.h is not None else self.C
        if self.type == "BOOT":
            out.update(grid=self.grid, D=self.D, reuse=self.reuse)
        return out


def _default_label(item: dict) -> str:
    kind = item["type"]
    if kind == "FIXED":
        return f"FIXED(h={item['h']})" if "h" in item else f"FIXED(C={item['C']})"
    return kind


@dataclass(frozen=True)
class StudyConfig:
    population: PopulationSpec
    n: int
    f: float
    design: str
    p: float
    methods: tuple
    B: int = 1000
    R: int = 2000
    S_mse: int = 3000
    alpha: float = 0.05
    seed: int = 0
    output: Optional[str] = None

    @property
    def N(self) -> int:
        return scenario_size(self.n, self.f)

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "StudyConfig":
        _check_keys(d, ("population", "scenario", "design", "p", "methods", "B", "R", "S_mse", "alpha", "seed", "output"), "config")
        for key in ("population", "scenario", "design", "p", "methods"):
            if key not in d:
                raise ConfigError(f"config: missing required key {key!r}")
        pop = PopulationSpec.from_dict(d["population"])
        if pop.csv is not None and base_dir is not None and not Path(pop.csv).is_absolute():
            pop = PopulationSpec(csv=str(Path(base_dir) / pop.csv))
        _check_keys(d["scenario"], ("n", "f"), "scenario")
        n, f = int(d["scenario"]["n"]), float(d["scenario"]["f"])
        if not (n >= 1 and 0 < f <= 1):
            raise ConfigError("scenario: need n >= 1 and 0 < f <= 1")
        if d["design"] not in DESIGNS:
            raise ConfigError(f"design: unknown design {d['design']!r}; choose from {list(DESIGNS)}")
        p = float(d["p"])
        if not 0 < p < 1:
            raise ConfigError("p must lie in (0, 1)")
        if not isinstance(d["methods"], list) or not d["methods"]:
            raise ConfigError("methods: need a nonempty list")
        methods = tuple(MethodSpec.parse(m) for m in d["methods"])
        labels = [m.label for m in methods]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"methods: duplicate labels {labels}")
        if d["design"] != "srswor" and any(m.type == "PLUG-IN" for m in methods):
            raise ConfigError("methods: PLUG-IN is only available with the srswor design")
        cfg = cls(
            population=pop,
            n=n,
            f=f,
            design=d["design"],
            p=p,
            methods=methods,
            B=int(d.get("B", 1000)),
            R=int(d.get("R", 2000)),
            S_mse=int(d.get("S_mse", 3000)),
            alpha=float(d.get("alpha", 0.05)),
            seed=int(d.get("seed", 0)),
            output=d.get("output"),
        )
        if min(cfg.R, cfg.S_mse) < 1 or cfg.B < 2:
            raise ConfigError("need R >= 1, S_mse >= 1 and B >= 2")
        if not 0 < cfg.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if cfg.n > cfg.N:
            raise ConfigError(f"scenario needs n <= N, got n={n}, N={cfg.N}")
        if pop.size is not None and cfg.N > pop.size:
            raise ConfigError(f"scenario size N={cfg.N} exceeds the population size {pop.size}")
        return cfg

    def to_dict(self) -> dict:
        pop = {k: v for k, v in asdict(self.population).items() if v is not None and v != {}}
        return {
            "population": pop,
            "scenario": {"n": self.n, "f": self.f},
            "design": self.design,
            "p": self.p,
            "methods": [m.to_dict() for m in self.methods],
            "B": self.B,
            "R": self.R,
            "S_mse": self.S_mse,
            "alpha": self.alpha,
            "seed": self.seed,
            "output": self.output,
        }


def load_config(path) -> StudyConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return StudyConfig.from_dict(data, base_dir=path.parent)
