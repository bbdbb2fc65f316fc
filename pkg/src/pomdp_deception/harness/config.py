"""Experiment configuration and the key-value config file loader."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..deception import KernelKind, KernelSpec
from ..linear_vf import LvfaConfig
from ..pomcp import PomcpConfig
from ..problems import RockSampleConfig, TigerConfig, parse_map

PROBLEMS = ("tiger", "rocksample")
SOLVERS = ("vi", "lvfa", "pomcp")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "tiger"
    solver: str = "lvfa"
    kernel: KernelSpec = KernelSpec()
    episodes: int = 1000
    master_seed: int = 7
    out_dir: str | None = None
    workers: int = 1
    runs: int = 2  # independent training runs pooled for LVFA statistics
    vi_horizon: int = 8
    label: str = ""
    tiger: TigerConfig = field(default_factory=TigerConfig)
    rocksample: RockSampleConfig = field(default_factory=RockSampleConfig)
    lvfa: LvfaConfig = field(default_factory=LvfaConfig)
    pomcp: PomcpConfig = field(default_factory=PomcpConfig)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")

    @property
    def kernel_label(self) -> str:
        k = self.kernel
        if k.kind is KernelKind.NONE:
            return "baseline"
        name = k.kind.value
        if k.r_d != 0.0:
            name += "-rewarded"
        return name

    def with_kernel(self, kernel: KernelSpec) -> "ExperimentConfig":
        return replace(self, kernel=kernel)


_BOOL = {"true": True, "false": False, "yes": True, "no": False}


def _auto(value: str):
    v = value.strip()
    low = v.lower()
    if low in _BOOL:
        return _BOOL[low]
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def load_config(path: str | Path) -> ExperimentConfig:
    """Load an ExperimentConfig from an INI-style key-value file.

    Sections: [experiment], [kernel], [tiger], [rocksample], [lvfa], [pomcp].
    [rocksample] accepts either explicit geometry keys or map_file = <path>
    pointing at a plain-text grid.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are dataclass field names; keep case
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)

    kw: dict = {}
    if parser.has_section("experiment"):
        for key, raw in parser.items("experiment"):
            kw[key] = _auto(raw)

    if parser.has_section("kernel"):
        kraw = {k: _auto(v) for k, v in parser.items("kernel")}
        kind = KernelKind(str(kraw.pop("kind", "none")).lower())
        kw["kernel"] = KernelSpec(
            kind=kind,
            p_k=float(kraw.pop("p_k", 1.0)),
            r_d=float(kraw.pop("r_d", 0.0)),
        )
        if kraw:
            raise ValueError(f"unknown kernel keys: {sorted(kraw)}")

    if parser.has_section("tiger"):
        kw["tiger"] = TigerConfig(**{k: _auto(v) for k, v in parser.items("tiger")})

    if parser.has_section("rocksample"):
        rs = {k: _auto(v) for k, v in parser.items("rocksample")}
        map_file = rs.pop("map_file", None)
        if map_file is not None:
            base = Path(path).parent / str(map_file)
            kw["rocksample"] = parse_map(base.read_text(), **rs)
        else:
            if "rock_positions" in rs:
                rs["rock_positions"] = tuple(
                    tuple(int(c) for c in cell.split(","))
                    for cell in str(rs["rock_positions"]).split(";")
                )
            if "start" in rs:
                rs["start"] = tuple(int(c) for c in str(rs["start"]).split(","))
            kw["rocksample"] = RockSampleConfig(**rs)

    if parser.has_section("lvfa"):
        kw["lvfa"] = LvfaConfig(**{k: _auto(v) for k, v in parser.items("lvfa")})

    if parser.has_section("pomcp"):
        kw["pomcp"] = PomcpConfig(**{k: _auto(v) for k, v in parser.items("pomcp")})

    return ExperimentConfig(**kw)
