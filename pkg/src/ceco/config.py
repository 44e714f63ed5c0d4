"""Scenario configuration: a flat, sectioned ``key = value`` text file.

Grammar (read with :mod:`configparser`, so ``#`` and ``;`` start comments)::

    [ac]          ACParams fields
    [plant]       PlantParams fields other than ``ac`` and the seed
    [occupant]    OccupantParams fields
    [bounds]      ComfortBoundsSpec fields
    [mpc]         MpcConfig fields
    [solver]      SolverOptions fields
    [scenario]    cycle, cycle_dt, output_dir, seed, record_timing

Keys are the exact dataclass field names.  Numbers use Python float/int
syntax, booleans are ``true``/``false``, and ``eta_speed_knots`` is a comma
separated list of ``speed:multiplier`` pairs.  An empty ``cycle`` selects the
bundled synthetic cycle.  Omitted keys keep their defaults.

The environment variable ``CECO_SEED`` overrides ``scenario.seed``, which is
the plant perturbation seed.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .cabin import ACParams, PlantParams
from .comfort import ComfortBoundsSpec, OccupantParams
from .mpc import MpcConfig
from .nlp import SolverOptions

SEED_ENV = "CECO_SEED"


class ConfigError(ValueError):
    """Carries every problem found, one per line."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid configuration:\n" + "\n".join(f"  {e}" for e in errors))
        self.errors = errors


@dataclass(frozen=True)
class ScenarioSettings:
    cycle: str = ""
    cycle_dt: float = 5.0
    output_dir: str = "ceco_out"
    seed: int = 7
    record_timing: bool = False

    def validate(self) -> list[str]:
        errors = []
        if not self.cycle_dt > 0:
            errors.append("cycle_dt must be > 0")
        if not self.output_dir:
            errors.append("output_dir must be nonempty")
        return errors


@dataclass(frozen=True)
class ScenarioConfig:
    ac: ACParams = field(default_factory=ACParams)
    plant: PlantParams = field(default_factory=PlantParams)
    occupant: OccupantParams = field(default_factory=OccupantParams)
    bounds: ComfortBoundsSpec = field(default_factory=ComfortBoundsSpec)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    solver: SolverOptions = field(default_factory=SolverOptions)
    scenario: ScenarioSettings = field(default_factory=ScenarioSettings)

    def plant_params(self) -> PlantParams:
        """Plant parameters with the nominal model and seed filled in."""
        return replace(self.plant, ac=self.ac, perturbation_seed=self.scenario.seed)

    def validate(self) -> list[str]:
        errors = []
        for section in SECTIONS:
            for msg in getattr(self, section).validate():
                errors.append(f"[{section}] {msg}")
        if abs(self.mpc.ts - self.ac.sample_time) > 1e-12:
            errors.append("[mpc] ts must equal [ac] sample_time")
        return errors

    def cycle_path(self) -> Optional[Path]:
        return Path(self.scenario.cycle) if self.scenario.cycle else None


SECTIONS = ("ac", "plant", "occupant", "bounds", "mpc", "solver", "scenario")
_SKIPPED = {"plant": {"ac", "perturbation_seed"}}


def _section_fields(section: str, obj) -> list[dataclasses.Field]:
    skip = _SKIPPED.get(section, set())
    return [f for f in fields(obj) if f.name not in skip]


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(f"{_format(float(s))}:{_format(float(m))}" for s, m in value)
    return str(value)


def _parse(text: str, default):
    """Parse ``text`` to the type of ``default``."""
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected true/false, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        pairs = []
        for item in filter(None, (p.strip() for p in text.split(","))):
            speed, sep, mult = item.partition(":")
            if not sep:
                raise ValueError(f"expected speed:multiplier, got {item!r}")
            pairs.append((float(speed), float(mult)))
        return tuple(pairs)
    return text


def dumps(cfg: ScenarioConfig = ScenarioConfig()) -> str:
    out = io.StringIO()
    out.write("# ceco scenario configuration\n")
    for section in SECTIONS:
        obj = getattr(cfg, section)
        out.write(f"\n[{section}]\n")
        if section == "scenario":
            obj = replace(obj, seed=cfg.scenario.seed)
        for f in _section_fields(section, obj):
            out.write(f"{f.name} = {_format(getattr(obj, f.name))}\n")
    return out.getvalue()


def loads(text: str, *, env: Optional[dict] = None, source: str = "<config>") -> ScenarioConfig:
    """Parse and validate a configuration; raise :class:`ConfigError` listing every issue."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep field names case-sensitive
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([str(exc).replace("\n", " ")]) from exc

    errors = []
    for extra in sorted(set(parser.sections()) - set(SECTIONS)):
        errors.append(f"unknown section [{extra}]")

    base = ScenarioConfig()
    parts = {}
    for section in SECTIONS:
        obj = getattr(base, section)
        known = {f.name: f for f in _section_fields(section, obj)}
        changes = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in known:
                    errors.append(f"[{section}] unknown key {key!r}")
                    continue
                try:
                    changes[key] = _parse(raw, getattr(obj, key))
                except ValueError as exc:
                    errors.append(f"[{section}] {key}: {exc}")
        parts[section] = replace(obj, **changes)

    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            parts["scenario"] = replace(parts["scenario"], seed=int(env[SEED_ENV]))
        except ValueError:
            errors.append(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}")

    cfg = ScenarioConfig(**parts)
    errors.extend(cfg.validate())
    if errors:
        raise ConfigError(errors)
    return cfg


def load(path, env: Optional[dict] = None) -> ScenarioConfig:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), env=env, source=str(path))
