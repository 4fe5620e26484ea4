"""Run configuration: dataclasses and the sectioned key=value file format.

A configuration file is UTF-8 text with ``[section]`` headers, ``key = value``
pairs and ``#`` comments.  Recognised sections are ``[run]``, ``[species.X]``
(one per species, any suffix), ``[frequencies]``, ``[time]``, ``[space]`` and
``[output]``.  A file may either name a preset via ``scenario`` under
``[run]`` and override parts of it, or describe a custom setup from scratch.
Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace

from .errors import ConfigurationError, DomainError
from .relaxation import CollisionFrequencies
from .statistics import ParticleStatistics
from .transport import BOUNDARIES, SpatialDomain

__all__ = ["SpeciesConfig", "SimConfig", "parse_config"]

INIT_KINDS = ("maxwellian", "fermi")


@dataclass(frozen=True)
class SpeciesConfig:
    """Initial state of one species.

    ``density2``/``velocity2``/``temperature2`` describe the state right of
    the ``split`` coordinate in a spatial run; left of it (and everywhere in
    a homogeneous run) the unsuffixed values apply.  ``init`` selects the
    sampled shape: a Maxwellian at the given temperature, or a Fermi-Dirac
    function 1/((2 pi m T)^{3/2} / (scale n) * exp(|p|^2/(2 m T)) + 1) whose
    fugacity is fixed by ``scale``.
    """

    name: str
    mass: float
    statistics: ParticleStatistics
    density: float
    velocity: tuple[float, float, float]
    temperature: float
    init: str = "maxwellian"
    scale: float = 1.0
    density2: float | None = None
    velocity2: tuple[float, float, float] | None = None
    temperature2: float | None = None

    def validate(self) -> None:
        label = f"species {self.name!r}"
        if not self.mass > 0.0:
            raise ConfigurationError(f"{label}: mass must be positive")
        if not self.density > 0.0:
            raise ConfigurationError(f"{label}: n must be positive")
        if not self.temperature > 0.0:
            raise ConfigurationError(f"{label}: T must be positive")
        if len(self.velocity) != 3:
            raise ConfigurationError(f"{label}: u must have 3 components")
        if self.init not in INIT_KINDS:
            raise ConfigurationError(
                f"{label}: init must be one of {INIT_KINDS}")
        if self.init == "fermi" and self.statistics is not ParticleStatistics.FERMION:
            raise ConfigurationError(
                f"{label}: init 'fermi' requires fermion statistics")
        if not self.scale > 0.0:
            raise ConfigurationError(f"{label}: scale must be positive")
        if self.density2 is not None and not self.density2 > 0.0:
            raise ConfigurationError(f"{label}: n2 must be positive")
        if self.temperature2 is not None and not self.temperature2 > 0.0:
            raise ConfigurationError(f"{label}: T2 must be positive")

    def has_jump(self) -> bool:
        return (self.density2 is not None or self.velocity2 is not None
                or self.temperature2 is not None)

    def right_state(self) -> tuple[float, tuple[float, float, float], float]:
        dens = self.density if self.density2 is None else self.density2
        vel = self.velocity if self.velocity2 is None else self.velocity2
        temp = (self.temperature if self.temperature2 is None
                else self.temperature2)
        return dens, vel, temp


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulation run."""

    scenario: str
    species: tuple[SpeciesConfig, ...]
    frequencies: tuple[tuple[float, ...], ...]
    dt: float
    t_end: float
    scheme_order: int = 1
    flux_order: int = 1
    domain: SpatialDomain | None = None
    split: float = 0.0
    output_dir: str = "out"
    stride: int = 1
    grid_intervals: int = 48
    grad_tol: float = 1e-11
    units: str = "dimensionless"

    def validate(self) -> "SimConfig":
        if not self.species:
            raise ConfigurationError("at least one species required")
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate species names: {names}")
        for spec in self.species:
            spec.validate()
        size = len(self.species)
        if (len(self.frequencies) != size
                or any(len(row) != size for row in self.frequencies)):
            raise ConfigurationError(
                f"frequencies: need a {size}x{size} table")
        try:
            CollisionFrequencies(self.frequencies)
        except DomainError as exc:
            raise ConfigurationError(f"frequencies: {exc}") from exc
        if self.scheme_order not in (1, 2):
            raise ConfigurationError("scheme order must be 1 or 2")
        if self.flux_order not in (1, 2):
            raise ConfigurationError("flux order must be 1 or 2")
        if not self.dt > 0.0:
            raise ConfigurationError("dt must be positive")
        if not self.t_end > 0.0:
            raise ConfigurationError("t_end must be positive")
        if self.stride < 1:
            raise ConfigurationError("stride must be at least 1")
        if self.grid_intervals < 4:
            raise ConfigurationError("grid must have at least 4 intervals")
        if not self.grad_tol > 0.0:
            raise ConfigurationError("grad_tol must be positive")
        if self.domain is None:
            for spec in self.species:
                if spec.has_jump():
                    raise ConfigurationError(
                        f"species {spec.name!r}: jump states need a "
                        "[space] section")
        return self


_RUN_KEYS = ("scenario", "grid", "grad_tol", "units")
_SPECIES_KEYS = ("name", "mass", "statistics", "n", "u", "T", "init",
                 "scale", "n2", "u2", "T2")
_TIME_KEYS = ("dt", "t_end", "scheme")
_SPACE_KEYS = ("xmin", "xmax", "cells", "boundary", "flux", "split")
_OUTPUT_KEYS = ("dir", "stride")
_FREQ_KEYS = ("table", "uniform")


def _reject_unknown(section: str, present, known) -> None:
    extra = [key for key in present if key not in known]
    if extra:
        raise ConfigurationError(
            f"[{section}] unknown key(s): {', '.join(sorted(extra))}")


def _get_float(section, name: str, key: str) -> float:
    raw = section[key]
    try:
        return float(raw)
    except ValueError:
        raise ConfigurationError(
            f"[{name}] {key}: invalid number {raw!r}") from None


def _get_int(section, name: str, key: str) -> int:
    raw = section[key]
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(
            f"[{name}] {key}: invalid integer {raw!r}") from None


def _get_vector(section, name: str, key: str) -> tuple[float, float, float]:
    raw = section[key]
    parts = raw.replace(",", " ").split()
    if len(parts) != 3:
        raise ConfigurationError(
            f"[{name}] {key}: expected 3 components, got {raw!r}")
    try:
        x, y, z = (float(part) for part in parts)
    except ValueError:
        raise ConfigurationError(
            f"[{name}] {key}: invalid number in {raw!r}") from None
    return (x, y, z)


def _parse_species(name: str, section) -> SpeciesConfig:
    _reject_unknown(name, section.keys(), _SPECIES_KEYS)
    for key in ("mass", "statistics", "n", "T"):
        if key not in section:
            raise ConfigurationError(f"[{name}] {key} required")
    try:
        stats = ParticleStatistics.parse(section["statistics"])
    except DomainError as exc:
        raise ConfigurationError(f"[{name}] statistics: {exc}") from exc
    return SpeciesConfig(
        name=section.get("name", name.split(".", 1)[1]),
        mass=_get_float(section, name, "mass"),
        statistics=stats,
        density=_get_float(section, name, "n"),
        velocity=(_get_vector(section, name, "u") if "u" in section
                  else (0.0, 0.0, 0.0)),
        temperature=_get_float(section, name, "T"),
        init=section.get("init", "maxwellian").strip().lower(),
        scale=(_get_float(section, name, "scale") if "scale" in section
               else 1.0),
        density2=(_get_float(section, name, "n2") if "n2" in section
                  else None),
        velocity2=(_get_vector(section, name, "u2") if "u2" in section
                   else None),
        temperature2=(_get_float(section, name, "T2") if "T2" in section
                      else None),
    )


def _parse_frequencies(section, size: int):
    _reject_unknown("frequencies", section.keys(), _FREQ_KEYS)
    if "uniform" in section:
        value = _get_float(section, "frequencies", "uniform")
        return tuple(tuple(value for _ in range(size)) for _ in range(size))
    if "table" not in section:
        raise ConfigurationError("[frequencies] table or uniform required")
    rows = [row for row in section["table"].split(";") if row.strip()]
    table = []
    for row in rows:
        try:
            table.append(tuple(float(part) for part in row.split()))
        except ValueError:
            raise ConfigurationError(
                f"[frequencies] table: invalid number in {row.strip()!r}"
            ) from None
    return tuple(table)


def _parse_domain(section) -> tuple[SpatialDomain, float, int]:
    _reject_unknown("space", section.keys(), _SPACE_KEYS)
    for key in ("xmin", "xmax", "cells"):
        if key not in section:
            raise ConfigurationError(f"[space] {key} required")
    xmin = _get_float(section, "space", "xmin")
    xmax = _get_float(section, "space", "xmax")
    cells = _get_int(section, "space", "cells")
    boundary = section.get("boundary", "periodic").strip().lower()
    if boundary not in BOUNDARIES:
        raise ConfigurationError(
            f"[space] boundary: must be one of {BOUNDARIES}")
    try:
        domain = SpatialDomain(xmin, xmax, cells, boundary)
    except DomainError as exc:
        raise ConfigurationError(f"[space] {exc}") from exc
    split = (_get_float(section, "space", "split") if "split" in section
             else 0.5 * (xmin + xmax))
    flux = _get_int(section, "space", "flux") if "flux" in section else None
    return domain, split, flux


def parse_config(text: str) -> SimConfig:
    """Parse configuration text into a validated :class:`SimConfig`.

    Raises :class:`ConfigurationError` on syntax errors (with the offending
    line number), unknown sections or keys, missing required fields, and
    value validation failures.
    """
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",),
        inline_comment_prefixes=("#",), interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse error: {exc}") from exc

    sections = parser.sections()
    if not sections:
        raise ConfigurationError("scenario required (empty configuration)")
    known = {"run", "time", "space", "output", "frequencies"}
    for name in sections:
        if name not in known and not name.startswith("species."):
            raise ConfigurationError(f"unknown section [{name}]")

    run = parser["run"] if parser.has_section("run") else {}
    _reject_unknown("run", run.keys(), _RUN_KEYS)
    species_sections = [name for name in sections
                        if name.startswith("species.")]

    if "scenario" in run:
        from .scenarios import scenario_preset

        config = scenario_preset(run["scenario"].strip())
    elif species_sections:
        config = None
    else:
        raise ConfigurationError("scenario required")

    if species_sections:
        species = tuple(_parse_species(name, parser[name])
                        for name in species_sections)
        if parser.has_section("frequencies"):
            freqs = _parse_frequencies(parser["frequencies"], len(species))
        elif config is not None and len(config.species) == len(species):
            freqs = config.frequencies
        else:
            raise ConfigurationError("[frequencies] section required")
        if config is None:
            config = SimConfig(scenario="custom", species=species,
                               frequencies=freqs, dt=0.0, t_end=0.0)
        else:
            config = replace(config, species=species, frequencies=freqs)
    elif parser.has_section("frequencies"):
        freqs = _parse_frequencies(parser["frequencies"],
                                   len(config.species))
        config = replace(config, frequencies=freqs)

    if "grid" in run:
        config = replace(config,
                         grid_intervals=_get_int(run, "run", "grid"))
    if "grad_tol" in run:
        config = replace(config,
                         grad_tol=_get_float(run, "run", "grad_tol"))
    if "units" in run:
        config = replace(config, units=run["units"].strip())

    if parser.has_section("time"):
        time = parser["time"]
        _reject_unknown("time", time.keys(), _TIME_KEYS)
        if "dt" in time:
            config = replace(config, dt=_get_float(time, "time", "dt"))
        if "t_end" in time:
            config = replace(config,
                             t_end=_get_float(time, "time", "t_end"))
        if "scheme" in time:
            config = replace(config,
                             scheme_order=_get_int(time, "time", "scheme"))
    if config.dt == 0.0:
        raise ConfigurationError("[time] dt required")
    if config.t_end == 0.0:
        raise ConfigurationError("[time] t_end required")

    if parser.has_section("space"):
        domain, split, flux = _parse_domain(parser["space"])
        config = replace(config, domain=domain, split=split)
        if flux is not None:
            config = replace(config, flux_order=flux)

    if parser.has_section("output"):
        output = parser["output"]
        _reject_unknown("output", output.keys(), _OUTPUT_KEYS)
        if "dir" in output:
            config = replace(config, output_dir=output["dir"].strip())
        if "stride" in output:
            config = replace(config,
                             stride=_get_int(output, "output", "stride"))

    return config.validate()
