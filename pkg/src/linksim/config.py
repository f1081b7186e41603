"""Run configuration: INI-style files with sections and key = value pairs.

Every physical quantity is a plain frequency in MHz (times in
microseconds).  Sections:

  [lattice]   type = chain | cross | grid | custom ; n, nx, ny, file
  [model]     source = direct | circuit ; variant; couplings
  [protocol]  kind = params | spectrum | spectroscopy | evolve | sweep
                     | disorder | groundstate ; protocol knobs
  [numerics]  dt, n_max, record_points
  [decay]     gamma
  [disorder]  delta_eps, n_realizations, seed
  [output]    directory, figures (true/false), dump_basis, dump_operator
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from . import lattice as latmod


class ConfigError(ValueError):
    """Invalid or missing configuration; message carries section.key."""


_PROTOCOLS = ("params", "spectrum", "spectroscopy", "evolve", "sweep",
              "disorder", "groundstate")


@dataclass
class RunConfig:
    path: str
    lattice: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    protocol: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    decay: dict = field(default_factory=dict)
    disorder: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def kind(self):
        return self.protocol["kind"]


def _get(section, parser, name, key, cast, default=..., choices=None):
    if not parser.has_option(name, key):
        if default is ...:
            raise ConfigError(f"missing required key [{name}].{key}")
        return default
    raw = parser.get(name, key)
    try:
        if cast is bool:
            val = raw.strip().lower() in ("1", "true", "yes", "on")
        else:
            val = cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{name}].{key}: cannot parse {raw!r}") from exc
    if choices and val not in choices:
        raise ConfigError(f"[{name}].{key}: {val!r} not one of {sorted(choices)}")
    section[key] = val
    return val


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.read(path)
    cfg = RunConfig(path=str(path))
    cfg.raw = {s: dict(parser.items(s)) for s in parser.sections()}

    # ---- lattice ----
    if not parser.has_section("lattice"):
        raise ConfigError("missing required section [lattice]")
    lat_type = _get(cfg.lattice, parser, "lattice", "type", str,
                    default="chain", choices={"chain", "cross", "grid", "custom"})
    if lat_type == "chain":
        _get(cfg.lattice, parser, "lattice", "n", int, default=1)
    elif lat_type == "grid":
        _get(cfg.lattice, parser, "lattice", "nx", int)
        _get(cfg.lattice, parser, "lattice", "ny", int)
    elif lat_type == "custom":
        f = _get(cfg.lattice, parser, "lattice", "file", str)
        fpath = (path.parent / f).resolve()
        if not fpath.exists():
            raise ConfigError(f"[lattice].file: {fpath} does not exist")
        cfg.lattice["file"] = str(fpath)
    cfg.lattice["type"] = lat_type
    if parser.has_option("lattice", "sector"):
        _get(cfg.lattice, parser, "lattice", "sector", str,
             default="string", choices={"full", "string", "charges"})
    else:
        cfg.lattice["sector"] = "string"
    if parser.has_option("lattice", "charges"):
        cfg.lattice["charges"] = _parse_charges(parser.get("lattice", "charges"))

    # ---- model ----
    if not parser.has_section("model"):
        raise ConfigError("missing required section [model]")
    source = _get(cfg.model, parser, "model", "source", str,
                  default="direct", choices={"direct", "circuit"})
    _get(cfg.model, parser, "model", "variant", str, default="effective",
         choices={"microscopic", "effective", "rk_effective",
                  "fourbody_effective", "rk_microscopic"})
    for key in ("epsilon", "U", "J", "V", "W", "lambda_rk", "Omega",
                "Omega_prime", "mu_sq", "mu_plus", "V_prime", "omega_res",
                "beta_prime", "eta", "E_J", "E_C",
                "vertex_EJ_ratio", "vertex_C_ratio",
                "plaquette_EJ_ratio", "plaquette_C_ratio", "flux", "alpha"):
        if parser.has_option("model", key):
            _get(cfg.model, parser, "model", key, float)
    cfg.model["source"] = source

    # ---- protocol ----
    if not parser.has_section("protocol"):
        raise ConfigError("missing required section [protocol]")
    kind = _get(cfg.protocol, parser, "protocol", "kind", str, choices=set(_PROTOCOLS))
    float_keys = ("flux_min", "flux_max", "t_max", "J0", "V0", "v",
                  "drive_amplitude", "omega_d_min", "omega_d_max",
                  "J_over_V", "symmetry_breaking_field")
    int_keys = ("flux_points", "omega_d_points", "n_levels", "drive_link",
                "record_points", "central_link")
    for key in float_keys:
        if parser.has_option("protocol", key):
            _get(cfg.protocol, parser, "protocol", key, float)
    for key in int_keys:
        if parser.has_option("protocol", key):
            _get(cfg.protocol, parser, "protocol", key, int)
    if parser.has_option("protocol", "initial_state"):
        _get(cfg.protocol, parser, "protocol", "initial_state", str)
    if parser.has_option("protocol", "observe_links"):
        cfg.protocol["observe_links"] = [
            int(x) for x in parser.get("protocol", "observe_links").split(",")]
    if parser.has_option("protocol", "pairs"):
        cfg.protocol["pairs"] = _parse_pairs(parser.get("protocol", "pairs"))
    cfg.protocol["kind"] = kind
    if kind == "params":
        if cfg.model["source"] != "circuit":
            raise ConfigError("[protocol].kind=params requires [model].source=circuit")
        cfg.protocol.setdefault("flux_min", 0.0)
        cfg.protocol.setdefault("flux_max", 0.5)
        cfg.protocol.setdefault("flux_points", 101)
        if cfg.protocol["flux_points"] < 1:
            raise ConfigError("[protocol].flux_points: need at least one point")

    # ---- numerics / decay / disorder / output ----
    for key, cast, default in (("dt", float, None), ("n_max", int, 4),
                               ("record_points", int, 161)):
        if parser.has_option("numerics", key):
            _get(cfg.numerics, parser, "numerics", key, cast)
        else:
            cfg.numerics[key] = default
    cfg.decay["gamma"] = (
        _get(cfg.decay, parser, "decay", "gamma", float, default=0.0)
        if parser.has_section("decay") else 0.0)
    if cfg.decay["gamma"] < 0:
        raise ConfigError("[decay].gamma must be >= 0")
    if parser.has_section("disorder"):
        _get(cfg.disorder, parser, "disorder", "delta_eps", float, default=0.0)
        _get(cfg.disorder, parser, "disorder", "n_realizations", int, default=1000)
        _get(cfg.disorder, parser, "disorder", "seed", int, default=1234)
    cfg.output["directory"] = (
        parser.get("output", "directory") if parser.has_option("output", "directory")
        else "out")
    for key in ("figures", "dump_basis", "dump_operator"):
        if parser.has_option("output", key):
            _get(cfg.output, parser, "output", key, bool)
        else:
            cfg.output[key] = key == "figures"
    return cfg


def _parse_charges(text):
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            vid, q = item.split(":")
            out[int(vid)] = float(q)
        except ValueError as exc:
            raise ConfigError(
                f"[lattice].charges: expected 'vertex:charge', got {item!r}") from exc
    return out


def _parse_pairs(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            a, b = item.split("-")
            out.append((int(a), int(b)))
        except ValueError as exc:
            raise ConfigError(f"[protocol].pairs: expected 'a-b', got {item!r}") from exc
    return out


def build_lattice(cfg: RunConfig):
    lt = cfg.lattice["type"]
    if lt == "chain":
        return latmod.build_plaquette_chain(cfg.lattice.get("n", 1))
    if lt == "cross":
        return latmod.build_cross()
    if lt == "grid":
        return latmod.build_grid(cfg.lattice["nx"], cfg.lattice["ny"])
    with open(cfg.lattice["file"], encoding="utf-8") as fh:
        return latmod.from_text(fh.read())
