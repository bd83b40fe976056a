"""Run configuration: flat INI sections, CLI overrides, content hash.

A config file fully determines a run.  Sections mirror the parameter
bundles ([lz], [meter], [model]) plus run control ([run], [trace],
[sweep], [strobe], [noise], [output]).  Times in config files are given
in units of g/eps (the crossing time scale) wherever the key name carries
the ``_gu`` suffix; everything else is in bare frequency units.  The
merged effective configuration is echoed into every output header
together with its hash, so any output can be re-run from its own header.
"""

from __future__ import annotations

import configparser
import hashlib
from pathlib import Path

from .lz import LZParams
from .lindblad import MeterParams
from .dephasing import DephasingModel


class ConfigError(ValueError):
    """Invalid configuration; the message carries file/section/key context."""


def _float(s):
    return float(s)


def _floats(s):
    return [float(x) for x in s.replace(",", " ").split()]


def _bool(s):
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# section -> key -> (parser, default); None default means "unset"
SCHEMA = {
    "lz": {"g": (_float, 1.0), "eps": (_float, 1.0), "g2_over_eps": (_float, None)},
    "meter": {
        "omega_c": (_float, 1.0),
        "kappa": (_float, 1.0),
        "kappa_over_omega_c": (_float, None),
        "x0": (_float, 1.0),
        "n_max": (int, 50),
        "n": (_float, None),
        "beta": (_float, None),
    },
    "model": {
        "gamma0": (_float, None),
        "gamma0_over_g": (_float, None),
        "constant_rate": (_bool, False),
    },
    "run": {
        "seed": (int, 0),
        "workers": (int, 0),
        "dt": (str, "auto"),
        "t_half_gu": (_float, 5.0),
        "n_store": (int, 0),
    },
    "trace": {
        "engine": (str, "lindblad"),
        "vary": (str, None),
        "values": (_floats, None),
    },
    "sweep": {
        "task": (str, None),
        "axis1": (str, None),
        "axis2": (str, None),
        "budget": (int, 2000),
    },
    "strobe": {
        "delta_t_gu": (_float, 1.0),
        "delta_t_gu_list": (_floats, None),
        "t_p": (str, "auto"),
        "amplitude_mode": (str, "unit_area"),
    },
    "noise": {"tau_gu": (_float, 0.1), "n_it": (int, 50)},
    "output": {"path": (str, None)},
}

TRACE_ENGINES = ("coherent", "lindblad", "ame")
SWEEP_TASKS = ("continuous_T", "ame_T", "delta_T", "nm_measure", "effective_gap")


class Config:
    """Typed view over the parsed sections with derived-parameter support."""

    def __init__(self, data: dict):
        self.data = data

    @classmethod
    def defaults(cls) -> "Config":
        return cls({s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()})

    def get(self, section: str, key: str):
        return self.data[section][key]

    def set(self, section: str, key: str, value):
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown config entry [{section}] {key}")
        self.data[section][key] = value

    # -- parameter bundle builders ------------------------------------

    def build_lz(self) -> LZParams:
        s = self.data["lz"]
        eps = s["eps"]
        g = s["g"]
        if s["g2_over_eps"] is not None:
            g = (s["g2_over_eps"] * eps) ** 0.5
        try:
            return LZParams(g=g, eps=eps)
        except ValueError as e:
            raise ConfigError(f"[lz]: {e}") from e

    def build_meter(self) -> MeterParams:
        s = self.data["meter"]
        kappa = s["kappa"]
        if s["kappa_over_omega_c"] is not None:
            kappa = s["kappa_over_omega_c"] * s["omega_c"]
        n, beta = s["n"], s["beta"]
        if n is not None and beta is not None:
            raise ConfigError("[meter]: give only one of n or beta")
        if n is None and beta is None:
            n = 0.0
        try:
            return MeterParams(
                omega_c=s["omega_c"], kappa=kappa, x0=s["x0"], n_max=s["n_max"],
                nbar=n, beta=beta,
            )
        except ValueError as e:
            raise ConfigError(f"[meter]: {e}") from e

    def build_model(self, lz: LZParams) -> DephasingModel:
        """Dephasing strength: explicit gamma0 when configured, otherwise
        derived from the meter's spectral weight."""
        s = self.data["model"]
        const = s["constant_rate"]
        if s["gamma0"] is not None and s["gamma0_over_g"] is not None:
            raise ConfigError("[model]: give only one of gamma0 or gamma0_over_g")
        if s["gamma0_over_g"] is not None:
            return DephasingModel.from_rate(s["gamma0_over_g"] * lz.g, lz, constant_rate=const)
        if s["gamma0"] is not None:
            return DephasingModel.from_rate(s["gamma0"], lz, constant_rate=const)
        return DephasingModel.from_meter(self.build_meter(), lz, constant_rate=const)

    def dt_or_none(self) -> float | None:
        raw = self.data["run"]["dt"]
        if raw == "auto":
            return None
        try:
            return float(raw)
        except ValueError as e:
            raise ConfigError(f"[run] dt: {e}") from e

    def n_store_or(self, default: int) -> int:
        n = self.data["run"]["n_store"]
        return n if n > 0 else default

    # -- reproducibility ------------------------------------------------

    def effective_items(self) -> list[tuple[str, str]]:
        """Flattened (section.key, value) pairs of every set entry; this is
        the hashed region.  Output location and worker count are execution
        details that cannot affect results, so they are excluded."""
        items = []
        for section in sorted(self.data):
            if section == "output":
                continue
            for key in sorted(self.data[section]):
                if section == "run" and key == "workers":
                    continue
                v = self.data[section][key]
                if v is None:
                    continue
                if isinstance(v, list):
                    v = " ".join(repr(x) for x in v)
                items.append((f"{section}.{key}", str(v)))
        return items

    def config_hash(self) -> str:
        blob = "\n".join(f"{k}={v}" for k, v in self.effective_items())
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def header_metadata(self, engine_version: str) -> dict:
        md = {f"config.{k}": v for k, v in self.effective_items()}
        md["engine_version"] = engine_version
        md["config_hash"] = self.config_hash()
        md["time_unit_note"] = "keys with _gu suffix are in units of g/eps"
        return md


def load_config(path) -> Config:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e
    cfg = Config.defaults()
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            parse, _ = SCHEMA[section][key]
            try:
                cfg.data[section][key] = parse(raw)
            except ValueError as e:
                raise ConfigError(f"{path}: [{section}] {key} = {raw!r}: {e}") from e
    return cfg


def apply_overrides(cfg: Config, seed=None, workers=None, out=None) -> Config:
    if seed is not None:
        cfg.set("run", "seed", int(seed))
    if workers is not None:
        cfg.set("run", "workers", int(workers))
    if out is not None:
        cfg.set("output", "path", str(out))
    return cfg
