"""Flat ``key = value`` run configuration with section headers.

Sections: ``[run]``, ``[problem]``, ``[density]``, ``[domain]``, ``[tolerances]``.
Domains and densities are picked from the built-in catalogs by name.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .geometry import DensitySpec, GeometryError, make_domain, regular_polygon, square
from .problem import ParamsError, ProblemParams

SUBCOMMANDS = ("solve", "flow", "eigen", "continuation", "holder", "barriers", "oracle", "selftest")

DEFAULT_TOLERANCES = {
    "newton": 1e-9,
    "convex": 1e-8,
    "steady": 1e-6,
    "eigen": 1e-8,
    "descent": 1e-8,
    "comparison": 1e-10,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str = "solve"
    params: ProblemParams = field(default_factory=ProblemParams)
    domain: dict = field(default_factory=lambda: {"kind": "disk", "R": 1.0})
    N: int = 65
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out: str = "out"
    seed: int = 0
    options: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}; choose from {', '.join(SUBCOMMANDS)}")
        if self.N < 5:
            raise ConfigError("grid N must be at least 5")
        bad = [k for k, v in self.tolerances.items() if not v > 0]
        if bad:
            raise ConfigError(f"tolerances must be positive: {', '.join(bad)}")
        try:
            self.params.check()
        except ParamsError as exc:
            raise ConfigError(str(exc)) from exc
        self.build_domain()
        return self

    def build_domain(self):
        spec = dict(self.domain)
        kind = spec.pop("kind")
        try:
            if kind == "square":
                return square(float(spec.get("side", 2.0)))
            if kind == "regular":
                return regular_polygon(int(spec.get("k", 6)), float(spec.get("R", 1.0)))
            if kind in ("cusp", "cusp-hull") and "b" not in spec:
                p, q = self.params.p, self.params.q
                spec["b"] = (q - 1.0) / (q - p)
            return make_domain(kind, **spec)
        except (GeometryError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad domain spec: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "problem": self.params.to_config(),
            "density": {"family": self.params.density.family, "params": list(self.params.density.params)},
            "domain": self.domain,
            "N": self.N,
            "tolerances": self.tolerances,
            "out": self.out,
            "seed": self.seed,
            "options": self.options,
        }


def _floats(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def _domain(sec) -> dict:
    out = {"kind": sec.get("kind", "disk").strip().lower()}
    for key, val in sec.items():
        if key == "kind":
            continue
        if key == "vertices":
            out[key] = [_floats(v) for v in val.split(";") if v.strip()]
        elif key == "center":
            out[key] = _floats(val)
        elif key in ("k", "dim"):
            out[key] = int(val)
        else:
            out[key] = float(val)
    return out


def _density(sec, n, p) -> DensitySpec:
    family = sec.get("family", "constant").strip()
    vals = tuple(_floats(sec.get("params", "1.0")))
    if family == "pulled-back-constant":
        return DensitySpec("euclidean", family, vals, n=n, p=p)
    return DensitySpec("euclidean", family, vals)


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    try:
        run = cp["run"] if cp.has_section("run") else {}
        prob = cp["problem"] if cp.has_section("problem") else {}
        n = int(prob.get("n", 3))
        p = float(prob.get("p", 1.0))
        q = float(prob.get("q", 3.0))
        eps = float(prob.get("eps", 0.0))
        dens = _density(cp["density"], n, p) if cp.has_section("density") else DensitySpec()
        tol = dict(DEFAULT_TOLERANCES)
        if cp.has_section("tolerances"):
            for k, v in cp["tolerances"].items():
                tol[k] = float(v)
        options = {}
        for k, v in run.items():
            if k not in ("subcommand", "N", "out", "seed"):
                options[k] = v
        cfg = RunConfig(
            subcommand=run.get("subcommand", "solve").strip(),
            params=ProblemParams(n, p, q, eps, dens),
            domain=_domain(cp["domain"]) if cp.has_section("domain") else {"kind": "disk", "R": 1.0},
            N=int(run.get("N", 65)),
            tolerances=tol,
            out=run.get("out", "out").strip(),
            seed=int(run.get("seed", 0)),
            options=options,
        )
    except (ValueError, GeometryError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    cfg = parse_config(text)
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg
