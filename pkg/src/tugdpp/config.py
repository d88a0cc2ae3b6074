"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored.  Every key is declared in
``KEYS`` with a parser and a default; unknown keys and out-of-range values are
rejected while parsing.  ``RunConfig.to_text`` writes every key (defaults
included) in sorted order, and parsing that text gives back an identical
config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, ParseError, RangeError, UnknownKey
from .grid import DomainSpec
from .kernel import DIM_MAX, P_MAX
from . import problems

SCHEMA = "tugdpp-config/1"
AUTO = "auto"


def _float(lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False):
    def parse(key, text):
        try:
            v = float(text)
        except ValueError:
            raise RangeError(key, text, "not a number") from None
        if not math.isfinite(v):
            raise RangeError(key, text, "must be finite")
        if v < lo or (lo_open and v == lo) or v > hi or (hi_open and v == hi):
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            raise RangeError(key, text, f"must lie in {lb}{lo}, {hi}{rb}")
        return v

    return parse


def _int(lo=None, hi=None):
    def parse(key, text):
        try:
            v = int(text)
        except ValueError:
            raise RangeError(key, text, "not an integer") from None
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise RangeError(key, text, f"must lie in [{lo}, {hi}]")
        return v

    return parse


def _choice(*options):
    def parse(key, text):
        if text not in options:
            raise RangeError(key, text, f"must be one of {', '.join(options)}")
        return text

    return parse


def _vector(key, text):
    if text in ("", AUTO):
        return AUTO
    try:
        v = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise RangeError(key, text, "expected comma-separated numbers") from None
    if not all(math.isfinite(t) for t in v):
        raise RangeError(key, text, "must be finite")
    return v


def _float_list(key, text):
    v = _vector(key, text)
    if v == AUTO or not v or any(t <= 0 for t in v):
        raise RangeError(key, text, "expected a list of positive numbers")
    return v


def _auto_or(parser):
    def parse(key, text):
        return AUTO if text == AUTO else parser(key, text)

    return parse


def _bool(key, text):
    if text.lower() in ("true", "yes", "1"):
        return True
    if text.lower() in ("false", "no", "0"):
        return False
    raise RangeError(key, text, "expected true or false")


def _name(key, text):
    if not text or any(c.isspace() for c in text):
        raise RangeError(key, text, "expected a single word")
    return text


# key -> (parser, default text, help)
KEYS: dict[str, tuple[Callable, str, str]] = {
    "schema": (_choice(SCHEMA), SCHEMA, "config schema tag"),
    "dim": (_int(2, DIM_MAX), "2", "space dimension N"),
    "p": (_float(1.0, P_MAX, lo_open=True), "1.5", "exponent p in (1, 64]"),
    "eps": (_float(0.0, math.inf, lo_open=True), "0.1", "step size eps"),
    "domain.shape": (_choice("ball", "annulus", "box"), "ball", "domain type"),
    "domain.radius": (_float(0.0, math.inf, lo_open=True), "1", "outer radius"),
    "domain.inner_radius": (_float(0.0, math.inf, lo_open=True), "0.5", "annulus inner radius"),
    "domain.center": (_vector, AUTO, "domain center (default origin)"),
    "domain.box": (_vector, AUTO, "box corners lo1,..,loN,hi1,..,hiN"),
    "f.kind": (_choice("zero", "constant", "quadratic-compatible", "expression-id"), "zero",
               "source term"),
    "f.value": (_float(), "0", "constant source value"),
    "f.id": (_name, "zero", "named source function"),
    "g.kind": (_choice("zero", "constant", "linear", "quadratic", "expression-id"), "zero",
               "boundary data"),
    "g.value": (_float(), "0", "constant boundary value / linear offset"),
    "g.a": (_vector, AUTO, "linear boundary data slope (default e1)"),
    "g.id": (_name, "zero", "named boundary function"),
    "grid.dx": (_auto_or(_float(0.0, math.inf, lo_open=True)), AUTO, "lattice spacing (auto: eps/8)"),
    "solver.tol": (_auto_or(_float(0.0, math.inf, lo_open=True)), AUTO,
                   "residual tolerance (auto: 1e-9 max(1, sup|g|))"),
    "solver.max_iter": (_int(1, None), "100000", "iteration cap"),
    "solver.method": (_choice("value", "policy"), "value", "fixed-point sweep or policy iteration"),
    "solver.init": (_choice("subsolution", "g-extension"), "subsolution", "initial iterate"),
    "search.coarse": (_auto_or(_int(4, 100000)), AUTO, "direction bank size (auto: 64 / 256)"),
    "search.tol": (_float(0.0, 1.0, lo_open=True), "1e-08", "angular refinement tolerance"),
    "quad.axial": (_int(4, 512), "32", "radial/axial node count"),
    "quad.cross": (_auto_or(_int(4, 512)), AUTO, "angular/cross node count (auto: 32 / 16)"),
    "seed": (_int(0, 2**64 - 1), "0", "random seed"),
    "game.paths": (_int(1, None), "10000", "number of paths"),
    "game.max_steps": (_int(1, None), "1000000", "step cap per path"),
    "game.start": (_vector, AUTO, "start point (default domain center)"),
    "game.strategy_I": (_choice("optimal", "fixed", "radial", "adversarial-random"), "optimal",
                        "Player I strategy"),
    "game.strategy_II": (_choice("optimal", "fixed", "radial", "adversarial-random"), "optimal",
                         "Player II strategy"),
    "game.direction": (_vector, AUTO, "direction for fixed strategies (default e1)"),
    "game.per_path": (_bool, "false", "write the per-path CSV"),
    "extremal.nodes": (_int(1, None), "100", "number of sampled interior nodes"),
    "extremal.slack": (_float(0.0), "1e-06", "inequality slack"),
    "extremal.samples": (_int(16, None), "4096", "low-discrepancy points in B_Lambda"),
    "holder.gamma": (_auto_or(_float(0.0, 1.0, lo_open=True)), AUTO, "Hoelder exponent (auto: fit)"),
    "holder.radius": (_auto_or(_float(0.0, math.inf, lo_open=True)), AUTO, "R (auto: domain radius)"),
    "holder.pairs": (_int(1, None), "100000", "random pairs when the lattice is large"),
    "holder.eps_list": (_float_list, "0.2,0.1,0.05", "eps ladder for the holder study"),
    "convergence.eps_list": (_float_list, "0.2,0.1,0.05", "eps ladder"),
    "convergence.exact": (_choice("radial-p-harmonic", "quadratic", "linear"), "radial-p-harmonic",
                          "exact solution family"),
}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple):
        return ",".join(format(v, ".17g") for v in value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    values: tuple  # sorted (key, value) pairs
    explicit: frozenset = frozenset()

    @property
    def schema(self) -> str:
        return self["schema"]

    def __getitem__(self, key: str):
        return dict(self.values)[key]

    def get(self, key: str, default=None):
        return dict(self.values).get(key, default)

    def as_dict(self) -> dict:
        return dict(self.values)

    def with_values(self, **updates) -> "RunConfig":
        d = self.as_dict()
        for k, v in updates.items():
            key = k.replace("__", ".")
            if key not in KEYS:
                raise UnknownKey(key)
            d[key] = KEYS[key][0](key, _format(v)) if not isinstance(v, str) else KEYS[key][0](key, v)
        return RunConfig(tuple(sorted(d.items())), self.explicit | frozenset(k.replace("__", ".") for k in updates))

    def to_text(self) -> str:
        return "".join(f"{k} = {_format(v)}\n" for k, v in self.values)

    # -- derived objects ---------------------------------------------------

    def domain(self, eps: float | None = None) -> DomainSpec:
        dim = self["dim"]
        eps = self["eps"] if eps is None else eps
        center = self["domain.center"]
        center = None if center == AUTO else center
        if center is not None and len(center) != dim:
            raise RangeError("domain.center", center, f"needs {dim} components")
        shape = self["domain.shape"]
        if shape == "ball":
            return DomainSpec.ball(self["domain.radius"], eps, dim, center)
        if shape == "annulus":
            return DomainSpec.annulus(self["domain.inner_radius"], self["domain.radius"], eps, dim, center)
        box = self["domain.box"]
        if box == AUTO or len(box) != 2 * dim:
            raise RangeError("domain.box", box, f"needs {2 * dim} numbers")
        return DomainSpec.box(box[:dim], box[dim:], eps)

    def functions(self):
        dim, p = self["dim"], self["p"]
        fk = self["f.kind"]
        if fk == "zero":
            f = problems.constant(0.0)
        elif fk == "constant":
            f = problems.constant(self["f.value"])
        elif fk == "quadratic-compatible":
            f = problems.constant(problems.quadratic_source(dim, p))
        else:
            f = problems.named(self["f.id"], dim, p)
        gk = self["g.kind"]
        if gk == "zero":
            g = problems.constant(0.0)
        elif gk == "constant":
            g = problems.constant(self["g.value"])
        elif gk == "linear":
            a = self["g.a"]
            a = np.eye(dim)[0] if a == AUTO else np.asarray(a)
            if a.size != dim:
                raise RangeError("g.a", self["g.a"], f"needs {dim} components")
            g = problems.linear(a, self["g.value"])
        elif gk == "quadratic":
            g = problems.quadratic()
        else:
            g = problems.named(self["g.id"], dim, p)
        return f, g

    def problem(self, eps: float | None = None, **overrides):
        from .solver import DppProblem, SearchConfig

        eps = self["eps"] if eps is None else eps
        f, g = self.functions()
        dx = self["grid.dx"]
        tol = self["solver.tol"]
        coarse = self["search.coarse"]
        cross = self["quad.cross"]
        dim = self["dim"]
        kw = dict(
            domain=self.domain(eps), p=self["p"], f=f, g=g,
            dx=None if dx == AUTO or eps != self["eps"] else dx,
            tol=None if tol == AUTO else tol,
            max_iter=self["solver.max_iter"],
            search=SearchConfig(None if coarse == AUTO else coarse, self["search.tol"]),
            axial_count=self["quad.axial"],
            cross_count=(32 if dim == 2 else 16) if cross == AUTO else cross,
            method=self["solver.method"], init=self["solver.init"],
            labels={"f": self["f.kind"], "g": self["g.kind"]},
        )
        kw.update(overrides)
        return DppProblem(**kw)


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse ``key = value`` lines; defaults are filled for missing keys."""
    seen: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not key:
            raise ParseError(lineno, "empty key")
        if key not in KEYS:
            raise UnknownKey(key)
        if key in seen:
            raise ParseError(lineno, f"duplicate key {key!r}")
        seen[key] = KEYS[key][0](key, val)
    for key, val in (overrides or {}).items():
        if key not in KEYS:
            raise UnknownKey(key)
        seen[key] = KEYS[key][0](key, str(val))
    values = {k: seen[k] if k in seen else KEYS[k][0](k, KEYS[k][1]) for k in KEYS}
    _cross_checks(values)
    return RunConfig(tuple(sorted(values.items())), frozenset(seen))


def _cross_checks(v: dict) -> None:
    if v["domain.shape"] == "annulus" and not v["domain.inner_radius"] < v["domain.radius"]:
        raise RangeError("domain.inner_radius", v["domain.inner_radius"], "must be below domain.radius")
    if v["domain.shape"] in ("ball", "annulus") and not v["eps"] < v["domain.radius"] / 2:
        raise RangeError("eps", v["eps"], "must be below domain.radius / 2")
    if v["grid.dx"] != AUTO and v["grid.dx"] > v["eps"] / 4 * (1 + 1e-12):
        raise RangeError("grid.dx", v["grid.dx"], "must not exceed eps / 4")
    if v["dim"] > 3:
        raise RangeError("dim", v["dim"], "quadrature supports N = 2 and N = 3")


def load_config(path, overrides: dict | None = None) -> RunConfig:
    from .errors import IoError

    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except UnicodeDecodeError as exc:
        raise ParseError(0, f"not UTF-8: {exc}") from exc
    return parse_config(text, overrides)


def default_config() -> RunConfig:
    return parse_config("")


__all__ = ["AUTO", "KEYS", "RunConfig", "SCHEMA", "default_config", "load_config", "parse_config"]
