"""Strict JSON run configuration.

Example::

    {
      "market": {"r": 0.04, "mu": 0.07, "sigma": 0.17},
      "agent1": {"alpha": 0.2, "x0": 0.0},
      "agent2": {"alpha": 0.4},
      "herd":   {"vartheta": 0.0025, "rho": 0.0, "T": 50, "tol": 1e-12},
      "grid_n": 1000,
      "output": {"dir": "out", "format": "csv"}
    }

Unknown keys are errors. Exactly one of ``theta`` / ``vartheta`` is needed;
giving both is accepted only when they agree.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .exceptions import ConfigError
from .herd import Agents, HerdConfig, Scenario
from .market import MarketParams, validate_market
from .merton import AgentProfile

SCHEMA = {
    "market": {"r", "mu", "sigma"},
    "agent1": {"alpha", "x0"},
    "agent2": {"alpha", "x0"},
    "herd": {"theta", "vartheta", "rho", "T", "tol"},
    "grid_n": None,
    "output": {"dir", "format"},
}
FORMATS = {"csv": ",", "tsv": "\t"}


@dataclass(frozen=True)
class RunConfig:
    market: MarketParams
    agent1: AgentProfile
    agent2: AgentProfile
    herd: HerdConfig | None
    T: float
    grid_n: int = 1000
    out_dir: Path = Path("out")
    out_format: str = "csv"

    @property
    def agents(self) -> Agents:
        return Agents(self.agent1, self.agent2)

    @property
    def scenario(self) -> Scenario:
        if self.herd is None:
            raise ConfigError("herd.theta", "herd coefficient must be positive; use the merton command for theta=0")
        return Scenario(self.market, self.agents, self.herd)

    @property
    def delimiter(self) -> str:
        return FORMATS[self.out_format]

    def with_overrides(self, grid_n=None, tol=None, out_dir=None) -> "RunConfig":
        cfg = self
        if grid_n is not None:
            _check_grid(grid_n, "--grid-n")
            cfg = replace(cfg, grid_n=grid_n)
            if cfg.herd is not None:
                cfg = replace(cfg, herd=cfg.herd.replace(grid_n=grid_n))
        if tol is not None:
            if not tol > 0:
                raise ConfigError("--tol", "must be positive")
            if cfg.herd is not None:
                cfg = replace(cfg, herd=cfg.herd.replace(tol=tol))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=Path(out_dir))
        return cfg


def _check_grid(n, path):
    if isinstance(n, bool) or not isinstance(n, int) or n < 10 or n % 2:
        raise ConfigError(path, f"must be an even integer >= 10, got {n!r}")


def _number(section: dict, key: str, path: str, required=True, default=None) -> float:
    if key not in section:
        if required:
            raise ConfigError(f"{path}.{key}", "missing required key")
        return default
    val = section[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"{path}.{key}", f"expected a finite number, got {val!r}")
    return float(val)


def _section(doc: dict, name: str, required=True) -> dict:
    if name not in doc:
        if required:
            raise ConfigError(name, "missing required section")
        return {}
    sec = doc[name]
    if not isinstance(sec, dict):
        raise ConfigError(name, "expected an object")
    unknown = sorted(set(sec) - SCHEMA[name])
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", f"unknown key (allowed: {', '.join(sorted(SCHEMA[name]))})")
    return sec


def _agent(doc: dict, name: str) -> AgentProfile:
    sec = _section(doc, name)
    alpha = _number(sec, "alpha", name)
    if not alpha > 0:
        raise ConfigError(f"{name}.alpha", f"risk aversion must be positive, got {alpha}")
    return AgentProfile(alpha, _number(sec, "x0", name, required=False, default=0.0))


def parse_config(text: str, allow_no_herd: bool = False) -> RunConfig:
    """Validate a JSON configuration document.

    With ``allow_no_herd`` (the Merton baseline) a missing or zero herd
    coefficient yields ``herd=None`` instead of an error.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("", "top level must be an object")
    unknown = sorted(set(doc) - set(SCHEMA))
    if unknown:
        raise ConfigError(unknown[0], "unknown key")

    m = _section(doc, "market")
    market = MarketParams(_number(m, "r", "market"), _number(m, "mu", "market"), _number(m, "sigma", "market"))
    check = validate_market(market)
    if not check.ok:
        raise ConfigError("market", "; ".join(check.violations))
    agent1, agent2 = _agent(doc, "agent1"), _agent(doc, "agent2")

    grid_n = doc.get("grid_n", 1000)
    _check_grid(grid_n, "grid_n")

    out = _section(doc, "output", required=False)
    out_format = out.get("format", "csv")
    if out_format not in FORMATS:
        raise ConfigError("output.format", f"expected one of {sorted(FORMATS)}, got {out_format!r}")
    out_dir = out.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output.dir", "expected a nonempty string")

    h = _section(doc, "herd")
    T = _number(h, "T", "herd")
    if not T > 0:
        raise ConfigError("herd.T", f"horizon must be positive, got {T}")
    rho = _number(h, "rho", "herd", required=False, default=0.0)
    if rho < 0:
        raise ConfigError("herd.rho", f"decay rate must be >= 0, got {rho}")
    tol = _number(h, "tol", "herd", required=False, default=1e-12)
    if not tol > 0:
        raise ConfigError("herd.tol", f"tolerance must be positive, got {tol}")
    theta = _number(h, "theta", "herd", required=False)
    vartheta = _number(h, "vartheta", "herd", required=False)
    scale = agent1.alpha * market.sigma**2
    if theta is not None and vartheta is not None:
        if not math.isclose(theta, vartheta * scale, rel_tol=1e-9, abs_tol=1e-300):
            raise ConfigError(
                "herd.vartheta",
                f"theta={theta} and vartheta={vartheta} disagree (theta must equal alpha1*sigma^2*vartheta={vartheta * scale})",
            )
    elif theta is None and vartheta is not None:
        theta = vartheta * scale
    herd = None
    if theta is None or theta == 0:
        if not allow_no_herd:
            raise ConfigError(
                "herd.theta", "herd coefficient must be positive; use the merton command for theta=0"
            )
    elif theta < 0:
        raise ConfigError("herd.theta", f"herd coefficient must be positive, got {theta}")
    else:
        herd = HerdConfig(theta=theta, rho=rho, T=T, tol=tol, grid_n=grid_n)
    return RunConfig(market, agent1, agent2, herd, T, grid_n, Path(out_dir), out_format)


def load_config(path: str | Path, allow_no_herd: bool = False) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from None
    return parse_config(text, allow_no_herd=allow_no_herd)


def reference_baseline(vartheta: float = 1 / 400, rho: float = 0.0, grid_n: int = 1000) -> RunConfig:
    """The reference market and agents used throughout the tests and docs."""
    doc = {
        "market": {"r": 0.04, "mu": 0.07, "sigma": 0.17},
        "agent1": {"alpha": 0.2, "x0": 0.0},
        "agent2": {"alpha": 0.4},
        "herd": {"vartheta": vartheta, "rho": rho, "T": 50},
        "grid_n": grid_n,
    }
    return parse_config(json.dumps(doc))
