"""Market parameters, assumption checks and GBM estimation from closing prices."""

from __future__ import annotations

import csv
import datetime as dt_
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DataFormatError, MarketAssumptionError

TRADING_DAYS = 252


@dataclass(frozen=True)
class MarketParams:
    """Risk-free rate ``r``, appreciation rate ``mu`` and volatility ``sigma`` (annualised).

    The excess return ``v`` is always derived from ``mu - r``. Construction does
    not enforce the model assumptions; use :func:`validate_market` or
    :meth:`require_valid`.
    """

    r: float
    mu: float
    sigma: float

    @property
    def v(self) -> float:
        return self.mu - self.r

    def require_valid(self) -> "MarketParams":
        result = validate_market(self)
        if not result.ok:
            raise MarketAssumptionError("invalid market: " + "; ".join(result.violations))
        return self

    def with_excess_return(self, v: float) -> "MarketParams":
        """Same market with ``mu`` shifted so that ``mu - r == v``."""
        return MarketParams(self.r, self.r + v, self.sigma)


@dataclass(frozen=True)
class MarketValidation:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def validate_market(params: MarketParams) -> MarketValidation:
    """Check sigma > 0 and v = mu - r > 0, listing every violated assumption."""
    violations = []
    if not (math.isfinite(params.r) and math.isfinite(params.mu) and math.isfinite(params.sigma)):
        violations.append("non-finite parameter")
    if not params.sigma > 0:
        violations.append("sigma ≤ 0")
    if not params.v > 0:
        violations.append("v ≤ 0")
    return MarketValidation(not violations, tuple(violations))


@dataclass(frozen=True)
class PriceSeries:
    """Dated closing prices sampled every ``dt`` years."""

    timestamps: tuple[dt_.date, ...]
    closes: np.ndarray = field(repr=False)
    dt: float = 1.0 / TRADING_DAYS

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        if closes.ndim != 1 or len(closes) != len(self.timestamps):
            raise ValueError("timestamps and closes must have the same length")
        if len(closes) < 3:
            raise ValueError("need at least 3 closes (two log returns)")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise ValueError("closing prices must be finite and strictly positive")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ValueError("timestamps must be strictly increasing")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    def __len__(self) -> int:
        return len(self.closes)

    @property
    def log_returns(self) -> np.ndarray:
        return np.diff(np.log(self.closes))


def estimate_gbm_params(series: PriceSeries, r: float) -> MarketParams:
    """GBM maximum-likelihood estimates from log returns.

    sigma_hat = std(log returns, ddof=1) / sqrt(dt) and
    mu_hat = mean(log returns) / dt + sigma_hat**2 / 2.

    Raises
    ------
    MarketAssumptionError
        If the estimate has ``sigma == 0`` or ``mu <= r``.
    """
    rets = series.log_returns
    sd = float(np.std(rets, ddof=1)) if rets.size > 1 else 0.0
    sigma = sd / math.sqrt(series.dt)
    mu = float(np.mean(rets)) / series.dt + 0.5 * sigma**2
    params = MarketParams(r=float(r), mu=mu, sigma=sigma)
    check = validate_market(params)
    if not check.ok:
        raise MarketAssumptionError(
            "estimated parameters violate v > 0 / sigma > 0 "
            f"({', '.join(check.violations)}; mu={mu:.6g}, sigma={sigma:.6g}, r={r:.6g})"
        )
    return params


def simulate_gbm_prices(
    mu: float,
    sigma: float,
    n_steps: int,
    dt: float = 1.0 / TRADING_DAYS,
    s0: float = 100.0,
    seed: int | None = None,
    start: dt_.date = dt_.date(2000, 1, 3),
) -> PriceSeries:
    """Exact GBM sampling on business days: ``n_steps`` returns, ``n_steps + 1`` closes."""
    rng = np.random.default_rng(seed)
    steps = (mu - 0.5 * sigma**2) * dt + sigma * math.sqrt(dt) * rng.standard_normal(n_steps)
    closes = s0 * np.exp(np.concatenate(([0.0], np.cumsum(steps))))
    days = np.busday_offset(np.datetime64(start), np.arange(n_steps + 1), roll="forward")
    stamps = tuple(d.astype(dt_.date) for d in days)
    return PriceSeries(stamps, closes, dt)


def read_price_csv(path: str | Path, dt: float = 1.0 / TRADING_DAYS) -> PriceSeries:
    """Read a ``date,close`` CSV (header required, ISO-8601 dates).

    Rows are never repaired: an unparsable field, an unsorted or duplicate
    date, or a non-positive close aborts with the offending line number.
    """
    dates: list[dt_.date] = []
    closes: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError("empty file", line=1)
        if [h.strip().lower() for h in header] != ["date", "close"]:
            raise DataFormatError(f"expected header 'date,close', got {','.join(header)!r}", line=1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataFormatError(f"expected 2 fields, got {len(row)}", line=line)
            try:
                day = dt_.date.fromisoformat(row[0].strip())
            except ValueError:
                raise DataFormatError(f"bad date {row[0]!r}", line=line) from None
            try:
                close = float(row[1])
            except ValueError:
                raise DataFormatError(f"bad close {row[1]!r}", line=line) from None
            if not math.isfinite(close) or close <= 0:
                raise DataFormatError(f"close must be positive, got {row[1]!r}", line=line)
            if dates and day <= dates[-1]:
                raise DataFormatError(f"date {day} not after {dates[-1]}", line=line)
            dates.append(day)
            closes.append(close)
    if len(closes) < 3:
        raise DataFormatError(f"need at least 3 rows, got {len(closes)}")
    return PriceSeries(tuple(dates), np.array(closes), dt)


def write_price_csv(series: PriceSeries, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "close"])
        for d, c in zip(series.timestamps, series.closes):
            w.writerow([d.isoformat(), repr(float(c))])
