"""Declarative run configuration (YAML) shared by every CLI command."""

from __future__ import annotations

import datetime as dt
import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import __version__
from .backtest import BacktestConfig
from .calibration import DEFAULT_GRID, MetricKey, SelectionPolicy
from .indicators import AdjustedPriceParams, MacdParams
from .market_data import SplitSpec
from .pipeline import Indicator, Strategy
from .signals import LAMBDA_MAX, LAMBDA_MIN, Rule
from .stats import TestConfig


class ConfigError(ValueError):
    pass


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class InstrumentModel(_Model):
    symbol: str
    path: Path


class SplitModel(_Model):
    train_start: dt.date
    train_end: dt.date
    test_start: dt.date
    test_end: dt.date

    @model_validator(mode="after")
    def _ordered(self) -> "SplitModel":
        SplitSpec(**self.model_dump())
        return self

    def to_spec(self) -> SplitSpec:
        return SplitSpec(**self.model_dump())


class MacdModel(_Model):
    n_fast: int = 12
    n_slow: int = 26
    n_signal: int = 9

    @model_validator(mode="after")
    def _check(self) -> "MacdModel":
        MacdParams(**self.model_dump())
        return self


class AdjustedModel(_Model):
    n_window: int = 20
    sigma_window: int = 20

    @model_validator(mode="after")
    def _check(self) -> "AdjustedModel":
        AdjustedPriceParams(**self.model_dump())
        return self


LambdaSpec = Union[float, Literal["calibrate"], dict[str, float]]


def _check_lam(value: float) -> float:
    if not (LAMBDA_MIN <= value <= LAMBDA_MAX):
        raise ValueError(f"lambda {value} outside [{LAMBDA_MIN}, {LAMBDA_MAX}]")
    return value


class StrategyModel(_Model):
    name: str
    indicator: Indicator = Indicator.MACD
    rule: Rule = Rule.SIGNAL_CROSS
    # float, "calibrate", or a per-symbol mapping
    lam: LambdaSpec = Field(default=1.0, alias="lambda")
    macd: Optional[MacdModel] = None
    adjusted_price: Optional[AdjustedModel] = None

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("lam")
    @classmethod
    def _lam_range(cls, v):
        if isinstance(v, dict):
            for lam in v.values():
                _check_lam(lam)
        elif isinstance(v, float):
            _check_lam(v)
        return v

    @property
    def calibrated(self) -> bool:
        return self.rule is Rule.LAMBDA_ADJUSTED and self.lam == "calibrate"


class BacktestModel(_Model):
    initial_capital: float = 100_000.0
    one_way_cost_bps: float = 4.0
    min_unit: int = 1

    @model_validator(mode="after")
    def _check(self) -> "BacktestModel":
        BacktestConfig(**self.model_dump())
        return self


class PolicyModel(_Model):
    primary_key: str = "sharpe"
    tie_breakers: list[str] = ["expectancy", "min:max_drawdown"]
    constraints: dict[str, tuple[Optional[float], Optional[float]]] = {}

    @model_validator(mode="after")
    def _check(self) -> "PolicyModel":
        self.to_policy()
        return self

    def to_policy(self) -> SelectionPolicy:
        return SelectionPolicy(
            MetricKey.parse(self.primary_key),
            tuple(MetricKey.parse(k) for k in self.tie_breakers),
            dict(self.constraints),
        )


class CalibrationModel(_Model):
    grid: list[float] = list(DEFAULT_GRID)
    policy: PolicyModel = PolicyModel()

    @field_validator("grid")
    @classmethod
    def _grid_range(cls, v):
        if not v:
            raise ValueError("grid must not be empty")
        for lam in v:
            _check_lam(lam)
        return v


class TestsModel(_Model):
    nw_lag: Union[int, Literal["auto"]] = "auto"
    resamples: int = Field(1000, ge=1)
    block_len: int = Field(5, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    histogram_bins: int = Field(30, ge=1)

    __test__ = False

    def to_config(self) -> TestConfig:
        return TestConfig(self.nw_lag, self.resamples, self.block_len, self.seed)


class RunConfig(_Model):
    instruments: list[InstrumentModel]
    split: SplitModel
    strategies: list[StrategyModel]
    macd: MacdModel = MacdModel()
    adjusted_price: AdjustedModel = AdjustedModel()
    backtest: BacktestModel = BacktestModel()
    calibration: CalibrationModel = CalibrationModel()
    tests: TestsModel = TestsModel()
    pairs: Optional[list[tuple[str, str]]] = None
    indicator_history: Literal["full", "window"] = "full"
    sharpe_ddof: Literal[0, 1] = 1
    output_dir: Path = Path("out")

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if not self.instruments:
            raise ValueError("at least one instrument is required")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        names = [s.name for s in self.strategies]
        if len(set(names)) != len(names):
            raise ValueError("strategy names must be unique")
        symbols = [i.symbol for i in self.instruments]
        if len(set(symbols)) != len(symbols):
            raise ValueError("instrument symbols must be unique")
        for s in self.strategies:
            if isinstance(s.lam, dict):
                missing = [sym for sym in symbols if sym not in s.lam]
                if missing and s.rule is Rule.LAMBDA_ADJUSTED:
                    raise ValueError(f"strategy {s.name!r} has no lambda for {', '.join(missing)}")
        for new, old in self.pairs or []:
            for name in (new, old):
                if name not in names:
                    raise ValueError(f"pair references unknown strategy {name!r}")
        return self

    def strategy(self, model: StrategyModel, symbol: str, lam: float | None = None) -> Strategy:
        if lam is None:
            if isinstance(model.lam, dict):
                lam = model.lam.get(symbol, 1.0)
            elif isinstance(model.lam, float):
                lam = model.lam
            else:
                lam = 1.0
        macd = model.macd or self.macd
        adj = model.adjusted_price or self.adjusted_price
        return Strategy(
            name=model.name,
            indicator=model.indicator,
            rule=model.rule,
            lam=lam,
            macd=MacdParams(**macd.model_dump()),
            adjusted=AdjustedPriceParams(**adj.model_dump()),
        )

    def backtest_config(self) -> BacktestConfig:
        return BacktestConfig(**self.backtest.model_dump())

    def pair_list(self) -> list[tuple[str, str]]:
        if self.pairs is not None:
            return [tuple(p) for p in self.pairs]
        names = [s.name for s in self.strategies]
        return [(names[j], names[i]) for j in range(1, len(names)) for i in range(j)]

    def digest(self) -> str:
        payload = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def header(self) -> list[str]:
        return [f"vpmacd {__version__}", f"config_sha256 {self.digest()}"]


def load_config(path: str | Path, seed: int | None = None) -> RunConfig:
    """Parse and validate a YAML run config.

    Instrument paths are resolved relative to the config file and must exist.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    if seed is not None:
        raw.setdefault("tests", {})["seed"] = seed
    try:
        cfg = RunConfig.model_validate(raw)
    except ValueError as exc:
        first = str(exc).splitlines()
        raise ConfigError(f"{path}: " + " ".join(line.strip() for line in first[:3])) from None
    base = path.parent
    for inst in cfg.instruments:
        full = inst.path if inst.path.is_absolute() else base / inst.path
        if not full.is_file():
            raise ConfigError(f"input file not found: {full}")
    return cfg


def resolve_path(config_path: str | Path, p: Path) -> Path:
    return p if p.is_absolute() else Path(config_path).parent / p


def reference_lambdas() -> dict[str, dict[str, float]]:
    """Reference per-index lambda choices, keyed by strategy then symbol."""
    text = resources.files("vpmacd").joinpath("data/reference_lambdas.yaml").read_text(encoding="utf-8")
    return yaml.safe_load(text)["lambda"]
