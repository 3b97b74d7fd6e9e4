"""Command-line entry point.

    vpmacd backtest  --config run.yaml [--out DIR] [--seed N]
    vpmacd calibrate --config run.yaml [--out DIR]
    vpmacd compare   --config run.yaml [--out DIR] [--seed N]
    vpmacd report    --config run.yaml [--out DIR] [--seed N]

Exit status: 0 success, 1 usage or config error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config, resolve_path
from .indicators import WindowExceedsSeries
from .market_data import MarketDataError
from . import runner

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which is our data-error code
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vpmacd", description="VP-MACD daily backtesting engine")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("backtest", "backtest every strategy on the test window"),
        ("calibrate", "grid-search lambda on the training window"),
        ("compare", "pairwise significance tests between strategies"),
        ("report", "calibrate, backtest and compare in one run"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="bootstrap seed (overrides config)")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = load_config(args.config, seed=args.seed)
    except ConfigError as exc:
        print(f"vpmacd: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out if args.out is not None else resolve_path(args.config, cfg.output_dir)

    try:
        data = runner.load_data(cfg, args.config)
        if args.command == "calibrate":
            done = runner.calibrate(cfg, data, out)
            if not done:
                print("vpmacd: no lambda-rule strategies to calibrate", file=sys.stderr)
                return EXIT_CONFIG
            print(runner.render_lambda_table(done), end="")
        elif args.command == "backtest":
            runs = runner.backtest(cfg, data, out)
            print(runner.render_reports(cfg, runs), end="")
        elif args.command == "compare":
            if len(cfg.strategies) < 2:
                print("vpmacd: compare needs at least two strategies", file=sys.stderr)
                return EXIT_CONFIG
            runs = runner.backtest(cfg, data, None)
            rows = runner.compare(cfg, runs, out)
            print(runner.render_tests(rows), end="")
        else:
            done = runner.calibrate(cfg, data, out)
            runs = runner.backtest(cfg, data, out, calibrated=done)
            text = runner.render_reports(cfg, runs)
            if done:
                text = runner.render_lambda_table(done) + "\n" + text
            if len(cfg.strategies) >= 2:
                rows = runner.compare(cfg, runs, out)
                text += "\n" + runner.render_tests(rows)
            out.mkdir(parents=True, exist_ok=True)
            head = "".join(f"# {line}\n" for line in cfg.header())
            (out / "report.txt").write_text(head + "\n" + text, encoding="utf-8")
            print(text, end="")
    except (runner.DataError, MarketDataError, WindowExceedsSeries) as exc:
        print(f"vpmacd: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
