import argparse
import asyncio
import sys
from pathlib import Path

from config import config
from cli import KINDS, PRESETS, ConfigError, ExperimentConfig, ExperimentHandlers, RunMessages
from cli import load_config, load_preset, write_presets
from results import ExperimentReport, ResultWriter

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class WllnLab:
    """Main application class"""

    def __init__(self, threads: int = None):
        # Validate configuration
        config.validate()

        self.threads = threads or config.THREADS
        if self.threads < 1:
            raise ConfigError([f"threads must be >= 1, got {self.threads}"])
        self.handlers = ExperimentHandlers(self.threads)
        self.messages = RunMessages()

        # Experiment kind -> handler
        self.routes = {
            "check-condition": self.handlers.check_condition_command,
            "simulate": self.handlers.simulate_command,
            "counterexample": self.handlers.counterexample_command,
            "dyadic": self.handlers.dyadic_command,
            "sv-verify": self.handlers.sv_verify_command,
            "ui-check": self.handlers.ui_check_command,
            "variance-check": self.handlers.variance_check_command,
        }

    def out_dir(self, cfg: ExperimentConfig) -> Path:
        return Path(cfg.out_dir) if cfg.out_dir else Path(config.OUT_DIR) / cfg.kind

    async def execute(self, cfg: ExperimentConfig) -> ExperimentReport:
        """Run the handler for cfg.kind and write every output file"""
        report = await self.routes[cfg.kind](cfg)
        writer = ResultWriter(self.out_dir(cfg))
        writer.write_report(report)
        for table in report.tables:
            print(self.messages.file_written(writer.out_dir / f"{table.name}.csv", len(table.rows)))
        print(self.messages.file_written(writer.out_dir / "plotdata.csv", len(report.plotdata)))
        print(self.messages.file_written(writer.out_dir / "summary.json"))
        checks = self.messages.format_checks(report.checks)
        if checks:
            print(checks)
        return report

    def run(self, cfg: ExperimentConfig) -> ExperimentReport:
        print(f"🚀 Starting {cfg.kind} experiment...")
        report = asyncio.run(self.execute(cfg))
        print("✅ Done")
        return report

    def list_presets(self, write_dir: str = None):
        print(self.messages.format_presets(PRESETS))
        if write_dir:
            for path in write_presets(write_dir):
                print(self.messages.file_written(path))


def run(cfg: ExperimentConfig, threads: int = None) -> ExperimentReport:
    """Execute one experiment config end to end"""
    return WllnLab(threads).run(cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wlln-lab",
        description="Numerical lab for maximal partial sums of pairwise independent variables",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        cmd = sub.add_parser(kind, help=f"run a {kind} experiment")
        source = cmd.add_mutually_exclusive_group(required=True)
        source.add_argument("--config", help="experiment JSON file")
        source.add_argument("--preset", choices=sorted(PRESETS), help="built-in experiment")
        cmd.add_argument("--out", help=f"output directory (default: $WLLN_OUT_DIR/<kind>, {config.OUT_DIR}/<kind>)")
        cmd.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        cmd.add_argument("--reps", type=int, help="Monte Carlo replications")
        cmd.add_argument("--threads", type=int, help=f"worker threads (default: $WLLN_THREADS, {config.THREADS})")
    presets = sub.add_parser("presets", help="list built-in experiments")
    presets.add_argument("--write", metavar="DIR", help="also write every preset as JSON into DIR")
    return parser


def resolve_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        source = args.config
    else:
        cfg = load_preset(args.preset)
        source = f"preset {args.preset}"
    if cfg.kind != args.command:
        raise ConfigError([f"{source} describes a {cfg.kind} experiment, not {args.command}"])
    cfg = cfg.with_overrides(seed=args.seed, reps=args.reps, out_dir=args.out)
    print(RunMessages.config_loaded(cfg.kind, source, cfg.config_hash()))
    return cfg


def main(argv=None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            WllnLab().list_presets(args.write)
            return EXIT_OK
        cfg = resolve_config(args)
        WllnLab(args.threads).run(cfg)
        return EXIT_OK
    except ConfigError as e:
        print("✗ Invalid config:")
        for line in e.diagnostics:
            print(f"  • {line}")
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("\n⚠️ Interrupt received...")
        return EXIT_RUNTIME
    except Exception as e:
        print(f"❌ Error: {e}")
        import traceback
        traceback.print_exc()
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
