from typing import Dict, Sequence

from maxsum_stats import CONVERGES, DIVERGES, StatisticResult


class RunMessages:
    """Console templates for experiment runs"""

    VERDICT_EMOJI = {CONVERGES: "✅", DIVERGES: "💥"}

    PRESETS_HEADER = """
📚 Built-in presets

Run one with: wlln-lab <kind> --preset <name>
"""

    @staticmethod
    def config_loaded(kind: str, source: str, config_hash: str) -> str:
        return f"✓ Loaded {kind} config from {source} (hash {config_hash[:12]})"

    @staticmethod
    def campaign_started(reps: int, grid: Sequence, threads: int) -> str:
        grid = list(grid)
        span = f"{grid[0]}..{grid[-1]}" if len(grid) > 1 else f"{grid[0]}"
        return f"📊 {reps} replications over {len(grid)} grid points ({span}) on {threads} thread(s)"

    @classmethod
    def verdict_line(cls, res: StatisticResult) -> str:
        emoji = cls.VERDICT_EMOJI.get(res.verdict, "❔")
        last = res.estimates[-1]
        return (f"{emoji} {res.kind} at eps={res.eps:g}: {res.verdict} "
                f"(n={last.n}, p_hat={last.p_hat:.4f}, CI [{last.ci_low:.4f}, {last.ci_high:.4f}])")

    @staticmethod
    def skipped(step: str, reason: str) -> str:
        return f"⚠️ Skipped {step}: {reason}"

    @staticmethod
    def file_written(path, rows: int = None) -> str:
        suffix = "" if rows is None else f" ({rows} rows)"
        return f"✓ Wrote {path}{suffix}"

    @staticmethod
    def format_checks(checks: Dict) -> str:
        """One line per check; booleans get a tick or a cross"""
        if not checks:
            return ""
        lines = ["🔎 Checks:"]
        for name, value in checks.items():
            if isinstance(value, bool):
                mark = "✓" if value else "✗"
                lines.append(f"  {mark} {name}")
            elif isinstance(value, float):
                lines.append(f"  • {name} = {value:.6g}")
            else:
                lines.append(f"  • {name} = {value}")
        return "\n".join(lines)

    @classmethod
    def format_presets(cls, presets: Dict[str, Dict]) -> str:
        lines = [cls.PRESETS_HEADER.strip(), ""]
        for name in sorted(presets):
            lines.append(f"• {name:<32} {presets[name]['kind']}")
        return "\n".join(lines)
