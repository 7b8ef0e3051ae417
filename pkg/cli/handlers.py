import asyncio
import math
from typing import List, Optional

import numpy as np

from config import config
from distributions import (
    UniformTail,
    VaryingFamily,
    compose_check,
    domination_check,
    gut_condition,
    uniform_integrability_gap,
)
from dyadic_diagnostics import (
    DyadicReduction,
    bound_sequences,
    decompose_path,
    default_ab,
    km_sequence,
    lambda_sum_check,
)
from generators import (
    CounterexampleModel,
    IidModel,
    JoffeModel,
    MarkovModel,
    RngStream,
    generate,
    joffe_variance_ratio,
    markov_variance_ratio,
    parse_transform,
    variance_profile,
    verify_not_mutually_independent,
    verify_pairwise_independence,
)
from maxsum_stats import (
    Campaign,
    MonteCarloEngine,
    StatisticKind,
    centering_drift,
    counterexample_max_prob,
    restricted_tail_sums,
    run_chunked,
    tail_sum,
)
from results import ExperimentReport, Table
from slowly_varying import Normalizer, SlowlyVaryingFn, de_bruijn_conjugate, de_bruijn_numeric, karamata_sum, monotone_adjust
from .experiment import ConfigError, ExperimentConfig
from .messages import RunMessages

CONVERGENCE_COLUMNS = ("n", "eps", "reps", "p_hat", "ci_low", "ci_high", "median", "statistic_kind",
                       "model_hash", "seed")
AGREEMENT_SIGMAS = 4.0
VARIANCE_SIGMAS = 3.0
LAMBDA_RTOL = 1e-12


def _nonincreasing_after_peak(values) -> bool:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return True
    tail = values[int(np.argmax(values)):]
    return bool(np.all(np.diff(tail) <= 1e-15 * np.abs(tail[:-1])))


def _trend(values) -> str:
    values = np.asarray(values, dtype=float)
    if values.size < 2 or np.allclose(values, values[0], rtol=1e-12, atol=0.0):
        return "flat"
    if np.all(np.diff(values) <= 0):
        return "decreasing"
    return "not decreasing"


class ExperimentHandlers:
    """One async handler per experiment kind; each returns a report without touching disk"""

    def __init__(self, threads: int = None):
        self.threads = threads or config.THREADS
        self.messages = RunMessages()

    def _report(self, cfg: ExperimentConfig, model_hash: str = None) -> ExperimentReport:
        return ExperimentReport(kind=cfg.kind, config_hash=cfg.config_hash(), seed=cfg.seed, model_hash=model_hash)

    def _convergence_table(self, report: ExperimentReport, campaign: Campaign, name: str = "convergence") -> Table:
        table = Table(name, CONVERGENCE_COLUMNS)
        for res in campaign.results:
            for est, median in zip(res.estimates, res.medians):
                table.add(n=est.n, eps=est.eps, reps=est.reps, p_hat=est.p_hat, ci_low=est.ci_low,
                          ci_high=est.ci_high, median=median, statistic_kind=res.kind,
                          model_hash=campaign.model_hash, seed=campaign.seed)
            report.verdicts[f"{res.kind}@{res.eps:g}"] = res.verdict
            print(self.messages.verdict_line(res))
        for row in table.rows:
            label = f"{row['statistic_kind']}@{row['eps']:g}"
            for column in ("p_hat", "ci_low", "ci_high"):
                report.plotdata.append((name, "n", row["n"], f"{label}:{column}", row[column]))
        report.tables.append(table)
        return table

    async def _campaign(self, cfg: ExperimentConfig, model, n_grid) -> Campaign:
        engine = MonteCarloEngine(model, cfg.build_normalizer(), cfg.statistics, n_grid, cfg.eps,
                                  cfg.reps, cfg.seed, threads=self.threads)
        print(self.messages.campaign_started(cfg.reps, n_grid, self.threads))
        return await engine.run(cfg.thresholds.get("converge_upper"), cfg.thresholds.get("diverge_lower"))

    async def check_condition_command(self, cfg: ExperimentConfig) -> ExperimentReport:
        """n P(|X| > b_n), the truncation drift and f(g(n))/n across the n-grid"""
        d = cfg.build_distribution()
        if d is None:
            raise ConfigError(["check-condition needs an identically distributed law"])
        fam = VaryingFamily.constant(d)
        base = cfg.build_normalizer()
        report = self._report(cfg)
        table = Table("gut_condition", ("L", "n", "b_n", "n_tail", "centering_drift", "compose_ratio"))
        scales = [base.L] + [SlowlyVaryingFn.parse(text) for text in cfg.params.get("compare_L", [])]
        for L in scales:
            norm = Normalizer(base.p, L)
            values = []
            for n in cfg.n_grid:
                n_tail = gut_condition(d, norm, n)
                values.append(n_tail)
                table.add(L=L.describe(), n=n, b_n=norm.value(n), n_tail=n_tail,
                          centering_drift=centering_drift(fam, norm, n), compose_ratio=compose_check(base.p, L, n))
            report.checks[f"n_tail_last[{L.describe()}]"] = values[-1]
            report.checks[f"n_tail_trend[{L.describe()}]"] = _trend(values)
        report.tables.append(table)
        report.plotdata += table.plot_points("n", ["n_tail", "centering_drift", "compose_ratio"], label="L")
        return report

    async def simulate_command(self, cfg: ExperimentConfig) -> ExperimentReport:
        """Monte Carlo convergence campaign for every statistic and eps"""
        model = cfg.build_model()
        report = self._report(cfg, model.model_hash())
        campaign = await self._campaign(cfg, model, cfg.n_grid)
        self._convergence_table(report, campaign)
        return report

    async def counterexample_command(self, cfg: ExperimentConfig) -> ExperimentReport:
        """Exact probabilities and tail sums of the counterexample, plus an optional Monte Carlo cross-check"""
        norm = cfg.build_normalizer()
        if not norm.L.is_constant or norm.L.coefficient != 1.0 or norm.rule != "standard":
            raise ConfigError(["counterexample runs use b_n = n^{1/p} (normalizer L = 1, standard rule)"])
        p_values = [float(p) for p in cfg.params.get("p_values", [norm.p])]

        exact = Table("counterexample_exact", ("p", "n", "eps", "exact_max_prob", "tail_sum", "restricted_tail_sum"))
        bounds = Table("restricted_tail_bound", ("p", "eps", "n_max", "min_value", "argmin_n", "holds"))
        for p in p_values:
            fam = VaryingFamily.counterexample(p)
            norm_p = Normalizer(p, SlowlyVaryingFn.constant())
            for eps in cfg.eps:
                for n in cfg.n_grid:
                    exact.add(p=p, n=n, eps=eps, exact_max_prob=counterexample_max_prob(p, n, eps),
                              tail_sum=tail_sum(fam, norm_p, n, eps),
                              restricted_tail_sum=tail_sum(fam, norm_p, n, eps, start=n // 2))
                n_max = int(cfg.params.get("restricted_n_max", cfg.n_grid[-1]))
                if n_max >= 2:
                    ns, sums = restricted_tail_sums(p, n_max, eps)
                    k = int(np.argmin(sums))
                    bounds.add(p=p, eps=eps, n_max=n_max, min_value=float(sums[k]), argmin_n=int(ns[k]),
                               holds=bool(sums[k] >= 0.5))
        report = self._report(cfg)
        report.tables += [exact, bounds]
        report.plotdata += exact.plot_points("n", ["exact_max_prob", "restricted_tail_sum"], label="p")
        report.checks["restricted_tail_sum_min"] = min((row["min_value"] for row in bounds.rows), default=None)
        report.checks["restricted_bound_holds"] = all(row["holds"] for row in bounds.rows)

        if cfg.reps is not None:
            model = CounterexampleModel(norm.p)
            report.model_hash = model.model_hash()
            mc_grid = cfg.params.get("mc_n_grid", cfg.n_grid)
            campaign = await self._campaign(cfg, model, mc_grid)
            self._convergence_table(report, campaign)
            if StatisticKind.MAX_ABS.value in cfg.statistics:
                agreement = self._agreement(campaign, norm.p, cfg.reps)
                report.tables.append(agreement)
                report.checks["monte_carlo_agrees"] = all(row["agrees"] for row in agreement.rows)
        return report

    @staticmethod
    def _agreement(campaign: Campaign, p: float, reps: int) -> Table:
        table = Table("counterexample_agreement", ("n", "eps", "exact", "p_hat", "std_error", "z", "agrees"))
        for res in campaign.results:
            if res.kind != StatisticKind.MAX_ABS.value:
                continue
            for est in res.estimates:
                target = counterexample_max_prob(p, est.n, est.eps)
                se = math.sqrt(target * (1.0 - target) / reps)
                z = (est.p_hat - target) / se if se > 0 else (0.0 if est.p_hat == target else math.inf)
                table.add(n=est.n, eps=est.eps, exact=target, p_hat=est.p_hat, std_error=se, z=z,
                          agrees=abs(z) <= AGREEMENT_SIGMAS)
        return table

    def _ab_pairs(self, cfg: ExperimentConfig, p: float) -> List[tuple]:
        if "ab" in cfg.params:
            return [(float(a), float(b)) for a, b in cfg.params["ab"]]
        if "a" in cfg.params:
            a = float(cfg.params["a"])
            return [(a, float(cfg.params.get("b", 1.0 / p - a)))]
        return [default_ab(p)]

    async def dyadic_command(self, cfg: ExperimentConfig) -> ExperimentReport:
        """Threshold sums, K_m, bound sequences, pathwise slack and the coupled dyadic reduction"""
        norm = cfg.build_normalizer()
        d = cfg.build_distribution()
        fam = cfg.build_family()
        model = cfg.build_sampling_model()
        report = self._report(cfg, model.model_hash() if model is not None else None)
        eps1 = float(cfg.params.get("eps1", 1.0))
        pairs = self._ab_pairs(cfg, norm.p)

        lambdas = Table("lambda_sums", ("a", "b", "n", "total", "bound", "ratio", "holds"))
        for a, b in pairs:
            for n in range(1, int(cfg.params.get("lambda_n_max", 60)) + 1):
                total, bound = lambda_sum_check(n, eps1, a, b, norm.scale)
                lambdas.add(a=a, b=b, n=n, total=total, bound=bound, ratio=total / bound,
                            holds=total <= bound * (1.0 + LAMBDA_RTOL))
        report.tables.append(lambdas)
        report.checks["lambda_bound_holds"] = all(row["holds"] for row in lambdas.rows)

        km = km_sequence(fam, norm, int(cfg.params.get("km_m_max", 20)))
        km_table = Table("km_sequence", ("m", "K_m", "middle", "chain_bound"))
        for m, k, middle, chain in zip(km.m, km.k, km.middle, km.chain_bound):
            km_table.add(m=int(m), K_m=float(k), middle=float(middle), chain_bound=float(chain))
        report.tables.append(km_table)
        report.plotdata += km_table.plot_points("m", ["K_m", "middle", "chain_bound"])
        report.checks["km_chain_holds"] = km.chain_holds
        report.checks["km_ratio_sup"] = km.ratio_sup

        if d is not None:
            a, b = pairs[0]
            seqs = bound_sequences(d, norm, a, b, eps1, int(cfg.params.get("bound_n_max", 60)))
            bound_table = Table("bound_sequences", ("n", "tail_drift", "I_bound", "J_bound"))
            bound_table.rows = list(seqs.as_rows())
            report.tables.append(bound_table)
            report.plotdata += bound_table.plot_points("n", ["tail_drift", "I_bound", "J_bound"])
            for column in ("tail_drift", "I_bound", "J_bound"):
                values = [row[column] for row in bound_table.rows]
                report.checks[f"{column}_last"] = values[-1]
                report.checks[f"{column}_nonincreasing_after_peak"] = _nonincreasing_after_peak(values)
        else:
            print(self.messages.skipped("bound sequences", "no single marginal law"))

        paths = int(cfg.params.get("paths", 0))
        if paths > 0:
            report.tables.append(await self._slack_table(cfg, model, fam, norm, paths))
            report.checks["slack_violations"] = sum(row["violations"] for row in report.table("decomposition_slack").rows)

        if cfg.reps is not None:
            report.tables.append(await self._reduction_table(cfg, model, norm))
        return report

    async def _slack_table(self, cfg, model, fam, norm, paths: int) -> Table:
        scales = [int(s) for s in cfg.params.get("scales", range(1, 11))]
        longest = 2 ** max(scales) - 1
        stream = RngStream(cfg.seed)

        def replicate(r: int) -> np.ndarray:
            path = generate(model, longest, stream.spawn(r))
            parts = [decompose_path(path[: 2 ** s - 1], fam, norm) for s in scales]
            return np.array([[part.slack, float(part.violated)] for part in parts])

        print(self.messages.campaign_started(paths, [2 ** s - 1 for s in scales], self.threads))
        outcome = await run_chunked(replicate, paths, self.threads)
        table = Table("decomposition_slack", ("scale", "length", "paths", "min_slack", "mean_slack", "violations"))
        for col, s in enumerate(scales):
            values = outcome[:, col, 0]
            table.add(scale=s, length=2 ** s - 1, paths=paths, min_slack=float(values.min()),
                      mean_slack=float(values.mean()), violations=int(outcome[:, col, 1].sum()))
        return table

    async def _reduction_table(self, cfg, model, norm) -> Table:
        table = Table("dyadic_reduction", ("n", "m", "eps", "statistic_kind", "p_direct", "p_dyadic", "gap",
                                           "joint_half_width", "consistent"))
        kind = StatisticKind.parse(cfg.statistics[0])
        for eps in cfg.eps:
            for n in cfg.n_grid:
                est = await DyadicReduction(model, kind, norm, n, eps, cfg.reps, cfg.seed, self.threads).run()
                table.add(n=n, m=est.m, eps=eps, statistic_kind=kind.value, p_direct=est.direct.p_hat,
                          p_dyadic=est.dyadic.p_hat, gap=est.gap, joint_half_width=est.joint_half_width,
                          consistent=est.consistent)
        return table

    async def sv_verify_command(self, cfg: ExperimentConfig) -> ExperimentReport:
        """Conjugate identity trend, analytic vs numeric conjugates and Karamata ratios"""
        L = cfg.build_normalizer().L
        functions = {L.describe(): L}
        for gamma in cfg.params.get("gammas", []):
            fn = SlowlyVaryingFn.log(float(gamma))
            functions.setdefault(fn.describe(), fn)
        grid = [float(u) for u in cfg.params.get("log_x_grid", [10.0, 20.0, 50.0, 100.0, 200.0])]
        report = self._report(cfg)

        trend = Table("conjugate_trend", ("L", "log_x", "identity_gap", "numeric", "analytic", "relative_gap"))
        for name, fn in functions.items():
            conj = de_bruijn_conjugate(fn)
            for u in grid:
                value = fn.eval_log(u)
                gap = abs(value * conj.eval_log(u + math.log(value)) - 1.0)
                analytic = conj.eval_log(u)
                numeric = de_bruijn_numeric(fn, log_x=u)
                trend.add(L=name, log_x=u, identity_gap=gap, numeric=numeric, analytic=analytic,
                          relative_gap=abs(numeric / analytic - 1.0))
            rows = [row for row in trend.rows if row["L"] == name]
            report.checks[f"identity_gap_last[{name}]"] = rows[-1]["identity_gap"]
            report.checks[f"relative_gap_last[{name}]"] = rows[-1]["relative_gap"]
        report.tables.append(trend)
        report.plotdata += trend.plot_points("log_x", ["identity_gap", "relative_gap"], label="L")

        opts = cfg.params.get("karamata", {})
        alpha, beta = float(opts.get("alpha", 2.0)), float(opts.get("beta", 2.0))
        karamata = Table("karamata", ("alpha", "beta", "n", "total", "ratio"))
        for n in range(1, int(opts.get("n_max", 60)) + 1):
            res = karamata_sum(alpha, beta, L, n)
            karamata.add(alpha=alpha, beta=beta, n=n, total=res.total, ratio=res.ratio)
        report.tables.append(karamata)
        report.checks["karamata_ratio_sup"] = max(row["ratio"] for row in karamata.rows)

        if "regularize_r" in cfg.params:
            r = float(cfg.params["regularize_r"])
            report.checks["ramp_threshold"] = monotone_adjust(L, r).ramp_threshold
        return report

    async def ui_check_command(self, cfg: ExperimentConfig) -> ExperimentReport:
        """Uniform-integrability gap across levels and the domination moment inequalities"""
        fam = cfg.build_family()
        norm = cfg.build_normalizer()
        report = self._report(cfg, cfg.build_model().model_hash() if cfg.model is not None else None)

        gaps = Table("ui_gap", ("a", "gap"))
        for a in cfg.params.get("a_levels", [1.0, 10.0, 100.0, 1000.0]):
            gaps.add(a=float(a), gap=uniform_integrability_gap(fam, norm.p, norm.L, float(a)))
        report.tables.append(gaps)
        report.plotdata += gaps.plot_points("a", ["gap"])
        report.checks["ui_gap_last"] = gaps.rows[-1]["gap"] if gaps.rows else None

        r = float(cfg.params.get("r", norm.p))
        rows = domination_check(fam, r, [float(t) for t in cfg.params.get("t_grid", [1.0, 10.0, 100.0, 1000.0])])
        domination = Table("domination", ("t", "lower_lhs", "lower_rhs", "upper_lhs", "upper_rhs", "holds"))
        for row in rows:
            domination.add(t=row.t, lower_lhs=row.lower_lhs, lower_rhs=row.lower_rhs,
                           upper_lhs=row.upper_lhs, upper_rhs=row.upper_rhs, holds=row.holds)
        report.tables.append(domination)
        report.checks["domination_holds"] = all(row.holds for row in rows)
        return report

    async def variance_check_command(self, cfg: ExperimentConfig) -> ExperimentReport:
        """Exact Joffe independence checks and the variance inequality ratio"""
        report = self._report(cfg)
        if cfg.params.get("pairwise_q"):
            pairwise = Table("pairwise_independence",
                             ("q", "passed", "max_deviation", "pairs_checked", "not_mutually_independent"))
            for q in cfg.params["pairwise_q"]:
                model = JoffeModel(q=int(q), marginal=UniformTail(1.0))
                res = verify_pairwise_independence(model)
                pairwise.add(q=int(q), passed=res.passed, max_deviation=str(res.max_deviation),
                             pairs_checked=res.pairs_checked,
                             not_mutually_independent=verify_not_mutually_independent(model))
            report.tables.append(pairwise)
            report.checks["pairwise_exact"] = all(row["passed"] for row in pairwise.rows)
            report.checks["not_mutually_independent"] = all(row["not_mutually_independent"] for row in pairwise.rows)

        models = cfg.build_models()
        if not models:
            return report
        report.model_hash = models[0].model_hash()
        transforms = list(cfg.params.get("transforms", ["identity"]))
        ells = [int(ell) for ell in cfg.params.get("ells", [4, 16, 64])]
        offset = int(cfg.params.get("offset", 0))
        stream = RngStream(cfg.seed)
        print(self.messages.campaign_started(cfg.reps, ells, self.threads))

        semaphore = asyncio.Semaphore(self.threads)

        async def worker(model, name: str):
            async with semaphore:
                return await asyncio.to_thread(variance_profile, model, name, offset, ells, cfg.reps, stream)

        arms = [(model, name) for model in models for name in transforms]
        profiles = await asyncio.gather(*(worker(model, name) for model, name in arms))
        table = Table("variance_ratio", ("model", "model_hash", "transform", "ell", "offset", "reps", "ratio",
                                         "std_error", "oracle", "within", "degenerate"))
        for (model, name), profile in zip(arms, profiles):
            for ell, check in profile.items():
                oracle = self._variance_oracle(model, name, offset, ell)
                target = 1.0 if oracle is None else oracle
                table.add(model=model.kind, model_hash=model.model_hash(), transform=name, ell=ell, offset=offset,
                          reps=check.reps, ratio=check.ratio, std_error=check.std_error, oracle=oracle,
                          within=(not check.degenerate) and check.within(target, VARIANCE_SIGMAS),
                          degenerate=check.degenerate)
        report.tables.append(table)
        report.plotdata += [(table.name, "ell", row["ell"], f"{row['model']}/{row['transform']}:{column}", row[column])
                            for row in table.rows for column in ("ratio", "std_error")]
        report.checks["variance_within"] = all(row["within"] for row in table.rows if not row["degenerate"])
        return report

    @staticmethod
    def _variance_oracle(model, name: str, offset: int, ell: int) -> Optional[float]:
        if isinstance(model, JoffeModel):
            try:
                return joffe_variance_ratio(model, name, offset, ell)
            except ValueError:
                return None
        if isinstance(model, MarkovModel):
            return markov_variance_ratio(model, parse_transform(name), ell)
        if isinstance(model, IidModel):
            return 1.0
        return None
