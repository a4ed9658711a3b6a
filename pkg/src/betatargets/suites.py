"""Check suites run by the command line and the report writer.

Each suite takes a validated plan and returns named checks (pass, fail or
flagged), verdicts and data tables.  Flagged checks record a hypothesis
that does not hold; they never count as failures.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy

from . import beta_core, covering, divergence, measure, series
from .beta_core import Beta, BetaVector
from .dimension import DimensionFunction
from .hitset import LipschitzMap
from .errors import BetaTargetsError

W2STAR_T = ("0.5", "1.0", "log(3)", "1.2", "2.0")
W2STAR_F = ("r^0.4", "r^0.665", "r^0.9", "r^1.0", "r^1.2", "r^1.2*log^(-1/2)")


@dataclass
class CheckResult:
    name: str
    status: str
    measured: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "measured": self.measured}


@dataclass
class SuiteResult:
    checks: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def check(self, name: str, ok: bool, **measured) -> None:
        self.checks.append(CheckResult(name, "pass" if ok else "fail", _plain(measured)))

    def flag(self, name: str, **measured) -> None:
        self.checks.append(CheckResult(name, "flagged", _plain(measured)))

    def extend(self, other: "SuiteResult", prefix: str) -> None:
        for c in other.checks:
            self.checks.append(CheckResult(f"{prefix}.{c.name}", c.status, c.measured))
        self.verdicts.update({f"{prefix}.{k}": v for k, v in other.verdicts.items()})
        self.tables.update({f"{prefix}.{k}": v for k, v in other.tables.items()})


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)


def _maps(plan, d: int) -> tuple:
    specs = plan.maps if plan.maps else [0.5] * d
    return tuple(LipschitzMap.from_spec(spec) for spec in specs)


def suite_classify(plan) -> SuiteResult:
    res = SuiteResult()
    betas = BetaVector.parse(plan.betas, plan.precision_bits)
    f = DimensionFunction.parse(plan.f)
    if plan.target == "multiplicative":
        v = series.multiplicative_verdict(betas, plan.psi[0], f)
    else:
        v = series.rectangle_verdict(betas, plan.psi, f)
    res.verdicts["classify"] = v.to_dict()
    if v.hypotheses_hold:
        res.check("hypotheses", True, conclusion=v.conclusion)
    else:
        res.flag("hypotheses", reason=v.reason, conclusion=v.conclusion)
    if plan.target == "rectangle":
        rows = []
        lo, hi = plan.n_range
        for n in range(max(lo, series.min_level_for_domain(betas)), hi + 1):
            try:
                sb = series.sn_breakdown(betas, plan.psi, f, n)
            except BetaTargetsError:
                continue
            log_term = sb.log_sn + n * sum(betas.logs())
            row = {"n": n, "log_tau_star": sb.candidates[sb.argmin].log_tau, "log_s_n": sb.log_sn,
                   "log_term": log_term}
            if v.series is not None:
                row["log_term_asymptotic"] = v.series.log_term(n)
            rows.append(row)
        res.tables["series_terms"] = rows
    return res


def suite_w2star(plan) -> SuiteResult:
    res = SuiteResult()
    f = DimensionFunction.parse(plan.f)
    t = plan.t
    v = series.w2star_verdict(t, f)
    res.verdicts["w2star"] = v.to_dict()
    betas, Psi = series.w2star_rectangle_inputs(t)
    rv = series.rectangle_verdict(betas, Psi, f)
    res.verdicts["rectangle"] = rv.to_dict()
    if v.hypotheses_hold and rv.hypotheses_hold:
        res.check("agrees_with_rectangle", v.conclusion == rv.conclusion,
                  w2star=v.conclusion, rectangle=rv.conclusion)
    else:
        res.flag("agrees_with_rectangle", w2star=v.conclusion, rectangle=rv.conclusion,
                 reason=v.reason or rv.reason)
    if plan.grid:
        rows, disagreements = [], 0
        for ts in W2STAR_T:
            for fs in W2STAR_F:
                ff = DimensionFunction.parse(fs)
                a = series.w2star_verdict(ts, ff)
                b = series.rectangle_verdict(*series.w2star_rectangle_inputs(ts), ff)
                both = a.hypotheses_hold and b.hypotheses_hold
                disagreements += both and a.conclusion != b.conclusion
                rows.append({"t": ts, "f": fs, "w2star": a.conclusion, "rectangle": b.conclusion,
                             "both_hypotheses": both})
        res.tables["w2star_grid"] = rows
        res.check("grid_agreement", disagreements == 0, disagreements=disagreements, cells=len(rows))
    return res


def suite_enumerate(plan) -> SuiteResult:
    res = SuiteResult()
    beta = Beta.parse(plan.betas[0], plan.precision_bits)
    n = plan.n_range[1]
    cyls = beta_core.enumerate_cylinders(beta, n)
    rows = [c.as_row() for c in cyls]
    res.tables["cylinders"] = [{"word": r["word"], "left": float(r["left"]), "length": float(r["length"]),
                                "is_full": bool(r["is_full"])} for r in rows]
    counts = beta_core.count_cylinders(beta, n)[-1]
    res.check("count_matches_recursion", counts[0] == len(cyls) and
              counts[1] == sum(1 for c in cyls if c.is_full), enumerated=len(cyls), counted=counts[0])
    total = float(sum(c.length for c in cyls))
    res.check("lengths_sum_to_one", abs(total - 1) < 1e-12, total=total)
    return res


def suite_verify_core(plan) -> SuiteResult:
    res = SuiteResult()
    for b in plan.betas:
        beta = Beta.parse(b, plan.precision_bits)
        n_max = plan.n_range[1]
        counts = beta_core.count_cylinders(beta, n_max)
        rows, renyi_bad, li_bad, concat_bad = [], 0, 0, 0
        for n, (sig, lam) in enumerate(counts, start=1):
            lo, hi = beta_core.renyi_bounds(beta, n)
            li = beta_core.li_lower_bound(beta, n)
            renyi_bad += not (lo <= sig * (1 + 1e-12) and sig <= hi * (1 + 1e-12))
            li_bad += not lam >= li * (1 - 1e-12)
            if beta.is_integer:
                li_bad += lam != int(beta.expr) ** n
            rows.append({"beta": str(beta), "n": n, "sigma": sig, "lambda": lam, "renyi_lo": lo, "renyi_hi": hi,
                         "li_lower": li})
        for m in range(1, n_max):
            for k in range(1, n_max - m + 1):
                sm, lm = counts[m - 1]
                sk, lk = counts[k - 1]
                smk, lmk = counts[m + k - 1]
                concat_bad += not (smk <= sm * sk and lmk >= lm * lk)
        res.tables[f"counts_{str(b).replace('.', '_')}"] = rows
        res.check(f"renyi[{beta}]", renyi_bad == 0, violations=renyi_bad, n_max=n_max)
        res.check(f"li[{beta}]", li_bad == 0, violations=li_bad, n_max=n_max)
        res.check(f"concatenation[{beta}]", concat_bad == 0, violations=concat_bad)
        cov = beta_core.full_cover_check(beta, 1, min(n_max, 14))
        res.check(f"full_cover[{beta}]", cov.passed, uncovered=cov.uncovered, geometric_bound=cov.bound,
                  geometric_bound_holds=cov.geometric_bound_holds)
    return res


def _ball_bound_job(args):
    betas, psi, f_text, maps, n, samples, seed = args
    f = DimensionFunction.parse(f_text)
    fr = divergence.frame(n, betas, psi, f)
    z = divergence.default_center(fr, betas, maps)
    fam = divergence.build_rect_family(divergence.y_grid(fr, z)[0], fr, betas, psi, maps)
    rep = divergence.ball_bound(fam, f, samples, np.random.default_rng(seed))
    return n, fam.check(), rep.to_dict()


def suite_verify_divergence(plan) -> SuiteResult:
    res = SuiteResult()
    betas = BetaVector.parse(plan.betas, plan.precision_bits)
    f = DimensionFunction.parse(plan.f)
    lo_n = max(series.min_level_for_domain(betas), 2)
    sweep = divergence.sweep_frames(betas, plan.psi, f, lo_n, plan.frame_max)
    rows = []
    for fr in sweep.frames:
        row = {"n": fr.n, "in_P": fr.in_P, "m": fr.m, "k_j": fr.kj,
               "log_omega": None if fr.log_omega is None else float(fr.log_omega),
               "checks_pass": fr.m is not None and divergence.frame_checks_pass(fr)}
        rows.append(row)
    res.tables["frames"] = rows
    inP = [fr for fr in sweep.frames if fr.in_P]
    worst = max((fr.checks["identity_rel_err"] for fr in inP if fr.m is not None), default=0.0)
    res.check("identity", worst <= 1e-9, worst_rel_err=worst, frames=len(inP))
    res.check("increase_chain", all(fr.checks.get("increase_chain_monotone") for fr in inP if fr.m is not None))
    res.check("omega_properties_past_threshold", sweep.threshold is not None and sweep.verified > 0,
              threshold=sweep.threshold, n_in_P=sweep.p_count, verified=sweep.verified)
    res.tables["permutations"] = divergence.permutation_report(betas, plan.psi, f, lo_n, min(plan.frame_max, 60))
    if betas.all_integer:
        maps = _maps(plan, betas.d)
        lo, hi = plan.n_range
        jobs = [(plan.betas, plan.psi, plan.f, maps, n, plan.samples, plan.seed + n) for n in range(lo, hi + 1)]
        if plan.jobs > 1:
            with ProcessPoolExecutor(max_workers=plan.jobs) as ex:
                out = list(ex.map(_ball_bound_job, jobs))
        else:
            out = [_ball_bound_job(j) for j in jobs]
        bb_rows = []
        for n, fam_check, rep in out:
            bb_rows.append({"n": n, "sup_ratio": rep["sup_ratio"], "omega": rep["omega"],
                            "count": fam_check["count"], "count_ratio": fam_check["count_ratio"],
                            **{f"samples_{k}": v for k, v in rep["regimes"].items()}})
        res.tables["ball_bound"] = bb_rows
        sups = [r["sup_ratio"] for r in bb_rows]
        spread = max(sups) / min(sups) if sups and min(sups) > 0 else math.inf
        regimes_ok = all(r.get("samples_case1", 0) and r.get("samples_case2", 0) and r.get("samples_case3", 0)
                         for r in bb_rows)
        res.check("ball_bound_band", spread < 10 and regimes_ok, spread=spread, sups=sups)
        res.check("rect_count_band", all(0.25 <= r["count_ratio"] <= 4 for r in bb_rows),
                  ratios=[r["count_ratio"] for r in bb_rows])
    else:
        res.flag("rect_family", reason="non-integer bases: rectangle family not constructed")
    return res


def suite_measure(plan) -> SuiteResult:
    res = SuiteResult()
    betas = BetaVector.parse(plan.betas, plan.precision_bits)
    maps = _maps(plan, betas.d)
    N, M = plan.n_range
    spec = measure.TailSpec(betas, tuple(plan.psi), maps, N, M, plan.target if plan.target == "multiplicative"
                            else "weighted", plan.full_only)
    est = measure.mc_lebesgue(spec, plan.samples, plan.seed)
    res.verdicts["mc_lebesgue"] = est.to_dict()
    rows = [{"quantity": "mc_estimate", "value": est.estimate, "radius": est.radius}]
    exact_ok = betas.d == 1 and betas.all_integer and maps[0].kind == "constant"
    # the exact oracle needs the constant as written, not its mpf value
    first = plan.maps[0] if plan.maps else "1/2"
    h_text = str(first.get("value", first.get("a", 0)) if isinstance(first, dict) else first)
    if exact_ok:
        try:
            psi = series.ApproxFunction.parse(plan.psi[0])
            psi_frac = lambda n: Fraction(str(sympy.nsimplify(psi.expr.subs(series.n_sym, n))))
            ex = measure.exact_union_measure(int(betas[0].expr), h_text, psi_frac, N, M)
        except (BetaTargetsError, ValueError, TypeError) as err:
            res.flag("exact_oracle", reason=str(err))
        else:
            exf = float(ex)
            rows.append({"quantity": "exact_union", "value": exf, "radius": 0.0})
            res.check("mc_within_radius", abs(est.estimate - exf) <= est.radius, exact=exf,
                      estimate=est.estimate, radius=est.radius)
            ce = measure.chung_erdos_lattice(int(betas[0].expr), h_text, psi_frac, N, M, ())
            rows.append({"quantity": "chung_erdos", "value": float(ce["bound"]), "radius": 0.0})
            res.check("chung_erdos_below_exact", ce["bound"] <= ex, bound=float(ce["bound"]), exact=exf)
    else:
        res.flag("exact_oracle", reason="exact lattice measure needs d=1, integer base, constant map")
    res.tables["measure"] = rows
    return res


def suite_cover_scaling(plan) -> SuiteResult:
    res = SuiteResult()
    a = tuple(plan.a)
    slope, vols = covering.scaling_slope(plan.deltas, plan.s, a)
    res.tables["hyperboloid"] = [{"delta": d, "s_volume": v} for d, v in zip(plan.deltas, vols)]
    res.check("slope", abs(slope - (2 - plan.s)) <= 0.1 if len(a) == 2 else True, slope=slope,
              expected=2 - plan.s if len(a) == 2 else None)
    rng = np.random.default_rng(plan.seed)
    escapes = 0
    for delta in plan.deltas:
        cover = covering.hyperboloid_cover(a, delta, plan.s)
        pts = covering.sample_hyperboloid(a, delta, plan.samples, rng)
        escapes += int((~cover.covers(pts)).sum())
    res.check("coverage", escapes == 0, escapes=escapes, samples_per_delta=plan.samples)
    return res


SUITES = {
    "classify": suite_classify,
    "w2star": suite_w2star,
    "enumerate": suite_enumerate,
    "verify-core": suite_verify_core,
    "verify-divergence": suite_verify_divergence,
    "measure": suite_measure,
    "cover-scaling": suite_cover_scaling,
}
