"""Synthetic validation suites for the matching estimator and the regression.

Each suite is a pure function of its arguments and returns a SuiteResult
whose ``lines`` are deterministic (no timings), so reports can be compared
byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lexicon import Lexicon, reference_lexicon
from .matching import MatchConfig, focal_view, conversation_incidence, score_view
from .stats import PanelRow, fixed_effects_ols, mann_whitney_u
from .synth import SynthConfig, generate

SUITES = ("null-calibration", "oracle-agreement", "planted-recovery", "exact-agreement", "regression-recovery")
DEFAULT_SUITES = ("null-calibration", "oracle-agreement", "planted-recovery")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    lines: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    def report(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"
        return "\n".join([head] + [f"    {ln}" for ln in self.lines])


def _rates(rng: np.random.Generator, markers, lo: float, hi: float) -> dict[str, float]:
    return {m: float(rng.uniform(lo, hi)) for m in markers}


def _score(conv, focal, lexicon, config):
    speakers = [u.speaker for u in conv.utterances]
    view = focal_view(conversation_incidence(conv, lexicon), speakers, focal)
    return view, score_view(view, lexicon.marker_names, config, conv.id, focal)


# ---------------------------------------------------------------------------


def oracle_agreement(
    n_cases: int = 100,
    n_permutations: int = 10_000,
    seed: int = 1,
    lexicon: Lexicon | None = None,
    min_focal: int = 5,
    max_focal: int = 50,
    se_bound: float = 4.0,
    z_tol: float = 0.1,
    required: float = 0.95,
) -> SuiteResult:
    """Monte Carlo null against the hypergeometric closed form."""
    lexicon = lexicon or reference_lexicon()
    rng = np.random.default_rng(seed)
    markers = lexicon.marker_names
    passed_cases = 0
    compared = 0
    worst_se = worst_dz = 0.0
    for case in range(n_cases):
        n_focal = int(rng.integers(min_focal, max_focal + 1))
        cfg = SynthConfig(
            n_utterances=2 * n_focal,
            base_rate=_rates(rng, markers, 0.05, 0.95),
            copy_rate=_rates(rng, markers, 0.05, 0.95),
            seed=int(rng.integers(2**32)),
            conversation_id=f"oracle-{case:03d}",
        )
        conv = generate(cfg, lexicon)
        mc_seed = int(rng.integers(2**32))
        _, mc = _score(conv, "B", lexicon, MatchConfig(n_permutations, mc_seed, "monte-carlo"))
        _, an = _score(conv, "B", lexicon, MatchConfig(n_permutations, mc_seed, "analytic"))
        ok = True
        for a, b in zip(mc.per_marker, an.per_marker):
            if a.defined != b.defined:
                ok = False
                continue
            if not a.defined:
                continue
            compared += 1
            se = b.null_std / math.sqrt(n_permutations)
            dev = abs(a.null_mean - b.null_mean) / se
            dz = abs(a.z - b.z)
            worst_se, worst_dz = max(worst_se, dev), max(worst_dz, dz)
            if dev > se_bound or dz > z_tol:
                ok = False
        passed_cases += ok
    rate = passed_cases / n_cases
    res = SuiteResult(
        "oracle-agreement",
        rate >= required,
        [
            f"cases passing: {passed_cases}/{n_cases} ({rate:.2%}; need >= {required:.0%})",
            f"defined markers compared: {compared}",
            f"max |mean_mc - mean_analytic| in standard errors: {worst_se:.3f} (bound {se_bound})",
            f"max |z_mc - z_analytic|: {worst_dz:.4f} (bound {z_tol})",
        ],
        {"pass_rate": rate, "max_se": worst_se, "max_dz": worst_dz, "compared": compared},
    )
    return res


def exact_agreement(
    per_size: int = 4,
    n_permutations: int = 10_000,
    seed: int = 2,
    lexicon: Lexicon | None = None,
    max_focal: int = 7,
    tol: float = 1e-9,
    se_bound: float = 3.0,
) -> SuiteResult:
    """Full enumeration against the closed form, and Monte Carlo against both.

    The fixture set holds ``per_size`` conversations for each focal
    utterance count 2..max_focal.
    """
    lexicon = lexicon or reference_lexicon()
    rng = np.random.default_rng(seed)
    markers = lexicon.marker_names
    worst_exact = worst_se = 0.0
    failures = 0
    compared = 0
    sizes = [n for n in range(2, max_focal + 1) for _ in range(per_size)]
    for n_focal in sizes:
        cfg = SynthConfig(
            n_utterances=2 * n_focal,
            base_rate=_rates(rng, markers, 0.1, 0.9),
            copy_rate=_rates(rng, markers, 0.1, 0.9),
            seed=int(rng.integers(2**32)),
        )
        conv = generate(cfg, lexicon)
        mc_seed = int(rng.integers(2**32))
        _, ex = _score(conv, "B", lexicon, MatchConfig(method="exact"))
        _, an = _score(conv, "B", lexicon, MatchConfig(method="analytic"))
        _, mc = _score(conv, "B", lexicon, MatchConfig(n_permutations, mc_seed, "monte-carlo"))
        for e, a, m in zip(ex.per_marker, an.per_marker, mc.per_marker):
            if e.n_prev == 0:
                continue
            if a.null_mean is None:  # single focal utterance: closed form undefined
                continue
            compared += 1
            d = max(abs(e.null_mean - a.null_mean), abs(e.null_std - a.null_std))
            worst_exact = max(worst_exact, d)
            if d > tol:
                failures += 1
            se = a.null_std / math.sqrt(n_permutations)
            if se == 0:
                if m.null_mean != a.null_mean:
                    failures += 1
                continue
            dev = abs(m.null_mean - a.null_mean) / se
            worst_se = max(worst_se, dev)
            if dev > se_bound:
                failures += 1
    return SuiteResult(
        "exact-agreement",
        failures == 0,
        [
            f"fixture: {len(sizes)} conversations, focal counts 2..{max_focal}; marker nulls compared: {compared}",
            f"max |exact - analytic| (mean, std): {worst_exact:.3e} (tol {tol:g})",
            f"max |mean_mc - exact| in standard errors: {worst_se:.3f} (bound {se_bound})",
            f"failures: {failures}",
        ],
        {"max_exact": worst_exact, "max_se": worst_se, "failures": failures, "compared": compared},
    )


def null_calibration(
    n_conversations: int = 500,
    n_utterances: int = 200,
    n_permutations: int = 10_000,
    seed: int = 3,
    lexicon: Lexicon | None = None,
    scheme: str = "focal",
    mean_tol: float = 0.1,
    tail_target: float = 0.05,
    tail_tol: float = 0.03,
) -> SuiteResult:
    """z-scores under no matching should look standard normal.

    The focal speaker responds with q1 = q0; the other speaker emits at an
    unrelated rate, so any null that borrows the other speaker's
    utterances is visibly biased.
    """
    lexicon = lexicon or reference_lexicon()
    rng = np.random.default_rng(seed)
    markers = lexicon.marker_names
    zs = []
    for i in range(n_conversations):
        q = _rates(rng, markers, 0.1, 0.6)
        cfg = SynthConfig(
            n_utterances=n_utterances,
            base_rate=q,
            copy_rate=q,
            copiers=("B",),
            independent_rate=_rates(rng, markers, 0.1, 0.6),
            seed=int(rng.integers(2**32)),
        )
        conv = generate(cfg, lexicon)
        _, score = _score(conv, "B", lexicon, MatchConfig(n_permutations, int(rng.integers(2**32)), "monte-carlo", scheme))
        zs.extend(s.z for s in score.per_marker if s.defined)
    z = np.asarray(zs)
    mean = float(z.mean()) if z.size else float("nan")
    tail = float(np.mean(np.abs(z) > 1.96)) if z.size else float("nan")
    ok = z.size > 0 and abs(mean) <= mean_tol and abs(tail - tail_target) <= tail_tol
    return SuiteResult(
        "null-calibration" + ("" if scheme == "focal" else f" [{scheme} shuffle]"),
        bool(ok),
        [
            f"marker z-scores: {z.size} from {n_conversations} conversations",
            f"mean z: {mean:+.4f} (need |mean| <= {mean_tol})",
            f"std z: {float(z.std()):.4f}",
            f"fraction |z| > 1.96: {tail:.4f} (need {tail_target - tail_tol:.2f}..{tail_target + tail_tol:.2f})",
        ],
        {"mean": mean, "tail": tail, "n": int(z.size)},
    )


def planted_recovery(
    n_seeds: int = 100,
    n_utterances: int = 200,
    q0: float = 0.3,
    q1: float = 0.9,
    n_permutations: int = 10_000,
    seed: int = 4,
    lexicon: Lexicon | None = None,
    required: float = 0.95,
    alpha: float = 0.01,
) -> SuiteResult:
    """Planted copying gives positive mean z and dominates the no-copy batch."""
    lexicon = lexicon or reference_lexicon()
    rng = np.random.default_rng(seed)
    planted, null = [], []
    for i in range(n_seeds):
        for rate, bucket in ((q1, planted), (q0, null)):
            conv = generate(SynthConfig(n_utterances, base_rate=q0, copy_rate=rate, seed=int(rng.integers(2**32))), lexicon)
            _, score = _score(conv, "B", lexicon, MatchConfig(n_permutations, int(rng.integers(2**32)), "monte-carlo"))
            bucket.append(score.mean_z if score.mean_z is not None else float("nan"))
    planted_pos = sum(1 for v in planted if v > 0)
    frac = planted_pos / n_seeds
    a = [v for v in planted if not math.isnan(v)]
    b = [v for v in null if not math.isnan(v)]
    mw = mann_whitney_u(a, b)
    dominates = mw.u > len(a) * len(b) / 2
    ok = frac >= required and dominates and mw.p_value < alpha
    return SuiteResult(
        "planted-recovery",
        ok,
        [
            f"q1={q1}, q0={q0}, {n_utterances} utterances, {n_seeds} seeds",
            f"mean_z > 0 in {planted_pos}/{n_seeds} ({frac:.0%}; need >= {required:.0%})",
            f"median mean_z planted {np.nanmedian(planted):+.3f} vs q1=q0 {np.nanmedian(null):+.3f}",
            f"Mann-Whitney U={mw.u:.1f} of {len(a) * len(b)}, two-sided p={mw.p_value:.3g} (need < {alpha}, planted larger)",
        ],
        {"fraction_positive": frac, "p_value": mw.p_value, "dominates": dominates, "planted": planted, "null": null},
    )


# ---------------------------------------------------------------------------
# regression recovery

_YEARS = (1976, 1980, 1984, 1988, 1992, 1996)


def synthetic_panel(rng: np.random.Generator, beta: float, debates_per_year: int = 3, noise: float = 1.0) -> list[PanelRow]:
    """Six elections with overlapping candidate pairs (c_k and c_k+1 in year k)."""
    cand_effect = rng.normal(0.0, 1.0, len(_YEARS) + 1)
    year_effect = rng.normal(0.0, 1.0, len(_YEARS))
    rows = []
    for k, year in enumerate(_YEARS):
        for c in (k, k + 1):
            for d in range(debates_per_year):
                z = float(rng.normal())
                y = beta * z + cand_effect[c] + year_effect[k] + float(rng.normal(0.0, noise))
                rows.append(PanelRow(f"c{c}", year, f"{year}-d{d + 1}", z, y))
    return rows


def within_slope(panel: list[PanelRow], factor: str = "candidate") -> float:
    """Slope after demeaning z and p_diff within each level of ``factor``."""
    groups: dict = {}
    for r in panel:
        groups.setdefault(getattr(r, factor), []).append(r)
    num = den = 0.0
    for members in groups.values():
        zbar = sum(r.z for r in members) / len(members)
        ybar = sum(r.p_diff for r in members) / len(members)
        for r in members:
            num += (r.z - zbar) * (r.p_diff - ybar)
            den += (r.z - zbar) ** 2
    return num / den


def regression_recovery(
    n_reps: int = 1000,
    beta: float = 0.8,
    seed: int = 5,
    coverage_target: float = 0.95,
    coverage_tol: float = 0.03,
    fwl_tol: float = 1e-8,
) -> SuiteResult:
    rng = np.random.default_rng(seed)
    covered = 0
    worst_fwl = 0.0
    for _ in range(n_reps):
        panel = synthetic_panel(rng, beta)
        both = fixed_effects_ols(panel, ("candidate", "election_year"))
        lo, hi = both.conf_int("z")
        covered += lo <= beta <= hi
        cand = fixed_effects_ols(panel, ("candidate",))
        worst_fwl = max(worst_fwl, abs(cand.coef("z") - within_slope(panel)))
    coverage = covered / n_reps
    ok = abs(coverage - coverage_target) <= coverage_tol and worst_fwl <= fwl_tol
    return SuiteResult(
        "regression-recovery",
        ok,
        [
            f"95% CI coverage of beta={beta}: {coverage:.3f} over {n_reps} panels (need {coverage_target - coverage_tol:.2f}..{coverage_target + coverage_tol:.2f})",
            f"max |LSDV - within-transform slope|: {worst_fwl:.2e} (tol {fwl_tol:g})",
        ],
        {"coverage": coverage, "max_fwl": worst_fwl},
    )


def run_suites(names=DEFAULT_SUITES, n_permutations: int = 10_000, seed: int = 0, inject_fault: bool = False,
               lexicon: Lexicon | None = None, scale: float = 1.0) -> list[SuiteResult]:
    """Run the named suites; ``scale`` shrinks case counts for quick checks."""
    lexicon = lexicon or reference_lexicon()

    def k(n):
        return max(1, int(round(n * scale)))

    out = []
    for name in names:
        if name == "null-calibration":
            out.append(null_calibration(k(500), n_permutations=n_permutations, seed=seed + 3, lexicon=lexicon,
                                        scheme="pooled" if inject_fault else "focal"))
        elif name == "oracle-agreement":
            out.append(oracle_agreement(k(100), n_permutations, seed + 1, lexicon))
        elif name == "planted-recovery":
            out.append(planted_recovery(k(100), n_permutations=n_permutations, seed=seed + 4, lexicon=lexicon))
        elif name == "exact-agreement":
            out.append(exact_agreement(k(4), n_permutations, seed + 2, lexicon))
        elif name == "regression-recovery":
            out.append(regression_recovery(k(1000), seed=seed + 5))
        else:
            raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    return out
