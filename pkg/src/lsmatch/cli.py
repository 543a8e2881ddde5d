"""Command-line front end.

    lsmatch score debates/*.json --roles roles.json --out out/
    lsmatch study1 debates/*.json --polls gallup.csv --schedule 2012.json --out out/
    lsmatch temporal debates/*.json --polls gallup.csv --schedule 2012.json
    lsmatch validate --inject-fault
    lsmatch synth --utterances 200 --q0 0.3 --q1 0.9 --out corpus/   # truth in corpus/truth/
    lsmatch replay out/score_scores.tsv

Every output carries the settings that produced it (a ``# manifest:`` line
for tables, a ``manifest`` key for JSON); ``replay`` reruns from it.  The
worker pool size comes from LSMATCH_WORKERS and never changes the output.

Exit status: 0 success, 1 validation suite failure, 2 usage error,
3 configuration error (lexicon), 4 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, InsufficientDataError, LsmError, UndefinedError, ValidationError
from .lexicon import FORMATS as LEXICON_FORMATS
from .lexicon import load_lexicon_path, reference_lexicon
from .matching import METHOD_ALIASES, METHODS, MatchConfig, lsm_score, responder_turn_lsm
from .polls import BOUNDARY_POLICIES, load_polls, load_schedule, poll_diff
from .stats import (
    PanelRow,
    fixed_effects_ols,
    group_by_matching,
    mann_whitney_u,
    pearson_r,
    simple_regression_band,
    t_test,
)
from .synth import TOPOLOGIES, SynthConfig, generate, truth_document
from .temporal import DEFAULT_PARTS, grouped_curves, prefix_curve
from .transcript import load_transcript, serialize_transcript
from .validation import DEFAULT_SUITES, SUITES, run_suites

log = logging.getLogger("lsmatch")

EXIT_OK, EXIT_SUITE_FAILED, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3, 4
WORKERS_ENV = "LSMATCH_WORKERS"
MANIFEST_PREFIX = "# manifest: "
FE_MODELS = (("none", ()), ("candidate", ("candidate",)), ("candidate+election_year", ("candidate", "election_year")))
BAND_POINTS = 101

# Namespace attributes recorded at the top level of the manifest; everything
# else a command defines goes under "flags".
_COMMON = ("inputs", "lexicon", "lexicon_format", "permutations", "seed", "method", "parts", "out", "format")


class UsageError(LsmError):
    pass


# ---------------------------------------------------------------------------
# manifest


def _digest(path) -> str | None:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


def _file_args(ns) -> list[str]:
    paths = list(ns.inputs or [])
    for name in ("lexicon", "polls", "roles"):
        if getattr(ns, name, None):
            paths.append(getattr(ns, name))
    paths += list(getattr(ns, "schedule", None) or [])
    return paths


def build_manifest(ns: argparse.Namespace) -> dict:
    """The run settings as a JSON-ready dict (worker count excluded)."""
    values = {k: v for k, v in vars(ns).items() if k not in ("func", "command")}
    manifest = {"tool": "lsmatch", "version": __version__, "command": ns.command}
    for key in _COMMON:
        manifest[key] = values.pop(key, None)
    manifest["flags"] = dict(sorted(values.items()))
    manifest["input_sha256"] = {p: _digest(p) for p in _file_args(ns)}
    return manifest


def namespace_from_manifest(manifest: dict) -> argparse.Namespace:
    if manifest.get("tool") != "lsmatch" or manifest.get("command") not in COMMANDS:
        raise ValidationError("not an lsmatch manifest")
    ns = argparse.Namespace(command=manifest["command"], func=COMMANDS[manifest["command"]])
    for key in _COMMON:
        setattr(ns, key, manifest.get(key))
    for key, val in manifest.get("flags", {}).items():
        setattr(ns, key, val)
    return ns


def read_manifest(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if "manifest" in doc:
            return doc["manifest"]
        if "manifest" in doc.get("metadata", {}):
            return doc["metadata"]["manifest"]
    else:
        for line in text.splitlines():
            if line.startswith(MANIFEST_PREFIX):
                return json.loads(line[len(MANIFEST_PREFIX):])
    raise ValidationError(f"{path}: no embedded manifest")


# ---------------------------------------------------------------------------
# output


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _tsv(columns, rows) -> str:
    out = ["\t".join(columns)]
    out += ["\t".join(_cell(r.get(c)) for c in columns) for r in rows]
    return "\n".join(out) + "\n"


def _dumps(doc) -> str:
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def render(manifest: dict, tables, fmt: str, payload: dict | None = None) -> dict[str, str]:
    """Map output file names to contents.

    ``tables`` is a list of (name, columns, rows).  The stdout rendering is
    keyed by the empty name.
    """
    command = manifest["command"]
    header = MANIFEST_PREFIX + json.dumps(_jsonable(manifest), sort_keys=True) + "\n"
    if fmt == "record":
        doc = {"manifest": manifest}
        doc.update(payload or {"tables": {name: rows for name, _, rows in tables}})
        text = _dumps(doc)
        return {f"{command}.json": text, "": text}
    files = {f"{command}_{name}.tsv": header + _tsv(cols, rows) for name, cols, rows in tables}
    files[""] = header + "".join(f"## {name}\n" + _tsv(cols, rows) for name, cols, rows in tables)
    return files


def emit(manifest: dict, tables, fmt: str, dest: str | None, payload: dict | None = None) -> None:
    files = render(manifest, tables, fmt, payload)
    stdout = files.pop("")
    if dest is None:
        sys.stdout.write(stdout)
        return
    os.makedirs(dest, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(dest, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        log.info("wrote %s", os.path.join(dest, name))


# ---------------------------------------------------------------------------
# loading


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigurationError(f"{WORKERS_ENV} must be at least 1")
    return n


def get_lexicon(ns):
    if not ns.lexicon:
        return reference_lexicon()
    try:
        return load_lexicon_path(ns.lexicon, ns.lexicon_format)
    except OSError as exc:
        raise ConfigurationError(f"cannot read lexicon {ns.lexicon}: {exc.strerror or exc}") from None
    except LsmError as exc:
        raise ConfigurationError(f"lexicon {ns.lexicon}: {exc}") from None


def _roles(ns):
    if not getattr(ns, "roles", None):
        return None
    with open(ns.roles, encoding="utf-8") as fh:
        try:
            roles = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{ns.roles}: bad roles file: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(roles, dict):
        raise ValidationError(f"{ns.roles}: roles file must map speaker names to roles")
    return roles


def load_conversations(ns):
    if not ns.inputs:
        raise UsageError("no transcripts given")
    roles = _roles(ns)
    convs = [load_transcript(p, ns.transcript_format, roles=roles, exclude=ns.exclude) for p in ns.inputs]
    seen = {}
    for path, c in zip(ns.inputs, convs):
        if c.id in seen:
            raise ValidationError(f"conversation id {c.id!r} appears in both {seen[c.id]} and {path}")
        seen[c.id] = path
    return sorted(convs, key=lambda c: c.id)


def focal_speakers(conv, ns) -> list[str]:
    if ns.speaker:
        return sorted(s for s in ns.speaker if s in conv.speakers)
    if ns.focal == "all":
        return sorted(conv.speakers)
    found = conv.speakers_with_role("candidate")
    if not found:
        log.warning("%s: no speaker has role 'candidate'; scoring every speaker", conv.id)
        return sorted(conv.speakers)
    return sorted(found)


def match_config(ns) -> MatchConfig:
    return MatchConfig(n_permutations=ns.permutations, seed=ns.seed, method=ns.method)


# ---------------------------------------------------------------------------
# parallel map over (conversation, speaker) tasks


_STATE: dict = {}


def _init_worker(state):
    _STATE.update(state)


def _run_task(task):
    kind, conv, speaker = task
    lexicon, config = _STATE["lexicon"], _STATE["config"]
    if kind == "score":
        return lsm_score(conv, speaker, lexicon, config)
    return prefix_curve(conv, speaker, lexicon, _STATE["parts"], config)


def run_tasks(tasks, lexicon, config, parts=DEFAULT_PARTS):
    """Evaluate tasks in order; results do not depend on the pool size."""
    state = {"lexicon": lexicon, "config": config, "parts": parts}
    n = min(worker_count(), len(tasks))
    if n <= 1:
        _init_worker(state)
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=n, initializer=_init_worker, initargs=(state,)) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * n))))


# ---------------------------------------------------------------------------
# commands

SCORE_COLUMNS = ("conversation", "speaker", "row", "marker", "n_prev", "n_joint", "p_obs", "null_mean", "null_std", "z", "defined")


def score_rows(scores):
    rows = []
    for s in scores:
        for m in s.per_marker:
            rows.append({"conversation": s.conversation_id, "speaker": s.focal_speaker, "row": "marker", **vars(m)})
        rows.append({
            "conversation": s.conversation_id, "speaker": s.focal_speaker, "row": "summary", "marker": "mean",
            "z": s.mean_z, "defined": s.mean_z is not None,
        })
    return rows


def _score_all(ns, convs, lexicon):
    tasks = [("score", c, s) for c in convs for s in focal_speakers(c, ns)]
    if not tasks:
        raise ValidationError("no focal speakers to score")
    return run_tasks(tasks, lexicon, match_config(ns))


def cmd_score(ns, manifest, dest):
    lexicon = get_lexicon(ns)
    scores = _score_all(ns, load_conversations(ns), lexicon)
    payload = {"scores": [s.to_record() for s in scores]}
    emit(manifest, [("scores", SCORE_COLUMNS, score_rows(scores))], ns.format, dest, payload)
    return EXIT_OK


def _schedules(ns):
    out = {}
    for path in ns.schedule:
        with open(path, "rb") as fh:
            sched = load_schedule(fh)
        for d in sched.debates:
            if d.id in out:
                raise ValidationError(f"debate id {d.id!r} listed in more than one schedule")
            out[d.id] = sched
    return out


def _poll_diffs(ns, keys):
    """PollWindowDiff per (debate, candidate) key; unjoinable keys are skipped."""
    with open(ns.polls, "rb") as fh:
        polls = load_polls(fh)
    schedules = _schedules(ns)
    diffs = {}
    for debate, cand in keys:
        sched = schedules.get(debate)
        if sched is None:
            log.warning("%s: no schedule lists this debate; skipped", debate)
            continue
        try:
            diffs[(debate, cand)] = (poll_diff(polls, sched, debate, cand, ns.boundary), sched.election_year)
        except InsufficientDataError as exc:
            log.warning("%s/%s: %s; skipped", debate, cand, exc)
    return diffs


def _fmt_p(x):
    return None if x is None else float(x)


def cmd_study1(ns, manifest, dest):
    lexicon = get_lexicon(ns)
    convs = load_conversations(ns)
    by_id = {c.id: c for c in convs}
    scores = _score_all(ns, convs, lexicon)
    diffs = _poll_diffs(ns, [(s.conversation_id, s.focal_speaker) for s in scores])

    panel_rows, panel = [], []
    joined_scores, joined_diffs = [], []
    for s in scores:
        key = (s.conversation_id, s.focal_speaker)
        if key not in diffs:
            continue
        d, year = diffs[key]
        if s.mean_z is None:
            log.warning("%s/%s: no defined markers; left out of the panel", *key)
            continue
        joined_scores.append(s)
        joined_diffs.append(d)
        group = "matcher" if s.mean_z > 0 else "non-matcher" if s.mean_z < 0 else "excluded"
        panel.append(PanelRow(s.focal_speaker, year, s.conversation_id, s.mean_z, d.p_diff))
        panel_rows.append({
            "debate": s.conversation_id, "candidate": s.focal_speaker, "election_year": year, "mean_z": s.mean_z,
            "p_diff": d.p_diff, "median_before": d.median_before, "median_after": d.median_after,
            "n_before": d.n_before, "n_after": d.n_after, "group": group,
        })
    if not panel:
        raise InsufficientDataError("no scored (debate, candidate) pair joins a poll difference")

    groups = group_by_matching(joined_scores, joined_diffs)
    group_rows = [
        {"group": g.name, "n": g.n, "mean": g.mean, "median": g.median, "ci_low": g.ci_low, "ci_high": g.ci_high}
        for g in (groups.matchers, groups.non_matchers)
    ]
    for g in (groups.matchers, groups.non_matchers):
        if g.empty:
            log.warning("%s sample is empty", g.name)

    a, b = groups.matchers.values, groups.non_matchers.values
    test_rows = []
    if a and b:
        mw = mann_whitney_u(a, b)
        test_rows.append({"test": "mann-whitney", "statistic": mw.u, "p_value": mw.p_value, "method": mw.method})
    else:
        log.warning("Mann-Whitney test skipped: a group is empty")
    try:
        tt = t_test(a, b, equal_var=ns.pooled_variance)
        test_rows.append({
            "test": "t-test", "statistic": tt.t, "df": tt.df, "p_value": tt.p_value, "eta_squared": tt.eta_squared,
            "method": "pooled" if tt.equal_var else "welch",
        })
    except (ValidationError, UndefinedError) as exc:
        log.warning("t-test skipped: %s", exc)

    z = np.array([r.z for r in panel])
    y = np.array([r.p_diff for r in panel])
    band_rows = []
    try:
        grid = np.linspace(z.min(), z.max(), BAND_POINTS)
        band = simple_regression_band(z, y, 0.95, at=grid)
        band_rows = [
            {"z": float(x), "fit": float(f), "ci_low": float(lo), "ci_high": float(hi)}
            for x, f, lo, hi in zip(band.x, band.fit, band.lower, band.upper)
        ]
    except (ValidationError, UndefinedError) as exc:
        log.warning("regression band skipped: %s", exc)

    reg_rows = []
    for model, factors in FE_MODELS:
        try:
            res = fixed_effects_ols(panel, factors)
        except (ValidationError, UndefinedError) as exc:
            log.warning("fixed-effects model %r skipped: %s", model, exc)
            continue
        for i, term in enumerate(res.names):
            reg_rows.append({
                "model": model, "term": term, "estimate": res.coefficients[i], "std_error": res.std_errors[i],
                "t": res.t_stats[i], "p_value": res.p_values[i], "r_squared": res.r_squared,
                "adj_r_squared": res.adjusted_r_squared, "residual_df": res.residual_df, "n": res.n_obs,
            })

    zs, tl = [], []
    for s in scores:
        if s.mean_z is None:
            continue
        try:
            tl.append(responder_turn_lsm(by_id[s.conversation_id], s.focal_speaker, lexicon))
        except UndefinedError:
            continue
        zs.append(s.mean_z)
    corr_rows = []
    try:
        corr_rows.append({"measure_a": "mean_z", "measure_b": "turn_lsm", "r": pearson_r(zs, tl), "n": len(zs)})
    except (ValidationError, UndefinedError) as exc:
        log.warning("turn-LSM correlation skipped: %s", exc)

    tables = [
        ("panel", ("debate", "candidate", "election_year", "mean_z", "p_diff", "median_before", "median_after",
                   "n_before", "n_after", "group"), panel_rows),
        ("groups", ("group", "n", "mean", "median", "ci_low", "ci_high"), group_rows),
        ("tests", ("test", "statistic", "df", "p_value", "eta_squared", "method"), test_rows),
        ("fig1", ("z", "fit", "ci_low", "ci_high"), band_rows),
        ("regressions", ("model", "term", "estimate", "std_error", "t", "p_value", "r_squared", "adj_r_squared",
                         "residual_df", "n"), reg_rows),
        ("correlation", ("measure_a", "measure_b", "r", "n"), corr_rows),
    ]
    emit(manifest, tables, ns.format, dest)
    return EXIT_OK


def cmd_temporal(ns, manifest, dest):
    lexicon = get_lexicon(ns)
    convs = []
    for c in load_conversations(ns):
        if len(c) < ns.parts:
            log.warning("%s: %d utterances is fewer than %d parts; skipped", c.id, len(c), ns.parts)
        else:
            convs.append(c)
    tasks = [("curve", c, s) for c in convs for s in focal_speakers(c, ns)]
    if not tasks:
        raise InsufficientDataError(f"no conversation has at least {ns.parts} utterances")
    profiles = run_tasks(tasks, lexicon, match_config(ns), ns.parts)
    diffs = _poll_diffs(ns, [(p.conversation_id, p.focal_speaker) for p in profiles])
    points = grouped_curves(profiles, [d for d, _ in diffs.values()])
    curve_rows = [vars(p) for p in points]
    profile_rows = [
        {"conversation": p.conversation_id, "speaker": p.focal_speaker, "prefix_index": i + 1, "mean_z": v}
        for p in profiles
        for i, v in enumerate(p.curve)
    ]
    tables = [
        ("curves", ("group", "prefix_index", "mean", "ci_low", "ci_high", "n"), curve_rows),
        ("profiles", ("conversation", "speaker", "prefix_index", "mean_z"), profile_rows),
    ]
    emit(manifest, tables, ns.format, dest)
    return EXIT_OK


def cmd_validate(ns, manifest, dest):
    lexicon = get_lexicon(ns) if ns.lexicon else None
    results = run_suites(ns.suite or DEFAULT_SUITES, ns.permutations, ns.seed, ns.inject_fault, lexicon, ns.scale)
    for r in results:
        print(r.report(), file=sys.stderr)
    rows = []
    for r in results:
        rows.append({"suite": r.name, "passed": r.passed, "metric": "", "value": None})
        rows += [{"suite": r.name, "passed": r.passed, "metric": k, "value": v} for k, v in sorted(r.metrics.items())]
    payload = {"suites": [{"suite": r.name, "passed": r.passed, "lines": r.lines, "metrics": r.metrics} for r in results]}
    emit(manifest, [("suites", ("suite", "passed", "metric", "value"), rows)], ns.format, dest, payload)
    return EXIT_OK if all(r.passed for r in results) else EXIT_SUITE_FAILED


def cmd_synth(ns, manifest, dest):
    if dest is None:
        raise UsageError("synth writes files; give --out DIR")
    lexicon = get_lexicon(ns)
    truth_dir = os.path.join(dest, "truth")
    os.makedirs(truth_dir, exist_ok=True)
    for k in range(ns.count):
        cid = ns.id if ns.count == 1 else f"{ns.id}-{k:03d}"
        cfg = SynthConfig(
            n_utterances=ns.utterances,
            base_rate=ns.q0,
            copy_rate=ns.q1,
            speakers=tuple(ns.speakers.split(",")),
            copiers=None if ns.copiers is None else tuple(ns.copiers.split(",")),
            independent_rate=ns.independent_rate,
            ramp=None if ns.ramp is None else tuple(ns.ramp),
            topology=ns.topology,
            seed=ns.seed + k,
            conversation_id=cid,
        )
        conv = generate(cfg, lexicon)
        conv.metadata["manifest"] = _jsonable(manifest)
        truth = json.loads(truth_document(conv))
        truth["manifest"] = manifest
        for path, text in ((os.path.join(dest, f"{cid}.json"), serialize_transcript(conv)),
                           (os.path.join(truth_dir, f"{cid}.json"), _dumps(truth))):
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    log.info("wrote %d synthetic transcript(s) to %s", ns.count, dest)
    return EXIT_OK


def cmd_replay(ns, manifest, dest):
    """Rerun the command recorded in an output file."""
    recorded = read_manifest(ns.source)
    inner = namespace_from_manifest(recorded)
    for path, digest in (recorded.get("input_sha256") or {}).items():
        now = _digest(path)
        if now != digest:
            log.warning("%s: contents differ from the recorded run", path)
    return inner.func(inner, recorded, ns.out if ns.out is not None else recorded.get("out"))


COMMANDS = {
    "score": cmd_score,
    "study1": cmd_study1,
    "temporal": cmd_temporal,
    "validate": cmd_validate,
    "synth": cmd_synth,
    "replay": cmd_replay,
}


# ---------------------------------------------------------------------------
# argument parsing


def _method(value: str) -> str:
    if value in METHODS or value in METHOD_ALIASES:
        return METHOD_ALIASES.get(value, value)
    raise argparse.ArgumentTypeError("choose from mc, analytic, exact")


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _rate(value: str) -> float:
    x = float(value)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return x


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lexicon", metavar="PATH", help="lexicon file (default: bundled reference lexicon)")
    common.add_argument("--lexicon-format", choices=LEXICON_FORMATS, default=None,
                        help="lexicon file layout (default: by extension, .dic means LIWC)")
    common.add_argument("--permutations", type=_positive, default=10_000, metavar="N",
                        help="Monte Carlo replicates per speaker (default 10000)")
    common.add_argument("--seed", type=int, default=0, metavar="N", help="random seed (default 0)")
    common.add_argument("--method", type=_method, default="monte-carlo", metavar="{mc,analytic,exact}",
                        help="null distribution (default mc)")
    common.add_argument("--parts", type=_positive, default=DEFAULT_PARTS, metavar="N",
                        help="time-ordered parts for temporal curves (default 40)")
    common.add_argument("--out", metavar="DIR", help="write files here instead of stdout")
    common.add_argument("--format", choices=("table", "record"), default="table",
                        help="tab-separated tables or one JSON record (default table)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    corpus = argparse.ArgumentParser(add_help=False)
    corpus.add_argument("inputs", nargs="+", metavar="TRANSCRIPT")
    corpus.add_argument("--transcript-format", choices=("json", "text"), default=None,
                        help="default: json for .json files, text otherwise")
    corpus.add_argument("--roles", metavar="PATH", help="JSON map of speaker name to role (text transcripts)")
    corpus.add_argument("--exclude", metavar="REGEX", help="drop raw turns whose text matches REGEX before merging")
    corpus.add_argument("--focal", choices=("candidates", "all"), default="candidates",
                        help="which speakers to score (default: role 'candidate')")
    corpus.add_argument("--speaker", action="append", metavar="NAME", help="score only this speaker (repeatable)")

    polls = argparse.ArgumentParser(add_help=False)
    polls.add_argument("--polls", required=True, metavar="CSV", help="candidate,date,percent rows")
    polls.add_argument("--schedule", required=True, action="append", metavar="JSON",
                       help="debate schedule for one election (repeatable)")
    polls.add_argument("--boundary", choices=BOUNDARY_POLICIES, default="after",
                       help="where debate-day polls go (default: after-window)")

    p = argparse.ArgumentParser(prog="lsmatch", description="Language style matching scores and poll analyses.")
    p.add_argument("--version", action="version", version=f"lsmatch {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("score", parents=[common, corpus], help="per-marker z-scores for each focal speaker")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("study1", parents=[common, corpus, polls], help="scores joined with poll changes")
    s.add_argument("--pooled-variance", action="store_true", help="Student t-test instead of Welch")
    s.set_defaults(func=cmd_study1)

    s = sub.add_parser("temporal", parents=[common, corpus, polls], help="prefix curves grouped by poll change")
    s.set_defaults(func=cmd_temporal)

    s = sub.add_parser("validate", parents=[common], help="synthetic validation suites")
    s.add_argument("--suite", action="append", choices=SUITES,
                   help=f"suite to run (repeatable; default {', '.join(DEFAULT_SUITES)})")
    s.add_argument("--inject-fault", action="store_true",
                   help="calibrate against a shuffle of all utterances; null-calibration should then fail")
    s.add_argument("--scale", type=float, default=1.0, help="multiply suite case counts (quick checks)")
    s.set_defaults(func=cmd_validate, inputs=None)

    s = sub.add_parser("synth", parents=[common], help="write synthetic transcripts with ground-truth sidecars")
    s.add_argument("--utterances", type=_positive, default=200)
    s.add_argument("--q0", type=_rate, default=0.3, help="marker rate after a predecessor without it")
    s.add_argument("--q1", type=_rate, default=0.3, help="marker rate after a predecessor with it")
    s.add_argument("--independent-rate", type=_rate, default=None, help="rate for non-copying speakers")
    s.add_argument("--ramp", type=_rate, nargs=2, metavar=("START", "END"), help="q1 moving linearly over time")
    s.add_argument("--topology", choices=TOPOLOGIES, default="alternating")
    s.add_argument("--speakers", default="A,B", help="comma-separated speaker names")
    s.add_argument("--copiers", default=None, help="comma-separated copying speakers (default all)")
    s.add_argument("--count", type=_positive, default=1, help="conversations, seeds seed..seed+count-1")
    s.add_argument("--id", default="synthetic", help="conversation id (suffixed when --count > 1)")
    s.set_defaults(func=cmd_synth, inputs=None)

    s = sub.add_parser("replay", help="rerun the command recorded in an output file")
    s.add_argument("source", metavar="FILE")
    s.add_argument("--out", metavar="DIR", help="override the recorded output directory")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="lsmatch: %(levelname)s: %(message)s")
    del ns.verbose
    pattern = getattr(ns, "exclude", None)
    if pattern:
        try:
            re.compile(pattern)
        except re.error as exc:
            print(f"lsmatch: error: bad --exclude pattern: {exc}", file=sys.stderr)
            return EXIT_USAGE
    try:
        if ns.command == "replay":
            return cmd_replay(ns, None, None)
        return ns.func(ns, build_manifest(ns), ns.out)
    except UsageError as exc:
        print(f"lsmatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"lsmatch: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LsmError, OSError, json.JSONDecodeError) as exc:
        msg = f"{exc.filename}: {exc.strerror}" if isinstance(exc, OSError) and exc.filename else str(exc)
        print(f"lsmatch: error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
