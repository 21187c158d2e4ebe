"""Command-line front end: gen-data, train, sample, optimize, eval, render.

Exit codes: 0 success, 1 usage error, 2 bad input data, 3 runtime failure.
Errors are written to stderr as one ``laygen: error: <kind>: <message>`` line.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import stats as st
from .codec import Vocab, boundary_tuples, decode_edges, decode_elements, tuple_arity
from .errors import DecodeError, GenError, LaygenError, LoadError, SchemaError
from .layout import Edge, EdgeKind, Element, Layout, Mode, boundary_layout, validate_layout
from .optimize import ConstraintSet, RunReport, drop_invalid_descriptive, filter_constraints, optimize
from .render import save_svg
from .synth import GenConfig, generate_corpus, load_corpus, save_corpus, split_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
EDGE_KINDS = ("hadj", "vadj", "wall", "door")
DATA_ERRORS = (LoadError, SchemaError, DecodeError, GenError, FileNotFoundError, json.JSONDecodeError)

# lr, warmup steps
PRESET_OPTIM = {"desk": (1e-3, 100), "paper": (1e-4, 500)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _corpus_path(path, name):
    p = Path(path)
    return p / name if p.is_dir() else p


def _read_layouts(path):
    """A single layout JSON document or newline-delimited layouts."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return load_corpus(path)
    docs = doc if isinstance(doc, list) else [doc]
    return [Layout.from_dict(d) for d in docs]


def ckpt_name(model, condition="none"):
    suffix = "" if condition == "none" else f"-{condition}"
    return f"{model.replace(':', '-')}{suffix}.ckpt"


# --- gen-data -----------------------------------------------------------------

def cmd_gen_data(args):
    cfg = GenConfig.from_file(args.config) if args.config else GenConfig()
    if args.n is not None:
        cfg.n_layouts = args.n
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = generate_corpus(cfg)
    save_corpus(out / "corpus.jsonl", corpus)
    for name, part in zip(("train", "val", "test"), split_corpus(corpus)):
        save_corpus(out / f"{name}.jsonl", part)
    cfg_doc = {k: v for k, v in vars(cfg).items()}
    _write_json(out / "gen_config.json", cfg_doc)
    print(f"wrote {len(corpus)} layouts to {out}")


# --- train ------------------------------------------------------------------------

def cmd_train(args):
    from .errors import CapacityError
    from .models import EdgeModel, ElementModel, edge_example, element_example, make_config, save_model, train

    if args.model == "element":
        kind, edge_kind = "element", None
    elif args.model.startswith("edge:") and args.model[5:] in EDGE_KINDS:
        kind, edge_kind = "edge", args.model[5:]
    else:
        raise UsageError(f"--model must be element or edge:<{'|'.join(EDGE_KINDS)}>, got {args.model!r}")
    layouts = load_corpus(_corpus_path(args.data, "train.jsonl"))
    if not layouts:
        raise LoadError(f"{args.data}: no training layouts")
    mode = layouts[0].mode
    n_types = len(layouts[0].types)
    examples, skipped = [], 0
    for lay in layouts:
        try:
            if kind == "element":
                examples.append(element_example(lay, args.condition))
            else:
                examples.append(edge_example(lay, edge_kind, args.condition))
        except CapacityError:
            skipped += 1
    cfg = make_config(kind, args.preset, args.condition, n_types=n_types, arity=tuple_arity(mode),
                      mode=mode.value, edge_kind=edge_kind)
    seed = args.seed or 0
    model = (ElementModel if kind == "element" else EdgeModel)(cfg, seed=seed)
    lr, warm = PRESET_OPTIM[args.preset]
    out = Path(args.out)
    if out.is_dir() or args.out.endswith(("/", "\\")):
        out = out / ckpt_name(args.model, args.condition)
    out.parent.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    hist = train(model, examples, steps=args.steps, epochs=args.epochs if args.steps is None else None,
                 batch_size=args.batch_size, seed=seed, lr=args.lr or lr,
                 warmup_steps=args.warmup if args.warmup is not None else warm,
                 loss_log=str(out) + ".loss.csv")
    save_model(out, model, seed)
    print(f"trained {args.model} ({args.condition}) for {len(hist)} steps on {len(examples)} examples "
          f"(skipped {skipped}), final nll {hist[-1][2]:.4f}, {time.perf_counter() - t0:.1f}s -> {out}")


# --- sample ------------------------------------------------------------------------

def _load_first(ckpt_dir, names):
    from .models import load_model
    for name in names:
        p = Path(ckpt_dir) / name
        if p.exists():
            return load_model(p), p
    return None, None


def _read_element_lists(path):
    doc = json.loads(Path(path).read_text())
    if doc and isinstance(doc[0], (list, tuple)) and doc[0] and isinstance(doc[0][0], (list, tuple)):
        lists = doc
    else:
        lists = [doc]
    out = []
    for lst in lists:
        try:
            out.append([tuple(int(v) for v in tup) for tup in lst])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: element constraints must be lists of integer tuples") from exc
        if any(len(t) != 3 for t in out[-1]):
            raise SchemaError(f"{path}: element constraints are (type, w, h) triples")
    return out


def cmd_sample(args):
    from .models import Strategy, sample_edges, sample_elements

    if args.boundary and args.elements:
        raise UsageError("--boundary and --elements are mutually exclusive")
    condition = "boundary" if args.boundary else "elements" if args.elements else "none"
    elem_model, elem_path = _load_first(args.ckpt_dir, [ckpt_name("element", condition)])
    if elem_model is None:
        raise FileNotFoundError(f"{args.ckpt_dir}/{ckpt_name('element', condition)}")
    cfg = elem_model.cfg
    mode = Mode(cfg.mode)
    vocab = Vocab(cfg.n_types)
    n = args.n
    boundaries = conds = None
    if args.boundary:
        bl = [boundary_layout(b) for b in _read_layouts(args.boundary)]
        if not bl or any(not b.elements for b in bl):
            raise SchemaError(f"{args.boundary}: boundary layouts need exterior rectangles")
        boundaries = [bl[i % len(bl)] for i in range(n)]
        conds = [boundary_tuples(b) for b in boundaries]
    elif args.elements:
        lists = _read_element_lists(args.elements)
        conds = [lists[i % len(lists)] for i in range(n)]
    try:
        strategy = Strategy.parse(args.strategy, args.temperature)
    except (GenError, ValueError) as exc:
        raise UsageError(f"bad --strategy {args.strategy!r}") from exc
    seed = args.seed or 0
    t0 = time.perf_counter()
    samples = sample_elements(elem_model, n, conds, seed=seed, strategy=strategy)
    records = []
    for b, s in enumerate(samples):
        rec = {"index": b, "mode": mode.value, "status": "ok", "detail": "", "elements": [], "edges": [],
               "boundary": None if boundaries is None else [
                   {"t": e.t, "x": e.x, "y": e.y, "w": e.w, "h": e.h} for e in boundaries[b].elements]}
        if s.truncated:
            rec["status"], rec["detail"] = "truncated", "element sequence hit the length limit"
        else:
            try:
                rec["elements"] = [c.as_tuple() for c in decode_elements(s.tokens, mode, vocab)]
            except DecodeError as exc:
                rec["status"], rec["detail"] = "ungrammatical", str(exc)
        records.append(rec)
    t_elem = time.perf_counter() - t0
    used = {"element": str(elem_path)}
    kinds = EDGE_KINDS if mode is Mode.FLOORPLAN else ()
    for k, kind in enumerate(kinds):
        model, path = _load_first(args.ckpt_dir, [ckpt_name(f"edge:{kind}", condition), ckpt_name(f"edge:{kind}")])
        if model is None:
            continue
        used[kind] = str(path)
        ok = [r for r in records if r["status"] == "ok"]
        if not ok:
            break
        ec = None
        if model.cfg.conditional:
            ec = [conds[r["index"]] for r in ok]
        outs = sample_edges(model, [r["elements"] for r in ok], ec, seed=[seed, k + 1], strategy=strategy)
        for r, s in zip(ok, outs):
            if s.truncated:
                r["status"], r["detail"] = "truncated", f"{kind} sequence hit the length limit"
                continue
            try:
                edges = decode_edges(s.tokens, kind, model.shortened, len(r["elements"]))
            except DecodeError as exc:
                r["status"], r["detail"] = "ungrammatical", f"{kind}: {exc}"
                continue
            r["edges"] += [{"i": e.i, "j": e.j, "k": e.kind.value} for e in edges]
    t_total = time.perf_counter() - t0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "constraints.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    counts = {s: sum(r["status"] == s for r in records) for s in ("ok", "truncated", "ungrammatical")}
    _write_json(out / "sample_report.json", {
        "n": n, "seed": seed, "condition": condition, "strategy": args.strategy, "counts": counts,
        "checkpoints": used, "timings": {"elements_s": round(t_elem, 3), "total_s": round(t_total, 3)}})
    print(f"sampled {n} constraint sets ({counts['ok']} ok) -> {out / 'constraints.jsonl'}")


# --- optimize ----------------------------------------------------------------------

def record_to_constraints(rec, schema):
    """ConstraintSet from one constraints.jsonl record. Edges are not
    validated here; filtering reports bad indices."""
    from .codec import ElementConstraint
    cons = [ElementConstraint(int(t[0]), tuple(int(v) for v in t[1:])) for t in rec["elements"]]
    edges = [Edge(int(e["i"]), int(e["j"]), EdgeKind(e["k"])) for e in rec["edges"]]
    boundary = None
    if rec.get("boundary"):
        boundary = [Element(int(e["t"]), float(e["x"]), float(e["y"]), float(e["w"]), float(e["h"]))
                    for e in rec["boundary"]]
    return ConstraintSet.from_bins(rec["mode"], cons, edges, schema=schema, boundary=boundary)


def optimize_record(rec, schema):
    """(outcome, n filtered edges, n dropped descriptive edges, problems)."""
    cs = record_to_constraints(rec, schema)
    cs, removed = filter_constraints(cs)
    outcome = optimize(cs)
    dropped = 0
    problems = []
    if isinstance(outcome, Layout):
        outcome, dropped = drop_invalid_descriptive(outcome)
        problems = [v for v in validate_layout(outcome) if v.kind in ("adjacency", "descriptive")]
    return outcome, len(removed), dropped, problems


def cmd_optimize(args):
    from .layout import FLOORPLAN_TYPES, FURNITURE_TYPES
    from .optimize import Reason, Rejected

    src = _corpus_path(args.inp, "constraints.jsonl")
    records = []
    with open(src) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                rec["elements"], rec["edges"], rec["status"], rec["mode"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise LoadError(f"{src}:{line_no}: {exc!r}", line_no) from exc
            records.append(rec)
    report = RunReport()
    t0 = time.perf_counter()
    ok = [r for r in records if r["status"] == "ok"]
    report.attempted = len(records)
    report.ungrammatical = len(records) - len(ok)
    report.truncated = sum(r["status"] == "truncated" for r in records)

    def work(rec):
        schema = FLOORPLAN_TYPES if rec["mode"] == Mode.FLOORPLAN.value else FURNITURE_TYPES
        try:
            return optimize_record(rec, schema)
        except SchemaError as exc:
            return Rejected(Reason.FORMULATION, str(exc)), 0, 0, []

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(work, ok))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    filter_modified = 0
    with open(out / "layouts.jsonl", "w") as fl, open(out / "rejected.jsonl", "w") as fr:
        for rec, (outcome, n_removed, n_dropped, problems) in zip(ok, results):
            report.filtered_edges += n_removed
            report.dropped_descriptive += n_dropped
            filter_modified += n_removed > 0
            if isinstance(outcome, Layout) and problems:
                outcome = Rejected(Reason.VIOLATION, "; ".join(p.detail or p.kind for p in problems))
            report.record(outcome)
            if isinstance(outcome, Layout):
                fl.write(outcome.to_json() + "\n")
            else:
                fr.write(json.dumps({"index": rec["index"], "reason": outcome.reason.value,
                                     "detail": outcome.detail}, sort_keys=True) + "\n")
    doc = json.loads(report.to_json())
    doc["filter_modified"] = filter_modified
    doc["timings"] = {"optimize_s": round(time.perf_counter() - t0, 3)}
    doc["artifacts"] = {k: str(out / k) for k in ("layouts.jsonl", "rejected.jsonl", "report.json")}
    _write_json(out / "report.json", doc)
    print(f"optimized {report.grammatical} of {report.attempted} samples: {report.feasible} feasible "
          f"-> {out / 'layouts.jsonl'}")
    if not report.consistent():
        raise RuntimeError("run report accounting is inconsistent")


# --- eval --------------------------------------------------------------------------

def _stats_for(path, preferred):
    p = Path(path)
    if p.is_dir():
        for name in preferred:
            if (p / name).exists():
                return st.compute_stats(load_corpus(p / name))
        raise FileNotFoundError(f"{p}: none of {', '.join(preferred)}")
    if p.suffix == ".json":
        try:
            return st.load_stats(p)
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"{p}: not a statistics file") from exc
    return st.compute_stats(load_corpus(p))


def cmd_eval(args):
    names = ("layouts.jsonl", "test.jsonl", "corpus.jsonl")
    ours = _stats_for(args.ours, names)
    gt = _stats_for(args.gt, ("test.jsonl",) + names)
    theirs = _stats_for(args.theirs, names) if args.theirs else ours
    rep = st.aggregate(ours, theirs, gt, cap=args.cap)
    print(rep.table())
    if rep.capped:
        print(f"capped at {rep.cap:g}: {', '.join(sorted(rep.capped))}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "stat_report.json").write_text(rep.to_json() + "\n")
        st.save_stats(out / "stats_ours.json", ours)


# --- render ------------------------------------------------------------------------

def cmd_render(args):
    layouts = _read_layouts(args.inp)
    if not 0 <= args.index < len(layouts):
        raise SchemaError(f"{args.inp}: no layout at index {args.index} ({len(layouts)} present)")
    save_svg(args.out, layouts[args.index])
    print(f"wrote {args.out}")


# --- entry point -------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="laygen", description="Constraint-based layout generation pipeline.")
    p.add_argument("--threads", type=int, default=1, help="worker threads for batch stages")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen-data", parents=[common], help="generate a synthetic corpus with splits")
    g.add_argument("--config", help="INI file with a [gen] section")
    g.add_argument("--out", required=True)
    g.add_argument("--n", type=int, help="override n_layouts")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", parents=[common], help="train an element or edge model")
    t.add_argument("--model", required=True, help="element or edge:<hadj|vadj|wall|door>")
    t.add_argument("--data", required=True, help="corpus directory or train .jsonl file")
    t.add_argument("--preset", choices=("desk", "paper"), default="desk")
    t.add_argument("--condition", choices=("none", "boundary", "elements"), default="none")
    t.add_argument("--epochs", type=int, default=1)
    t.add_argument("--steps", type=int, help="number of updates; overrides --epochs")
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--lr", type=float)
    t.add_argument("--warmup", type=int)
    t.add_argument("--out", required=True, help="checkpoint path, or a directory for the default name")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", parents=[common], help="sample constraint sets from trained models")
    s.add_argument("--ckpt-dir", required=True)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--boundary", help="layout JSON (or .jsonl) whose exterior rectangles condition sampling")
    s.add_argument("--elements", help="JSON list of (type, w, h) bin triples, or a list of such lists")
    s.add_argument("--strategy", default="nucleus:0.9", help="greedy, temperature:T or nucleus:P")
    s.add_argument("--temperature", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    o = sub.add_parser("optimize", parents=[common], help="solve sampled constraint sets into layouts")
    o.add_argument("--in", dest="inp", required=True)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser("eval", parents=[common], help="compare layout statistics")
    e.add_argument("--ours", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--theirs")
    e.add_argument("--cap", type=float, default=st.CAP)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("render", parents=[common], help="draw a layout as SVG")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--index", type=int, default=0)
    r.set_defaults(func=cmd_render)
    return p


def _fail(code, kind, message):
    msg = " ".join(str(message).split())
    print(f"laygen: error: {kind}: {msg}", file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except DATA_ERRORS as exc:
        return _fail(EXIT_DATA, type(exc).__name__, exc)
    except (LaygenError, RuntimeError, ArithmeticError, OSError, ValueError) as exc:
        return _fail(EXIT_RUNTIME, type(exc).__name__, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
