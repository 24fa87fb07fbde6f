"""Command-line driver: ``paat {gen-data,train,eval,explain,ablate}``.

Every setting is a flat ``key=value`` name. Values resolve in the order
built-in defaults, ``--preset``, ``--config FILE``, then explicit flags; the
resolved set is written to the run log before any work starts. Environment
variables are never read.

Exit status: 0 on success, 2 for usage, configuration and input errors, 1 for
failures during a run (divergence, unreadable files, bad checkpoints).
"""

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .attention import AttentionOutput, attention_map, partition_output
from .checkpoint import FormatError, load_checkpoint, save_checkpoint
from .data import (
    GenSpec,
    InputError,
    ParseError,
    SpecError,
    audit_corpus,
    build_vocab,
    generate_corpus,
    gold_matrix,
    label_name,
    parse_label,
    read_dataset,
    read_keyvalue,
    split_dataset,
    write_dataset,
)
from .encoder import InputError as EncoderInputError
from .metrics import evaluate
from .model import PaatConfig
from .train import DivergenceError, TrainConfig, encode_docs, predict_matrix, train_loop

log = logging.getLogger("paat")

# The acceptance experiments. Training stops at a fixed budget of five epochs,
# which is where the two attention schemes separate on this corpus.
_SHARED = dict(
    num_labels=20, vocab_size=2000, signature_per_label=40, doc_len_min=600, doc_len_max=600,
    labels_per_doc_min=2, labels_per_doc_max=6, regions=6, num_docs=2800, split="2000,300,500",
    n_enc=6, n_att=6, embed_dim=32, hidden=16, attn_dim=32, alpha=0.8, epochs=5,
)
PRESETS = {
    "dispersed": dict(_SHARED, dispersion=6, density=1),
    "concentrated": dict(_SHARED, dispersion=1, density=6),
}

GEN_KEYS = [f.name for f in fields(GenSpec)]
# vocab_size of the model is always taken from the vocabulary built on the training split
MODEL_KEYS = [f.name for f in fields(PaatConfig) if f.name != "vocab_size"]
TRAIN_KEYS = [f.name for f in fields(TrainConfig)]
RUN_DEFAULTS = {"split": "0.8,0.1,0.1", "min_freq": 1, "k": "5,8", "preset": "", "partition_mode": "att"}

SHADES = "·░▒▓█"


class ConfigError(ValueError):
    pass


USAGE_ERRORS = (ConfigError, SpecError, InputError, EncoderInputError, ParseError)


# ---------------------------------------------------------------------------
# configuration


def default_config() -> dict:
    cfg = {}
    cfg.update(asdict(GenSpec()))
    cfg.update({k: v for k, v in asdict(PaatConfig()).items() if k in MODEL_KEYS})
    cfg.update(asdict(TrainConfig()))
    cfg.update(RUN_DEFAULTS)
    return cfg


def _coerce(key: str, raw, like):
    if isinstance(like, bool):
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in {"1", "true", "yes", "on"}:
            return True
        if text in {"0", "false", "no", "off"}:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {type(like).__name__}") from None
    return str(raw)


def merge(base: dict, updates: dict, source: str) -> dict:
    out = dict(base)
    for key, raw in updates.items():
        k = key.replace("-", "_")
        if k == "doc_len":
            out["doc_len_min"] = out["doc_len_max"] = _coerce(k, raw, 0)
            continue
        if k not in base:
            raise ConfigError(f"unknown setting {key!r} in {source}")
        out[k] = _coerce(k, raw, base[k])
    return out


def resolve(args) -> dict:
    """defaults < preset < config file < flags."""
    file_values = read_keyvalue(args.config) if getattr(args, "config", None) else {}
    flag_values = {k: v for k, v in vars(args).items() if k.startswith("set_") and v is not None}
    flag_values = {k[4:]: v for k, v in flag_values.items()}
    preset = flag_values.get("preset") or file_values.get("preset") or ""
    cfg = default_config()
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg = merge(cfg, PRESETS[preset], f"preset {preset}")
    cfg = merge(cfg, file_values, str(getattr(args, "config", "")))
    cfg = merge(cfg, flag_values, "command line")
    cfg["preset"] = preset
    return cfg


def config_text(cfg: dict) -> str:
    return "".join(f"{k}={cfg[k]}\n" for k in sorted(cfg))


def gen_spec(cfg: dict) -> GenSpec:
    return GenSpec(**{k: cfg[k] for k in GEN_KEYS})


def model_config(cfg: dict, vocab_size: int, **overrides) -> PaatConfig:
    values = {k: cfg[k] for k in MODEL_KEYS}
    values.update(overrides)
    try:
        return PaatConfig(vocab_size=vocab_size, **values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(**{k: cfg[k] for k in TRAIN_KEYS})


def split_ratios(text: str) -> tuple:
    try:
        parts = [float(x) for x in str(text).split(",")]
    except ValueError:
        raise ConfigError(f"split must be three comma-separated numbers, got {text!r}") from None
    if len(parts) != 3 or any(p <= 0 for p in parts):
        raise ConfigError(f"split must be three positive numbers, got {text!r}")
    total = sum(parts)
    return tuple(p / total for p in parts)


def k_list(text: str) -> list:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"k must be a comma-separated list of integers, got {text!r}") from None


def command_keys(command: str) -> list:
    model_train = [k for k in MODEL_KEYS] + TRAIN_KEYS + ["min_freq"]
    keys = {
        "gen-data": GEN_KEYS + ["split"],
        "train": model_train,
        "eval": ["k", "threshold"],
        "explain": [],
        "ablate": model_train + ["k", "partition_mode"],
    }[command]
    return sorted(set(keys) | {"preset"})


def echo_config(cfg: dict, out_dir: Path = None, command: str = ""):
    """Log the settings this command reads; with ``out_dir`` also append them to run.log."""
    text = config_text({k: cfg[k] for k in command_keys(command)})
    log.info("resolved configuration (%s):\n%s", command, text.rstrip())
    if out_dir is not None:
        with open(out_dir / "run.log", "a", encoding="utf-8") as fh:
            fh.write(f"# paat {command}\n{text}")


# ---------------------------------------------------------------------------
# data helpers


def load_splits(data_dir: Path, num_labels: int):
    splits = []
    for name in ("train", "valid", "test"):
        path = data_dir / f"{name}.tsv"
        splits.append(read_dataset(path, num_labels) if path.exists() else None)
    if splits[0] is None or splits[1] is None:
        raise ConfigError(f"{data_dir} must contain train.tsv and valid.tsv")
    return splits


def _load_eval_docs(path: Path, num_labels: int):
    try:
        return read_dataset(path, num_labels)
    except InputError as exc:
        raise ConfigError(f"dataset does not fit the checkpoint: {exc}") from None


# ---------------------------------------------------------------------------
# gen-data


def cmd_gen_data(args, cfg) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, out, "gen-data")
    spec = gen_spec(cfg)
    spec.validate()
    ratios = split_ratios(cfg["split"])
    docs = generate_corpus(spec)
    parts = split_dataset(docs, ratios, seed=spec.seed)
    for name, part in zip(("train", "valid", "test"), parts):
        write_dataset(part, out / f"{name}.tsv", spec.num_labels)
    (out / "genspec.cfg").write_text(spec.to_text(), encoding="utf-8")
    audit = audit_corpus(docs, spec)
    audit.update({"train": len(parts[0]), "valid": len(parts[1]), "test": len(parts[2])})
    (out / "audit.json").write_text(json.dumps(audit, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(audit, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# train


def cmd_train(args, cfg) -> int:
    data_dir, out = Path(args.data), Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, out, "train")
    train_docs, valid_docs, _ = load_splits(data_dir, cfg["num_labels"])
    vocab = build_vocab(train_docs, cfg["min_freq"])
    mcfg = model_config(cfg, len(vocab))
    (out / "config.txt").write_text(config_text({k: cfg[k] for k in command_keys("train")}), encoding="utf-8")
    log_path = out / "epochs.tsv"
    with open(log_path, "w", encoding="utf-8") as fh:
        fh.write("epoch\ttrain_bce\tvalid_micro_f1\n")

        def on_epoch(rec):
            fh.write(rec.line() + "\n")
            fh.flush()

        result = train_loop(mcfg, train_docs, valid_docs, vocab, train_config(cfg), on_epoch=on_epoch)
    save_checkpoint(result.model, out / "model.ckpt", vocab)
    summary = {"best_epoch": result.best_epoch, "best_valid_micro_f1": result.best_valid_micro_f1,
               "epochs_run": len(result.history)}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("best epoch %d (valid micro-F1 %.4f)", result.best_epoch, result.best_valid_micro_f1)
    return 0


# ---------------------------------------------------------------------------
# eval


def _load_model(path):
    model, vocab = load_checkpoint(path)
    if vocab is None:
        raise ConfigError(f"checkpoint {path} carries no vocabulary")
    return model, vocab


def cmd_eval(args, cfg) -> int:
    echo_config(cfg, None, "eval")
    model, vocab = _load_model(args.checkpoint)
    L = model.config.num_labels
    docs = _load_eval_docs(Path(args.data), L)
    encoded = encode_docs(docs, vocab)
    scores = predict_matrix(model, encoded)
    compare = None
    if args.compare:
        other, other_vocab = _load_model(args.compare)
        if other.config.num_labels != L:
            raise ConfigError(f"--compare checkpoint has {other.config.num_labels} labels, expected {L}")
        compare = predict_matrix(other, encode_docs(docs, other_vocab))
    report = evaluate(scores, gold_matrix(docs, L), ks=k_list(cfg["k"]), threshold=cfg["threshold"], compare=compare)
    Path(args.out).write_text(report.to_json(), encoding="utf-8")
    log.info("micro-F1 %.4f macro-F1 %.4f micro-AUC %s", report.micro_f1, report.macro_f1, report.micro_auc)
    return 0


# ---------------------------------------------------------------------------
# explain


def shade_buckets(weights) -> list:
    """Quantile bucket 0..4 per weight; equal weights share the lowest bucket."""
    w = np.asarray(weights, dtype=np.float64)
    edges = np.quantile(w, [0.2, 0.4, 0.6, 0.8])
    return np.searchsorted(edges, w, side="left").clip(0, 4).tolist()


def render_label(entry: dict, tokens: list) -> str:
    n = len(tokens)
    conv = np.zeros(n)
    part = np.zeros(n)
    for row in entry["conventional"]:
        conv[row["position"]] = row["weight"]
    for row in entry["partition"]:
        part[row["position"]] = row["weight"]
    cb, pb = shade_buckets(conv), shade_buckets(part)
    width = max(len(t) for t in tokens)
    lines = [f"label {entry['label']}",
             "segment weights " + " ".join(f"{m:.4f}" for m in entry["segment_weights"]),
             f"{'pos':>5}  {'token':<{width}}  conv  part  {'conv_w':>10}  {'part_w':>10}"]
    for j, tok in enumerate(tokens):
        lines.append(f"{j:>5}  {tok:<{width}}  {SHADES[cb[j]] * 4}  {SHADES[pb[j]] * 4}  {conv[j]:>10.6f}  {part[j]:>10.6f}")
    return "\n".join(lines) + "\n"


def regions_hit(ranked, bounds, top: int = 10) -> int:
    """Number of segments holding at least one of the ``top`` highest-weighted positions."""
    hit = set()
    for pos, _, _ in ranked[:top]:
        hit.update(k for k, (s, e) in enumerate(bounds) if s <= pos < e)
    return len(hit)


def cmd_explain(args, cfg) -> int:
    echo_config(cfg, None, "explain")
    model, vocab = _load_model(args.checkpoint)
    L = model.config.num_labels
    docs = {d.id: d for d in _load_eval_docs(Path(args.data), L)}
    if args.doc_id not in docs:
        raise InputError(f"document {args.doc_id!r} not found in {args.data}")
    doc = docs[args.doc_id]
    names = [x for x in args.labels.split(",") if x] if args.labels else [label_name(l, L) for l in sorted(doc.gold)]
    labels = []
    for name in names:
        idx = parse_label(name)
        if idx >= L:
            raise InputError(f"label {name} outside the model's {L} labels")
        labels.append(idx)
    ids = vocab.encode(doc.tokens)[: model.config.max_tokens]
    out = model.run(ids, attention=True)
    A_seg, V_stack, T, M, V_p = out.partition
    conv = AttentionOutput(out.A, out.V)
    part = partition_output(A_seg, V_stack, T, M, V_p, out.att_bounds)
    maps = attention_map(conv, part, ids, vocab, labels)
    probs = model.predict_proba(ids)
    payload = {
        "doc_id": doc.id,
        "tokens": len(ids),
        "segments": [list(b) for b in out.att_bounds],
        "gold": [label_name(l, L) for l in sorted(doc.gold)],
        "labels": [],
    }
    for m in maps:
        payload["labels"].append({
            "label": label_name(m.label, L),
            "probability": float(probs[m.label]),
            "segment_weights": m.segment_weights,
            "top10_segments": {"conventional": regions_hit(m.conventional, out.att_bounds),
                               "partition": regions_hit(m.partition, out.att_bounds)},
            "conventional": [{"token": t, "position": p, "weight": w} for p, t, w in m.conventional],
            "partition": [{"token": t, "position": p, "weight": w} for p, t, w in m.partition],
        })
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    tokens = [vocab.token(int(i)) for i in ids]
    text = "".join(render_label(entry, tokens) + "\n" for entry in payload["labels"])
    legend = f"shading by weight quantile, lowest to highest: {' '.join(SHADES)}\n\n"
    Path(f"{prefix}.txt").write_text(legend + text, encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# ablate


def ablation_cells(cfg: dict, variants: list, partitions: list, seeds: list) -> list:
    """Rows in sweep order; every row is trained once per seed."""
    rows = [{"row": v, "overrides": {"variant": v}} for v in variants]
    for n in partitions:
        over = {"variant": "paat", "n_att": n}
        if cfg["partition_mode"] == "tied":
            over["n_enc"] = n
        elif cfg["partition_mode"] != "att":
            raise ConfigError(f"partition_mode must be 'att' or 'tied', got {cfg['partition_mode']!r}")
        rows.append({"row": f"partitions={n}", "overrides": over})
    return [dict(r, seed=s) for r in rows for s in seeds]


def run_cell(cell: dict, cfg: dict, data_dir: str, out_dir: str) -> dict:
    """Train and test one (row, seed) cell; failures come back as an error field."""
    start = time.time()
    try:
        train_docs, valid_docs, test_docs = load_splits(Path(data_dir), cfg["num_labels"])
        if test_docs is None:
            raise ConfigError(f"{data_dir} has no test.tsv")
        vocab = build_vocab(train_docs, cfg["min_freq"])
        mcfg = model_config(cfg, len(vocab), seed=cell["seed"], **cell["overrides"])
        result = train_loop(mcfg, train_docs, valid_docs, vocab, train_config(cfg))
        scores = predict_matrix(result.model, encode_docs(test_docs, vocab))
        report = evaluate(scores, gold_matrix(test_docs, mcfg.num_labels), ks=k_list(cfg["k"]),
                          threshold=cfg["threshold"])
        cell_dir = Path(out_dir) / f"{cell['row']}__seed{cell['seed']}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        (cell_dir / "epochs.tsv").write_text(result.log_text(), encoding="utf-8")
        (cell_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
        np.save(cell_dir / "test_scores.npy", scores)
        save_checkpoint(result.model, cell_dir / "model.ckpt", vocab)
        return {"row": cell["row"], "seed": cell["seed"], "metrics": report.to_dict(), "scores": scores,
                "dir": str(cell_dir),
                "best_epoch": result.best_epoch, "seconds": time.time() - start}
    except Exception as exc:  # a failed cell is recorded and the sweep goes on
        return {"row": cell["row"], "seed": cell["seed"], "error": f"{type(exc).__name__}: {exc}",
                "seconds": time.time() - start}


def _mean_std(values):
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0


TABLE_METRICS = ("micro_f1", "macro_f1", "micro_auc", "macro_auc")


def summarize(results: list, rows: list, ks: list, test_gold=None, threshold: float = 0.5) -> dict:
    from .metrics import disagreement_report

    table = []
    for row in rows:
        cells = [r for r in results if r["row"] == row]
        ok = [r for r in cells if "error" not in r]
        entry = {"row": row, "runs": len(ok), "failed": [f"seed {r['seed']}: {r['error']}" for r in cells if "error" in r]}
        for m in TABLE_METRICS:
            entry[m] = _mean_std([r["metrics"][m] for r in ok if r["metrics"][m] is not None])
        for k in ks:
            entry[f"p_at_{k}"] = _mean_std([r["metrics"]["p_at_k"][str(k)] for r in ok if str(k) in r["metrics"]["p_at_k"]])
        table.append(entry)
    disagreement = {}
    if test_gold is not None and len(rows) >= 2:
        first = rows[0]
        for other in rows[1:]:
            per_seed = {}
            for ra in results:
                if ra["row"] != first or "error" in ra:
                    continue
                rb = next((r for r in results if r["row"] == other and r["seed"] == ra["seed"] and "error" not in r), None)
                if rb is not None:
                    per_seed[str(ra["seed"])] = disagreement_report(ra["scores"], rb["scores"], test_gold, threshold)
            disagreement[f"{first} vs {other}"] = per_seed
    return {"table": table, "disagreement": disagreement}


def format_table(summary: dict, ks: list) -> str:
    cols = list(TABLE_METRICS) + [f"p_at_{k}" for k in ks]
    width = max(12, max(len(e["row"]) for e in summary["table"]) + 2)
    head = f"{'row':<{width}}" + "".join(f"{c:>18}" for c in cols) + f"{'runs':>6}"
    lines = [head]
    for e in summary["table"]:
        cells = []
        for c in cols:
            mean, std = e[c]
            cells.append(f"{'-':>18}" if mean is None else f"{mean:>10.4f} ± {std:<5.4f}")
        note = f"{e['runs']:>6}" + (f"  failed: {len(e['failed'])}" if e["failed"] else "")
        lines.append(f"{e['row']:<{width}}" + "".join(cells) + note)
    return "\n".join(lines) + "\n"


def run_ablation(cfg: dict, data_dir, out_dir, variants, partitions, seeds, jobs: int = 1) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = ablation_cells(cfg, variants, partitions, seeds)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_cell, c, cfg, str(data_dir), str(out_dir)) for c in cells]
            results = [f.result() for f in futures]
    else:
        results = []
        for c in cells:
            results.append(run_cell(c, cfg, str(data_dir), str(out_dir)))
            r = results[-1]
            if "error" in r:
                log.error("cell %s seed %d failed: %s", r["row"], r["seed"], r["error"])
            else:
                log.info("cell %s seed %d: test micro-F1 %.4f (%.0fs)", r["row"], r["seed"],
                         r["metrics"]["micro_f1"], r["seconds"])
    rows = list(dict.fromkeys(c["row"] for c in cells))
    _, _, test_docs = load_splits(Path(data_dir), cfg["num_labels"])
    gold = gold_matrix(test_docs, cfg["num_labels"]) if test_docs is not None else None
    ks = k_list(cfg["k"])
    summary = summarize(results, rows, ks, gold, cfg["threshold"])
    summary["cells"] = [{k: v for k, v in r.items() if k != "scores"} for r in results]
    (out_dir / "results.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    (out_dir / "table.txt").write_text(format_table(summary, ks), encoding="utf-8")
    summary["results"] = results
    return summary


def cmd_ablate(args, cfg) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    echo_config(cfg, out, "ablate")
    variants = [v for v in args.variants.split(",") if v] if args.variants else []
    try:
        partitions = [int(x) for x in args.partitions.split(",") if x] if args.partitions else []
    except ValueError:
        raise ConfigError(f"--partitions must list integers, got {args.partitions!r}") from None
    if not variants and not partitions:
        raise ConfigError("nothing to sweep: give --variants and/or --partitions")
    seeds = list(range(cfg["seed"], cfg["seed"] + args.seeds))
    summary = run_ablation(cfg, args.data, out, variants, partitions, seeds, args.jobs)
    sys.stdout.write(format_table(summary, k_list(cfg["k"])))
    failed = sum(len(e["failed"]) for e in summary["table"])
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_setting_flags(p: argparse.ArgumentParser, keys):
    group = p.add_argument_group("settings (also accepted as key=value lines in --config)")
    defaults = default_config()
    for key in keys:
        like = defaults[key]
        kind = "bool" if isinstance(like, bool) else type(like).__name__
        group.add_argument(f"--{key.replace('_', '-')}", dest=f"set_{key}", metavar=kind.upper(),
                           help=f"default {like!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paat", description="Partition-based label attention classifier.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value settings file")
        p.add_argument("--preset", dest="set_preset", choices=sorted(PRESETS))

    gen_only = GEN_KEYS + ["split"]
    model_train = [k for k in MODEL_KEYS if k != "num_labels"] + TRAIN_KEYS + ["min_freq"]

    p = sub.add_parser("gen-data", help="generate a synthetic corpus and its splits")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--doc-len", dest="set_doc_len", metavar="INT", help="sets doc_len_min and doc_len_max")
    _add_setting_flags(p, gen_only)

    p = sub.add_parser("train", help="train one model")
    common(p)
    p.add_argument("--data", required=True, help="directory with train.tsv and valid.tsv")
    p.add_argument("--out", required=True, help="output directory")
    _add_setting_flags(p, ["num_labels"] + model_train)

    p = sub.add_parser("eval", help="score a checkpoint on a dataset file")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--compare", help="second checkpoint for the disagreement report")
    _add_setting_flags(p, ["k", "threshold"])

    p = sub.add_parser("explain", help="export attention maps for one document")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--doc-id", required=True)
    p.add_argument("--labels", help="comma-separated label names (default: the document's gold labels)")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.json and PREFIX.txt")

    p = sub.add_parser("ablate", help="train a sweep of variants or partition counts over several seeds")
    common(p)
    p.add_argument("--data", required=True, help="directory with train/valid/test splits")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--variants", default="", help="comma-separated variants, e.g. paat,paat-pea")
    p.add_argument("--partitions", default="", help="comma-separated partition counts, e.g. 1,2,6")
    p.add_argument("--seeds", type=int, default=5, help="number of seeds, starting at --seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    _add_setting_flags(p, ["num_labels"] + model_train + ["k", "partition_mode"])
    return parser


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "eval": cmd_eval, "explain": cmd_explain,
            "ablate": cmd_ablate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](args, cfg)
    except USAGE_ERRORS as exc:
        print(f"paat {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, FormatError, OSError) as exc:
        print(f"paat {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
