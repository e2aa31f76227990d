"""Command-line interface: ingest, train, generate, evaluate, inspect-circuit, grid.

Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags, missing
or invalid files, invalid configuration).
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .ansatz import RegisterLayout, build_circuit, build_layout, format_circuit
from .encoding import encode_indices, infer_schema
from .exceptions import ConfigurationError, IngestionError, SchemaError, TabQGANError, TrainingError
from .metrics import overall_score
from .schema import MODES, load_schema, save_schema
from .discriminator import DISC_INPUTS
from .training import INIT_SCHEMES, Checkpoint, TrainingConfig, generate, train

OUT_ENV = "TABQGAN_OUT"

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

# hyperparameter grid of the TabularQGAN row
GRID_DEPTHS = (1, 2, 3, 4)
GRID_BATCH_FRACTIONS = (0.1, 0.2)
GRID_LEARNING_RATES = (0.05, 0.1, 0.2)
GRID_SEEDS = (0, 1, 2, 3, 4)
# synthetic rows drawn per evaluation; large enough that sampling noise in
# the similarity scores stays well below the differences being compared
EVAL_ROWS = 10_000


class UsageError(TabQGANError):
    pass


def default_out(name: str) -> Path:
    return Path(os.environ.get(OUT_ENV, "runs")) / name


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# data loading


def read_csv(path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    try:
        table = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise IngestionError(f"{path} is empty") from None
    if table.empty:
        raise IngestionError(f"{path} has a header but no rows")
    return table


def clean_table(table: pd.DataFrame, numeric, categorical, strict: bool = False):
    """Select declared columns and drop rows with unparseable or missing values.

    Returns ``(clean, dropped)`` where ``dropped`` lists 1-based data-row
    numbers (header excluded). With ``strict`` any bad row is an error.
    """
    declared = list(numeric) + list(categorical)
    missing = [c for c in declared if c not in table.columns]
    if missing:
        raise IngestionError(f"declared column(s) not in CSV: {', '.join(missing)}")
    out = table[[c for c in table.columns if c in declared]].copy()
    bad = np.zeros(len(out), dtype=bool)
    for c in numeric:
        values = pd.to_numeric(out[c].str.strip(), errors="coerce")
        bad |= values.isna().to_numpy()
        out[c] = values
    for c in categorical:
        out[c] = out[c].str.strip()
        bad |= (out[c] == "").to_numpy()
    dropped = [int(i) + 1 for i in np.flatnonzero(bad)]
    if dropped and strict:
        raise IngestionError(f"unparseable or missing values in data rows {_rows(dropped)}")
    clean = out[~bad].reset_index(drop=True)
    if clean.empty:
        raise IngestionError("no parseable rows left")
    return clean, dropped


def _rows(rows, limit=10):
    head = ", ".join(map(str, rows[:limit]))
    return head + (f" ... ({len(rows)} total)" if len(rows) > limit else "")


def load_training_table(data_path, schema):
    numeric = [f.name for f in schema.features if f.is_numeric]
    categorical = [f.name for f in schema.features if not f.is_numeric]
    return clean_table(read_csv(data_path), numeric, categorical)


def parse_numeric_decl(items) -> dict:
    out = {}
    for item in items or []:
        name, sep, q = item.partition("=")
        if not sep or not q.isdigit():
            raise UsageError(f"numeric declaration must look like NAME=QUBITS, got {item!r}")
        out[name] = int(q)
    return out


def parse_shots(value: str):
    if value == "exact":
        return "exact"
    try:
        shots = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("shots must be 'exact' or a positive integer") from None
    if shots < 1:
        raise argparse.ArgumentTypeError("shots must be 'exact' or a positive integer")
    return shots


# ---------------------------------------------------------------------------
# run configuration


@dataclass
class RunConfig:
    schema: str
    data: str
    out: str
    training: TrainingConfig = field(default_factory=TrainingConfig)
    checkpoint_every: int = 100

    def to_dict(self) -> dict:
        d = asdict(self)
        d["training"] = self.training.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(d["schema"], d["data"], d["out"], TrainingConfig.from_dict(d["training"]),
                   d.get("checkpoint_every", 100))


def run_training(run: RunConfig, resume: bool = False) -> Checkpoint:
    """Train one run into ``run.out``: config.json, schema.json, checkpoint.json, run_log.jsonl."""
    out = Path(run.out)
    schema = load_schema(run.schema).with_mode(run.training.mode)
    table, _ = load_training_table(run.data, schema)
    indices = encode_indices(table, schema, build_layout(schema))
    ckpt_path, log_path = out / "checkpoint.json", out / "run_log.jsonl"
    previous = None
    if resume:
        if not ckpt_path.is_file():
            raise UsageError(f"nothing to resume: {ckpt_path} does not exist")
        previous = Checkpoint.load(ckpt_path)
        if previous.schema.digest() != schema.digest():
            raise UsageError("checkpoint was trained on a different schema")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", run.to_dict())
    save_schema(schema, out / "schema.json")
    if previous is None:
        log_path.write_text("", encoding="utf-8")
    return train(
        indices, schema, run.training, resume=previous, log_path=log_path,
        checkpoint_path=ckpt_path, checkpoint_every=run.checkpoint_every,
    )


def evaluate_run(run_dir: Path, real: pd.DataFrame, rows: int, seed: int, targets=()) -> dict:
    ckpt = Checkpoint.load(run_dir / "checkpoint.json")
    synth = generate(ckpt, rows, seed)
    report = overall_score(real, synth, ckpt.schema, downstream_targets=targets, seed=seed)
    out = report.to_dict()
    out.update(best_epoch=ckpt.best_epoch, best_kl=ckpt.best_kl, num_params=ckpt.circuit.num_params)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(args) -> int:
    numeric = parse_numeric_decl(args.numeric)
    categorical = list(args.categorical or [])
    if not numeric and not categorical:
        raise UsageError("declare at least one feature with --numeric or --categorical")
    overlap = set(numeric) & set(categorical)
    if overlap:
        raise UsageError(f"column(s) declared both numeric and categorical: {sorted(overlap)}")
    raw = read_csv(args.data)
    table, dropped = clean_table(raw, numeric, categorical, strict=args.strict)
    schema = infer_schema(table, numeric, categorical, args.mode)
    layout = build_layout(schema)
    out = Path(args.out) if args.out else default_out("ingest")
    out.mkdir(parents=True, exist_ok=True)
    save_schema(schema, out / "schema.json")
    indices = encode_indices(table, schema, layout)
    n = layout.num_qubits
    pd.DataFrame({"index": indices, "bits": [format(int(i), f"0{n}b") for i in indices]}).to_csv(
        out / "encoded.csv", index=False)
    print(f"rows read: {len(raw)}")
    print(f"rows dropped: {len(dropped)}" + (f" (data rows {_rows(dropped)})" if dropped else ""))
    print(f"layout: {layout.label} {layout.mode}, {n} qubits")
    print(f"wrote {out / 'schema.json'} and {out / 'encoded.csv'}")
    return EXIT_OK


def _training_config(args, mode_default="boolean") -> TrainingConfig:
    return TrainingConfig(
        depth=args.depth, batch_fraction=args.batch_fraction, eta_g=args.eta_g, eta_d=args.eta_d,
        epochs=args.epochs, disc_steps=args.disc_steps, seed=args.seed, mode=args.mode or mode_default,
        hidden_width=args.hidden_width, shots=args.shots, init=args.init, init_noise=args.init_noise,
        disc_input=args.disc_input,
    )


def cmd_train(args) -> int:
    if args.config:
        run = RunConfig.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
    else:
        if not args.schema or not args.data:
            raise UsageError("train needs --schema and --data (or --config)")
        schema_mode = load_schema(args.schema).mode
        out = args.out or str(default_out("train"))
        run = RunConfig(str(args.schema), str(args.data), out, _training_config(args, schema_mode),
                        args.checkpoint_every)
    ckpt = run_training(run, resume=args.resume)
    print(f"trained {ckpt.epoch} epochs on {ckpt.layout.label}; "
          f"best epoch {ckpt.best_epoch}, KL {ckpt.best_kl:.6f}; wrote {run.out}")
    return EXIT_OK


def _checkpoint_path(path) -> Path:
    path = Path(path)
    if path.is_dir():
        path = path / "checkpoint.json"
    if not path.is_file():
        raise UsageError(f"no checkpoint at {path}")
    return path


def cmd_generate(args) -> int:
    ckpt = Checkpoint.load(_checkpoint_path(args.checkpoint))
    if args.rows < 0:
        raise UsageError("--rows must be >= 0")
    frame = generate(ckpt, args.rows, args.seed, use_best=not args.last)
    out = Path(args.out) if args.out else default_out("synthetic.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)
    print(f"wrote {len(frame)} rows to {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    schema = load_schema(args.schema)
    names = [f.name for f in schema.features]
    real, _ = load_training_table(args.real, schema)
    synth_raw = read_csv(args.synth) if Path(args.synth).is_file() else None
    if synth_raw is None:
        raise UsageError(f"no such file: {args.synth}")
    synth, _ = clean_table(synth_raw, [f.name for f in schema.features if f.is_numeric],
                           [f.name for f in schema.features if not f.is_numeric])
    report = overall_score(real[names], synth[names], schema, downstream_targets=args.target or (), seed=args.seed)
    print(report.format())
    if args.out:
        _write_json(Path(args.out), report.to_dict())
    return EXIT_OK


def cmd_inspect(args) -> int:
    if args.schema:
        schema = load_schema(args.schema)
        layout = build_layout(schema, args.mode or schema.mode)
    elif args.layout:
        layout = RegisterLayout.from_label(args.layout, args.mode or "non-boolean")
    else:
        raise UsageError("inspect-circuit needs --schema or --layout")
    print(format_circuit(build_circuit(layout, args.depth)))
    return EXIT_OK


def grid_cells(depths, batch_fractions, eta_gs, eta_ds, seeds):
    return [
        dict(depth=d, batch_fraction=b, eta_g=g, eta_d=e, seed=s)
        for d, b, g, e, s in itertools.product(depths, batch_fractions, eta_gs, eta_ds, seeds)
    ]


def cell_name(cell: dict) -> str:
    return "depth{depth}_batch{batch_fraction}_etag{eta_g}_etad{eta_d}_seed{seed}".format(**cell)


def _run_cell(job):
    run, eval_rows = job
    try:
        run_training(run)
        real, _ = load_training_table(run.data, load_schema(run.schema))
        metrics = evaluate_run(Path(run.out), real, eval_rows or len(real), run.training.seed)
        _write_json(Path(run.out) / "metrics.json", metrics)
        return run.out, metrics["overall"], None
    except TabQGANError as err:
        return run.out, None, str(err)


def cmd_grid(args) -> int:
    cells = grid_cells(args.depths, args.batch_fractions, args.eta_gs, args.eta_ds, args.seeds)
    root = Path(args.out) if args.out else default_out("grid")
    if args.dry_run:
        for cell in cells:
            print(cell_name(cell))
        print(f"{len(cells)} cells")
        return EXIT_OK
    if not args.schema or not args.data:
        raise UsageError("grid needs --schema and --data")
    schema = load_schema(args.schema)
    mode = args.mode or schema.mode
    jobs = []
    for cell in cells:
        config = TrainingConfig(epochs=args.epochs, mode=mode, shots=args.shots,
                                hidden_width=args.hidden_width, init=args.init, init_noise=args.init_noise,
                                disc_input=args.disc_input, **cell)
        jobs.append((RunConfig(str(args.schema), str(args.data), str(root / cell_name(cell)), config,
                               args.checkpoint_every), args.eval_rows))
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(job) for job in jobs]
    failed = 0
    summary = []
    for out, overall, error in results:
        summary.append({"run": Path(out).name, "overall": overall, "error": error})
        if error:
            failed += 1
            print(f"FAILED {Path(out).name}: {error}", file=sys.stderr)
    _write_json(root / "summary.json", summary)
    print(f"{len(results) - failed}/{len(results)} cells finished; summary in {root / 'summary.json'}")
    return EXIT_RUNTIME if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_training_flags(p, grid=False):
    if not grid:
        p.add_argument("--depth", type=int, default=1)
        p.add_argument("--batch-fraction", type=float, default=0.1)
        p.add_argument("--eta-g", type=float, default=0.1)
        p.add_argument("--eta-d", type=float, default=0.1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--disc-steps", type=int, default=1)
    p.add_argument("--epochs", type=int, default=3000)
    p.add_argument("--mode", choices=MODES, default=None, help="defaults to the schema's mode")
    p.add_argument("--shots", type=parse_shots, default="exact", help="'exact' or a shot count")
    p.add_argument("--hidden-width", type=lambda v: v if v == "data" else int(v), default="data")
    p.add_argument("--init", choices=INIT_SCHEMES, default="marginal",
                   help="generator start: data marginals, uniform state, or uniform(-pi, pi) angles")
    p.add_argument("--init-noise", type=float, default=0.1)
    p.add_argument("--disc-input", choices=DISC_INPUTS, default="bits",
                   help="numeric features as binary digits or as one scaled value")
    p.add_argument("--checkpoint-every", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tabqgan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="freeze a schema from a CSV and encode its rows")
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--numeric", nargs="*", metavar="NAME=QUBITS")
    p.add_argument("--categorical", nargs="*", metavar="NAME")
    p.add_argument("--mode", choices=MODES, default="boolean")
    p.add_argument("--strict", action="store_true", help="fail on unparseable rows instead of dropping them")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}/ingest)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a generator")
    p.add_argument("--schema")
    p.add_argument("--data")
    p.add_argument("--out", help=f"run directory (default ${OUT_ENV}/train)")
    p.add_argument("--config", help="re-run a stored config.json")
    p.add_argument("--resume", action="store_true", help="continue from the run directory's checkpoint")
    _add_training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample synthetic rows from a checkpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint.json or a run directory")
    p.add_argument("-n", "--rows", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--last", action="store_true", help="use final instead of best-epoch parameters")
    p.add_argument("--out", help=f"output CSV (default ${OUT_ENV}/synthetic.csv)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score a synthetic CSV against real data")
    p.add_argument("--schema", required=True)
    p.add_argument("--real", "--data", dest="real", required=True)
    p.add_argument("--synth", required=True)
    p.add_argument("--target", nargs="*", help="columns to compute downstream scores for")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON report path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect-circuit", help="print the gate listing and per-layer counts")
    p.add_argument("--schema")
    p.add_argument("--layout", help='register label such as "[n5,c3,c2]"')
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--depth", type=int, default=1)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("grid", help="run the hyperparameter grid, one directory per cell")
    p.add_argument("--schema")
    p.add_argument("--data")
    p.add_argument("--out", help=f"grid root (default ${OUT_ENV}/grid)")
    p.add_argument("--depths", type=int, nargs="+", default=list(GRID_DEPTHS))
    p.add_argument("--batch-fractions", type=float, nargs="+", default=list(GRID_BATCH_FRACTIONS))
    p.add_argument("--eta-gs", type=float, nargs="+", default=list(GRID_LEARNING_RATES))
    p.add_argument("--eta-ds", type=float, nargs="+", default=list(GRID_LEARNING_RATES))
    p.add_argument("--seeds", type=int, nargs="+", default=list(GRID_SEEDS))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--eval-rows", type=int, default=EVAL_ROWS, help="synthetic rows per evaluation")
    p.add_argument("--dry-run", action="store_true", help="list the cells without running them")
    _add_training_flags(p, grid=True)
    p.set_defaults(func=cmd_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError, SchemaError, IngestionError, FileNotFoundError) as err:
        print(f"tabqgan {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (TabQGANError, OSError) as err:
        print(f"tabqgan {args.command}: failed: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
