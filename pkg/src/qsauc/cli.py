"""Command-line interface.

Commands: synth, split, train, predict, cv, diag, bench. Settings resolve in
three layers: built-in defaults, then a key=value config file (--config),
then explicit flags. Every command that writes files also writes
config.resolved.txt next to them recording the fully resolved settings, and
all files are written atomically (temp file + rename). Data outputs carry no
timestamps or timing columns, so reruns are byte-identical; wall-clock goes
to stdout or bench tables only.

Exit codes: 0 when the command produced its outputs, 2 for usage, config,
or validation problems, 1 for runtime failures. Failures print a single
machine-readable line: error code=E_XXX msg="...".
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import backend, data as dmod, model as mmod
from .errors import (
    ConfigError,
    DimensionMismatchError,
    InvalidParameterError,
    ModelFormatError,
    ParseError,
    QsaucError,
    ScheduleError,
    SingleClassError,
)
from .evaluation import CvGrid, auc, cross_validate
from .rff import feature_scale
from .trainer import Hyperparams, coefficient_schedule_check, train

_REQUIRED = object()
_ALIASES = {"lambda": "lam"}


def atomic_write(path: str, text: str) -> None:
    """Write text so the target never exists half-written."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qsauc-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="ascii") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_config(path: str) -> dict:
    """key=value lines; '#' starts a comment; keys are case-insensitive."""
    cfg = {}
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for line_no, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {body!r}")
        key = key.strip().lower()
        cfg[_ALIASES.get(key, key)] = value.strip()
    return cfg


def _to_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _convert(typ, raw: str, key: str):
    try:
        if typ is bool:
            return _to_bool(raw)
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def resolve_settings(args, schema: dict) -> dict:
    """Merge CLI > config file > schema defaults; reject unknown config keys."""
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(cfg) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for key, (typ, default) in schema.items():
        val = getattr(args, key, None)
        if val is None and key in cfg:
            val = _convert(typ, cfg[key], key)
        if val is None:
            val = default
        if val is _REQUIRED:
            raise ConfigError(f"missing required setting: {key}")
        out[key] = val
    return out


def write_resolved(outdir: str, command: str, resolved: dict) -> None:
    lines = [f"command = {command}"]
    for key in sorted(resolved):
        val = resolved[key]
        if isinstance(val, float):
            val = repr(val)
        lines.append(f"{key} = {val}")
    atomic_write(os.path.join(outdir, "config.resolved.txt"), "\n".join(lines) + "\n")


_HP_SCHEMA = {
    "gamma": (float, 0.5),
    "lam": (float, 0.25),
    "theta": (float, 6.0),
    "sigma": (float, 1.0),
    "feature_count": (int, 128),
    "iterations": (int, 1000),
    "batch_p": (int, 16),
    "batch_n": (int, 16),
    "batch_u": (int, 16),
    "master_seed": (int, 0),
    "eval_cache": (str, "auto"),
    "unsafe_schedule": (bool, False),
}


def _hp_from(resolved: dict) -> Hyperparams:
    return Hyperparams(
        gamma=resolved["gamma"],
        lam=resolved["lam"],
        theta=resolved["theta"],
        sigma=resolved["sigma"],
        feature_count=resolved["feature_count"],
        iterations=resolved["iterations"],
        batch_p=resolved["batch_p"],
        batch_n=resolved["batch_n"],
        batch_u=resolved["batch_u"],
        master_seed=resolved["master_seed"],
        unsafe_schedule=resolved["unsafe_schedule"],
    )


def _add_hp_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--feature-count", dest="feature_count", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--batch-p", dest="batch_p", type=int)
    p.add_argument("--batch-n", dest="batch_n", type=int)
    p.add_argument("--batch-u", dest="batch_u", type=int)
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.add_argument("--eval-cache", dest="eval_cache", choices=("auto", "on", "off"))
    p.add_argument(
        "--unsafe-schedule",
        dest="unsafe_schedule",
        action="store_const",
        const=True,
    )


def _load_normalized(path: str, norm_table_path: str | None) -> dmod.LabeledDataset:
    ds = dmod.read_libsvm(path)
    if norm_table_path:
        table = dmod.read_norm_table(norm_table_path)
        ds = dmod.apply_normalization(ds, table)
    return ds


def _pools_from_args(args, resolved) -> dmod.SemiSupervisedDataset:
    has_labeled = args.labeled is not None
    has_manifest = args.data is not None or args.manifest is not None
    if has_labeled == has_manifest:
        raise ConfigError("pass either --labeled [--unlabeled] or --data with --manifest")
    if has_labeled:
        lab = _load_normalized(args.labeled, args.norm_table)
        x, y = dmod.to_dense(lab)
        dim = lab.dim
        if args.unlabeled:
            unl = _load_normalized(args.unlabeled, args.norm_table)
            x_u, _ = dmod.to_dense(unl)
            dim = max(dim, unl.dim)
            if unl.dim < dim:
                x_u = np.hstack([x_u, np.zeros((x_u.shape[0], dim - unl.dim))])
            if lab.dim < dim:
                x = np.hstack([x, np.zeros((x.shape[0], dim - lab.dim))])
        else:
            x_u = np.zeros((0, dim))
        return dmod.SemiSupervisedDataset(
            positives=x[y > 0],
            negatives=x[y < 0],
            unlabeled=x_u,
            dim=dim,
            provenance=f"labeled={args.labeled} unlabeled={args.unlabeled}",
        )
    if args.data is None or args.manifest is None:
        raise ConfigError("--data and --manifest must be passed together")
    ds = _load_normalized(args.data, args.norm_table)
    man = dmod.read_manifest(args.manifest)
    x, y = dmod.to_dense(ds)
    pos = np.asarray(man["labeled_pos"], dtype=np.int64)
    neg = np.asarray(man["labeled_neg"], dtype=np.int64)
    unl = np.asarray(man["unlabeled"], dtype=np.int64)
    for idx in (pos, neg, unl):
        if len(idx) and (idx.min() < 0 or idx.max() >= len(y)):
            raise ConfigError("manifest indices outside the data file")
    if np.any(y[pos] <= 0) or np.any(y[neg] >= 0):
        raise ConfigError("manifest labeled indices disagree with file labels")
    return dmod.SemiSupervisedDataset(
        positives=x[pos],
        negatives=x[neg],
        unlabeled=x[unl],
        dim=ds.dim,
        provenance=f"data={args.data} manifest={args.manifest}",
    )


def _format_trace(trace) -> str:
    lines = ["iteration eta batch_risk"]
    for i in range(len(trace.iterations)):
        lines.append(
            f"{trace.iterations[i]} {float(trace.eta[i])!r} {float(trace.batch_risk[i])!r}"
        )
    return "\n".join(lines) + "\n"


def cmd_train(args) -> int:
    schema = dict(_HP_SCHEMA)
    resolved = resolve_settings(args, schema)
    pools = _pools_from_args(args, resolved)
    hp = _hp_from(resolved)
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    mdl, trace = train(pools, hp, eval_cache=resolved["eval_cache"])
    wall = time.perf_counter() - t0
    atomic_write(os.path.join(args.out, "model.txt"), mmod.dumps(mdl))
    atomic_write(os.path.join(args.out, "trace.txt"), _format_trace(trace))
    resolved["backend"] = backend.active_backend()
    write_resolved(args.out, "train", resolved)
    print(
        f"trained entries={len(mdl)} pools=({pools.positives.shape[0]},"
        f"{pools.negatives.shape[0]},{pools.unlabeled.shape[0]}) "
        f"wall={wall:.2f}s out={args.out}"
    )
    return 0


def cmd_predict(args) -> int:
    mdl = mmod.load(args.model)
    ds = _load_normalized(args.data, args.norm_table)
    x, y = dmod.to_dense(ds)
    if ds.dim < mdl.dim:
        x = np.hstack([x, np.zeros((x.shape[0], mdl.dim - ds.dim))])
    scores = mmod.predict_batch(mdl, x)
    os.makedirs(args.out, exist_ok=True)
    atomic_write(
        os.path.join(args.out, "scores.txt"),
        "".join(f"{float(s)!r}\n" for s in scores),
    )
    write_resolved(
        args.out,
        "predict",
        {"model": args.model, "data": args.data, "norm_table": args.norm_table},
    )
    if len(np.unique(y)) == 2:
        print(f"auc {auc(scores, y)!r}")
    print(f"scored {len(scores)} points out={args.out}")
    return 0


def _parse_grid_list(raw: str | None, fallback: tuple) -> tuple:
    if raw is None:
        return fallback
    try:
        return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"bad grid list {raw!r}") from None


def cmd_cv(args) -> int:
    schema = dict(_HP_SCHEMA)
    schema["seed"] = (int, 0)
    schema["folds"] = (int, 5)
    resolved = resolve_settings(args, schema)
    lab = _load_normalized(args.labeled, args.norm_table)
    x, y = dmod.to_dense(lab)
    unlabeled = None
    if args.unlabeled:
        unl = _load_normalized(args.unlabeled, args.norm_table)
        x_u, _ = dmod.to_dense(unl)
        if unl.dim != lab.dim:
            raise DimensionMismatchError(lab.dim, unl.dim, "unlabeled pool")
        unlabeled = x_u
    grid = CvGrid(
        lambdas=_parse_grid_list(args.lambdas, CvGrid.lambdas),
        sigmas=_parse_grid_list(args.sigmas, CvGrid.sigmas),
        gammas=_parse_grid_list(args.gammas, CvGrid.gammas),
        folds=resolved["folds"],
    )
    base = _hp_from(resolved)
    best, rows = cross_validate(
        x,
        y,
        grid,
        base,
        resolved["seed"],
        unlabeled=unlabeled,
        eval_cache=resolved["eval_cache"],
    )
    os.makedirs(args.out, exist_ok=True)
    table = ["gamma lambda sigma theta mean_auc " + " ".join(
        f"fold{k}" for k in range(grid.folds)
    )]
    for row in rows:
        table.append(
            f"{row['gamma']!r} {row['lam']!r} {row['sigma']!r} {row['theta']!r} "
            f"{row['mean_auc']!r} " + " ".join(repr(a) for a in row["fold_aucs"])
        )
    atomic_write(os.path.join(args.out, "cv_table.txt"), "\n".join(table) + "\n")
    best_lines = [
        f"gamma = {best.gamma!r}",
        f"lambda = {best.lam!r}",
        f"theta = {best.theta!r}",
        f"sigma = {best.sigma!r}",
        f"feature_count = {best.feature_count}",
        f"iterations = {best.iterations}",
    ]
    atomic_write(os.path.join(args.out, "best_config.txt"), "\n".join(best_lines) + "\n")
    write_resolved(args.out, "cv", resolved)
    best_mean = max(r["mean_auc"] for r in rows)
    print(
        f"cv cells={len(rows)} best auc={best_mean!r} "
        f"gamma={best.gamma!r} lambda={best.lam!r} sigma={best.sigma!r}"
    )
    return 0


def cmd_synth(args) -> int:
    schema = {
        "n_pos": (int, 50),
        "n_neg": (int, 50),
        "n_unlabeled": (int, 400),
        "n_test": (int, 1000),
        "dim": (int, 2),
        "separation": (float, 2.0),
        "prior": (float, 0.5),
        "seed": (int, 0),
    }
    resolved = resolve_settings(args, schema)
    pools, test_x, test_y, info = dmod.synth_gaussian(
        resolved["n_pos"],
        resolved["n_neg"],
        resolved["n_unlabeled"],
        resolved["dim"],
        resolved["separation"],
        resolved["prior"],
        resolved["seed"],
        n_test=resolved["n_test"],
    )
    os.makedirs(args.out, exist_ok=True)
    n_p = pools.positives.shape[0]
    n_n = pools.negatives.shape[0]
    lab = dmod.from_dense(
        np.vstack([pools.positives, pools.negatives]),
        np.concatenate([np.ones(n_p), -np.ones(n_n)]),
    )
    atomic_write(os.path.join(args.out, "labeled.libsvm"), dmod.serialize_libsvm(lab))
    placeholder = np.ones(pools.unlabeled.shape[0])
    atomic_write(
        os.path.join(args.out, "unlabeled.libsvm"),
        dmod.serialize_libsvm(dmod.from_dense(pools.unlabeled, placeholder)),
    )
    atomic_write(
        os.path.join(args.out, "truth_unlabeled.libsvm"),
        dmod.serialize_libsvm(
            dmod.from_dense(pools.unlabeled, info["unlabeled_labels"])
        ),
    )
    atomic_write(
        os.path.join(args.out, "test.libsvm"),
        dmod.serialize_libsvm(dmod.from_dense(test_x, test_y)),
    )
    write_resolved(args.out, "synth", resolved)
    print(
        f"synth wrote pools=({n_p},{n_n},{pools.unlabeled.shape[0]}) "
        f"test={len(test_y)} out={args.out}"
    )
    return 0


def cmd_split(args) -> int:
    schema = {
        "n_labeled": (int, _REQUIRED),
        "seed": (int, 0),
        "test_fraction": (float, 0.25),
        "normalize": (bool, True),
    }
    resolved = resolve_settings(args, schema)
    ds = dmod.read_libsvm(args.data)
    os.makedirs(args.out, exist_ok=True)
    if resolved["normalize"]:
        ds_out, table = dmod.normalize_unit_interval(ds)
        buf = []
        dmod.write_norm_table(table, _ListWriter(buf))
        atomic_write(os.path.join(args.out, "norm_table.txt"), "".join(buf))
    else:
        ds_out = ds
    split = dmod.split_semi(
        ds_out,
        resolved["n_labeled"],
        resolved["seed"],
        test_fraction=resolved["test_fraction"],
    )
    atomic_write(os.path.join(args.out, "data.libsvm"), dmod.serialize_libsvm(ds_out))
    buf = []
    dmod.write_manifest(split.manifest, _ListWriter(buf))
    atomic_write(os.path.join(args.out, "manifest.txt"), "".join(buf))
    atomic_write(
        os.path.join(args.out, "test.libsvm"),
        dmod.serialize_libsvm(dmod.from_dense(split.test_x, split.test_y)),
    )
    write_resolved(args.out, "split", resolved)
    print(
        f"split pools=({split.train.positives.shape[0]},"
        f"{split.train.negatives.shape[0]},{split.train.unlabeled.shape[0]}) "
        f"test={len(split.test_y)} out={args.out}"
    )
    return 0


class _ListWriter:
    def __init__(self, buf):
        self.buf = buf

    def write(self, text):
        self.buf.append(text)


def cmd_diag(args) -> int:
    did_anything = False
    if args.model:
        mdl = mmod.load(args.model)
        alphas = mdl.alphas()
        print(f"model entries={len(mdl)} dim={mdl.dim} feature_count={mdl.feature_count}")
        print(f"model sigma={mdl.sigma!r} master_seed={mdl.master_seed}")
        if len(mdl):
            norms = np.sqrt((alphas * alphas).sum(axis=1))
            print(
                f"model max_scale={float(np.max(np.abs(mdl.scales)))!r} "
                f"max_alpha_norm={float(norms.max())!r} "
                f"sum_alpha_norm_sq={float((norms * norms).sum())!r}"
            )
        did_anything = True
    if args.theta is not None or args.lam is not None or args.t is not None:
        if args.theta is None or args.lam is None or args.t is None:
            raise ConfigError("schedule check needs --theta, --lambda, and --t together")
        rep = coefficient_schedule_check(args.theta, args.lam, args.t, unsafe=args.unsafe)
        print(
            f"schedule theta={rep.theta!r} lambda={rep.lam!r} t={rep.t} "
            f"max_abs={rep.max_abs!r} max_bound={rep.max_bound!r} "
            f"sum_sq={rep.sum_sq!r} sum_bound={rep.sum_bound!r} "
            f"leading_zeros={rep.leading_zeros} passed={'yes' if rep.passed else 'no'}"
        )
        did_anything = True
    if not did_anything:
        raise ConfigError("diag needs --model and/or a schedule check (--theta --lambda --t)")
    return 0


def _time_call(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_bench(args) -> int:
    schema = {
        "dim": (int, 2),
        "feature_count": (int, 256),
        "entries": (int, 2000),
        "points": (int, 64),
        "repeats": (int, 3),
        "seed": (int, 0),
    }
    resolved = resolve_settings(args, schema)
    d = resolved["dim"]
    count = resolved["feature_count"]
    t = resolved["entries"]
    n = resolved["points"]
    stream = np.random.default_rng(resolved["seed"])
    wc = stream.standard_normal((t, d, count))
    raws = stream.standard_normal((t, 2 * count))
    scales = stream.uniform(0.1, 1.0, t)
    xs = stream.standard_normal((n, d))
    inv = feature_scale(count)
    lines = [
        f"backend bench dim={d} feature_count={count} entries={t} points={n}",
        "",
        f"{'kernel':<16} {'backend':<8} {'seconds':>10} {'ns/pair':>10}",
    ]
    results = {}
    for name in ("numba", "numpy"):
        try:
            with backend.use_backend(name):
                backend.warm_up(d, count)
                acc = np.zeros(n)
                sec_score = _time_call(
                    lambda: backend.score_accum(wc, raws, scales, xs, acc),
                    resolved["repeats"],
                )
                sec_feat = _time_call(
                    lambda: backend.feature_block(xs, wc[0], inv), resolved["repeats"]
                )
        except QsaucError as exc:
            lines.append(f"{'-':<16} {name:<8} unavailable: {exc}")
            continue
        pairs_score = float(t) * n * count
        pairs_feat = float(n) * count
        results[name] = sec_score
        lines.append(
            f"{'score_accum':<16} {name:<8} {sec_score:>10.4f} "
            f"{1e9 * sec_score / pairs_score:>10.2f}"
        )
        lines.append(
            f"{'feature_block':<16} {name:<8} {sec_feat:>10.4f} "
            f"{1e9 * sec_feat / pairs_feat:>10.2f}"
        )
    if len(results) == 2:
        lines.append("")
        lines.append(
            f"speedup numba/numpy on score_accum: "
            f"{results['numpy'] / results['numba']:.1f}x"
        )
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        atomic_write(os.path.join(args.out, "bench.txt"), text)
        write_resolved(args.out, "bench", resolved)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsauc",
        description="AUC maximization from positive, negative, and unlabeled data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from pools")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--labeled")
    p.add_argument("--unlabeled")
    p.add_argument("--data")
    p.add_argument("--manifest")
    p.add_argument("--norm-table", dest="norm_table")
    _add_hp_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score points with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--norm-table", dest="norm_table")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="cross-validated grid search")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--labeled", required=True)
    p.add_argument("--unlabeled")
    p.add_argument("--norm-table", dest="norm_table")
    p.add_argument("--lambdas")
    p.add_argument("--sigmas")
    p.add_argument("--gammas")
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    _add_hp_flags(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("synth", help="generate the two-Gaussian task")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--n-pos", dest="n_pos", type=int)
    p.add_argument("--n-neg", dest="n_neg", type=int)
    p.add_argument("--n-unlabeled", dest="n_unlabeled", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--separation", type=float)
    p.add_argument("--prior", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="carve a labeled file into P/N/U pools + test")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-labeled", dest="n_labeled", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument(
        "--no-normalize", dest="normalize", action="store_const", const=False
    )
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("diag", help="inspect a model file or a decay schedule")
    p.add_argument("--model")
    p.add_argument("--theta", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--t", type=int)
    p.add_argument("--unsafe", action="store_true")
    p.set_defaults(func=cmd_diag)

    p = sub.add_parser("bench", help="compare the numba and numpy backends")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--dim", type=int)
    p.add_argument("--feature-count", dest="feature_count", type=int)
    p.add_argument("--entries", type=int)
    p.add_argument("--points", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_bench)

    return parser


_USAGE_ERRORS = (
    ConfigError,
    InvalidParameterError,
    ParseError,
    ModelFormatError,
    ScheduleError,
    DimensionMismatchError,
    SingleClassError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f'error code={exc.code} msg="{exc}"', file=sys.stderr)
        return 2
    except QsaucError as exc:
        print(f'error code={exc.code} msg="{exc}"', file=sys.stderr)
        return 1
    except OSError as exc:
        print(f'error code=E_IO msg="{exc}"', file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
