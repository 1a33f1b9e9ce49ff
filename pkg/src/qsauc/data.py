"""Datasets: LIBSVM text parsing, normalization, semi-supervised splits,
and the synthetic Gaussian task.

The LIBSVM dialect is the strict one: `label idx:val idx:val ...` with
labels +1/-1 (bare `1` accepted), 1-based strictly increasing indices,
finite values. Blank lines are skipped and `#` starts a comment that runs
to end of line. Everything else malformed raises ParseError naming the
line and token; nothing is skipped or coerced. Unstored indices are
semantic zeros, and they participate in normalization like any other value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import InvalidParameterError, ParseError, SplitError

Row = tuple[int, dict[int, float]]


@dataclass
class LabeledDataset:
    rows: list[Row]
    dim: int

    def __len__(self) -> int:
        return len(self.rows)

    def labels(self) -> np.ndarray:
        return np.array([lab for lab, _ in self.rows], dtype=np.int64)


@dataclass
class SemiSupervisedDataset:
    positives: np.ndarray  # (n_p, dim)
    negatives: np.ndarray  # (n_n, dim)
    unlabeled: np.ndarray  # (n_u, dim)
    dim: int
    provenance: str = ""


_LABELS = {"+1": 1, "1": 1, "-1": -1}


def parse_libsvm(text: str) -> LabeledDataset:
    rows: list[Row] = []
    dim = 0
    for line_no, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        toks = stripped.split()
        label = _LABELS.get(toks[0])
        if label is None:
            raise ParseError(line_no, toks[0], "label must be +1 or -1")
        feats: dict[int, float] = {}
        prev = 0
        for tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep or not idx_s or not val_s:
                raise ParseError(line_no, tok, "expected index:value")
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(line_no, tok, "bad feature index") from None
            if idx < 1:
                raise ParseError(line_no, tok, "feature index must be >= 1")
            if idx <= prev:
                raise ParseError(line_no, tok, "feature indices must increase")
            try:
                val = float(val_s)
            except ValueError:
                raise ParseError(line_no, tok, "bad feature value") from None
            if not math.isfinite(val):
                raise ParseError(line_no, tok, "feature value must be finite")
            feats[idx] = val
            prev = idx
        rows.append((label, feats))
        dim = max(dim, prev)
    return LabeledDataset(rows=rows, dim=dim)


def read_libsvm(path) -> LabeledDataset:
    with open(path, "r", encoding="ascii") as fh:
        return parse_libsvm(fh.read())


def serialize_libsvm(ds: LabeledDataset) -> str:
    out = []
    for label, feats in ds.rows:
        parts = ["+1" if label > 0 else "-1"]
        parts.extend(f"{j}:{feats[j]!r}" for j in sorted(feats))
        out.append(" ".join(parts))
    return "\n".join(out) + ("\n" if out else "")


def to_dense(ds: LabeledDataset):
    """(X, y) with implicit zeros filled in."""
    x = np.zeros((len(ds.rows), ds.dim))
    y = np.empty(len(ds.rows), dtype=np.int64)
    for i, (label, feats) in enumerate(ds.rows):
        y[i] = label
        for j, v in feats.items():
            x[i, j - 1] = v
    return x, y


def from_dense(x: np.ndarray, y: np.ndarray) -> LabeledDataset:
    x = np.asarray(x, dtype=np.float64)
    rows: list[Row] = []
    for i in range(x.shape[0]):
        feats = {j + 1: float(v) for j, v in enumerate(x[i]) if v != 0.0}
        rows.append((1 if y[i] > 0 else -1, feats))
    return LabeledDataset(rows=rows, dim=x.shape[1])


def normalize_unit_interval(ds: LabeledDataset):
    """Rescale every feature to [0, 1] over this dataset.

    Returns (normalized dataset, table) where table maps feature index to
    the (lo, hi) it was scaled by. Constant features (hi == lo, including
    all-implicit-zero columns) map to 0. Implicit zeros count toward lo/hi.
    """
    if ds.dim == 0:
        return LabeledDataset(rows=list(ds.rows), dim=0), {}
    x, y = to_dense(ds)
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    table = {j + 1: (float(lo[j]), float(hi[j])) for j in range(ds.dim)}
    return apply_normalization(ds, table), table


def apply_normalization(ds: LabeledDataset, table: dict) -> LabeledDataset:
    """Apply a stored normalization to (possibly new) data.

    Values land in [0, 1] by clamping, so points outside the fitted range
    stay finite and bounded. Features beyond the table's width are an error:
    the table defines the model's input space.
    """
    width = max(table) if table else 0
    if ds.dim > width:
        raise InvalidParameterError(
            f"data has feature index {ds.dim} but normalization table covers 1..{width}"
        )
    rows: list[Row] = []
    for label, feats in ds.rows:
        out: dict[int, float] = {}
        for j in range(1, width + 1):
            lo, hi = table[j]
            if hi == lo:
                continue
            v = (feats.get(j, 0.0) - lo) / (hi - lo)
            v = min(1.0, max(0.0, v))
            if v != 0.0:
                out[j] = v
        rows.append((label, out))
    return LabeledDataset(rows=rows, dim=width)


_NORM_MAGIC = "qsauc-norm 1"


def write_norm_table(table: dict, sink) -> None:
    lines = [_NORM_MAGIC, f"features {max(table) if table else 0}"]
    for j in sorted(table):
        lo, hi = table[j]
        lines.append(f"{j} {float(lo).hex()} {float(hi).hex()}")
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="ascii") as fh:
            fh.write(text)


def read_norm_table(source) -> dict:
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != _NORM_MAGIC:
        raise ParseError(1, lines[0] if lines else "", "bad normalization header")
    parts = lines[1].split() if len(lines) > 1 else []
    if len(parts) != 2 or parts[0] != "features":
        raise ParseError(2, lines[1] if len(lines) > 1 else "", "expected 'features N'")
    width = int(parts[1])
    def bound(tok: str, k: int) -> float:
        # decimal or prefixed hex; bare hex digits would shadow decimals
        try:
            return float(tok)
        except ValueError:
            pass
        if tok.lstrip("+-")[:2].lower() == "0x":
            try:
                return float.fromhex(tok)
            except ValueError:
                pass
        raise ParseError(k, tok, "bad bound")

    table = {}
    for k, line in enumerate(lines[2:], 3):
        if not line.strip():
            continue
        toks = line.split()
        if len(toks) != 3:
            raise ParseError(k, line, "expected 'index lo hi'")
        table[int(toks[0])] = (bound(toks[1], k), bound(toks[2], k))
    if len(table) != width or (table and max(table) != width):
        raise ParseError(len(lines), "", f"expected {width} feature entries")
    return table


@dataclass
class SplitResult:
    train: SemiSupervisedDataset
    test_x: np.ndarray
    test_y: np.ndarray
    manifest: dict = field(default_factory=dict)


def split_semi(
    ds: LabeledDataset,
    n_labeled: int,
    seed: int,
    test_fraction: float = 0.25,
    max_retries: int = 100,
) -> SplitResult:
    """Carve a labeled dataset into P/N pools, an unlabeled pool, and a test set.

    Rows are shuffled; round(test_fraction * n) go to the test set; of the
    rest, n_labeled keep their labels (resampled up to max_retries times
    until both classes appear, then SplitError) and the remainder becomes
    the unlabeled pool with labels hidden. The manifest records original row
    indices of every part, so hidden labels stay recoverable.
    """
    n = len(ds.rows)
    if not (0.0 <= test_fraction < 1.0):
        raise InvalidParameterError(f"test_fraction must be in [0, 1), got {test_fraction}")
    n_test = int(round(n * test_fraction))
    if n_labeled < 2:
        raise InvalidParameterError("need n_labeled >= 2 (one per class)")
    if n_labeled > n - n_test:
        raise SplitError(
            f"n_labeled={n_labeled} exceeds the {n - n_test} non-test rows"
        )
    x, y = to_dense(ds)
    stream = rng.data_stream(seed)
    perm = stream.permutation(n)
    test_idx = perm[:n_test]
    rest = perm[n_test:]
    for _ in range(max_retries):
        lab_idx = rest[:n_labeled]
        if len(np.unique(y[lab_idx])) == 2:
            break
        rest = stream.permutation(rest)
    else:
        raise SplitError(
            f"could not draw both classes into {n_labeled} labeled rows "
            f"after {max_retries} attempts"
        )
    unl_idx = rest[n_labeled:]
    pos_idx = lab_idx[y[lab_idx] > 0]
    neg_idx = lab_idx[y[lab_idx] < 0]
    train = SemiSupervisedDataset(
        positives=x[pos_idx],
        negatives=x[neg_idx],
        unlabeled=x[unl_idx],
        dim=ds.dim,
        provenance=f"split seed={seed} n_labeled={n_labeled} test_fraction={test_fraction}",
    )
    manifest = {
        "seed": seed,
        "labeled_pos": pos_idx.tolist(),
        "labeled_neg": neg_idx.tolist(),
        "unlabeled": unl_idx.tolist(),
        "test": test_idx.tolist(),
    }
    return SplitResult(train=train, test_x=x[test_idx], test_y=y[test_idx], manifest=manifest)


_SPLIT_MAGIC = "qsauc-split 1"
_MANIFEST_SECTIONS = ("labeled_pos", "labeled_neg", "unlabeled", "test")


def write_manifest(manifest: dict, sink) -> None:
    lines = [_SPLIT_MAGIC, f"seed {manifest['seed']}"]
    for name in _MANIFEST_SECTIONS:
        lines.append(name + ": " + " ".join(str(i) for i in manifest[name]))
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="ascii") as fh:
            fh.write(text)


def read_manifest(source) -> dict:
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != _SPLIT_MAGIC:
        raise ParseError(1, lines[0] if lines else "", "bad manifest header")
    parts = lines[1].split() if len(lines) > 1 else []
    if len(parts) != 2 or parts[0] != "seed":
        raise ParseError(2, lines[1] if len(lines) > 1 else "", "expected 'seed N'")
    manifest: dict = {"seed": int(parts[1])}
    for k, name in enumerate(_MANIFEST_SECTIONS):
        line_no = 3 + k
        if line_no - 1 >= len(lines):
            raise ParseError(line_no, "", f"missing section {name}")
        head, sep, rest = lines[line_no - 1].partition(":")
        if head != name or not sep:
            raise ParseError(line_no, head, f"expected section {name}")
        manifest[name] = [int(tok) for tok in rest.split()]
    return manifest


def synth_gaussian(
    n_p: int,
    n_n: int,
    n_u: int,
    dim: int,
    separation: float,
    pi: float,
    seed: int,
    n_test: int = 1000,
):
    """Two unit-covariance Gaussians separated along the first axis.

    Positives at +separation/2 * e1, negatives at -separation/2 * e1;
    unlabeled and test points draw their (hidden) label from Bernoulli(pi)
    first. Returns (SemiSupervisedDataset, test_x, test_y, info); info keeps
    the hidden unlabeled labels and the class means for diagnostics.
    """
    if dim < 1:
        raise InvalidParameterError(f"dim must be >= 1, got {dim}")
    if not (0.0 < pi < 1.0):
        raise InvalidParameterError(f"pi must be in (0, 1), got {pi}")
    if separation < 0:
        raise InvalidParameterError(f"separation must be >= 0, got {separation}")
    if min(n_p, n_n, n_u, n_test) < 0:
        raise InvalidParameterError("counts must be >= 0")
    mu = np.zeros(dim)
    mu[0] = separation / 2.0
    stream = rng.data_stream(seed)
    pos = mu + stream.standard_normal((n_p, dim))
    neg = -mu + stream.standard_normal((n_n, dim))
    u_labels = np.where(stream.random(n_u) < pi, 1, -1)
    unl = np.where(u_labels[:, None] > 0, mu, -mu) + stream.standard_normal((n_u, dim))
    test_y = np.where(stream.random(n_test) < pi, 1, -1)
    test_x = np.where(test_y[:, None] > 0, mu, -mu) + stream.standard_normal(
        (n_test, dim)
    )
    train = SemiSupervisedDataset(
        positives=pos,
        negatives=neg,
        unlabeled=unl,
        dim=dim,
        provenance=f"synth seed={seed} separation={separation} pi={pi}",
    )
    info = {
        "mean_positive": mu,
        "mean_negative": -mu,
        "prior": pi,
        "unlabeled_labels": u_labels,
    }
    return train, test_x, test_y, info
