"""The trained model: a history of per-iteration coefficient vectors.

A model with t entries scores a point as

    f(x) = sqrt(1/D) * sum_{i=1..t} scale_i * <raw_i, [cos(W_i x); sin(W_i x)]>

summed in ascending i. Entry i's frequency matrix W_i is never stored; it is
regenerated from (master_seed, i), which is what keeps the model file small
and prediction aligned with what the trainer computed.

Coefficients are kept factored as alpha_i = scale_i * raw_i: the raw vector
is frozen when the entry is appended and every later regularization decay
multiplies the scalar scale only. The factored form is lossless (alphas()
materializes the products) and the scale-after-dot evaluation order above is
canonical: every evaluation path in the package (batch, single point,
cached, streamed) reduces to the same sequence of float operations, so they
agree bit-for-bit.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from . import backend, rng
from .errors import DimensionMismatchError, InvalidParameterError, ModelFormatError
from .rff import FrequencyBlock, feature_scale, sample_frequencies

_MAGIC = "qsauc-model 1"
# memory cap for the frequency blocks regenerated per prediction chunk
_CHUNK_BYTES = 64 << 20


@dataclass
class CoefficientHistory:
    dim: int
    feature_count: int
    sigma: float
    master_seed: int
    raws: np.ndarray  # (entries, 2*feature_count)
    scales: np.ndarray  # (entries,)

    def __len__(self) -> int:
        return self.raws.shape[0]

    def alphas(self) -> np.ndarray:
        """Materialized coefficient vectors alpha_i = scale_i * raw_i."""
        return self.raws * self.scales[:, None]

    def frequencies_for(self, iteration: int) -> FrequencyBlock:
        """The frequency block entry `iteration` (1-based) was built with."""
        if not (1 <= iteration <= len(self)):
            raise InvalidParameterError(
                f"iteration {iteration} outside history 1..{len(self)}"
            )
        return sample_frequencies(
            rng.iteration_seed(self.master_seed, iteration),
            self.dim,
            self.feature_count,
            self.sigma,
        )


def empty_model(dim: int, feature_count: int, sigma: float, master_seed: int) -> CoefficientHistory:
    return CoefficientHistory(
        dim=dim,
        feature_count=feature_count,
        sigma=sigma,
        master_seed=master_seed,
        raws=np.zeros((0, 2 * feature_count)),
        scales=np.zeros(0),
    )


def _entry_chunk(dim: int, count: int) -> int:
    per_entry = dim * count * 8
    c = (_CHUNK_BYTES // per_entry) // 128 * 128
    return int(max(128, c))


def predict_batch(model: CoefficientHistory, xs: np.ndarray) -> np.ndarray:
    """Scores for each row of xs; row j equals predict(model, xs[j]) exactly."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2:
        raise InvalidParameterError(f"expected a 2-d point array, got ndim={xs.ndim}")
    if xs.shape[1] != model.dim:
        raise DimensionMismatchError(model.dim, xs.shape[1], "point batch")
    n = xs.shape[0]
    acc = np.zeros(n)
    t = len(model)
    if n == 0 or t == 0:
        return acc
    step = _entry_chunk(model.dim, model.feature_count)
    wc = np.empty((min(step, t), model.dim, model.feature_count))
    for c0 in range(0, t, step):
        c1 = min(c0 + step, t)
        for k in range(c0, c1):
            blk = model.frequencies_for(k + 1)
            wc[k - c0] = blk.transposed
        backend.score_accum(wc[: c1 - c0], model.raws[c0:c1], model.scales[c0:c1], xs, acc)
    return acc * feature_scale(model.feature_count)


def predict(model: CoefficientHistory, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidParameterError(f"expected a 1-d point, got ndim={x.ndim}")
    if x.shape[0] != model.dim:
        raise DimensionMismatchError(model.dim, x.shape[0], "point")
    return float(predict_batch(model, x[None, :])[0])


def _require_finite(value: float, what: str, line_no: int) -> float:
    if not math.isfinite(value):
        raise ModelFormatError(f"non-finite {what}", line_no)
    return value


def _parse_float(token: str, what: str, line_no: int) -> float:
    # decimal first; the hex form must carry its 0x prefix, otherwise plain
    # tokens like "1.5" would be read as hex (fromhex accepts them bare)
    try:
        return float(token)
    except ValueError:
        pass
    if token.lstrip("+-")[:2].lower() == "0x":
        try:
            return float.fromhex(token)
        except ValueError:
            pass
    raise ModelFormatError(f"bad {what} {token!r}", line_no)


def save(model: CoefficientHistory, sink) -> None:
    """Write the model as text. Floats are C99 hex, so load() is lossless."""
    lines = [
        _MAGIC,
        f"dim {model.dim}",
        f"feature_count {model.feature_count}",
        f"sigma {float(model.sigma).hex()}",
        f"master_seed {model.master_seed}",
        f"entries {len(model)}",
    ]
    for i in range(len(model)):
        row = [str(i + 1), float(model.scales[i]).hex()]
        row.extend(float(v).hex() for v in model.raws[i])
        lines.append(" ".join(row))
    text = "\n".join(lines) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="ascii") as fh:
            fh.write(text)


def _read_header_int(lines, idx: int, key: str) -> int:
    if idx >= len(lines):
        raise ModelFormatError(f"missing header line '{key}'", idx + 1)
    parts = lines[idx].split()
    if len(parts) != 2 or parts[0] != key:
        raise ModelFormatError(f"expected '{key} <value>'", idx + 1)
    try:
        return int(parts[1])
    except ValueError:
        raise ModelFormatError(f"bad {key} {parts[1]!r}", idx + 1) from None


def load(source) -> CoefficientHistory:
    """Parse a model file (path or readable). Strict: any malformed line
    raises ModelFormatError naming the line, nothing is silently skipped or
    defaulted."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    return loads(text)


def loads(text: str) -> CoefficientHistory:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise ModelFormatError(f"bad magic line, expected {_MAGIC!r}", 1)
    dim = _read_header_int(lines, 1, "dim")
    count = _read_header_int(lines, 2, "feature_count")
    if dim < 1 or count < 1:
        raise ModelFormatError("dim and feature_count must be >= 1", 2)
    if len(lines) < 4:
        raise ModelFormatError("missing header line 'sigma'", 4)
    sparts = lines[3].split()
    if len(sparts) != 2 or sparts[0] != "sigma":
        raise ModelFormatError("expected 'sigma <value>'", 4)
    sigma = _require_finite(_parse_float(sparts[1], "sigma", 4), "sigma", 4)
    if sigma <= 0:
        raise ModelFormatError(f"sigma must be > 0, got {sigma}", 4)
    master_seed = _read_header_int(lines, 4, "master_seed")
    entries = _read_header_int(lines, 5, "entries")
    if entries < 0:
        raise ModelFormatError(f"entries must be >= 0, got {entries}", 6)
    body = lines[6:]
    # ignore a single trailing blank (files end with newline), nothing else
    if body and body[-1].strip() == "":
        body = body[:-1]
    if len(body) != entries:
        raise ModelFormatError(
            f"expected {entries} coefficient rows, found {len(body)}", 7
        )
    raws = np.empty((entries, 2 * count))
    scales = np.empty(entries)
    width = 2 + 2 * count
    for k, line in enumerate(body):
        line_no = 7 + k
        toks = line.split()
        if len(toks) != width:
            raise ModelFormatError(
                f"row has {len(toks)} fields, expected {width}", line_no
            )
        try:
            idx = int(toks[0])
        except ValueError:
            raise ModelFormatError(f"bad entry index {toks[0]!r}", line_no) from None
        if idx != k + 1:
            raise ModelFormatError(f"entry index {idx}, expected {k + 1}", line_no)
        scales[k] = _require_finite(
            _parse_float(toks[1], "scale", line_no), "scale", line_no
        )
        for j in range(2 * count):
            raws[k, j] = _require_finite(
                _parse_float(toks[2 + j], "coefficient", line_no),
                "coefficient",
                line_no,
            )
    return CoefficientHistory(
        dim=dim,
        feature_count=count,
        sigma=sigma,
        master_seed=master_seed,
        raws=raws,
        scales=scales,
    )


def dumps(model: CoefficientHistory) -> str:
    buf = io.StringIO()
    save(model, buf)
    return buf.getvalue()
