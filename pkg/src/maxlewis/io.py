"""Matrix files, label files, run configuration and atomic output writing.

Matrix encodings
----------------
csv
    One row per line, comma-separated decimal floats, no header.
binary
    ``b"ALWM"``, then n and d as little-endian uint64, then n*d
    little-endian float64 values in row-major order.
"""

import os
import struct
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, MaxLewisError

MAGIC = b"ALWM"
_HEADER = struct.Struct("<4sQQ")


class MatrixFormatError(MaxLewisError, OSError):
    pass


def detect_format(path) -> str:
    with open(path, "rb") as fh:
        return "binary" if fh.read(4) == MAGIC else "csv"


def read_matrix(path, fmt: str = "auto") -> np.ndarray:
    if fmt == "auto":
        fmt = detect_format(path)
    if fmt == "binary":
        return _read_binary(path)
    if fmt == "csv":
        return _read_csv(path)
    raise ValueError(f"unknown matrix format {fmt!r}")


def _read_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError:
                raise MatrixFormatError(f"{path}:{lineno}: not a row of comma-separated numbers") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise MatrixFormatError(f"{path}:{lineno}: expected {width} values, found {len(row)}")
            rows.append(row)
    if not rows:
        raise MatrixFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def _read_binary(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise MatrixFormatError(f"{path}: truncated header")
    magic, n, d = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MatrixFormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * n * d
    if len(data) != expected:
        raise MatrixFormatError(f"{path}: expected {expected} bytes for {n}x{d}, found {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, d).astype(np.float64)


def matrix_bytes(A, fmt: str) -> bytes:
    A = np.asarray(A, dtype=np.float64)
    if fmt == "binary":
        n, d = A.shape
        return _HEADER.pack(MAGIC, n, d) + A.astype("<f8").tobytes(order="C")
    if fmt == "csv":
        return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in A).encode()
    raise ValueError(f"unknown matrix format {fmt!r}")


def write_matrix(path, A, fmt: str = "csv") -> None:
    atomic_write(path, matrix_bytes(A, fmt))


def read_vector(path) -> np.ndarray:
    """One value per line (blank lines ignored)."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise MatrixFormatError(f"{path}:{lineno}: cannot parse {line!r}") from None
    return np.array(values, dtype=np.float64)


def vector_text(v) -> str:
    return "".join(f"{float(x)!r}\n" for x in v)


def atomic_write(path, content) -> None:
    path = Path(path)
    if isinstance(content, str):
        content = content.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(content)
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def write_outputs(out_dir, files: dict) -> list[Path]:
    """Write every ``name -> content`` pair; call only once all content exists."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in files.items():
        atomic_write(out_dir / name, content)
        written.append(out_dir / name)
    return written


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    seed: int
    unlabeled: list = field(default_factory=list)
    labeled: list = field(default_factory=list)
    labeled_labels: Optional[str] = None
    labels: Optional[str] = None
    out_dir: str = "out"
    p: float = 2.0
    epsilon: float = 0.25
    tau: Optional[int] = None
    constant_c: Optional[float] = None
    activation: str = "identity"
    constrained: bool = True
    fp_tolerance: float = 1e-10
    max_iters: int = 200
    scheme: str = "iid"
    beta: Optional[float] = None
    m_cap: Optional[int] = None
    starts: int = 5
    oracle_restarts: int = 10
    mc_trials: int = 2000
    distortion_threshold: float = 0.5
    ratio_threshold: float = 10.0
    kappa_t: list = field(default_factory=lambda: [10.0, 20.0, 30.0, 50.0, 100.0])
    format: str = "auto"

    def validate(self) -> "RunConfig":
        if not self.p >= 1:
            raise ConfigError("p must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if self.tau is not None and self.tau < 1:
            raise ConfigError("tau must be >= 1")
        if self.scheme not in ("iid", "bernoulli", "full"):
            raise ConfigError(f"scheme must be iid, bernoulli or full, not {self.scheme!r}")
        if self.activation not in ("identity", "relu", "tanh"):
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.labeled and len(self.labeled) != len(self.unlabeled):
            raise ConfigError("labeled and unlabeled must list the same number of files")
        if self.labeled and self.labeled_labels is None:
            raise ConfigError("labeled files given without labeled_labels")
        if self.format not in ("auto", "csv", "binary"):
            raise ConfigError("format must be auto, csv or binary")
        return self


_LIST_KEYS = {"unlabeled", "labeled", "kappa_t"}
_PATH_KEYS = {"unlabeled", "labeled", "labeled_labels", "labels", "out_dir"}


def _coerce(name, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    typ = types[name]
    raw = raw.strip()
    if name in _LIST_KEYS:
        items = [s.strip() for s in raw.split(",") if s.strip()]
        return [float(s) for s in items] if name == "kappa_t" else items
    if raw.lower() in ("", "none") and "Optional" in str(typ):
        return None
    if typ is bool or name == "constrained":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if typ in (int,) or name in ("tau", "m_cap", "seed"):
        return int(raw)
    if typ in (float,) or name in ("constant_c", "beta"):
        return float(raw)
    return raw


def parse_config_text(text: str, base_dir=None) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if base_dir is not None:
        for key in _PATH_KEYS & values.keys():
            v = values[key]
            if isinstance(v, list):
                values[key] = [str(Path(base_dir, s)) for s in v]
            elif v is not None:
                values[key] = str(Path(base_dir, v))
    return values


def load_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    """Read a config file (paths relative to it) and apply overrides.

    ``seed`` is mandatory.
    """
    values = {}
    if path is not None:
        text = Path(path).read_text()
        values = parse_config_text(text, Path(path).parent)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    if "seed" not in values:
        raise ConfigError("seed is required (set 'seed = ...' or pass --seed)")
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()

