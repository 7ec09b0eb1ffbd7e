"""On-disk formats: matrix files, run configuration, cycle traces.

Matrix file (little-endian)::

    offset  size  field
    0       4     magic  b"SSAM"
    4       2     version (uint16, = 1)
    6       2     kind    (uint16, 0 = real64, 1 = bit-packed)
    8       4     rows    (uint32)
    12      4     cols    (uint32)
    16      ...   payload, row-major

real64 payload is ``rows * cols`` IEEE-754 doubles.  Bit-packed payload
stores each row in ``ceil(cols / 8)`` bytes, bit ``c`` of the row at
byte ``c // 8``, bit position ``c % 8`` (LSB first), padding bits zero.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import os
import re
import struct
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ._validation import check_spike_matrix
from .cost_model import ENERGY_KEYS, EnergyConfig
from .exceptions import ConfigurationError, SsaError
from .functional import SsaConfig
from .lif import LifConfig
from .sc_core import EncoderRange

MAGIC = b"SSAM"
VERSION = 1
KIND_REAL64 = 0
KIND_BITS = 1
_HEADER = struct.Struct("<4sHHII")

CONFIG_ENV = "SSA_SIM_CONFIG"


class MatrixFileError(SsaError, ValueError):
    pass


def write_matrix(path, matrix, kind=None):
    """Write ``matrix``; ``kind`` defaults to bit-packed for uint8/bool input."""
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise MatrixFileError(f"matrix must be 2-D, got shape {arr.shape}")
    if kind is None:
        kind = "bits" if arr.dtype in (np.uint8, np.bool_) else "real64"
    rows, cols = arr.shape
    if kind == "bits":
        bits = check_spike_matrix(arr)
        payload = np.packbits(bits, axis=1, bitorder="little").tobytes()
        code = KIND_BITS
    elif kind == "real64":
        payload = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        code = KIND_REAL64
    else:
        raise MatrixFileError(f"unknown element kind {kind!r}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, code, rows, cols))
        fh.write(payload)


def read_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise MatrixFileError(f"{path}: truncated header")
    magic, version, code, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MatrixFileError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise MatrixFileError(f"{path}: unsupported version {version}")
    payload = data[_HEADER.size:]
    if code == KIND_REAL64:
        expected = rows * cols * 8
    elif code == KIND_BITS:
        expected = rows * ((cols + 7) // 8)
    else:
        raise MatrixFileError(f"{path}: unknown element kind {code}")
    if len(payload) != expected:
        raise MatrixFileError(f"{path}: payload is {len(payload)} bytes, header implies {expected}")
    if code == KIND_REAL64:
        return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
    packed = np.frombuffer(payload, dtype=np.uint8).reshape(rows, (cols + 7) // 8)
    return np.unpackbits(packed, axis=1, bitorder="little")[:, :cols].copy()


# -- configuration ---------------------------------------------------------

def _int_list(text):
    return [int(v) for v in re.split(r"[,\s]+", text.strip()) if v]


@dataclass
class VerifyOptions:
    grid: list = field(default_factory=lambda: [2, 4, 8, 16])
    seeds: int = 30
    exact_instances: int = 100
    bitexact_t: int = 64
    sc_t: int = 1 << 16
    sc_seeds: int = 10
    stat_n: int = 8
    stat_d_k: int = 16
    stat_t: int = 4096
    stat_tol: float = 0.05
    stat_fraction: float = 0.99
    count_cells: int = 10


@dataclass
class SweepOptions:
    n_values: list = field(default_factory=lambda: [2, 4, 8])
    d_k_values: list = field(default_factory=lambda: [4, 8, 16])
    seeds: int = 4
    t: int = 256


@dataclass
class RunConfig:
    ssa: SsaConfig
    lif: LifConfig
    weight_scale: float = 1.0
    weight_seed: int = 0
    energy: EnergyConfig | None = None
    softmax_weight: int = 1
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    sweep: SweepOptions = field(default_factory=SweepOptions)
    source: str = "<defaults>"
    text: str = ""

    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()[:16]

    def with_seed(self, seed) -> "RunConfig":
        from dataclasses import replace
        return replace(self, ssa=replace(self.ssa, global_seed=seed))


def default_config_path():
    env = os.environ.get(CONFIG_ENV)
    if env:
        return Path(env)
    return resources.files("ssa_sim") / "data" / "default.ini"


def _line_of(text, section, key):
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]", stripped)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped):
            return lineno
    return None


def parse_config(text: str, source="<string>") -> RunConfig:
    """Parse the INI-style run configuration.

    Errors name the offending line when it can be located.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc

    def get(section, key, conv, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            line = _line_of(text, section, key)
            raise ConfigurationError(f"{source}:{line}: [{section}] {key} = {raw!r}: {exc}") from exc

    def build(section, keys, factory):
        try:
            return factory()
        except (ConfigurationError, OverflowError, ValueError) as exc:
            named = [k for k in keys if re.search(rf"\b{re.escape(k)}\b", str(exc), re.I)]
            lines = [_line_of(text, section, k) for k in (named or keys)]
            where = ",".join(str(x) for x in lines if x is not None) or "?"
            raise ConfigurationError(f"{source}:{where}: [{section}] {exc}") from exc

    as_bool = lambda s: {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}[s.lower()]

    rng = build("ssa", ["input_lo", "input_hi"], lambda: EncoderRange(
        get("ssa", "input_lo", float, 0.0), get("ssa", "input_hi", float, 1.0)))
    ssa = build("ssa", ["n", "d", "d_k", "t", "seed"], lambda: SsaConfig(
        n=get("ssa", "n", int, 8), d=get("ssa", "d", int, 16), d_k=get("ssa", "d_k", int, 16),
        t=get("ssa", "t", int, 64), global_seed=get("ssa", "seed", lambda s: int(s, 0), 0),
        input_range=rng, rng_sharing=get("ssa", "rng_sharing", str, "none"),
        general_n=get("ssa", "general_n", as_bool, False),
    ))
    lif = build("lif", ["beta", "v_threshold", "reset"], lambda: LifConfig(
        beta=get("lif", "beta", float, 0.9), v_threshold=get("lif", "v_threshold", float, 1.0),
        reset=get("lif", "reset", str, "zero"),
    ))
    energy = None
    if parser.has_section("energy"):
        mapping = dict(parser.items("energy"))
        mapping = {k: v for k, v in mapping.items() if k in ENERGY_KEYS + ("provenance",)}
        energy = build("energy", list(mapping), lambda: EnergyConfig.from_mapping(mapping))

    v = VerifyOptions()
    verify = VerifyOptions(
        grid=get("verify", "grid", _int_list, v.grid),
        seeds=get("verify", "seeds", int, v.seeds),
        exact_instances=get("verify", "exact_instances", int, v.exact_instances),
        bitexact_t=get("verify", "bitexact_t", int, v.bitexact_t),
        sc_t=get("verify", "sc_t", int, v.sc_t),
        sc_seeds=get("verify", "sc_seeds", int, v.sc_seeds),
        stat_n=get("verify", "stat_n", int, v.stat_n),
        stat_d_k=get("verify", "stat_d_k", int, v.stat_d_k),
        stat_t=get("verify", "stat_t", int, v.stat_t),
        stat_tol=get("verify", "stat_tol", float, v.stat_tol),
        stat_fraction=get("verify", "stat_fraction", float, v.stat_fraction),
        count_cells=get("verify", "count_cells", int, v.count_cells),
    )
    s = SweepOptions()
    sweep = SweepOptions(
        n_values=get("sweep", "n_values", _int_list, s.n_values),
        d_k_values=get("sweep", "d_k_values", _int_list, s.d_k_values),
        seeds=get("sweep", "seeds", int, s.seeds),
        t=get("sweep", "t", int, s.t),
    )
    return RunConfig(
        ssa=ssa, lif=lif,
        weight_scale=get("weights", "scale", float, 1.0),
        weight_seed=get("weights", "seed", int, 0),
        energy=energy, softmax_weight=get("energy", "softmax_weight", int, 1),
        verify=verify, sweep=sweep, source=str(source), text=text,
    )


def load_config(path=None) -> RunConfig:
    path = default_config_path() if path is None else Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


# -- traces ------------------------------------------------------------------

def read_trace(path):
    """Load a JSONL cycle trace as ``(header, records)`` of plain dicts."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "ssa-cycle-trace":
            raise SsaError(f"{path}: not an ssa cycle trace")
        return header, [json.loads(line) for line in fh if line.strip()]
