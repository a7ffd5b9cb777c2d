"""Line-oriented ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored, dotted keys address nested
sections (``operator_a.bc = neumann``).  Every key is optional; unknown keys,
duplicates and constraint violations are errors carrying the line number.

Profiles for ``y0``::

    zero | constant:m | bump:amp[:mean] | random:amp[:mean] | coefficients:c1,c2,...

``bump`` is ``mean + amp * prod_i cos(pi x_i / L_i)`` (Neumann) or with sines
(Dirichlet); ``random`` draws ``amp * U(-1, 1)`` grid values from ``seed``.
Forcing specs: ``zero | constant-mode:j:amp | ramp-mode:j:amp`` where ``j`` is
the 1-based index of a B eigenfunction and the ramp is ``amp * t / T``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .potentials import Potential, canonical
from .spectra import BCS, SpectralBasis, build_laplacian_basis
from .stepper import SchemeConfig

__all__ = ["ConfigError", "OperatorSpec", "RunConfig", "parse_config", "emit_config", "load_config"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key
        self.detail = message


@dataclass(frozen=True)
class OperatorSpec:
    bc: str = "neumann"
    lengths: tuple = (1.0,)
    n_modes: tuple = (32,)
    power_offset: int = 1

    def build(self) -> SpectralBasis:
        return build_laplacian_basis(self.lengths, self.bc, self.n_modes, self.power_offset)


@dataclass(frozen=True)
class RunConfig:
    operator_a: OperatorSpec = OperatorSpec()
    operator_b: Optional[OperatorSpec] = None
    potential_kind: str = "regular"
    c1: float = 2.0
    c2: float = 1.0
    tau: float = 1.0
    r: float = 0.5
    sigma: float = 0.5
    T: float = 0.01
    N: int = 16
    lam: float = 0.05
    inner_tol_abs: float = 1e-10
    inner_tol_rel: float = 1e-10
    inner_max_iter: int = 50
    fallback_max_iter: int = 500
    m0_guard: bool = True
    y0: str = "bump:0.4:0.1"
    forcing: str = "zero"
    regularity: bool = False
    M0: Optional[float] = None
    output_dir: str = "out"
    seed: int = 0
    snapshot_stride: int = 0
    levels: int = 3
    ledger_tol: float = 0.2
    contdep_tol: float = 0.1
    contdep_eps: tuple = (1e-3, 1e-4)
    contdep_mode: int = 2

    # -- builders -----------------------------------------------------------
    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(self.tau, self.r, self.sigma, self.T, self.N, self.lam,
                            self.inner_tol_abs, self.inner_tol_rel, self.inner_max_iter,
                            self.fallback_max_iter, self.m0_guard)

    def potential(self) -> Potential:
        if self.potential_kind == "logarithmic":
            return canonical("logarithmic", c1=self.c1)
        if self.potential_kind == "double_obstacle":
            return canonical("double_obstacle", c2=self.c2)
        return canonical(self.potential_kind)

    def bases(self):
        a = self.operator_a.build()
        b = a if self.operator_b is None else self.operator_b.build()
        return a, b

    def initial_values(self, basis: SpectralBasis) -> np.ndarray:
        return profile_values(self.y0, basis, self.seed)

    def forcing_function(self, basis: SpectralBasis):
        return forcing_function(self.forcing, basis, self.T)


def profile_values(spec: str, basis: SpectralBasis, seed: int = 0) -> np.ndarray:
    name, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    if name == "zero" and not args:
        return np.zeros(basis.size)
    if name == "constant" and len(args) == 1:
        return np.full(basis.size, float(args[0]))
    if name in ("bump", "random") and len(args) in (1, 2):
        amp = float(args[0])
        mean = float(args[1]) if len(args) == 2 else 0.0
        if name == "random":
            rng = np.random.default_rng(seed)
            return mean + amp * rng.uniform(-1.0, 1.0, basis.size)
        shape = np.ones(basis.shape)
        trig = np.cos if basis.bc == "neumann" else np.sin
        for X, length in zip(basis.mesh, basis.lengths):
            shape = shape * trig(np.pi * X / length)
        return (mean + amp * shape).ravel()
    if name == "coefficients" and len(args) == 1:
        c = np.zeros(basis.size)
        vals = [float(v) for v in args[0].split(",") if v.strip()]
        if len(vals) > basis.size:
            raise ValueError(f"{len(vals)} coefficients for {basis.size} modes")
        c[: len(vals)] = vals
        return basis.to_values(c).ravel()
    raise ValueError(f"unknown y0 profile {spec!r}")


def forcing_function(spec: str, basis: SpectralBasis, T: float):
    """None for zero forcing, else a callable t -> grid values."""
    name, _, rest = spec.partition(":")
    if name == "zero" and not rest:
        return None
    args = rest.split(":")
    if name in ("constant-mode", "ramp-mode") and len(args) == 2:
        j, amp = int(args[0]), float(args[1])
        if not 1 <= j <= basis.size:
            raise ValueError(f"mode index {j} outside 1..{basis.size}")
        e = np.zeros(basis.size)
        e[j - 1] = 1.0
        shape = basis.to_values(e).ravel()
        if name == "constant-mode":
            return lambda t: amp * shape
        return lambda t: amp * (t / T) * shape
    raise ValueError(f"unknown forcing spec {spec!r}")


# -- parsing --------------------------------------------------------------------

def _bool(s):
    low = s.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _opt_float(s):
    return None if s.lower() in ("none", "") else float(s)


def _int(s):
    f = float(s)
    if f != int(f):
        raise ValueError(f"expected an integer, got {s!r}")
    return int(f)


def _floats(s):
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s):
    return tuple(_int(v) for v in s.split(",") if v.strip())


_OP_KEYS = {"bc": str, "lengths": _floats, "n_modes": _ints, "power_offset": _int}

_TOP = {
    "potential.kind": ("potential_kind", str),
    "potential.c1": ("c1", float),
    "potential.c2": ("c2", float),
    "tau": ("tau", float),
    "r": ("r", float),
    "sigma": ("sigma", float),
    "T": ("T", float),
    "N": ("N", _int),
    "lambda": ("lam", float),
    "inner_tol_abs": ("inner_tol_abs", float),
    "inner_tol_rel": ("inner_tol_rel", float),
    "inner_max_iter": ("inner_max_iter", _int),
    "fallback_max_iter": ("fallback_max_iter", _int),
    "m0_guard": ("m0_guard", _bool),
    "y0": ("y0", str),
    "forcing": ("forcing", str),
    "regularity": ("regularity", _bool),
    "M0": ("M0", _opt_float),
    "output_dir": ("output_dir", str),
    "seed": ("seed", _int),
    "snapshot_stride": ("snapshot_stride", _int),
    "levels": ("levels", _int),
    "ledger_tol": ("ledger_tol", float),
    "contdep.tol": ("contdep_tol", float),
    "contdep.eps": ("contdep_eps", _floats),
    "contdep.mode": ("contdep_mode", _int),
}


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    ops: dict = {"operator_a": {}, "operator_b": {}}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not eq or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno, key)
        lines[key] = lineno
        section, _, sub = key.partition(".")
        try:
            if section in ops and sub in _OP_KEYS:
                ops[section][sub] = _OP_KEYS[sub](val)
            elif key in _TOP:
                name, conv = _TOP[key]
                values[name] = conv(val)
            else:
                raise ConfigError(f"unknown key {key!r}", lineno, key)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, key) from None
    if ops["operator_a"]:
        values["operator_a"] = OperatorSpec(**ops["operator_a"])
    if ops["operator_b"]:
        values["operator_b"] = OperatorSpec(**ops["operator_b"])
    cfg = RunConfig(**values)
    validate(cfg, lines)
    return cfg


def _line_of(lines, *keys):
    for k in keys:
        if k in lines:
            return lines[k], k
    return None, None


def validate(cfg: RunConfig, lines: Optional[dict] = None) -> None:
    """Enforce the constraints of every module the config feeds."""
    lines = lines or {}

    def fail(msg, *keys):
        ln, k = _line_of(lines, *keys)
        raise ConfigError(msg, ln, k)

    for sec, op in (("operator_a", cfg.operator_a), ("operator_b", cfg.operator_b)):
        if op is None:
            continue
        if op.bc not in BCS:
            fail(f"{sec}.bc must be one of {BCS}", f"{sec}.bc")
        if len(op.lengths) not in (1, 2) or any(x <= 0 for x in op.lengths):
            fail("lengths must be 1 or 2 positive reals", f"{sec}.lengths")
        if len(op.n_modes) not in (1, len(op.lengths)) or any(m < 2 for m in op.n_modes):
            fail("n_modes must be integers >= 2, one per axis", f"{sec}.n_modes")
        if op.power_offset < 0:
            fail("power_offset must be a nonnegative integer", f"{sec}.power_offset")
    a, b = cfg.bases()
    if not a.same_grid(b):
        fail("operator_a and operator_b must share lengths and n_modes", "operator_b.lengths",
             "operator_b.n_modes")
    if cfg.potential_kind not in ("regular", "logarithmic", "double_obstacle"):
        fail("potential.kind must be regular, logarithmic or double_obstacle", "potential.kind")
    try:
        cfg.potential()
    except ValueError as exc:
        fail(str(exc), "potential.c1", "potential.c2", "potential.kind")
    try:
        cfg.scheme_config()
    except ValueError as exc:
        msg = str(exc)
        keys = {"r": ("r", "sigma")}.get(msg.split()[0], (msg.split()[0],))
        fail(msg, *keys)
    for name in ("inner_tol_abs", "inner_tol_rel"):
        if getattr(cfg, name) < 0:
            fail(f"{name} must be nonnegative", name)
    for name in ("inner_max_iter", "fallback_max_iter", "levels"):
        if getattr(cfg, name) < 1:
            fail(f"{name} must be a positive integer", name)
    if cfg.snapshot_stride < 0:
        fail("snapshot_stride must be nonnegative", "snapshot_stride")
    if cfg.M0 is not None and cfg.M0 < 0:
        fail("M0 must be nonnegative", "M0")
    if not cfg.contdep_eps or any(e <= 0 for e in cfg.contdep_eps):
        fail("contdep.eps must be a list of positive reals", "contdep.eps")
    if not 1 <= cfg.contdep_mode <= b.size:
        fail(f"contdep.mode must lie in 1..{b.size}", "contdep.mode")
    for key, fn in (("y0", lambda: cfg.initial_values(b)), ("forcing", lambda: cfg.forcing_function(b))):
        try:
            fn()
        except ValueError as exc:
            fail(str(exc), key)


def emit_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(emit_config(c)) == c``."""
    out = []

    def put(k, v):
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        elif v is None:
            v = "none"
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{k} = {v}")

    for sec in ("operator_a", "operator_b"):
        op = getattr(cfg, sec)
        if op is None:
            continue
        for k in _OP_KEYS:
            put(f"{sec}.{k}", getattr(op, k))
    for key, (name, _) in _TOP.items():
        put(key, getattr(cfg, name))
    return "\n".join(out) + "\n"


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def to_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}
