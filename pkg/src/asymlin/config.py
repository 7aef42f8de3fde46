"""Run configuration: INI-style ``key = value`` files with one level of sections.

Sections and keys (all optional except ``[domain]`` and ``[nonlinearity]``)::

    [domain]
    dim = 1
    lengths = pi            ; one value (all axes) or comma list
    n_interior = 255        ; one value or comma list

    [nonlinearity]
    family = smooth_saturation | strong_resonance
    eta = 2                 ; number or expression in x1, x2, x3
    alpha = 0               ; smooth_saturation only
    c = 3                   ; strong_resonance only

    [solver]
    tol, max_iter, step0, armijo_factor, armijo_c, boundary_floor,
    polish, polish_from, deflation_sigma, distinct_distance,
    distinct_level, newton_max_iter

    [sampling]
    seed, random_starts, tau_samples, tau_m_samples, proptest_trials

    [spectrum]
    count, cluster_rtol

    [check]
    variant = both | ground-state | multiplicity

    [output]
    dir = out
    csv = true

Numbers accept ``pi`` and simple arithmetic (``2*pi``).
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ConfigError
from .expr import Expression
from .grid import Grid
from .nehari import SearchOptions, SolveOptions
from .nonlinearity import Nonlinearity, SmoothSaturation, StrongResonance

FAMILIES = ("smooth_saturation", "strong_resonance")
VARIANTS = ("both", "ground-state", "multiplicity")


def _number(text: str, key: str) -> float:
    try:
        ex = Expression(text)
    except ConfigError:
        raise ConfigError(f"{key}: cannot parse {text!r} as a number") from None
    if not ex.is_constant():
        raise ConfigError(f"{key}: expected a number, got {text!r}")
    val = float(ex([[0.0, 0.0, 0.0]])[0])
    if not math.isfinite(val):
        raise ConfigError(f"{key}: value {text!r} is not finite")
    return val


def _int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _weight(text: str, key: str):
    """Constant or expression in x1..x3 (kept as text for the digest)."""
    ex = Expression(text)
    if ex.is_constant():
        return _number(text, key)
    return text


@dataclass(frozen=True)
class DomainConfig:
    dim: int = 1
    lengths: tuple = (math.pi,)
    n_interior: tuple = (255,)

    def grid(self) -> Grid:
        return Grid(self.lengths, self.n_interior)


@dataclass(frozen=True)
class NonlinearityConfig:
    family: str = "smooth_saturation"
    eta: object = 2.0
    alpha: object = 0.0
    c: float = 3.0

    def build(self) -> Nonlinearity:
        def w(v):
            return Expression(v) if isinstance(v, str) else v

        if self.family == "smooth_saturation":
            return SmoothSaturation(w(self.alpha), w(self.eta))
        return StrongResonance(w(self.eta), self.c)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 10_000
    step0: float = 1.0
    armijo_factor: float = 0.5
    armijo_c: float = 1e-4
    boundary_floor: float = 1e-6
    polish: bool = True
    polish_from: float = 1e-5
    deflation_sigma: float = 1.0
    distinct_distance: float = 0.1
    distinct_level: float = 1e-4
    newton_max_iter: int = 50


@dataclass(frozen=True)
class SamplingConfig:
    seed: int = 0
    random_starts: int = 4
    tau_samples: int = 8
    tau_m_samples: int = 32
    proptest_trials: int = 1000


@dataclass(frozen=True)
class SpectrumConfig:
    count: int = 6
    cluster_rtol: float = 1e-6


@dataclass(frozen=True)
class RunConfig:
    domain: DomainConfig = field(default_factory=DomainConfig)
    nonlinearity: NonlinearityConfig = field(default_factory=NonlinearityConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    variant: str = "both"
    out_dir: str = "out"
    csv: bool = True

    def solve_options(self) -> SolveOptions:
        s = self.solver
        return SolveOptions(tol=s.tol, max_iter=s.max_iter, step0=s.step0,
                            armijo_factor=s.armijo_factor, armijo_c=s.armijo_c,
                            boundary_floor=s.boundary_floor, polish=s.polish,
                            polish_from=s.polish_from)

    def search_options(self, threads: int = 1) -> SearchOptions:
        s = self.solver
        return SearchOptions(solve=self.solve_options(),
                             random_starts=self.sampling.random_starts,
                             deflation_sigma=s.deflation_sigma,
                             distinct_distance=s.distinct_distance,
                             distinct_level=s.distinct_level,
                             newton_max_iter=s.newton_max_iter, threads=threads)

    def canonical(self) -> dict:
        """Everything that affects numerical results (the output location does not)."""
        d = asdict(self)
        d.pop("out_dir")
        d.pop("csv")
        return d

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, default=repr)
        return hashlib.sha256(text.encode()).hexdigest()

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, sampling=replace(self.sampling, seed=_check_seed(seed)))

    def with_out_dir(self, out_dir: str) -> "RunConfig":
        return replace(self, out_dir=out_dir)


def _check_seed(seed: int) -> int:
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _section(cp, name):
    return dict(cp[name]) if cp.has_section(name) else {}


def _unknown(sec, name, allowed):
    extra = set(sec) - set(allowed)
    if extra:
        raise ConfigError(f"[{name}]: unknown keys {sorted(extra)}")


def _typed(cls, sec, name):
    kw = {}
    _unknown(sec, name, [f.name for f in fields(cls)])
    for f in fields(cls):
        if f.name not in sec:
            continue
        key, raw = f"{name}.{f.name}", sec[f.name]
        default = f.default
        if isinstance(default, bool):
            kw[f.name] = _bool(raw, key)
        elif isinstance(default, int):
            kw[f.name] = _int(raw, key)
        else:
            kw[f.name] = _number(raw, key)
    return cls(**kw)


def _axis_list(raw, dim, key, conv):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    vals = [conv(p, key) for p in parts]
    if len(vals) == 1:
        vals = vals * dim
    if len(vals) != dim:
        raise ConfigError(f"{key}: expected 1 or {dim} values, got {len(vals)}")
    return tuple(vals)


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None
    known = {"domain", "nonlinearity", "solver", "sampling", "spectrum", "check", "output"}
    extra = set(cp.sections()) - known
    if extra:
        raise ConfigError(f"unknown sections {sorted(extra)}")
    for name in ("domain", "nonlinearity"):
        if not cp.has_section(name):
            raise ConfigError(f"missing section [{name}]")

    dom = _section(cp, "domain")
    _unknown(dom, "domain", ["dim", "lengths", "n_interior"])
    dim = _int(dom.get("dim", "1"), "domain.dim")
    if dim not in (1, 2, 3):
        raise ConfigError(f"domain.dim must be 1, 2 or 3, got {dim}")
    lengths = _axis_list(dom.get("lengths", "pi"), dim, "domain.lengths", _number)
    n_int = _axis_list(dom.get("n_interior", "255"), dim, "domain.n_interior", _int)
    if any(x <= 0 for x in lengths) or any(k < 1 for k in n_int):
        raise ConfigError("domain lengths and n_interior must be positive")
    domain = DomainConfig(dim, lengths, n_int)

    nl = _section(cp, "nonlinearity")
    family = nl.get("family", "smooth_saturation").strip()
    if family not in FAMILIES:
        raise ConfigError(f"nonlinearity.family must be one of {FAMILIES}, got {family!r}")
    if family == "smooth_saturation":
        _unknown(nl, "nonlinearity", ["family", "eta", "alpha"])
        nonlin = NonlinearityConfig(family, _weight(nl.get("eta", "2"), "nonlinearity.eta"),
                                    _weight(nl.get("alpha", "0"), "nonlinearity.alpha"))
    else:
        _unknown(nl, "nonlinearity", ["family", "eta", "c"])
        c = _number(nl.get("c", "3"), "nonlinearity.c")
        if c <= 0:
            raise ConfigError("nonlinearity.c must be positive")
        nonlin = NonlinearityConfig(family, _weight(nl.get("eta", "6"), "nonlinearity.eta"),
                                    c=c)

    solver = _typed(SolverConfig, _section(cp, "solver"), "solver")
    for f in fields(SolverConfig):
        v = getattr(solver, f.name)
        if not isinstance(v, bool) and not v > 0:
            raise ConfigError(f"solver.{f.name} must be positive")
    sampling = _typed(SamplingConfig, _section(cp, "sampling"), "sampling")
    _check_seed(sampling.seed)
    for name in ("random_starts", "tau_samples", "tau_m_samples", "proptest_trials"):
        if getattr(sampling, name) < 0:
            raise ConfigError(f"sampling.{name} must be nonnegative")
    spectrum = _typed(SpectrumConfig, _section(cp, "spectrum"), "spectrum")
    if spectrum.count < 1 or not spectrum.cluster_rtol > 0:
        raise ConfigError("spectrum.count must be >= 1 and cluster_rtol positive")

    chk = _section(cp, "check")
    _unknown(chk, "check", ["variant"])
    variant = chk.get("variant", "both").strip()
    if variant not in VARIANTS:
        raise ConfigError(f"check.variant must be one of {VARIANTS}")

    out = _section(cp, "output")
    _unknown(out, "output", ["dir", "csv"])
    return RunConfig(domain, nonlin, solver, sampling, spectrum, variant,
                     out.get("dir", "out").strip(), _bool(out.get("csv", "true"), "output.csv"))


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
