"""Run configuration and seeded targets."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .control_operator import DEFAULT_BUMP_GRID, DEFAULT_KMAX_MARGIN, DEFAULT_OMEGA
from .errors import ConfigError
from .spectral import SpectralField, lattice
from .symbols import builtin_symbol

_KNOWN_KEYS = {
    "model", "alpha", "N", "T", "s", "omega1", "omega2", "bump_grid", "kmax_margin",
    "target", "initial", "lambda", "t_end", "dt", "exclusion", "spillover_radius",
    "symmetry", "n_times", "seed",
}


def random_field(radius: int, seed: int, band: float | None = None, real: bool = True) -> SpectralField:
    """Seeded mean-zero field with unit-normal coefficients on ``|k| <= band``.

    With ``real`` the coefficients are Hermitian-symmetrized so the field is
    real valued.
    """
    rng = np.random.default_rng(seed)
    n = 2 * radius + 1
    c = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    k1, k2 = lattice(radius)
    band = radius * math.sqrt(2.0) if band is None else band
    c[np.hypot(k1, k2) > band] = 0.0
    if real:
        c = 0.5 * (c + np.conj(c[::-1, ::-1]))
    c[radius, radius] = 0.0
    return SpectralField(radius, c, real_valued=real)


def field_from_spec(spec, radius: int, default_seed: int) -> SpectralField:
    """Build a field from a config entry.

    ``None`` or ``"zero"`` gives zero; a list of ``[k1, k2, re, im]`` rows gives
    explicit coefficients; a dict ``{"random": true, "seed": .., "band": ..,
    "mean": ..}`` gives a seeded random field.
    """
    if spec is None or spec == "zero":
        return SpectralField.zeros(radius)
    if isinstance(spec, list):
        vals = {}
        for row in spec:
            if not (isinstance(row, (list, tuple)) and len(row) in (3, 4)):
                raise ConfigError(f"explicit coefficient rows are [k1, k2, re, im], got {row!r}")
            k1, k2 = int(row[0]), int(row[1])
            if max(abs(k1), abs(k2)) > radius:
                raise ConfigError(f"mode ({k1}, {k2}) lies outside the box of radius {radius}")
            vals[(k1, k2)] = complex(float(row[2]), float(row[3]) if len(row) == 4 else 0.0)
        return SpectralField.from_modes(radius, vals)
    if isinstance(spec, dict) and spec.get("random"):
        seed = int(spec.get("seed", default_seed))
        band = spec.get("band")
        u = random_field(radius, seed, None if band is None else float(band), bool(spec.get("real", True)))
        mean = spec.get("mean", 0.0)
        if mean:
            c = u.coeffs.copy()
            c[radius, radius] = complex(mean)
            u = SpectralField(radius, c)
        return u
    raise ConfigError(f"cannot interpret field specification {spec!r}")


def _interval(v, name):
    try:
        a, b = (float(x) for x in v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a pair [a, b]") from exc
    if not (0.0 < a < b < 2.0 * math.pi):
        raise ConfigError(f"{name}=({a}, {b}) must satisfy 0 < a < b < 2 pi")
    return (a, b)


@dataclass
class RunConfig:
    model: str
    N: int
    T: float = 7.0
    s: float = 0.0
    alpha: float | None = None
    omega1: tuple = DEFAULT_OMEGA
    omega2: tuple = DEFAULT_OMEGA
    bump_grid: int = DEFAULT_BUMP_GRID
    kmax_margin: int = DEFAULT_KMAX_MARGIN
    target: object = None
    initial: object = None
    decay_lambda: float = 0.5
    t_end: float = 30.0
    dt: float = 0.05
    exclusion: list = field(default_factory=list)
    spillover_radius: int | None = None
    symmetry: str | None = None
    n_times: int = 101
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.N, int) or isinstance(self.N, bool) or self.N < 1:
            raise ConfigError(f"N must be an integer >= 1, got {self.N!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.s < 0:
            raise ConfigError(f"s must be non-negative, got {self.s}")
        self.omega1 = _interval(self.omega1, "omega1")
        self.omega2 = _interval(self.omega2, "omega2")
        if self.decay_lambda <= 0:
            raise ConfigError(f"lambda must be positive, got {self.decay_lambda}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_end <= 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.n_times < 2:
            raise ConfigError("n_times must be at least 2")
        if self.spillover_radius is not None and self.spillover_radius <= self.N:
            raise ConfigError("spillover_radius must exceed N")
        if self.symmetry not in (None, "H2", "H3"):
            raise ConfigError(f"symmetry must be H2 or H3, got {self.symmetry!r}")
        self.symbol()  # validates model and alpha

    def symbol(self):
        return builtin_symbol(self.model, self.alpha)

    @classmethod
    def from_dict(cls, d: dict, seed: int | None = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("model", "N"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        kw = dict(d)
        if "lambda" in kw:
            kw["decay_lambda"] = float(kw.pop("lambda"))
        if seed is not None:
            kw["seed"] = int(seed)
        for key in ("T", "s", "t_end", "dt"):
            if key in kw:
                try:
                    kw[key] = float(kw[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{key} must be a number") from exc
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path, seed: int | None = None) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data, seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("decay_lambda")
        d["omega1"] = list(self.omega1)
        d["omega2"] = list(self.omega2)
        return d

    def initial_field(self) -> SpectralField:
        return field_from_spec(self.initial, self.N, self.seed + 1)

    def target_field(self) -> SpectralField:
        return field_from_spec(self.target, self.N, self.seed)
