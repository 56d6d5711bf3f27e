"""Run configuration: TOML parsing, validation, round-trip serialization,
and construction of grids, fields, background metric, speed, and policy.

f and u0 are given as finite cosine series (integer wave vector over the
real axes x1,y1,...,xn,yn, amplitude, phase), which keeps them exactly
band-limited and serializable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .endo import BackgroundMetric
from .errors import ConfigError
from .flow import StepPolicy
from .geometry import Grid, ScalarField
from .speed import SpeedFunction


@dataclass(frozen=True)
class CosineMode:
    k: tuple[int, ...]
    amp: float
    phase: float = 0.0


@dataclass
class RunConfig:
    n: int = 1
    N: int = 64
    chi_rows: tuple | None = None  # nested tuples; entries float or (re, im)
    f_modes: tuple[CosineMode, ...] = ()
    u0_modes: tuple[CosineMode, ...] = ()
    speed_kind: str = "log"
    speed_a: float = 1.0
    speed_scale: float = 1.0
    speed_coeffs: tuple[tuple[int, float], ...] = ()
    scheme: str = "imex"
    cfl_safety: float = 0.25
    dt_max: float = 0.05
    residual_tol: float = 1e-6
    t_max: float = 100.0
    max_steps: int = 200_000
    imex_dt_factor: float = 100.0
    output_dir: str = "out"
    dump_every: int = 0
    checks: bool = False
    A: float = 10.0
    B: float = 5.0
    check_steps: int = 20
    check_dt: float = 1e-5

    # -- builders -----------------------------------------------------------

    def build_grid(self) -> Grid:
        return Grid(self.n, self.N)

    def build_chi(self) -> BackgroundMetric:
        if self.chi_rows is None:
            return BackgroundMetric.identity(self.n)
        mat = np.zeros((self.n, self.n), dtype=np.complex128)
        for i, row in enumerate(self.chi_rows):
            for j, entry in enumerate(row):
                if isinstance(entry, (tuple, list)):
                    mat[i, j] = complex(entry[0], entry[1])
                else:
                    mat[i, j] = float(entry)
        return BackgroundMetric.from_matrix(mat)

    def _build_field(self, modes, key) -> ScalarField:
        grid = self.build_grid()
        vals = np.zeros(grid.shape)
        coords = grid.coordinates()
        for m in modes:
            if len(m.k) != 2 * self.n:
                raise ConfigError(key, f"wave vector {m.k} must have {2*self.n} entries")
            phase_arg = np.zeros(grid.shape)
            for axis, kk in enumerate(m.k):
                phase_arg = phase_arg + kk * coords[axis]
            vals = vals + m.amp * np.cos(2 * np.pi * phase_arg + m.phase)
        return ScalarField(grid, vals)

    def build_f(self) -> ScalarField:
        return self._build_field(self.f_modes, "f_modes")

    def build_u0(self) -> ScalarField:
        return self._build_field(self.u0_modes, "u0_modes")

    def build_speed(self) -> SpeedFunction:
        return SpeedFunction(
            self.speed_kind, a=self.speed_a, scale=self.speed_scale,
            coeffs=self.speed_coeffs,
        )

    def build_policy(self) -> StepPolicy:
        return StepPolicy(
            scheme=self.scheme, cfl_safety=self.cfl_safety,
            dt_max=self.dt_max, residual_tol=self.residual_tol,
            t_max=self.t_max, max_steps=self.max_steps,
            imex_dt_factor=self.imex_dt_factor,
        )

    # -- (de)serialization --------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "n": self.n, "N": self.N, "scheme": self.scheme,
            "cfl_safety": self.cfl_safety, "dt_max": self.dt_max,
            "residual_tol": self.residual_tol, "t_max": self.t_max,
            "max_steps": self.max_steps, "imex_dt_factor": self.imex_dt_factor,
            "output_dir": self.output_dir, "dump_every": self.dump_every,
            "checks": self.checks, "A": self.A, "B": self.B,
            "check_steps": self.check_steps, "check_dt": self.check_dt,
            "speed": self._speed_dict(),
        }
        if self.chi_rows is not None:
            d["chi"] = {"rows": [list(_entry_to_item(e) for e in row)
                                 for row in self.chi_rows]}
        if self.f_modes:
            d["f_modes"] = [_mode_to_dict(m) for m in self.f_modes]
        if self.u0_modes:
            d["u0_modes"] = [_mode_to_dict(m) for m in self.u0_modes]
        return d

    def _speed_dict(self) -> dict:
        sd = {"kind": self.speed_kind}
        if self.speed_kind in ("power", "neg_power_scaled"):
            sd["a"] = self.speed_a
        if self.speed_kind == "neg_power_scaled":
            sd["scale"] = self.speed_scale
        if self.speed_kind == "custom":
            sd["coeffs"] = [[k, c] for k, c in self.speed_coeffs]
        return sd

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        kw = {}
        kw["n"] = _take(d, "n", int, 1)
        kw["N"] = _take(d, "N", int, 64)
        kw["scheme"] = _take(d, "scheme", str, "imex")
        for key, default in [("cfl_safety", 0.25), ("dt_max", 0.05),
                             ("residual_tol", 1e-6), ("t_max", 100.0),
                             ("imex_dt_factor", 100.0), ("A", 10.0),
                             ("B", 5.0), ("check_dt", 1e-5)]:
            kw[key] = _take(d, key, float, default)
        kw["max_steps"] = _take(d, "max_steps", int, 200_000)
        kw["dump_every"] = _take(d, "dump_every", int, 0)
        kw["check_steps"] = _take(d, "check_steps", int, 20)
        kw["output_dir"] = _take(d, "output_dir", str, "out")
        kw["checks"] = _take(d, "checks", bool, False)

        speed = d.pop("speed", {"kind": "log"})
        if not isinstance(speed, dict) or "kind" not in speed:
            raise ConfigError("speed", "must be a table with a 'kind' entry")
        speed = dict(speed)
        kw["speed_kind"] = str(speed.pop("kind"))
        kw["speed_a"] = _take(speed, "a", float, 1.0, prefix="speed.")
        kw["speed_scale"] = _take(speed, "scale", float, 1.0, prefix="speed.")
        coeffs = speed.pop("coeffs", [])
        try:
            kw["speed_coeffs"] = tuple((int(k), float(c)) for k, c in coeffs)
        except (TypeError, ValueError) as exc:
            raise ConfigError("speed.coeffs", f"expected [[k, c], ...]: {exc}")
        if speed:
            raise ConfigError(f"speed.{next(iter(speed))}", "unknown key")

        chi = d.pop("chi", None)
        if chi is not None:
            if not isinstance(chi, dict) or "rows" not in chi:
                raise ConfigError("chi", "must be a table with a 'rows' entry")
            try:
                kw["chi_rows"] = tuple(
                    tuple(_item_to_entry(e) for e in row) for row in chi["rows"])
            except (TypeError, ValueError) as exc:
                raise ConfigError("chi.rows", str(exc))

        for key in ("f_modes", "u0_modes"):
            modes = d.pop(key, [])
            kw[key] = tuple(_dict_to_mode(m, key) for m in modes)

        if d:
            raise ConfigError(next(iter(d)), "unknown key")
        try:
            return cls(**kw)
        except (ValueError, TypeError) as exc:
            raise ConfigError("(config)", str(exc))

    def to_toml(self) -> str:
        return _emit_toml(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("(syntax)", str(exc))
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_toml(fh.read())


def _take(d, key, typ, default, prefix=""):
    if key not in d:
        return default
    val = d.pop(key)
    if typ is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if typ is int and isinstance(val, bool):
        raise ConfigError(prefix + key, f"expected {typ.__name__}, got bool")
    if not isinstance(val, typ):
        raise ConfigError(
            prefix + key, f"expected {typ.__name__}, got {type(val).__name__}")
    return val


def _mode_to_dict(m: CosineMode) -> dict:
    return {"k": list(m.k), "amp": m.amp, "phase": m.phase}


def _dict_to_mode(m, key) -> CosineMode:
    if not isinstance(m, dict) or "k" not in m or "amp" not in m:
        raise ConfigError(key, "each mode needs 'k' and 'amp'")
    m = dict(m)
    try:
        k = tuple(int(x) for x in m.pop("k"))
        amp = float(m.pop("amp"))
        phase = float(m.pop("phase", 0.0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, str(exc))
    if m:
        raise ConfigError(f"{key}.{next(iter(m))}", "unknown key")
    return CosineMode(k, amp, phase)


def _item_to_entry(e):
    if isinstance(e, (int, float)) and not isinstance(e, bool):
        return float(e)
    if isinstance(e, list) and len(e) == 2:
        return (float(e[0]), float(e[1]))
    raise ValueError(f"matrix entry must be a number or [re, im], got {e!r}")


def _entry_to_item(e):
    if isinstance(e, tuple):
        return [e[0], e[1]]
    return e


# -- minimal TOML emitter for the fixed schema above ------------------------

def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)  # shortest round-trip form; valid TOML float
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)}")


def _emit_toml(d: dict) -> str:
    lines = []
    tables = []
    table_arrays = []
    for key, val in d.items():
        if isinstance(val, dict):
            tables.append((key, val))
        elif isinstance(val, list) and val and isinstance(val[0], dict):
            table_arrays.append((key, val))
        else:
            lines.append(f"{key} = {_fmt_value(val)}")
    for key, val in tables:
        lines.append("")
        lines.append(f"[{key}]")
        for k2, v2 in val.items():
            lines.append(f"{k2} = {_fmt_value(v2)}")
    for key, items in table_arrays:
        for item in items:
            lines.append("")
            lines.append(f"[[{key}]]")
            for k2, v2 in item.items():
                lines.append(f"{k2} = {_fmt_value(v2)}")
    return "\n".join(lines) + "\n"
