"""TOML scenario files: schema, defaults and validation.

A scenario holds one experiment. Unknown keys, missing required keys and
out-of-range values raise :class:`ScenarioError` naming the dotted field
and, when it can be found, the line in the file.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import kl_system as kl
from .elastic3d import ALIASES as ALIASES_3D
from .elastic3d import COMPONENTS as COMPONENTS_3D
from .gcm import LIMITERS, MAX_ORDER
from .materials import SHEAR_CONVENTIONS, Material, MaterialError

SOLVERS = ("shell", "elastic3d", "compare")
REQUIRED = object()

# shell component -> how the 3D field is reduced to compare against it
COMPARABLE = {
    "v_x": ("layer", "v_1"),
    "v_y": ("layer", "v_2"),
    "sigma_x": ("layer", "s_11"),
    "sigma_y": ("layer", "s_22"),
    "sigma_xy": ("layer", "s_12"),
    "v_mag": ("layer", "v_mag"),
    "M_x": ("moment", "xx"),
    "M_y": ("moment", "yy"),
    "M_xy": ("moment", "xy"),
}

SCHEMA: dict[str, dict[str, object]] = {
    "": {"solver": REQUIRED, "t_end": REQUIRED, "name": None},
    "material": {"E": REQUIRED, "nu": REQUIRED, "rho": REQUIRED, "h": 1.0},
    "geometry": {
        "extent_x": 10.0, "extent_y": 10.0, "nx": REQUIRED, "ny": REQUIRED,
        "thickness": None, "nz": None, "thicknesses": None,
    },
    "ic": {
        "kind": "zero", "component": "v_x", "magnitude": 100.0,
        "center": None, "radius": 0.0, "through_thickness": "midplane",
    },
    "bc": {"lateral": "zero_gradient", "faces": "free"},
    "numerics": {"order": 5, "courant": 0.9, "limiter": "none", "shear_convention": "engineering"},
    "outputs": {
        "snapshot_times": [], "components": [], "sensors": [], "profiles": [],
        "heatmaps": True, "slices": True,
    },
}
SENSOR_KEYS = {"name": REQUIRED, "offset": REQUIRED, "size": [1.0, 1.0], "component": "v_x"}
PROFILE_KEYS = {"axis": REQUIRED, "component": "v_x", "time": REQUIRED, "band_width": 1.0}


class ScenarioError(ValueError):
    def __init__(self, field: str, message: str, line: int | None = None):
        where = f" (line {line})" if line else ""
        super().__init__(f"{field}{where}: {message}")
        self.field = field
        self.line = line


@dataclass(frozen=True)
class Geometry:
    extent_x: float
    extent_y: float
    nx: int
    ny: int
    thickness: float | None = None
    nz: int | None = None
    thicknesses: tuple[float, ...] = ()
    nz_list: tuple[int, ...] = ()


@dataclass(frozen=True)
class ICConfig:
    kind: str = "zero"
    component: str = "v_x"
    magnitude: float = 100.0
    center: tuple[float, float] | None = None
    radius: float = 0.0
    through_thickness: str = "midplane"


@dataclass(frozen=True)
class BCConfig:
    lateral: str = "zero_gradient"
    faces: str = "free"


@dataclass(frozen=True)
class Numerics:
    order: int = 5
    courant: float = 0.9
    limiter: str = "none"
    shear_convention: str = "engineering"


@dataclass(frozen=True)
class SensorConfig:
    name: str
    offset: tuple[float, float]
    size: tuple[float, float] = (1.0, 1.0)
    component: str = "v_x"


@dataclass(frozen=True)
class ProfileConfig:
    axis: str
    component: str
    time: float
    band_width: float = 1.0


@dataclass(frozen=True)
class Outputs:
    snapshot_times: tuple[float, ...] = ()
    components: tuple[str, ...] = ()
    sensors: tuple[SensorConfig, ...] = ()
    profiles: tuple[ProfileConfig, ...] = ()
    heatmaps: bool = True
    slices: bool = True


@dataclass(frozen=True)
class Scenario:
    solver: str
    t_end: float
    material: Material
    geometry: Geometry
    ic: ICConfig = ICConfig()
    bc: BCConfig = BCConfig()
    numerics: Numerics = Numerics()
    outputs: Outputs = Outputs()
    name: str = "scenario"
    source_text: str = field(default="", repr=False, compare=False)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()

    def with_numerics(self, **changes) -> Scenario:
        from dataclasses import replace

        current = {k: v for k, v in vars(self.numerics).items()}
        current.update({k: v for k, v in changes.items() if v is not None})
        return replace(self, numerics=_numerics(current, ""))


def _line_of(text: str, section: str, key: str) -> int | None:
    current = ""
    pat = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for n, line in enumerate(text.splitlines(), 1):
        head = re.match(r"^\s*\[\s*([\w.]+)\s*\]", line)
        if head:
            current = head.group(1)
            continue
        if current == section and pat.match(line):
            return n
    return None


def _merge(raw: dict, schema: dict, prefix: str, text: str) -> dict:
    section = prefix.rstrip(".")
    for key in raw:
        if key not in schema:
            raise ScenarioError(prefix + key, f"unknown key; allowed: {sorted(schema)}", _line_of(text, section, key))
    out = {}
    for key, default in schema.items():
        if key in raw:
            out[key] = raw[key]
        elif default is REQUIRED:
            raise ScenarioError(prefix + key, "missing required key")
        else:
            out[key] = default
    return out


def _number(value, name, text, section, key, positive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(name, f"expected a number, got {value!r}", _line_of(text, section, key))
    if positive and value <= 0:
        raise ScenarioError(name, f"must be positive, got {value}", _line_of(text, section, key))
    return float(value)


def _integer(value, name, text, section, key, minimum=2) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(name, f"expected an integer, got {value!r}", _line_of(text, section, key))
    if value < minimum:
        raise ScenarioError(name, f"must be at least {minimum}, got {value}", _line_of(text, section, key))
    return value


def _numerics(raw: dict, text: str) -> Numerics:
    order = _integer(raw["order"], "numerics.order", text, "numerics", "order", minimum=1)
    if order > MAX_ORDER:
        raise ScenarioError("numerics.order", f"must be in 1..{MAX_ORDER}, got {order}", _line_of(text, "numerics", "order"))
    courant = _number(raw["courant"], "numerics.courant", text, "numerics", "courant", positive=True)
    if courant > 1:
        raise ScenarioError("numerics.courant", f"must lie in (0, 1], got {courant}", _line_of(text, "numerics", "courant"))
    if raw["limiter"] not in LIMITERS:
        raise ScenarioError("numerics.limiter", f"expected one of {LIMITERS}", _line_of(text, "numerics", "limiter"))
    if raw["shear_convention"] not in SHEAR_CONVENTIONS:
        raise ScenarioError("numerics.shear_convention", f"expected one of {SHEAR_CONVENTIONS}",
                            _line_of(text, "numerics", "shear_convention"))
    return Numerics(order, courant, raw["limiter"], raw["shear_convention"])


def _pair(value, name, text, section, key) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ScenarioError(name, f"expected a two-element list, got {value!r}", _line_of(text, section, key))
    return tuple(_number(v, name, text, section, key) for v in value)


def components_for(solver: str) -> set[str]:
    if solver == "shell":
        return set(kl.COMPONENTS) | {"v_mag"}
    if solver == "elastic3d":
        return set(COMPONENTS_3D) | set(ALIASES_3D) | {"v_mag"}
    return set(COMPARABLE)


def parse_text(text: str, name: str = "scenario") -> Scenario:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError("<file>", f"TOML syntax error: {exc}") from None

    sections = {k: v for k, v in raw.items() if isinstance(v, dict)}
    top = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    for key in sections:
        if key not in SCHEMA:
            raise ScenarioError(key, f"unknown section; allowed: {sorted(s for s in SCHEMA if s)}", _line_of(text, "", f"[{key}"))
    top = _merge(top, SCHEMA[""], "", text)
    parts = {s: _merge(sections.get(s, {}), SCHEMA[s], s + ".", text) for s in SCHEMA if s}

    solver = top["solver"]
    if solver not in SOLVERS:
        raise ScenarioError("solver", f"expected one of {SOLVERS}, got {solver!r}", _line_of(text, "", "solver"))
    t_end = _number(top["t_end"], "t_end", text, "", "t_end", positive=True)

    mat = parts["material"]
    try:
        material = Material(**{k: _number(mat[k], f"material.{k}", text, "material", k) for k in ("E", "nu", "rho", "h")})
    except MaterialError as exc:
        raise ScenarioError(f"material.{exc.field}", str(exc).split(": ", 1)[1], _line_of(text, "material", exc.field)) from None

    g = parts["geometry"]
    ex = _number(g["extent_x"], "geometry.extent_x", text, "geometry", "extent_x", positive=True)
    ey = _number(g["extent_y"], "geometry.extent_y", text, "geometry", "extent_y", positive=True)
    nx = _integer(g["nx"], "geometry.nx", text, "geometry", "nx")
    ny = _integer(g["ny"], "geometry.ny", text, "geometry", "ny")
    thickness = None if g["thickness"] is None else _number(g["thickness"], "geometry.thickness", text, "geometry", "thickness", positive=True)
    thicknesses: tuple[float, ...] = ()
    if g["thicknesses"] is not None:
        if not isinstance(g["thicknesses"], list) or not g["thicknesses"]:
            raise ScenarioError("geometry.thicknesses", "expected a non-empty list", _line_of(text, "geometry", "thicknesses"))
        thicknesses = tuple(_number(h, "geometry.thicknesses", text, "geometry", "thicknesses", positive=True) for h in g["thicknesses"])
    nz, nz_list = None, ()
    if isinstance(g["nz"], list):
        nz_list = tuple(_integer(n, "geometry.nz", text, "geometry", "nz") for n in g["nz"])
    elif g["nz"] is not None:
        nz = _integer(g["nz"], "geometry.nz", text, "geometry", "nz")
    if solver == "elastic3d" and (thickness is None or nz is None):
        raise ScenarioError("geometry.thickness", "elastic3d needs geometry.thickness and an integer geometry.nz")
    if solver == "compare":
        if not thicknesses:
            raise ScenarioError("geometry.thicknesses", "compare needs a list of plate thicknesses")
        if nz is not None:
            nz_list = (nz,) * len(thicknesses)
        if len(nz_list) != len(thicknesses):
            raise ScenarioError("geometry.nz", "compare needs one nz per thickness (or a single integer)",
                                _line_of(text, "geometry", "nz"))
    geometry = Geometry(ex, ey, nx, ny, thickness, nz, thicknesses, nz_list)

    i = parts["ic"]
    if i["kind"] not in ("zero", "point", "gradient"):
        raise ScenarioError("ic.kind", f"expected zero, point or gradient, got {i['kind']!r}", _line_of(text, "ic", "kind"))
    if i["kind"] == "gradient" and solver == "shell":
        raise ScenarioError("ic.kind", "the shell solver has no through-thickness gradient; use a point w_x source",
                            _line_of(text, "ic", "kind"))
    center = None if i["center"] is None else _pair(i["center"], "ic.center", text, "ic", "center")
    if center is not None and not (0 <= center[0] <= ex and 0 <= center[1] <= ey):
        raise ScenarioError("ic.center", f"{center} lies outside the {ex} x {ey} domain", _line_of(text, "ic", "center"))
    radius = _number(i["radius"], "ic.radius", text, "ic", "radius")
    if radius < 0:
        raise ScenarioError("ic.radius", "must be non-negative", _line_of(text, "ic", "radius"))
    if i["through_thickness"] not in ("midplane", "column"):
        raise ScenarioError("ic.through_thickness", "expected midplane or column", _line_of(text, "ic", "through_thickness"))
    if i["kind"] != "zero":
        allowed = set(kl.COMPONENTS) if solver == "shell" else set(COMPONENTS_3D) | set(ALIASES_3D)
        if solver == "compare":
            allowed = {"v_x", "v_y"}
        if i["component"] not in allowed:
            raise ScenarioError("ic.component", f"{i['component']!r} is not valid for solver {solver}", _line_of(text, "ic", "component"))
    ic = ICConfig(i["kind"], i["component"], _number(i["magnitude"], "ic.magnitude", text, "ic", "magnitude"),
                  center, radius, i["through_thickness"])

    b = parts["bc"]
    if b["lateral"] != "zero_gradient":
        raise ScenarioError("bc.lateral", "only zero_gradient is supported", _line_of(text, "bc", "lateral"))
    if b["faces"] not in ("free", "zero_gradient"):
        raise ScenarioError("bc.faces", "expected free or zero_gradient", _line_of(text, "bc", "faces"))
    bc = BCConfig(b["lateral"], b["faces"])

    numerics = _numerics(parts["numerics"], text)

    o = parts["outputs"]
    times = tuple(_number(t, "outputs.snapshot_times", text, "outputs", "snapshot_times") for t in o["snapshot_times"])
    for t in times:
        if not 0 <= t <= t_end:
            raise ScenarioError("outputs.snapshot_times", f"time {t} outside [0, t_end={t_end}]", _line_of(text, "outputs", "snapshot_times"))
    known = components_for(solver)
    for c in o["components"]:
        if c not in known:
            raise ScenarioError("outputs.components", f"{c!r} is not a {solver} component; known: {sorted(known)}",
                                _line_of(text, "outputs", "components"))
    sensors = []
    for k, s in enumerate(o["sensors"]):
        s = _merge(s, SENSOR_KEYS, f"outputs.sensors[{k}].", text)
        sc = SensorConfig(str(s["name"]), _pair(s["offset"], f"outputs.sensors[{k}].offset", text, "outputs", "sensors"),
                          _pair(s["size"], f"outputs.sensors[{k}].size", text, "outputs", "sensors"), s["component"])
        if sc.component not in known:
            raise ScenarioError(f"outputs.sensors[{k}].component", f"{sc.component!r} is not a {solver} component")
        cx, cy = ex / 2 + sc.offset[0], ey / 2 + sc.offset[1]
        if not (0 <= cx - sc.size[0] / 2 and cx + sc.size[0] / 2 <= ex and 0 <= cy - sc.size[1] / 2 and cy + sc.size[1] / 2 <= ey):
            raise ScenarioError(f"outputs.sensors[{k}]", "sensor rectangle leaves the domain")
        sensors.append(sc)
    profiles = []
    for k, p in enumerate(o["profiles"]):
        p = _merge(p, PROFILE_KEYS, f"outputs.profiles[{k}].", text)
        if p["axis"] not in ("x", "y"):
            raise ScenarioError(f"outputs.profiles[{k}].axis", "expected x or y")
        if p["component"] not in known:
            raise ScenarioError(f"outputs.profiles[{k}].component", f"{p['component']!r} is not a {solver} component")
        pt = _number(p["time"], f"outputs.profiles[{k}].time", text, "outputs", "profiles")
        if pt not in times:
            raise ScenarioError(f"outputs.profiles[{k}].time", "profile time must be one of outputs.snapshot_times")
        profiles.append(ProfileConfig(p["axis"], p["component"], pt,
                                      _number(p["band_width"], f"outputs.profiles[{k}].band_width", text, "outputs", "profiles", positive=True)))
    outputs = Outputs(times, tuple(o["components"]), tuple(sensors), tuple(profiles), bool(o["heatmaps"]), bool(o["slices"]))

    return Scenario(solver, t_end, material, geometry, ic, bc, numerics, outputs,
                    name=top["name"] or name, source_text=text)


def bundled_names() -> list[str]:
    root = resources.files("klgcm") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve(path_or_name: str | Path) -> Path | resources.abc.Traversable:
    p = Path(path_or_name)
    if p.exists():
        return p
    name = p.name[:-5] if p.name.endswith(".toml") else p.name
    candidate = resources.files("klgcm") / "scenarios" / f"{name}.toml"
    if candidate.is_file():
        return candidate
    raise FileNotFoundError(f"no scenario file {path_or_name!s} (bundled: {', '.join(bundled_names())})")


def parse_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file (or the name of a bundled scenario)."""
    p = resolve(path)
    name = p.name[:-5] if p.name.endswith(".toml") else p.name
    return parse_text(p.read_text(), name=name)
