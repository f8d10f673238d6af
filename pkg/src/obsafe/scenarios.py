"""Scenario records: the TOML file format and the built-in studies.

A scenario file is a TOML document with nested sections mapping 1:1 onto
the Scenario dataclass. Unknown keys are rejected so typos fail loudly;
parse errors carry the line number from the TOML parser.
"""
import copy
from dataclasses import dataclass, field

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from .errors import ScenarioError

SCHEMA_VERSION = 1

# section -> key -> (type, required)
_SCHEMA = {
    "model": {
        "id": (str, True),
        "d_bar": (float, False),
        "v_bar": (float, False),
        "mass": (float, False),
        "inertia": (float, False),
        "gravity": (float, False),
        "position_noise": (float, False),
        "pitch_noise": (float, False),
    },
    "barrier": {
        "id": (str, True),
        "alpha0": (float, False),
        "x_max": (float, False),
        "center": (list, False),
        "radius": (float, False),
        "sigma": (float, False),
        "alpha": (str, False),
        "alpha_gain": (float, False),
        "kappa": (str, False),
    },
    "observer": {
        "kind": (str, True),
        "theta": (float, False),
        "delta": (float, False),
        "q_diag": (list, False),
        "r_diag": (list, False),
        "p0_diag": (list, False),
        "v0": (float, False),
        "p_lo": (float, False),
        "p_hi": (float, False),
    },
    "controller": {
        "kind": (str, True),
        "robust_d_bar": (float, False),
        "qp_iteration_cap": (int, False),
    },
    "nominal": {
        "q_diag": (list, True),
        "r_diag": (list, True),
        "x_ref": (list, False),
    },
    "init": {
        "x0": (list, True),
        "xhat0": (list, True),
    },
    "disturbance.d": {
        "kind": (str, False),
        "magnitude": (float, False),
        "direction": (list, False),
        "frequency": (float, False),
        "phase": (float, False),
        "dwell": (float, False),
    },
    "disturbance.v": {
        "kind": (str, False),
        "magnitude": (float, False),
        "direction": (list, False),
        "frequency": (float, False),
        "phase": (float, False),
        "dwell": (float, False),
    },
    "run": {
        "t_final": (float, True),
        "dt": (float, True),
        "seed": (int, True),
    },
}

_MODEL_IDS = ("double_integrator", "planar_quadrotor")
_BARRIER_IDS = ("di_ceiling", "quad_obstacle")
_OBSERVER_KINDS = ("luenberger", "dekf")
_CONTROLLER_KINDS = ("baseline", "approach1", "approach2")
_DISTURBANCE_KINDS = ("zero", "constant_direction", "sinusoidal", "piecewise_constant_random")


@dataclass
class Scenario:
    name: str
    model: dict
    barrier: dict
    observer: dict
    controller: dict
    nominal: dict
    init: dict
    disturbance_d: dict = field(default_factory=lambda: {"kind": "zero"})
    disturbance_v: dict = field(default_factory=lambda: {"kind": "zero"})
    t_final: float = 10.0
    dt: float = 1e-3
    seed: int = 0
    schema_version: int = SCHEMA_VERSION

    def replace_seed(self, seed: int) -> "Scenario":
        s = copy.deepcopy(self)
        s.seed = int(seed)
        return s

    def replace_dt(self, dt: float) -> "Scenario":
        s = copy.deepcopy(self)
        s.dt = float(dt)
        return s

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "name": self.name,
            "model": dict(self.model),
            "barrier": dict(self.barrier),
            "observer": dict(self.observer),
            "controller": dict(self.controller),
            "nominal": dict(self.nominal),
            "init": dict(self.init),
            "disturbance": {"d": dict(self.disturbance_d), "v": dict(self.disturbance_v)},
            "run": {"t_final": self.t_final, "dt": self.dt, "seed": self.seed},
        }

    @staticmethod
    def from_dict(doc: dict) -> "Scenario":
        doc = _validate_document(doc)
        return Scenario(
            name=doc["name"],
            model=doc["model"],
            barrier=doc["barrier"],
            observer=doc["observer"],
            controller=doc["controller"],
            nominal=doc["nominal"],
            init=doc["init"],
            disturbance_d=doc["disturbance"]["d"],
            disturbance_v=doc["disturbance"]["v"],
            t_final=doc["run"]["t_final"],
            dt=doc["run"]["dt"],
            seed=doc["run"]["seed"],
            schema_version=doc["schema_version"],
        )


def _coerce(value, typ, path):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"key '{path}' must be a number")
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"key '{path}' must be an integer")
        return int(value)
    if typ is str:
        if not isinstance(value, str):
            raise ScenarioError(f"key '{path}' must be a string")
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ScenarioError(f"key '{path}' must be an array")
        out = []
        for i, v in enumerate(value):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ScenarioError(f"key '{path}[{i}]' must be a number")
            out.append(float(v))
        return out
    raise ScenarioError(f"unsupported type for '{path}'")


def _validate_section(section: dict, schema: dict, path: str) -> dict:
    out = {}
    for key, value in section.items():
        if key not in schema:
            raise ScenarioError(f"unknown key '{path}.{key}'")
        out[key] = _coerce(value, schema[key][0], f"{path}.{key}")
    for key, (typ, required) in schema.items():
        if required and key not in out:
            raise ScenarioError(f"missing key '{path}.{key}'")
    return out


def _validate_document(doc: dict) -> dict:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a table")
    known_top = {"schema_version", "name", "model", "barrier", "observer",
                 "controller", "nominal", "init", "disturbance", "run"}
    for key in doc:
        if key not in known_top:
            raise ScenarioError(f"unknown key '{key}'")
    if "schema_version" not in doc:
        raise ScenarioError("missing key 'schema_version'")
    version = doc["schema_version"]
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version!r}")
    if "name" not in doc or not isinstance(doc["name"], str):
        raise ScenarioError("missing key 'name'")
    out = {"schema_version": version, "name": doc["name"]}
    for section in ("model", "barrier", "observer", "controller", "nominal", "init"):
        if section not in doc or not isinstance(doc[section], dict):
            raise ScenarioError(f"missing section '{section}'")
        out[section] = _validate_section(doc[section], _SCHEMA[section], section)
    dist = doc.get("disturbance", {})
    if not isinstance(dist, dict):
        raise ScenarioError("'disturbance' must be a table")
    for key in dist:
        if key not in ("d", "v"):
            raise ScenarioError(f"unknown key 'disturbance.{key}'")
    out["disturbance"] = {
        "d": _validate_section(dist.get("d", {"kind": "zero"}), _SCHEMA["disturbance.d"], "disturbance.d"),
        "v": _validate_section(dist.get("v", {"kind": "zero"}), _SCHEMA["disturbance.v"], "disturbance.v"),
    }
    out["disturbance"]["d"].setdefault("kind", "zero")
    out["disturbance"]["v"].setdefault("kind", "zero")
    if "run" not in doc or not isinstance(doc["run"], dict):
        raise ScenarioError("missing section 'run'")
    out["run"] = _validate_section(doc["run"], _SCHEMA["run"], "run")

    # semantic checks
    if out["model"]["id"] not in _MODEL_IDS:
        raise ScenarioError(f"model.id must be one of {_MODEL_IDS}")
    if out["barrier"]["id"] not in _BARRIER_IDS:
        raise ScenarioError(f"barrier.id must be one of {_BARRIER_IDS}")
    if out["observer"]["kind"] not in _OBSERVER_KINDS:
        raise ScenarioError(f"observer.kind must be one of {_OBSERVER_KINDS}")
    if out["controller"]["kind"] not in _CONTROLLER_KINDS:
        raise ScenarioError(f"controller.kind must be one of {_CONTROLLER_KINDS}")
    for leg in ("d", "v"):
        kind = out["disturbance"][leg]["kind"]
        if kind not in _DISTURBANCE_KINDS:
            raise ScenarioError(f"disturbance.{leg}.kind must be one of {_DISTURBANCE_KINDS}")
    if out["run"]["dt"] <= 0:
        raise ScenarioError("run.dt must be positive")
    if out["run"]["t_final"] < out["run"]["dt"]:
        raise ScenarioError("run.t_final must be at least run.dt")
    return out


def parse_scenario(text: str) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"TOML parse error: {exc}") from exc
    return Scenario.from_dict(doc)


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    raise ScenarioError(f"cannot serialize value {v!r}")


def dumps_scenario(s: Scenario) -> str:
    doc = s.to_dict()
    lines = [
        f"schema_version = {doc['schema_version']}",
        f"name = {_fmt_value(doc['name'])}",
    ]
    for section in ("model", "barrier", "observer", "controller", "nominal", "init"):
        lines.append("")
        lines.append(f"[{section}]")
        for key, value in doc[section].items():
            lines.append(f"{key} = {_fmt_value(value)}")
    for leg in ("d", "v"):
        lines.append("")
        lines.append(f"[disturbance.{leg}]")
        for key, value in doc["disturbance"][leg].items():
            lines.append(f"{key} = {_fmt_value(value)}")
    lines.append("")
    lines.append("[run]")
    for key, value in doc["run"].items():
        lines.append(f"{key} = {_fmt_value(value)}")
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# built-in studies


def _di_base(name: str, controller: str) -> Scenario:
    return Scenario(
        name=name,
        model={"id": "double_integrator"},
        barrier={"id": "di_ceiling", "alpha0": 1.0, "x_max": 1.0,
                 "alpha": "linear", "alpha_gain": 1.0, "kappa": "one"},
        observer={"kind": "luenberger", "theta": 0.5, "delta": 0.25},
        controller={"kind": controller},
        nominal={"q_diag": [2.0, 1.0], "r_diag": [1.0], "x_ref": [2.5, 0.0]},
        init={"x0": [0.15, 0.2], "xhat0": [0.0, 0.0]},
        t_final=10.0,
        dt=1e-3,
        seed=0,
    )


def _di_disturbed(name: str, controller: str) -> Scenario:
    s = _di_base(name, controller)
    s.model = {"id": "double_integrator", "d_bar": 0.1, "v_bar": 0.01}
    s.observer = {"kind": "luenberger", "theta": 1.0, "delta": 0.2}
    s.init = {"x0": [-0.88, 0.16], "xhat0": [-1.0, 0.0]}
    s.disturbance_d = {"kind": "piecewise_constant_random", "dwell": 0.1}
    s.disturbance_v = {"kind": "sinusoidal", "direction": [1.0], "frequency": 3.0}
    return s


def _quad_base(name: str, controller: str) -> Scenario:
    # The obstacle sits deep below the flight path so the direction from its
    # center to the vehicle stays steeply elevated: that keeps the certified
    # thrust-channel interval sign-definite despite the pitch uncertainty.
    return Scenario(
        name=name,
        model={"id": "planar_quadrotor"},
        barrier={"id": "quad_obstacle", "center": [0.0, -10.0], "radius": 10.05,
                 "sigma": 0.5, "alpha": "linear", "alpha_gain": 5.0, "kappa": "one"},
        observer={
            "kind": "dekf",
            "theta": 6.0,
            "q_diag": [1e-4, 1e-4, 1e-5, 0.02, 0.02, 1e-5],
            "r_diag": [0.1, 0.1, 0.3],
            "p0_diag": [2.43, 2.4, 7.1, 184.0, 173.0, 485.0],
            "v0": 0.01,
        },
        controller={"kind": controller},
        nominal={"q_diag": [0.05, 4.0, 3.0, 0.2, 1.2, 0.8],
                 "r_diag": [0.4, 3.0],
                 "x_ref": [6.0, 0.0, 0.0, 0.0, 0.0, 0.0]},
        init={"x0": [-6.0, 0.0, 0.0, 0.0, 0.0, 0.0],
              "xhat0": [-5.96, -0.03, 0.005, 0.0, 0.0, 0.0]},
        disturbance_d={"kind": "piecewise_constant_random", "dwell": 0.1},
        disturbance_v={"kind": "piecewise_constant_random", "dwell": 0.1},
        t_final=14.0,
        dt=2e-3,
        seed=0,
    )


def _quad_baseline(name: str) -> Scenario:
    s = _quad_base(name, "baseline")
    # deterministic worst case: steady downward wind plus a measurement
    # offset that makes the estimate float above the true height
    s.disturbance_d = {"kind": "constant_direction", "direction": [0.0, -1.0]}
    s.disturbance_v = {"kind": "constant_direction", "direction": [0.0, 1.0, 0.0],
                       "magnitude": 0.1}
    return s


BUILTIN_BUILDERS = {
    "di_baseline": lambda: _di_base("di_baseline", "baseline"),
    "di_approach1": lambda: _di_base("di_approach1", "approach1"),
    "di_approach2": lambda: _di_base("di_approach2", "approach2"),
    "di_approach1_disturbed": lambda: _di_disturbed("di_approach1_disturbed", "approach1"),
    "di_approach2_disturbed": lambda: _di_disturbed("di_approach2_disturbed", "approach2"),
    "quad_baseline": lambda: _quad_baseline("quad_baseline"),
    "quad_approach2": lambda: _quad_base("quad_approach2", "approach2"),
}


def builtin_names() -> list:
    return list(BUILTIN_BUILDERS)


def builtin_scenario(name: str) -> Scenario:
    if name not in BUILTIN_BUILDERS:
        raise ScenarioError(f"unknown built-in scenario '{name}'")
    return BUILTIN_BUILDERS[name]()
