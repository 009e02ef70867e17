"""Project configuration: robot spec files and the project file that ties
robot, compensator, noise, plan and test-pose settings together.

All values cross the boundary in declared units (mm, deg, urad/Nm, N, ...)
and are stored SI. See the README for a complete annotated example.
"""

import dataclasses
import os

import numpy as np

from . import textdoc
from .design import TestPose
from .errors import ConfigError
from .kinematics import RobotModel, kr270_like
from .se3 import rpy_from_matrix, rpy_matrix, transform
from .simulator import NoiseSpec
from .stiffness import CompensatorModel
from .units import from_si, quantity, quantity_groups


def _transform_from_section(sec, what):
    xyz = quantity(sec.get("xyz", [0.0, 0.0, 0.0, "mm"]), "mm")
    rpy = quantity(sec.get("rpy", [0.0, 0.0, 0.0, "deg"]), "deg")
    if np.shape(xyz) != (3,) or np.shape(rpy) != (3,):
        raise ConfigError(f"{what}: xyz and rpy must be 3-vectors")
    return transform(rpy_matrix(*rpy), xyz)


def parse_robot_spec(path):
    """Robot spec file -> RobotModel. Either a named preset or an explicit
    link table with limits, base/tool transforms, markers and compliances."""
    doc = textdoc.load(path)
    robot = doc.section("robot", default=None)
    if robot is not None and "preset" in robot:
        preset = robot.get("preset")
        if preset != "kr270_like":
            raise ConfigError(f"{path}: unknown robot preset {preset!r}")
        return kr270_like()

    links_sec = doc.section("links")
    rows = []
    for raw in links_sec.get_all("link"):
        vals = quantity_groups(raw)
        if len(vals) != 4:
            raise ConfigError(f"{path}: link row must be 'a alpha d theta0' with units")
        a, alpha, d, theta0 = vals
        if a < 0:
            raise ConfigError(f"{path}: link length a must be >= 0 (got {a})")
        if d < 0:
            raise ConfigError(f"{path}: link offset d must be >= 0 (got {d})")
        rows.append([a, alpha, d, theta0])
    if not rows:
        raise ConfigError(f"{path}: [links] section has no link rows")
    n = len(rows)

    limits = None
    if "limits" in doc:
        lim_rows = [quantity(v, "deg") for v in doc.section("limits").get_all("limit")]
        if len(lim_rows) != n:
            raise ConfigError(f"{path}: need one limit row per joint")
        limits = np.array(lim_rows)

    markers = None
    if "markers" in doc:
        markers = np.array(
            [quantity(v, "mm") for v in doc.section("markers").get_all("marker")]
        )

    compliances = None
    if "compliances" in doc:
        compliances = np.array(quantity(doc.section("compliances").get("k"), "urad/Nm"))
        if compliances.shape != (n,):
            raise ConfigError(f"{path}: need {n} compliances")

    base = transform()
    tool = transform()
    if "base" in doc:
        base = _transform_from_section(doc.section("base"), f"{path} [base]")
    if "tool" in doc:
        tool = _transform_from_section(doc.section("tool"), f"{path} [tool]")

    try:
        return RobotModel(
            link_rows=np.array(rows),
            base_transform=base,
            tool_transform=tool,
            marker_offsets=markers if markers is not None else np.zeros((1, 3)),
            nominal_compliances=compliances,
            joint_limits=limits,
        )
    except Exception as exc:
        raise ConfigError(f"{path}: invalid robot model: {exc}") from exc


def write_robot_spec(path, model):
    doc = textdoc.Document()
    links = doc.add_section("links")
    for a, alpha, d, theta0 in model.link_rows:
        links.add(
            "link",
            [
                from_si(a, "mm"), "mm", from_si(alpha, "deg"), "deg",
                from_si(d, "mm"), "mm", from_si(theta0, "deg"), "deg",
            ],
        )
    lim = doc.add_section("limits")
    for lo, hi in model.joint_limits:
        lim.add("limit", [from_si(lo, "deg"), from_si(hi, "deg"), "deg"])
    for name, T in (("base", model.base_transform), ("tool", model.tool_transform)):
        sec = doc.add_section(name)
        sec.add("xyz", [from_si(v, "mm") for v in T[:3, 3]] + ["mm"])
        sec.add("rpy", [from_si(v, "deg") for v in rpy_from_matrix(T[:3, :3])] + ["deg"])
    mk = doc.add_section("markers")
    for off in model.marker_offsets:
        mk.add("marker", [from_si(v, "mm") for v in off] + ["mm"])
    comp = doc.add_section("compliances")
    comp.add("k", [from_si(v, "urad/Nm") for v in model.nominal_compliances] + ["urad/Nm"])
    textdoc.dump(doc, path)


@dataclasses.dataclass
class PlanSettings:
    m: int = 15
    grid_size: int = 200
    restarts: int = 16
    q2_values: np.ndarray = None
    force_magnitudes: tuple = (2000.0, 3000.0)


@dataclasses.dataclass
class ValidationSettings:
    n: int = 10
    q2_values: np.ndarray = None
    force_magnitude: float = 2500.0


@dataclasses.dataclass
class SimulateSettings:
    repetitions: int = 3
    q2_sweep: np.ndarray = None
    geometry_markers: list = None
    base_perturbation: np.ndarray = None
    tool_perturbation: np.ndarray = None
    generation_mode: str = "linear"


@dataclasses.dataclass
class ProjectConfig:
    path: str
    seed: int
    model: RobotModel
    comp: CompensatorModel
    noise: NoiseSpec
    plan: PlanSettings
    validation: ValidationSettings
    simulate: SimulateSettings
    test_pose: TestPose


def _parse_compensator(sec, source):
    mode = sec.get("mode", "nominal")
    if mode not in ("nominal", "identify"):
        raise ConfigError(f"{source}: compensator mode must be nominal or identify")
    if mode == "identify" and "L" not in sec:
        # parameters to be filled in by the identification verbs
        return None
    sign_token = sec.get("cosine_sign", "plus")
    if sign_token not in ("plus", "minus"):
        raise ConfigError(f"{source}: cosine_sign must be plus or minus")
    try:
        return CompensatorModel(
            L=quantity(sec.get("L"), "mm"),
            a_x=quantity(sec.get("a_x"), "mm"),
            a_y=quantity(sec.get("a_y"), "mm"),
            K_c=quantity(sec.get("K_c"), "N/m"),
            s_0=quantity(sec.get("s_0"), "mm"),
            K_theta2_0=quantity(sec.get("K_theta2_0"), "Nm/rad"),
            cosine_sign=1.0 if sign_token == "plus" else -1.0,
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{source}: invalid compensator: {exc}") from exc


def parse_project(path):
    """Parse and validate a project file, resolving the robot spec."""
    from .errors import DataFormatError

    try:
        doc = textdoc.load(path)
    except DataFormatError as exc:
        raise ConfigError(str(exc)) from exc
    proj = doc.section("project")
    seed = int(proj.get("seed", 0))

    robot_ref = proj.get("robot")
    robot_path = os.path.join(os.path.dirname(os.path.abspath(path)), str(robot_ref))
    if not os.path.exists(robot_path):
        raise ConfigError(f"{path}: robot spec {robot_ref!r} not found")
    model = parse_robot_spec(robot_path)

    comp = None
    if "compensator" in doc:
        comp = _parse_compensator(doc.section("compensator"), path)

    noise = NoiseSpec(sigma_position=3e-5, seed=seed)
    if "noise" in doc:
        sigma = quantity(doc.section("noise").get("sigma_position", [0.03, "mm"]), "mm")
        if sigma < 0:
            raise ConfigError(f"{path}: noise sigma_position must be >= 0")
        noise = NoiseSpec(sigma_position=sigma, seed=seed)

    plan = PlanSettings()
    if "plan" in doc:
        sec = doc.section("plan")
        plan = PlanSettings(
            m=int(sec.get("m", 15)),
            grid_size=int(sec.get("grid_size", 200)),
            restarts=int(sec.get("restarts", 16)),
            q2_values=np.atleast_1d(quantity(sec.get("q2_values"), "deg"))
            if "q2_values" in sec
            else None,
            force_magnitudes=tuple(
                np.atleast_1d(quantity(sec.get("force_magnitudes", [2000.0, 3000.0, "N"]), "N"))
            ),
        )
        if plan.m < 1:
            raise ConfigError(f"{path}: plan m must be >= 1")

    validation = ValidationSettings()
    if "validation" in doc:
        sec = doc.section("validation")
        validation = ValidationSettings(
            n=int(sec.get("n", 10)),
            q2_values=np.atleast_1d(quantity(sec.get("q2_values"), "deg"))
            if "q2_values" in sec
            else None,
            force_magnitude=float(quantity(sec.get("force_magnitude", [2500.0, "N"]), "N")),
        )

    simulate = SimulateSettings()
    if "simulate" in doc:
        sec = doc.section("simulate")
        markers = None
        if "marker" in sec:
            markers = []
            for raw in sec.get_all("marker"):
                vals = quantity_groups(raw)
                if len(vals) != 2:
                    raise ConfigError(
                        f"{path}: geometry marker must be 'R <len unit> beta <angle unit>'"
                    )
                markers.append((vals[0], vals[1]))
        simulate = SimulateSettings(
            repetitions=int(sec.get("repetitions", 3)),
            q2_sweep=np.atleast_1d(quantity(sec.get("q2_sweep"), "deg"))
            if "q2_sweep" in sec
            else None,
            geometry_markers=markers,
            base_perturbation=_transform_from_section(sec, f"{path} [simulate]")
            if "xyz" in sec or "rpy" in sec
            else None,
            tool_perturbation=None,
            generation_mode=str(sec.get("generation_mode", "linear")),
        )
        if "tool_xyz" in sec or "tool_rpy" in sec:
            xyz = quantity(sec.get("tool_xyz", [0.0, 0.0, 0.0, "mm"]), "mm")
            rpy = quantity(sec.get("tool_rpy", [0.0, 0.0, 0.0, "deg"]), "deg")
            simulate.tool_perturbation = transform(rpy_matrix(*rpy), xyz)
        if simulate.generation_mode not in ("linear", "nonlinear"):
            raise ConfigError(f"{path}: generation_mode must be linear or nonlinear")

    test_pose = None
    if "test_pose" in doc:
        sec = doc.section("test_pose")
        q = np.atleast_1d(quantity(sec.get("q"), "deg"))
        w = np.asarray(sec.get("wrench"), dtype=float)
        if q.size != model.n_joints or w.size != 6:
            raise ConfigError(f"{path}: test pose needs q({model.n_joints}) and wrench(6)")
        test_pose = TestPose(q, w)

    return ProjectConfig(
        path=os.path.abspath(path),
        seed=seed,
        model=model,
        comp=comp,
        noise=noise,
        plan=plan,
        validation=validation,
        simulate=simulate,
        test_pose=test_pose,
    )
