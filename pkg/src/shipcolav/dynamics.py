"""3-DOF surface vessel dynamics (surge, sway, yaw).

State follows SNAME notation: pose ``eta = [x_n, y_n, psi]`` in the NED frame
(x north, y east, psi measured from north towards east) and body-frame
velocity ``nu = [u, v, r]``.

    eta_dot = R(psi) nu
    M nu_dot + C(nu) nu + D(nu) nu = B f,     f = [T_u, T_r]
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "ConfigError",
    "SimulationFault",
    "VesselState",
    "ControlInput",
    "VesselModel",
    "wrap_angle",
    "rotation_matrix",
    "state_derivative",
    "step",
    "load_model",
    "default_model",
]


class ConfigError(ValueError):
    """Invalid model or run configuration, raised at load time."""


class SimulationFault(RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


def wrap_angle(a):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    w = np.pi - np.mod(np.negative(a) + np.pi, 2.0 * np.pi)
    # angles already in range pass through untouched (no rounding)
    out = np.where((a > -np.pi) & (a <= np.pi), a, w)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class VesselState:
    x_n: float = 0.0
    y_n: float = 0.0
    psi: float = 0.0
    u: float = 0.0
    v: float = 0.0
    r: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x_n, self.y_n, self.psi, self.u, self.v, self.r], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "VesselState":
        a = [float(x) for x in arr]
        return cls(a[0], a[1], a[2], a[3], a[4], a[5])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x_n, self.y_n])

    @property
    def speed(self) -> float:
        return math.hypot(self.u, self.v)


@dataclass(frozen=True)
class ControlInput:
    T_u: float = 0.0
    T_r: float = 0.0


@dataclass(eq=False)
class VesselModel:
    """Matrices and limits of a 3-DOF vessel.

    ``C_fn`` and ``D_fn`` map a velocity 3-vector to a 3x3 matrix. They default
    to the skew-symmetric Coriolis matrix of ``M`` and to linear + quadratic +
    cubic diagonal damping.
    """

    M: np.ndarray
    B: np.ndarray
    length: float
    width: float
    U_max: float
    control_limits: tuple[float, float]
    D_linear: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    D_quadratic: np.ndarray = field(default_factory=lambda: np.zeros(3))
    D_cubic: np.ndarray = field(default_factory=lambda: np.zeros(3))
    C_fn: object = None
    D_fn: object = None
    name: str = "custom"

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        self.D_linear = np.asarray(self.D_linear, dtype=float)
        self.D_quadratic = np.asarray(self.D_quadratic, dtype=float)
        self.D_cubic = np.asarray(self.D_cubic, dtype=float)
        if self.M.shape != (3, 3):
            raise ConfigError(f"mass matrix must be 3x3, got {self.M.shape}")
        if self.B.shape != (3, 2):
            raise ConfigError(f"actuator matrix must be 3x2, got {self.B.shape}")
        if self.D_linear.shape != (3, 3):
            raise ConfigError(f"linear damping must be 3x3, got {self.D_linear.shape}")
        if not np.allclose(self.M, self.M.T, rtol=0, atol=1e-12):
            raise ConfigError("mass matrix is not symmetric")
        try:
            np.linalg.cholesky(self.M)
        except np.linalg.LinAlgError:
            raise ConfigError("mass matrix is not positive definite") from None
        if not self.width > 0:
            raise ConfigError("vessel width must be positive")
        if not self.length > 0:
            raise ConfigError("vessel length must be positive")
        if not self.U_max > 0:
            raise ConfigError("U_max must be positive")
        tu, tr = self.control_limits
        if not (tu > 0 and tr > 0):
            raise ConfigError("control limits must be positive")
        self.control_limits = (float(tu), float(tr))
        self.M_inv = np.linalg.inv(self.M)
        self._MinvB = self.M_inv @ self.B
        if self.C_fn is None:
            self.C_fn = self.coriolis
        if self.D_fn is None:
            self.D_fn = self.damping

    def coriolis(self, nu) -> np.ndarray:
        u, v, r = nu
        M = self.M
        a = M[1, 1] * v + M[1, 2] * r
        b = M[0, 0] * u
        return np.array([[0.0, 0.0, -a], [0.0, 0.0, b], [a, -b, 0.0]])

    def damping(self, nu) -> np.ndarray:
        nu = np.asarray(nu, dtype=float)
        return self.D_linear + np.diag(self.D_quadratic * np.abs(nu) + self.D_cubic * nu * nu)

    def saturate(self, f: ControlInput) -> ControlInput:
        tu, tr = self.control_limits
        return ControlInput(min(max(f.T_u, -tu), tu), min(max(f.T_r, -tr), tr))

    def scale_action(self, action) -> ControlInput:
        """Map a normalized action in [-1, 1]^2 to saturated forces."""
        a0 = min(max(float(action[0]), -1.0), 1.0)
        a1 = min(max(float(action[1]), -1.0), 1.0)
        return ControlInput(a0 * self.control_limits[0], a1 * self.control_limits[1])

    def kinetic_energy(self, nu) -> float:
        nu = np.asarray(nu, dtype=float)
        return 0.5 * float(nu @ self.M @ nu)


def rotation_matrix(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _derivative(x: np.ndarray, f: np.ndarray, model: VesselModel) -> np.ndarray:
    psi = x[2]
    nu = x[3:]
    c, s = math.cos(psi), math.sin(psi)
    u, v, r = nu
    out = np.empty(6)
    out[0] = c * u - s * v
    out[1] = s * u + c * v
    out[2] = r
    rhs = model.B @ f - model.C_fn(nu) @ nu - model.D_fn(nu) @ nu
    out[3:] = model.M_inv @ rhs
    return out


def state_derivative(state: VesselState, control: ControlInput, model: VesselModel) -> np.ndarray:
    """Return d/dt [eta; nu] as a 6-vector. ``control`` is saturated first."""
    f = model.saturate(control)
    return _derivative(state.as_array(), np.array([f.T_u, f.T_r]), model)


def rk4_array(x: np.ndarray, f: np.ndarray, model: VesselModel, dt: float) -> np.ndarray:
    """One RK4 step on the raw 6-vector; heading is wrapped afterwards."""
    k1 = _derivative(x, f, model)
    k2 = _derivative(x + 0.5 * dt * k1, f, model)
    k3 = _derivative(x + 0.5 * dt * k2, f, model)
    k4 = _derivative(x + dt * k3, f, model)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise SimulationFault("non-finite vessel state after integration step", state=x.copy())
    out[2] = wrap_angle(out[2])
    return out


def step(state: VesselState, control: ControlInput, model: VesselModel, dt: float) -> VesselState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    f = model.saturate(control)
    x = state.as_array()
    x[2] = wrap_angle(x[2])
    try:
        out = rk4_array(x, np.array([f.T_u, f.T_r]), model, dt)
    except SimulationFault as exc:
        raise SimulationFault(str(exc), state=state) from None
    return VesselState.from_array(out)


def _parse_matrix(text: str, shape, key: str) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    try:
        values = [[float(x) for x in r.split(",")] for r in rows]
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    arr = np.array(values, dtype=float)
    if len(shape) == 1:
        arr = arr.reshape(-1)
    if arr.shape != tuple(shape):
        raise ConfigError(f"{key}: expected shape {shape}, got {arr.shape}")
    return arr


def _format_matrix(a: np.ndarray) -> str:
    a = np.atleast_2d(a)
    return "; ".join(", ".join(repr(float(x)) for x in row) for row in a)


def load_model(path=None, **overrides) -> VesselModel:
    """Load a vessel model from a key-value config file.

    With no path the bundled ``cybership2.cfg`` is used. Keyword overrides
    replace individual fields after parsing (e.g. ``width=10.0``).
    """
    cp = configparser.ConfigParser()
    if path is None:
        text = resources.files("shipcolav.resources").joinpath("cybership2.cfg").read_text()
    else:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"ship model file not found: {p}")
        text = p.read_text()
    try:
        cp.read_string(text)
        vessel, mats, lim = cp["vessel"], cp["matrices"], cp["limits"]
        kw = dict(
            name=vessel.get("name", "custom"),
            length=vessel.getfloat("length"),
            width=vessel.getfloat("width"),
            U_max=vessel.getfloat("u_max"),
            M=_parse_matrix(mats["mass"], (3, 3), "mass"),
            D_linear=_parse_matrix(mats.get("linear_damping", "0,0,0;0,0,0;0,0,0"), (3, 3), "linear_damping"),
            D_quadratic=_parse_matrix(mats.get("quadratic_damping", "0,0,0"), (3,), "quadratic_damping"),
            D_cubic=_parse_matrix(mats.get("cubic_damping", "0,0,0"), (3,), "cubic_damping"),
            B=_parse_matrix(mats["actuator"], (3, 2), "actuator"),
            control_limits=(lim.getfloat("tu_max"), lim.getfloat("tr_max")),
        )
    except (KeyError, configparser.Error, TypeError) as exc:
        raise ConfigError(f"malformed ship model file: {exc}") from None
    kw.update(overrides)
    return VesselModel(**kw)


def dump_model(model: VesselModel) -> str:
    """Serialize a model back to the config-file format."""
    return "\n".join([
        "[vessel]",
        f"name = {model.name}",
        f"length = {model.length!r}",
        f"width = {model.width!r}",
        f"u_max = {model.U_max!r}",
        "",
        "[matrices]",
        f"mass = {_format_matrix(model.M)}",
        f"linear_damping = {_format_matrix(model.D_linear)}",
        f"quadratic_damping = {_format_matrix(model.D_quadratic)}",
        f"cubic_damping = {_format_matrix(model.D_cubic)}",
        f"actuator = {_format_matrix(model.B)}",
        "",
        "[limits]",
        f"tu_max = {model.control_limits[0]!r}",
        f"tr_max = {model.control_limits[1]!r}",
        "",
    ])


def default_model(**overrides) -> VesselModel:
    return load_model(None, **overrides)
