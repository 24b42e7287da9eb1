"""Environment definition for the scalar-state LQ problem.

The controlled dynamics are

    dx = (A x + B^T u) dt + sum_j (C_j x + D_j^T u) dW_j,   x(0) = x0,

with scalar state x, l-dimensional control u and m independent Brownian
motions.  The reward is E[ int_0^T -1/2 Q x^2 dt - 1/2 H x(T)^2 ], Q, H >= 0.
Well-posedness requires sum_j D_j D_j^T > 0, which `validate_model` enforces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadHorizon, ConfigError, NegativeWeight, NotPositiveDefinite


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be a scalar or 1-d vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the LQ environment.

    A: scalar drift gain on the state (1/time).
    B: length-l drift gain on the control.
    C: m state diffusion loadings (scalars).
    D: m control diffusion loadings, shape (m, l).
    Q, H: running / terminal state cost weights, >= 0.
    x0: initial state; T: horizon (> 0).
    """

    A: float
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    Q: float
    H: float
    x0: float
    T: float

    def __post_init__(self):
        object.__setattr__(self, "A", float(self.A))
        object.__setattr__(self, "B", _as_vector(self.B, "B"))
        object.__setattr__(self, "C", _as_vector(self.C, "C"))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if D.shape[0] != self.C.shape[0]:
            # allow a column layout (l, m) only in the unambiguous square-free case
            if D.shape[1] == self.C.shape[0]:
                D = D.T
            else:
                raise ConfigError(
                    f"D must have one row per noise channel: got {D.shape} for m={self.C.shape[0]}"
                )
        if D.shape[1] != self.B.shape[0]:
            raise ConfigError(f"D rows must have length l={self.B.shape[0]}, got {D.shape}")
        D.setflags(write=False)
        self.B.setflags(write=False)
        self.C.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "Q", float(self.Q))
        object.__setattr__(self, "H", float(self.H))
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "T", float(self.T))

    @property
    def l(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @classmethod
    def scalar(cls, A=1.0, B=1.0, C=1.0, D=1.0, Q=1.0, H=1.0, x0=1.0, T=1.0) -> "ModelParams":
        """l = m = 1 shorthand used by all the experiments."""
        return cls(A=A, B=[B], C=[C], D=[[D]], Q=Q, H=H, x0=x0, T=T)


def unit_model() -> ModelParams:
    """All coefficients equal to one: the fixed environment of the experiments."""
    return ModelParams.scalar()


@dataclass(frozen=True)
class DerivedModel:
    """Cached coefficient sums that the learner and oracle reuse.

    ddt = sum_j D_j D_j^T (l x l, SPD), cd = sum_j C_j D_j (length l),
    lambda_max_ddt = largest eigenvalue of ddt.
    """

    ddt: np.ndarray
    cd: np.ndarray
    lambda_max_ddt: float

    def __post_init__(self):
        self.ddt.setflags(write=False)
        self.cd.setflags(write=False)


def validate_model(p: ModelParams) -> DerivedModel:
    """Check the standing assumptions and return the cached sums.

    Raises NotPositiveDefinite / NegativeWeight / BadHorizon on bad input.
    """
    if p.Q < 0 or p.H < 0:
        raise NegativeWeight(f"Q and H must be nonnegative, got Q={p.Q}, H={p.H}")
    if p.T <= 0:
        raise BadHorizon(f"horizon must be positive, got T={p.T}")
    ddt = np.einsum("ji,jk->ik", p.D, p.D)  # sum_j D_j D_j^T
    ddt = 0.5 * (ddt + ddt.T)
    eig = np.linalg.eigvalsh(ddt)
    if eig[0] <= 0.0:
        raise NotPositiveDefinite(
            f"sum_j D_j D_j^T must be positive definite; smallest eigenvalue {eig[0]:g}"
        )
    cd = p.C @ p.D  # sum_j C_j D_j
    return DerivedModel(ddt=ddt, cd=np.asarray(cd, dtype=float), lambda_max_ddt=float(eig[-1]))


# Degeneracy guard for randomly drawn coefficients.  Uniform(-5, 5) can land D
# arbitrarily close to 0, which breaks the positive-definiteness assumption, so
# draws are rejected until sum D^2 clears this floor.
RANDOM_MODEL_DD_FLOOR = 1e-3


def draw_random_model(rng: np.random.Generator) -> ModelParams:
    """One uniform draw of the l = m = 1 environment from an existing generator."""
    while True:
        A, B, C, D = rng.uniform(-5.0, 5.0, size=4)
        if D * D >= RANDOM_MODEL_DD_FLOOR:
            return ModelParams.scalar(A=A, B=B, C=C, D=D)


def sample_random_model(rng_seed: int) -> ModelParams:
    """Random l = m = 1 environment: A, B, C, D ~ Uniform(-5, 5), Q = H = x0 = T = 1.

    Redraws until sum_j D_j D_j^T >= 1e-3 so the returned model always validates.
    Deterministic in `rng_seed`.
    """
    return draw_random_model(np.random.default_rng(int(rng_seed)))


@dataclass(frozen=True)
class PolicyParams:
    """Gaussian feedback policy pi(u | x) = N(phi * x, Gamma)."""

    phi: np.ndarray
    Gamma: np.ndarray

    def __post_init__(self):
        phi = _as_vector(self.phi, "phi")
        Gamma = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        if Gamma.shape != (phi.shape[0], phi.shape[0]):
            raise ConfigError(f"Gamma must be {phi.shape[0]}x{phi.shape[0]}, got {Gamma.shape}")
        phi.setflags(write=False)
        Gamma.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "Gamma", Gamma)

    @classmethod
    def scalar(cls, phi: float, Gamma: float) -> "PolicyParams":
        return cls(phi=[phi], Gamma=[[Gamma]])


@dataclass(frozen=True)
class CriticState:
    """Critic parameters theta and temperature gamma."""

    theta: np.ndarray
    gamma: float

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "gamma", float(self.gamma))


# --- plain-text key=value config files ------------------------------------

_MODEL_KEYS = ("A", "B", "C", "D", "Q", "H", "x0", "T")


def _parse_number_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def parse_config(path_or_text: str, *, is_text: bool = False) -> dict:
    """Parse a key=value config file (blank lines and '#' comments ignored).

    Values are floats; B may be a comma list; C and D accept semicolon-separated
    per-channel entries (D rows are comma lists).  Unparsed keys are returned
    as strings for the caller to interpret.
    """
    if is_text:
        text = path_or_text
    else:
        with open(path_or_text, "r", encoding="utf-8") as fh:
            text = fh.read()
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key == "C":
            out[key] = [float(c) for c in val.split(";")] if ";" in val else float(val)
        elif key == "D":
            if ";" in val or "," in val:
                out[key] = [_parse_number_list(row) for row in val.split(";")]
            else:
                out[key] = float(val)
        elif key == "B":
            out[key] = _parse_number_list(val) if "," in val else float(val)
        else:
            try:
                out[key] = float(val)
            except ValueError:
                out[key] = val
    return out


def model_from_config(cfg: dict) -> ModelParams:
    """Build a ModelParams from parsed config keys, defaulting to the unit model."""
    vals = {k: cfg[k] for k in _MODEL_KEYS if k in cfg}
    base = dict(A=1.0, B=1.0, C=1.0, D=1.0, Q=1.0, H=1.0, x0=1.0, T=1.0)
    base.update(vals)
    B = base["B"] if isinstance(base["B"], list) else [base["B"]]
    C = base["C"] if isinstance(base["C"], list) else [base["C"]]
    D = base["D"]
    if not isinstance(D, list):
        D = [[D]]
    return ModelParams(A=base["A"], B=B, C=C, D=D, Q=base["Q"], H=base["H"],
                       x0=base["x0"], T=base["T"])
