"""Linear SCM with a latent confounder, one or two proxies, and its sampler.

    U := e_u
    Z := alpha_z U + e_z
    W := alpha_w U + e_w          (optional second proxy)
    D := alpha_d U + e_d
    Y := beta D + gamma U + e_y
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInput, InvalidParams, SchemaError, Unsupported

FAMILIES = ("exponential", "uniform", "gaussian")

RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence(seed, spawn_key=(stream, ...))"

# spawn-key streams; keep these stable, they are part of reproducibility
STREAM_PARAMS = 0
STREAM_DATA = 1
STREAM_BOOTSTRAP = 2
STREAM_BENCH = 3


def make_rng(seed, *key):
    """Independent generator for ``(seed, key...)``."""
    if seed is None or int(seed) < 0:
        raise InvalidInput("seed must be a non-negative integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *key):
    """A 63-bit integer seed derived from ``(seed, key...)``, for logging and replay."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _subfactorial(k):
    # central moments of Exp(1): !k
    m = 1
    for j in range(1, k + 1):
        m = j * m + (-1) ** j
    return m


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean exogenous noise of a given family and variance."""

    family: str
    variance: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise Unsupported(f"unsupported noise family {self.family!r}")
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise InvalidParams(f"noise variance must be positive, got {self.variance}")

    def central_moment(self, k):
        """E[e**k] for the centered noise."""
        if k == 0:
            return 1.0
        v = self.variance
        if self.family == "exponential":
            return _subfactorial(k) * v ** (k / 2)
        if k % 2:
            return 0.0
        if self.family == "uniform":
            half_width = math.sqrt(3.0 * v)
            return half_width**k / (k + 1)
        # gaussian: (k-1)!! v^(k/2)
        return float(math.prod(range(k - 1, 0, -2))) * v ** (k // 2)

    def sample(self, rng, n):
        v = self.variance
        if self.family == "exponential":
            scale = math.sqrt(v)
            return rng.standard_exponential(n) * scale - scale
        if self.family == "uniform":
            half_width = math.sqrt(3.0 * v)
            return rng.uniform(-half_width, half_width, n)
        return rng.standard_normal(n) * math.sqrt(v)


@dataclass(frozen=True)
class ScmParams:
    alpha_z: float
    alpha_d: float
    beta: float
    gamma: float
    noise_u: NoiseSpec
    noise_z: NoiseSpec
    noise_d: NoiseSpec
    noise_y: NoiseSpec
    alpha_w: float | None = None
    noise_w: NoiseSpec | None = None

    def __post_init__(self):
        for name in ("alpha_z", "alpha_d", "beta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParams(f"{name} must be finite")
        if self.alpha_z == 0:
            raise InvalidParams("alpha_z must be nonzero (the proxy must load on U)")
        if (self.alpha_w is None) != (self.noise_w is None):
            raise InvalidParams("alpha_w and noise_w must be given together")

    @property
    def has_w(self):
        return self.alpha_w is not None

    def loadings(self, var):
        """Coefficients of observed variable ``var`` on the exogenous noises."""
        if var == "z":
            return {"u": self.alpha_z, "z": 1.0}
        if var == "d":
            return {"u": self.alpha_d, "d": 1.0}
        if var == "y":
            return {"u": self.alpha_d * self.beta + self.gamma, "d": self.beta, "y": 1.0}
        if var == "w":
            if not self.has_w:
                raise InvalidParams("model has no second proxy W")
            return {"u": self.alpha_w, "w": 1.0}
        raise InvalidInput(f"unknown variable {var!r}")

    def noises(self):
        out = {"u": self.noise_u, "z": self.noise_z, "d": self.noise_d, "y": self.noise_y}
        if self.has_w:
            out["w"] = self.noise_w
        return out

    @property
    def ratio(self):
        return self.alpha_d / self.alpha_z

    def with_u_family(self, family):
        return replace(self, noise_u=NoiseSpec(family, self.noise_u.variance))


@dataclass
class Dataset:
    """Column-oriented observational sample."""

    z: np.ndarray
    d: np.ndarray
    y: np.ndarray
    w: np.ndarray | None = None
    x: np.ndarray | None = None
    x_names: list = field(default_factory=list)
    x_post: np.ndarray | None = None

    def __post_init__(self):
        self.z = _as_series(self.z, "z")
        self.d = _as_series(self.d, "d")
        self.y = _as_series(self.y, "y")
        n = self.z.shape[0]
        if n < 3:
            raise InvalidInput("a dataset needs at least 3 rows")
        if self.w is not None:
            self.w = _as_series(self.w, "w")
        for name in ("x", "x_post"):
            mat = getattr(self, name)
            if mat is not None:
                mat = np.asarray(mat, dtype=np.float64)
                if mat.ndim == 1:
                    mat = mat[:, None]
                if not np.all(np.isfinite(mat)):
                    raise InvalidInput(f"{name} contains non-finite values")
                setattr(self, name, mat)
        cols = [self.d, self.y] + [c for c in (self.w, self.x, self.x_post) if c is not None]
        if any(c.shape[0] != n for c in cols):
            raise InvalidInput("all columns must have equal length")
        if self.x is not None and not self.x_names:
            self.x_names = [f"x{j}" for j in range(self.x.shape[1])]

    def __len__(self):
        return self.z.shape[0]

    def take(self, idx):
        return Dataset(
            z=self.z[idx],
            d=self.d[idx],
            y=self.y[idx],
            w=None if self.w is None else self.w[idx],
            x=None if self.x is None else self.x[idx],
            x_names=list(self.x_names),
            x_post=None if self.x_post is None else self.x_post[idx],
        )

    def header(self):
        cols = ["z", "d", "y"]
        if self.w is not None:
            cols.append("w")
        if self.x is not None:
            cols += [f"x_{name}" for name in self.x_names]
        return cols

    def to_csv(self, fh):
        cols = [self.z, self.d, self.y]
        if self.w is not None:
            cols.append(self.w)
        if self.x is not None:
            cols += list(self.x.T)
        fh.write(",".join(self.header()) + "\n")
        mat = np.column_stack(cols)
        for row in mat:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")

    def to_csv_string(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, fh):
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError("empty CSV input") from None
        rows = [r for r in reader if r]
        for required in ("z", "d", "y"):
            if required not in header:
                raise SchemaError(f"missing required column {required!r}")
        try:
            mat = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
        except ValueError as exc:
            raise SchemaError(f"malformed CSV body: {exc}") from None
        col = {h: mat[:, j] for j, h in enumerate(header)}
        x_cols = [h for h in header if h.startswith("x_")]
        return cls(
            z=col["z"],
            d=col["d"],
            y=col["y"],
            w=col.get("w"),
            x=np.column_stack([col[h] for h in x_cols]) if x_cols else None,
            x_names=[h[2:] for h in x_cols],
        )


def _as_series(values, name):
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInput(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise InvalidInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite values")
    return arr


def simulate(params, n, seed):
    """Draw ``n`` units from the SCM, deterministically in ``seed``.

    Noises are drawn in the fixed order u, z, d, y, w so that adding a second
    proxy leaves the Z, D, Y columns of a given seed unchanged.
    """
    if int(n) < 3:
        raise InvalidInput("n must be >= 3")
    if params.noise_d.variance <= 0:
        raise InvalidParams("Var(e_d) must be positive")
    n = int(n)
    rng = make_rng(seed, STREAM_DATA)
    e_u = params.noise_u.sample(rng, n)
    e_z = params.noise_z.sample(rng, n)
    e_d = params.noise_d.sample(rng, n)
    e_y = params.noise_y.sample(rng, n)
    u = e_u
    z = params.alpha_z * u + e_z
    d = params.alpha_d * u + e_d
    y = params.beta * d + params.gamma * u + e_y
    w = None
    if params.has_w:
        w = params.alpha_w * u + params.noise_w.sample(rng, n)
    return Dataset(z=z, d=d, y=y, w=w)


def _signed_uniform(rng, lo, hi):
    return rng.uniform(lo, hi) * (1.0 if rng.random() < 0.5 else -1.0)


def sample_params(seed, with_w=False, family="exponential", noise_ratio=0.1, w_ratio=10.0):
    """Random admissible parameters following the synthetic benchmark protocol.

    ``alpha_d`` is uniform on (-2, -0.2) U (0.2, 2); each of ``alpha_z``,
    ``beta``, ``gamma`` equals ``alpha_d / r`` with ``r`` uniform on (0.2, 2)
    and a random sign. For exponential noise Var(e_u) is uniform on (1, 10);
    for uniform noise e_u is uniform on [-a, a] with a uniform on (1, 10).
    Var(e_z) = Var(e_d) = Var(e_y) = noise_ratio * Var(e_u), and
    Var(e_w) = w_ratio * Var(e_u) with alpha_w = alpha_z.
    """
    if family not in FAMILIES:
        raise Unsupported(f"unsupported noise family {family!r}")
    rng = make_rng(seed, STREAM_PARAMS)
    alpha_d = _signed_uniform(rng, 0.2, 2.0)
    alpha_z, beta, gamma = (alpha_d / _signed_uniform(rng, 0.2, 2.0) for _ in range(3))
    if family == "uniform":
        var_u = rng.uniform(1.0, 10.0) ** 2 / 3.0
    else:
        var_u = rng.uniform(1.0, 10.0)
    small = NoiseSpec(family, noise_ratio * var_u)
    return ScmParams(
        alpha_z=alpha_z,
        alpha_d=alpha_d,
        beta=beta,
        gamma=gamma,
        noise_u=NoiseSpec(family, var_u),
        noise_z=small,
        noise_d=small,
        noise_y=small,
        alpha_w=alpha_z if with_w else None,
        noise_w=NoiseSpec(family, w_ratio * var_u) if with_w else None,
    )
