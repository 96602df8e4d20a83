"""Card-Krueger minimum-wage data: ingestion and the four-cell estimate table.

D marks New Jersey stores (treated), Z is the pre-period employment outcome
and Y the post-period one. Which source columns play these roles, and which
covariates enter X, is configuration: see ``data/card_krueger.ini``.
"""

import configparser
import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import pandas as pd

from .baselines import twfe_design, twfe_regression
from .errors import EmptyDataset, InvalidInput, SchemaError, SingularDesign
from .estimator import DEFAULT_N_MAX, DEFAULT_TOL, DEFAULT_Z_CRIT, get_beta
from .scm import Dataset

OUTCOME_RULES = ("half_ft", "fte")


def _split(value):
    return [v for v in value.replace(",", " ").split() if v]


@dataclass(frozen=True)
class ColumnMapping:
    """Source column names for each role, plus parsing options."""

    state: str
    pre_part_time: str
    pre_full_time: str
    post_part_time: str
    post_full_time: str
    covariates: tuple = ()
    covariates_post: tuple = ()
    treated_value: float = 1.0
    names: tuple = ()
    sep: str = "auto"
    na_values: tuple = (".",)
    drop_missing: str = "mapped"
    outcome: str = "half_ft"

    def __post_init__(self):
        if self.drop_missing not in ("mapped", "all"):
            raise InvalidInput("drop_missing must be 'mapped' or 'all'")
        if self.outcome not in OUTCOME_RULES:
            raise InvalidInput(f"outcome must be one of {OUTCOME_RULES}")
        if self.covariates_post and len(self.covariates_post) != len(self.covariates):
            raise InvalidInput("covariates_post must pair one-to-one with covariates")
        if self.sep not in ("auto", "comma", "whitespace"):
            raise InvalidInput("sep must be auto, comma or whitespace")

    @property
    def columns(self):
        base = [self.state, self.pre_part_time, self.pre_full_time, self.post_part_time, self.post_full_time]
        return base + list(self.covariates) + list(self.covariates_post)

    @classmethod
    def from_ini(cls, path_or_text):
        cp = configparser.ConfigParser()
        if "\n" in str(path_or_text):
            cp.read_string(path_or_text)
        else:
            with open(path_or_text) as fh:
                cp.read_file(fh)
        if not cp.has_section("columns"):
            raise SchemaError("mapping file needs a [columns] section")
        col = cp["columns"]
        fmt = cp["format"] if cp.has_section("format") else {}
        try:
            return cls(
                state=col["state"],
                pre_part_time=col["pre_part_time"],
                pre_full_time=col["pre_full_time"],
                post_part_time=col["post_part_time"],
                post_full_time=col["post_full_time"],
                covariates=tuple(_split(col.get("covariates", ""))),
                covariates_post=tuple(_split(col.get("covariates_post", ""))),
                treated_value=float(col.get("treated_value", "1")),
                names=tuple(_split(fmt.get("names", ""))),
                sep=fmt.get("sep", "auto"),
                na_values=tuple(_split(fmt.get("na", ".")) or (".",)),
                drop_missing=fmt.get("drop_missing", "mapped"),
                outcome=fmt.get("outcome", "half_ft"),
            )
        except KeyError as exc:
            raise SchemaError(f"mapping file lacks role {exc.args[0]!r}") from None

    @classmethod
    def reference(cls):
        """Mapping shipped with the package for the public ``public.dat`` file."""
        text = resources.files("crossmoment").joinpath("data/card_krueger.ini").read_text()
        return cls.from_ini(text)


def employment(part_time, full_time, rule="half_ft"):
    """Per-period employment: part + full/2 ("half_ft") or full + part/2 ("fte")."""
    part_time = np.asarray(part_time, dtype=np.float64)
    full_time = np.asarray(full_time, dtype=np.float64)
    if rule == "half_ft":
        return part_time + 0.5 * full_time
    if rule == "fte":
        return full_time + 0.5 * part_time
    raise InvalidInput(f"outcome rule must be one of {OUTCOME_RULES}")


def _read_table(path, mapping):
    sep = mapping.sep
    if sep == "auto":
        with open(path) as fh:
            first = fh.readline()
        sep = "comma" if "," in first else "whitespace"
    kwargs = dict(na_values=list(mapping.na_values), keep_default_na=True)
    if mapping.names:
        kwargs.update(names=list(mapping.names), header=None)
    if sep == "comma":
        frame = pd.read_csv(path, sep=",", skipinitialspace=True, **kwargs)
    else:
        frame = pd.read_csv(path, sep=r"\s+", **kwargs)
    frame.columns = [str(c).strip() for c in frame.columns]
    return frame


def load_card_krueger(path, mapping=None):
    """Read the store survey and return a Dataset with Z/Y employment and D = NJ."""
    mapping = mapping or ColumnMapping.reference()
    frame = _read_table(path, mapping)
    missing = [c for c in mapping.columns if c not in frame.columns]
    if missing:
        raise SchemaError(f"source file lacks mapped columns: {', '.join(missing)}")
    frame = frame.apply(pd.to_numeric, errors="coerce")
    subset = None if mapping.drop_missing == "all" else mapping.columns
    frame = frame.dropna(subset=subset).reset_index(drop=True)
    if len(frame) == 0:
        raise EmptyDataset("no rows left after dropping missing values")
    if len(frame) < 3:
        raise EmptyDataset(f"only {len(frame)} rows left after dropping missing values")

    z = employment(frame[mapping.pre_part_time], frame[mapping.pre_full_time], mapping.outcome)
    y = employment(frame[mapping.post_part_time], frame[mapping.post_full_time], mapping.outcome)
    d = (frame[mapping.state].to_numpy(dtype=np.float64) == mapping.treated_value).astype(np.float64)
    x = x_post = None
    if mapping.covariates:
        x = frame[list(mapping.covariates)].to_numpy(dtype=np.float64)
        if mapping.covariates_post:
            x_post = frame[list(mapping.covariates_post)].to_numpy(dtype=np.float64)
    return Dataset(z=z, d=d, y=y, x=x, x_names=list(mapping.covariates), x_post=x_post)


def residualize(y, x):
    """OLS residual of ``y`` on an intercept plus the columns of ``x``."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if x is None:
        design = np.ones((n, 1))
    else:
        x = np.asarray(x, dtype=np.float64).reshape(n, -1)
        design = np.column_stack([np.ones(n), x])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise SingularDesign(f"covariate matrix has rank {rank} < {design.shape[1]} (intercept included)")
    return y - design @ coef


TABLE_ROWS = (("twfe", "TWFE"), ("cross_moment", "Cross-Moment"))
TABLE_COLS = (("with_x", "with X"), ("without_x", "without X"))


@dataclass
class Table1:
    cells: dict = field(default_factory=dict)
    n_rows: int = 0

    def __getitem__(self, key):
        return self.cells[key]

    def to_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "covariates", "beta_hat", "n"])
        for key, _ in TABLE_ROWS:
            for col, _ in TABLE_COLS:
                w.writerow([key, col, repr(self.cells.get((key, col), math.nan)), self.n_rows])

    def to_csv_string(self):
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()

    def to_text(self):
        width = max(len(label) for _, label in TABLE_ROWS) + 2
        lines = [" " * width + "".join(f"{label:>12}" for _, label in TABLE_COLS)]
        for key, label in TABLE_ROWS:
            vals = "".join(f"{self.cells.get((key, col), math.nan):>12.3f}" for col, _ in TABLE_COLS)
            lines.append(f"{label:<{width}}{vals}")
        lines.append(f"n = {self.n_rows}")
        return "\n".join(lines) + "\n"


def table1(data, tol=DEFAULT_TOL, n_max=DEFAULT_N_MAX, z_crit=DEFAULT_Z_CRIT):
    """TWFE and cross-moment estimates, each with and without covariates.

    With covariates, TWFE adds X to the stacked regression, while the
    cross-moment estimator runs on the residual of Y after regressing it on X
    (the post-period covariates when given). Z enters raw.
    """
    opts = dict(tol=tol, n_max=n_max, z_crit=z_crit)
    cells = {
        ("twfe", "without_x"): twfe_regression(twfe_design(data.z, data.d, data.y)).beta_hat,
        ("cross_moment", "without_x"): get_beta(data.d, data.z, data.y, **opts).beta_hat,
    }
    if data.x is not None:
        design = twfe_design(data.z, data.d, data.y, x=data.x, x_post=data.x_post, x_names=data.x_names)
        cells[("twfe", "with_x")] = twfe_regression(design).beta_hat
        x_res = data.x_post if data.x_post is not None else data.x
        cells[("cross_moment", "with_x")] = get_beta(data.d, data.z, residualize(data.y, x_res), **opts).beta_hat
    return Table1(cells={k: float(v) for k, v in cells.items()}, n_rows=len(data))
