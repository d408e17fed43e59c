"""Scenario descriptions, the four built-in soil experiments and the YAML config format.

A scenario document looks like::

    name: haverkamp-ex1
    soil: {family: haverkamp, theta_r: 0.075, theta_s: 0.287, alpha: 1611000.0,
           beta2: 3.96, A: 1175000.0, beta1: 4.74, K_s: 34.0}
    uptake: {varphi: auto, h1: 0.0, h2: -350.0, h3: -400.0, h4: -820.0}
    grid: {Z: 70.0, T: 3.0, Nz: 141, Nt: 241}
    ic: {kind: linear}
    bc_bottom: {kind: constant, start: 0.0962}
    u_init: 0.0
    pgd: {maxit: 100, tol: 1.0e-05, lambda: 0.1, epsilon: 0.001}

``varphi: auto`` means ``0.1 / Z``. Bottom anchors may be given as numbers
or as ``{theta_r: a, theta_s: b}`` mixtures, meaning ``a theta_r + b theta_s``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from .exceptions import SchemaError, UnknownScenario, ValidationError
from .forward import Grid1D
from .optim import ControlProblem, PgdConfig
from .soil import DiffusivityRegularization, HaverkampSoil, VanGenuchtenSoil, validate_quasi_unsaturated
from .uptake import FeddesUptake

IC_KINDS = ("linear", "quadratic", "table")
BC_KINDS = ("constant", "linear")

_SOIL_KEYS = {
    "haverkamp": ("theta_r", "theta_s", "alpha", "beta2", "A", "beta1", "K_s"),
    "van_genuchten": ("theta_r", "theta_s", "alpha", "n", "K_s"),
}
_SOIL_CLASSES = {"haverkamp": HaverkampSoil, "van_genuchten": VanGenuchtenSoil}
_PGD_KEYS = {
    "maxit": "maxit", "tol": "tol", "lambda": "lam", "epsilon": "epsilon",
    "picard_tol": "picard_tol", "picard_maxit": "picard_maxit", "ls_budget": "ls_budget",
    "adjoint_scheme": "adjoint_scheme", "track_normalized": "track_normalized",
}


@dataclass(frozen=True)
class InitialCondition:
    """Initial profile in terms of the top and bottom values at ``t = 0``.

    ``linear`` interpolates between them; with ``paper_literal_ic`` the slope
    sign is reversed, ``top + z (top - bottom) / Z``. ``quadratic`` is
    ``(bottom - top) (z/Z)^2 + top``. ``table`` interpolates ``values`` given
    at equally spaced depths.
    """

    kind: str = "linear"
    paper_literal_ic: bool = False
    values: tuple = ()

    def profile(self, z, Z, top, bottom):
        s = np.asarray(z) / Z
        if self.kind == "linear":
            slope = (top - bottom) if self.paper_literal_ic else (bottom - top)
            return top + s * slope
        if self.kind == "quadratic":
            return (bottom - top) * s**2 + top
        vals = np.asarray(self.values, dtype=float)
        return np.interp(s, np.linspace(0.0, 1.0, vals.size), vals)


@dataclass(frozen=True)
class BottomBoundary:
    """Bottom water content, constant or linear in time from ``start`` to ``end``."""

    kind: str = "constant"
    start: float = 0.0
    end: float = None

    def series(self, t, T):
        if self.kind == "constant":
            return np.full(np.shape(t), float(self.start))
        s = np.asarray(t) / T
        return (1.0 - s) * self.start + s * self.end


@dataclass(frozen=True)
class Scenario:
    name: str
    soil: object
    uptake: FeddesUptake
    grid: Grid1D
    ic: InitialCondition
    bc_bottom: BottomBoundary
    u_init: float = 0.0
    pgd: PgdConfig = field(default_factory=PgdConfig)

    def problems(self):
        """List every violated invariant; empty when the scenario is usable."""
        out = [f"soil: quasi-unsaturated condition {v} violated" for v in
               validate_quasi_unsaturated(self.soil).violations]
        out += [f"uptake: {p}" for p in self.uptake.check()]
        out += self.pgd.check()
        if self.ic.kind not in IC_KINDS:
            out.append(f"ic.kind must be one of {IC_KINDS}")
        if self.bc_bottom.kind not in BC_KINDS:
            out.append(f"bc_bottom.kind must be one of {BC_KINDS}")
        if self.bc_bottom.kind == "linear" and self.bc_bottom.end is None:
            out.append("bc_bottom.end is required for kind linear")
        if self.ic.kind == "table" and len(self.ic.values) < 2:
            out.append("ic.values needs at least two entries for kind table")
        if out:
            return out
        r, s = self.soil.theta_r, self.soil.theta_s
        if not 0.0 < self.pgd.epsilon < s - r:
            out.append("pgd.epsilon must lie in (0, theta_s - theta_r)")
        u0 = np.atleast_1d(self.u_init)
        if u0.size not in (1, self.grid.Nt):
            out.append(f"u_init must be a scalar or have Nt={self.grid.Nt} values")
        elif np.any(u0 < 0) or np.any(u0 > s - r - self.pgd.epsilon):
            out.append("u_init must satisfy 0 <= u <= theta_s - theta_r - epsilon")
        bottom = self.bc_bottom.series(self.grid.t, self.grid.T)
        if np.any(bottom <= r) or np.any(bottom >= s):
            out.append("bc_bottom: theta_r < bottom < theta_s violated")
        if not out:
            ic = self.initial_profile()
            if np.any(ic < r) or np.any(ic >= s):
                out.append(
                    f"ic: profile leaves [theta_r, theta_s) (range {ic.min():.6g}..{ic.max():.6g})"
                )
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise ValidationError(problems)
        return self

    def initial_control(self):
        u0 = np.atleast_1d(np.asarray(self.u_init, dtype=float))
        return np.full(self.grid.Nt, u0[0]) if u0.size == 1 else u0.copy()

    def initial_profile(self):
        g = self.grid
        top = self.soil.theta_r + self.initial_control()[0]
        bottom = self.bc_bottom.series(0.0, g.T)
        return self.ic.profile(g.z, g.Z, top, float(bottom))

    def to_problem(self):
        """Compile to a :class:`ControlProblem` with fixed initial and bottom data."""
        self.validate()
        g = self.grid
        reg = DiffusivityRegularization(self.pgd.epsilon)
        return ControlProblem(
            self.soil, self.uptake, reg, g, self.initial_profile(),
            self.bc_bottom.series(g.t, g.T), self.pgd, self.initial_control(),
        )

    def with_overrides(self, *, maxit=None, tol=None, epsilon=None, lam=None, Nz=None, Nt=None):
        pgd_changes = {k: v for k, v in dict(maxit=maxit, tol=tol, epsilon=epsilon, lam=lam).items()
                       if v is not None}
        return replace(self, pgd=replace(self.pgd, **pgd_changes),
                       grid=self.grid.with_resolution(Nz, Nt))


# --- built-in scenarios --------------------------------------------------------

def _mix(soil, a, b):
    return a * soil.theta_r + b * soil.theta_s


def _sand():
    return HaverkampSoil(theta_r=0.075, theta_s=0.287, alpha=1.611e6, beta2=3.96,
                         A=1.175e6, beta1=4.74, K_s=34.0)


def _ex1():
    soil = _sand()
    return Scenario("haverkamp-ex1", soil, FeddesUptake(varphi=0.1 / 70.0), Grid1D(70.0, 3.0),
                    InitialCondition("linear"), BottomBoundary("constant", _mix(soil, 0.9, 0.1)))


def _ex2():
    soil = _sand()
    # the printed reflected-slope profile drops below theta_r when u_init(0) = 0
    return Scenario("haverkamp-ex2", soil, FeddesUptake(varphi=0.1 / 70.0), Grid1D(70.0, 3.0),
                    InitialCondition("linear", paper_literal_ic=False),
                    BottomBoundary("linear", _mix(soil, 0.9, 0.1), _mix(soil, 0.7, 0.3)))


def _ex3():
    soil = VanGenuchtenSoil(theta_r=0.0286, theta_s=0.3658, alpha=0.0280, n=2.2390, K_s=22.5416)
    return Scenario("berino-ex3", soil, FeddesUptake(varphi=0.1 / 50.0), Grid1D(50.0, 12.0),
                    InitialCondition("quadratic"),
                    BottomBoundary("linear", _mix(soil, 0.3, 0.7), _mix(soil, 0.1, 0.9)))


def _ex4():
    soil = VanGenuchtenSoil(theta_r=0.1060, theta_s=0.4686, alpha=0.0104, n=1.3954, K_s=0.5458)
    return Scenario("glendale-ex4", soil, FeddesUptake(varphi=0.1 / 30.0), Grid1D(30.0, 36.0),
                    InitialCondition("quadratic"),
                    BottomBoundary("linear", _mix(soil, 0.5, 0.5), _mix(soil, 0.7, 0.3)))


BUILTINS = {"haverkamp-ex1": _ex1, "haverkamp-ex2": _ex2, "berino-ex3": _ex3, "glendale-ex4": _ex4}


def builtin_scenario(name):
    try:
        return BUILTINS[name]()
    except KeyError:
        raise UnknownScenario(f"unknown scenario {name!r}; choose from {sorted(BUILTINS)}") from None


# --- config documents ----------------------------------------------------------

def _check_keys(section, doc, required, optional=()):
    if not isinstance(doc, dict):
        raise SchemaError(f"{section}: expected a mapping")
    missing = [k for k in required if k not in doc]
    unknown = [k for k in doc if k not in required and k not in optional]
    msgs = [f"{section}: missing required key {k!r}" for k in missing]
    msgs += [f"{section}: unknown key {k!r}" for k in unknown]
    if msgs:
        raise SchemaError("; ".join(msgs))


def _anchor(value, soil):
    if isinstance(value, dict):
        _check_keys("bc_bottom anchor", value, ("theta_r", "theta_s"))
        return _mix(soil, float(value["theta_r"]), float(value["theta_s"]))
    return float(value)


def scenario_from_dict(doc):
    """Build and validate a Scenario from a parsed config mapping."""
    _check_keys("scenario", doc, ("soil", "grid", "ic", "bc_bottom"),
                ("name", "uptake", "u_init", "pgd"))
    sdoc = doc["soil"]
    if not isinstance(sdoc, dict) or "family" not in sdoc:
        raise SchemaError("soil: missing required key 'family'")
    family = sdoc["family"]
    if family not in _SOIL_KEYS:
        raise SchemaError(f"soil: unknown family {family!r}; choose from {sorted(_SOIL_KEYS)}")
    _check_keys("soil", sdoc, ("family",) + _SOIL_KEYS[family])
    soil = _SOIL_CLASSES[family](**{k: float(sdoc[k]) for k in _SOIL_KEYS[family]})

    gdoc = doc["grid"]
    _check_keys("grid", gdoc, ("Z", "T"), ("Nz", "Nt"))
    grid = Grid1D(float(gdoc["Z"]), float(gdoc["T"]), int(gdoc.get("Nz", 141)),
                  int(gdoc.get("Nt", 241)))

    udoc = doc.get("uptake", {}) or {}
    _check_keys("uptake", udoc, (), ("varphi", "h1", "h2", "h3", "h4"))
    varphi = udoc.get("varphi", "auto")
    varphi = 0.1 / grid.Z if varphi == "auto" else float(varphi)
    uptake = FeddesUptake(varphi, **{k: float(udoc[k]) for k in ("h1", "h2", "h3", "h4") if k in udoc})

    idoc = doc["ic"]
    _check_keys("ic", idoc, ("kind",), ("paper_literal_ic", "values"))
    ic = InitialCondition(idoc["kind"], bool(idoc.get("paper_literal_ic", False)),
                          tuple(float(v) for v in idoc.get("values", ())))

    bdoc = doc["bc_bottom"]
    _check_keys("bc_bottom", bdoc, ("kind", "start"), ("end",))
    end = bdoc.get("end")
    bc = BottomBoundary(bdoc["kind"], _anchor(bdoc["start"], soil),
                        None if end is None else _anchor(end, soil))

    pdoc = doc.get("pgd", {}) or {}
    _check_keys("pgd", pdoc, (), tuple(_PGD_KEYS))
    pgd = PgdConfig(**{_PGD_KEYS[k]: v for k, v in pdoc.items()})
    pgd = replace(pgd, maxit=int(pgd.maxit), tol=float(pgd.tol), lam=float(pgd.lam),
                  epsilon=float(pgd.epsilon))

    u_init = doc.get("u_init", 0.0)
    u_init = float(u_init) if np.isscalar(u_init) else tuple(float(v) for v in u_init)
    sc = Scenario(str(doc.get("name", "custom")), soil, uptake, grid, ic, bc, u_init, pgd)
    return sc.validate()


def parse_scenario(text):
    """Parse a YAML scenario document; raises SchemaError or ValidationError."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"not a valid YAML document: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be a mapping")
    return scenario_from_dict(doc)


def scenario_to_dict(sc):
    soil = {"family": sc.soil.family}
    soil.update({k: float(getattr(sc.soil, k)) for k in _SOIL_KEYS[sc.soil.family]})
    up = {f.name: float(getattr(sc.uptake, f.name)) for f in fields(sc.uptake)}
    ic = {"kind": sc.ic.kind}
    if sc.ic.paper_literal_ic:
        ic["paper_literal_ic"] = True
    if sc.ic.values:
        ic["values"] = list(sc.ic.values)
    bc = {"kind": sc.bc_bottom.kind, "start": float(sc.bc_bottom.start)}
    if sc.bc_bottom.end is not None:
        bc["end"] = float(sc.bc_bottom.end)
    inverse = {v: k for k, v in _PGD_KEYS.items()}
    pgd = {inverse[k]: v for k, v in asdict(sc.pgd).items()}
    u_init = sc.u_init if np.isscalar(sc.u_init) else list(sc.u_init)
    return {
        "name": sc.name, "soil": soil, "uptake": up,
        "grid": {"Z": sc.grid.Z, "T": sc.grid.T, "Nz": sc.grid.Nz, "Nt": sc.grid.Nt},
        "ic": ic, "bc_bottom": bc, "u_init": u_init, "pgd": pgd,
    }


def dump_scenario(sc):
    """Serialise to YAML text that :func:`parse_scenario` reads back to an equal Scenario."""
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False)


def load_scenario(target):
    """Resolve a built-in name or a path to a YAML file."""
    if target in BUILTINS:
        return builtin_scenario(target)
    try:
        with open(target) as fh:
            return parse_scenario(fh.read())
    except FileNotFoundError:
        raise UnknownScenario(f"{target!r} is neither a built-in scenario nor a readable file") from None
