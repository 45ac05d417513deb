"""Scenario configuration and energy-sweep orchestration.

A scenario binds a dephasing spectrum, a time window and a list of energy
budgets.  :func:`run_scenario` solves the optimal modulation at every energy,
builds the energy-matched bang-bang train, optionally refines the train with
the linearized equation, and evaluates every field by both rate routes.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field, fields
from importlib import resources

import numpy as np

from .control import TimeGrid, dd_sequence, field_spectrum, perturb, zero_field
from .el_solver import SolverConfig, solve_optimal
from .errors import ConfigError, OdcmError
from .linearized import refine_linearized
from .mc import mc_rate, sample_noise
from .rate import TimeDomainRate, fidelity, rate_floor, rate_freq_domain
from .spectra import correlation_from_spectrum, frequency_grid, spectrum_from_dict

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
PRESETS = ("a_lorentzian", "b_off_resonant", "c_one_over_f", "d_multi_peak")
SWEEP_COLUMNS = ("E_requested", "E_realized", "R_opt", "R_dd", "R_dd_refined", "R_unmod",
                 "normalized_opt", "normalized_dd", "converged", "residual")
SOLVER_KEYS = {"damping", "tol_phase", "max_iter", "initial_guess", "denom_floor",
               "min_damping", "damping_growth", "patience", "single_carrier"}


@dataclass
class Scenario:
    """Everything needed to reproduce one sweep.

    ``spectrum`` is a spectrum record as produced by ``DephasingSpectrum.to_dict``.
    ``omega_max``/``n_omega`` define the frequency grid of the spectral route.
    """

    name: str
    spectrum: dict
    T: float
    energies: list
    omega_max: float
    N: int = 2048
    n_omega: int = 4096
    solver: dict = dc_field(default_factory=dict)
    dd: dict = None
    optimal: bool = True
    linearized_from_dd: bool = False
    positivity: bool = False
    robustness: dict = None
    mc: dict = None
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        try:
            self.T = float(self.T)
            self.N = int(self.N)
            self.energies = [float(e) for e in self.energies]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed scenario field: {exc}") from exc
        if not self.energies:
            raise ConfigError("energy list is empty")
        if any(e <= 0 for e in self.energies) or any(
                b <= a for a, b in zip(self.energies, self.energies[1:])):
            raise ConfigError("energies must be positive and strictly increasing")
        unknown = set(self.solver) - SOLVER_KEYS
        if unknown:
            raise ConfigError(f"unknown solver keys: {sorted(unknown)}")
        if self.dd is not None and set(self.dd) != {"nu_pulse"}:
            raise ConfigError("dd block takes exactly one key, nu_pulse")
        if self.robustness is not None and not set(self.robustness) <= {"sigma_rel", "seeds", "E"}:
            raise ConfigError("robustness keys are sigma_rel, seeds, E")
        if self.mc is not None and not set(self.mc) <= {"K", "seed", "E"}:
            raise ConfigError("mc keys are K, seed, E")
        if self.linearized_from_dd and self.dd is None:
            raise ConfigError("linearized_from_dd needs a dd block")
        try:
            TimeGrid(self.T, self.N)
            self.build_spectrum()
            self.solver_config()
        except OdcmError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def grid(self):
        return TimeGrid(self.T, self.N)

    def build_spectrum(self):
        return spectrum_from_dict(self.spectrum)

    def build_correlation(self):
        s = self.build_spectrum()
        c = s.correlation()
        if c is None:
            c = correlation_from_spectrum(s, self.grid.t)
        return c

    def omega(self):
        return frequency_grid(self.omega_max, self.n_omega)

    def solver_config(self, **overrides):
        opts = dict(self.solver)
        opts.update(overrides)
        return SolverConfig(self.grid, **opts)

    def to_dict(self):
        d = asdict(self)
        d["version"] = CONFIG_VERSION
        return d


def scenario_from_dict(d):
    """Strict loader: unknown keys and a missing or wrong version are errors."""
    if not isinstance(d, dict):
        raise ConfigError("scenario must be a JSON object")
    d = dict(d)
    version = d.pop("version", None)
    if version != CONFIG_VERSION:
        raise ConfigError(f"expected \"version\": {CONFIG_VERSION}, got {version!r}")
    names = {f.name for f in fields(Scenario)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    try:
        return Scenario(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path):
    """Read a scenario JSON file, or a bundled preset by name (e.g. ``a_lorentzian``)."""
    if path in PRESETS:
        text = resources.files("odcm.presets").joinpath(f"{path}.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(d)


def load_preset(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    return load_scenario(name)


# ----------------------------------------------------------------------------
# running
# ----------------------------------------------------------------------------

@dataclass
class Context:
    """Objects shared by all sweep points of one scenario (read-only)."""

    scenario: Scenario
    spectrum: object
    correlation: object
    grid: TimeGrid
    omega: np.ndarray
    rate: TimeDomainRate
    R_unmod: float

    @classmethod
    def build(cls, s):
        c = s.build_correlation()
        grid = s.grid
        rate = TimeDomainRate(c, grid)
        return cls(s, s.build_spectrum(), c, grid, s.omega(), rate, rate(zero_field(grid)))

    def normalized(self, R):
        if R is None or abs(self.R_unmod) < rate_floor(self.correlation, self.grid.T):
            return None
        return R / self.R_unmod

    def evaluate(self, fld):
        """Both rate routes, the normalized rate and the fidelity of one field."""
        r_t = self.rate(fld)
        F = field_spectrum(fld, self.omega)
        try:
            r_f = rate_freq_domain(self.spectrum, F, self.omega)
        except OdcmError as exc:
            log.warning("frequency route unavailable: %s", exc)
            r_f = None
        fid, clamped = fidelity(max(r_t, 0.0), self.grid.T, self.scenario.alpha)
        return {"R_time": r_t, "R_freq": r_f, "normalized": self.normalized(r_t),
                "fidelity": fid, "fidelity_clamped": clamped}, F


@dataclass
class PointResult:
    E_requested: float
    E_realized: float = None
    row: dict = None
    details: dict = dc_field(default_factory=dict)
    fields: dict = dc_field(default_factory=dict)
    overlay: dict = None
    error: str = None

    @property
    def ok(self):
        return self.error is None


def run_point(ctx, E):
    """Evaluate one energy; any library error is captured in ``error``."""
    s = ctx.scenario
    res = PointResult(E)
    try:
        E_real = E
        overlay = {"G": ctx.spectrum(ctx.omega)}
        dd = None
        if s.dd is not None:
            dd, params = dd_sequence(E, ctx.grid, s.dd["nu_pulse"])
            E_real = params.energy_realized
            res.details["dd_params"] = params.to_dict()
            res.details["dd"], overlay["F_dd"] = ctx.evaluate(dd)
            res.fields["dd"] = dd
        res.E_realized = E_real
        if s.optimal:
            sol = solve_optimal(ctx.correlation, E_real, s.solver_config())
            res.details["solver"] = sol.to_dict()
            res.details["opt"], overlay["F_opt"] = ctx.evaluate(sol.field)
            res.fields["opt"] = sol.field
        if s.linearized_from_dd and dd is not None:
            ref = refine_linearized(ctx.correlation, dd, E_real, positivity=s.positivity,
                                    rate=ctx.rate)
            res.details["refinement"] = ref.to_dict()
            res.details["dd_refined"], overlay["F_dd_refined"] = ctx.evaluate(ref.field)
            res.fields["dd_refined"] = ref.field
        res.overlay = overlay
        res.row = _row(ctx, res)
    except OdcmError as exc:
        log.warning("E = %g failed: %s", E, exc)
        res.error = f"{type(exc).__name__}: {exc}"
        res.row = _row(ctx, res)
    return res


def _row(ctx, res):
    d = res.details
    get = lambda key: d[key]["R_time"] if key in d else None
    solver = d.get("solver", {})
    return {"E_requested": res.E_requested, "E_realized": res.E_realized,
            "R_opt": get("opt"), "R_dd": get("dd"), "R_dd_refined": get("dd_refined"),
            "R_unmod": ctx.R_unmod,
            "normalized_opt": ctx.normalized(get("opt")),
            "normalized_dd": ctx.normalized(get("dd")),
            "converged": solver.get("converged"), "residual": solver.get("residual")}


@dataclass
class RunReport:
    scenario: Scenario
    R_unmod: float
    points: list
    robustness: dict = None
    mc: dict = None
    omega: np.ndarray = None

    @property
    def rows(self):
        return [p.row for p in self.points]

    @property
    def all_failed(self):
        return all(not p.ok for p in self.points)

    def to_dict(self):
        return {"version": CONFIG_VERSION, "scenario": self.scenario.to_dict(),
                "R_unmod": self.R_unmod,
                "points": [{"E_requested": p.E_requested, "E_realized": p.E_realized,
                            "error": p.error, **p.details} for p in self.points],
                "robustness": self.robustness, "mc": self.mc}


def run_scenario(s, threads=1, robustness=False, mc=False):
    """Run the energy sweep of scenario ``s``.

    Sweep points are isolated: a failing energy is recorded with its error and
    the others proceed.  Points may run on ``threads`` workers; the report is
    always assembled in energy order.
    """
    ctx = Context.build(s)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(lambda E: run_point(ctx, E), s.energies))
    else:
        points = [run_point(ctx, E) for E in s.energies]
    report = RunReport(s, ctx.R_unmod, points, omega=ctx.omega)
    if robustness and s.robustness is not None:
        report.robustness = robustness_study(s, ctx=ctx).to_dict()
    if mc and s.mc is not None:
        report.mc = validate_mc(s, ctx=ctx)
    return report


# ----------------------------------------------------------------------------
# robustness and Monte-Carlo validation
# ----------------------------------------------------------------------------

@dataclass
class RobustnessTable:
    E: float
    sigma_rel: float
    R_reference: float
    seeds: list
    rates: list
    increases: list

    @property
    def median(self):
        return float(np.median(self.increases))

    @property
    def max(self):
        return float(np.max(self.increases))

    def to_dict(self):
        return {"E": self.E, "sigma_rel": self.sigma_rel, "R_reference": self.R_reference,
                "median_increase": self.median, "max_increase": self.max,
                "seeds": list(self.seeds), "increases": list(self.increases)}


def robustness_study(s, fld=None, *, sigma_rel=None, seeds=None, E=None, ctx=None):
    """Relative rate increase of a field under multiplicative amplitude noise.

    ``fld`` defaults to the optimal modulation at ``E`` (taken from the
    scenario's robustness block).  Perturbed fields are not re-normalized in
    energy; increases are relative to the unperturbed rate.  Seed ``i`` of the
    study is ``s.seed + i``.
    """
    cfg = s.robustness or {}
    sigma_rel = cfg.get("sigma_rel", 0.1) if sigma_rel is None else sigma_rel
    seeds = cfg.get("seeds", 32) if seeds is None else seeds
    seeds = list(range(s.seed, s.seed + seeds)) if isinstance(seeds, int) else list(seeds)
    ctx = ctx or Context.build(s)
    E = cfg.get("E", s.energies[0]) if E is None else E
    if fld is None:
        fld = solve_optimal(ctx.correlation, E, s.solver_config()).field
    r0 = ctx.rate(fld)
    rates = [ctx.rate(perturb(fld, sigma_rel, seed)) for seed in seeds]
    incs = [(r - r0) / r0 for r in rates]
    return RobustnessTable(float(E), float(sigma_rel), r0, seeds, rates, incs)


def validate_mc(s, *, ctx=None, K=None, seed=None, E=None):
    """Compare Monte-Carlo and deterministic rates for the zero, DD and optimal fields."""
    cfg = s.mc or {}
    ctx = ctx or Context.build(s)
    K = cfg.get("K", 10000) if K is None else K
    seed = cfg.get("seed", s.seed) if seed is None else seed
    E = cfg.get("E", s.energies[0]) if E is None else E
    flds = {"zero": zero_field(ctx.grid)}
    if s.dd is not None:
        dd, params = dd_sequence(E, ctx.grid, s.dd["nu_pulse"])
        flds["dd"] = dd
        E = params.energy_realized
    flds["opt"] = solve_optimal(ctx.correlation, E, s.solver_config()).field
    batch = sample_noise(ctx.correlation, ctx.grid, K, seed)
    ests = mc_rate(batch, list(flds.values()))
    out = {"K": K, "seed": seed, "E": E, "real_part_used": batch.real_part_used, "fields": {}}
    for (name, f), est in zip(flds.items(), ests):
        r = ctx.rate(f)
        z = (est.R - r) / est.stderr if est.stderr > 0 else 0.0
        out["fields"][name] = {"R_mc": est.R, "stderr": est.stderr, "R_time": r, "z": z}
    return out


# ----------------------------------------------------------------------------
# output
# ----------------------------------------------------------------------------

def energy_tag(E):
    return f"{E:g}"


def _fmt(x):
    if x is None:
        return "nan"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_sweep_csv(report, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in report.rows:
            w.writerow([_fmt(row[k]) for k in SWEEP_COLUMNS])


def write_overlay_csv(omega, overlay, path):
    cols = ["G", "F_opt", "F_dd"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega", *cols])
        nan = np.full(omega.shape, np.nan)
        data = [overlay.get(k, nan) for k in cols]
        for i, wv in enumerate(omega):
            w.writerow([repr(float(wv))] + [repr(float(d[i])) for d in data])


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def json_safe(o):
    # JSON has no NaN/inf: map them to null
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: json_safe(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [json_safe(v) for v in o]
    return o


def write_report(report, out_dir, plots=True, fields=True):
    """Write report.json, sweep.csv, per-field and overlay CSVs (and SVGs)."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(json_safe(json.loads(json.dumps(report.to_dict(), default=_json_default))),
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_sweep_csv(report, os.path.join(out_dir, "sweep.csv"))
    for p in report.points:
        if not p.ok:
            continue
        tag = energy_tag(p.E_requested)
        if fields:
            names = {"opt": f"field_E{tag}.csv", "dd": f"field_dd_E{tag}.csv",
                     "dd_refined": f"field_dd_refined_E{tag}.csv"}
            for key, f in p.fields.items():
                f.to_csv(os.path.join(out_dir, names[key]))
        write_overlay_csv(report.omega, p.overlay, os.path.join(out_dir, f"overlay_E{tag}.csv"))
    if plots:
        from .plots import emit_plots
        emit_plots(report, out_dir)
