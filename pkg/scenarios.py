import os
import re
import time
import uuid
import logging
import configparser
from collections import OrderedDict
from dataclasses import dataclass, field
from multiprocessing.pool import Pool

import numpy as np
from tqdm import tqdm

import Atoms
import Batteries
import Simulators
import linops
import display_results
from envelope import InsufficientOscillationError, TimeSeries, fit_envelope, first_maximum_time, make_grid
from tools import QbError, emit_csv, format_value, get_git_hash, save_params, write_report

"""
Named experiments reproducing the charging curves of the EIT battery, their configuration files
and their reports. Every scenario returns curve sets (series sharing one grid), envelope fits and
pass/fail checks.
"""

logger = logging.getLogger(__name__)

EIT_FIELDS = ("omega_d", "omega_e", "omega_m", "Omega1", "Omega2", "omega_a", "omega_b", "kappa")
PARAM_NAMES = set(EIT_FIELDS) | {
    "omega_c", "omega", "J", "n", "alpha", "beta",
    "n_atoms", "photons", "n_max", "V", "V_values", "kappa_e",
    "Omega0", "t_c", "sigma", "omega_L",
    "omega_a_min", "omega_a_max", "n_sweep",
}
LIST_PARAMS = {"V_values"}
SECTIONS = OrderedDict([
    ("scenario", {"name", "eit", "basis", "description"}),
    ("params", PARAM_NAMES),
    ("grid", {"t_end", "n_points", "t_end_no_eit", "n_points_no_eit"}),
    ("outputs", {"csv", "svg", "report"}),
])
EIT_MODES = ("on", "off", "both")

# expected envelope decay rates (units of omega) and relative tolerances, per scenario and arm
REFERENCE_RATES = {
    "fig3": {"no_eit": (5.01e-2, 0.15), "eit": (6.76e-4, 0.30)},
    "fig5": {"no_eit": (5.00e-2, 0.15), "eit": (5.38e-4, 0.30)},
    "fig6": {"no_eit": (5.03e-2, 0.15), "eit": (5.78e-4, 0.30)},
    "fig7": {"no_eit": (1.94e-1, 0.30), "eit": (1.91e-3, 0.30)},
}
MIN_RATE_RATIO = 50.0

EIT_DEFAULTS = dict(omega_d=0.25, omega_e=1.0, omega_m=0.5, Omega1=50.0, Omega2=5.0, omega_a=1.0, omega_b=0.5,
                    kappa=0.05)


class ConfigError(QbError, ValueError):
    def __init__(self, message, path=None, line=None, field=None):
        location = ""
        if path is not None:
            location = "{}{}: ".format(path, "" if line is None else ":{}".format(line))
        super().__init__("{}{}{}".format(location, message, "" if field is None else " (field {})".format(field)))
        self.path = path
        self.line = line
        self.field = field


class ScenarioConfig:
    """
        scenario: str
            scenario id, one of SCENARIOS
        params: dict
            numeric overrides of the scenario defaults
        grid: dict
            t_end, n_points and optional t_end_no_eit, n_points_no_eit
        outputs: dict
            file names (relative to the output directory) for the csv, svg and report sinks
        eit: str
            "on", "off" or "both"
        basis: str
            Fock-space basis used by the numerical scenarios
    """

    def __init__(self, scenario, params=None, grid=None, outputs=None, eit=None, basis=Simulators.SYMMETRIC_DICKE,
                 path=None):
        if scenario not in SCENARIOS:
            raise ConfigError("unknown scenario {!r}".format(scenario), path, field="name")
        definition = SCENARIOS[scenario]
        self.scenario = scenario
        self.params = dict(params or {})
        self.eit = eit or definition.eit
        self.basis = basis
        self.path = path

        unknown = set(self.params) - PARAM_NAMES
        if unknown:
            raise ConfigError("unknown parameter {}".format(sorted(unknown)[0]), path, field="params")
        if self.eit not in EIT_MODES:
            raise ConfigError("eit must be one of {}, got {!r}".format(EIT_MODES, self.eit), path, field="eit")
        if self.basis not in Simulators.BASES:
            raise ConfigError("unknown basis {!r}".format(self.basis), path, field="basis")

        self.grid = dict(definition.grid)
        self.grid.update(grid or {})
        for key in ("t_end", "t_end_no_eit"):
            if key in self.grid and not self.grid[key] > 0:
                raise ConfigError("{} must be positive".format(key), path, field=key)
        for key in ("n_points", "n_points_no_eit"):
            if key in self.grid:
                self.grid[key] = int(self.grid[key])
                if self.grid[key] < 16:
                    raise ConfigError("{} must be at least 16".format(key), path, field=key)

        self.outputs = {"csv": "{}.csv".format(scenario), "report": "{}_report.txt".format(scenario)}
        self.outputs.update(outputs or {})

    @property
    def resolved_params(self):
        resolved = dict(SCENARIOS[self.scenario].params)
        resolved.update(self.params)
        return resolved

    @property
    def reference_parameters(self):
        """True when no physical parameter was overridden, so the expected rates apply."""
        return not self.params

    def arms(self):
        return {"on": [("eit", True)], "off": [("no_eit", False)],
                "both": [("no_eit", False), ("eit", True)]}[self.eit]

    def time_grid(self, arm="eit"):
        t_end, n_points = self.grid["t_end"], self.grid["n_points"]
        if arm == "no_eit":
            t_end = self.grid.get("t_end_no_eit", t_end)
            n_points = self.grid.get("n_points_no_eit", n_points)
        return make_grid(t_end, n_points)

    @classmethod
    def from_file(cls, path):
        """
        Parse an INI-style scenario file; errors carry the file, line and field.
        """
        if not os.path.isfile(path):
            raise ConfigError("configuration file not found", path)
        with open(path, "r") as f:
            text = f.read()
        lines = text.splitlines()

        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text, source=path)
        except configparser.MissingSectionHeaderError as e:
            raise ConfigError("missing section header", path, e.lineno)
        except configparser.ParsingError as e:
            line = e.errors[0][0] if e.errors else None
            raise ConfigError("cannot parse line", path, line)
        except configparser.Error as e:
            raise ConfigError(str(e).splitlines()[0], path, getattr(e, "lineno", None))

        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError("unknown section [{}]".format(section), path, _find_line(lines, None, section))
            for key in parser[section]:
                if key not in SECTIONS[section]:
                    raise ConfigError("unknown key {!r} in [{}]".format(key, section), path,
                                      _find_line(lines, section, key), key)

        def number(section, key, value):
            try:
                return float(value)
            except ValueError:
                raise ConfigError("expected a number, got {!r}".format(value), path,
                                  _find_line(lines, section, key), key)

        scenario = dict(parser["scenario"]) if parser.has_section("scenario") else {}
        if "name" not in scenario:
            raise ConfigError("missing [scenario] name", path, field="name")

        params = {}
        if parser.has_section("params"):
            for key, value in parser["params"].items():
                if key in LIST_PARAMS:
                    params[key] = [number("params", key, v) for v in value.split(",") if v.strip()]
                else:
                    params[key] = number("params", key, value)

        grid = {}
        if parser.has_section("grid"):
            grid = {key: number("grid", key, value) for key, value in parser["grid"].items()}
        outputs = dict(parser["outputs"]) if parser.has_section("outputs") else None

        try:
            return cls(scenario["name"], params=params, grid=grid, outputs=outputs, eit=scenario.get("eit"),
                       basis=scenario.get("basis", Simulators.SYMMETRIC_DICKE), path=path)
        except ConfigError as e:
            if e.field is not None and e.line is None:
                section = "scenario" if e.field in ("name", "eit", "basis") else "grid"
                raise ConfigError(str(e).split(": ", 1)[-1].rsplit(" (field", 1)[0], path,
                                  _find_line(lines, section, e.field), e.field)
            raise


def _find_line(lines, section, key):
    """1-based line number of a key (or of a section header when section is None)."""
    current = None
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        header = re.match(r"^\[(.+)\]$", stripped)
        if header:
            current = header.group(1).strip()
            if section is None and current == key:
                return number
            continue
        if current == section and re.match(r"^{}\s*[=:]".format(re.escape(key)), stripped):
            return number
    return None


@dataclass
class CurveSet:
    """Series sharing one grid, with their envelope fits."""
    name: str
    series: OrderedDict
    index_name: str = "t"
    fits: dict = field(default_factory=dict)


@dataclass
class RunReport:
    scenario: str
    eit: str
    params: dict
    curves: list = field(default_factory=list)
    rates: OrderedDict = field(default_factory=OrderedDict)
    fit_status: OrderedDict = field(default_factory=OrderedDict)
    values: OrderedDict = field(default_factory=OrderedDict)
    checks: OrderedDict = field(default_factory=OrderedDict)
    duration: float = 0.0

    @property
    def passed(self):
        return all(self.checks.values())

    def add_curves(self, name, series, index_name="t"):
        curve_set = CurveSet(name=name, series=OrderedDict((s.name, s) for s in series), index_name=index_name)
        self.curves.append(curve_set)
        return curve_set

    def fit(self, curve_set, series_name, levels=1):
        """Envelope fit of one series; a curve without enough oscillations is recorded, not raised."""
        key = "{}.{}".format(curve_set.name, series_name)
        try:
            decay = fit_envelope(curve_set.series[series_name], levels=levels)
        except InsufficientOscillationError as e:
            logger.info("no envelope fit for %s: %s", key, e)
            self.fit_status[key] = "insufficient-oscillation"
            return None
        curve_set.fits[series_name] = decay
        self.rates[key] = decay.rate
        self.fit_status[key] = "ok"
        self.values["peaks_used.{}".format(key)] = decay.peaks_used
        self.values["fit_residual.{}".format(key)] = decay.residual
        return decay

    def entries(self):
        """Ordered key=value content of the report file."""
        entries = OrderedDict()
        entries["scenario"] = self.scenario
        entries["units"] = "omega"
        entries["eit"] = self.eit
        for key in sorted(self.params):
            value = self.params[key]
            entries["param.{}".format(key)] = ",".join(format_value(v) for v in value) \
                if isinstance(value, (list, tuple)) else value
        for key, value in self.fit_status.items():
            entries["fit.{}".format(key)] = value
        for key, value in self.rates.items():
            entries["rate.{}".format(key)] = value
        for key, value in self.values.items():
            entries["value.{}".format(key)] = value
        for key, value in self.checks.items():
            entries["check.{}".format(key)] = bool(value)
        entries["passed"] = self.passed
        return entries


@dataclass(frozen=True)
class Scenario:
    description: str
    runner: object
    params: dict
    grid: dict
    eit: str = "both"


# ---------------------------------------------------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------------------------------------------------

def eit_params(params):
    fields = {key: params[key] for key in EIT_FIELDS if key in params}
    p = Atoms.EitParams(**fields)
    if "omega_c" in params:
        p = p.with_omega_c(params["omega_c"])
    return p


def initial_amplitudes(params):
    alpha, beta = complex(params.get("alpha", 1.0)), complex(params.get("beta", 0.0))
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > 1e-9:
        raise ConfigError("alpha and beta must satisfy |alpha|^2 + |beta|^2 = 1, got {}".format(norm), field="alpha")
    return alpha, beta


def parallel_map(func, tasks, jobs=1, desc=None):
    """Order-preserving map over independent sweep points."""
    if jobs > 1 and len(tasks) > 1:
        with Pool(min(jobs, len(tasks))) as pool:
            return list(tqdm(pool.imap(func, tasks), total=len(tasks), desc=desc, disable=None))
    return [func(task) for task in tqdm(tasks, desc=desc, disable=None)]


def check_ergotropy_bounds(report, key, energy, work):
    report.checks["ergotropy_nonnegative.{}".format(key)] = bool(np.all(work.y >= -1e-12))
    report.checks["ergotropy_below_energy.{}".format(key)] = bool(np.all(work.y <= energy.y + 1e-12))


def check_reference_rates(report, config, series_name):
    reference = REFERENCE_RATES.get(config.scenario)
    if reference is None or not config.reference_parameters:
        return
    for arm, (expected, tolerance) in reference.items():
        key = "{}.{}".format(arm, series_name)
        if key in report.rates:
            deviation = abs(report.rates[key] - expected) / expected
            report.values["rate_deviation.{}".format(key)] = deviation
            report.checks["reference_rate.{}".format(key)] = deviation <= tolerance


def check_rate_ratio(report, config, series_name):
    no_eit, eit = "no_eit.{}".format(series_name), "eit.{}".format(series_name)
    if config.eit != "both" or no_eit not in report.rates or eit not in report.rates:
        return
    ratio = report.rates[no_eit] / report.rates[eit] if report.rates[eit] > 0 else np.inf
    report.values["rate_ratio.{}".format(series_name)] = ratio
    if config.reference_parameters:
        report.checks["rate_ratio.{}".format(series_name)] = ratio >= MIN_RATE_RATIO


def battery_for_arm(p, with_eit, report, arm):
    battery = Atoms.effective_battery(p, with_eit=with_eit)
    report.values["x1_real.{}".format(arm)] = battery.x1.real
    report.values["x1_imag.{}".format(arm)] = battery.x1.imag
    return battery


def fock_spec(params, battery, basis, n_atoms=None, photons=None, V=None, omega=None):
    n_atoms = int(params.get("n_atoms", 1) if n_atoms is None else n_atoms)
    photons = int(params.get("photons", 1) if photons is None else photons)
    n_max = int(params.get("n_max", photons + 4))
    return Simulators.SystemSpec(n_atoms=n_atoms, n_max=n_max,
                                 omega=params.get("omega", 1.0) if omega is None else omega,
                                 x1=battery.x1, J=params.get("J", 0.5),
                                 V=params.get("V", 0.0) if V is None else V, basis=basis)


def fock_point(task):
    """
    Energy and ergotropy of a charging run starting from |photons> (x) |G>.
    """
    spec, photons, t_end, n_points = task
    grid = make_grid(t_end, n_points)
    states = Simulators.evolve_series(spec, Simulators.initial_state(spec, photons), grid)
    energy, work = Simulators.observables(spec, states, grid)
    return energy.y, work.y


def jc_point(task):
    """
    Battery energy and maximal ergotropy at one drive frequency, cavity resonant with the battery.
    """
    p, J, n, alpha, beta, t_end, n_points = task
    battery = Atoms.effective_battery(p, with_eit=True)
    jc = Batteries.JcParams(battery, omega=battery.energy, J=J, n=n)
    _, work = Batteries.energy_and_ergotropy_series(jc, alpha, beta, make_grid(t_end, n_points))
    return p.omega_c, battery.energy, float(np.max(work.y))


# ---------------------------------------------------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------------------------------------------------

def run_single_battery(config, report, jobs=1):
    """Energy and ergotropy of one battery in a cavity sector (analytic dressed states)."""
    params = config.resolved_params
    p = eit_params(params)
    alpha, beta = initial_amplitudes(params)
    for arm, with_eit in config.arms():
        battery = battery_for_arm(p, with_eit, report, arm)
        jc = Batteries.JcParams(battery, omega=params["omega"], J=params["J"], n=int(params["n"]))
        energy, work = Batteries.energy_and_ergotropy_series(jc, alpha, beta, config.time_grid(arm))
        curve_set = report.add_curves(arm, [energy, work])
        report.fit(curve_set, "ergotropy")
        check_ergotropy_bounds(report, arm, energy, work)
    check_reference_rates(report, config, "ergotropy")
    check_rate_ratio(report, config, "ergotropy")


def run_probabilities(config, report, jobs=1):
    """Populations of |E1> and |g> while the battery exchanges its excitation with the cavity."""
    params = config.resolved_params
    p = eit_params(params)
    alpha, beta = initial_amplitudes(params)
    for arm, with_eit in config.arms():
        battery = battery_for_arm(p, with_eit, report, arm)
        jc = Batteries.JcParams(battery, omega=params["omega"], J=params["J"], n=int(params["n"]))
        excited, ground = Batteries.probability_series(jc, alpha, beta, config.time_grid(arm))
        curve_set = report.add_curves(arm, [excited, ground])
        report.fit(curve_set, "p_excited")
        report.fit(curve_set, "p_ground")
        total = excited.y + ground.y
        report.checks["probability_bounds.{}".format(arm)] = bool(np.all(total <= 1 + 1e-9) and
                                                                 np.all(ground.y >= -1e-12))
        if battery.gamma == 0:
            report.checks["complementarity.{}".format(arm)] = bool(np.max(np.abs(total - 1)) < 1e-9)
    check_reference_rates(report, config, "p_excited")
    check_rate_ratio(report, config, "p_excited")


def run_drive_sweep(config, report, jobs=1):
    """Maximal ergotropy while omega_c is tuned through omega_a at fixed omega_b."""
    params = config.resolved_params
    p = eit_params(params)
    alpha, beta = initial_amplitudes(params)
    omega_a = np.linspace(params["omega_a_min"], params["omega_a_max"], int(params["n_sweep"]))
    tasks = [(p.replace(omega_a=float(w)), params["J"], int(params["n"]), alpha, beta,
              config.grid["t_end"], config.grid["n_points"]) for w in omega_a]
    points = parallel_map(jc_point, tasks, jobs, desc="omega_c sweep")

    omega_c = np.array([point[0] for point in points])
    energy = np.array([point[1] for point in points])
    max_work = np.array([point[2] for point in points])
    report.add_curves("sweep", [TimeSeries(omega_c, energy, "energy"), TimeSeries(omega_c, max_work, "max_ergotropy")],
                      index_name="omega_c")

    slope = float(np.mean(np.diff(energy) / np.diff(omega_c)))
    expected = p.Omega1 ** 2 / p.Omega ** 2
    report.values["energy_slope"] = slope
    report.values["energy_slope_expected"] = expected
    report.checks["energy_slope"] = abs(slope - expected) <= 1e-2 * expected
    report.checks["max_ergotropy_increasing"] = bool(np.all(np.diff(max_work) > 0))


def run_shared_photon(config, report, jobs=1):
    """N batteries sharing one photon (Laplace-domain amplitudes)."""
    params = config.resolved_params
    p = eit_params(params)
    n_atoms = int(params["n_atoms"])
    for arm, with_eit in config.arms():
        battery = battery_for_arm(p, with_eit, report, arm)
        energy, work = Batteries.excitation_ergotropy_series(n_atoms, params["omega"], battery.x1, params["J"],
                                                             config.time_grid(arm))
        curve_set = report.add_curves(arm, [energy, work])
        report.fit(curve_set, "energy")
        check_ergotropy_bounds(report, arm, energy, work)
    check_reference_rates(report, config, "energy")
    check_rate_ratio(report, config, "energy")


def collective_fidelities(n_atoms, J_N, thetas):
    """
    Fidelity of the product of coherent states against the truncated two-mode propagator,
    for the direct exponential and for the Wei-Norman factorization.
    """
    n_max = Batteries.fock_cutoff(n_atoms)
    a, b = Batteries.two_mode_operators(n_max)
    beam_splitter = J_N * (a @ b.conj().T + a.conj().T @ b)
    vacuum = np.zeros(n_max + 1, dtype=complex)
    vacuum[0] = 1.0
    psi0 = np.kron(Batteries.coherent_state(np.sqrt(n_atoms), n_max), vacuum)

    direct, factorized = [], []
    for theta in thetas:
        t = theta / J_N
        pair = Batteries.coherent_evolution(n_atoms, J_N, t)
        target = np.kron(Batteries.coherent_state(pair.alpha_cavity, n_max),
                         Batteries.coherent_state(pair.beta_atoms, n_max))
        evolved = linops.expm(beam_splitter, -1j * t) @ psi0
        direct.append(abs(np.vdot(target, evolved)) ** 2)
        gauge = Batteries.wn_gauge(J_N, t)
        factorized.append(abs(np.vdot(target, Batteries.factorized_propagator(gauge, n_max) @ psi0)) ** 2)
    return np.array(direct), np.array(factorized)


def run_collective(config, report, jobs=1):
    """N batteries charged by several photons: Fock-space numerics and the collective bosonic reference."""
    params = config.resolved_params
    p = eit_params(params)
    n_atoms, photons = int(params["n_atoms"]), int(params["photons"])
    for arm, with_eit in config.arms():
        battery = battery_for_arm(p, with_eit, report, arm)
        spec = fock_spec(params, battery, config.basis)
        grid = config.time_grid(arm)
        energy, work = fock_point((spec, photons, grid[-1], len(grid)))
        curve_set = report.add_curves(arm, [TimeSeries(grid, energy, "energy"), TimeSeries(grid, work, "ergotropy")])
        report.fit(curve_set, "ergotropy", levels=2)
        report.fit(curve_set, "energy", levels=2)
        check_ergotropy_bounds(report, arm, curve_set.series["energy"], curve_set.series["ergotropy"])
    check_reference_rates(report, config, "ergotropy")
    check_rate_ratio(report, config, "ergotropy")

    # lossless collective reference, over one transfer period
    battery = Atoms.effective_battery(p, with_eit=True)
    _, _, J_N = Batteries.hp_hamiltonian(n_atoms, params["omega"], battery.x1, params["J"])
    grid = make_grid(np.pi / J_N, config.grid.get("n_points_no_eit", config.grid["n_points"]))
    energy, work = Batteries.collective_series(n_atoms, battery.x1.real, params["J"], grid)
    report.add_curves("collective", [energy, work])
    report.values["max_energy.collective"] = float(np.max(energy.y))

    direct, factorized = collective_fidelities(n_atoms, J_N, np.linspace(0, 0.25 * np.pi, 5))
    report.values["min_fidelity.collective"] = float(np.min(direct))
    report.values["min_fidelity.factorized"] = float(np.min(factorized))
    report.checks["collective_fock_fidelity"] = bool(np.min(direct) > 1 - 1e-6)
    report.checks["factorized_propagator_fidelity"] = bool(np.min(factorized) > 1 - 1e-6)


def run_dipole_pair(config, report, jobs=1):
    """Two batteries with dipole-dipole exchange charged by two photons."""
    params = config.resolved_params
    p = eit_params(params)
    photons = int(params["photons"])
    for arm, with_eit in config.arms():
        battery = battery_for_arm(p, with_eit, report, arm)
        spec = fock_spec(params, battery, config.basis, n_atoms=2)
        grid = config.time_grid(arm)
        states = Simulators.evolve_series(spec, Simulators.initial_state(spec, photons), grid)
        energy, work = Simulators.observables(spec, states, grid)
        _, work_dressed = Simulators.observables(spec, states, grid, dressed=True)
        curve_set = report.add_curves(arm, [energy, work, TimeSeries(grid, work_dressed.y, "ergotropy_dressed")])
        report.fit(curve_set, "ergotropy", levels=2)
        check_ergotropy_bounds(report, arm, energy, work)

        # the other basis over the first part of the window
        other = Simulators.FULL_TENSOR if spec.basis == Simulators.SYMMETRIC_DICKE else Simulators.SYMMETRIC_DICKE
        spec_other = spec.replace(basis=other)
        short = grid[:min(len(grid), 500)]
        states_other = Simulators.evolve_series(spec_other, Simulators.initial_state(spec_other, photons), short)
        populations = Simulators.dicke_populations(spec, states[:len(short)])
        populations_other = Simulators.dicke_populations(spec_other, states_other)
        deviation = float(np.max(np.abs(populations - populations_other)))
        report.values["basis_deviation.{}".format(arm)] = deviation
        report.checks["basis_equivalence.{}".format(arm)] = deviation < 1e-8

        full_spec, full_states = (spec, states) if spec.basis == Simulators.FULL_TENSOR else (spec_other, states_other)
        transform = Simulators.gpqe_transform(full_spec)
        antisymmetric = max(float((transform @ rho @ transform.conj().T)[1, 1].real)
                            for rho in Simulators.battery_densities(full_spec, full_states))
        report.values["antisymmetric_population.{}".format(arm)] = antisymmetric
        report.checks["antisymmetric_decoupling.{}".format(arm)] = antisymmetric < 1e-10


def _v_label(V):
    return "V{}".format(format_value(float(V)))


def run_dipole_delay(config, report, jobs=1):
    """Time of the ergotropy maximum of two batteries as the dipole-dipole exchange grows."""
    params = config.resolved_params
    p = eit_params(params)
    photons = int(params["photons"])
    arm = "eit" if config.eit != "off" else "no_eit"
    battery = battery_for_arm(p, config.eit != "off", report, arm)
    values = [float(v) for v in params["V_values"]]
    grid = config.time_grid(arm)
    tasks = [(fock_spec(params, battery, config.basis, n_atoms=2, V=V), photons, grid[-1], len(grid))
             for V in values]
    results = parallel_map(fock_point, tasks, jobs, desc="V sweep")

    times = []
    for V, (energy, work) in zip(values, results):
        energy_series, work_series = TimeSeries(grid, energy, "energy"), TimeSeries(grid, work, "ergotropy")
        report.add_curves(_v_label(V), [energy_series, work_series])
        check_ergotropy_bounds(report, _v_label(V), energy_series, work_series)
        times.append(first_maximum_time(work_series))
        report.values["first_maximum_time.{}".format(_v_label(V))] = times[-1]
    order = np.argsort(values)
    report.checks["first_maximum_delayed"] = bool(np.all(np.diff(np.array(times)[order]) >= 0))


def run_conventional(config, report, jobs=1):
    """Conventional two-level battery (excited level |e>) and the three-battery dipole sweep."""
    params = config.resolved_params
    p = eit_params(params)

    # bare |g> <-> |e> battery with its own (default zero) dissipation
    conventional = Atoms.effective_battery(p.replace(kappa=params.get("kappa_e", 0.0)), with_eit=False)
    spec = fock_spec(params, conventional, config.basis, n_atoms=1)
    grid = config.time_grid("eit")
    energy, work = fock_point((spec, int(params["photons"]), grid[-1], len(grid)))
    energy, work = TimeSeries(grid, energy, "energy"), TimeSeries(grid, work, "ergotropy")
    report.add_curves("conventional", [energy, work])
    report.values["max_ergotropy.conventional"] = float(np.max(work.y))
    report.checks["conventional_bound"] = float(np.max(work.y)) <= p.omega_e + 1e-9
    check_ergotropy_bounds(report, "conventional", energy, work)

    # three batteries, cavity resonant with the dark level
    battery = battery_for_arm(p, True, report, "eit")
    values = [float(v) for v in params["V_values"]]
    tasks = [(fock_spec(params, battery, config.basis, n_atoms=3, photons=3, V=V, omega=battery.energy),
              3, grid[-1], len(grid)) for V in values]
    results = parallel_map(fock_point, tasks, jobs, desc="V sweep")
    maxima = []
    for V, (energy_v, work_v) in zip(values, results):
        report.add_curves(_v_label(V), [TimeSeries(grid, energy_v, "energy"), TimeSeries(grid, work_v, "ergotropy")])
        maxima.append(float(np.max(work_v)))
        report.values["max_ergotropy.{}".format(_v_label(V))] = maxima[-1]
    order = np.argsort(values)
    report.checks["max_ergotropy_non_increasing"] = bool(np.all(np.diff(np.array(maxima)[order]) <= 1e-9))


def check_stark_shift(report, arm, spec, pulse):
    """Battery level dressed by the peak drive, checked against the levels of the simulated frame Hamiltonian."""
    single = spec.replace(n_atoms=1, V=0.0)
    delta_L = single.e1 - pulse.drive_frequency(single)
    levels = Simulators.drive_dressed_levels(delta_L, pulse.Omega0)
    simulated = Simulators.driven_levels(single, pulse)
    report.values["stark_shifted_e1.{}".format(arm)] = Simulators.stark_shifted_energy(single.e1, delta_L,
                                                                                        pulse.Omega0)
    report.values["dressed_splitting.{}".format(arm)] = levels.splitting
    report.checks["dressed_splitting.{}".format(arm)] = bool(
        abs(simulated[-1] - simulated[0] - levels.splitting) < 1e-9)


def run_pulse(config, report, jobs=1):
    """Batteries charged directly by a Gaussian pulse, compared with the lossless batteries."""
    params = config.resolved_params
    p = eit_params(params)
    pulse = Simulators.PulseSpec(Omega0=params["Omega0"], t_c=params["t_c"], sigma=params["sigma"],
                                 omega_L=params.get("omega_L"))
    for arm, with_eit in config.arms():
        grid = config.time_grid(arm)
        curves = []
        for name, arm_params in (("ergotropy", p), ("ergotropy_lossless", p.replace(kappa=0.0))):
            battery = Atoms.effective_battery(arm_params, with_eit=with_eit)
            spec = Simulators.SystemSpec(n_atoms=int(params["n_atoms"]), n_max=0, omega=params.get("omega", 1.0),
                                         x1=battery.x1, J=0.0, V=params["V"], basis=config.basis)
            states = Simulators.evolve_pulsed(spec, pulse, Simulators.initial_state(spec, 0), grid)
            _, work = Simulators.observables(spec, states, grid)
            curves.append(TimeSeries(grid, work.y, name))
            if name == "ergotropy":
                report.values["x1_real.{}".format(arm)] = battery.x1.real
                report.values["x1_imag.{}".format(arm)] = battery.x1.imag
                check_stark_shift(report, arm, spec, pulse)
        report.add_curves(arm, curves)

        peak = float(np.max(curves[1].y))
        deviation = float(np.max(np.abs(curves[0].y - curves[1].y))) / peak if peak > 0 else 0.0
        report.values["relative_deviation.{}".format(arm)] = deviation
        if config.reference_parameters:
            if with_eit:
                report.checks["lossless_overlap.eit"] = deviation < 0.05
            else:
                report.checks["dissipation_visible.no_eit"] = deviation > 0.20


def run_custom(config, report, jobs=1):
    """Free Fock-space charging run."""
    params = config.resolved_params
    p = eit_params(params)
    photons = int(params["photons"])
    for arm, with_eit in config.arms():
        battery = battery_for_arm(p, with_eit, report, arm)
        spec = fock_spec(params, battery, config.basis)
        grid = config.time_grid(arm)
        energy, work = fock_point((spec, photons, grid[-1], len(grid)))
        energy, work = TimeSeries(grid, energy, "energy"), TimeSeries(grid, work, "ergotropy")
        curve_set = report.add_curves(arm, [energy, work])
        report.fit(curve_set, "ergotropy")
        check_ergotropy_bounds(report, arm, energy, work)


SCENARIOS = OrderedDict([
    ("fig3", Scenario("single battery energy and ergotropy, with and without EIT", run_single_battery,
                      dict(EIT_DEFAULTS, omega=1.0, J=0.5, n=1, alpha=1.0, beta=0.0),
                      dict(t_end=4000.0, n_points=40000, t_end_no_eit=100.0, n_points_no_eit=2000))),
    ("fig4", Scenario("maximal ergotropy versus omega_c", run_drive_sweep,
                      dict(EIT_DEFAULTS, J=0.5, n=0, alpha=0.0, beta=1.0, omega_a_min=0.5, omega_a_max=4.5,
                           n_sweep=20),
                      dict(t_end=20.0, n_points=2000), eit="on")),
    ("fig5", Scenario("state probabilities of a single battery", run_probabilities,
                      dict(EIT_DEFAULTS, omega=1.0, J=0.5, n=0, alpha=1.0, beta=0.0),
                      dict(t_end=4000.0, n_points=40000, t_end_no_eit=100.0, n_points_no_eit=2000))),
    ("fig6", Scenario("N batteries sharing one photon", run_shared_photon,
                      dict(EIT_DEFAULTS, omega=1.0, J=0.5, n_atoms=3),
                      dict(t_end=4000.0, n_points=40000, t_end_no_eit=100.0, n_points_no_eit=2000))),
    ("fig7", Scenario("three batteries charged by three photons, Fock numerics and collective reference",
                      run_collective,
                      dict(EIT_DEFAULTS, omega=1.0, J=0.5, n_atoms=3, photons=3, V=0.0),
                      dict(t_end=1000.0, n_points=20000, t_end_no_eit=40.0, n_points_no_eit=2000))),
    ("fig8", Scenario("two batteries with dipole-dipole exchange and two photons", run_dipole_pair,
                      dict(EIT_DEFAULTS, omega=1.0, J=0.5, photons=2, V=0.5),
                      dict(t_end=100.0, n_points=2000, t_end_no_eit=40.0, n_points_no_eit=2000))),
    ("fig9", Scenario("ergotropy delay versus dipole-dipole exchange", run_dipole_delay,
                      dict(EIT_DEFAULTS, omega=1.0, J=0.5, photons=2, V_values=[0.0, 1.0, 2.0, 4.0]),
                      dict(t_end=60.0, n_points=2000), eit="on")),
    ("fig10", Scenario("conventional two-level battery and the three-battery dipole sweep", run_conventional,
                       dict(EIT_DEFAULTS, omega=0.5, J=0.5, photons=1, kappa_e=0.0, V_values=[0.0, 0.5, 1.0, 2.0]),
                       dict(t_end=50.0, n_points=2000), eit="on")),
    ("fig11", Scenario("Gaussian pulse charging against the lossless batteries", run_pulse,
                       dict(EIT_DEFAULTS, n_atoms=2, V=2.0, Omega0=2.0, t_c=1.6, sigma=0.8),
                       dict(t_end=8.0, n_points=1601))),
    ("custom", Scenario("free Fock-space charging run", run_custom,
                        dict(EIT_DEFAULTS, omega=1.0, J=0.5, n_atoms=1, photons=1, V=0.0),
                        dict(t_end=100.0, n_points=2000))),
])


def run(config, jobs=1):
    """
    Run a scenario and collect its curves, fits and checks.
    """
    logger.info("running scenario %s (eit=%s)", config.scenario, config.eit)
    start = time.perf_counter()
    report = RunReport(scenario=config.scenario, eit=config.eit, params=config.resolved_params)
    SCENARIOS[config.scenario].runner(config, report, jobs=jobs)
    report.duration = time.perf_counter() - start
    logger.info("scenario %s finished in %.2f s, checks %s", config.scenario, report.duration,
                "passed" if report.passed else "FAILED")
    for key, value in report.checks.items():
        if not value:
            logger.warning("check %s failed", key)
    return report


def _sink_path(directory, name, curve_set, n_sets):
    stem, extension = os.path.splitext(name)
    if n_sets > 1:
        stem = "{}_{}".format(stem, curve_set.name)
    return os.path.join(directory, stem + extension)


def write_outputs(report, config, directory):
    """
    Write the csv, svg and report sinks of a run plus run_params.txt (run identity and wall-clock duration).
    """
    written = []
    n_sets = len(report.curves)
    for curve_set in report.curves:
        if "csv" in config.outputs:
            written.append(emit_csv(curve_set.series, _sink_path(directory, config.outputs["csv"], curve_set, n_sets),
                                    index_name=curve_set.index_name))
        if "svg" in config.outputs:
            written.append(display_results.emit_svg(
                curve_set.series, _sink_path(directory, config.outputs["svg"], curve_set, n_sets),
                style={"title": "{} {}".format(report.scenario, curve_set.name), "xlabel": curve_set.index_name},
                fits=curve_set.fits))
    if "report" in config.outputs:
        written.append(write_report(report.entries(), os.path.join(directory, config.outputs["report"])))

    save_params({"UUID": str(uuid.uuid4()),
                 "Time": time.strftime("%Y-%m-%d %H:%M:%S"),
                 "Code version (Git hash)": get_git_hash(),
                 "config": config.path,
                 "scenario": report.scenario,
                 "params": report.params,
                 "duration": report.duration},
                os.path.join(directory, "run_params.txt"))
    return written
