"""Command-line experiment runner.

    minl <kind> [--preset NAME] [--config FILE] [--set key=value]...
                [--seed N] [--out PATH] [--threads N]

Every run writes a CSV (header comments describe the columns) and a JSON
sidecar with the resolved parameters, seed, cutoff, version and wall time.
Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .circuit import InterferometerConfig, loss_channels, run_pipeline
from .closedform import (
    click_state,
    no_detection_state,
    no_detection_variance,
    pnr_moments,
    pnr_probability,
    pnr_state,
    special_case_probability,
    special_case_variance,
    theta_from_T,
)
from .detect import OUTCOMES, DetectionEvent, HeraldingError
from .fock import DEFAULT_CUTOFF, CutoffWarning, PureState, photon_number_distribution, to_density, two_mode_squeezed_vacuum, vacuum
from .optimize import OptimizationProblem, phase_heatmap, probability_tradeoff_curve
from .squeeze import evaluate, moments, squeezing_db, two_mode_variance, xi_sweep
from .wigner import WHICH, reduced_wigner

KINDS = ("simulate", "xi_sweep", "phase_heatmap", "tradeoff", "loss_sweep", "wigner", "photon_dist", "oracle_check")

# parameters at the single-detection optimum used for the photon statistics
ANCHOR_T = (0.68, 0.82, 0.38, 1.0)


class ValidationError(ValueError):
    """Bad experiment specification (exit code 1)."""


class NumericalFailure(RuntimeError):
    """The experiment ran but produced no valid result (exit code 2)."""


# parameter parsing

_ANGLE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*pi(?:\s*/\s*(\d+(?:\.\d+)?))?$")


def parse_real(text: str) -> float:
    """Float, also accepting multiples of pi such as ``3pi/2`` or ``-0.5*pi``."""
    s = str(text).strip().lower()
    m = _ANGLE.match(s)
    if m:
        coef = m.group(1)
        c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        div = float(m.group(2)) if m.group(2) else 1.0
        return c * math.pi / div
    try:
        return float(s)
    except ValueError:
        raise ValidationError(f"not a number: {text!r}") from None


def parse_complex(text: str) -> complex:
    s = str(text).strip().replace(" ", "")
    if "j" in s:
        try:
            return complex(s)
        except ValueError:
            raise ValidationError(f"not a complex number: {text!r}") from None
    return complex(parse_real(s))


def _int(text: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise ValidationError(f"not an integer: {text!r}") from None


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        s = str(text).strip()
        for o in options:
            if s.lower() == o.lower():
                return o
        raise ValidationError(f"expected one of {'|'.join(options)}, got {text!r}")

    return parse


def _floats(text: str) -> tuple[float, ...]:
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValidationError("empty list")
    return tuple(parse_real(p) for p in parts)


# key -> (parser, default); the defaults are the single-detection optimum
SCHEMA: dict[str, tuple[Callable[[str], object], object]] = {
    "alpha": (parse_complex, 1.0),
    "T1": (parse_real, ANCHOR_T[0]),
    "T2": (parse_real, ANCHOR_T[1]),
    "T3": (parse_real, ANCHOR_T[2]),
    "T4": (parse_real, ANCHOR_T[3]),
    "phi": (parse_real, 3 * math.pi / 2),
    "xi": (parse_real, math.pi / 2),
    "detector": (_choice("PNR", "click"), "PNR"),
    "outcome": (_choice("single", *OUTCOMES), "single"),
    "placement": (_choice("output", "internal"), "output"),
    "cutoff": (_int, None),
    "Rb": (parse_real, 0.0),
    "Ra": (parse_real, 0.0),
    "state": (_choice("interferometer", "tmsv", "vacuum"), "interferometer"),
    "z": (parse_real, 0.143),
    # simulate grids (T1 = 1/2, T2 = T3 = T, T4 = 1 when enabled)
    "grid_T": (_int, 0),
    "grid_alpha": (_int, 0),
    "alpha_max": (parse_real, 2.0),
    # optimizer
    "P_crit": (parse_real, 0.1),
    "starts": (_int, 16),
    "budget": (_int, 2000),
    "objective": (_choice("C1", "C2"), "C1"),
    # grids
    "xi_n": (_int, 181),
    "phi_n": (_int, 25),
    "alphas": (_floats, (0.4, 0.7, 1.0, 1.3, 1.6)),
    "pcrit_min": (parse_real, 0.05),
    "pcrit_max": (parse_real, 0.3),
    "pcrit_n": (_int, 6),
    "Rb_max": (parse_real, 0.1),
    "Ra_max": (parse_real, 0.1),
    "loss_n": (_int, 11),
    "which": (_choice("all", *WHICH), "X1X2"),
    "grid_n": (_int, 81),
    "grid_max": (parse_real, 6.0),
    "n_configs": (_int, 100),
}

PRESETS: dict[str, tuple[str, dict[str, str]]] = {
    "fig2": ("simulate", {"T1": "0.5", "T4": "1", "grid_T": "20", "grid_alpha": "20", "alpha_max": "2",
                          "placement": "internal", "phi": "pi/2", "xi": "pi/2"}),
    "fig3": ("phase_heatmap", {"detector": "PNR", "outcome": "single", "alpha": "1", "P_crit": "0.1",
                               "phi_n": "25", "xi_n": "25"}),
    "fig4": ("tradeoff", {"detector": "PNR", "outcome": "single", "phi": "3pi/2", "xi": "pi/2"}),
    "fig5": ("phase_heatmap", {"detector": "click", "outcome": "single", "alpha": "1", "P_crit": "0.1",
                               "phi_n": "25", "xi_n": "25"}),
    "fig6": ("simulate", {"detector": "PNR", "outcome": "single", "alpha": "1", "phi": "3pi/2", "xi": "pi/2"}),
    "fig7": ("wigner", {"detector": "PNR", "outcome": "single", "which": "all"}),
    "fig8": ("loss_sweep", {"Rb_max": "0.1", "Ra_max": "0.1", "loss_n": "11"}),
}


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{no}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def resolve_params(overrides: dict[str, str], env: dict[str, str] | None = None) -> dict[str, object]:
    """Parse raw overrides against the schema and fill defaults."""
    env = os.environ if env is None else env
    unknown = sorted(set(overrides) - set(SCHEMA))
    if unknown:
        raise ValidationError(f"unknown parameter(s): {', '.join(unknown)}")
    params = {k: default for k, (_, default) in SCHEMA.items()}
    for k, v in overrides.items():
        params[k] = SCHEMA[k][0](v)
    if params["cutoff"] is None:
        params["cutoff"] = _int(env["MINL_CUTOFF"]) if env.get("MINL_CUTOFF") else DEFAULT_CUTOFF
    return params


@dataclass
class ExperimentSpec:
    name: str
    kind: str
    params: dict
    seed: int = 0
    output_path: str = ""
    threads: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}; expected one of {'|'.join(KINDS)}")
        p = self.params
        for k in ("T1", "T2", "T3", "T4"):
            if not 0.0 <= p[k] <= 1.0:
                raise ValidationError(f"{k} must lie in [0, 1]")
        for k in ("Rb", "Ra", "Rb_max", "Ra_max"):
            if not 0.0 <= p[k] < 1.0:
                raise ValidationError(f"{k} must lie in [0, 1)")
        if not 0.0 < p["P_crit"] <= 1.0:
            raise ValidationError("P_crit must lie in (0, 1]")
        if p["cutoff"] < 1:
            raise ValidationError("cutoff must be >= 1")
        for k in ("starts", "budget", "xi_n", "phi_n", "pcrit_n", "loss_n", "grid_n", "n_configs"):
            if p[k] < 1:
                raise ValidationError(f"{k} must be >= 1")
        if p["grid_T"] < 0 or p["grid_alpha"] < 0:
            raise ValidationError("grid sizes must be >= 0")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")


# experiment helpers


def _event(p: dict) -> DetectionEvent:
    outcome = "ch4_only" if p["outcome"] == "single" else p["outcome"]
    return DetectionEvent(p["detector"], outcome)


def base_config(p: dict) -> InterferometerConfig:
    return InterferometerConfig.from_T(
        [p["T1"], p["T2"], p["T3"], p["T4"]],
        phi=p["phi"],
        alpha_in=p["alpha"],
        event=_event(p),
        losses=loss_channels(p["Rb"], p["Ra"]),
        cutoff=p["cutoff"],
        phase_placement=p["placement"],
    )


def _problem(p: dict, seed: int, threads: int) -> OptimizationProblem:
    return OptimizationProblem(
        event=_event(p),
        alpha_in=p["alpha"],
        phi=p["phi"],
        xi=p["xi"],
        P_crit=p["P_crit"],
        objective=p["objective"],
        starts=p["starts"],
        budget=p["budget"],
        seed=seed,
        cutoff=p["cutoff"],
        phase_placement=p["placement"],
        losses=loss_channels(p["Rb"], p["Ra"]),
        workers=threads,
    )


def _state(p: dict):
    """Two-mode state selected by ``state`` and its heralding probability."""
    if p["state"] == "tmsv":
        return two_mode_squeezed_vacuum(p["z"], p["cutoff"]), 1.0
    if p["state"] == "vacuum":
        return vacuum(2, p["cutoff"]), 1.0
    return run_pipeline(base_config(p))


@dataclass
class LossSweep:
    Rb_grid: np.ndarray
    Ra_grid: np.ndarray
    S_dB: np.ndarray
    P_det: np.ndarray


def loss_sweep(base: InterferometerConfig, Rb_grid: Iterable[float], Ra_grid: Iterable[float], xi: float = math.pi / 2) -> LossSweep:
    """Squeezing of C1 at fixed parameters with total losses split equally per channel.

    ``S_dB[i, j]`` belongs to ``Rb_grid[i]`` (before detection) and
    ``Ra_grid[j]`` (after detection).
    """
    rb = np.asarray(list(Rb_grid), dtype=float)
    ra = np.asarray(list(Ra_grid), dtype=float)
    S = np.empty((rb.size, ra.size))
    P = np.empty_like(S)
    for i, b in enumerate(rb):
        for j, a in enumerate(ra):
            rep = evaluate(base.with_(losses=loss_channels(b, a)), xi)
            S[i, j] = rep.S1_dB
            P[i, j] = rep.P_det
    return LossSweep(rb, ra, S, P)


@dataclass
class OracleRow:
    check: str
    max_delta: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.max_delta < self.threshold)


def _moment_delta(m1, m2) -> float:
    return max(abs(getattr(m1, f) - getattr(m2, f)) for f in ("a", "b", "a2", "b2", "ab", "abd", "aad", "bbd"))


def oracle_check(n_configs: int = 100, seed: int = 0, cutoff: int = 30) -> list[OracleRow]:
    """Closed forms against the Fock simulator on random configurations.

    Angles are drawn from [0, pi) so that both signs of each reflection
    amplitude occur; alpha in [0, 1.6], phi and xi in [0, 2 pi).
    """
    rng = np.random.default_rng(seed)
    d = cutoff + 1
    worst: dict[str, float] = {}
    limits: dict[str, float] = {}

    def record(name: str, delta: float, tol: float) -> None:
        worst[name] = max(worst.get(name, 0.0), float(delta))
        limits[name] = tol

    for _ in range(n_configs):
        theta = tuple(rng.uniform(0, math.pi, 4))
        alpha = float(rng.uniform(0, 1.6))
        phi, xi = rng.uniform(0, 2 * math.pi, 2)
        for variant, outcome in (("single", "ch4_only"), ("both", "both")):
            cfg = InterferometerConfig(theta, phi, alpha, DetectionEvent("PNR", outcome), cutoff=cutoff, phase_placement="internal")
            p_cf = pnr_probability(theta, alpha, variant)
            if p_cf < 1e-6:
                continue
            psi, p_sim = run_pipeline(cfg)
            record(f"PNR {variant} probability", abs(p_cf - p_sim), 1e-9)
            c = pnr_state(theta, phi, alpha, variant)
            record(f"PNR {variant} state", np.max(np.abs(c.amplitudes(d) - psi.amplitudes)), 1e-9)
            m_sim = moments(psi)
            record(f"PNR {variant} moments", _moment_delta(pnr_moments(c), m_sim), 1e-9)

            ccfg = cfg.with_(event=DetectionEvent("click", outcome))
            with warnings.catch_warnings():
                warnings.simplefilter("error", CutoffWarning)
                cc = click_state(theta, phi, alpha, variant)
            if cc.P < 1e-6:
                continue
            rho, pc_sim = run_pipeline(ccfg)
            record(f"click {variant} probability", abs(cc.P - pc_sim), 1e-7)
            record(f"click {variant} state", np.max(np.abs(cc.density(d) - to_density(rho).matrix)), 1e-7)

        # no out-coupling, phase on channel 2 after BS4
        nd = InterferometerConfig((theta[0], 0.0, 0.0, theta[3]), phi, alpha, DetectionEvent("PNR", "none"), cutoff=cutoff)
        psi, _ = run_pipeline(nd)
        c0 = no_detection_state(0, 0, phi, alpha, theta=(theta[0], theta[3]))
        record("no-detection state", np.max(np.abs(c0.amplitudes(d) - psi.amplitudes)), 1e-9)
        record("no-detection moments", _moment_delta(pnr_moments(c0), moments(psi)), 1e-9)
        v1, v2 = two_mode_variance(moments(psi), xi)
        T1, T4 = math.cos(theta[0]) ** 2, math.cos(theta[3]) ** 2
        if math.sin(theta[0]) * math.cos(theta[0]) >= 0 and math.sin(theta[3]) * math.cos(theta[3]) >= 0:
            # the variance formula is written with non-negative t, r
            v_cf = no_detection_variance(T1, T4, phi)
            record("no-detection variance", max(abs(v1 - v_cf), abs(v2 - v_cf)), 1e-9)

        # special case T1 = 1/2, T2 = T3 = T, T4 = 1
        T = float(rng.uniform(0, 1))
        sc = InterferometerConfig(theta_from_T([0.5, T, T, 1.0]), phi, alpha, DetectionEvent("PNR", "ch4_only"), cutoff=cutoff, phase_placement="internal")
        if special_case_probability(T, alpha) > 1e-6:
            psi, p_sim = run_pipeline(sc)
            w1, w2 = two_mode_variance(moments(psi), xi)
            s1, s2 = special_case_variance(T, alpha, phi, xi)
            record("special-case variance", max(abs(w1 - s1), abs(w2 - s2)), 1e-9)
            record("special-case probability", abs(p_sim - special_case_probability(T, alpha)), 1e-9)

    return [OracleRow(k, worst[k], limits[k]) for k in worst]


# running


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == 0:
        return "0"
    return f"{x:.12g}"


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str]) -> None:
    with open(path, "w") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


_DB_NOTE = "S_dB = 10 log10(Var / 0.25); 0.25 is the vacuum (shot-noise) variance of C1 and C2"
_T_NOTE = "T_i = cos^2 theta_i are beam-splitter transmissivities; phi interferometer phase; xi quadrature phase (rad)"


def _run_simulate(spec: ExperimentSpec):
    p = spec.params
    cols = ["T1", "T2", "T3", "T4", "alpha", "phi", "xi", "var_C1", "var_C2", "S1_dB", "S2_dB", "P_det"]
    rows = []
    if p["grid_T"] or p["grid_alpha"]:
        Ts = np.linspace(0, 1, max(p["grid_T"], 1) + 1)[1:]
        As = np.linspace(0, p["alpha_max"], max(p["grid_alpha"], 1))
        for T in Ts:
            for a in As:
                q = dict(p, T2=T, T3=T, alpha=complex(a))
                try:
                    rep = evaluate(base_config(q), p["xi"])
                except HeraldingError:
                    continue
                rows.append([p["T1"], T, T, p["T4"], a, p["phi"], p["xi"], rep.var_C1, rep.var_C2, rep.S1_dB, rep.S2_dB, rep.P_det])
        if not rows:
            raise NumericalFailure("no grid point has a usable detection probability")
        best = min(rows, key=lambda r: r[9])
        summary = f"simulate: {len(rows)} grid points, best S1={best[9]:.4f} dB at T={best[1]:.3f}, alpha={best[4]:.3f}"
    else:
        state, P = _state(p)
        v1, v2 = two_mode_variance(moments(state), p["xi"])
        s1, s2 = squeezing_db(v1), squeezing_db(v2)
        a = p["alpha"]
        rows.append([p["T1"], p["T2"], p["T3"], p["T4"], abs(a), p["phi"], p["xi"], v1, v2, s1, s2, P])
        summary = f"simulate: S1={s1:.4f} dB S2={s2:.4f} dB P={P:.4f}"
    comments = [
        f"kind=simulate state={p['state']} detector={p['detector']} outcome={p['outcome']} placement={p['placement']}",
        _T_NOTE,
        "var_C1, var_C2: joint-quadrature variances; P_det: heralding probability",
        _DB_NOTE,
    ]
    return cols, rows, comments, summary


def _run_xi_sweep(spec: ExperimentSpec):
    p = spec.params
    state, P = _state(p)
    grid = np.linspace(0, 2 * math.pi, p["xi_n"])
    s1, s2 = xi_sweep(state, grid)
    rows = [[x, a, b] for x, a, b in zip(grid, s1, s2)]
    i = int(np.argmin(s1))
    summary = f"xi_sweep: min S1={s1[i]:.4f} dB at xi={grid[i]:.4f} (P={P:.4f})"
    comments = ["kind=xi_sweep", "xi: quadrature phase (rad); S1_dB, S2_dB: squeezing of C1 and C2", _DB_NOTE]
    return ["xi", "S1_dB", "S2_dB"], rows, comments, summary


def _run_heatmap(spec: ExperimentSpec):
    p = spec.params
    problem = _problem(p, spec.seed, spec.threads)
    phis = np.linspace(0, 2 * math.pi, p["phi_n"])
    xis = np.linspace(0, 2 * math.pi, p["xi_n"])
    hm = phase_heatmap(problem, phis, xis)
    if np.all(np.isnan(hm.S_dB)):
        raise NumericalFailure(f"no feasible point with P_det >= {p['P_crit']} on the grid")
    rows = []
    for i, phi in enumerate(phis):
        for j, xi in enumerate(xis):
            T = np.cos(hm.theta[i, j]) ** 2
            rows.append([phi, xi, hm.S_dB[i, j], hm.P_det[i, j], *T])
    i, j = hm.argmin()
    summary = f"phase_heatmap: min S={hm.S_dB[i, j]:.4f} dB at phi={phis[i]:.4f}, xi={xis[j]:.4f}"
    comments = [
        f"kind=phase_heatmap detector={p['detector']} outcome={p['outcome']} alpha={p['alpha']} P_crit={p['P_crit']}",
        "S_dB: squeezing maximized over T1..T4 subject to P_det >= P_crit (nan if infeasible)",
        _T_NOTE,
        _DB_NOTE,
    ]
    return ["phi", "xi", "S_dB", "P_det", "T1", "T2", "T3", "T4"], rows, comments, summary


def _run_tradeoff(spec: ExperimentSpec):
    p = spec.params
    problem = _problem(p, spec.seed, spec.threads)
    grid = np.linspace(p["pcrit_min"], p["pcrit_max"], p["pcrit_n"])
    if grid[0] <= 0 or grid[-1] > 1:
        raise ValidationError("P_crit grid must lie in (0, 1]")
    curves = probability_tradeoff_curve(problem, [abs(a) for a in p["alphas"]], grid)
    if all(np.all(np.isnan(v)) for v in curves.values()):
        raise NumericalFailure("no feasible point on the P_crit grid")
    rows = [[a, pc, s] for a, row in curves.items() for pc, s in zip(grid, row)]
    best = min((r for r in rows if not math.isnan(r[2])), key=lambda r: r[2])
    summary = f"tradeoff: best S={best[2]:.4f} dB at alpha={best[0]:.3f}, P_crit={best[1]:.3f}"
    comments = [
        f"kind=tradeoff detector={p['detector']} outcome={p['outcome']} phi={p['phi']} xi={p['xi']}",
        "S_dB: squeezing maximized over T1..T4 subject to P_det >= P_crit (nan if infeasible)",
        _DB_NOTE,
    ]
    return ["alpha", "P_crit", "S_dB"], rows, comments, summary


def _run_loss_sweep(spec: ExperimentSpec):
    p = spec.params
    rb = np.linspace(0, p["Rb_max"], p["loss_n"])
    ra = np.linspace(0, p["Ra_max"], p["loss_n"])
    res = loss_sweep(base_config(dict(p, Rb=0.0, Ra=0.0)), rb, ra, p["xi"])
    rows = [[b, a, res.S_dB[i, j], res.P_det[i, j]] for i, b in enumerate(rb) for j, a in enumerate(ra)]
    summary = f"loss_sweep: S from {res.S_dB[0, 0]:.4f} dB (lossless) to {res.S_dB[-1, -1]:.4f} dB"
    comments = [
        "kind=loss_sweep",
        "Rb_total, Ra_total: summed reflectivity of the loss beam splitters before and after detection,",
        "split equally between the two interferometer channels",
        _DB_NOTE,
    ]
    return ["Rb_total", "Ra_total", "S_dB", "P_det"], rows, comments, summary


def _run_wigner(spec: ExperimentSpec):
    p = spec.params
    state, _ = _state(p)
    axis = np.linspace(-p["grid_max"], p["grid_max"], p["grid_n"])
    which = WHICH if p["which"] == "all" else (p["which"],)
    rows = []
    parts = []
    for w in which:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            g = reduced_wigner(state, w, (axis, axis), inner=axis)
        unit = g.unit_l2()
        for i, x in enumerate(axis):
            for j, y in enumerate(axis):
                rows.append([w, x, y, g.values[i, j], unit[i, j]])
        cx, cy = g.centroid()
        parts.append(f"{w} centroid=({cx:.3f}, {cy:.3f})")
    summary = "wigner: " + "; ".join(parts)
    comments = [
        f"kind=wigner state={p['state']}",
        "W: reduced Wigner function integrated over the two complementary quadratures;",
        "the full 4-D function is 4 Tr[rho D(2a) D(2b) parity] with W(vacuum, 0) = 4",
        "W_unit_l2: W rescaled so that the grid integral of W^2 equals 1",
    ]
    return ["which", "x", "y", "W", "W_unit_l2"], rows, comments, summary


def _run_photon_dist(spec: ExperimentSpec):
    p = spec.params
    state, P = _state(p)
    dist = photon_number_distribution(state)
    rows = [[n1, n2, dist[n1, n2]] for n1 in range(dist.shape[0]) for n2 in range(dist.shape[1])]
    mean1 = float(np.sum(np.arange(dist.shape[0])[:, None] * dist))
    mean2 = float(np.sum(np.arange(dist.shape[1])[None, :] * dist))
    summary = f"photon_dist: <n1>={mean1:.4f} <n2>={mean2:.4f} P={P:.4f}"
    comments = ["kind=photon_dist", "probability of n1 photons in output channel 1 and n2 in channel 2"]
    return ["n1", "n2", "probability"], rows, comments, summary


def _run_oracle(spec: ExperimentSpec):
    p = spec.params
    rows = oracle_check(p["n_configs"], spec.seed, p["cutoff"])
    failed = [r.check for r in rows if not r.passed]
    summary = f"oracle_check: {len(rows) - len(failed)}/{len(rows)} checks pass"
    comments = ["kind=oracle_check", "max_delta: largest |closed form - simulator| over the sampled configurations"]
    out = [[r.check, r.max_delta, r.threshold, r.passed] for r in rows]
    return ["check", "max_delta", "threshold", "pass"], out, comments, summary, failed


RUNNERS = {
    "simulate": _run_simulate,
    "xi_sweep": _run_xi_sweep,
    "phase_heatmap": _run_heatmap,
    "tradeoff": _run_tradeoff,
    "loss_sweep": _run_loss_sweep,
    "wigner": _run_wigner,
    "photon_dist": _run_photon_dist,
    "oracle_check": _run_oracle,
}


def _jsonable(v):
    if isinstance(v, complex):
        return v.real if v.imag == 0 else [v.real, v.imag]
    if isinstance(v, tuple):
        return list(v)
    return v


def run(spec: ExperimentSpec) -> str:
    """Run one experiment, write the CSV and its JSON sidecar, return the summary line."""
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("error", CutoffWarning)
        try:
            result = RUNNERS[spec.kind](spec)
        except CutoffWarning as exc:
            raise NumericalFailure(f"cutoff {spec.params['cutoff']} too small: {exc}") from None
        except HeraldingError as exc:
            raise NumericalFailure(str(exc)) from None
    failed = result[4] if len(result) > 4 else []
    cols, rows, comments, summary = result[:4]
    out = Path(spec.output_path or f"{spec.name}.csv")
    if out.parent and not out.parent.exists():
        raise ValidationError(f"output directory {out.parent} does not exist")
    comments = list(comments) + [f"seed={spec.seed} cutoff={spec.params['cutoff']} minl={__version__}"]
    write_csv(out, cols, rows, comments)
    meta = {
        "name": spec.name,
        "kind": spec.kind,
        "params": {k: _jsonable(v) for k, v in spec.params.items()},
        "seed": spec.seed,
        "cutoff": spec.params["cutoff"],
        "threads": spec.threads,
        "version": __version__,
        "wall_time_s": time.perf_counter() - start,
        "csv": str(out),
        "summary": summary,
    }
    if spec.kind in ("phase_heatmap", "tradeoff"):
        meta["optimizer"] = {
            "method": "SLSQP, finite-difference gradients",
            "start_design": "scrambled Sobol over [0, pi/2]^4 plus warm starts from neighbouring grid points",
            "starts": spec.params["starts"],
            "budget_per_start": spec.params["budget"],
        }
    out.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if failed:
        raise NumericalFailure(f"oracle checks failed: {', '.join(failed)}")
    return f"{summary} -> {out}"


def build_spec(argv: Sequence[str] | None = None, env: dict[str, str] | None = None) -> ExperimentSpec:
    parser = argparse.ArgumentParser(prog="minl", description="Heralded two-mode squeezing experiments.")
    parser.add_argument("kind", help="|".join(KINDS))
    parser.add_argument("--preset", help="|".join(PRESETS))
    parser.add_argument("--config", help="flat key=value file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)
    if args.kind not in KINDS:
        raise ValidationError(f"unknown kind {args.kind!r}; expected one of {'|'.join(KINDS)}")
    raw: dict[str, str] = {}
    if args.preset:
        if args.preset not in PRESETS:
            raise ValidationError(f"unknown preset {args.preset!r}; expected one of {'|'.join(PRESETS)}")
        raw.update(PRESETS[args.preset][1])
    if args.config:
        raw.update(read_config_file(args.config))
    for item in args.set:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    if args.kind == "oracle_check" and "cutoff" not in raw:
        raw["cutoff"] = "30"
    params = resolve_params(raw, env)
    return ExperimentSpec(args.preset or args.kind, args.kind, params, args.seed, args.out, args.threads)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        spec = build_spec(argv)
        print(run(spec))
    except SystemExit as exc:
        # argparse usage errors
        return 1 if exc.code else 0
    except ValidationError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
