"""Monte-Carlo sweep harness for the phase-transition experiments.

For every cell (procedure, p, beta, rho) the harness draws n_runs instances
with all non-zero means set to rho times the procedure's calibrated signal
scale, applies the procedure at its calibrated penalty, and counts exact
support recoveries.  Instance seeds are derived per (master_seed, cell, rep)
from the counter-based generator, so results are bit-identical for a given
config regardless of thread count or scheduling.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import calibration, special, theory
from .backend import derive_seed, kernel
from .model import ProblemConfig, config_for_cell, effective_sigma, experiment_dimensions

PROCEDURES = ("lasso", "group_l2", "group_linf", "union")

#: signal-scale families; the union is scored on the lasso scale
_SCALE_ID = {"lasso": 0, "group": 1, "linf": 2}

SWEEP_FIELDS = ("p_list", "beta_list", "rho_grid", "n_runs", "procedures",
                "master_seed", "alpha_prime", "delta_prime", "sigma0", "matched_mu")

DEFAULT_RHO_GRID = tuple(round(0.05 + 0.15 * i, 2) for i in range(14))


@dataclass(frozen=True)
class SweepConfig:
    """Grid description for one sweep.

    matched_mu switches to the comparison mode where every procedure is scored
    on the same instances, generated at rho times the lasso scale.
    """

    p_list: tuple
    beta_list: tuple
    rho_grid: tuple = DEFAULT_RHO_GRID
    n_runs: int = 200
    procedures: tuple = PROCEDURES
    master_seed: int = 0
    alpha_prime: float = 0.01
    delta_prime: float = 0.01
    sigma0: float = 1.0
    matched_mu: bool = False

    def __post_init__(self):
        object.__setattr__(self, "p_list", tuple(int(p) for p in self.p_list))
        object.__setattr__(self, "beta_list", tuple(float(b) for b in self.beta_list))
        object.__setattr__(self, "rho_grid", tuple(float(r) for r in self.rho_grid))
        object.__setattr__(self, "procedures", tuple(self.procedures))
        object.__setattr__(self, "master_seed", int(self.master_seed) & 0xFFFFFFFFFFFFFFFF)
        if not self.p_list:
            raise ValueError("p_list must not be empty")
        if any(p < 2 for p in self.p_list):
            raise ValueError("every p must be at least 2")
        if not self.beta_list:
            raise ValueError("beta_list must not be empty")
        if any(not 0.0 <= b < 1.0 for b in self.beta_list):
            raise ValueError("every beta must lie in [0, 1)")
        if not self.rho_grid:
            raise ValueError("rho_grid must not be empty")
        if any(r <= 0.0 for r in self.rho_grid):
            raise ValueError("rho values must be positive")
        if any(b <= a for a, b in zip(self.rho_grid, self.rho_grid[1:])):
            raise ValueError("rho_grid must be strictly increasing")
        if self.n_runs < 1:
            raise ValueError(f"n_runs must be positive, got {self.n_runs}")
        unknown = set(self.procedures) - set(PROCEDURES)
        if unknown:
            raise ValueError(f"unknown procedure: {sorted(unknown)[0]!r}")
        if not self.procedures:
            raise ValueError("procedures must not be empty")
        for name in ("alpha_prime", "delta_prime"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.sigma0 <= 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")

    def to_json_dict(self):
        out = {name: getattr(self, name) for name in SWEEP_FIELDS}
        for key in ("p_list", "beta_list", "rho_grid", "procedures"):
            out[key] = list(out[key])
        return out

    def derived_cells(self):
        """Per-p derived dimensions (k, s, n) under the protocol conventions."""
        cells = []
        for p in self.p_list:
            k, s, n = experiment_dimensions(p)
            cells.append({"p": p, "k": k, "s": s, "n": n})
        return cells

    @classmethod
    def from_json_dict(cls, data):
        unknown = set(data) - set(SWEEP_FIELDS)
        if unknown:
            raise ValueError(f"unknown config key: {sorted(unknown)[0]!r}")
        for required in ("p_list", "beta_list"):
            if required not in data:
                raise ValueError(f"missing config key: {required!r}")
        return cls(**data)


@dataclass
class SweepCell:
    procedure: str
    p: int
    k: int
    s: int
    n: int
    beta: float
    rho: float
    n_runs: int
    n_success: int
    p_success: float
    ci_low: float
    ci_high: float
    # diagnostics, not part of the CSV schema
    n_fw_false_inclusion: int = 0
    n_false_rows: int = 0


@dataclass
class MuReference:
    value: float
    surrogate: bool = False


@dataclass
class SweepResult:
    config: SweepConfig
    cells: list = field(default_factory=list)
    mu_reference: dict = field(default_factory=dict)    # (procedure, p, beta) -> MuReference
    lower_bound_mu: dict = field(default_factory=dict)  # (p, beta) -> float
    skipped: list = field(default_factory=list)         # (procedure, p, beta, reason)


@dataclass(frozen=True)
class TransitionWindow:
    """The rho interval over which recovery probability crosses 0.05 -> 0.95."""

    rho_low: float
    rho_high: float

    def __post_init__(self):
        if self.rho_low > self.rho_high:
            raise ValueError("rho_low must not exceed rho_high")


_WILSON_Z = special.normal_quantile(0.975)


def wilson_interval(n_success, n_runs, z=_WILSON_Z):
    """Wilson score interval for a binomial proportion."""
    if n_runs < 1:
        raise ValueError("n_runs must be positive")
    phat = n_success / n_runs
    denom = 1.0 + z * z / n_runs
    center = (phat + z * z / (2.0 * n_runs)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n_runs + z * z / (4.0 * n_runs * n_runs)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _activation_floor(config):
    """Exact-binomial replacement for the Chernoff activation lower bound.

    Largest m with P[Bin(k, eps) < m] <= delta'/(2s), floored at one active
    entry.  Matches the role of (1-c) k^(1-beta) when the Chernoff bound is
    informative and stays usable when c >= 1.
    """
    return special.binomial_lower_quantile(
        config.k, config.epsilon, config.delta_prime / (2.0 * config.s))


def _surrogate_mu_group(config):
    sigma = effective_sigma(config)
    m_lo = _activation_floor(config)
    log_term = math.log((2.0 * config.s - config.delta_prime) * (config.p - config.s)
                        / (config.alpha_prime * config.delta_prime))
    return sigma * math.sqrt(2.0 * (math.sqrt(5.0) + 4.0) * math.sqrt(config.k)
                             * log_term / m_lo)


def _surrogate_mu_linf(config):
    lam = calibration.lambda_group_linf(config)
    tau = calibration.linf_tau(config)
    return (1.0 + tau) * lam / _activation_floor(config)


def _mu_reference_for_scale(config, scale):
    """Signal level for one scale family; group scales fall back to the
    exact-binomial surrogate when the theorem constant c >= 1 leaves the
    printed formula undefined."""
    if scale == "lasso":
        return MuReference(calibration.mu_lasso(config))
    if scale == "group":
        try:
            return MuReference(calibration.mu_group(config))
        except calibration.CalibrationInvalid:
            return MuReference(_surrogate_mu_group(config), surrogate=True)
    try:
        return MuReference(calibration.mu_linf(config))
    except calibration.CalibrationInvalid:
        return MuReference(_surrogate_mu_linf(config), surrogate=True)


@dataclass
class _CellPlan:
    procedure: str
    scale: str
    lambdas: dict


def _build_plans(config, procedures):
    """Calibrated thresholds per procedure; invalid ones skipped with reason."""
    plans, skipped = [], []
    for proc in procedures:
        try:
            if proc == "lasso":
                plans.append(_CellPlan("lasso", "lasso",
                                       {"lasso": calibration.lambda_lasso(config)}))
            elif proc == "group_l2":
                plans.append(_CellPlan("group_l2", "group",
                                       {"group_sq": calibration.lambda_group_l2(config)}))
            elif proc == "group_linf":
                plans.append(_CellPlan("group_linf", "linf",
                                       {"linf": calibration.lambda_group_linf(config)}))
            else:
                # each parent runs at alpha'/2 so the union's type-I budget
                # stays within alpha'
                half = replace(config, alpha_prime=config.alpha_prime / 2.0)
                plans.append(_CellPlan("union", "lasso", {
                    "lasso": calibration.lambda_lasso(half),
                    "group_sq": calibration.lambda_group_l2(half),
                }))
        except calibration.CalibrationInvalid as exc:
            skipped.append((proc, str(exc)))
    return plans, skipped


def _decide(plan, maxabs, sumsq, sumabs):
    """Included-row mask for one procedure from the per-row statistics."""
    if plan.procedure == "lasso":
        return maxabs >= plan.lambdas["lasso"]
    if plan.procedure == "group_l2":
        return sumsq >= plan.lambdas["group_sq"]
    if plan.procedure == "group_linf":
        return sumabs > plan.lambdas["linf"]
    return (maxabs >= plan.lambdas["lasso"]) | (sumsq >= plan.lambdas["group_sq"])


def _run_rep(seed, config, mu_val, plans):
    p, k, s = config.p, config.k, config.s
    maxabs = np.empty(p)
    sumsq = np.empty(p)
    sumabs = np.empty(p)
    kernel.row_stats(seed, p, k, s, config.epsilon, effective_sigma(config),
                     mu_val, maxabs, sumsq, sumabs)
    out = []
    for plan in plans:
        included = _decide(plan, maxabs, sumsq, sumabs)
        n_false = int(included[s:].sum())
        success = bool(included[:s].all()) and n_false == 0
        out.append((success, n_false))
    return out


def run_sweep(cfg, threads=1):
    """Execute the sweep; identical cfg gives an identical SweepResult at any
    thread count.  Cells whose calibration is invalid are recorded as skipped
    instead of aborting."""
    result = SweepResult(config=cfg)
    alpha_total = cfg.alpha_prime + cfg.delta_prime
    threads = max(1, int(threads))
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for p_idx, p in enumerate(cfg.p_list):
            for b_idx, beta in enumerate(cfg.beta_list):
                config = config_for_cell(p, beta, cfg.alpha_prime, cfg.delta_prime, cfg.sigma0)
                result.lower_bound_mu[(p, beta)] = theory.mu_lower_bound(config, alpha_total).mu_min
                plans, plan_skips = _build_plans(config, cfg.procedures)
                for proc, reason in plan_skips:
                    result.skipped.append((proc, p, beta, reason))
                refs = {}
                live_plans = []
                for plan in plans:
                    scale = "lasso" if cfg.matched_mu else plan.scale
                    if scale not in refs:
                        try:
                            refs[scale] = _mu_reference_for_scale(config, scale)
                        except calibration.CalibrationInvalid as exc:
                            refs[scale] = str(exc)
                    if isinstance(refs[scale], str):
                        result.skipped.append((plan.procedure, p, beta, refs[scale]))
                    else:
                        live_plans.append((scale, plan))
                        result.mu_reference[(plan.procedure, p, beta)] = refs[scale]
                by_scale = {}
                for scale, plan in live_plans:
                    by_scale.setdefault(scale, []).append(plan)
                cells = {}
                for scale in sorted(by_scale, key=_SCALE_ID.get):
                    scale_plans = by_scale[scale]
                    mu_ref = refs[scale].value
                    for r_idx, rho in enumerate(cfg.rho_grid):
                        mu_val = rho * mu_ref
                        cell_tag = (p_idx << 48) | (b_idx << 32) | (_SCALE_ID[scale] << 16) | r_idx
                        seeds = [derive_seed(cfg.master_seed, cell_tag, rep)
                                 for rep in range(cfg.n_runs)]
                        job = lambda sd: _run_rep(sd, config, mu_val, scale_plans)
                        if pool is not None:
                            rep_outs = list(pool.map(job, seeds))
                        else:
                            rep_outs = [job(sd) for sd in seeds]
                        for i, plan in enumerate(scale_plans):
                            n_succ = sum(1 for rep in rep_outs if rep[i][0])
                            n_false_rows = sum(rep[i][1] for rep in rep_outs)
                            n_fw = sum(1 for rep in rep_outs if rep[i][1] > 0)
                            lo, hi = wilson_interval(n_succ, cfg.n_runs)
                            cells[(plan.procedure, rho)] = SweepCell(
                                procedure=plan.procedure, p=p, k=config.k, s=config.s,
                                n=config.n, beta=beta, rho=rho, n_runs=cfg.n_runs,
                                n_success=n_succ, p_success=n_succ / cfg.n_runs,
                                ci_low=lo, ci_high=hi,
                                n_fw_false_inclusion=n_fw, n_false_rows=n_false_rows)
                # emit in (procedure, rho) order regardless of scale grouping
                for proc in cfg.procedures:
                    for rho in cfg.rho_grid:
                        if (proc, rho) in cells:
                            result.cells.append(cells[(proc, rho)])
    finally:
        if pool is not None:
            pool.shutdown()
    return result


def transition_window(cell_curve):
    """Window [rho_low, rho_high] where success crosses 0.05 and 0.95.

    rho_low is the largest grid rho with p_success <= 0.05 (first grid point
    if none), rho_high the smallest with p_success >= 0.95 (last grid point
    if none).
    """
    curve = list(cell_curve)
    if not curve:
        raise ValueError("empty success curve")
    if any(b[0] <= a[0] for a, b in zip(curve, curve[1:])):
        raise ValueError("curve must be sorted by rho")
    lows = [rho for rho, prob in curve if prob <= 0.05]
    highs = [rho for rho, prob in curve if prob >= 0.95]
    rho_low = lows[-1] if lows else curve[0][0]
    rho_high = highs[0] if highs else curve[-1][0]
    return TransitionWindow(rho_low=rho_low, rho_high=rho_high)


def windows_compatible(w1, w2, tol=0.2):
    """True when the windows overlap as intervals or agree within tol at both
    endpoints."""
    overlap = w1.rho_low <= w2.rho_high and w2.rho_low <= w1.rho_high
    close = abs(w1.rho_low - w2.rho_low) <= tol and abs(w1.rho_high - w2.rho_high) <= tol
    return overlap or close


def curve_for(result, procedure, p, beta):
    """(rho, p_success) curve of one procedure in one panel, sorted by rho."""
    pts = [(c.rho, c.p_success) for c in result.cells
           if c.procedure == procedure and c.p == p and c.beta == beta]
    return sorted(pts)


def isotonic_fit(values):
    """Nondecreasing least-squares fit (pool adjacent violators)."""
    blocks = []  # [level, count]
    for v in values:
        blocks.append([float(v), 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            l1, n1 = blocks.pop()
            l0, n0 = blocks.pop()
            blocks.append([(l0 * n0 + l1 * n1) / (n0 + n1), n0 + n1])
    fit = []
    for level, count in blocks:
        fit.extend([level] * count)
    return fit


@dataclass
class OrderingReport:
    """Per-rho ranking of procedures at matched absolute signal level."""

    p: int
    beta: float
    rows: list                 # (rho, {procedure: p_success})
    mid_rhos: list             # grid points inside the lasso transition
    group_beats_lasso: bool
    lasso_beats_group: bool
    linf_dominated: bool
    missing: list


def compare_procedures(result, p, beta, margin=0.05):
    """Rank procedures per rho; requires a matched-mu sweep result."""
    if not result.config.matched_mu:
        raise ValueError("compare_procedures needs a sweep run with matched_mu=True")
    curves = {}
    missing = []
    for proc in result.config.procedures:
        pts = curve_for(result, proc, p, beta)
        if pts:
            curves[proc] = dict(pts)
        else:
            missing.append(proc)
    if not curves:
        raise ValueError(f"no cells found for p={p}, beta={beta}")
    rhos = sorted(next(iter(curves.values())))
    rows = [(rho, {proc: curves[proc][rho] for proc in curves}) for rho in rhos]

    mid = []
    if "lasso" in curves:
        mid = [rho for rho in rhos if 0.05 < curves["lasso"][rho] < 0.95]
        if not mid:
            mid = [min(rhos, key=lambda r: abs(curves["lasso"][r] - 0.5))]

    def beats(a, b):
        if a not in curves or b not in curves or not mid:
            return False
        return all(curves[a][r] >= curves[b][r] - margin for r in mid)

    linf_dominated = True
    if "group_linf" in curves and len(curves) > 1:
        n = result.config.n_runs
        for rho in rhos:
            linf_lo, _ = wilson_interval(round(curves["group_linf"][rho] * n), n)
            best_other_hi = max(wilson_interval(round(curves[q][rho] * n), n)[1]
                                for q in curves if q != "group_linf")
            if linf_lo > best_other_hi:
                linf_dominated = False
                break
    return OrderingReport(p=p, beta=beta, rows=rows, mid_rhos=mid,
                          group_beats_lasso=beats("group_l2", "lasso"),
                          lasso_beats_group=beats("lasso", "group_l2"),
                          linf_dominated=linf_dominated, missing=missing)


def type_one_experiment(p, beta, n_instances, master_seed, procedures=PROCEDURES,
                        alpha_prime=0.01, delta_prime=0.01, sigma0=1.0, threads=1):
    """Family-wise false-inclusion counts on pure-noise instances (s = 0).

    Thresholds are calibrated for s = 0, every row is a zero row, and an
    instance counts as a family-wise error for a procedure when any row is
    included.  Returns {procedure: n_fw_errors}.
    """
    k, _, n = experiment_dimensions(p)
    config = ProblemConfig(p=p, k=k, s=0, n=n, sigma0=sigma0, beta=beta,
                           alpha_prime=alpha_prime, delta_prime=delta_prime)
    plans, skipped = _build_plans(config, procedures)
    if skipped:
        raise calibration.CalibrationInvalid(
            f"type-I experiment could not calibrate {skipped[0][0]}: {skipped[0][1]}")
    seeds = [derive_seed(master_seed, 0xA0A0, rep) for rep in range(n_instances)]

    def one(seed):
        return _run_rep(seed, config, 0.0, plans)

    threads = max(1, int(threads))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(one, seeds))
    else:
        outs = [one(sd) for sd in seeds]
    counts = {plan.procedure: 0 for plan in plans}
    for rep in outs:
        for plan, (_, n_false) in zip(plans, rep):
            if n_false > 0:
                counts[plan.procedure] += 1
    return counts
