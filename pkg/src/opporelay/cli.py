"""Command-line experiment harness.

Every subcommand writes a CSV whose ``#`` comment header echoes the resolved
configuration, seed and build, so a file can be regenerated from itself.
Parameters come from ``--config`` (flat TOML) and are overridden by flags.

Exit codes: 0 success (including skipped genie rows), 2 configuration or
domain error, 3 search budget exceeded.
"""

from __future__ import annotations

import argparse
import io
import math
import subprocess
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from . import analytics, genie, montecarlo
from .core import NetworkConfig, db_to_linear

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

COMMANDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "analytic", "genie")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3

# per-command defaults layered under the config file and the flags
DEFAULTS = {
    "fig2": dict(n=1200, m_range=(1, 12)),
    "fig3": dict(n=1200, m_range=(1, 12)),
    "fig4": dict(n_grid=(100, 300, 1000, 3000)),
    "fig5": dict(n_grid=(100, 300, 1000, 3000)),
    "fig6": dict(n_grid=(10, 20, 40, 100), m=2, trials=1_000_000),
    "analytic": dict(n=1200, m=6),
    "genie": dict(n_grid=(8, 12, 16), m_range=(2, 4), trials=2000),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    n: int = 1200
    m: int = 6
    m_range: Optional[tuple] = None
    n_grid: Optional[tuple] = None
    rho_db: float = 10.0
    rho_r_db: float = 10.0
    trials: int = montecarlo.DEFAULT_TRIALS
    seed: int = 1
    mode: str = "all_assignments"
    epsilon: float = 0.5
    budget: int = 1_000_000
    bins: int = 40
    x_max: Optional[float] = None
    out: Optional[str] = None

    def validate(self):
        def need(cond, key, msg):
            if not cond:
                raise ConfigError(f"{key}: {msg}")

        need(self.n >= 1, "n", f"must be >= 1, got {self.n}")
        need(self.m >= 1, "m", f"must be >= 1, got {self.m}")
        need(self.trials >= 1, "trials", f"must be >= 1, got {self.trials}")
        need(0 <= self.seed < 2 ** 64, "seed", "must fit in 64 unsigned bits")
        need(self.mode in ("all_assignments", "distinct_only"), "mode",
             f"must be all_assignments or distinct_only, got {self.mode!r}")
        need(0 < self.epsilon < 1, "epsilon", f"must lie in (0, 1), got {self.epsilon}")
        need(self.budget >= 1, "budget", f"must be >= 1, got {self.budget}")
        need(self.bins >= 1, "bins", f"must be >= 1, got {self.bins}")
        for key in ("rho_db", "rho_r_db"):
            need(math.isfinite(getattr(self, key)), key, "must be finite")
        if self.m_range is not None:
            a, b = self.m_range
            need(1 <= a <= b, "m_range", f"needs 1 <= a <= b, got {a}:{b}")
        if self.n_grid is not None:
            g = self.n_grid
            need(len(g) > 0, "n_grid", "is empty")
            need(all(v >= 1 for v in g), "n_grid", "entries must be >= 1")
            need(all(b > a for a, b in zip(g, g[1:])), "n_grid", "must be strictly increasing")
        if self.out is not None:
            parent = Path(self.out).resolve().parent
            need(parent.is_dir(), "out", f"directory {parent} does not exist")
        return self

    @property
    def rho(self) -> float:
        return db_to_linear(self.rho_db)

    @property
    def rho_r(self) -> float:
        return db_to_linear(self.rho_r_db)

    def m_values(self):
        if self.m_range is None:
            return [self.m]
        return list(range(self.m_range[0], self.m_range[1] + 1))

    def n_values(self):
        return list(self.n_grid) if self.n_grid is not None else [self.n]

    def network(self, n=None, m=None) -> NetworkConfig:
        return NetworkConfig(n=n or self.n, m=m or self.m, rho=self.rho, rho_r=self.rho_r, seed=self.seed)

    def echo(self) -> str:
        parts = []
        for f in fields(self):
            if f.name == "out":
                continue
            v = getattr(self, f.name)
            if f.name == "m_range" and v is not None:
                v = f"{v[0]}:{v[1]}"
            elif f.name == "n_grid" and v is not None:
                v = ",".join(str(x) for x in v)
            parts.append(f"{f.name}={v}")
        return " ".join(parts)


def parse_m_range(text) -> tuple:
    text = str(text).strip()
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            return int(a), int(b)
        v = int(text)
        return v, v
    except ValueError:
        raise ConfigError(f"m_range: expected 'a:b', got {text!r}") from None


def parse_n_grid(text) -> tuple:
    if isinstance(text, (list, tuple)):
        items = text
    else:
        items = [t for t in str(text).split(",") if t.strip()]
    try:
        return tuple(int(float(t)) for t in items)
    except ValueError:
        raise ConfigError(f"n_grid: expected comma-separated integers, got {text!r}") from None


_COERCE = {
    "n": int, "m": int, "trials": int, "seed": int, "budget": int, "bins": int,
    "rho_db": float, "rho_r_db": float, "epsilon": float, "x_max": float,
    "mode": str, "out": str, "m_range": parse_m_range, "n_grid": parse_n_grid,
}


def _coerce(key, value, where):
    if key not in _COERCE:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return _COERCE[key](value)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: {key}: cannot interpret {value!r}") from None


def load_config_file(path) -> dict:
    text = Path(path).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    lines = text.splitlines()
    out = {}
    for key, value in data.items():
        line = next((i + 1 for i, ln in enumerate(lines) if ln.strip().startswith(key)), "?")
        where = f"{path}:{line}"
        if isinstance(value, dict):
            raise ConfigError(f"{where}: nested table {key!r} not allowed; the config is flat")
        key = key.replace("-", "_")
        out[key] = _coerce(key, value, where)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opporelay",
        description="Two-hop opportunistic relaying: simulations and closed forms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat TOML file; flags override its keys")
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--m-range", dest="m_range", help="inclusive range a:b")
        p.add_argument("--n-grid", dest="n_grid", help="comma-separated n values")
        p.add_argument("--rho-db", dest="rho_db", type=float)
        p.add_argument("--rho-r-db", dest="rho_r_db", type=float)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--mode", choices=("all_assignments", "distinct_only"))
        p.add_argument("--epsilon", type=float)
        p.add_argument("--budget", type=int, help="max genie candidates per block")
        p.add_argument("--bins", type=int)
        p.add_argument("--x-max", dest="x_max", type=float)
        p.add_argument("--out", help="CSV path (stdout when omitted)")
    return parser


def resolve_config(args) -> ExperimentConfig:
    values = dict(DEFAULTS[args.command])
    given = {}
    if args.config:
        given.update(load_config_file(args.config))
    for key in _COERCE:
        v = getattr(args, key, None)
        if v is not None:
            given[key] = _coerce(key, v, f"--{key.replace('_', '-')}")
    # an explicit scalar n or m replaces the command's default grid
    for scalar, grid in (("n", "n_grid"), ("m", "m_range")):
        if scalar in given and grid not in given:
            values.pop(grid, None)
    values.update(given)
    return ExperimentConfig(**values).validate()


def build_id() -> str:
    try:
        res = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5,
        )
        if res.returncode == 0 and res.stdout.strip():
            return res.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


class CsvWriter:
    def __init__(self, command, cfg):
        self.buf = io.StringIO()
        self.comment(f"opporelay {command}")
        self.comment(f"build: {build_id()}")
        self.comment(f"seed: {cfg.seed}")
        self.comment(f"config: {cfg.echo()}")

    def comment(self, text):
        self.buf.write(f"# {text}\n")

    def row(self, values):
        self.buf.write(",".join(fmt(v) for v in values) + "\n")

    def getvalue(self):
        return self.buf.getvalue()


def cmd_fig2(cfg: ExperimentConfig, w: CsvWriter):
    w.comment("r1_distinct counts blocks with repeated picks as 0 bits; "
              "lb_opt_s searches s over (0, 2 log n]")
    w.row(["m", "r1_all_mean", "r1_all_se", "r1_distinct_mean", "r1_distinct_se",
           "lb_fixed_s", "lb_opt_s", "s_opt"])
    net = cfg.network(m=max(cfg.m_values()))
    s_fixed = analytics.threshold_cap(cfg.n)
    for row in montecarlo.sweep_m(net, cfg.m_values(), cfg.trials):
        lb_fixed = analytics.r1_lower_bound(analytics.Phase1BoundParams(cfg.n, row.m, cfg.rho, s_fixed))
        lb_opt, s_opt = analytics.r1_lower_bound_optimized(cfg.n, row.m, cfg.rho)
        w.row([row.m, row.r1_all.mean, row.r1_all.std_error, row.r1_distinct.mean,
               row.r1_distinct.std_error, lb_fixed, lb_opt, s_opt])


def cmd_fig3(cfg: ExperimentConfig, w: CsvWriter):
    w.row(["m", "R1", "R1_se", "R2", "R2_se", "R", "R_se", "binding", "tie"])
    net = cfg.network(m=max(cfg.m_values()))
    for row in montecarlo.sweep_m(net, cfg.m_values(), cfg.trials, cfg.mode):
        w.row([row.m, row.r1.mean, row.r1.std_error, row.r2.mean, row.r2.std_error,
               row.system.mean, row.system.std_error, row.system.binding, row.system.tie])


def _n_sweep(cfg):
    return montecarlo.sweep_n(cfg.network(n=cfg.n_values()[0]), cfg.n_values(), cfg.trials,
                              optimize_m=True, mode=cfg.mode)


def cmd_fig4(cfg: ExperimentConfig, w: CsvWriter):
    w.row(["n", "m_opt", "system", "system_se", "genie_upper", "lower"])
    for row in _n_sweep(cfg):
        ln = math.log(row.n)
        w.row([row.n, row.m, row.system.mean, row.system.std_error,
               ln / (4.0 * math.log(2.0)) + 1.0, 0.25 * ln])


def cmd_fig5(cfg: ExperimentConfig, w: CsvWriter):
    w.row(["n", "optimal_m", "reference"])
    for row in _n_sweep(cfg):
        w.row([row.n, row.m, math.log(row.n) / (2.0 * math.log(2.0)) + 2.0])


def cmd_fig6(cfg: ExperimentConfig, w: CsvWriter):
    k = cfg.m - 1
    if k < 1:
        raise ConfigError("m: fig6 needs m >= 2 (m - 1 interferers)")
    w.comment("reference: Exp(1)" if k == 1 else f"reference: chi-square with {2 * k} degrees of freedom")
    w.row(["n", "bin_left", "bin_right", "empirical", "reference"])
    for n in cfg.n_values():
        if n <= k:
            raise ConfigError(f"n_grid: n={n} must exceed m={cfg.m}")
        if k == 1:
            rep = montecarlo.validate_interferer_distribution(
                n, cfg.trials, cfg.bins, cfg.x_max if cfg.x_max else 8.0, cfg.seed)
        else:
            rep = montecarlo.validate_chi2_approximation(n, cfg.m, cfg.trials, cfg.bins, cfg.x_max, cfg.seed)
        w.comment(f"panel n={n} samples={rep.samples} ks={rep.ks!r} mass_beyond={rep.mass_beyond!r}")
        for a, b, e, r in zip(rep.edges[:-1], rep.edges[1:], rep.empirical, rep.reference):
            w.row([n, float(a), float(b), float(e), float(r)])


ANALYTIC_COLUMNS = [
    "n", "m", "rho_db", "rho_r_db", "pr_distinct", "s_fixed", "chi2_factor_fixed", "r1_lb_fixed",
    "r1_lb_opt", "s_opt", "sinr_p2_pdf_at_1", "sinr_p2_cdf_at_1", "r2_exact", "m_linear",
    "m_saturated", "genie_upper", "genie_achievable", "mac_bc_upper", "markov_bound",
    "phase1_bits", "phase2_bits_upper", "tw_required", "tw_radio_example", "overhead_negligible",
]


def cmd_analytic(cfg: ExperimentConfig, w: CsvWriter):
    _, _, tw_radio = analytics.coherence_time_bandwidth(1e-6, 900e6, 3.0 / 3.6)
    w.comment(f"radio example: T_d=1us f_c=900MHz v=3km/h -> T_cW_c={tw_radio!r}")
    w.row(ANALYTIC_COLUMNS)
    for n in cfg.n_values():
        for m in cfg.m_values():
            try:
                s_fixed = analytics.threshold_cap(n)
                lb_fixed = analytics.r1_lower_bound(analytics.Phase1BoundParams(n, m, cfg.rho, s_fixed))
                lb_opt, s_opt = analytics.r1_lower_bound_optimized(n, m, cfg.rho)
                up, ach = analytics.genie_m_bounds(n, cfg.epsilon)
                budget = analytics.feedback_overhead(n, m, cfg.rho_r, tw_radio)
                w.row([
                    n, m, cfg.rho_db, cfg.rho_r_db,
                    analytics.distinct_probability(n, m), s_fixed,
                    analytics.chi_square_cdf(s_fixed - 1.0 / cfg.rho, m - 1), lb_fixed, lb_opt, s_opt,
                    analytics.sinr_p2_pdf(1.0, m, cfg.rho_r), analytics.sinr_p2_cdf(1.0, m, cfg.rho_r),
                    analytics.r2_exact(n, m, cfg.rho_r),
                    analytics.phase2_critical_m(n, cfg.rho_r, "linear"),
                    analytics.phase2_critical_m(n, cfg.rho_r, "saturated"),
                    up, ach, analytics.mac_bc_upper(n, m), genie.markov_bound(n, m, cfg.rho),
                    budget.phase1_bits, budget.phase2_bits_expected, budget.tw_required,
                    tw_radio, budget.negligible,
                ])
            except ValueError as exc:
                raise ConfigError(f"n={n}, m={m}: {exc}") from None


def cmd_genie(cfg: ExperimentConfig, w: CsvWriter):
    w.comment("grouped search uses n // m sources per relay; illustrative at these sizes")
    w.row(["n", "m", "prob_full", "prob_full_se", "prob_grouped", "prob_grouped_se",
           "markov_bound", "status"])
    budget = genie.GenieSearchBudget(max_assignments=cfg.budget)
    for n in cfg.n_values():
        for m in cfg.m_values():
            bound = genie.markov_bound(n, m, cfg.rho)
            if m > n:
                w.row([n, m, "", "", "", "", bound, "skipped: m > n"])
                continue
            net = cfg.network(n=n, m=m)
            try:
                full = genie.estimate_existence_prob(net, m, cfg.trials, "full", budget)
                grouped = genie.estimate_existence_prob(net, m, cfg.trials, "grouped", budget)
            except genie.GenieBudgetExceeded as exc:
                w.row([n, m, "", "", "", "", bound, f"skipped: needs {exc.required} > budget {cfg.budget}"])
                continue
            w.row([n, m, full.mean, full.std_error, grouped.mean, grouped.std_error, bound, "ok"])


HANDLERS = {
    "fig2": cmd_fig2, "fig3": cmd_fig3, "fig4": cmd_fig4, "fig5": cmd_fig5,
    "fig6": cmd_fig6, "analytic": cmd_analytic, "genie": cmd_genie,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        writer = CsvWriter(args.command, cfg)
        HANDLERS[args.command](cfg, writer)
    except ConfigError as exc:
        print(f"opporelay {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except genie.GenieBudgetExceeded as exc:
        print(f"opporelay {args.command}: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    text = writer.getvalue()
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
