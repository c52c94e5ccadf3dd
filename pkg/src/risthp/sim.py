"""Monte Carlo harness, scenario configs, CSV emission and CLI.

Every method inside a (sweep point, trial) cell consumes the identical
channel realization so the comparisons are paired.  Per-trial generators are
derived from (seed, sweep index, trial index).
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import alloc, baseline, gram as gram_mod, phase_opt, thp
from .channel import (PATHLOSS_PRESETS, PathlossModel, ScenarioConfig,
                      draw_realization)

METHODS = ("thp", "thp_random", "thp_discrete", "thp_no_ris", "dpc_rate",
           "linear_zf", "linear_zf_random", "linear_zf_discrete")
SWEEP_NAMES = ("asd", "n_ris", "tx_dbm")

CSV_HEADER = "trial,method,sweep_name,sweep_value,n_allocated,sum_se_bits,wall_time_ms"


@dataclass
class RunConfig:
    scenario: ScenarioConfig
    trials: int = 10
    methods: tuple = ("thp", "linear_zf")
    sweep_name: str = "none"
    sweep_values: tuple = ()

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"methods: unknown method {m!r}")
        if self.sweep_name != "none":
            if self.sweep_name not in SWEEP_NAMES:
                raise ValueError(f"sweep: unknown sweep {self.sweep_name!r}")
            if not self.sweep_values:
                raise ValueError("sweep: value list must be nonempty")


@dataclass
class ResultRecord:
    trial: int
    method: str
    sweep_name: str
    sweep_value: float
    n_allocated: int
    sum_se_bits: float
    wall_time_ms: float


class ConfigError(ValueError):
    """Scenario/run config validation failure, with the offending field path."""


def _parse_pathloss(value, path):
    if isinstance(value, str):
        if value not in PATHLOSS_PRESETS:
            raise ConfigError(f"{path}: unknown pathloss preset {value!r}")
        return PATHLOSS_PRESETS[value]
    if isinstance(value, dict):
        allowed = {"alpha_db", "beta_exponent", "label"}
        unknown = set(value) - allowed
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        return PathlossModel(**value)
    raise ConfigError(f"{path}: expected preset name or mapping")


def parse_scenario(data: dict, path: str = "scenario") -> ScenarioConfig:
    allowed = {f.name for f in fields(ScenarioConfig)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = dict(data)
    for key in ("pathloss_direct", "pathloss_ris_user", "pathloss_bs_ris"):
        if key in kwargs:
            kwargs[key] = _parse_pathloss(kwargs[key], f"{path}.{key}")
    for key in ("bs_pos", "ris_pos", "user_circle_center"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        return ScenarioConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_run_config(data: dict) -> RunConfig:
    allowed = {"scenario", "trials", "methods", "sweep"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"config: unknown keys {sorted(unknown)}")
    if "scenario" not in data:
        raise ConfigError("config.scenario: required")
    scenario = parse_scenario(data["scenario"])
    sweep_name, sweep_values = "none", ()
    sweep = data.get("sweep", "none")
    if sweep != "none" and sweep is not None:
        if not isinstance(sweep, dict) or len(sweep) != 1:
            raise ConfigError("config.sweep: expected 'none' or a single-key mapping")
        sweep_name, values = next(iter(sweep.items()))
        if sweep_name not in SWEEP_NAMES:
            raise ConfigError(f"config.sweep: unknown sweep {sweep_name!r}")
        sweep_values = tuple(values)
    try:
        return RunConfig(scenario=scenario, trials=data.get("trials", 10),
                         methods=tuple(data.get("methods", ("thp", "linear_zf"))),
                         sweep_name=sweep_name, sweep_values=sweep_values)
    except ValueError as exc:
        raise ConfigError(f"config: {exc}") from exc


def load_run_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_run_config(json.load(fh))


def _scenario_at(scenario: ScenarioConfig, sweep_name: str, value) -> ScenarioConfig:
    cfg = copy.deepcopy(scenario)
    if sweep_name == "asd":
        cfg.asd = float(value)
    elif sweep_name == "n_ris":
        cfg.n_ris = int(value)
    elif sweep_name == "tx_dbm":
        cfg.tx_dbm = float(value)
    return cfg


def _no_ris_copy(real):
    clone = copy.copy(real)
    clone.h_cascaded = np.zeros_like(real.h_cascaded)
    return clone


def run_method(method: str, real, p_bar: float, rng: np.random.Generator):
    """Run one method on one realization; returns (n_allocated, sum_se_bits)."""
    if method in ("thp", "thp_random", "thp_discrete", "thp_no_ris"):
        mode = {"thp": "continuous", "thp_random": "random",
                "thp_discrete": "binary", "thp_no_ris": "random"}[method]
        target = _no_ris_copy(real) if method == "thp_no_ris" else real
        allocation = alloc.greedy_allocate(target, p_bar, mode, rng)
        return len(allocation.users), max(0.0, allocation.se_exact)
    if method == "dpc_rate":
        users = list(range(real.n_users))
        theta = alloc.optimize_phases(real, users, p_bar, "continuous")
        dec = gram_mod.decompose(real, users)
        se = gram_mod.dpc_sum_se(dec, gram_mod.extend_theta(theta.theta), p_bar)
        return len(users), se
    if method in ("linear_zf", "linear_zf_random", "linear_zf_discrete"):
        mode = {"linear_zf": "continuous", "linear_zf_random": "random",
                "linear_zf_discrete": "binary"}[method]
        sol = baseline.greedy_allocate_linear(real, p_bar, mode, rng)
        return len(sol.users), sol.sum_se
    raise ValueError(f"unknown method {method!r}")


def run(config: RunConfig) -> list:
    """Execute the Monte Carlo grid; records sorted by (sweep, trial, method)."""
    records = []
    sweep_points = (list(config.sweep_values)
                    if config.sweep_name != "none" else [0.0])
    for sweep_idx, sweep_value in enumerate(sweep_points):
        scenario = _scenario_at(config.scenario, config.sweep_name, sweep_value)
        p_bar = scenario.tx_power / scenario.n_users
        for trial in range(config.trials):
            ss = np.random.SeedSequence(
                entropy=scenario.seed, spawn_key=(sweep_idx, trial))
            rng = np.random.default_rng(ss)
            real = draw_realization(scenario, rng)
            for method in sorted(config.methods):
                method_rng = np.random.default_rng(np.random.SeedSequence(
                    entropy=scenario.seed,
                    spawn_key=(sweep_idx, trial, METHODS.index(method))))
                start = time.perf_counter()
                n_alloc, sum_se = run_method(method, real, p_bar, method_rng)
                elapsed_ms = (time.perf_counter() - start) * 1e3
                records.append(ResultRecord(
                    trial=trial, method=method, sweep_name=config.sweep_name,
                    sweep_value=float(sweep_value), n_allocated=n_alloc,
                    sum_se_bits=sum_se, wall_time_ms=elapsed_ms))
    records.sort(key=lambda r: (r.sweep_value, r.trial, r.method))
    return records


def uniformity_test(samples, alpha: float):
    """One-sample KS test against the uniform distribution on [-0.5, 0.5).

    Returns (statistic, passed) using the asymptotic critical value
    sqrt(-ln(alpha/2)/2)/sqrt(n).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size < 1000:
        raise ValueError("need at least 1000 samples")
    if np.any(samples < -0.5) or np.any(samples >= 0.5):
        raise ValueError("samples must lie in [-0.5, 0.5)")
    sorted_s = np.sort(samples) + 0.5  # uniform CDF on [0, 1)
    n = sorted_s.size
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    stat = float(max(np.max(ecdf_hi - sorted_s), np.max(sorted_s - ecdf_lo)))
    critical = math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)
    return stat, stat < critical


def format_record(rec: ResultRecord) -> str:
    return ",".join([
        str(rec.trial), rec.method, rec.sweep_name,
        format(rec.sweep_value, ".12g"), str(rec.n_allocated),
        format(rec.sum_se_bits, ".12g"), format(rec.wall_time_ms, ".12g"),
    ])


def emit_csv(records, path) -> None:
    """Write records as UTF-8 CSV with LF line endings, 12 significant digits."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for rec in records:
                fh.write(format_record(rec) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def parse_csv(path) -> list:
    """Inverse of emit_csv (used for round-trip checks)."""
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}")
        for line in fh:
            t, method, name, value, n_alloc, se, wall = line.rstrip("\n").split(",")
            records.append(ResultRecord(
                trial=int(t), method=method, sweep_name=name,
                sweep_value=float(value), n_allocated=int(n_alloc),
                sum_se_bits=float(se), wall_time_ms=float(wall)))
    return records


# ---------------------------------------------------------------------------
# built-in validation checks (CLI `validate`)

def _validate_checks():
    rng = np.random.default_rng(1234)
    checks = []

    # Gram identity on random instances
    from .channel import ChannelRealization
    worst = 0.0
    for _ in range(50):
        k, n_bs, n_ris = 3, 4, 8
        h_d = (rng.standard_normal((k, n_bs)) + 1j * rng.standard_normal((k, n_bs)))
        h_c = (rng.standard_normal((k, n_ris)) + 1j * rng.standard_normal((k, n_ris)))
        b = rng.standard_normal(n_bs) + 1j * rng.standard_normal(n_bs)
        b /= np.linalg.norm(b)
        real = ChannelRealization(h_direct=h_d, h_cascaded=h_c, b_vec=b,
                                  a_vec=np.ones(n_ris, dtype=complex))
        dec = gram_mod.decompose(real, range(k))
        theta = np.exp(2j * np.pi * rng.uniform(size=n_ris))
        tb = gram_mod.extend_theta(theta)
        lhs = dec.c_mat + np.outer(dec.d_mat @ tb, (dec.d_mat @ tb).conj())
        h = gram_mod.effective_channel(real, range(k), theta)
        worst = max(worst, float(np.max(np.abs(lhs - h @ h.conj().T))))
    checks.append(("gram identity (max abs err < 1e-10)", worst < 1e-10))

    # modulo properties
    z = rng.standard_normal(1000) * 3.0
    m = thp.modulo(z)
    checks.append(("modulo range and idempotence",
                   bool(np.all((m >= -0.5) & (m < 0.5))
                        and np.allclose(thp.modulo(m), m))))

    # THP loop uniformity
    h = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    filters = thp.build_filters(h, thp.order_users(h), tx_power=4.0)
    syms = thp.simulate_transmission(filters, h, 20000, rng)
    stat, passed = uniformity_test(syms.v.real.ravel(), alpha=0.01)
    checks.append((f"THP v-symbol KS uniformity (stat={stat:.4f})", passed))

    # unit-modulus phase invariants
    real = ChannelRealization(
        h_direct=rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)),
        h_cascaded=rng.standard_normal((4, 8)) + 1j * rng.standard_normal((4, 8)),
        b_vec=(lambda v: v / np.linalg.norm(v))(
            rng.standard_normal(4) + 1j * rng.standard_normal(4)),
        a_vec=np.ones(8, dtype=complex))
    theta = alloc.optimize_phases(real, range(4), 10.0, "continuous")
    checks.append(("continuous phases unit modulus",
                   bool(np.max(np.abs(np.abs(theta.theta) - 1.0)) < 1e-12)))
    return checks


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="risthp",
        description="RIS-aided MIMO broadcast channel precoding simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a Monte Carlo experiment")
    p_run.add_argument("config", help="path to the JSON run config")
    p_run.add_argument("--out", default="results.csv", help="output CSV path")
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)

    sub.add_parser("validate", help="run the built-in invariant checks")

    p_sweep = sub.add_parser("sweep", help="run with a sweep override")
    p_sweep.add_argument("config", help="path to the JSON run config")
    p_sweep.add_argument("--out", default="results.csv")
    p_sweep.add_argument("--trials", type=int, default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    group = p_sweep.add_mutually_exclusive_group(required=True)
    group.add_argument("--sweep-asd", help="comma-separated ASD values (degrees)")
    group.add_argument("--sweep-nr", help="comma-separated RIS element counts")
    group.add_argument("--sweep-tx", help="comma-separated transmit powers (dBm)")

    args = parser.parse_args(argv)

    if args.command == "validate":
        checks = _validate_checks()
        failed = 0
        for name, ok in checks:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}")
            failed += not ok
        return 1 if failed else 0

    try:
        config = load_run_config(args.config)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.trials is not None:
        config.trials = args.trials
    if args.seed is not None:
        config.scenario.seed = args.seed

    if args.command == "sweep":
        if args.sweep_asd:
            config.sweep_name = "asd"
            config.sweep_values = tuple(
                math.radians(float(v)) for v in args.sweep_asd.split(","))
        elif args.sweep_nr:
            config.sweep_name = "n_ris"
            config.sweep_values = tuple(int(v) for v in args.sweep_nr.split(","))
        elif args.sweep_tx:
            config.sweep_name = "tx_dbm"
            config.sweep_values = tuple(float(v) for v in args.sweep_tx.split(","))

    records = run(config)
    emit_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
