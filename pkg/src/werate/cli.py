"""Command-line front end: config ingestion, experiment dispatch, seeded
reproducible runs, CSV/JSON emission, and run manifests.

Every subcommand reads one flat JSON config (schemas documented in the
README), writes a ``<command>_report.json`` (and CSV series where the
command produces them) plus a ``manifest.json`` into the output
directory.  Numeric output uses shortest round-trip float formatting, so
re-running with an identical resolved config and seed reproduces the
numeric artifacts byte for byte (the manifest carries timestamps and is
exempt).

Exit codes: 0 success, 2 config/schema violation, 3 numeric failure,
4 enumeration size-guard violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    DiscreteModel,
    JointWF,
    iid_joint_pmf,
    joint_weighted_entropy_enumerated,
)
from .errors import (
    ConvergenceError,
    DoeblinError,
    EnumerationLimitError,
    InfiniteInformationError,
    ModelValidationError,
    WerateError,
)
from .gaussian import (
    GaussianModel,
    MCOracleConfig,
    additive_quadratic_moments,
    ar1_model,
    gaussian_entropy,
    mc_weighted_entropy,
    we_additive_gaussian,
    we_constant_wf,
    we_exp_quadratic,
    we_quadratic_wf,
    wf_additive_quadratic,
    wf_constant,
    wf_exp_quadratic,
    wf_quadratic,
)
from .iid import iid_additive_rates, iid_multiplicative_rates
from .markov import (
    FiniteMarkovModel,
    doeblin_report,
    entropy_rate,
    exact_joint_we_additive,
    exact_joint_we_additive_profile,
    primary_rate_additive,
    secondary_rate_additive,
)
from .pressure import (
    kl_twisted_vs_tilted,
    partition_function_log,
    random_twist_audits,
    twist,
    variational_audit,
)
from .spectral import (
    build_weighted_kernel,
    check_doeblin,
    hilbert_schmidt_check,
    kernel_from_spec,
    krein_rutman,
    phi_from_spec,
)
from .trajectories import (
    Ar1Process,
    empirical_smb,
    empirical_wi_additive,
    empirical_wi_multiplicative,
    simulate,
)

LN2 = math.log(2.0)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3
EXIT_SIZE_GUARD = 4


class ConfigError(ModelValidationError):
    """Config did not validate against the documented schema."""


# ---------------------------------------------------------------------------
# config access helpers
# ---------------------------------------------------------------------------

def _require(cfg: dict, key: str, types, what: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{what}: missing required key {key!r}")
    value = cfg[key]
    if not isinstance(value, types):
        raise ConfigError(f"{what}: key {key!r} has wrong type {type(value).__name__}")
    return value


def _optional(cfg: dict, key: str, types, default=None, what: str = "config"):
    if key not in cfg or cfg[key] is None:
        return default
    return _require(cfg, key, types, what)


def _check_keys(cfg: dict, allowed, what: str = "config"):
    extra = set(cfg) - set(allowed)
    if extra:
        raise ConfigError(f"{what}: unknown keys {sorted(extra)}")


def _matrix(value, what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise ConfigError(f"{what} must be a matrix")
    return arr


def _vector(value, what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1:
        raise ConfigError(f"{what} must be a flat list of numbers")
    return arr


# ---------------------------------------------------------------------------
# unit conversion (output side only)
# ---------------------------------------------------------------------------

def _convert_units(obj, nat_keys: set, to_bits: bool):
    """Walk a report and divide designated nat-valued fields by ln 2."""
    if not to_bits:
        return obj
    if isinstance(obj, dict):
        out = {}
        for key, value in obj.items():
            if key in nat_keys and isinstance(value, (int, float)) and value is not None:
                out[key] = value / LN2
            elif key in nat_keys and isinstance(value, list):
                out[key] = [v / LN2 for v in value]
            else:
                out[key] = _convert_units(value, nat_keys, to_bits)
        return out
    if isinstance(obj, list):
        return [_convert_units(v, nat_keys, to_bits) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_iid(cfg: dict, args) -> tuple[dict, list]:
    _check_keys(cfg, {"pmf", "phi", "wf", "n", "check_oracle_n"}, "iid config")
    pmf = _vector(_require(cfg, "pmf", list, "iid config"), "pmf")
    phi = _vector(_require(cfg, "phi", list, "iid config"), "phi")
    wf = _require(cfg, "wf", str, "iid config")
    if wf not in ("additive", "multiplicative"):
        raise ConfigError("iid config: wf must be 'additive' or 'multiplicative'")
    n = _optional(cfg, "n", int, what="iid config")
    oracle_n = _optional(cfg, "check_oracle_n", int, what="iid config")
    model = DiscreteModel(pmf=pmf, phi=phi)
    report: dict = {"wf": wf}
    if wf == "additive":
        rates = iid_additive_rates(model)
        report.update(a0=rates.a0, a1=rates.a1)
        if n is not None:
            report["we_n"] = {"n": n, "value": rates.we(n)}
        joint = JointWF.additive(model)
        closed = rates.we
    else:
        rates = iid_multiplicative_rates(model)
        report.update(
            b0=rates.b0, b0_log=rates.b0_log, b1=rates.b1, degenerate=rates.degenerate
        )
        if n is not None:
            report["we_n"] = {"n": n, "value": rates.we(n)}
        joint = JointWF.multiplicative(model)
        closed = rates.we
    if oracle_n is not None:
        oracle = joint_weighted_entropy_enumerated(
            iid_joint_pmf(model, oracle_n), joint, oracle_n
        )
        report["oracle_check"] = {
            "n": oracle_n,
            "enumerated": oracle,
            "closed_form": closed(oracle_n),
            "abs_diff": abs(oracle - closed(oracle_n)),
        }
    return report, []


IID_NAT_KEYS = {"a0", "a1", "b0_log", "b1", "value", "enumerated", "closed_form", "abs_diff"}


def _cmd_markov(cfg: dict, args) -> tuple[dict, list]:
    _check_keys(
        cfg,
        {"P", "phi", "lambda", "initial", "n", "series_lengths", "secondary"},
        "markov config",
    )
    P = _matrix(_require(cfg, "P", list, "markov config"), "P")
    phi = _vector(_require(cfg, "phi", list, "markov config"), "phi")
    lam = _optional(cfg, "lambda", list, what="markov config")
    initial = _optional(cfg, "initial", str, default="pi", what="markov config")
    if initial not in ("pi", "lambda"):
        raise ConfigError("markov config: initial must be 'pi' or 'lambda'")
    model = FiniteMarkovModel(P=P, lam=None if lam is None else _vector(lam, "lambda"))
    dreport = None
    try:
        dreport = doeblin_report(model)
    except DoeblinError:
        pass
    report = {
        "pi": list(model.pi),
        "h": entropy_rate(model),
        "a0": primary_rate_additive(model, phi),
        "doeblin": None
        if dreport is None
        else {"rho": dreport.rho, "k": dreport.k},
    }
    n = _optional(cfg, "n", int, what="markov config")
    if n is not None:
        report["we_n"] = {
            "n": n,
            "value": exact_joint_we_additive(model, phi, n, initial=initial),
        }
    if _optional(cfg, "secondary", bool, default=False, what="markov config"):
        sec = secondary_rate_additive(model, phi)
        report["a1"] = sec.a1
        report["a1_truncation_depth"] = sec.truncation_depth
    csv_files = []
    lengths = _optional(cfg, "series_lengths", list, what="markov config")
    if lengths:
        lengths = sorted({int(x) for x in lengths})
        values = exact_joint_we_additive_profile(model, phi, lengths, initial=initial)
        rows = [(n_, v) for n_, v in zip(lengths, values)]
        csv_files.append(("markov_we_series.csv", ["n", "we"], rows))
    return report, csv_files


MARKOV_NAT_KEYS = {"h", "a0", "a1", "value", "we"}


def _gaussian_model_from_cfg(cfg: dict) -> GaussianModel:
    cov = _require(cfg, "cov", dict, "gaussian config")
    kind = _require(cov, "kind", str, "gaussian config cov")
    n = _require(cfg, "n", int, "gaussian config")
    if kind == "explicit":
        C = _matrix(_require(cov, "matrix", list, "gaussian config cov"), "cov.matrix")
        if C.shape != (n, n):
            raise ConfigError("gaussian config: cov.matrix shape must match n")
        return GaussianModel.from_cov(C)
    if kind == "ar1":
        alpha = float(_require(cov, "alpha", (int, float), "gaussian config cov"))
        return ar1_model(alpha, n)
    raise ConfigError("gaussian config: cov.kind must be 'explicit' or 'ar1'")


def _cmd_gaussian(cfg: dict, args) -> tuple[dict, list]:
    _check_keys(cfg, {"n", "cov", "wf", "mc"}, "gaussian config")
    model = _gaussian_model_from_cfg(cfg)
    n = model.n
    wf_cfg = _require(cfg, "wf", dict, "gaussian config")
    kind = _require(wf_cfg, "kind", str, "gaussian config wf")
    if kind == "constant_times_n":
        alpha = float(_require(wf_cfg, "alpha", (int, float), "wf"))
        value = we_constant_wf(model, alpha)
        evaluator = wf_constant(alpha, n)
    elif kind == "additive_quadratic":
        a = float(_optional(wf_cfg, "a", (int, float), 0.0, "wf"))
        b = float(_optional(wf_cfg, "b", (int, float), 0.0, "wf"))
        c = float(_optional(wf_cfg, "c", (int, float), 0.0, "wf"))
        value = we_additive_gaussian(model, *additive_quadratic_moments(model, a, b, c))
        evaluator = wf_additive_quadratic(a, b, c)
    elif kind == "quadratic":
        A = _matrix(_require(wf_cfg, "A", list, "wf"), "wf.A")
        value = we_quadratic_wf(model, A).we
        evaluator = wf_quadratic(A)
    elif kind == "exp_quadratic":
        A = _matrix(_require(wf_cfg, "A", list, "wf"), "wf.A")
        t = _vector(_require(wf_cfg, "t", list, "wf"), "wf.t")
        value = we_exp_quadratic(model, A, t)
        evaluator = wf_exp_quadratic(model, A, t)
    elif kind == "exp_linear":
        t = _vector(_require(wf_cfg, "t", list, "wf"), "wf.t")
        A = np.zeros((n, n))
        value = we_exp_quadratic(model, A, t)
        evaluator = wf_exp_quadratic(model, A, t)
    else:
        raise ConfigError(f"gaussian config: unknown wf.kind {kind!r}")
    report = {
        "value": value,
        "entropy": gaussian_entropy(model),
        "mc_estimate": None,
        "mc_se": None,
    }
    mc_cfg = _optional(cfg, "mc", dict, what="gaussian config")
    if mc_cfg is not None:
        config = MCOracleConfig(
            samples=int(_optional(mc_cfg, "samples", int, 10**6, "mc")),
            seed=int(_optional(mc_cfg, "seed", int, args.seed or 0, "mc")),
            batches=int(_optional(mc_cfg, "batches", int, 20, "mc")),
        )
        est = mc_weighted_entropy(model, evaluator, config)
        report["mc_estimate"] = est.value
        report["mc_se"] = est.se
    return report, []


GAUSSIAN_NAT_KEYS = {"value", "entropy", "mc_estimate", "mc_se"}


def _cmd_pressure(cfg: dict, args) -> tuple[dict, list]:
    _check_keys(
        cfg,
        {"P", "phi", "kernel", "audits", "seed", "concentration", "kl_n", "partition_n"},
        "pressure config",
    )
    if "kernel" in cfg:
        # spectral-only route: an explicit matrix or a named kernel family
        if "P" in cfg or "phi" in cfg:
            raise ConfigError("pressure config: give either a kernel spec or P/phi, not both")
        op = kernel_from_spec(_require(cfg, "kernel", dict, "pressure config"))
        doeblin_k = check_doeblin(op)
        kr = krein_rutman(op, check_positivity=False)
        return {
            "mu": kr.mu,
            "B0": math.log(kr.mu),
            "doeblin_k": doeblin_k,
            "hilbert_schmidt": hilbert_schmidt_check(op).hs_value,
            "gap_estimate": kr.gap_estimate,
            "candidates": [],
            "min_slack": None,
            "equality_witness_residual": None,
        }, []
    P = _matrix(_require(cfg, "P", list, "pressure config"), "P")
    phi = _vector(_require(cfg, "phi", list, "pressure config"), "phi")
    model = FiniteMarkovModel(P=P)
    kr = krein_rutman(build_weighted_kernel(model, phi))
    tw = twist(model, phi, kr)
    witness = variational_audit(tw.chain, model, phi, kr)
    audits_n = _optional(cfg, "audits", int, default=0, what="pressure config")
    seed = _optional(cfg, "seed", int, default=args.seed or 0, what="pressure config")
    conc = float(
        _optional(cfg, "concentration", (int, float), default=50.0, what="pressure config")
    )
    candidates = []
    if audits_n:
        for audit in random_twist_audits(model, phi, audits_n, seed, concentration=conc, kr=kr):
            candidates.append({"h_Q": audit.h_q, "L_Q": audit.l_q, "slack": audit.slack})
    report = {
        "mu": kr.mu,
        "B0": math.log(kr.mu),
        "candidates": candidates,
        "min_slack": min((c["slack"] for c in candidates), default=witness.slack),
        "equality_witness_residual": abs(witness.slack),
    }
    kl_n = _optional(cfg, "kl_n", int, what="pressure config")
    if kl_n is not None:
        report["kl_rate"] = kl_twisted_vs_tilted(model, phi, kl_n, kr) / kl_n
    part_n = _optional(cfg, "partition_n", int, what="pressure config")
    if part_n is not None:
        ln_xi = partition_function_log(model, phi, part_n)
        ln_xi_prev = partition_function_log(model, phi, part_n - 1)
        report["pressure_estimate"] = ln_xi / part_n
        report["pressure_slope"] = ln_xi - ln_xi_prev
    return report, []


PRESSURE_NAT_KEYS = {
    "B0", "h_Q", "L_Q", "slack", "min_slack", "equality_witness_residual",
    "kl_rate", "pressure_estimate", "pressure_slope",
}


def _phi_spec_to_callable(spec):
    if not isinstance(spec, dict):
        raise ConfigError("phi spec for continuous models must be an object")
    return phi_from_spec(spec)


def _cmd_simulate(cfg: dict, args) -> tuple[dict, list]:
    _check_keys(cfg, {"model", "phi", "statistics", "n", "seeds"}, "simulate config")
    mcfg = _require(cfg, "model", dict, "simulate config")
    mkind = _require(mcfg, "kind", str, "simulate config model")
    if mkind == "markov":
        model = FiniteMarkovModel(
            P=_matrix(_require(mcfg, "P", list, "model"), "model.P"),
            lam=None
            if mcfg.get("lambda") is None
            else _vector(mcfg["lambda"], "model.lambda"),
        )
        phi = None if cfg.get("phi") is None else _vector(cfg["phi"], "phi")
    elif mkind == "ar1":
        model = Ar1Process(alpha=float(_require(mcfg, "alpha", (int, float), "model")))
        phi = None if cfg.get("phi") is None else _phi_spec_to_callable(cfg["phi"])
    else:
        raise ConfigError("simulate config: model.kind must be 'markov' or 'ar1'")
    stats = _require(cfg, "statistics", list, "simulate config")
    known = {"smb", "wi_additive", "wi_multiplicative"}
    if not stats or not set(stats) <= known:
        raise ConfigError(f"simulate config: statistics must be a subset of {sorted(known)}")
    if phi is None and set(stats) & {"wi_additive", "wi_multiplicative"}:
        raise ConfigError("simulate config: weighted statistics need a phi")
    n = _require(cfg, "n", int, "simulate config")
    seeds = _optional(cfg, "seeds", (list, int), what="simulate config")
    if seeds is None:
        seeds = [args.seed or 0]
    elif isinstance(seeds, int):
        base = args.seed or 0
        seeds = [base + i for i in range(seeds)]
    seeds = sorted(int(s) for s in seeds)

    runners = {
        "smb": lambda tr: empirical_smb(tr, model),
        "wi_additive": lambda tr: empirical_wi_additive(tr, model, phi),
        "wi_multiplicative": lambda tr: empirical_wi_multiplicative(tr, model, phi),
    }
    csv_files = []
    summary: dict = {"n": n, "seeds": seeds, "statistics": {}}
    trajs = {seed: simulate(model, n, seed) for seed in seeds}
    for stat in stats:
        rows = []
        finals = []
        for seed in seeds:
            rep = runners[stat](trajs[seed])
            for cp, est in zip(rep.checkpoints, rep.estimates):
                rows.append(
                    (seed, int(cp), stat, float(est), rep.target, abs(float(est) - rep.target))
                )
            finals.append(float(rep.estimates[-1]))
        target = rows[-1][4]
        mean_final = float(np.mean(finals))
        entry = {
            "target": target,
            "mean_final": mean_final,
            "seed_se": float(np.std(finals, ddof=1) / math.sqrt(len(finals)))
            if len(finals) > 1
            else 0.0,
            "mean_abs_error": float(np.mean([abs(f - target) for f in finals])),
        }
        if stat == "wi_multiplicative" and isinstance(model, FiniteMarkovModel):
            # the WI rate (target = E_pi ln phi) generally differs from the
            # WE rate B0 = ln mu; print both so the divergence is visible
            kr = krein_rutman(build_weighted_kernel(model, phi))
            entry["we_rate_b0"] = math.log(kr.mu)
        summary["statistics"][stat] = entry
        csv_files.append(
            (
                f"simulate_{stat}.csv",
                ["seed", "n_checkpoint", "statistic", "value", "target", "abs_error"],
                rows,
            )
        )
    return summary, csv_files


SIMULATE_NAT_KEYS = {"target", "mean_final", "seed_se", "mean_abs_error", "we_rate_b0"}

_COMMANDS = {
    "iid": (_cmd_iid, IID_NAT_KEYS),
    "markov": (_cmd_markov, MARKOV_NAT_KEYS),
    "gaussian": (_cmd_gaussian, GAUSSIAN_NAT_KEYS),
    "pressure": (_cmd_pressure, PRESSURE_NAT_KEYS),
    "simulate": (_cmd_simulate, SIMULATE_NAT_KEYS),
}

# CSV value columns converted when --log-base bits (all statistics here
# are log-scaled quantities in nats)
_CSV_NAT_COLUMNS = {"value", "target", "abs_error", "we"}


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _format_number(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _write_csv(path: Path, header: list, rows: list, to_bits: bool) -> None:
    nat_cols = [i for i, name in enumerate(header) if name in _CSV_NAT_COLUMNS]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            row = list(row)
            if to_bits:
                for i in nat_cols:
                    row[i] = row[i] / LN2
            writer.writerow([_format_number(v) for v in row])


def _config_digest(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="werate",
        description="Weighted information / weighted entropy rate computations",
    )
    parser.add_argument("--version", action="version", version=f"werate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("iid", "closed-form IID rates and oracle checks"),
        ("markov", "finite-chain entropy rate, exact additive WE, A0/A1"),
        ("gaussian", "Gaussian closed forms with optional MC verification"),
        ("pressure", "metric pressure, twisted chain and variational audits"),
        ("simulate", "trajectory simulation and empirical limit checks"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=".", help="output directory (WERATE_OUT overrides)")
        p.add_argument("--format", choices=["json", "csv", "both"], default="both")
        p.add_argument("--log-base", choices=["nat", "bits"], default="nat")
        p.add_argument("--seed", type=int, default=None, help="default seed where the config omits one")
        p.add_argument("--threads", type=int, default=1, help="worker cap (1 = bit-reproducible)")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = datetime.now(timezone.utc).isoformat()
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if not isinstance(cfg, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return EXIT_SCHEMA

    out_dir = Path(os.environ.get("WERATE_OUT") or args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    to_bits = args.log_base == "bits"
    command, (runner, nat_keys) = args.command, _COMMANDS[args.command]

    try:
        report, csv_files = runner(cfg, args)
    except EnumerationLimitError as exc:
        print(f"error: size guard: {exc}", file=sys.stderr)
        return EXIT_SIZE_GUARD
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ModelValidationError as exc:
        print(f"error: invalid model: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (InfiniteInformationError, ConvergenceError, DoeblinError, FloatingPointError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    report = _convert_units(report, nat_keys, to_bits)
    report["log_base"] = args.log_base
    outputs = []
    if args.format in ("json", "both"):
        json_path = out_dir / f"{command}_report.json"
        _write_json(json_path, report)
        outputs.append(json_path)
    if args.format in ("csv", "both"):
        for name, header, rows in csv_files:
            csv_path = out_dir / name
            _write_csv(csv_path, header, rows, to_bits)
            outputs.append(csv_path)

    resolved = {
        "command": command,
        "config": cfg,
        "seed": args.seed,
        "log_base": args.log_base,
        "format": args.format,
        "threads": args.threads,
    }
    manifest = {
        "config_digest": _config_digest(resolved),
        "seed": args.seed,
        "tool_version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": [
            {"name": p.name, "sha256": _sha256_file(p)} for p in outputs
        ],
    }
    _write_json(out_dir / "manifest.json", manifest)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
