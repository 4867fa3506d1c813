"""Command-line front end.

Subcommands::

    mdiqkd model      expected gains/error-gains per source pair
    mdiqkd simulate   counts file from the Monte Carlo (or expected counts)
    mdiqkd analyze    key-rate report from a counts file
    mdiqkd optimize   best protocol parameters for a distance and run size
    mdiqkd sweep      rate-vs-distance CSV with the BB84 baselines
    mdiqkd surface    finite/asymptotic rate over a (mu_z, p_z) grid

Configuration is YAML (or JSON) with sections ``system``, ``protocol``,
``policies`` and ``run``; the path comes from ``--config`` or the
``MDIQKD_CONFIG`` environment variable, and flags override it.  Exit codes:
0 success, 2 configuration error, 3 data error, 4 infeasible analysis.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import yaml

from . import baseline
from .decoy import (AnalysisPolicy, FluctuationPolicy, InconsistentDataError,
                    UnresolvableYieldError, asymptotic_from_stats, asymptotic_rate,
                    expected_finite_key, finite_key)
from .model import (ALL_LABELS, LABELS, FIELD_SETTINGS, ULTRALOW_LOSS_DB_PER_KM, STANDARD_FIBER_DB_PER_KM,
                    ChannelSpec, DetectorSpec, ProtocolParams, SystemSpec, expected_observables)
from .optimize import optimize, rate_surface
from .simkit import SourcePairStats, expected_stats, simulate

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INFEASIBLE = 0, 2, 3, 4
ENV_CONFIG = "MDIQKD_CONFIG"


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


SYSTEM_DEFAULTS = {
    "distance_km": 102.0,           # total Alice-Bob fibre length
    "fiber": None,                  # "standard" | "ultralow"; None follows the protocol table
    "attenuation_db_per_km": None,  # overrides the fibre type when set
    "arm_split_fraction": 0.5,      # Alice's share of the length
    "extra_loss_alice_db": 0.0,
    "extra_loss_bob_db": 0.0,
    "efficiency_d1": 0.66,
    "efficiency_d2": 0.64,
    "dark_prob": 7.2e-8,            # per detector per time bin
    "window_efficiency": 0.85,
    "misalignment_x": 0.015,
    "misalignment_z": 0.005,
    "clock_rate_hz": 7.5e7,
}
POLICY_DEFAULTS = {
    "epsilon": 1e-10,
    "method": "chernoff",
    "pooling": "symmetric",
    "ec_efficiency": 1.16,
    "n_cut": 10,
    "lp_tolerance": 1e-12,
    "vacuum_error_half": True,
    "joint_estimation": True,
}
RUN_DEFAULTS = {
    "n_pairs": 1e9,
    "seed": 0,
    "workers": 1,
    "expected_mode": False,
    "budget": 2000,
    "starts": 32,
    "distances": [102, 155, 207, 259, 311, 404],
    "mu_z_grid": [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
    "p_z_grid": [0.4, 0.5, 0.6, 0.7, 0.8],
}
PARAM_KEYS = ("mu_x", "mu_y", "mu_z", "p_x", "p_y", "p_z")


@dataclass
class RunConfig:
    system: dict
    protocol: object  # "table" | "optimize" | dict of the six parameters
    policies: dict
    run: dict
    source: str | None = None
    explicit: set = field(default_factory=set)

    def fiber(self, distance: float) -> str:
        fib = self.system["fiber"]
        if fib is None:
            row = FIELD_SETTINGS.get(_table_key(distance)) if self.protocol == "table" else None
            fib = row[0] if row else "standard"
        if fib not in ("standard", "ultralow"):
            raise ConfigError(f"system.fiber: unknown fibre {fib!r}")
        return fib

    def system_spec(self, distance: float | None = None) -> SystemSpec:
        s = self.system
        distance = s["distance_km"] if distance is None else distance
        att = s["attenuation_db_per_km"]
        if att is None:
            att = ULTRALOW_LOSS_DB_PER_KM if self.fiber(distance) == "ultralow" else STANDARD_FIBER_DB_PER_KM
        try:
            channel = ChannelSpec(float(distance), float(att), float(s["arm_split_fraction"]),
                                  float(s["extra_loss_alice_db"]), float(s["extra_loss_bob_db"]))
            det = DetectorSpec(float(s["efficiency_d1"]), float(s["efficiency_d2"]),
                               float(s["dark_prob"]), float(s["window_efficiency"]))
            return SystemSpec(channel, det, float(s["misalignment_x"]), float(s["misalignment_z"]),
                              float(s["clock_rate_hz"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"system: {exc}") from exc

    def params(self, distance: float | None = None) -> ProtocolParams:
        distance = self.system["distance_km"] if distance is None else distance
        proto = self.protocol
        if proto == "table":
            key = _table_key(distance)
            if key is None:
                raise ConfigError(f"protocol: no parameter table entry for {distance} km")
            return FIELD_SETTINGS[key][1]
        if proto == "optimize":
            raise ConfigError("protocol: 'optimize' has no fixed parameters; run `optimize` first")
        try:
            return ProtocolParams(**{k: float(proto[k]) for k in PARAM_KEYS})
        except KeyError as exc:
            raise ConfigError(f"protocol.{exc.args[0]}: missing") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"protocol: {exc}") from exc

    def fluctuation(self) -> FluctuationPolicy:
        p = self.policies
        try:
            return FluctuationPolicy(float(p["epsilon"]), p["method"], p["pooling"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"policies: {exc}") from exc

    def analysis(self) -> AnalysisPolicy:
        p = self.policies
        try:
            return AnalysisPolicy(float(p["ec_efficiency"]), int(p["n_cut"]),
                                  float(p["lp_tolerance"]), bool(p["vacuum_error_half"]),
                                  bool(p["joint_estimation"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"policies: {exc}") from exc

    def physical_record(self, distance: float | None = None) -> dict:
        """Everything that determines the counts, as plain data."""
        return {"system": _system_dict(self.system_spec(distance)),
                "params": self.params(distance).as_dict()}


def _table_key(distance: float):
    for key in FIELD_SETTINGS:
        if abs(float(distance) - key) < 1e-9:
            return key
    return None


def _system_dict(spec: SystemSpec) -> dict:
    return asdict(spec)


def _merge(section: str, defaults: dict, given) -> dict:
    if given is None:
        return dict(defaults)
    if not isinstance(given, dict):
        raise ConfigError(f"{section}: expected a mapping")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"{section}.{sorted(unknown)[0]}: unknown field")
    out = dict(defaults)
    out.update(given)
    return out


def load_config(path: str | None) -> RunConfig:
    raw = {}
    if path:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be a mapping")
        unknown = set(raw) - {"system", "protocol", "policies", "run"}
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    protocol = raw.get("protocol", "table")
    if isinstance(protocol, dict):
        unknown = set(protocol) - set(PARAM_KEYS)
        if unknown:
            raise ConfigError(f"protocol.{sorted(unknown)[0]}: unknown field")
    elif protocol not in ("table", "optimize"):
        raise ConfigError("protocol: expected 'table', 'optimize' or a parameter mapping")
    explicit = set()
    for sec in ("system", "protocol"):
        if sec in raw:
            explicit.add(sec)
    return RunConfig(_merge("system", SYSTEM_DEFAULTS, raw.get("system")), protocol,
                     _merge("policies", POLICY_DEFAULTS, raw.get("policies")),
                     _merge("run", RUN_DEFAULTS, raw.get("run")), path, explicit)


def config_hash(record: dict) -> str:
    blob = json.dumps(record, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# --- counts files -----------------------------------------------------------

def counts_document(stats: SourcePairStats, cfg: RunConfig, mode: str) -> dict:
    record = cfg.physical_record()
    return {
        "meta": {
            "config_hash": config_hash(record),
            "seed": stats.seed,
            "n_pairs": stats.total_pairs,
            "tool_version": tool_version(),
            "mode": mode,
            "system": record["system"],
            "params": record["params"],
        },
        "stats": {lb: {"sent": stats.sent[lb], "coincidences": stats.coincidences[lb],
                       "errors": stats.errors[lb]} for lb in ALL_LABELS if lb in stats.sent},
    }


def _number(value, where: str):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"{where}: expected a number")
    if not math.isfinite(value) or value < 0:
        raise DataError(f"{where}: must be finite and >= 0")
    return value


def parse_counts(doc) -> tuple[SourcePairStats, dict]:
    """Validate a counts document; errors name the offending field."""
    if not isinstance(doc, dict):
        raise DataError("counts: top level must be an object")
    for key in ("meta", "stats"):
        if key not in doc:
            raise DataError(f"{key}: missing")
    meta, body = doc["meta"], doc["stats"]
    if not isinstance(meta, dict):
        raise DataError("meta: expected an object")
    if not isinstance(body, dict):
        raise DataError("stats: expected an object")
    for key in ("config_hash", "seed", "n_pairs", "tool_version"):
        if key not in meta:
            raise DataError(f"meta.{key}: missing")
    n_pairs = _number(meta["n_pairs"], "meta.n_pairs")
    sent, coinc, errs = {}, {}, {}
    for label in LABELS:
        if label not in body:
            raise DataError(f"stats.{label}: missing")
    for label, entry in body.items():
        if label not in ALL_LABELS:
            raise DataError(f"stats.{label}: unknown source pair")
        if not isinstance(entry, dict):
            raise DataError(f"stats.{label}: expected an object")
        for key, dest in (("sent", sent), ("coincidences", coinc), ("errors", errs)):
            if key not in entry:
                raise DataError(f"stats.{label}.{key}: missing")
            dest[label] = _number(entry[key], f"stats.{label}.{key}")
        if not errs[label] <= coinc[label] <= sent[label]:
            raise DataError(f"stats.{label}: need errors <= coincidences <= sent")
    total = sum(sent.values())
    if set(body) == set(ALL_LABELS) and abs(total - n_pairs) > 1e-9 * max(n_pairs, 1.0):
        raise DataError(f"meta.n_pairs: {n_pairs} differs from the summed sent counts {total}")
    return SourcePairStats(sent, coinc, errs, n_pairs, meta.get("seed")), meta


def load_counts(path: str) -> tuple[SourcePairStats, dict]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read counts file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"counts file {path} is not JSON: {exc}") from exc
    return parse_counts(doc)


# --- commands ---------------------------------------------------------------

def cmd_model(cfg: RunConfig, args) -> int:
    system, params = cfg.system_spec(), cfg.params()
    obs = expected_observables(system, params)
    lines = [f"{'pair':<6}{'S (gain)':>24}{'T (error-gain)':>24}"]
    for lb in LABELS:
        lines.append(f"{lb:<6}{obs.S(lb):>24.12e}{obs.T(lb):>24.12e}")
    print("\n".join(lines))
    record = {"meta": {"config_hash": config_hash(cfg.physical_record()),
                       "tool_version": tool_version(), **cfg.physical_record()},
              "observables": {lb: {"S": obs.S(lb), "T": obs.T(lb)} for lb in LABELS}}
    if args.out:
        atomic_write(args.out, _dump(record))
    else:
        print(_dump(record), end="")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    n_pairs = cfg.run["n_pairs"]
    if not n_pairs or float(n_pairs) < 1:
        raise ConfigError("run.n_pairs: must be >= 1")
    system, params = cfg.system_spec(), cfg.params()
    seed = int(cfg.run["seed"])
    if cfg.run["expected_mode"]:
        stats = expected_stats(system, params, float(n_pairs))
        stats.seed = seed
        mode = "expected"
    else:
        if float(n_pairs) != int(float(n_pairs)):
            raise ConfigError("run.n_pairs: must be an integer when sampling")
        stats = simulate(system, params, int(float(n_pairs)), seed, int(cfg.run["workers"]))
        mode = "sampled"
    doc = counts_document(stats, cfg, mode)
    if not args.out:
        raise ConfigError("--out is required for simulate")
    atomic_write(args.out, _dump(doc))
    print(f"wrote {args.out} ({mode}, {stats.total_pairs:g} pairs, seed {seed})")
    return EXIT_OK


def _records_match(a: dict, b: dict, rel: float = 1e-12) -> str | None:
    """First differing field of two nested records, or ``None``."""
    for key in sorted(set(a) | set(b)):
        if key not in a or key not in b:
            return key
        x, y = a[key], b[key]
        if isinstance(x, dict) and isinstance(y, dict):
            sub = _records_match(x, y, rel)
            if sub:
                return f"{key}.{sub}"
        elif isinstance(x, (int, float)) and isinstance(y, (int, float)):
            if abs(x - y) > rel * max(abs(x), abs(y)):
                return key
        elif x != y:
            return key
    return None


def _meta_system(meta: dict) -> tuple[SystemSpec, ProtocolParams]:
    try:
        s = meta["system"]
        system = SystemSpec(ChannelSpec(**s["channel"]), DetectorSpec(**s["detectors"]),
                            s["misalignment_x"], s["misalignment_z"], s["clock_rate"])
        params = ProtocolParams(**meta["params"])
    except KeyError as exc:
        raise DataError(f"meta: missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise DataError(f"meta: {exc}") from exc
    return system, params


def cmd_analyze(cfg: RunConfig, args) -> int:
    stats, meta = load_counts(args.counts)
    if "system" not in meta or "params" not in meta:
        if not cfg.explicit:
            raise DataError("meta.system: missing; supply a config with system and protocol")
        system, params = cfg.system_spec(), cfg.params()
    else:
        system, params = _meta_system(meta)
        if cfg.explicit or args.distance is not None:
            mine = cfg.physical_record()
            theirs = {"system": meta["system"], "params": meta["params"]}
            diff = _records_match(mine, theirs)
            if diff:
                if not args.override_provenance:
                    raise DataError(f"counts file disagrees with the config at {diff}; "
                                    "pass --override-provenance to analyze anyway")
                system, params = cfg.system_spec(), cfg.params()
    fp, ap = cfg.fluctuation(), cfg.analysis()
    fin = finite_key(stats, params, system, fp, ap)
    asym = asymptotic_from_stats(stats, params, system, ap)
    doc = {
        "meta": {"counts_config_hash": meta.get("config_hash"), "tool_version": tool_version(),
                 "analysis_hash": config_hash({"policies": cfg.policies}),
                 "n_pairs": stats.total_pairs, "seed": meta.get("seed")},
        "finite": fin.as_dict(),
        "asymptotic": asym.as_dict(),
    }
    text = _dump(doc)
    if args.out:
        atomic_write(args.out, text)
    print(f"key_length {fin.key_length}  rate {fin.rate_bps:.6g} bps  "
          f"s11_lower {fin.s11_lower:.6g}  e11_upper {fin.e11_upper:.6g}")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, args) -> int:
    budget, starts = int(cfg.run["budget"]), int(cfg.run["starts"])
    if budget < 100:
        raise ConfigError("run.budget: must be >= 100")
    if starts < 1:
        raise ConfigError("run.starts: must be >= 1")
    system = cfg.system_spec()
    n_pairs = None if args.asymptotic else float(cfg.run["n_pairs"])
    initial = None
    if args.from_table:
        key = _table_key(cfg.system["distance_km"])
        if key is None:
            raise ConfigError("--from-table: no parameter table entry for this distance")
        initial = FIELD_SETTINGS[key][1]
    res = optimize(system, n_pairs, cfg.fluctuation(), cfg.analysis(), int(cfg.run["seed"]),
                   budget, starts, initial)
    doc = {"meta": {"config_hash": config_hash({"system": _system_dict(system),
                                                "policies": cfg.policies, "run": cfg.run}),
                    "tool_version": tool_version(), "n_pairs": n_pairs,
                    "seed": int(cfg.run["seed"])},
           "result": {**res.as_dict(), "best_rate_bps": res.best_rate_per_pulse * system.clock_rate}}
    if args.out:
        atomic_write(args.out, _dump(doc))
    print(_dump(doc["result"]), end="")
    return EXIT_OK


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


SWEEP_COLUMNS = ["distance_km", "mdi_finite_bps", "mdi_asymptotic_bps", "bb84_ideal_sp",
                 "bb84_practical_sp", "bb84_wcs_decoy"]


def _nearest_table_params(distance: float) -> ProtocolParams:
    key = min(FIELD_SETTINGS, key=lambda k: abs(k - distance))
    return FIELD_SETTINGS[key][1]


def sweep_rows(cfg: RunConfig, distances) -> list[dict]:
    """Rates in bits per second; BB84 curves use the bare detector efficiency."""
    distances = [float(d) for d in distances]
    if not distances:
        raise ConfigError("sweep: empty distance list")
    fp, ap = cfg.fluctuation(), cfg.analysis()
    n_pairs = float(cfg.run["n_pairs"])
    rows = []
    for dist in distances:
        system = cfg.system_spec(dist)
        params = _nearest_table_params(dist) if cfg.protocol == "table" else cfg.params(dist)
        fin = expected_finite_key(system, params, n_pairs, fp, ap)
        asym = asymptotic_rate(system, params, ap)
        loss = dist * system.channel.attenuation
        det = system.detectors
        clock = system.clock_rate
        bb = {}
        for kind, src in (("ideal_sp", baseline.IdealSP()), ("practical_sp", baseline.PracticalSP(0.01)),
                          ("wcs_decoy", baseline.WCSDecoy(ec_efficiency=ap.ec_efficiency))):
            spec = baseline.BB84Spec(loss, det.mean_efficiency, det.dark_prob, 0.5, src)
            bb[kind] = baseline._RATES[kind](spec) * clock
        rows.append({"distance_km": dist, "mdi_finite_bps": fin.rate_bps,
                     "mdi_asymptotic_bps": asym.rate_bps, "bb84_ideal_sp": bb["ideal_sp"],
                     "bb84_practical_sp": bb["practical_sp"], "bb84_wcs_decoy": bb["wcs_decoy"]})
    return rows


def cmd_sweep(cfg: RunConfig, args) -> int:
    distances = args.distances if args.distances is not None else cfg.run["distances"]
    text = _csv(sweep_rows(cfg, distances), SWEEP_COLUMNS)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_surface(cfg: RunConfig, args) -> int:
    system = cfg.system_spec()
    rows = rate_surface(system, float(cfg.run["n_pairs"]), cfg.fluctuation(), cfg.analysis(),
                        cfg.run["mu_z_grid"], cfg.run["p_z_grid"], cfg.params())
    text = _csv([asdict(r) for r in rows], ["mu_z", "p_z", "rate_finite_bps", "rate_asymptotic_bps"])
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- argument handling --------------------------------------------------------

def _float_list(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"YAML/JSON config (default: ${ENV_CONFIG})")
    common.add_argument("--seed", type=int)
    common.add_argument("--pairs", type=float, help="number of pulse pairs N_t")
    common.add_argument("--distance", type=float, help="total fibre length in km")
    common.add_argument("--out", help="output path (written atomically)")
    common.add_argument("--expected-mode", action="store_true",
                        help="use expected counts instead of sampling")
    common.add_argument("--workers", type=int)

    parser = argparse.ArgumentParser(prog="mdiqkd", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("model", parents=[common], help="expected observables")
    sub.add_parser("simulate", parents=[common], help="write a counts file")
    p = sub.add_parser("analyze", parents=[common], help="key-rate report from counts")
    p.add_argument("counts")
    p.add_argument("--override-provenance", action="store_true",
                   help="analyze even if the counts file disagrees with the config")
    p = sub.add_parser("optimize", parents=[common], help="optimize protocol parameters")
    p.add_argument("--budget", type=int)
    p.add_argument("--starts", type=int)
    p.add_argument("--asymptotic", action="store_true", help="optimize the asymptotic rate")
    p.add_argument("--from-table", action="store_true",
                   help="seed the first start with the tabulated parameters")
    p = sub.add_parser("sweep", parents=[common], help="rate-vs-distance CSV")
    p.add_argument("--distances", type=_float_list)
    sub.add_parser("surface", parents=[common], help="rate over a (mu_z, p_z) grid")
    return parser


def resolve(args) -> RunConfig:
    path = args.config or os.environ.get(ENV_CONFIG)
    cfg = load_config(path)
    if args.seed is not None:
        cfg.run["seed"] = args.seed
    if args.pairs is not None:
        cfg.run["n_pairs"] = args.pairs
    if args.distance is not None:
        cfg.system["distance_km"] = args.distance
    if args.expected_mode:
        cfg.run["expected_mode"] = True
    if args.workers is not None:
        cfg.run["workers"] = args.workers
    for name in ("budget", "starts"):
        if getattr(args, name, None) is not None:
            cfg.run[name] = getattr(args, name)
    return cfg


COMMANDS = {"model": cmd_model, "simulate": cmd_simulate, "analyze": cmd_analyze,
            "optimize": cmd_optimize, "sweep": cmd_sweep, "surface": cmd_surface}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InconsistentDataError, UnresolvableYieldError) as exc:
        print(f"analysis infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
