"""Command-line driver: ``parosc {verify,apply,certify,probe,info}``.

Configuration is a flat ``key=value`` file; every key can be overridden by a
``--key value`` flag.  Precedence: flag > file > default.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels, squarefn, symbols, verify
from .families import eigenfunction, random_band_limited, wave_packets
from .grids import GridSpec
from .transform import GridFunction, analyze, default_max_degree, synthesize

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CERT = 0, 1, 2, 3

DEFAULTS = {
    "grid.rho_halfwidth": "16.0",
    "grid.rho_points": "256",
    "grid.x_halfwidth": "14.0",
    "grid.x_points": "160",
    "grid.dim": "1",
    "grid.x_rule": "uniform-trapezoid",
    "hermite.max_degree": "auto",
    "symbol": "one",
    "input": "random",
    "apply.p": "2",
    "certify.tau_max": "64.0",
    "certify.k_max": "256",
    "certify.samples": "4096",
    "probe.N": "auto",
    "probe.p_list": "1.5,2,3",
    "probe.samples": "2500",
    "probe.family_size": "16",
    "probe.t_min": "0.05",
    "probe.t_max": "5.0",
    "probe.z_range": "6.0",
    "seed": "0",
    "out": "-",
    "format": "json",
}

# global flags that are aliases of config keys
ALIASES = {"seed": "seed", "out": "out", "format": "format", "dim": "grid.dim"}

SUITE_NAMES = tuple(verify.SUITES) + ("all",)
PROBE_KINDS = ("domination", "lp-equivalence", "kernel-bounds")


class UsageError(ValueError):
    """Bad configuration or arguments (exit code 2)."""


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cfg = cls()
        cfg.update(parse_config_text(text))
        return cfg

    def update(self, items: dict) -> None:
        for key, value in items.items():
            if key not in DEFAULTS:
                raise UsageError(f"unknown configuration key {key!r}")
            self.values[key] = str(value)
        self.validate()

    def to_text(self) -> str:
        return "".join(f"{k}={self.values[k]}\n" for k in sorted(self.values))

    def __getitem__(self, key):
        return self.values[key]

    def validate(self) -> None:
        try:
            self.grid()
            self.seed()
            self.max_degree()
            self.apply_p()
            [float(p) for p in self.p_list()]
            int(self.values["probe.samples"])
            int(self.values["probe.family_size"])
            int(self.values["certify.k_max"])
            int(self.values["certify.samples"])
            float(self.values["certify.tau_max"])
            self.probe_order()
            for key in ("probe.t_min", "probe.t_max", "probe.z_range"):
                float(self.values[key])
        except (TypeError, ValueError, KeyError) as exc:
            raise UsageError(str(exc)) from exc
        if self.values["format"] not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.grid().dim not in (1, 2):
            raise UsageError("dimension must be 1 or 2")

    def grid(self) -> GridSpec:
        return GridSpec.from_config({k: v for k, v in self.values.items() if k.startswith("grid.")})

    def seed(self) -> int:
        seed = int(self.values["seed"])
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return seed

    def max_degree(self) -> int:
        v = self.values["hermite.max_degree"]
        return default_max_degree(int(self.values["grid.dim"])) if v == "auto" else int(v)

    def apply_p(self) -> list[float]:
        return [float(p) for p in self.values["apply.p"].split(",") if p.strip()]

    def p_list(self) -> list[float]:
        return [float(p) for p in self.values["probe.p_list"].split(",") if p.strip()]

    def probe_order(self) -> int:
        v = self.values["probe.N"]
        return symbols.default_order(int(self.values["grid.dim"])) if v == "auto" else int(v)


def parse_config_text(text: str) -> dict:
    items = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        items[key.strip()] = value.strip()
    return items


def _parse_overrides(extra: list[str]) -> dict:
    items = {}
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--"):
            raise UsageError(f"unexpected argument {token!r}")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"flag {token} needs a value")
            value = extra[i + 1]
            i += 2
        if key not in DEFAULTS:
            raise UsageError(f"unknown configuration key {key!r}")
        items[key] = value
    return items


PARSER_FLAGS = {"config", "seed", "out", "format", "dim", "symbol", "input", "p",
                "require-certificate", "help"}


def _split_overrides(argv: list[str]) -> tuple[list[str], list[str]]:
    """Pull ``--key value`` config overrides out of ``argv`` so they may appear
    anywhere on the command line."""
    rest, overrides = [], []
    i = 0
    while i < len(argv):
        token = argv[i]
        name = token[2:].split("=", 1)[0] if token.startswith("--") else None
        if name and name not in PARSER_FLAGS:
            if "=" in token or i + 1 >= len(argv):
                overrides.append(token)
                i += 1
            else:
                overrides.extend(argv[i:i + 2])
                i += 2
        else:
            rest.append(token)
            i += 1
    return rest, overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parosc",
        description="Spectral calculus of the partial harmonic oscillator: verification suites, "
                    "multipliers, certificates and square-function probes.")
    parser.add_argument("--config", metavar="PATH", help="flat key=value configuration file")
    parser.add_argument("--seed", type=int, help="unsigned 64-bit seed for all randomness")
    parser.add_argument("--out", metavar="PATH", help="output path ('-' for stdout)")
    parser.add_argument("--format", choices=("csv", "json"), help="report format")
    parser.add_argument("--dim", type=int, choices=(1, 2), help="dimension d of the x-variable")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run an invariant suite")
    p.add_argument("suite", choices=SUITE_NAMES)

    p = sub.add_parser("apply", help="apply a multiplier T_m and write the result as CSV")
    p.add_argument("--symbol", help="registry name, e.g. heat:t=0.5")
    p.add_argument("--input", help="eigenfunction[:tau_bin=..,mu=a/b], random, packet or a CSV path")
    p.add_argument("--p", dest="p", help="comma-separated exponents for the printed norms")
    p.add_argument("--require-certificate", action="store_true",
                   help="refuse symbols that fail Mikhlin certification (exit 3)")

    p = sub.add_parser("certify", help="sampled Mikhlin-Hormander certificate of a symbol")
    p.add_argument("--symbol")

    p = sub.add_parser("probe", help="empirical probes: domination, lp-equivalence, kernel-bounds")
    p.add_argument("kind", choices=PROBE_KINDS)
    p.add_argument("--symbol")

    sub.add_parser("info", help="print version, resolved configuration and registries")
    return parser


def resolve_config(args, extra) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    overrides = _parse_overrides(extra)
    for flag, key in ALIASES.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    for flag, key in (("symbol", "symbol"), ("input", "input"), ("p", "apply.p")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    cfg.update(overrides)
    return cfg


# ---------------------------------------------------------------------------
# output


def _flatten(prefix, obj, rows):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, obj))


def render_report(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    rows = []
    _flatten("", _jsonable(report), rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in rows:
        writer.writerow([key, repr(value) if isinstance(value, float) else value])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit(text: str, cfg: RunConfig) -> None:
    out = cfg["out"]
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    checks = verify.run_suite(suite, seed=cfg.seed())
    lines = [c.row() for c in checks]
    failed = [c for c in checks if not c.passed]
    lines.append(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    print("\n".join(lines))
    if cfg["out"] != "-":
        report = {"suite": suite, "seed": cfg.seed(),
                  "checks": [{"suite": c.suite, "name": c.name, "measured": c.measured,
                              "tolerance": c.tolerance, "relation": c.relation, "pass": c.passed}
                             for c in checks]}
        emit(render_report(report, cfg["format"]), cfg)
    if failed:
        for c in failed:
            print(f"failing record: {c.row()}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _parse_input(cfg: RunConfig, spec: GridSpec) -> GridFunction:
    name, _, rest = cfg["input"].partition(":")
    seed = cfg.seed()
    if name == "eigenfunction":
        params = symbols._parse_params(rest)
        tau_bin = int(params.pop("tau_bin", "1"))
        mu = params.pop("mu", "/".join(["1"] * spec.dim))
        if params:
            raise UsageError(f"unexpected eigenfunction parameters {sorted(params)}")
        return eigenfunction(spec, tau_bin, [int(m) for m in mu.split("/")])
    if name == "random" and not rest:
        return synthesize(random_band_limited(spec, 1, seed, max_degree=cfg.max_degree())[0])
    if name == "packet" and not rest:
        return wave_packets(spec, 1, seed)[0]
    try:
        with open(cfg["input"], encoding="utf-8") as fh:
            return GridFunction.from_csv(spec, fh.read())
    except OSError as exc:
        raise UsageError(f"input {cfg['input']!r} is neither a family name nor a readable CSV") from exc


def _certificate(cfg: RunConfig, sym) -> symbols.MikhlinCertificate:
    tau_max = float(cfg["certify.tau_max"])
    return symbols.certify(sym, (-tau_max, tau_max), int(cfg["certify.k_max"]),
                           int(cfg["certify.samples"]), cfg.seed())


def cmd_apply(cfg: RunConfig, require_certificate: bool) -> int:
    spec = cfg.grid()
    sym = symbols.parse_symbol(cfg["symbol"], spec.dim)
    if require_certificate:
        cert = _certificate(cfg, sym)
        if not cert.passed:
            print(f"symbol {sym.name} failed certification: {'; '.join(cert.notes)}", file=sys.stderr)
            return EXIT_CERT
    f = _parse_input(cfg, spec)
    s = analyze(f, cfg.max_degree())
    tf = synthesize(symbols.apply_symbol(s, sym))
    emit(tf.to_csv(), cfg)
    stream = sys.stderr if cfg["out"] == "-" else sys.stdout
    for p in cfg.apply_p():
        print(f"p={p!r} norm_f={f.lp_norm(p)!r} norm_Tf={tf.lp_norm(p)!r}", file=stream)
    return EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    sym = symbols.parse_symbol(cfg["symbol"], cfg.grid().dim)
    cert = _certificate(cfg, sym)
    emit(render_report(cert.to_dict(), cfg["format"]), cfg)
    return EXIT_OK if cert.passed else EXIT_CERT


def probe_kernel_bounds(cfg: RunConfig) -> dict:
    """Heat-kernel and ``M_t`` bound ratios at a base and a 4x sample count."""
    d = cfg.grid().dim
    seed = cfg.seed()
    base = int(cfg["probe.samples"])
    t_range = (float(cfg["probe.t_min"]), float(cfg["probe.t_max"]))
    z_range = float(cfg["probe.z_range"])
    sym = symbols.parse_symbol(cfg["symbol"], d)
    # M_t evaluations are a tau-quadrature each; keep their sample counts smaller
    mt_base = max(base // 5, 1)
    int_base = max(base // 400, 2)
    mt_t_range = (max(t_range[0], 0.1), t_range[1])
    results = {}
    passed = True

    def record(name, small, large, report):
        nonlocal passed
        growth = large / small if small > 0 else math.inf
        ok = math.isfinite(large) and growth < 2.0
        passed &= ok
        results[name] = {"report": report, "base_max_ratio": small, "max_ratio": large,
                         "growth": growth, "pass": ok}

    for n in range(cfg.probe_order() + 1):
        small = kernels.verify_kernel_bound(n, base, t_range, z_range, d, seed)
        large = kernels.verify_kernel_bound(n, 4 * base, t_range, z_range, d, seed)
        record(f"heat_kernel_N{n}", small.max_ratio, large.max_ratio, large.to_dict())
        small = kernels.verify_mt_pointwise_bound(n, mt_base, sym, mt_t_range, z_range, d, seed)
        large = kernels.verify_mt_pointwise_bound(n, 4 * mt_base, sym, mt_t_range, z_range, d, seed)
        record(f"multiplier_pointwise_N{n}", small.max_ratio, large.max_ratio, large.to_dict())
        small = verify.mt_integral_samples(n, int_base, sym, seed, d, mt_t_range, z_range)
        large = verify.mt_integral_samples(n, 4 * int_base, sym, seed, d, mt_t_range, z_range)
        record(f"multiplier_integral_N{n}", max(small.max_ratio, small.max_weighted_ratio),
               max(large.max_ratio, large.max_weighted_ratio),
               {k: v for k, v in large.to_dict().items() if k != "entries"})
    return {"probe": "kernel-bounds", "d": d, "seed": seed, "symbol": sym.name,
            "parameters": {"samples": base, "multiplier_samples": mt_base,
                           "integral_samples": int_base, "t_range": list(t_range),
                           "multiplier_t_range": list(mt_t_range), "z_range": z_range},
            "results": results, "pass": passed}


def probe_domination(cfg: RunConfig) -> dict:
    spec = cfg.grid()
    sym = symbols.parse_symbol(cfg["symbol"], spec.dim)
    family = wave_packets(spec, int(cfg["probe.family_size"]), cfg.seed())
    rep = squarefn.pointwise_domination_probe(cfg.probe_order(), sym, family, cfg.seed(),
                                              "packet", cfg.max_degree())
    return rep.to_dict()


def probe_lp(cfg: RunConfig) -> dict:
    spec = cfg.grid()
    family = random_band_limited(spec, int(cfg["probe.family_size"]), cfg.seed(),
                                 max_degree=cfg.max_degree())
    return squarefn.lp_equivalence_probe(family, cfg.p_list(), cfg.seed()).to_dict()


def cmd_probe(cfg: RunConfig, kind: str) -> int:
    report = {"kernel-bounds": probe_kernel_bounds, "domination": probe_domination,
              "lp-equivalence": probe_lp}[kind](cfg)
    emit(render_report(report, cfg["format"]), cfg)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_info(cfg: RunConfig) -> int:
    print(f"parosc {__version__}")
    print("configuration:")
    sys.stdout.write("".join(f"  {line}\n" for line in cfg.to_text().splitlines()))
    print("suites: " + ", ".join(SUITE_NAMES))
    print("symbols: " + ", ".join(symbols.REGISTRY_EXAMPLES) + ", csv:<path>")
    print("probes: " + ", ".join(PROBE_KINDS))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    argv, overrides = _split_overrides(sys.argv[1:] if argv is None else list(argv))
    try:
        args, extra = parser.parse_known_args(argv)
        extra = overrides + extra
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args, extra)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite)
        if args.command == "apply":
            return cmd_apply(cfg, args.require_certificate)
        if args.command == "certify":
            return cmd_certify(cfg)
        if args.command == "probe":
            return cmd_probe(cfg, args.kind)
        return cmd_info(cfg)
    except (UsageError, KeyError, ValueError, OSError) as exc:
        print(f"parosc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
