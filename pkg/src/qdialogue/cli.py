"""
Command-line front end.

Subcommands
-----------
simulate      run a seeded Monte-Carlo experiment, write the transcript and stats
oracle        print the exact reference probabilities for one scenario
attack-demo   narrate a short run round by round
bases         print the GHZ family and its Z/X outcome tables

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 internal
invariant violation.

A config file (``--config``) is INI-style with sections ``[experiment]``,
``[eve]`` and ``[output]``; command-line flags override its keys.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import ghz_codec, harness, qstate
from .adversary import EveStrategy, Kind, Scope, StrategyError
from .harness import ConfigError, ExperimentConfig
from .oracle import as_fraction, exact_oracle
from .protocol import BASELINE, PROTOCOLS, REVISED, Mode, ProtocolError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INVARIANT = 4

FORMATS = ("lines", "table")

# section -> key -> converter
CONFIG_KEYS = {
    "experiment": {
        "protocol": str,
        "rounds": int,
        "cm_probability": float,
        "s7_reveal_fraction": float,
        "seed": int,
        "message_source": str,
        "alice_message": str,
        "bob_message": str,
        "checking_bits": "bool",
    },
    "eve": {
        "strategy": str,
        "scope": str,
        "probe_target": str,
        "probe_basis": str,
    },
    "output": {
        "path": str,
        "format": str,
        "verbosity": int,
    },
}

DEFAULTS = {
    "protocol": REVISED,
    "rounds": 1000,
    "cm_probability": 0.5,
    "s7_reveal_fraction": 0.1,
    "seed": 0,
    "message_source": "random",
    "alice_message": "",
    "bob_message": "",
    "checking_bits": False,
    "strategy": "none",
    "scope": None,
    "probe_target": None,
    "probe_basis": None,
    "path": None,
    "format": "lines",
    "verbosity": 0,
}

# argparse dest -> merged key
FLAG_KEYS = {
    "protocol": "protocol",
    "rounds": "rounds",
    "cm_probability": "cm_probability",
    "s7_fraction": "s7_reveal_fraction",
    "seed": "seed",
    "message_source": "message_source",
    "alice_message": "alice_message",
    "bob_message": "bob_message",
    "checking_bits": "checking_bits",
    "eve": "strategy",
    "scope": "scope",
    "probe_target": "probe_target",
    "probe_basis": "probe_basis",
    "out": "path",
    "format": "format",
    "verbose": "verbosity",
}


class CliError(Exception):
    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class CliConfig:
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output_path: Optional[str] = None
    output_format: str = "lines"
    verbosity: int = 0


def read_config_file(path: str) -> dict:
    """Flatten an INI file into merged-key form, rejecting unknown sections and keys."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}", EXIT_IO) from None
    except configparser.Error as exc:
        raise CliError(f"malformed config {path}: {exc}", EXIT_CONFIG) from None
    out = {}
    for section in parser.sections():
        if section not in CONFIG_KEYS:
            raise CliError(f"unknown config section [{section}]", EXIT_CONFIG)
        for key, raw in parser.items(section):
            conv = CONFIG_KEYS[section].get(key)
            if conv is None:
                raise CliError(f"unknown config key {key!r} in [{section}]", EXIT_CONFIG)
            try:
                value = parser.getboolean(section, key) if conv == "bool" else conv(raw)
            except ValueError:
                raise CliError(f"bad value for {key!r} in [{section}]: {raw!r}", EXIT_CONFIG) from None
            out[key] = value
    return out


def build_strategy(text: str, scope=None, probe_target=None, probe_basis=None) -> EveStrategy:
    """Parse ``--eve`` and fold in the separate scope/probe flags, which win over inline fields."""
    base = EveStrategy.parse(text)
    if base.kind is Kind.INTERCEPT_RESEND:
        if probe_target or probe_basis:
            raise StrategyError("probe options apply only to entangle-measure")
        return EveStrategy(base.kind, scope=Scope(scope) if scope else base.scope)
    if base.kind is Kind.ENTANGLE_MEASURE:
        if scope:
            raise StrategyError("--scope applies only to intercept-resend")
        return EveStrategy(base.kind, probe_target=probe_target or base.probe_target,
                           probe_basis=probe_basis or base.probe_basis)
    if scope or probe_target or probe_basis:
        raise StrategyError("strategy 'none' takes no scope or probe options")
    return base


def resolve_config(args: argparse.Namespace) -> CliConfig:
    """Defaults, then the config file, then explicit flags."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            merged[key] = value
    if merged["format"] not in FORMATS:
        raise CliError(f"format must be one of {FORMATS}, got {merged['format']!r}", EXIT_CONFIG)
    try:
        scope = merged["scope"]
        if scope is not None and scope not in {s.value for s in Scope}:
            raise StrategyError(f"unknown scope {scope!r}")
        strategy = build_strategy(merged["strategy"], scope, merged["probe_target"], merged["probe_basis"])
        exp = ExperimentConfig(
            protocol=merged["protocol"],
            strategy=strategy,
            rounds=merged["rounds"],
            cm_probability=merged["cm_probability"],
            s7_reveal_fraction=merged["s7_reveal_fraction"],
            seed=merged["seed"],
            message_source=merged["message_source"],
            alice_message=merged["alice_message"],
            bob_message=merged["bob_message"],
            checking_bits=bool(merged["checking_bits"]),
        ).validate()
    except (ConfigError, StrategyError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    return CliConfig(exp, merged["path"], merged["format"], int(merged["verbosity"]))


# -- simulate --------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    _configure_logging(cfg.verbosity)
    stats, lines = harness.run_experiment(cfg.experiment)
    if cfg.output_path:
        try:
            with open(cfg.output_path, "w", encoding="utf-8") as fh:
                fh.writelines(line + "\n" for line in lines)
        except OSError as exc:
            raise CliError(f"cannot write {cfg.output_path}: {exc.strerror}", EXIT_IO) from None
    if cfg.output_format == "table":
        sys.stdout.write(stats.to_table())
    else:
        print(json.dumps(stats.to_dict()))
    return EXIT_OK


# -- oracle ----------------------------------------------------------------


def cmd_oracle(args: argparse.Namespace) -> int:
    try:
        strategy = EveStrategy.parse(args.scenario)
        strategy.check_protocol(args.protocol)
    except StrategyError as exc:
        raise CliError(f"unknown scenario {args.scenario!r}: {exc}", EXIT_CONFIG) from None
    report = exact_oracle(args.protocol, strategy)
    if args.json:
        print(json.dumps(report.to_dict()))
        return EXIT_OK
    print(f"protocol  {report.protocol}")
    print(f"strategy  {report.strategy}")
    bases = list(report.cm_pass)
    print("cm pass probability by encoding")
    print("  " + "encoding".ljust(12) + "".join(b.ljust(8) for b in bases))
    for enc in report.cm_pass[bases[0]]:
        print("  " + enc.ljust(12) + "".join(as_fraction(report.cm_pass[b][enc]).ljust(8) for b in bases))
    for name in ("cm_pass_mean", "cm_detection", "s7_pass_mean", "checking_bits_pass_mean", "decode_error",
                 "eve_alice_accuracy", "eve_bob_accuracy", "eve_alice_block_accuracy", "eve_bob_block_accuracy"):
        print(f"{name:<26}{as_fraction(getattr(report, name))}")
    return EXIT_OK


# -- attack-demo -----------------------------------------------------------


def _fmt(bits) -> str:
    if bits is None:
        return "-"
    if len(bits) == 4:
        return str(ghz_codec.QuadCode.of(*bits))
    return str(ghz_codec.TwoBitCode(*bits))


def narrate(rec) -> str:
    """One human-readable line for a round record."""
    d = rec.to_dict()
    eve = d["eve"]
    head = f"round {d['index']:>3}  {d['mode']}  bob={_fmt(d['bob'])} alice={_fmt(d['alice'])}"
    parts = [head]
    if rec.mode is Mode.CM:
        outcomes = d["cm_outcomes"]
        if d["cm_basis"] == "BELL":
            parts.append(f"alice reveals, bob's bell result={_fmt(outcomes)}")
        else:
            parts.append(f"basis={d['cm_basis']} (h,t,p)={ghz_codec.format_outcome(outcomes, d['cm_basis'])}")
    else:
        parts.append(f"announced={_fmt(d['result'])}")
    if eve:
        seen = [f"{k}={_fmt(v)}" for k, v in eve["readings"].items()]
        seen += [f"anc[{s}:{b}]={bit}" for s, b, bit in eve["ancilla"]]
        parts.append("eve sees " + (" ".join(seen) if seen else "nothing"))
        if eve["alice_guess"] is not None:
            exact = eve["alice_guess"] == d["alice"] and eve["bob_guess"] == d["bob"]
            parts.append(f"eve guesses alice={_fmt(eve['alice_guess'])} bob={_fmt(eve['bob_guess'])}"
                         f" ({'exact' if exact else 'wrong'})")
    ran = [f"{k}={v}" for k, v in d["verdicts"].items() if v != "not-run"]
    if ran:
        parts.append(" ".join(ran))
    if rec.failed:
        parts.append("DETECTED")
    return "  |  ".join(parts)


def cmd_attack_demo(args: argparse.Namespace) -> int:
    try:
        strategy = build_strategy(args.eve)
        cfg = ExperimentConfig(protocol=args.protocol, strategy=strategy, rounds=args.rounds,
                               cm_probability=args.cm_probability, s7_reveal_fraction=args.s7_fraction,
                               seed=args.seed).validate()
    except (ConfigError, StrategyError) as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    print(f"# {cfg.protocol} protocol, eve: {cfg.strategy}, {cfg.rounds} rounds, seed {cfg.seed}")
    detected = 0
    for rec in harness.iter_rounds(cfg):
        detected += rec.failed
        print(narrate(rec))
    print(f"# detected in {detected} of {cfg.rounds} rounds")
    return EXIT_OK


# -- bases -----------------------------------------------------------------

_COEFF_TERMS = ((1, "+", ""), (-1, "-", ""), (1j, "+", "i"), (-1j, "-", "i"))


def ket_string(state: qstate.StateVector) -> str:
    """Render a state whose nonzero amplitudes are ±1/√2 or ±i/√2 as ``(|000> + |111>)/√2``."""
    n = state.n_qubits
    terms = []
    for idx in np.flatnonzero(np.abs(state.amplitudes) > qstate.NORM_TOL):
        c = state.amplitudes[idx] * np.sqrt(2)
        for value, sign, unit in _COEFF_TERMS:
            if abs(c - value) < 1e-9:
                terms.append((sign, unit + f"|{int(idx):0{n}b}>"))
                break
        else:
            return " ".join(f"{a:+.4f}|{i:0{n}b}>" for i, a in enumerate(state.amplitudes) if abs(a) > 1e-12)
    first_sign, first = terms[0]
    body = ("-" if first_sign == "-" else "") + first
    body += "".join(f" {s} {t}" for s, t in terms[1:])
    return f"({body})/√2"


def bases_report() -> str:
    fam = ghz_codec.ghz_family()
    lines = ["GHZ family, qubit order (h, t, p)"]
    for q, member in zip(fam.labels, fam.members):
        lines.append(f"{q}  {ket_string(member)}")
    for basis in (qstate.Z, qstate.X):
        lines.append(f"allowed {basis} outcomes (h, t, p)")
        for q in fam.labels:
            triples = sorted(ghz_codec.allowed_outcomes(q, basis))
            lines.append(f"{q}  " + " ".join(ghz_codec.format_outcome(t, basis) for t in triples))
    return "\n".join(lines)


def cmd_bases(args: argparse.Namespace) -> int:
    print(bases_report())
    return EXIT_OK


# -- entry point -----------------------------------------------------------


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdialogue", description="Quantum dialogue simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a seeded Monte-Carlo experiment")
    sim.add_argument("--config", help="INI file with [experiment], [eve], [output] sections")
    sim.add_argument("--protocol", choices=PROTOCOLS)
    sim.add_argument("--eve", help="none | intercept-resend[:both|t|p] | entangle-measure[:t|p|both[:Z|X]]")
    sim.add_argument("--scope", help="intercept-resend scope: both, t or p")
    sim.add_argument("--probe-target", help="entangle-measure target: t, p or both")
    sim.add_argument("--probe-basis", help="entangle-measure ancilla basis: Z or X")
    sim.add_argument("--rounds", type=int)
    sim.add_argument("--cm-probability", type=float)
    sim.add_argument("--s7-fraction", type=float, help="probability a message round is revealed and checked")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--message-source", choices=("random", "bitstring"))
    sim.add_argument("--alice-message", help="bitstring, 3 bits per code (revised) or 2 (baseline)")
    sim.add_argument("--bob-message")
    sim.add_argument("--checking-bits", action="store_true", default=None,
                     help="use the post-qubit block as public checking bits")
    sim.add_argument("--out", help="write the JSON-lines transcript here")
    sim.add_argument("--format", choices=FORMATS, help="stats as one JSON line or a CSV table")
    sim.add_argument("-v", "--verbose", action="count", default=None)
    sim.set_defaults(func=cmd_simulate)

    ora = sub.add_parser("oracle", help="exact probabilities for a scenario")
    ora.add_argument("protocol", choices=PROTOCOLS)
    ora.add_argument("scenario", help="e.g. none, intercept-resend:both, entangle-measure:p:Z")
    ora.add_argument("--json", action="store_true", help="print the report as JSON")
    ora.set_defaults(func=cmd_oracle)

    demo = sub.add_parser("attack-demo", help="narrate a short attacked run")
    demo.add_argument("--protocol", choices=PROTOCOLS, default=BASELINE)
    demo.add_argument("--eve", default="intercept-resend")
    demo.add_argument("--rounds", type=int, default=20)
    demo.add_argument("--cm-probability", type=float, default=0.5)
    demo.add_argument("--s7-fraction", type=float, default=0.5)
    demo.add_argument("--seed", type=int, default=0)
    demo.set_defaults(func=cmd_attack_demo)

    bases = sub.add_parser("bases", help="print the GHZ family and outcome tables")
    bases.set_defaults(func=cmd_bases)
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.status
    except (ProtocolError, qstate.QStateError, ghz_codec.InvalidCodeError) as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
