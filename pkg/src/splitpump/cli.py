"""Command-line front end.

    splitpump stabilize --target bell:psi- --rho0 mixed --mode coherent --out trace.json
    splitpump bell-pump --simplified --trials 100
    splitpump verify-ms

Exit codes: 0 success, 2 input error, 3 numerical inconsistency,
4 acceptance threshold missed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import iontrap, protocol, qmath
from .errors import InconsistencyError, MalformedInputError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_THRESHOLD = 0, 2, 3, 4
PASS_FIDELITY = 1 - 1e-6
SEED_ENV = "SPLITPUMP_SEED"


class InputError(MalformedInputError):
    pass


@dataclass(frozen=True)
class TargetSpec:
    label: str
    amplitudes: np.ndarray

    @property
    def num_qubits(self) -> int:
        return qmath.num_qubits_of(self.amplitudes.shape[0])


@dataclass(frozen=True)
class RunConfig:
    mode: str = "kraus"
    seed: int = 0
    trials: int = 1
    epsilon: float = 0.0
    output_path: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise InputError("trials must be >= 1")
        if self.epsilon < 0 or not math.isfinite(self.epsilon):
            raise InputError("epsilon must be a finite non-negative number")


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def parse_amplitudes(pairs) -> np.ndarray:
    """List of (re, im) pairs -> ket; renormalizes if the norm is within 1e-6 of 1."""
    if isinstance(pairs, dict):
        pairs = pairs.get("amplitudes")
    try:
        v = np.array([complex(float(re), float(im)) for re, im in pairs], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise InputError(f"amplitudes must be a list of [re, im] pairs: {exc}") from exc
    if v.size < 2 or v.size & (v.size - 1):
        raise InputError(f"amplitude count {v.size} is not a power of two >= 2")
    nrm = np.linalg.norm(v)
    if not abs(nrm - 1) <= 1e-6:
        raise InputError(f"amplitudes have norm {nrm!r}, not 1")
    return v / nrm


def parse_target(text: str) -> TargetSpec:
    """Named targets bell:phi+|phi-|psi+|psi-, ghz:<n>, zero:<n>, or file:<path>."""
    kind, _, arg = text.partition(":")
    if kind == "bell" and arg in iontrap.BELL:
        return TargetSpec(text, iontrap.BELL[arg].copy())
    if kind in ("ghz", "zero"):
        try:
            n = int(arg)
        except ValueError:
            raise InputError(f"bad qubit count in {text!r}") from None
        if not 1 <= n <= 12 or (kind == "ghz" and n < 2):
            raise InputError(f"qubit count out of range in {text!r}")
        return TargetSpec(text, iontrap.ghz_state(n) if kind == "ghz" else qmath.basis_ket(0, n))
    if kind == "file":
        return TargetSpec(text, parse_amplitudes(_read_json(arg)))
    raise InputError(f"unrecognized target {text!r}")


def load_density(path: str) -> np.ndarray:
    """JSON {"dimension": d, "entries": [[re, im], ...]} in row-major order."""
    doc = _read_json(path)
    try:
        d = int(doc["dimension"])
        flat = [complex(float(re), float(im)) for re, im in doc["entries"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed density file {path}: {exc}") from exc
    if len(flat) != d * d:
        raise InputError(f"density file {path} has {len(flat)} entries for dimension {d}")
    try:
        return qmath.as_density(np.array(flat).reshape(d, d), tol=1e-9)
    except MalformedInputError as exc:
        raise InputError(f"density file {path}: {exc}") from exc


def density_document(rho: np.ndarray) -> dict:
    rho = np.asarray(rho, dtype=complex)
    return {"dimension": rho.shape[0],
            "entries": [[float(z.real), float(z.imag)] for z in rho.reshape(-1)]}


def resolve_rho0(source: str, num_qubits: int, seed: int, trial: int) -> np.ndarray:
    """mixed | random (fresh per trial) | random:<seed> | file:<path>."""
    if source == "mixed":
        return qmath.maximally_mixed(num_qubits)
    if source == "random":
        return qmath.random_density(num_qubits, [seed, trial, 7])
    if source.startswith("random:"):
        try:
            return qmath.random_density(num_qubits, int(source[7:]))
        except ValueError:
            raise InputError(f"bad seed in {source!r}") from None
    if source.startswith("file:"):
        rho = load_density(source[5:])
        if rho.shape[0] != 1 << num_qubits:
            raise InputError(f"rho0 dimension {rho.shape[0]} does not match a {num_qubits}-qubit target")
        return rho
    raise InputError(f"unrecognized rho0 source {source!r}")


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise InconsistencyError(f"non-finite number {x!r} in output")
        return format(float(x), ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(doc: dict) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _fmt(doc) + "\n"


def trace_document(label: str, mode: str, seed: int, traces: Sequence[protocol.ProtocolTrace],
                   **extra) -> dict:
    """Trace file body; with several trials the step fidelities are trial means."""
    n_steps = len(traces[0].steps)
    steps = []
    for i in range(n_steps):
        recs = [t.steps[i] for t in traces]
        steps.append({
            "index": recs[0].index,
            "fidelity": float(np.mean([r.fidelity for r in recs])),
            "support_dims": list(recs[0].support_dims),
            "support_ok": all(r.support_ok for r in recs),
        })
    finals = [t.final_fidelity for t in traces]
    doc = {
        "target": label,
        "mode": mode,
        "seed": seed,
        "steps": steps,
        "final_fidelity": float(np.mean(finals)),
        "trials": len(traces),
        "initial_fidelity": float(np.mean([t.initial_fidelity for t in traces])),
        "min_final_fidelity": float(min(finals)),
    }
    doc.update(extra)
    return doc


def _emit(doc: dict, out: str | None) -> None:
    text = dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _summary(msg: str) -> None:
    print(msg, file=sys.stderr)


def _exact_exit(traces) -> int:
    return EXIT_OK if min(t.final_fidelity for t in traces) >= PASS_FIDELITY else EXIT_THRESHOLD


def cmd_stabilize(args, cfg: RunConfig) -> int:
    spec = parse_target(args.target)
    if cfg.mode not in protocol.MODES:
        raise InputError(f"unknown mode {cfg.mode!r}")
    from .subspaces import build_splitting

    decomp = build_splitting(spec.amplitudes)
    nested = protocol.nested_intersections(decomp.subspaces)
    traces = []
    for t in range(cfg.trials):
        rho0 = resolve_rho0(args.rho0, spec.num_qubits, cfg.seed, t)
        rng = np.random.default_rng([cfg.seed, t])
        traces.append(protocol.stabilize(spec.amplitudes, rho0, cfg.mode, seed=rng,
                                         decomposition=decomp, nested=nested))
    _emit(trace_document(spec.label, cfg.mode, cfg.seed, traces), cfg.output_path)
    _summary(f"stabilize {spec.label}: {len(traces[0].steps)} steps, "
             f"min final fidelity {min(t.final_fidelity for t in traces):.12f}")
    return EXIT_OK if cfg.mode == "trajectory" else _exact_exit(traces)


def cmd_dead_beat(args, cfg: RunConfig) -> int:
    spec = parse_target(args.target)
    traces = []
    for t in range(cfg.trials):
        rho0 = resolve_rho0(args.rho0, spec.num_qubits, cfg.seed, t)
        rec, final = protocol.dead_beat_prepare(spec.amplitudes, rho0, seed=[cfg.seed, t])
        f = qmath.fidelity(final, spec.amplitudes)
        tr = protocol.ProtocolTrace(spec.amplitudes, "dead-beat", qmath.fidelity(rho0, spec.amplitudes))
        tr.steps.append(protocol.StepRecord(1, final, f, (1,), (f,)))
        traces.append(tr)
    _emit(trace_document(spec.label, "dead-beat", cfg.seed, traces), cfg.output_path)
    _summary(f"dead-beat {spec.label}: min final fidelity {min(t.final_fidelity for t in traces):.12f}")
    return _exact_exit(traces)


def cmd_bell_pump(args, cfg: RunConfig) -> int:
    mode = cfg.mode
    if mode not in ("coherent", "kraus", "trajectory"):
        raise InputError(f"unknown mode {mode!r}")
    traces = []
    for t in range(cfg.trials):
        rho0 = resolve_rho0(args.rho0, 2, cfg.seed, t)
        traces.append(iontrap.bell_pump(rho0, args.simplified, seed=np.random.default_rng([cfg.seed, t]),
                                        mode=mode))
    _emit(trace_document("bell:psi-", mode, cfg.seed, traces, simplified=bool(args.simplified)),
          cfg.output_path)
    _summary(f"bell-pump ({'simplified' if args.simplified else 'full'}, {mode}): "
             f"mean final fidelity {np.mean([t.final_fidelity for t in traces]):.12f}")
    return _exact_exit(traces)


def cmd_ghz_pump(args, cfg: RunConfig) -> int:
    spec = parse_target(args.target or "ghz:3")
    if not spec.label.startswith("ghz:"):
        raise InputError("ghz-pump needs a ghz:<n> target")
    if cfg.mode not in protocol.MODES:
        raise InputError(f"unknown mode {cfg.mode!r}")
    traces = []
    for t in range(cfg.trials):
        rho0 = resolve_rho0(args.rho0, spec.num_qubits, cfg.seed, t)
        traces.append(iontrap.ghz_pump(spec.num_qubits, rho0, seed=np.random.default_rng([cfg.seed, t]),
                                       mode=cfg.mode))
    _emit(trace_document(spec.label, cfg.mode, cfg.seed, traces), cfg.output_path)
    _summary(f"ghz-pump {spec.label}: min final fidelity {min(t.final_fidelity for t in traces):.12f}")
    return _exact_exit(traces)


def cmd_perturb(args, cfg: RunConfig) -> int:
    spec = parse_target(args.target)
    from .subspaces import build_splitting

    decomp = build_splitting(spec.amplitudes)
    traces = [protocol.perturbed_stabilize(spec.amplitudes,
                                           resolve_rho0(args.rho0, spec.num_qubits, cfg.seed, t),
                                           cfg.epsilon, seed=[cfg.seed, t], decomposition=decomp)
              for t in range(cfg.trials)]
    infid = [1 - t.final_fidelity for t in traces]
    doc = trace_document(spec.label, "perturbed", cfg.seed, traces, epsilon=cfg.epsilon,
                         median_infidelity=float(np.median(infid)))
    _emit(doc, cfg.output_path)
    _summary(f"perturb {spec.label} eps={cfg.epsilon:g}: median infidelity {np.median(infid):.3e}")
    return EXIT_OK


def cmd_verify_ms(args, cfg: RunConfig) -> int:
    report = iontrap.verify_ms_report()
    structural = {k: v for k, v in report.items() if isinstance(v, float) and k != "printed_bell_scalar_modulus"}
    failed = [k for k, v in structural.items() if v > 1e-10]
    true_mod = abs(report["bell_scalar_x_psi_minus"])
    lines = [f"{k}: {v:.3e}" for k, v in structural.items()]
    for k in ("bell_scalar_x_psi_minus", "bell_scalar_y_phi_minus_to_psi_plus", "bell_scalar_y_psi_minus"):
        z = report[k]
        lines.append(f"{k}: {z.real:+.12f}{z.imag:+.12f}j (|.| = {abs(z):.12f})")
    lines.append(f"printed Bell-action scalar modulus {report['printed_bell_scalar_modulus']:.12f} "
                 f"vs computed {true_mod:.12f}: "
                 + ("mismatch (printed 1/sqrt(2) factor is not unitary-consistent)"
                    if abs(true_mod - report["printed_bell_scalar_modulus"]) > 1e-9 else "match"))
    for k in failed:
        lines.append(f"FAILED: {k}")
    print("\n".join(lines))
    if cfg.output_path:
        doc = {k: ([v.real, v.imag] if isinstance(v, complex) else v) for k, v in report.items()}
        doc["passed"] = not failed
        Path(cfg.output_path).write_text(dumps(doc))
    return EXIT_NUMERIC if failed else EXIT_OK


COMMANDS = {
    "stabilize": cmd_stabilize,
    "dead-beat": cmd_dead_beat,
    "bell-pump": cmd_bell_pump,
    "ghz-pump": cmd_ghz_pump,
    "verify-ms": cmd_verify_ms,
    "perturb": cmd_perturb,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="splitpump", description="Finite-step dissipative pure-state preparation.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--target", default=None)
        p.add_argument("--rho0", default="mixed", help="mixed | random | random:<seed> | file:<path>")
        p.add_argument("--mode", default=None, help="kraus | coherent | trajectory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--epsilon", type=float, default=0.0)
        p.add_argument("--simplified", action="store_true")
        p.add_argument("--out", default=None)
    return parser


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV}={raw!r} is not an integer") from None


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command in ("stabilize", "dead-beat", "perturb") and not args.target:
            raise InputError(f"{args.command} requires --target")
        default_trials = 50 if args.command == "perturb" else 1
        cfg = RunConfig(mode=args.mode or ("coherent" if args.command == "bell-pump" else "kraus"),
                        seed=args.seed if args.seed is not None else _default_seed(),
                        trials=args.trials if args.trials is not None else default_trials,
                        epsilon=args.epsilon, output_path=args.out)
        return COMMANDS[args.command](args, cfg)
    except MalformedInputError as exc:
        print(f"splitpump: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InconsistencyError as exc:
        print(f"splitpump: numerical inconsistency: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
