"""Command-line driver.  Every command is deterministic given its config.

Errors are reported as one JSON object on stderr with exit status 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import ait
from .config import ConfigError, ExperimentConfig, build_config
from .constructor import (
    ConstructorConfig,
    Dovetailer,
    FormatVersionMismatch,
    guarded_stream,
    omega_hat_lower,
    universal_stream,
)
from .linalg import NotNormalized, NotPositiveDefinite, quad_form
from .machine import load_machine
from .rational import fmt_rat
from .semimeasure import (
    IncreasingSequence,
    MassExceeded,
    from_increasing_sequence,
    stream_from_complexity,
    stream_from_pv,
    to_increasing_sequence,
    validate_semimeasure,
)
from .semipovm import (
    measurement_distribution,
    projective_stream,
    sample_batch,
    scalar_embed,
    shift_mix,
    validate_semipovm,
    W,
)
from .strings import from_index, parse_string


class CommandError(Exception):
    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def _nondecreasing(values) -> bool:
    return all(a <= b for a, b in zip(values, values[1:]))


def dovetailer_for(cfg: ExperimentConfig) -> Dovetailer:
    return Dovetailer(ConstructorConfig(plants=cfg.plant_list()))


# -- commands ----------------------------------------------------------------------

def cmd_machine_enum(cfg, args):
    m = load_machine(cfg.machine)
    st = m.enumerate_halting(cfg.stages)
    rows = [(d.program, d.output, len(d.program), d.steps) for d in st.discovered]
    if args.selfcheck:
        progs = [d.program for d in st.discovered]
        if any(a != b and b.startswith(a) for a in progs for b in progs):
            raise CommandError("selfcheck failed: discovered set is not prefix-free")
        if st.kraft_sum > 1:
            raise CommandError("selfcheck failed: Kraft sum above 1")
    return _csv(rows, ["program", "output", "length", "steps"])


def cmd_omega_approx(cfg, args):
    m = load_machine(cfg.machine)
    vals = [m.omega_lower(n) for n in range(1, cfg.stages + 1)]
    if args.selfcheck and (not _nondecreasing(vals) or any(v > 1 for v in vals)):
        raise CommandError("selfcheck failed: omega column not nondecreasing in [0, 1]")
    return _csv([(n, fmt_rat(v)) for n, v in enumerate(vals, start=1)], ["n", "omega_lower"])


def _build(cfg: ExperimentConfig, resume: bool) -> Dovetailer:
    if resume:
        if not cfg.checkpoint:
            raise CommandError("--resume needs a checkpoint path")
        d = Dovetailer.load(cfg.checkpoint)
        if d.config.plants != cfg.plant_list():
            raise CommandError("checkpoint plants differ from the configured plants")
    else:
        d = dovetailer_for(cfg)
    d.advance_to(cfg.stages)
    if cfg.checkpoint:
        d.save(cfg.checkpoint)
    return d


def cmd_upovm_build(cfg, args):
    d = _build(cfg, args.resume)
    rows = []
    for l in sorted(d.runs):
        r = d.runs[l]
        rows.append((l, d.emitter(l).name, r.status, r.step - 1, r.fuel_spent))
    if args.selfcheck:
        from .constructor import replay_log
        bad = [p for l in sorted(d.runs) for p in replay_log(d.runs[l], d.config.space_dim)]
        if bad:
            raise CommandError("selfcheck failed: acceptance log replay", failures=bad)
    if cfg.format == "json":
        return _json(d.to_json())
    return _csv(rows, ["l", "emitter", "status", "accepted_steps", "fuel_spent"])


def cmd_upovm_omegahat(cfg, args):
    x = cfg.load_state()
    d = _build(cfg, args.resume) if args.resume else dovetailer_for(cfg)
    vals = [quad_form(omega_hat_lower(d, n, cfg.window), x) for n in range(1, cfg.stages + 1)]
    if args.selfcheck and (not _nondecreasing(vals) or any(not 0 <= v <= 1 for v in vals)):
        raise CommandError("selfcheck failed: omega-hat column not nondecreasing in [0, 1]")
    return _csv([(n, cfg.window, fmt_rat(v)) for n, v in enumerate(vals, start=1)],
                ["n", "m", "quad_form"])


def _stream(name: str, cfg: ExperimentConfig):
    d = dovetailer_for(cfg)
    if name == "universal":
        return universal_stream(d)
    if name == "projective":
        return projective_stream()
    if name == "shift-mix-projective":
        return shift_mix(projective_stream())
    if name.startswith("guarded:"):
        return guarded_stream(int(name.split(":", 1)[1]), d)
    if name.startswith("psi:"):
        return ait.psi_transport(ait.named_map(name[4:]), universal_stream(d))[0]
    if name.startswith("embed-pv:"):
        return scalar_embed(stream_from_pv(load_machine(name.split(":", 1)[1])))
    if name.startswith("embed-complexity:"):
        return scalar_embed(stream_from_complexity(load_machine(name.split(":", 1)[1])))
    raise CommandError(f"unknown stream {name!r}")


def cmd_upovm_validate(cfg, args):
    rep = validate_semipovm(_stream(args.stream, cfg), cfg.stages)
    if not rep.ok:
        raise CommandError("validator violation", report=rep.to_json())
    return _json(rep.to_json())


def cmd_measure_sample(cfg, args):
    x = cfg.load_state()
    stream = _stream(args.stream, cfg)
    dist = measurement_distribution(stream, cfg.stages, x, cfg.window)
    draws = sample_batch(dist, cfg.seed, cfg.draws)
    counts: dict[str, int] = {}
    for o in draws:
        key = W if o == W else from_index(o)
        counts[key] = counts.get(key, 0) + 1
    out = dist.to_json()
    out.update({"seed": cfg.seed, "draws": cfg.draws, "rng": "numpy Philox4x64, key=seed",
                "counts": dict(sorted(counts.items())),
                "note": "residual mass is assigned to the outcome w"})
    if args.selfcheck and sum(dist.probs) + dist.residual != 1:
        raise CommandError("selfcheck failed: completion identity")
    return _json(out)


def _hhat_one(payload):
    plants, s, n, eps = payload
    d = Dovetailer(ConstructorConfig(plants=plants))
    return ait.hhat_upper(d, s, n, eps).to_json()


def cmd_hhat_report(cfg, args):
    targets = [parse_string(args.s)] if args.s is not None else list(range(1, cfg.window + 1))
    payloads = [(cfg.plant_list(), s, cfg.stages, cfg.eps) for s in targets]
    try:
        if cfg.jobs > 1 and len(payloads) > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
                reports = list(ex.map(_hhat_one, payloads))
        else:
            reports = [_hhat_one(p) for p in payloads]
    except NotPositiveDefinite as e:
        raise CommandError(str(e))
    if args.selfcheck:
        for r in reports:
            m = r["operator"]["dim"]
            diag = [r["operator"]["upper"][i * m - i * (i - 1) // 2] for i in range(m)]
            if any(Fraction(iv[0]) < 0 for iv in diag if isinstance(iv, list)):
                raise CommandError("selfcheck failed: negative diagonal enclosure")
    return _json({"stage": cfg.stages, "reports": reports,
                  "note": "upper bounds on -log2 M(s); floor c_s = 2^(-s-2) from the planted floor"})


def _sequence(name: str, cfg: ExperimentConfig) -> IncreasingSequence:
    if name == "geometric":
        return IncreasingSequence(lambda n: 1 - Fraction(1, 2 ** n), "1-2^-n")
    if name == "omega":
        m = load_machine(cfg.machine)
        return IncreasingSequence(m.omega_lower, f"omega:{m.name}")
    raise CommandError(f"unknown sequence {name!r}")


def cmd_convert_seq2sm(cfg, args):
    try:
        r = from_increasing_sequence(_sequence(args.sequence, cfg), args.d,
                                     check_upto=cfg.stages)
    except MassExceeded as e:
        raise CommandError(str(e))
    rows = [(s, from_index(s), fmt_rat(r.eval(1, s))) for s in range(1, cfg.stages + 1)]
    if args.selfcheck and not validate_semimeasure(r, cfg.stages).ok:
        raise CommandError("selfcheck failed: converted stream is not a semi-measure")
    return _csv(rows, ["s", "bits", "r"])


def cmd_convert_sm2seq(cfg, args):
    m = load_machine(cfg.machine)
    r = stream_from_pv(m) if args.source == "pv" else stream_from_complexity(m)
    a = to_increasing_sequence(r)
    vals = [a.eval(n) for n in range(1, cfg.stages + 1)]
    if args.selfcheck and (not _nondecreasing(vals) or any(v > 1 for v in vals)):
        raise CommandError("selfcheck failed: sequence not increasing in [0, 1]")
    return _csv([(n, fmt_rat(v)) for n, v in enumerate(vals, start=1)], ["n", "a_n"])


def cmd_psi_transport(cfg, args):
    d = dovetailer_for(cfg)
    psi = ait.named_map(args.map)
    stream, rep = ait.psi_transport(psi, universal_stream(d), witness_grid=cfg.window)
    val = validate_semipovm(stream, cfg.stages)
    out = {"transport": rep.to_json(), "validation": val.to_json()}
    if not val.ok or not rep.ok:
        raise CommandError("validator violation", report=out)
    return _json(out)


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--stages", type=int)
    common.add_argument("--window", type=int)
    common.add_argument("--eps")
    common.add_argument("--seed", type=int)
    common.add_argument("--draws", type=int)
    common.add_argument("--checkpoint")
    common.add_argument("--state", help="e<k>, a JSON file, or an inline JSON list")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--machine", help="vm, a bundled fixture name, or a table file")
    common.add_argument("--plants", help="comma list of <index>:<plant name>")
    common.add_argument("--jobs", type=int)
    common.add_argument("--out", help="write the artifact here instead of stdout")
    common.add_argument("--selfcheck", action="store_true",
                        help="rerun validators on the emitted table")

    p = argparse.ArgumentParser(prog="opait", description=__doc__)
    groups = p.add_subparsers(dest="group", required=True)

    def sub(group, name, fn, **kw):
        g = groups.choices.get(group) or groups.add_parser(group)
        if not hasattr(g, "_cmds"):
            g._cmds = g.add_subparsers(dest="command", required=True)
        c = g._cmds.add_parser(name, parents=[common], **kw)
        c.set_defaults(fn=fn)
        return c

    sub("machine", "enum", cmd_machine_enum)
    sub("omega", "approx", cmd_omega_approx)
    b = sub("upovm", "build", cmd_upovm_build)
    b.add_argument("--resume", action="store_true")
    o = sub("upovm", "omegahat", cmd_upovm_omegahat)
    o.add_argument("--resume", action="store_true")
    v = sub("upovm", "validate", cmd_upovm_validate)
    v.add_argument("--stream", default="universal")
    ms = sub("measure", "sample", cmd_measure_sample)
    ms.add_argument("--stream", default="universal")
    h = sub("hhat", "report", cmd_hhat_report)
    h.add_argument("--s", help="one string (bits, λ or #index); default: all s <= window")
    c1 = sub("convert", "seq2sm", cmd_convert_seq2sm)
    c1.add_argument("--sequence", default="geometric", choices=["geometric", "omega"])
    c1.add_argument("--d", type=int, default=1)
    c2 = sub("convert", "sm2seq", cmd_convert_sm2seq)
    c2.add_argument("--source", default="pv", choices=["pv", "complexity"])
    t = sub("psi", "transport", cmd_psi_transport)
    t.add_argument("--map", default="swap")
    return p


CONFIG_KEYS = ("stages", "window", "eps", "seed", "draws", "checkpoint", "state", "format",
               "machine", "plants", "jobs")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args.config, **{k: getattr(args, k) for k in CONFIG_KEYS})
        text = args.fn(cfg, args)
    except CommandError as e:
        return _fail(str(e), **e.detail)
    except NotNormalized as e:
        return _fail(str(e))
    except (ConfigError, FormatVersionMismatch, NotPositiveDefinite, MassExceeded,
            FileNotFoundError, json.JSONDecodeError, ValueError) as e:
        return _fail(str(e), type=type(e).__name__)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _fail(message: str, **detail) -> int:
    sys.stderr.write(json.dumps({"error": message, **detail}, sort_keys=True) + "\n")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
