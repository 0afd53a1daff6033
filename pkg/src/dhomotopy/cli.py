"""Command-line entry point.

Exit codes: 0 success or Null, 1 NonNull (or a failed check), 2 Inconclusive,
3 input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .chains import ChainError
from .covers import CoverError, LiftError, build_cover, lift_chain
from .homotopy import (Budget, Decision, HomotopyCertificate, NULL, NONNULL, certificate_from_json,
                       decide_null)
from .rips import ScalePoint
from .spaces import MetricError, generate, space_from_json
from .spectrum import critical_spectrum, family_report
from .topology import finest_connected, loop_word, spanier_check, verify_ultrametric

EXIT_OK, EXIT_NONNULL, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    args: argparse.Namespace
    budget: Budget
    deterministic: bool = True
    threads: int = 1
    seed: int = 0
    out: Path | None = None
    fmt: str | None = None
    notes: list[str] = field(default_factory=list)


def _read_json(path: str, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{what}: cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _load_space(path: str):
    doc = _read_json(path, "space")
    if not isinstance(doc, dict):
        raise InputError(f"space: {path}: top level must be an object")
    try:
        return space_from_json(doc)
    except MetricError as exc:
        raise InputError(json.dumps({"error": str(exc),
                                     "violations": [v.to_json() for v in exc.violations]})) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"space: {path}: {exc}") from None


def _load_loop(path: str) -> tuple[int, ...]:
    doc = _read_json(path, "loop")
    pts = doc.get("points") if isinstance(doc, dict) else doc
    if not isinstance(pts, list) or not pts or not all(isinstance(p, int) for p in pts):
        raise InputError(f"loop: {path}: field 'points' must be a non-empty list of integers")
    return tuple(pts)


def _scale(cfg: RunConfig, space, text: str) -> ScalePoint:
    try:
        sp = ScalePoint.parse(text, space)
    except ValueError as exc:
        raise InputError(f"scale: {exc}") from None
    cfg.notes.append(f"scale {text} -> {sp} (d_k = {sp.value(space)!r})")
    return sp


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out is not None:
        cfg.out.write_text(text)
    else:
        sys.stdout.write(text)


def _verdict_code(d: Decision) -> int:
    return {NULL: EXIT_OK, NONNULL: EXIT_NONNULL}.get(d.verdict, EXIT_INCONCLUSIVE)


# -- subcommands

def cmd_validate(cfg: RunConfig) -> int:
    space = _load_space(cfg.args.space)
    _emit(cfg, _dump({"valid": True, "points": space.n, "basepoint": space.basepoint,
                      "diameter": space.diameter, "scale_set": [float(v) for v in space.values]}))
    return EXIT_OK


def cmd_gen(cfg: RunConfig) -> int:
    params = {}
    for item in cfg.args.param or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise InputError(f"--param expects key=value, got {item!r}")
        params[key] = val
    try:
        space = generate(cfg.args.name, params)
    except (KeyError, ValueError) as exc:
        raise InputError(f"gen: {exc}") from None
    _emit(cfg, _dump(space.to_json()))
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    space = _load_space(cfg.args.space)
    rep = critical_spectrum(space, cfg.budget, confirm=cfg.args.confirm, threads=cfg.threads)
    _emit(cfg, rep.to_csv() if cfg.fmt == "csv" else _dump(rep.to_json()))
    return EXIT_INCONCLUSIVE if rep.inconclusive else EXIT_OK


def cmd_null(cfg: RunConfig) -> int:
    space = _load_space(cfg.args.space)
    loop = _load_loop(cfg.args.loop)
    sp = _scale(cfg, space, cfg.args.scale)
    try:
        d = decide_null(space, sp, loop, cfg.budget, concurrent=cfg.threads > 1)
    except (ChainError, IndexError, ValueError) as exc:
        raise InputError(f"loop: {exc}") from None
    _emit(cfg, _dump(d.to_json()))
    return _verdict_code(d)


def cmd_verify(cfg: RunConfig) -> int:
    space = _load_space(cfg.args.space)
    doc = _read_json(cfg.args.certificate, "certificate")
    if not isinstance(doc, dict):
        raise InputError("certificate: top level must be an object")
    verdict = doc.get("verdict")
    cdoc = doc.get("certificate", doc) if verdict else doc
    if cdoc is None:
        _emit(cfg, _dump({"valid": verdict not in (NULL, NONNULL), "reason": "no certificate"}))
        return EXIT_OK if verdict not in (NULL, NONNULL) else EXIT_NONNULL
    try:
        cert = certificate_from_json(space, cdoc)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"certificate: {exc}") from None
    if isinstance(cert, HomotopyCertificate):
        ok = cert.verify()
        if verdict == NULL:
            ok = ok and len(cert.target.points) == 1
        elif verdict == NONNULL:
            ok = False
    else:
        ok = verdict in (None, NONNULL) and cert.verify(space)
    _emit(cfg, _dump({"valid": bool(ok), "type": cdoc.get("type")}))
    return EXIT_OK if ok else EXIT_NONNULL


def _cover_doc(space, sp, radius, budget) -> dict:
    return {"space": space.to_json(), "scale": str(sp), "radius": radius, "budget": budget.to_json()}


def cmd_cover(cfg: RunConfig) -> int:
    space = _load_space(cfg.args.space)
    sp = _scale(cfg, space, cfg.args.scale)
    try:
        cb = build_cover(space, sp, cfg.args.radius, cfg.budget)
    except (CoverError, ValueError) as exc:
        raise InputError(f"cover: {exc}") from None
    fmt = cfg.fmt or ("dot" if cfg.out is not None and cfg.out.suffix == ".dot" else "json")
    if fmt == "dot":
        _emit(cfg, cb.to_dot())
    else:
        _emit(cfg, _dump({**_cover_doc(space, sp, cfg.args.radius, cfg.budget), "cover": cb.to_json()}))
    return EXIT_OK


def cmd_lift(cfg: RunConfig) -> int:
    doc = _read_json(cfg.args.cover, "cover")
    try:
        space = space_from_json(doc["space"])
        sp = ScalePoint.parse(doc["scale"], space)
        budget = Budget(**doc.get("budget", {}))
        cb = build_cover(space, sp, doc.get("radius"), budget)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cover: {exc}") from None
    loop = _load_loop(cfg.args.loop)
    try:
        res = lift_chain(cb, loop)
    except LiftError as exc:
        _emit(cfg, _dump({"error": str(exc)}))
        return EXIT_INCONCLUSIVE
    except CoverError as exc:
        raise InputError(f"lift: {exc}") from None
    _emit(cfg, _dump({"scale": str(sp), "closed": res.closed, "endpoint": cb.label(res.endpoint),
                      "path": [cb.label(v) for v in res.path], "complete": cb.complete}))
    return EXIT_OK if res.closed else EXIT_NONNULL


def cmd_ultra(cfg: RunConfig) -> int:
    space = _load_space(cfg.args.space)
    try:
        ref = _scale(cfg, space, cfg.args.ref) if cfg.args.ref else finest_connected(space)
    except ValueError as exc:
        raise InputError(f"ultra: {exc}") from None
    doc = _read_json(cfg.args.words, "words")
    try:
        if isinstance(doc, dict) and "loops" in doc:
            words = [loop_word(space, ref, l) for l in doc["loops"]]
        else:
            words = doc["words"] if isinstance(doc, dict) else doc
            words = [tuple(int(g) for g in w) for w in words]
        table = verify_ultrametric(space, ref, words, cfg.budget, seed=cfg.seed)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"words: {exc}") from None
    _emit(cfg, _dump(table.to_json()) if cfg.fmt == "json" else table.to_csv())
    if table.violations:
        return EXIT_NONNULL
    return EXIT_INCONCLUSIVE if table.skipped else EXIT_OK


def cmd_spanier(cfg: RunConfig) -> int:
    space = _load_space(cfg.args.space)
    try:
        rep = spanier_check(space, cfg.args.k, cfg.budget)
    except ValueError as exc:
        raise InputError(f"spanier: {exc}") from None
    _emit(cfg, _dump(rep.to_json()))
    return EXIT_OK if rep.ok else EXIT_INCONCLUSIVE


def _index_range(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        return list(range(int(lo), int(hi) + 1)) if sep else [int(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"--k expects 'a..b' or a comma list, got {text!r}") from None


def cmd_family(cfg: RunConfig) -> int:
    params = dict(p.split("=", 1) for p in cfg.args.param or [] if "=" in p)
    try:
        rep = family_report(cfg.args.generator, _index_range(cfg.args.k), params)
    except (KeyError, ValueError) as exc:
        raise InputError(f"family-report: {exc}") from None
    _emit(cfg, rep.to_csv() if cfg.fmt == "csv" else _dump(rep.to_json()))
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate, "gen": cmd_gen, "spectrum": cmd_spectrum, "null": cmd_null,
    "verify": cmd_verify, "cover": cmd_cover, "lift": cmd_lift, "ultra": cmd_ultra,
    "spanier": cmd_spanier, "family-report": cmd_family,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--deterministic", dest="deterministic", action="store_true", default=True,
                        help="ignore wall-clock limits so outputs are reproducible (default)")
    common.add_argument("--no-deterministic", dest="deterministic", action="store_false")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", dest="fmt", choices=["json", "csv", "dot"])
    common.add_argument("--out", type=Path)
    common.add_argument("--budget-states", type=int, default=Budget.max_states)
    common.add_argument("--max-chain-length", type=int, default=Budget.max_chain_length)
    common.add_argument("--max-coset-rows", type=int, default=Budget.max_coset_rows)
    common.add_argument("--time-limit", type=float)

    p = argparse.ArgumentParser(prog="dhomotopy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("validate", parents=[common])
    s.add_argument("--space", required=True)
    s = sub.add_parser("gen", parents=[common])
    s.add_argument("name")
    s.add_argument("--param", action="append", metavar="KEY=VALUE")
    s = sub.add_parser("spectrum", parents=[common])
    s.add_argument("--space", required=True)
    s.add_argument("--confirm", dest="confirm", action="store_true", default=True)
    s.add_argument("--no-confirm", dest="confirm", action="store_false")
    s = sub.add_parser("null", parents=[common])
    s.add_argument("--space", required=True)
    s.add_argument("--loop", required=True)
    s.add_argument("--scale", required=True)
    s = sub.add_parser("verify", parents=[common])
    s.add_argument("--space", required=True)
    s.add_argument("--certificate", required=True)
    s = sub.add_parser("cover", parents=[common])
    s.add_argument("--space", required=True)
    s.add_argument("--scale", required=True)
    s.add_argument("--radius", type=int)
    s = sub.add_parser("lift", parents=[common])
    s.add_argument("--cover", required=True)
    s.add_argument("--loop", required=True)
    s = sub.add_parser("ultra", parents=[common])
    s.add_argument("--space", required=True)
    s.add_argument("--words", required=True)
    s.add_argument("--ref")
    s = sub.add_parser("spanier", parents=[common])
    s.add_argument("--space", required=True)
    s.add_argument("--k", type=int, required=True)
    s = sub.add_parser("family-report", parents=[common])
    s.add_argument("--generator", required=True)
    s.add_argument("--k", required=True)
    s.add_argument("--param", action="append", metavar="KEY=VALUE")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    limit = None if args.deterministic else args.time_limit
    budget = Budget(max_states=args.budget_states, max_chain_length=args.max_chain_length,
                    max_coset_rows=args.max_coset_rows, time_limit=limit)
    cfg = RunConfig(args.command, args, budget, args.deterministic, max(1, args.threads),
                    args.seed, args.out, args.fmt)
    if args.deterministic and args.time_limit is not None:
        cfg.notes.append("--time-limit ignored in deterministic mode")
    return cfg


def run(cfg: RunConfig) -> int:
    try:
        code = COMMANDS[cfg.command](cfg)
    except InputError as exc:
        for n in cfg.notes:
            print(n, file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for n in cfg.notes:
        print(n, file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = config_from_args(args)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
