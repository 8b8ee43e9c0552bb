"""Command-line experiment runner.

    prsguard <command> --config run.json [--seed N] [--output DIR] [--key HEX]
                       [--workers N] [--verbose]

Commands: encrypt, invert, invariance, prs-stats, train, mia. Every command
reads a JSON config (validated, unknown fields rejected) and writes its
results into the output directory.

Exit codes: 0 ok, 2 config error, 3 runtime error, 4 an acceptance
tolerance was not met.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from . import genmodel as gm
from . import metrics, mia, prs
from .encodings import feature_bits
from .prf import TrapdoorKey, gen_trapdoor, key_from_rng

log = logging.getLogger("prsguard")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ACCEPTANCE = 0, 2, 3, 4

INVARIANCE_TOL = 1e-9
PIPELINE_TOL = 1e-9


class ConfigError(Exception):
    pass


_BITSTRING = {"type": "string", "pattern": "^[01]+$"}
_COMMON = {
    "command": {"type": "string"},
    "n": {"type": "integer", "minimum": 1, "maximum": 14},
    "scheme": {"enum": ["PhasePRS", "ParamPhasePRS", "BasisPRS"]},
    "theta": {"type": "array", "items": {"type": "number"}},
    "T": {"type": "integer", "minimum": 1},
    "L": {"type": "integer", "minimum": 2},
    "seed": {"type": "integer", "minimum": 0},
    "output": {"type": "string"},
}
_TRAIN_FIELDS = {
    "dataset": {"type": "array", "items": _BITSTRING, "minItems": 1},
    "steps": {"type": "integer", "minimum": 0},
    "batch_size": {"type": "integer", "minimum": 1},
    "learning_rate": {"type": "number", "minimum": 0},
    "depth": {"type": "integer", "minimum": 1},
    "disc_kind": {"enum": ["FidelityDisc", "VariationalDisc"]},
    "grad_method": {"enum": ["parameter_shift", "finite_difference"]},
    "fd_step": {"type": "number", "exclusiveMinimum": 0},
    "shots": {"type": "integer", "minimum": 0},
    "rekey_per_batch": {"type": "boolean"},
}


def _schema(extra: dict, required=("command", "n", "scheme")) -> dict:
    return {
        "type": "object",
        "properties": {**_COMMON, **extra},
        "required": list(required),
        "additionalProperties": False,
    }


SCHEMAS = {
    "encrypt": _schema(
        {"inputs": {"type": "array", "items": _BITSTRING, "minItems": 1}},
        ("command", "n", "scheme", "inputs"),
    ),
    "invert": _schema(
        {"inputs": {"type": "array", "items": {"type": "string"}, "minItems": 1}},
        ("command", "n", "scheme", "inputs"),
    ),
    "invariance": _schema(
        {
            "scheme": {"enum": ["PhasePRS", "ParamPhasePRS", "BasisPRS", "all"]},
            "triples": {"type": "integer", "minimum": 1},
        }
    ),
    "prs-stats": _schema(
        {
            "t": {"type": "integer", "minimum": 1, "maximum": 4},
            "num_pairs": {"type": "integer", "minimum": 100},
        },
        ("command", "n"),
    ),
    "train": _schema(
        {**_TRAIN_FIELDS, "encrypted": {"type": "boolean"}},
        ("command", "n", "scheme", "dataset"),
    ),
    "mia": _schema(
        {
            **_TRAIN_FIELDS,
            "pool": {"type": "array", "items": _BITSTRING},
            "pool_size": {"type": "integer", "minimum": 2},
            "train_size": {"type": "integer", "minimum": 1},
            "trials": {"type": "integer", "minimum": 20},
            "adversary": {"enum": list(mia.ADVERSARIES)},
            "arms": {
                "type": "array",
                "items": {"enum": ["encrypted", "plaintext"]},
                "minItems": 1,
                "uniqueItems": True,
            },
            "query_budget": {"type": "integer", "minimum": 1},
            "query_shots": {"type": "integer", "minimum": 0},
            "reference_queries": {"type": "integer", "minimum": 1},
            "include_transcripts": {"type": "boolean"},
        }
    ),
}


# --------------------------------------------------------------------------
# helpers


def config_hash(cfg: dict) -> str:
    # the output location does not change results, so it stays out of the hash
    body = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]


def _scheme_params(cfg: dict, scheme: str | None = None) -> prs.SchemeParams:
    scheme = scheme or cfg["scheme"]
    n = cfg["n"]
    try:
        if scheme == "ParamPhasePRS":
            if "theta" not in cfg:
                raise ConfigError("ParamPhasePRS requires field 'theta'")
            return prs.SchemeParams.param_phase(cfg["theta"])
        if scheme == "BasisPRS":
            return prs.SchemeParams.basis(cfg.get("T", 2 * n), cfg.get("L", 4))
        return prs.SchemeParams.phase()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _key(args, cfg: dict) -> TrapdoorKey:
    if args.key:
        try:
            return TrapdoorKey.from_hex(args.key)
        except ValueError as exc:
            raise ConfigError(f"--key: {exc}") from exc
    return gen_trapdoor(cfg.get("seed", 0))


def _write_json(path: Path, doc: Any) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _provenance(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "seed": cfg.get("seed", 0), "version": __version__}


def _bits_str(bits) -> str:
    return "".join(map(str, bits))


# --------------------------------------------------------------------------
# commands


def cmd_encrypt(cfg: dict, args, out: Path) -> int:
    params = _scheme_params(cfg)
    key = _key(args, cfg)
    try:
        inputs = [feature_bits(x, cfg["n"]) for x in cfg["inputs"]]
    except ValueError as exc:
        raise ConfigError(f"inputs: {exc}") from exc
    files = []
    for i, x in enumerate(inputs):
        sample = prs.encrypt(x, key, params)
        name = f"sample_{i:04d}.json"
        _write_json(out / name, sample.to_json())
        files.append(name)
    _write_json(out / "result.json", {**_provenance(cfg), "key_fingerprint": key.fingerprint(), "files": files})
    print(key.fingerprint())
    return EXIT_OK


def cmd_invert(cfg: dict, args, out: Path) -> int:
    params = _scheme_params(cfg)
    key = _key(args, cfg)
    rng = np.random.default_rng(cfg.get("seed", 0))
    decoded = []
    for path in cfg["inputs"]:
        try:
            sample = prs.EncryptedSample.from_json(json.loads(Path(path).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read ciphertext {path}: {exc}") from exc
        if sample.scheme is not params.scheme or sample.n != cfg["n"]:
            raise ConfigError(f"{path}: ciphertext scheme/n do not match the config")
        entry: dict[str, Any] = {"input": path}
        try:
            if params.scheme is prs.Scheme.PHASE:
                entry["bits"] = _bits_str(prs.invert_phase(key, sample.state))
            elif params.scheme is prs.Scheme.BASIS:
                entry["bits"] = _bits_str(prs.invert_basis(key, params.T, params.L, sample.state))
            else:
                bits, p = prs.invert_param_phase(key, params.theta, sample.state, rng)
                entry["bits"] = _bits_str(bits)
                entry["per_bit_success_prob"] = p.tolist()
        except prs.NoDecodableIndex as exc:
            entry["bits"] = None
            entry["error"] = str(exc)
        decoded.append(entry)
    _write_json(out / "result.json", {**_provenance(cfg), "key_fingerprint": key.fingerprint(), "decoded": decoded})
    for d in decoded:
        print(d["bits"] if d["bits"] is not None else "NoDecodableIndex")
    return EXIT_OK


def random_params(scheme: str, n: int, rng: np.random.Generator, cfg: dict | None = None) -> prs.SchemeParams:
    cfg = cfg or {}
    if scheme == "ParamPhasePRS":
        theta = cfg.get("theta") or rng.uniform(0.01, 2 * np.pi - 0.01, size=n)
        return prs.SchemeParams.param_phase(theta)
    if scheme == "BasisPRS":
        return prs.SchemeParams.basis(cfg.get("T", 2 * n), cfg.get("L", 4))
    return prs.SchemeParams.phase()


def invariance_sweep(scheme: str, n: int, triples: int, rng: np.random.Generator, cfg: dict | None = None) -> dict:
    deltas, td_deltas = [], []
    for _ in range(triples):
        x = tuple(int(b) for b in rng.integers(0, 2, n))
        x2 = tuple(int(b) for b in rng.integers(0, 2, n))
        k = key_from_rng(rng)
        params = random_params(scheme, n, rng, cfg)
        enc_a, enc_b = prs.encrypt(x, k, params).state, prs.encrypt(x2, k, params).state
        pl_a, pl_b = prs.plain_encode(x, params), prs.plain_encode(x2, params)
        deltas.append(abs(metrics.fidelity(enc_a, enc_b) - metrics.fidelity(pl_a, pl_b)))
        td_deltas.append(abs(metrics.trace_distance_pure(enc_a, enc_b) - metrics.trace_distance_pure(pl_a, pl_b)))
    max_delta = float(max(deltas))
    return {
        "scheme": scheme,
        "n": n,
        "triples": triples,
        "max_delta": max_delta,
        "max_trace_distance_delta": float(max(td_deltas)),
        "tolerance": INVARIANCE_TOL,
        "pass": max_delta <= INVARIANCE_TOL,
    }


def cmd_invariance(cfg: dict, args, out: Path) -> int:
    schemes = ["PhasePRS", "ParamPhasePRS", "BasisPRS"] if cfg["scheme"] == "all" else [cfg["scheme"]]
    rng = np.random.default_rng(cfg.get("seed", 0))
    results = [invariance_sweep(s, cfg["n"], cfg.get("triples", 1000), rng, cfg) for s in schemes]
    ok = all(r["pass"] for r in results)
    _write_json(out / "result.json", {**_provenance(cfg), "results": results, "pass": ok})
    _write_csv(out / "summary.csv", results, ["scheme", "n", "triples", "max_delta", "max_trace_distance_delta", "pass"])
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def cmd_prs_stats(cfg: dict, args, out: Path) -> int:
    n, t = cfg["n"], cfg.get("t", 1)
    num_pairs = cfg.get("num_pairs", 2000)
    d = 1 << n
    rng = np.random.default_rng(cfg.get("seed", 0))
    ens = metrics.phase_prs_ensemble(n)
    est = metrics.cross_moment_estimate(ens, ens, t, num_pairs, rng)
    oracle = metrics.cross_moment_estimate(
        metrics.random_function_ensemble(n), metrics.random_function_ensemble(n), t, num_pairs, rng
    )
    reference = metrics.binary_phase_moment(d, t)
    rows = [
        {"ensemble": "PhasePRS", **est.to_json(reference)},
        {"ensemble": "random_function", **oracle.to_json(reference)},
    ]
    for r in rows:
        r["haar_value"] = metrics.haar_moment(d, t)
        r["pass"] = abs(r["z_score"]) <= 3
    ok = rows[0]["pass"]
    _write_json(out / "result.json", {**_provenance(cfg), "n": n, "t": t, "results": rows, "pass": ok})
    _write_csv(out / "summary.csv", rows, ["ensemble", "t", "mean", "std_error", "num_samples", "reference_value", "z_score", "haar_value", "pass"])
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def _train_config(cfg: dict, params: prs.SchemeParams, dataset, **over) -> gm.TrainConfig:
    fields = {k: cfg[k] for k in ("steps", "batch_size", "learning_rate", "depth", "disc_kind",
                                  "grad_method", "fd_step", "shots", "rekey_per_batch") if k in cfg}
    fields.update(over)
    try:
        return gm.TrainConfig(n=cfg["n"], dataset=dataset, scheme=params, seed=cfg.get("seed", 0), **fields)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_train(cfg: dict, args, out: Path) -> int:
    params = _scheme_params(cfg)
    key = _key(args, cfg)
    tcfg = _train_config(cfg, params, cfg["dataset"], encrypted=cfg.get("encrypted", True))
    history = gm.train(tcfg, key)
    (out / "history.jsonl").write_text("".join(line + "\n" for line in history.iter_jsonl()))
    _write_json(out / "params.json", {
        "generator": history.generator.to_json(),
        "discriminator": history.discriminator.to_json(),
    })
    result = {**_provenance(cfg), "steps": len(history), "key_fingerprint": history.key_fingerprint}
    ok = True
    if tcfg.disc_kind == gm.FIDELITY_DISC and tcfg.encrypted:
        twin = gm.train(gm.plaintext_twin(tcfg), key)
        diffs = [abs(a - b) for ra, rb in zip(history.records, twin.records)
                 for a, b in zip(ra["pair_scores"] + ra["real_pair_scores"],
                                 rb["pair_scores"] + rb["real_pair_scores"])]
        max_diff = max(diffs, default=0.0)
        ok = max_diff <= PIPELINE_TOL
        result["pipeline_invariance"] = {"max_diff": max_diff, "tolerance": PIPELINE_TOL, "pass": ok}
    if history.records:
        last = history.records[-1]
        result["final"] = {k: last[k] for k in ("disc_loss", "gen_loss", "mean_real_score", "mean_fake_score")}
    result["pass"] = ok
    _write_json(out / "result.json", result)
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def cmd_mia(cfg: dict, args, out: Path) -> int:
    params = _scheme_params(cfg)
    seed = cfg.get("seed", 0)
    n = cfg["n"]
    if "pool" in cfg:
        pool = cfg["pool"]
    else:
        pool = mia.synthetic_pool(n, cfg.get("pool_size", min(24, 1 << n)), np.random.default_rng(seed))
    template = _train_config(cfg, params, pool[:1], **{
        "steps": cfg.get("steps", 60), "depth": cfg.get("depth", 2),
        "learning_rate": cfg.get("learning_rate", 0.2)})
    arms = cfg.get("arms", ["encrypted", "plaintext"])
    results, rows, ok = {}, [], True
    for arm in arms:
        try:
            game = mia.MIAGameConfig(
                pool=pool, train_template=template, train_size=cfg.get("train_size", 4),
                trials=cfg.get("trials", 200), seed=seed, encrypted=arm == "encrypted",
                adversary=cfg.get("adversary", "loss_threshold"),
                query_budget=cfg.get("query_budget", 16), query_shots=cfg.get("query_shots", 0),
                reference_queries=cfg.get("reference_queries", 16))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        log.info("running %s arm, %d trials", arm, game.trials)
        transcripts, res = mia.run_game(game, workers=args.workers)
        doc = mia.result_json(game, transcripts, res, cfg.get("include_transcripts", False))
        if arm == "encrypted" and game.adversary == "loss_threshold":
            doc["pass"] = res.ci_contains(0.0)
            ok = ok and doc["pass"]
        results[arm] = doc
        rows.append(mia.csv_summary_row(game, res).splitlines())
    _write_json(out / "result.json", {**_provenance(cfg), "arms": results, "pass": ok})
    with open(out / "summary.csv", "w") as fh:
        fh.write(rows[0][0] + "\n")
        for r in rows:
            fh.write(r[1] + "\n")
    return EXIT_OK if ok else EXIT_ACCEPTANCE


def _write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


COMMANDS = {
    "encrypt": cmd_encrypt,
    "invert": cmd_invert,
    "invariance": cmd_invariance,
    "prs-stats": cmd_prs_stats,
    "train": cmd_train,
    "mia": cmd_mia,
}


# --------------------------------------------------------------------------
# entry point


def load_config(command: str, path: str | None, seed: int | None, output: str | None) -> dict:
    if path is None:
        cfg: dict[str, Any] = {"command": command}
    else:
        try:
            cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg.setdefault("command", command)
    if cfg["command"] != command:
        raise ConfigError(f"config is for command {cfg['command']!r}, not {command!r}")
    if seed is not None:
        cfg["seed"] = seed
    if output is not None:
        cfg["output"] = output
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"schema error at {where}: {exc.message}") from exc
    if "output" not in cfg:
        raise ConfigError("schema error: field 'output' is required (config or --output)")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="prsguard", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--output", help="output directory (overrides the config)")
    p.add_argument("--key", help="trapdoor key as 64 hex characters (default: derived from seed)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.command, args.config, args.seed, args.output)
        out = Path(cfg["output"])
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - exit-code contract
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
