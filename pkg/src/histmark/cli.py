"""``histmark`` command line: embed, extract, attack, sweep."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

from histmark import attacks, bench, codec, metrics
from histmark import pipeline as pl
from histmark.areas import InsufficientAreasError, areas_to_csv
from histmark.corpus import CORPUS_ENV, load_corpus
from histmark.daisy import select_points
from histmark.image import ImageError, load_image, save_image


class CliError(Exception):
    pass


def _read_text(path, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {what} {path}: {exc.strerror or exc}") from None


def _load_config(args) -> pl.PipelineConfig:
    cfg = pl.PipelineConfig()
    sidecar = getattr(args, "sidecar", None)
    if sidecar:
        try:
            cfg = pl.PipelineConfig.from_dict(json.loads(_read_text(sidecar, "sidecar"))["config"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise CliError(f"bad sidecar {sidecar}: {exc}") from None
    if args.config:
        try:
            cfg = pl.PipelineConfig.from_json(_read_text(args.config, "config"))
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise CliError(f"bad config {args.config}: {exc}") from None
    if args.seed is not None:
        try:
            cfg = cfg.with_seed(bytes.fromhex(args.seed))
        except ValueError:
            raise CliError(f"--seed must be hex, got {args.seed!r}") from None
    if getattr(args, "strength", None) is not None:
        cfg = replace(cfg, S=args.strength)
    return cfg


def _parse_bits(text: str):
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise CliError(f"bits must be a string of 0/1, got {text!r}")
    return [int(c) for c in text]


def _bits_str(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def _load(path):
    try:
        return load_image(path)
    except ImageError as exc:
        raise CliError(str(exc)) from None


def _write(path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}") from None


def cmd_embed(args) -> int:
    img = _load(args.input)
    cfg = _load_config(args)
    cfg = replace(cfg, reference_dims=tuple(img.shape))
    if args.bits is not None:
        bits = _parse_bits(args.bits)
        if len(bits) != cfg.payload_bits:
            raise CliError(f"--bits needs {cfg.payload_bits} bits, got {len(bits)}")
    else:
        bits = pl.random_bits(cfg.payload_bits, args.payload_seed)
    out = pl.embed(img, bits, cfg, verify=not args.no_verify)
    try:
        save_image(args.output, out.image)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot write {args.output}: {exc}") from None
    sidecar = {
        "config": cfg.to_dict(),
        "bits": _bits_str(bits),
        "areas": [asdict(a) for a in out.areas],
        "reports": [asdict(r) for r in out.reports],
        "psnr": out.psnr,
        "ssim": out.ssim,
        "max_abs_diff": int(abs(out.image.astype(int) - img.astype(int)).max()),
    }
    _write(args.sidecar or f"{args.output}.json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    if args.report:
        _write(args.report, codec.reports_to_csv(out.reports))
    if args.debug_dir:
        d = Path(args.debug_dir)
        d.mkdir(parents=True, exist_ok=True)
        select_points(pl._ranked_points(img, cfg), cfg.area.keep_fraction).to_csv(d / "points.csv")
        areas_to_csv(out.areas, d / "areas.csv")
    print(f"psnr {out.psnr:.4f} ssim {out.ssim:.6f}")
    return 0


def cmd_extract(args) -> int:
    img = _load(args.input)
    cfg = _load_config(args)
    res = pl.extract(img, cfg)
    print(_bits_str(res.bits))
    expected = args.expected
    if expected is None and args.sidecar:
        expected = json.loads(_read_text(args.sidecar, "sidecar")).get("bits")
    if expected is not None:
        want = _parse_bits(expected)
        if len(want) != len(res.bits):
            raise CliError(f"--expected has {len(want)} bits, extracted {len(res.bits)}")
        print(f"ber {metrics.ber(want, res.bits):.6g}")
    return 0


def _attack_spec(args) -> attacks.Attack:
    if args.attack_json:
        return attacks.from_json(_read_text(args.attack_json, "attack spec"))
    if not args.attack:
        raise CliError("need --attack or --attack-json")
    return attacks.parse(args.attack)


def cmd_attack(args) -> int:
    img = _load(args.input)
    out = _attack_spec(args).apply(img)
    try:
        save_image(args.output, out)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot write {args.output}: {exc}") from None
    return 0


def _floats(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    names = args.images.split(",") if args.images else None
    images = load_corpus(names)
    if not images:
        raise CliError(f"empty corpus (check {CORPUS_ENV} and --images)")
    common = dict(
        strengths=_floats(args.strengths),
        images=images,
        trials=args.trials,
        seed=args.trial_seed,
        config=cfg,
    )
    if args.table1:
        spec = bench.SweepSpec(attacks=[s for _, s, _ in bench.TABLE1], **common)
    elif args.params:
        if len(args.attack) != 1:
            raise CliError("--params needs exactly one --attack family")
        spec = bench.SweepSpec.grid(args.attack[0], _floats(args.params), **common)
    elif args.attack:
        spec = bench.SweepSpec(attacks=args.attack, **common)
    else:
        raise CliError("need --attack, --params or --table1")
    rows = bench.run_sweep(spec, workers=args.workers)
    _write(args.out, bench.rows_to_csv(rows))
    if args.aggregate:
        _write(args.aggregate, bench.aggregate_to_csv(bench.aggregate(rows)))
    print(f"{len(rows)} rows -> {args.out}")
    return 0


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--seed", help="master seed, hex encoded (overrides the config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="histmark", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="watermark an image")
    p.add_argument("input")
    p.add_argument("output")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--bits", help="payload as a 0/1 string")
    g.add_argument("--payload-seed", type=int, default=0, help="draw a random payload from this seed")
    _common(p)
    p.add_argument("--strength", type=float, help="watermark strength S")
    p.add_argument("--sidecar", help="sidecar JSON path (default: OUTPUT.json)")
    p.add_argument("--report", help="write per-group shift reports as CSV")
    p.add_argument("--debug-dir", help="write points.csv and areas.csv here")
    p.add_argument("--no-verify", action="store_true", help="skip the read-back check")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="read the watermark blind")
    p.add_argument("input")
    _common(p)
    p.add_argument("--sidecar", help="take config (and expected bits) from an embed sidecar")
    p.add_argument("--expected", help="compare against these bits and print the BER")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("attack", help="apply one distortion")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--attack", help="family:key=value,...")
    p.add_argument("--attack-json", help="attack spec as a JSON file")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("sweep", help="robustness sweep over the corpus")
    p.add_argument("--attack", action="append", default=[], help="attack spec; repeatable")
    p.add_argument("--params", help="comma-separated values of the family's main parameter")
    p.add_argument("--table1", action="store_true", help="run the reference robustness table")
    p.add_argument("--strengths", default="6", help="comma-separated S values")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--trial-seed", type=int, default=0, help="base seed for payloads and attack noise")
    p.add_argument("--images", help="comma-separated corpus names (default: all)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="per-trial CSV")
    p.add_argument("--aggregate", help="aggregate CSV")
    _common(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ImageError, attacks.AttackError, InsufficientAreasError, ValueError) as exc:
        print(f"histmark {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
