"""
The MIT License (MIT)

Copyright (c) 2025-present pydiffau developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

import argparse
import logging
import math
import platform
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import torch

import pydiffau
from pydiffau.ambisonics import truncate
from pydiffau.baseline import DirectionGrid, cs_upscale, least_norm_upscale
from pydiffau.cascade import LazyPairs, diffau_many, make_pairs, train_block
from pydiffau.config import echo_config, load_config
from pydiffau.constants import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, FOA_ORDER, HOA_ORDER
from pydiffau.dataset import ingest_corpus, load_clip, read_manifest, save_clip, synth_dataset
from pydiffau.enums import Method, Split
from pydiffau.errors import (
    ArgumentError,
    CheckpointConfigMismatch,
    ConfigurationError,
    DatasetError,
    pydiffauException,
)
from pydiffau.evaluation import (
    aggregate,
    emit_energy_grid,
    emit_energy_plot,
    format_report,
    score_directory,
    write_report,
)
from pydiffau.model import load_checkpoint
from pydiffau.utils import atomic_write

_log = logging.getLogger("pydiffau")

# Training sets up to this many clips are transformed once and kept in memory.
IN_MEMORY_CLIPS = 64


def show_version():
    entries = []

    entries.append("- Python v{0.major}.{0.minor}.{0.micro}-{0.releaselevel}".format(sys.version_info))
    entries.append("- pydiffau v{0.major}.{0.minor}.{0.micro}-{0.releaselevel}".format(pydiffau.version_info))
    entries.append(f"- torch v{torch.__version__}")
    entries.append(f"- numpy v{np.__version__}")
    uname = platform.uname()
    entries.append("- system info: {0.system} {0.release} {0.version}".format(uname))
    print("\n".join(entries))


def _progress(args) -> bool:
    return logging.getLogger("pydiffau").getEffectiveLevel() <= logging.INFO and not args.quiet


def _clip_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def cmd_synth_data(args, cfg):
    corpus_dir = args.corpus or cfg.paths.corpus
    out_dir = args.out or cfg.paths.dataset
    if not corpus_dir or not out_dir:
        raise ArgumentError("synth-data needs --corpus and --out (or paths.corpus and paths.dataset)")
    if args.n_clips is not None:
        cfg.dataset.n_clips = args.n_clips
    if args.seed is not None:
        cfg.dataset.seed = args.seed
    cfg.validate()
    corpus = ingest_corpus(corpus_dir, cfg.dataset.sample_rate)
    manifest = synth_dataset(corpus, cfg.dataset, out_dir, jobs=cfg.jobs, progress=_progress(args))
    echo_config(cfg, out_dir)
    summary = manifest.summary()
    print(f"clips: {summary['clips']}")
    for split, count in summary["splits"].items():
        print(f"  {split}: {count}")
    for speakers, count in summary["speaker_counts"].items():
        print(f"  {speakers} speaker(s): {count}")


def _pairs(dataset: Path, entries, block: int, cfg):
    def _load(index: int):
        return load_clip(dataset / entries[index].path, sample_rate=cfg.dataset.sample_rate)

    if len(entries) <= IN_MEMORY_CLIPS:
        return make_pairs([_load(i) for i in range(len(entries))], block, cfg.stft, cfg.amplitude)
    return LazyPairs(_load, len(entries), block, cfg.stft, cfg.amplitude)


def cmd_train(args, cfg):
    dataset_dir = args.dataset or cfg.paths.dataset
    if not dataset_dir:
        raise ArgumentError("train needs --dataset (or paths.dataset)")
    dataset = Path(dataset_dir)
    out = Path(args.out or Path(cfg.paths.checkpoints or ".") / f"block{args.block}.pt")
    training = cfg.training[args.block]
    manifest = read_manifest(dataset)
    train_entries = manifest.split(Split(args.split))
    if args.limit:
        train_entries = train_entries[: args.limit]
    if not train_entries:
        raise DatasetError(f"Dataset {dataset} has no {args.split} clips")
    val_entries = [] if args.split == Split.val.value else manifest.split(Split.val)

    resume = load_checkpoint(args.resume, block_order=args.block) if args.resume else None
    params = train_block(
        _pairs(dataset, train_entries, args.block, cfg),
        training,
        cfg.schedule,
        model=cfg.model[args.block],
        stft_cfg=cfg.stft,
        amplitude=cfg.amplitude,
        validation_pairs=_pairs(dataset, val_entries, args.block, cfg) if val_entries else None,
        resume=resume,
        checkpoint_path=out,
        checkpoint_every=training.validation_every,
        progress=_progress(args),
    )

    log_path = out.with_suffix(".loss.txt")
    with atomic_write(log_path, "w") as fh:
        fh.write("# step loss\n")
        fh.writelines(f"{step} {loss!r}\n" for step, loss in enumerate(params.history, start=1))
        if params.validation:
            fh.write("# step validation_loss\n")
            fh.writelines(f"{int(step)} {loss!r}\n" for step, loss in params.validation)
    echo_config(cfg, out.parent)
    print(f"block {args.block}: {params.step} steps, final loss {params.history[-1]:.4f}" if params.history else "no steps")


def _inputs(args, cfg):
    """(output path, FOA clip) for a single file or for every clip of a dataset split."""
    if args.input:
        foa = load_clip(args.input, order=FOA_ORDER, sample_rate=cfg.dataset.sample_rate)
        return [(Path(args.out), foa)]
    dataset = Path(args.dataset)
    out_dir = Path(args.out)
    items = []
    for entry in read_manifest(dataset).split(Split(args.split)):
        hoa = load_clip(dataset / entry.path, sample_rate=cfg.dataset.sample_rate)
        items.append((out_dir / f"{entry.clip_id}.wav", truncate(hoa, FOA_ORDER)))
    if not items:
        raise DatasetError(f"Dataset {dataset} has no {args.split} clips")
    return items


def _echo_dir(args) -> Path:
    return Path(args.out).parent if args.input else Path(args.out)


def cmd_upscale(args, cfg):
    params_1 = load_checkpoint(args.block1, block_order=1)
    params_2 = load_checkpoint(args.block2, block_order=2)
    items = _inputs(args, cfg)
    seed = cfg.seed if args.seed is None else args.seed
    seeds = [_clip_seed(seed, i) for i in range(len(items))]
    outputs = diffau_many([foa for _, foa in items], params_1, params_2, cfg.sampler, seeds, jobs=cfg.jobs)
    for (path, _), hoa in zip(items, outputs):
        save_clip(hoa, path)
    echo_config(cfg, _echo_dir(args))
    print(f"upscaled {len(items)} clip(s) to order {HOA_ORDER}")


def cmd_baseline(args, cfg):
    method = Method(args.method)
    grid = DirectionGrid.fibonacci(cfg.baseline.grid_size)
    items = _inputs(args, cfg)
    for path, foa in items:
        if method is Method.least_norm:
            hoa = least_norm_upscale(foa, grid)
        else:
            hoa = cs_upscale(foa, grid, cfg.baseline, cfg.stft, jobs=cfg.jobs)
        save_clip(hoa, path)
    echo_config(cfg, _echo_dir(args))
    print(f"{method.value}: upscaled {len(items)} clip(s) to order {HOA_ORDER}")


def _named(spec: str):
    name, sep, path = spec.partition("=")
    if not sep:
        return Path(spec).name, Path(spec)
    return name, Path(path)


def cmd_eval(args, cfg):
    dataset = Path(args.dataset)
    manifest = read_manifest(dataset)
    split = Split(args.split)
    scores = {}
    for spec in args.estimates:
        name, path = _named(spec)
        scores[name] = score_directory(path, dataset, manifest, cfg.stft, split=split, jobs=cfg.jobs)
    report = aggregate(scores, manifest, split=split)
    write_report(report, args.out, references=not args.no_references)
    echo_config(cfg, args.out)
    print(format_report(report, references=not args.no_references), end="")


def cmd_plot_energy(args, cfg):
    sig = load_clip(args.clip)
    az_step, col_step = math.radians(args.az_step), math.radians(args.col_step)
    image, table = emit_energy_plot(sig, args.out, az_step=az_step, col_step=col_step, title=Path(args.clip).stem)
    print(f"wrote {image} and {table}")
    if args.compare:
        estimate = load_clip(args.compare, order=sig.order, sample_rate=sig.sample_rate)
        out = Path(args.out)
        grid = emit_energy_grid([(Path(args.clip).stem, sig)], [estimate], out.with_name(out.stem + "-orders.png"))
        print(f"wrote {grid}")
    echo_config(cfg, Path(args.out).parent)


def core(args):
    if args.version:
        show_version()
        return EXIT_OK
    if args.command is None:
        print("Nothing to do. Run `python3 -m pydiffau --help` for the list of commands.")
        return EXIT_USAGE
    cfg = load_config(args.config, args.overrides)
    if args.jobs is not None:
        cfg.jobs = args.jobs
    cfg.validate()
    args.func(args, cfg)
    return EXIT_OK


def _add_io(parser: argparse.ArgumentParser, noun: str) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="first-order WAV file (4 channels)")
    source.add_argument("--dataset", help=f"dataset directory; {noun} every clip of --split")
    parser.add_argument("--split", default=Split.test.value, choices=[s.value for s in Split])
    parser.add_argument("--out", required=True, help="output WAV file, or directory with --dataset")


def build_parser() -> argparse.ArgumentParser:
    argparser = argparse.ArgumentParser(prog="pydiffau", description="Ambisonics upscaling with cascaded diffusion")
    argparser.add_argument("--version", action="store_true", help="shows the library version info")
    argparser.add_argument("--config", help="YAML run configuration (default: $PYDIFFAU_CONFIG)")
    argparser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a setting"
    )
    argparser.add_argument("--jobs", type=int, help="worker threads, 0 for one per CPU")
    verbosity = argparser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    argparser.set_defaults(command=None, func=None)
    sub = argparser.add_subparsers(dest="command")

    p = sub.add_parser("synth-data", help="synthesize a multi-speaker Ambisonics dataset from a mono corpus")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--n-clips", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", help="train the score model of one upscaling block")
    p.add_argument("--dataset")
    p.add_argument("--block", type=int, choices=(1, 2), required=True)
    p.add_argument("--out", help="checkpoint file")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--split", default=Split.train.value, choices=[s.value for s in Split])
    p.add_argument("--limit", type=int, help="train on the first LIMIT clips of the split only")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("upscale", help="upscale first-order Ambisonics to third order with both blocks")
    _add_io(p, "upscale")
    p.add_argument("--block1", required=True, help="block 1 checkpoint")
    p.add_argument("--block2", required=True, help="block 2 checkpoint")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_upscale)

    p = sub.add_parser("baseline", help="upscale with the plane-wave decomposition baseline")
    _add_io(p, "upscale")
    p.add_argument("--method", default=Method.pwd_cs.value, choices=[Method.pwd_cs.value, Method.least_norm.value])
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="score estimates against a dataset and write the report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--estimates", action="append", required=True, metavar="[NAME=]DIR")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--split", default=Split.test.value, choices=[s.value for s in Split])
    p.add_argument("--no-references", action="store_true", help="leave out the published figures")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot-energy", help="directional energy map of a clip")
    p.add_argument("--clip", required=True)
    p.add_argument("--out", required=True, help="image file, the table goes next to it")
    p.add_argument("--compare", help="third-order estimate of the same clip for a per-order comparison")
    p.add_argument("--az-step", type=float, default=2.0, help="azimuth step in degrees")
    p.add_argument("--col-step", type=float, default=2.0, help="colatitude step in degrees")
    p.set_defaults(func=cmd_plot_energy)
    return argparser


def parse_args(argv: Optional[Sequence[str]] = None):
    return build_parser().parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return core(args)
    except (ArgumentError, ConfigurationError, CheckpointConfigMismatch, DatasetError) as e:
        _log.error("%s", e)
        return EXIT_USAGE
    except (pydiffauException, OSError, RuntimeError) as e:
        _log.error("%s", e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
