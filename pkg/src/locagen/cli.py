"""``locagen`` command line.

Subcommands::

    simulate   write a labeled TDOA dataset (CSV)
    train      fit an rf or mlp corrector on the training split
    eval       model vs multilateration baseline on the validation split
    locate     localize one event from audio, TDOAs or a dataset row
    offsets    sampling-offset experiment: raw table plus two ANOVAs
    synth      write a 3-channel WAVE recording of a simulated source

Settings come from ``--config FILE`` (INI) and ``--set section.key=value``;
dedicated flags such as ``--n`` or ``--seed`` are shorthands for ``--set``.
Later sources win: defaults < file < flags.

Audio channels are assumed to be sample-synchronized; channel order is the
microphone order of the configured geometry (reference first).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import audio, dataset, dsp
from .config import ConfigError, keys_help, load_config
from .evaluate import evaluate
from .geometry import GeometryError, SourcePosition
from .locate import LocateError, localize_pipeline
from .models import ModelFormatError, TrainingError, load_model, save_model, train_mlp, train_rf
from .simulate import run_batch, run_offset_experiment, synthesize_channels
from .stats import offset_anova

__all__ = ["main", "build_parser"]

_ERRORS = (ConfigError, dataset.DatasetFormatError, ModelFormatError, audio.AudioError,
           dsp.DspError, LocateError, GeometryError, TrainingError, OSError, ValueError)


def _config(args):
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"{item}: --set expects section.key=value")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for flag, key in getattr(args, "_shorthands", {}).items():
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = str(v)
    return load_config(args.config, overrides)


def _write(path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_simulate(args, cfg) -> int:
    sim = cfg.sim_config()
    obs = run_batch(sim, cfg["simulation.n"], cfg["simulation.radius"], args.threads)
    data = dataset.from_observations(obs, sim.geometry)
    dataset.save(data, args.out)
    print(f"n={len(data)}\nseed={sim.master_seed}\nspacing_m={cfg['geometry.spacing']!r}\n"
          f"sample_rate_hz={sim.sample_rate!r}\nmode={sim.mode}\n"
          f"dataset_fingerprint={data.fingerprint()}")
    return 0


def _splits(cfg, path):
    data = dataset.load(path)
    if len(data) < 4:
        raise ConfigError(f"{path}: dataset needs at least 4 rows, has {len(data)}")
    return dataset.split(data, cfg["split.fraction"], cfg["split.seed"])


def cmd_train(args, cfg) -> int:
    parts = _splits(cfg, args.data)
    if args.kind == "rf":
        model = train_rf(parts.train, cfg.forest_params(), cfg["rf.n_bins"], args.threads)
    else:
        model = train_mlp(parts.train, cfg.mlp_params(), cfg["mlp.target"])
    model.metadata["split_seed"] = cfg["split.seed"]
    model.metadata["split_fraction"] = cfg["split.fraction"]
    save_model(model, args.out)
    print(f"kind={model.kind}\nn_train={len(parts.train)}\nfingerprint={model.fingerprint()}")
    return 0


def cmd_eval(args, cfg) -> int:
    model = load_model(args.model)
    if args.all_rows:
        rows = dataset.load(args.data)
    else:
        rows = _splits(cfg, args.data).validation
    rep = evaluate(model, rows, cfg.geometry(), cfg.medium(), cfg["locate.radius_bound"],
                   cfg["report.hist_width"])
    text = rep.summary_text()
    if args.out_prefix:
        _write(f"{args.out_prefix}_summary.txt", text)
        _write(f"{args.out_prefix}_histogram.csv", rep.histogram_csv())
        _write(f"{args.out_prefix}_cdf.csv", rep.cdf_csv())
    sys.stdout.write(text)
    return 0


def _waveforms(args, cfg):
    if args.audio:
        rec = audio.read_wav(args.audio)
    else:
        rec = audio.read_mono_files(args.mono)
    waves = rec.waveforms()
    if args.resample:
        waves = [dsp.resample(w, args.resample) for w in waves]
    return waves


def cmd_locate(args, cfg) -> int:
    model = load_model(args.model) if args.model else None
    common = dict(model=model, radius_bound=cfg["locate.radius_bound"])
    geo, med = cfg.geometry(), cfg.medium()
    if args.audio or args.mono:
        est = localize_pipeline(geo, med, waveforms=_waveforms(args, cfg),
                                interpolation=args.interpolation, **common)
    elif args.tdoa:
        est = localize_pipeline(geo, med, tdoa=tuple(args.tdoa), **common)
    else:
        data = dataset.load(args.data)
        if not 0 <= args.row < len(data):
            raise ConfigError(f"--row: {args.row} out of range for {len(data)} rows")
        r = data[args.row]
        est = localize_pipeline(geo, med, tdoa=(r.tau21, r.tau31), **common)
    sys.stdout.write(est.to_text())
    return 0


def cmd_offsets(args, cfg) -> int:
    table = run_offset_experiment(cfg.sim_config(), cfg["offsets.n"], cfg["offsets.levels"],
                                  cfg["simulation.radius"], cfg["locate.radius_bound"])
    keys = list(table)
    lines = [",".join(keys)]
    for i in range(len(table["index"])):
        lines.append(",".join(str(int(table[k][i])) if k == "index"
                              else format(float(table[k][i]), ".17g") for k in keys))
    _write(args.out, "\n".join(lines) + "\n")
    a2, a3 = offset_anova(table)
    text = a2.to_text("offset2.") + a3.to_text("offset3.")
    if args.report:
        _write(args.report, text)
    sys.stdout.write(text)
    return 0


def cmd_synth(args, cfg) -> int:
    sim = cfg.sim_config()
    src = SourcePosition(args.x, args.y)
    chans = synthesize_channels(sim, sim.geometry, src, args.index)
    peak = max(float(np.max(np.abs(c.samples))) for c in chans)
    scale = 0.9 / peak if peak > 0 else 1.0
    audio.write_wav(args.out, [c.samples * scale for c in chans], sim.sample_rate, args.format)
    print(f"x_m={src.x!r}\ny_m={src.y!r}\nazimuth_deg={src.azimuth(sim.geometry)!r}\n"
          f"sample_rate_hz={sim.sample_rate!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    epilog = keys_help()
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(prog="locagen", description=__doc__, epilog=epilog,
                                formatter_class=fmt)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [section] key = value entries")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, shorthands):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_,
                            epilog=epilog, formatter_class=fmt)
        for flag, (key, typ) in shorthands.items():
            sp.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=typ,
                            help=f"shorthand for --set {key}=...")
        sp.set_defaults(func=func, _shorthands={f: k for f, (k, _) in shorthands.items()})
        return sp

    sim_flags = {"n": ("simulation.n", int), "seed": ("simulation.seed", int),
                 "fs": ("sampling.sample_rate", float), "mode": ("simulation.mode", str)}
    sp = add("simulate", cmd_simulate, "write a labeled TDOA dataset", sim_flags)
    sp.add_argument("--out", required=True, help="dataset CSV to write")

    sp = add("train", cmd_train, "fit a corrector on the training split",
             {"epochs": ("mlp.epochs", int), "n_trees": ("rf.n_trees", int),
              "n_bins": ("rf.n_bins", int)})
    sp.add_argument("--data", required=True)
    sp.add_argument("--kind", choices=("rf", "mlp"), required=True)
    sp.add_argument("--out", required=True, help="model file to write")

    sp = add("eval", cmd_eval, "compare a model with the multilateration baseline", {})
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--all-rows", action="store_true",
                    help="evaluate every row instead of the validation split")
    sp.add_argument("--out-prefix",
                    help="also write PREFIX_summary.txt, PREFIX_histogram.csv, PREFIX_cdf.csv")

    sp = add("locate", cmd_locate, "localize one event", {})
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--audio", help="3-channel WAVE file (16-bit PCM or 32-bit float)")
    src.add_argument("--mono", nargs=3, metavar="WAV", help="one synchronized mono file per mic")
    src.add_argument("--tdoa", nargs=2, type=float, metavar=("TAU21", "TAU31"), help="seconds")
    src.add_argument("--data", help="dataset CSV; use with --row")
    sp.add_argument("--row", type=int, default=0)
    sp.add_argument("--model", help="optional corrector model file")
    sp.add_argument("--resample", type=float, metavar="HZ", help="resample audio before GCC-PHAT")
    sp.add_argument("--interpolation", choices=("none", "parabolic"), default="parabolic")

    sp = add("offsets", cmd_offsets, "sampling-offset experiment with ANOVA",
             {"n": ("offsets.n", int), "seed": ("simulation.seed", int),
              "fs": ("sampling.sample_rate", float)})
    sp.add_argument("--out", required=True, help="raw table CSV to write")
    sp.add_argument("--report", help="also write the ANOVA key-value text here")

    sp = add("synth", cmd_synth, "write a 3-channel recording of a simulated source",
             {"fs": ("sampling.sample_rate", float), "seed": ("simulation.seed", int)})
    sp.add_argument("--x", type=float, required=True, help="source x, m")
    sp.add_argument("--y", type=float, required=True, help="source y, m")
    sp.add_argument("--index", type=int, default=0, help="sample index selecting the noise stream")
    sp.add_argument("--format", choices=("pcm16", "float32"), default="float32")
    sp.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads: must be at least 1")
        cfg = _config(args)
        return args.func(args, cfg)
    except _ERRORS as e:
        print(f"locagen {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
