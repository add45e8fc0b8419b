"""Command-line surface: synth | precompute | transform | bench | compare.

Exit codes: 0 success, 2 configuration error, 3 runtime/shape error.
Options may come from a JSON config file (--config); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .errors import ConfigError, DualVtError
from .fusion import fuse_and_finalize, make_seeded_weights, run_pipeline
from .geometry import BevGridSpec, HeightSet, make_height_samples
from .height_stream import INTERP, ROUND, ht_transform_fast, ht_transform_naive, precompute_ht_table
from .lift_stream import DEPTH_MASK, DEPTH_ONLY, lss_pool, precompute_lss_table
from .nnops import WeightBundle
from .report import diff_directories, summarize_outputs
from .sampling import DepthBinSpec
from .synth import SceneSpec, generate_scene, load_bundle, save_bundle
from .tables import HT_MAGIC, LSS_MAGIC, read_table, write_table
from .tensors import tensor_write

DEFAULT_WEIGHT_SEED = 11


@dataclass
class RunConfig:
    """Options shared by transform and bench, merged config-file-then-flags."""

    threads: int = 1
    weight_seed: int = DEFAULT_WEIGHT_SEED
    weights_dir: str | None = None
    weight_mode: str = DEPTH_MASK
    sampler: str = "fast"
    force_affinity: float | None = None
    disable_mask: bool = False
    uniform_depth: bool = False
    reps: int = 10
    warmup: int = 2

    @classmethod
    def merge(cls, args) -> "RunConfig":
        cfg = cls()
        if getattr(args, "config", None):
            try:
                doc = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read config {args.config}: {e}") from e
            for key, value in doc.items():
                if not hasattr(cfg, key):
                    raise ConfigError(f"unknown config key {key!r}")
                setattr(cfg, key, value)
        for key in vars(cfg):
            flag = getattr(args, key, None)
            if flag is not None:
                setattr(cfg, key, flag)
        for ablate in getattr(args, "ablate", None) or []:
            if ablate == "disable-M":
                cfg.disable_mask = True
            elif ablate == "uniform-D":
                cfg.uniform_depth = True
            elif ablate.startswith("force-A="):
                cfg.force_affinity = float(ablate.split("=", 1)[1])
            else:
                raise ConfigError(f"unknown ablation {ablate!r}")
        if cfg.threads < 1:
            raise ConfigError("threads must be >= 1")
        if cfg.weight_mode not in (DEPTH_MASK, DEPTH_ONLY):
            raise ConfigError(f"unknown weight mode {cfg.weight_mode!r}")
        if cfg.sampler not in ("fast", "naive-interp", "naive-round"):
            raise ConfigError(f"unknown sampler {cfg.sampler!r}")
        if cfg.reps < 3:
            raise ConfigError("bench repetitions must be >= 3")
        return cfg


def _load_scene_spec(path) -> tuple:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read scene spec {path}: {e}") from e
    grid = BevGridSpec.from_json(doc["grid"]) if "grid" in doc else BevGridSpec()
    dspec = DepthBinSpec.from_json(doc["dspec"]) if "dspec" in doc else DepthBinSpec()
    fields = {k: v for k, v in doc.items() if k not in ("grid", "dspec")}
    try:
        spec = SceneSpec.from_json(fields)
    except TypeError as e:
        raise ConfigError(f"bad scene spec: {e}") from e
    return spec, grid, dspec


def cmd_synth(args) -> int:
    spec, grid, dspec = _load_scene_spec(args.spec)
    bundle = generate_scene(spec, grid, dspec)
    save_bundle(bundle, args.out)
    print(f"wrote scene with {len(bundle.rigs)} cameras to {args.out}")
    return 0


def _parse_heights(text: str):
    if text == "multires":
        return make_height_samples("multires")
    if text.startswith("uniform:"):
        return make_height_samples("uniform", n=int(text.split(":", 1)[1]))
    raise ConfigError(f"heights must be 'multires' or 'uniform:N', got {text!r}")


def cmd_precompute(args) -> int:
    bundle = load_bundle(args.scene)
    heights = _parse_heights(args.heights)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ht = precompute_ht_table(bundle.rigs, bundle.grid, heights, bundle.dspec)
    lss = precompute_lss_table(bundle.rigs, bundle.grid, bundle.dspec)
    write_table(ht, out / "ht_table.htlt")
    write_table(lss, out / "lss_table.lspt")
    meta = {
        "heights": {"mode": heights.mode, "z_values": list(heights.z_values)},
        "grid": bundle.grid.to_json(),
        "dspec": bundle.dspec.to_json(),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2))
    for name, table in (("ht", ht), ("lss", lss)):
        if table.n_entries == 0:
            print(f"warning: {name} table is empty (no points in view)", file=sys.stderr)
    print(f"ht table: {ht.n_entries} entries, lss table: {lss.n_entries} entries")
    return 0


def _heights_from_meta(meta: dict):
    doc = meta["heights"]
    return HeightSet(tuple(doc["z_values"]), mode=doc["mode"])


def _load_run_inputs(args, cfg: RunConfig):
    bundle = load_bundle(args.scene)
    tables = Path(args.tables)
    ht_table = read_table(tables / "ht_table.htlt", HT_MAGIC)
    lss_table = read_table(tables / "lss_table.lspt", LSS_MAGIC)
    meta = json.loads((tables / "meta.json").read_text())
    if cfg.weights_dir:
        weights = WeightBundle.load(cfg.weights_dir)
    else:
        weights = make_seeded_weights(cfg.weight_seed, bundle.spec.channels)
    return bundle, ht_table, lss_table, meta, weights


def _transform(bundle, ht_table, lss_table, meta, weights, cfg: RunConfig):
    feats, depths, masks = bundle.feats, bundle.depths, bundle.masks
    if cfg.sampler == "fast":
        return run_pipeline(
            feats, depths, masks, ht_table, lss_table, weights,
            threads=cfg.threads, weight_mode=cfg.weight_mode,
            force_affinity=cfg.force_affinity,
            disable_mask=cfg.disable_mask, uniform_depth=cfg.uniform_depth,
        )
    if cfg.disable_mask:
        masks = [np.ones_like(m) for m in masks]
    if cfg.uniform_depth:
        depths = [np.full_like(d, 1.0 / d.shape[0]) for d in depths]
    heights = _heights_from_meta(meta)
    mode = INTERP if cfg.sampler == "naive-interp" else ROUND
    f_ht = ht_transform_naive(
        feats, depths, masks, bundle.rigs, bundle.grid, heights, bundle.dspec, mode=mode
    )
    f_lss = lss_pool(feats, depths, masks, lss_table, mode=cfg.weight_mode, threads=cfg.threads)
    return fuse_and_finalize(f_lss, f_ht, weights, force_affinity=cfg.force_affinity)


def cmd_transform(args) -> int:
    cfg = RunConfig.merge(args)
    bundle, ht_table, lss_table, meta, weights = _load_run_inputs(args, cfg)
    result = _transform(bundle, ht_table, lss_table, meta, weights, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    arrays = {
        "F": result.f_final, "P": result.p_bev,
        "F_ht": result.f_ht, "F_lss": result.f_lss,
        "F_channel": result.f_channel, "A": result.affinity,
    }
    for name, arr in arrays.items():
        tensor_write(arr, out / f"{name}.btsr")
    summary = summarize_outputs(arrays, gt_bev=bundle.gt_bev)
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    occ = summary.get("occupancy", {})
    print(
        f"F shape {result.f_final.shape}, occupied/empty energy "
        f"{occ.get('occupied_mean_energy', 0):.4g}/{occ.get('empty_mean_energy', 0):.4g}"
    )
    return 0


def cmd_bench(args) -> int:
    cfg = RunConfig.merge(args)
    bundle, ht_table, lss_table, meta, weights = _load_run_inputs(args, cfg)
    feats, depths, masks = bundle.feats, bundle.depths, bundle.masks
    heights = _heights_from_meta(meta)

    if cfg.threads > 1:
        seq = ht_transform_fast(feats, depths, masks, ht_table, threads=1)
        par = ht_transform_fast(feats, depths, masks, ht_table, threads=cfg.threads)
        if not np.array_equal(seq, par):
            raise DualVtError("threaded scatter-sum is not bitwise equal to sequential")

    cases = {
        "ht_naive_interp": lambda: ht_transform_naive(
            feats, depths, masks, bundle.rigs, bundle.grid, heights, bundle.dspec, mode=INTERP
        ),
        "ht_fast": lambda: ht_transform_fast(
            feats, depths, masks, ht_table, threads=cfg.threads
        ),
        "lss_pool": lambda: lss_pool(
            feats, depths, masks, lss_table, mode=cfg.weight_mode, threads=cfg.threads
        ),
        "full_pipeline": lambda: run_pipeline(
            feats, depths, masks, ht_table, lss_table, weights,
            threads=cfg.threads, weight_mode=cfg.weight_mode,
        ),
    }
    results = bench_mod.run_suite(cases, cfg.reps, cfg.warmup)
    results["speedup_fast_vs_interp"] = (
        results["ht_naive_interp"]["median_ms"] / results["ht_fast"]["median_ms"]
    )
    print(bench_mod.render_table({k: v for k, v in results.items() if isinstance(v, dict)}))
    print(f"fast vs naive-interp speedup: {results['speedup_fast_vs_interp']:.1f}x")
    if args.out:
        Path(args.out).write_text(json.dumps(results, indent=2))
    return 0


def cmd_compare(args) -> int:
    report = diff_directories(args.baseline, args.variant)
    for name, entry in report["files"].items():
        if "error" in entry:
            print(f"{name}: {entry['error']}")
        else:
            print(
                f"{name}: max_abs_diff={entry['max_abs_diff']:.6g} "
                f"rel_l2={entry['rel_l2']:.6g} bitwise={entry['bitwise_equal']}"
            )
    print(f"overall max_abs_diff: {report['max_abs_diff']:.6g}")
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualvt", description="Dual-stream camera-to-BEV view transformation toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene bundle")
    p.add_argument("--spec", required=True, help="scene spec JSON")
    p.add_argument("--out", required=True, help="output scene directory")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("precompute", help="build the lookup tables for a scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--heights", default="multires", help="'multires' or 'uniform:N'")
    p.set_defaults(fn=cmd_precompute)

    for name, fn in (("transform", cmd_transform), ("bench", cmd_bench)):
        p = sub.add_parser(name)
        p.add_argument("--scene", required=True)
        p.add_argument("--tables", required=True)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--threads", type=int)
        p.add_argument("--weight-seed", dest="weight_seed", type=int)
        p.add_argument("--weights", dest="weights_dir")
        p.add_argument("--weight-mode", dest="weight_mode", choices=[DEPTH_MASK, DEPTH_ONLY])
        if name == "transform":
            p.add_argument("--out", required=True)
            p.add_argument("--sampler", choices=["fast", "naive-interp", "naive-round"])
            p.add_argument(
                "--ablate", action="append",
                help="repeatable: disable-M | uniform-D | force-A=<value>",
            )
        else:
            p.add_argument("--out", help="write JSON results here")
            p.add_argument("--reps", type=int)
            p.add_argument("--warmup", type=int)
        p.set_defaults(fn=fn)

    p = sub.add_parser("compare", help="diff two transform output directories")
    p.add_argument("baseline")
    p.add_argument("variant")
    p.add_argument("--out", help="write JSON report here")
    p.set_defaults(fn=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DualVtError, OSError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
