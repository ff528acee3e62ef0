"""Command-line interface: the pipeline as reproducible, scriptable steps.

Data goes to files (or stdout only when ``-o -`` is passed); logs go to
stderr. Every output embeds the effective config, seed, and version. Errors
leave as one machine-parseable JSON object on stderr with a nonzero exit.
"""

from __future__ import annotations

import argparse
import json
import os
import pathlib
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .metrics import corpus_metrics, scene_piou, scene_por
from .palette import Palette, default_fine_palette, default_house_palette, load_palette
from .perception import detect_objects, detections_from_json, detections_to_json, segment_rooms
from .raster import load_png, rasterize_floorplan, rasterize_layout, save_png
from .scene import Scene, load_scene, save_scene, validate_scene
from .scenegraph import AssetDatabase, build_scene_graph, export_graph_json, export_svg, make_demo_asset_database
from .toygen import ToyConfig, generate_toy_corpus, load_toy_config
from .diffusion import (
    TinyUNetDenoiser,
    TrainConfig,
    load_checkpoint,
    make_schedule,
    ood_score,
    sample,
    save_checkpoint,
    train,
)

CONFIG_ENV_VAR = "ROOMSYNTH_CONFIG"


@dataclass(frozen=True)
class RunConfig:
    palette: str = ""  # path; empty = stock house palette
    fine_palette: bool = False  # use the stock fine-grained palette instead
    canvas: int = 256
    margin: int = 8
    wall_thickness: float = 24.0
    schedule_kind: str = "linear"
    schedule_T: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 0.02
    seed: int = 0
    threads: int = 1

    def to_text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))


def _load_run_config(path) -> dict:
    updates = {}
    known = {f.name: f.type for f in fields(RunConfig)}
    defaults = RunConfig()
    for lineno, raw in enumerate(pathlib.Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown key '{key}'")
        current = getattr(defaults, key)
        if isinstance(current, bool):
            updates[key] = value.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            updates[key] = int(value)
        elif isinstance(current, float):
            updates[key] = float(value)
        else:
            updates[key] = value
    return updates


class CliError(Exception):
    pass


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _meta(config: RunConfig, **extra) -> dict:
    out = {"tool": "roomsynth", "version": __version__, "seed": config.seed, "config": {f.name: getattr(config, f.name) for f in fields(config)}}
    out.update(extra)
    return out


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        pathlib.Path(path).write_text(text, encoding="utf-8")
        _log(f"wrote {path}")


def _palette_for(config: RunConfig) -> Palette:
    if config.palette:
        return load_palette(config.palette)
    return default_fine_palette() if config.fine_palette else default_house_palette()


def _schedule_for(config: RunConfig):
    return make_schedule(config.schedule_kind, config.schedule_T, config.beta_start, config.beta_end)


def _scene_paths(args_scenes: list[str]) -> list[pathlib.Path]:
    paths: list[pathlib.Path] = []
    for raw in args_scenes:
        p = pathlib.Path(raw)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.json")))
        else:
            paths.append(p)
    if not paths:
        raise CliError("no scene files given")
    return paths


def _map_ordered(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --- subcommands ---


def cmd_validate(args, config: RunConfig) -> int:
    palette = _palette_for(config)
    paths = _scene_paths(args.scenes)
    known = set(palette.names())
    reports = _map_ordered(lambda p: validate_scene(load_scene(p), known), paths, config.threads)
    payload = {
        "meta": _meta(config),
        "scenes": [
            {"path": str(p), "ok": r.ok, "violations": [v.__dict__ for v in r.violations]}
            for p, r in zip(paths, reports)
        ],
    }
    _write_text(args.output, json.dumps(payload, indent=2))
    bad = sum(0 if r.ok else 1 for r in reports)
    _log(f"validated {len(reports)} scene(s); {bad} with violations")
    return 0


def cmd_stats(args, config: RunConfig) -> int:
    paths = _scene_paths(args.scenes)
    scenes = _map_ordered(load_scene, paths, config.threads)
    agg = corpus_metrics(scenes)
    payload = {"meta": _meta(config, scene_count=len(scenes)), "metrics": agg.to_dict()}
    _write_text(args.output, json.dumps(payload, indent=2))
    _log(agg.to_table())
    if args.csv_dir:
        out = pathlib.Path(args.csv_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "furniture_histogram.csv").write_text(agg.furniture_histogram_csv())
        (out / "room_count_histogram.csv").write_text(agg.room_count_histogram_csv())
        _log(f"wrote histograms under {out}")
    return 0


def cmd_rasterize(args, config: RunConfig) -> int:
    palette = _palette_for(config)
    scene = load_scene(args.scene)
    canvas = (config.canvas, config.canvas)
    layout = rasterize_layout(scene, palette, canvas, config.margin, config.wall_thickness)
    extra = {"meta": _meta(config, source=str(args.scene)), "palette_hash": palette.hash()}
    save_png(layout, args.output, extra_meta=extra)
    _log(f"wrote {args.output}")
    if args.floorplan:
        floor = rasterize_floorplan(scene, palette, canvas, config.margin, config.wall_thickness, transform=layout.transform)
        save_png(floor, args.floorplan, extra_meta=extra)
        _log(f"wrote {args.floorplan}")
    return 0


def cmd_gen_toy(args, config: RunConfig) -> int:
    toy = load_toy_config(args.toy_config) if args.toy_config else ToyConfig()
    if args.mode:
        toy = replace(toy, collision_mode=args.mode)
    scenes = generate_toy_corpus(config.seed, args.count, toy)
    out = pathlib.Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for i, scene in enumerate(scenes):
        save_scene(scene, out / f"scene_{i:05d}.json")
    # JSON content, non-.json extension: corpus globs must not pick it up.
    (out / "gen_toy.meta").write_text(json.dumps(_meta(config, count=len(scenes), mode=toy.collision_mode), indent=2))
    _log(f"wrote {len(scenes)} scene(s) under {out}")
    return 0


def cmd_train(args, config: RunConfig) -> int:
    palette = _palette_for(config)
    schedule = _schedule_for(config)
    paths = _scene_paths(args.scenes)
    canvas = (config.canvas, config.canvas)

    def make_pair(path):
        scene = load_scene(path)
        layout = rasterize_layout(scene, palette, canvas, config.margin, config.wall_thickness)
        floor = rasterize_floorplan(scene, palette, canvas, config.margin, config.wall_thickness, transform=layout.transform)
        return layout, floor

    pairs = _map_ordered(make_pair, paths, config.threads)
    _log(f"rasterized {len(pairs)} training pair(s) at {config.canvas}px")
    model = TinyUNetDenoiser(widths=tuple(args.widths), emb_dim=args.emb_dim, seed=config.seed, zero_init_out=True)
    _log(f"model parameters: {model.parameter_count}")
    train_config = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=config.seed,
        decay_milestones=tuple(args.decay_milestones),
    )
    result = train(model, pairs, train_config, schedule)
    save_checkpoint(
        args.output,
        model,
        schedule,
        palette_hash=palette.hash(),
        meta=_meta(config, scenes=len(pairs), epochs=args.epochs, final_loss=result.loss_curve[-1]),
    )
    _log(f"wrote {args.output} (final mean loss {result.loss_curve[-1]:.6f})")
    if args.loss_csv:
        result.save_csv(args.loss_csv)
        _log(f"wrote {args.loss_csv}")
    return 0


def cmd_sample(args, config: RunConfig) -> int:
    palette = _palette_for(config)
    denoiser, schedule, header = load_checkpoint(args.checkpoint, palette_hash=palette.hash())
    cond = load_png(args.floorplan)
    rng = np.random.default_rng(config.seed)
    layout = sample(denoiser, cond, schedule, rng)
    save_png(layout, args.output, extra_meta={"meta": _meta(config, checkpoint=str(args.checkpoint)), "palette_hash": header.get("palette_hash")})
    _log(f"wrote {args.output}")
    return 0


def cmd_detect(args, config: RunConfig) -> int:
    palette = _palette_for(config)
    image = load_png(args.image)
    dets = detect_objects(image, palette, min_area=args.min_area, include_structural=args.structural)
    doc = {"meta": _meta(config, image=str(args.image)), "detections": [d.to_dict() for d in dets]}
    _write_text(args.output, json.dumps(doc, indent=2))
    _log(f"{len(dets)} detection(s)")
    return 0


def _load_detections_payload(path: str, palette: Palette):
    text = pathlib.Path(path).read_text()
    doc = json.loads(text)
    if isinstance(doc, dict) and "detections" in doc:
        text = json.dumps(doc["detections"])
    return detections_from_json(text, palette)


def cmd_graph(args, config: RunConfig) -> int:
    palette = _palette_for(config)
    db = AssetDatabase.load(args.assets) if args.assets else make_demo_asset_database(palette.names(), seed=config.seed)
    if args.scene:
        scene = load_scene(args.scene)
        boxes = list(scene.furniture)
        masks = segment_rooms(scene, palette)
        openings = list(scene.openings)
    else:
        if not args.detections or not args.floorplan:
            raise CliError("graph needs --scene, or --detections plus --floorplan")
        boxes = _load_detections_payload(args.detections, palette)
        floor = load_png(args.floorplan)
        masks = segment_rooms(floor, palette)
        structural = detect_objects(floor, palette, include_structural=True)
        openings = []
        for det in structural:
            if det.category.name in ("door", "window"):
                from .scene import Opening

                b = det.box
                openings.append(Opening(det.category.name, b.pos, b.length, b.width, b.height, b.rotate))
    graph = build_scene_graph(boxes, masks, openings, db)
    text = export_graph_json(graph)
    doc = json.loads(text)
    doc["meta"] = _meta(config)
    _write_text(args.output, json.dumps(doc, indent=2))
    if args.svg:
        _write_text(args.svg, export_svg(graph, palette, wall_thickness_cm=config.wall_thickness))
    total = sum(len(r.objects) for r in graph.house.rooms) + len(graph.house.unassigned)
    _log(f"graph: {len(graph.house.rooms)} room(s), {total} object(s), {len(graph.house.unassigned)} unassigned")
    return 0


def cmd_metrics(args, config: RunConfig) -> int:
    palette = _palette_for(config)
    if args.scenes:
        paths = _scene_paths(args.scenes)
        scenes = _map_ordered(load_scene, paths, config.threads)
        agg = corpus_metrics(scenes)
        payload = {"meta": _meta(config), "metrics": agg.to_dict()}
        _log(agg.to_table())
    else:
        if not args.detections:
            raise CliError("metrics needs --scenes or --detections")
        boxes = _load_detections_payload(args.detections, palette)
        payload = {
            "meta": _meta(config),
            "metrics": {"por": scene_por(boxes), "piou": scene_piou(boxes), "objects": len(boxes), "fid": "n/a", "kid": "n/a"},
        }
        _log(f"POR {payload['metrics']['por']:.6f}  PIoU {payload['metrics']['piou']:.6f}")
    _write_text(args.output, json.dumps(payload, indent=2))
    return 0


def cmd_ood(args, config: RunConfig) -> int:
    palette = _palette_for(config)
    denoiser, schedule, _ = load_checkpoint(args.checkpoint, palette_hash=palette.hash())
    layout = load_png(args.layout)
    floor = load_png(args.floorplan)
    rng = np.random.default_rng(config.seed)
    score = ood_score(denoiser, layout, floor, schedule, rng, t_lo=args.t_lo, t_hi=args.t_hi, iters=args.iters)
    payload = {"meta": _meta(config), "ood_score": score, "t_lo": args.t_lo, "t_hi": args.t_hi, "iters": args.iters}
    _write_text(args.output, json.dumps(payload, indent=2))
    _log(f"ood score {score:.6f}")
    return 0


def cmd_pipeline(args, config: RunConfig) -> int:
    out = pathlib.Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    palette = _palette_for(config)
    denoiser, schedule, header = load_checkpoint(args.checkpoint, palette_hash=palette.hash())
    cond = load_png(args.floorplan)
    rng = np.random.default_rng(config.seed)

    layout = sample(denoiser, cond, schedule, rng)
    save_png(layout, out / "layout.png", extra_meta={"meta": _meta(config), "palette_hash": header.get("palette_hash")})

    dets = detect_objects(layout, palette)
    (out / "detections.json").write_text(json.dumps({"meta": _meta(config), "detections": [d.to_dict() for d in dets]}, indent=2))

    masks = segment_rooms(cond, palette)
    structural = detect_objects(cond, palette, include_structural=True)
    from .scene import Opening

    openings = [
        Opening(d.category.name, d.box.pos, d.box.length, d.box.width, d.box.height, d.box.rotate)
        for d in structural
        if d.category.name in ("door", "window")
    ]
    db = AssetDatabase.load(args.assets) if args.assets else make_demo_asset_database(palette.names(), seed=config.seed)
    graph = build_scene_graph(dets, masks, openings, db)
    (out / "graph.json").write_text(export_graph_json(graph))
    (out / "scene.svg").write_text(export_svg(graph, palette, wall_thickness_cm=config.wall_thickness))
    boxes = [d.box for d in dets]
    report = {
        "meta": _meta(config),
        "detections": len(dets),
        "por": scene_por(boxes),
        "piou": scene_piou(boxes),
        "rooms": len(graph.house.rooms),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2))
    _log(f"pipeline complete under {out}: {len(dets)} objects, POR {report['por']:.4f}")
    return 0


# --- parser ---


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roomsynth",
        description="Collision-free indoor layout synthesis: scenes, rasters, diffusion, detection, scene graphs, metrics.",
    )
    parser.add_argument("--version", action="version", version=f"roomsynth {__version__}")
    parser.add_argument("--config", help=f"key=value run config (default from ${CONFIG_ENV_VAR})")
    parser.add_argument("--palette", help="palette JSON/TOML path (default: stock house palette)")
    parser.add_argument("--fine-palette", action="store_true", help="use the stock fine-grained palette")
    parser.add_argument("--seed", type=int, help="seed recorded in all outputs")
    parser.add_argument("--threads", type=int, help="per-scene parallelism for corpus commands")
    parser.add_argument("--canvas", type=int, help="canvas size in pixels (square)")
    parser.add_argument("--print-config", action="store_true", help="print the effective config and exit")

    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("validate", help="scene JSON -> validation report")
    p.add_argument("scenes", nargs="+")
    p.add_argument("-o", "--output", default="validation.json")

    p = sub.add_parser("stats", help="scene corpus -> metrics and histograms")
    p.add_argument("scenes", nargs="+")
    p.add_argument("-o", "--output", default="stats.json")
    p.add_argument("--csv-dir")

    p = sub.add_parser("rasterize", help="scene -> layout PNG (+ floor plan PNG)")
    p.add_argument("scene")
    p.add_argument("-o", "--output", default="layout.png")
    p.add_argument("--floorplan")

    p = sub.add_parser("gen-toy", help="generate synthetic scenes")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--mode", choices=["forbid", "force"])
    p.add_argument("--toy-config")
    p.add_argument("-o", "--output", default="toy_scenes")

    p = sub.add_parser("train", help="train the diffusion denoiser on a scene corpus")
    p.add_argument("scenes", nargs="+")
    p.add_argument("-o", "--output", default="checkpoint.npz")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--decay-milestones", type=int, nargs="*", default=[])
    p.add_argument("--widths", type=int, nargs=3, default=[16, 32, 64])
    p.add_argument("--emb-dim", type=int, default=32)
    p.add_argument("--loss-csv")

    p = sub.add_parser("sample", help="checkpoint + floor plan PNG -> layout PNG")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--floorplan", required=True)
    p.add_argument("-o", "--output", default="sample.png")

    p = sub.add_parser("detect", help="layout PNG -> detections JSON")
    p.add_argument("--image", required=True)
    p.add_argument("-o", "--output", default="detections.json")
    p.add_argument("--min-area", type=int, default=9)
    p.add_argument("--structural", action="store_true", help="also decode doors/windows")

    p = sub.add_parser("graph", help="scene or detections -> scene-graph JSON + SVG")
    p.add_argument("--scene")
    p.add_argument("--detections")
    p.add_argument("--floorplan")
    p.add_argument("--assets")
    p.add_argument("-o", "--output", default="graph.json")
    p.add_argument("--svg")

    p = sub.add_parser("metrics", help="scenes or detections -> POR/PIoU report")
    p.add_argument("--scenes", nargs="*")
    p.add_argument("--detections")
    p.add_argument("-o", "--output", default="metrics.json")

    p = sub.add_parser("ood", help="checkpoint + layout + floor plan -> outlier score")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--layout", required=True)
    p.add_argument("--floorplan", required=True)
    p.add_argument("--t-lo", type=int, default=900)
    p.add_argument("--t-hi", type=int, default=1000)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("-o", "--output", default="ood.json")

    p = sub.add_parser("pipeline", help="floor plan -> sample -> detect -> graph -> SVG")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--floorplan", required=True)
    p.add_argument("--assets")
    p.add_argument("-o", "--output", default="pipeline_out")

    return parser


COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "rasterize": cmd_rasterize,
    "gen-toy": cmd_gen_toy,
    "train": cmd_train,
    "sample": cmd_sample,
    "detect": cmd_detect,
    "graph": cmd_graph,
    "metrics": cmd_metrics,
    "ood": cmd_ood,
    "pipeline": cmd_pipeline,
}


def _effective_config(args) -> RunConfig:
    updates: dict = {}
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if config_path:
        updates.update(_load_run_config(config_path))
    # Flags beat the config file.
    if args.palette is not None:
        updates["palette"] = args.palette
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.canvas is not None:
        updates["canvas"] = args.canvas
    if args.fine_palette:
        updates["fine_palette"] = True
    return replace(RunConfig(), **updates)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _effective_config(args)
        if args.print_config:
            sys.stdout.write(config.to_text())
            return 0
        if not args.command:
            parser.print_help(sys.stderr)
            return 2
        handler = COMMANDS[args.command]
        return handler(args, config)
    except Exception as e:  # noqa: BLE001 - single reporting point
        err = {"error": type(e).__name__, "message": str(e)}
        print(json.dumps(err), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
