"""``htex`` command line: info, validate, bake, render, seams, cracks.

Exit codes: 0 success, 1 validation or check failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import format as htx
from .baker import ResolutionPolicy, auto_policy, bake, corner_preprocess, make_shader
from .errors import HtexError
from .halfedge import load_obj, validate
from .renderer import SHADINGS, Camera, CrackWarning, crack_check, rasterize, save_image, seam_check, tessellate_displaced
from .sampler import check_fingerprint

log = logging.getLogger("htex")


@dataclass
class RunConfig:
    subcommand: str
    mesh: str = ""
    htex: str = ""
    out: str = ""
    params: dict = field(default_factory=dict)
    seed: int | None = None
    threads: int | None = None


class CheckFailed(Exception):
    pass


def _vec3(text):
    try:
        parts = [float(s) for s in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return tuple(parts)


def _camera(text):
    eye, sep, target = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("camera must be EYE:TARGET, e.g. 3,-4,3:0.5,0.5,0.5")
    return _vec3(eye), _vec3(target)


def _res(text):
    if text == "auto":
        return text
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--res takes a log2 size (0-12) or 'auto'") from None
    if not 0 <= v <= htx.MAX_LOG2_RES:
        raise argparse.ArgumentTypeError(f"--res must lie in [0, {htx.MAX_LOG2_RES}]")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized sampling")
    common.add_argument("--threads", type=int, default=None, help="worker cap (default: $HTEX_THREADS)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="htex", description="Per-halfedge texturing tools.")
    sub = p.add_subparsers(dest="subcommand", required=True)

    s = sub.add_parser("info", parents=[common], help="mesh counts")
    s.add_argument("mesh")

    s = sub.add_parser("validate", parents=[common], help="check manifold invariants")
    s.add_argument("mesh")

    s = sub.add_parser("bake", parents=[common], help="bake per-edge textures to .htx")
    s.add_argument("mesh")
    s.add_argument("--shader", default="position",
                   choices=["constant", "position", "position-xyz", "checker", "triplanar", "radial-displacement"])
    s.add_argument("--res", type=_res, default=4)
    s.add_argument("--out", required=True)
    s.add_argument("--no-corner-fix", action="store_true")
    s.add_argument("--value", default="1.0", help="constant shader value(s), comma separated")
    s.add_argument("--frequency", type=float, default=None)
    s.add_argument("--amplitude", type=float, default=None)
    s.add_argument("--image", default=None, help="PNG/PPM source for triplanar")
    s.add_argument("--scale", type=float, default=1.0, help="triplanar projection scale")

    s = sub.add_parser("render", parents=[common], help="rasterize a textured mesh")
    s.add_argument("mesh")
    s.add_argument("htex")
    s.add_argument("--out", required=True)
    s.add_argument("--camera", type=_camera, default=None, help="EYE:TARGET as x,y,z:x,y,z")
    s.add_argument("--up", type=_vec3, default=(0.0, 0.0, 1.0))
    s.add_argument("--fov", type=float, default=45.0, help="vertical field of view in degrees")
    s.add_argument("--width", type=int, default=256)
    s.add_argument("--height", type=int, default=256)
    s.add_argument("--shading", choices=SHADINGS, default="flat-lit")
    s.add_argument("--displace", default=None, help="displacement channel (index or name)")
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--bias", type=float, default=0.0)
    s.add_argument("--tess", type=int, default=0)

    s = sub.add_parser("seams", parents=[common], help="measure texture seams")
    s.add_argument("mesh")
    s.add_argument("htex")
    s.add_argument("--samples", type=int, default=17)
    s.add_argument("--tolerance", type=float, default=1e-5)

    s = sub.add_parser("cracks", parents=[common], help="measure displacement cracks")
    s.add_argument("mesh")
    s.add_argument("htex")
    s.add_argument("--displace", required=True, help="displacement channel (index or name)")
    s.add_argument("--tess", type=int, default=3)
    s.add_argument("--scale", type=float, default=1.0)
    s.add_argument("--bias", type=float, default=0.0)
    s.add_argument("--tolerance", type=float, default=1e-5)
    return p


def resolve_config(args) -> RunConfig:
    skip = {"subcommand", "mesh", "htex", "out", "seed", "threads", "json", "dry_run", "verbose"}
    params = {k: v for k, v in vars(args).items() if k not in skip}
    threads = args.threads
    if threads is None and os.environ.get("HTEX_THREADS"):
        threads = int(os.environ["HTEX_THREADS"])
    return RunConfig(args.subcommand, getattr(args, "mesh", ""), getattr(args, "htex", ""),
                     getattr(args, "out", "") or "", params, args.seed, threads)


def _emit(args, payload, text):
    if args.json:
        print(json.dumps(payload, indent=2, default=str))
    else:
        print(text)


def _channel(layout, spec):
    if spec in layout.names:
        return layout.names.index(spec)
    try:
        ch = int(spec)
    except ValueError:
        raise HtexError(f"unknown channel {spec!r}; layout has {layout.names}") from None
    if not 0 <= ch < layout.n:
        raise HtexError(f"channel {ch} outside layout {layout.names}")
    return ch


def _load_pair(cfg):
    mesh = load_obj(cfg.mesh)
    textures, _ = htx.read(cfg.htex)
    check_fingerprint(mesh, textures)
    return mesh, textures


def cmd_info(args, cfg):
    mesh = load_obj(cfg.mesh)
    ratio = mesh.E / mesh.F
    info = {"H": mesh.H, "V": mesh.V, "E": mesh.E, "F": mesh.F, "B": mesh.B,
            "euler_characteristic": mesh.euler_characteristic(), "E/F": ratio,
            "face_sizes": {int(k): int(c) for k, c in zip(*np.unique(mesh.face_sizes, return_counts=True))}}
    _emit(args, info, f"H={mesh.H} V={mesh.V} E={mesh.E} F={mesh.F} B={mesh.B} "
                      f"chi={mesh.euler_characteristic()} E/F={ratio}")


def cmd_validate(args, cfg):
    mesh = load_obj(cfg.mesh, strict=False)
    problems = validate(mesh)
    _emit(args, {"valid": not problems, "violations": [str(p) for p in problems]},
          "\n".join(str(p) for p in problems) or "ok")
    if problems:
        raise CheckFailed(f"{len(problems)} violation(s)")


def _shader(args):
    kw = {}
    name = args.shader
    if name == "constant":
        kw["value"] = [float(s) for s in args.value.split(",")]
    elif name == "checker" and args.frequency is not None:
        kw["frequency"] = args.frequency
    elif name == "radial-displacement":
        if args.frequency is not None:
            kw["frequency"] = args.frequency
        if args.amplitude is not None:
            kw["amplitude"] = args.amplitude
    elif name == "triplanar":
        if not args.image:
            raise HtexError("--shader triplanar needs --image")
        kw = {"image": args.image, "scale": args.scale}
    return make_shader(name, **kw)


def cmd_bake(args, cfg):
    mesh = load_obj(cfg.mesh)
    policy = auto_policy(mesh) if args.res == "auto" else ResolutionPolicy.uniform(args.res)
    textures = bake(mesh, _shader(args), policy, threads=cfg.threads)
    if not args.no_corner_fix:
        corner_preprocess(mesh, textures)
    nbytes = htx.write(cfg.out, textures, mesh.fingerprint)
    _emit(args, {"out": cfg.out, "bytes": nbytes, "textures": len(textures), "channels": list(textures.layout.names)},
          f"wrote {len(textures)} textures ({nbytes} bytes) to {cfg.out}")


def cmd_render(args, cfg):
    mesh, textures = _load_pair(cfg)
    if args.camera is None:
        cam = Camera.framing(mesh, args.width, args.height, fov=np.radians(args.fov))
    else:
        eye, target = args.camera
        span = float(np.ptp(mesh.positions, axis=0).max()) + np.linalg.norm(np.subtract(eye, target))
        cam = Camera(eye, target, args.up, np.radians(args.fov), args.width, args.height, 1e-3, 4 * span + 1)
    if args.displace is not None:
        soup = tessellate_displaced(mesh, textures, _channel(textures.layout, args.displace), args.tess,
                                    args.scale, args.bias)
    else:
        soup = tessellate_displaced(mesh, None, level=args.tess)
    img = rasterize(mesh, textures, cam, args.shading, soup=soup)
    save_image(img, cfg.out)
    _emit(args, {"out": cfg.out, "width": cam.width, "height": cam.height, "triangles": len(soup)},
          f"rendered {len(soup)} triangles to {cfg.out}")


def cmd_seams(args, cfg):
    mesh, textures = _load_pair(cfg)
    rng = np.random.default_rng(cfg.seed) if cfg.seed is not None else None
    report = seam_check(mesh, textures, args.samples, rng=rng)
    _emit(args, report.to_dict(), report.to_text())
    if report.max_discrepancy > args.tolerance:
        raise CheckFailed(f"seam discrepancy {report.max_discrepancy:.3e} exceeds {args.tolerance:g}")


def cmd_cracks(args, cfg):
    mesh, textures = _load_pair(cfg)
    ch = _channel(textures.layout, args.displace)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CrackWarning)
        report = crack_check(mesh, textures, ch, args.tess, args.scale, args.bias)
    _emit(args, report.to_dict(), report.to_text())
    if not report.uniform_resolution:
        print(f"warning: mixed texture resolutions; {report.to_text()}", file=sys.stderr)
        return
    if report.max_discrepancy > args.tolerance:
        raise CheckFailed(f"crack {report.max_discrepancy:.3e} exceeds {args.tolerance:g}")


COMMANDS = {"info": cmd_info, "validate": cmd_validate, "bake": cmd_bake, "render": cmd_render,
            "seams": cmd_seams, "cracks": cmd_cracks}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    cfg = resolve_config(args)
    if args.dry_run:
        print(json.dumps(asdict(cfg), indent=2, default=str))
        return 0
    try:
        COMMANDS[cfg.subcommand](args, cfg)
    except CheckFailed as exc:
        print(f"htex {cfg.subcommand}: {exc}", file=sys.stderr)
        return 1
    except (HtexError, OSError, ValueError) as exc:
        print(f"htex {cfg.subcommand}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
