"""``acemetric`` command line: ``eval``, ``flow`` and ``synth`` subcommands.

Exit codes: 0 success, 1 runtime failure, 2 invalid input. Diagnostics go to
stderr; results only ever go to files.
"""
import argparse
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import io as aio
from .core import EvalCase, normalize_case
from .exceptions import DegenerateRange, ShapeMismatch, ValidationError
from .metrics import AceConfig, evaluate_case
from .synth import generate, spec_from_text
from .tvl1 import TvL1Config, extract_flow_arrays

log = logging.getLogger("acemetric")

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2

_SOLVER_KEYS = {f.name for f in fields(TvL1Config)} | {"lambda"}
_ACE_KEYS = {"ace_epsilon", "data_range"}


# -- configuration -----------------------------------------------------------

def _coerce(key, text, source, lineno):
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"{source}:{lineno}: {key!r} expects a number, got {text!r}") from None
    return value


def load_config_file(path):
    """Read a flat ``key = value`` file into ``(solver_overrides, ace_overrides)``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    solver, ace = {}, {}
    for key, (value, lineno) in aio.parse_kv_text(text, str(path)).items():
        if key in _SOLVER_KEYS:
            solver["lambda_" if key == "lambda" else key] = _coerce(key, value, path, lineno)
        elif key in _ACE_KEYS:
            ace[key] = _coerce(key, value, path, lineno)
        else:
            raise ValidationError(f"{path}:{lineno}: unknown setting {key!r}")
    return solver, ace


def resolve_config(args) -> AceConfig:
    """Defaults, then the config file, then explicit flags."""
    solver, ace = ({}, {}) if not args.config else load_config_file(args.config)
    for name in _SOLVER_KEYS - {"lambda"}:
        flag = getattr(args, name, None)
        if flag is not None:
            solver[name] = flag
    for name in _ACE_KEYS:
        flag = getattr(args, name, None)
        if flag is not None:
            ace[name] = flag
    tvl1 = TvL1Config(**solver)
    return AceConfig(tvl1=tvl1, emit_maps=bool(getattr(args, "maps", None)), **ace)


def _add_solver_flags(p):
    g = p.add_argument_group("solver settings (override --config)")
    g.add_argument("--config", help="flat 'key = value' file of solver/metric settings")
    g.add_argument("--tau", type=float)
    g.add_argument("--lambda", dest="lambda_", type=float)
    g.add_argument("--theta", type=float)
    g.add_argument("--nscales", type=int)
    g.add_argument("--warps", type=int)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--inner-iterations", dest="inner_iterations", type=int)
    g.add_argument("--outer-iterations", dest="outer_iterations", type=int)
    g.add_argument("--scale-step", dest="scale_step", type=float)
    g.add_argument("--median-filter-size", dest="median_filter_size", type=int)
    g.add_argument("--intensity-scale", dest="intensity_scale", type=float)


# -- inputs ------------------------------------------------------------------

def _list_role(path):
    """Map file name -> path for a file or a directory of ``.npy`` files."""
    path = Path(path)
    if path.is_dir():
        return {p.name: p for p in sorted(path.glob("*.npy"))}
    if path.is_file():
        return {None: path}
    raise ValidationError(f"no such file or directory: {path}")


def _pair_inputs(obs, truth, pred):
    roles = {"obs": _list_role(obs), "truth": _list_role(truth), "pred": _list_role(pred)}
    kinds = {name: None in found for name, found in roles.items()}
    if len(set(kinds.values())) != 1:
        raise ValidationError("--obs, --truth and --pred must all be files or all be directories")
    names = [set(found) for found in roles.values()]
    if names[0] != names[1] or names[0] != names[2]:
        missing = []
        union = set().union(*names)
        for role, found in roles.items():
            absent = sorted(union - set(found))
            if absent:
                missing.append(f"{role} lacks {', '.join(absent)}")
        raise ValidationError("unmatched file names: " + "; ".join(missing))
    if None not in roles["obs"] and not roles["obs"]:
        raise ValidationError(f"no .npy files found in {obs}")
    return [(name, roles["obs"][name], roles["truth"][name], roles["pred"][name])
            for name in sorted(roles["obs"], key=lambda n: n or "")]


def _as_frames(arr):
    return [arr] if arr.ndim == 2 else list(arr)


def load_cases(obs, truth, pred):
    """Read and align all cases; 3-D stacks pair frame t with frame t."""
    cases = []
    for name, po, pt, pp in _pair_inputs(obs, truth, pred):
        arrays = {"obs": aio.read_raw_array(po), "truth": aio.read_raw_array(pt),
                  "pred": aio.read_raw_array(pp)}
        paths = {"obs": po, "truth": pt, "pred": pp}
        ref = arrays["truth"]
        for role in ("obs", "pred"):
            if arrays[role].shape != ref.shape:
                raise ShapeMismatch(
                    f"{paths[role]} has shape {'x'.join(map(str, arrays[role].shape))} but "
                    f"{pt} has shape {'x'.join(map(str, ref.shape))}")
        stem = Path(name).stem if name else Path(pt).stem
        frames = [_as_frames(arrays[r]) for r in ("obs", "truth", "pred")]
        many = ref.ndim == 3
        width = max(3, len(str(len(frames[0]))))
        for t, (o, tr, p) in enumerate(zip(*frames)):
            case_id = f"{stem}/t{t:0{width}d}" if many else stem
            cases.append(EvalCase(o, tr, p, case_id))
    return cases


# -- subcommands -------------------------------------------------------------

def _evaluate_one(job):
    case, config = job
    return evaluate_case(case, config)


def evaluate_cases(cases, config, jobs=1):
    if jobs > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_evaluate_one, [(c, config) for c in cases]))
    else:
        reports = [evaluate_case(c, config) for c in cases]
    return sorted(reports, key=lambda r: r.case_id)


def _safe_name(case_id):
    return re.sub(r"[^A-Za-z0-9._-]+", "_", case_id)


def _write_maps(reports, maps_dir, report_dir):
    maps_dir = Path(maps_dir)
    maps_dir.mkdir(parents=True, exist_ok=True)
    index = {}
    for r in reports:
        entry = {}
        for kind in ("ae", "ce"):
            values = r.maps[kind].values
            hi = float(values.max())
            hi = hi if hi > 0 else 1.0
            path = maps_dir / f"{_safe_name(r.case_id)}_{kind}.pgm"
            aio.write_graymap(values, path, (0.0, hi))
            entry[kind] = aio.map_entry(path, 0.0, hi, report_dir)
        index[r.case_id] = entry
    return index


def cmd_eval(args):
    config = resolve_config(args)
    cases = load_cases(args.obs, args.truth, args.pred)
    log.info("evaluating %d case(s) with %d job(s)", len(cases), args.jobs)
    reports = evaluate_cases(cases, config, args.jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    maps = _write_maps(reports, args.maps, out.parent) if args.maps else {}
    doc = aio.ReportDocument(config=config, cases=reports, maps=maps)
    json_path, csv_path = aio.write_report(doc, out)
    log.info("wrote %s and %s", json_path, csv_path)
    return EXIT_OK


def cmd_flow(args):
    config = resolve_config(args).tvl1
    src = aio.read_raw_array(args.src)
    dst = aio.read_raw_array(args.dst)
    if src.shape != dst.shape:
        raise ShapeMismatch(f"{args.src} has shape {'x'.join(map(str, src.shape))} but "
                            f"{args.dst} has shape {'x'.join(map(str, dst.shape))}")
    vxs, vys = [], []
    for a, b in zip(_as_frames(src), _as_frames(dst)):
        try:
            case, _ = normalize_case(EvalCase(a, b, b))
        except DegenerateRange:
            # two identical constant fields: no motion is observable
            vxs.append(np.zeros_like(a))
            vys.append(np.zeros_like(a))
            continue
        vx, vy = extract_flow_arrays(case.observation.values, case.truth.values, config)
        vxs.append(vx)
        vys.append(vy)
    stack = src.ndim == 3
    aio.write_array(np.stack(vxs) if stack else vxs[0], args.out_vx)
    aio.write_array(np.stack(vys) if stack else vys[0], args.out_vy)
    return EXIT_OK


def cmd_synth(args):
    path = Path(args.spec)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read spec {path}: {exc.strerror}") from None
    spec = spec_from_text(text, str(path))
    if spec.steps < 2:
        raise ValidationError(f"{path}: steps must be >= 2 to form an obs/truth pair")
    frames = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if spec.steps == 2:
        aio.write_array(frames[0], out / "obs.npy")
        aio.write_array(frames[1], out / "truth.npy")
    else:
        aio.write_array(frames[:-1], out / "obs.npy")
        aio.write_array(frames[1:], out / "truth.npy")
    dx, dy = spec.advection
    (out / "truth.txt").write_text(
        f"dx = {dx!r}\ndy = {dy!r}\nrate = {spec.convection_rate!r}\n"
        f"steps = {spec.steps}\nseed = {spec.seed}\n", encoding="utf-8")
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="acemetric",
        description="Advection/convection error (ACE) for gridded forecasts.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "eval", help="score predictions against truth",
        description="Score forecasts. Inputs are .npy files or directories of them "
                    "matched by file name; 3-D arrays are time-major (t, h, w) and frame t "
                    "of each role forms one case. Writes a JSON report to --out and a CSV "
                    "with one row per case beside it.")
    p.add_argument("--obs", required=True, help="observation at issue time (file or dir)")
    p.add_argument("--truth", required=True, help="verifying truth (file or dir)")
    p.add_argument("--pred", required=True, help="prediction (file or dir)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--maps", help="directory for per-case AE/CE graymaps (.pgm)")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel case evaluations (default: $ACE_JOBS or 1)")
    p.add_argument("--ace-epsilon", dest="ace_epsilon", type=float)
    p.add_argument("--data-range", dest="data_range", type=float)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "flow", help="extract the advection field between two arrays",
        description="Backward flow: remapping --to by (vx, vy), i.e. sampling it at "
                    "(x + vx, y + vy), reproduces --from. vx runs along columns, vy down rows, "
                    "in pixels.")
    p.add_argument("--from", dest="src", required=True)
    p.add_argument("--to", dest="dst", required=True)
    p.add_argument("--out-vx", required=True)
    p.add_argument("--out-vy", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("synth", help="generate a synthetic obs/truth pair with known motion")
    p.add_argument("--spec", required=True, help="flat 'key = value' spec file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if hasattr(args, "jobs"):
        if args.jobs is None:
            env = os.environ.get("ACE_JOBS", "1")
            try:
                args.jobs = int(env)
            except ValueError:
                print(f"acemetric: ACE_JOBS must be an integer, got {env!r}", file=sys.stderr)
                return EXIT_VALIDATION
        if args.jobs < 1:
            print("acemetric: --jobs must be >= 1", file=sys.stderr)
            return EXIT_VALIDATION
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"acemetric: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit code 1
        log.debug("runtime failure", exc_info=True)
        print(f"acemetric: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
