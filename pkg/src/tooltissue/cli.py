"""Command-line pipeline: synth, train, predict, eval.

Every failure path exits nonzero and prints exactly one line to stderr of
the form ``ErrorClass: message`` (exit 2 for usage/input problems, 3 for
numerical failures). All randomness flows from seeds recorded in the
training log, so identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import (
    NotFound,
    NumericalError,
    ToolTissueError,
    UsageError,
)
from .evaluation import (
    SplitSpec,
    angle_error,
    evaluate,
    position_error,
    split,
    write_report_csv,
    write_summary_json,
)
from .frames import assemble_datapoints, compute_reference_frames
from .geometry import wrap_angle
from .mixture import gmr, predict_trajectory, train_with_selection
from .synth import generate_scene
from .tracks import ModelFile, parse_tracks, read_model, write_model, write_tracks


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="tooltissue",
                     description="Frame-relative surgical tool trajectory modeling.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file of dotted keys")
        p.add_argument("--seed", type=int, help="override every *.seed config key")
        p.add_argument("--out", help="output path")
        p.add_argument("--tracks", help="track CSV path")
        p.add_argument("--model", help="model file path")
        return p

    add("synth", "generate a synthetic track CSV")
    train = add("train", "fit a mixture model to a track file")
    train.add_argument("--split", help="TRAIN/TEST frame counts (train on the head only)")
    predict = add("predict", "predict tool poses at query times")
    predict.add_argument("--times", help='query times: "a,b,c" or "grid:N"')
    ev = add("eval", "score a model against a track file")
    ev.add_argument("--split", help="TRAIN/TEST frame counts")
    return parser


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"missing required {flag}")
    return value


def _existing(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise NotFound(f"{what} {p} does not exist")
    return p


def _parse_times(spec: str) -> list:
    if spec.startswith("grid:"):
        try:
            n = int(spec[len("grid:"):])
        except ValueError:
            raise UsageError(f"bad time grid {spec!r}") from None
        if n < 1:
            raise UsageError("time grid needs at least 1 point")
        return list(np.linspace(0.0, 1.0, n))
    try:
        times = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad time list {spec!r}") from None
    if not times:
        raise UsageError("no query times given")
    return sorted(times)


def _load_config(args) -> PipelineConfig:
    overrides = {}
    if args.tracks is not None:
        overrides["io.tracks"] = args.tracks
    if args.model is not None:
        overrides["io.model"] = args.model
    if args.out is not None:
        overrides["io.out"] = args.out
    cfg = PipelineConfig.load(args.config, overrides)
    if args.seed is not None:
        cfg.set_seed_everywhere(args.seed)
    return cfg


def _train_errors(model, data):
    pos = [position_error(gmr(model, d.time).position_mean, d.rel_position) for d in data]
    ang = [angle_error(gmr(model, d.time).angle, d.rel_angle) for d in data]
    return float(np.mean(pos)), float(np.mean(ang))


def _cmd_synth(args) -> int:
    cfg = _load_config(args)
    out = _require(cfg.get("io.out"), "--out")
    tracks, _ = generate_scene(cfg.scene_config())
    write_tracks(tracks, out)
    print(f"wrote {tracks.frame_count} frames to {out}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    tracks_path = _existing(_require(cfg.get("io.tracks"), "--tracks"), "track file")
    out = _require(cfg.get("io.model") or cfg.get("io.out"), "--out")

    tracks = parse_tracks(tracks_path)
    data = assemble_datapoints(tracks, cfg.cluster_spec(), cfg.get("reg.epsilon"))
    counts = cfg.split_counts(args.split)
    if counts is not None:
        train_data, _ = split(data, SplitSpec(*counts))
    else:
        train_data = data

    model, chosen_n, table = train_with_selection(train_data, cfg.train_config())
    diag = model.diagnostics
    mean_pos, mean_ang = _train_errors(model, train_data)

    provenance = {
        "tracks": str(tracks_path),
        "config": {k: v for k, v in sorted(cfg.as_dict().items())
                   if v is not None and not k.startswith("io.")},
        "selected_N": chosen_n,
        "train_frames": len(train_data),
    }
    write_model(ModelFile.from_mixture(model, tracks.frame_count, provenance), out)

    log_lines = [f"tracks={tracks_path}", f"datapoints={len(train_data)}"]
    log_lines += [f"{k}={v}" for k, v in sorted(provenance["config"].items())]
    if table is not None:
        log_lines += [f"candidate N={n} loglik={ll!r} bic={bic!r}" for n, ll, bic in table]
    log_lines.append(f"selected_N={chosen_n}")
    log_lines += [f"restart={i} loglik={ll!r}" for i, ll in enumerate(diag.restart_logliks)]
    log_lines.append(f"selected_restart={diag.selected_restart}")
    log_lines += [f"iter={i + 1} loglik={ll!r}" for i, ll in enumerate(diag.loglik_history)]
    log_lines.append(f"converged={diag.converged} iterations={diag.iterations} "
                     f"floor_hits={diag.floor_hits} reseeded={diag.reseeded_components}")
    log_lines.append(f"train_mean_position_error_px={mean_pos!r}")
    log_lines.append(f"train_mean_angle_error_deg={mean_ang!r}")
    Path(str(out) + ".log").write_text("\n".join(log_lines) + "\n", encoding="utf-8")

    print(f"trained N={chosen_n} on {len(train_data)} datapoints -> {out}")
    return 0


def _cmd_predict(args) -> int:
    cfg = _load_config(args)
    model_path = _existing(_require(cfg.get("io.model"), "--model"), "model file")
    tracks_path = _existing(_require(cfg.get("io.tracks"), "--tracks"), "track file")
    out = _require(cfg.get("io.out"), "--out")
    times = _parse_times(_require(args.times, "--times"))

    mixture = read_model(model_path).to_mixture()
    tracks = parse_tracks(tracks_path)
    frames = compute_reference_frames(tracks, cfg.cluster_spec(), cfg.get("reg.epsilon"))
    T = tracks.frame_count

    lines = ["time,x,y,angle_deg,cov_xx,cov_xy,cov_yy,extrapolated"]
    for pred in predict_trajectory(mixture, times):
        idx = min(max(int(round(pred.time * (T - 1))), 0), T - 1)
        ref = frames[idx].transform
        pos = ref.apply(pred.position_mean)
        rot = ref.rotation.matrix
        cov = rot @ pred.position_covariance @ rot.T
        angle_deg = np.degrees(wrap_angle(ref.rotation.angle + pred.angle))
        lines.append(",".join((
            repr(pred.time), repr(float(pos[0])), repr(float(pos[1])),
            repr(float(angle_deg)), repr(float(cov[0, 0])), repr(float(cov[0, 1])),
            repr(float(cov[1, 1])), "1" if pred.extrapolated else "0",
        )))
    Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(times)} predictions to {out}")
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_config(args)
    model_path = _existing(_require(cfg.get("io.model"), "--model"), "model file")
    tracks_path = _existing(_require(cfg.get("io.tracks"), "--tracks"), "track file")
    out = _require(cfg.get("io.out"), "--out")
    counts = _require(cfg.split_counts(args.split), "--split")

    mixture = read_model(model_path).to_mixture()
    tracks = parse_tracks(tracks_path)
    data = assemble_datapoints(tracks, cfg.cluster_spec(), cfg.get("reg.epsilon"))
    report = evaluate(mixture, data, SplitSpec(*counts))

    write_report_csv(report, out)
    write_summary_json(report, str(out) + ".summary.json")
    print(f"train: {report.mean_train_pos_px:.3f} px / {report.mean_train_angle_deg:.3f} deg; "
          f"test: {report.mean_test_pos_px:.3f} px / {report.mean_test_angle_deg:.3f} deg")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
}


def _print_error(exc: Exception) -> None:
    message = str(exc).replace("\n", "; ")
    print(f"{type(exc).__name__}: {message}", file=sys.stderr)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given (expected synth, train, predict, or eval)")
        return _COMMANDS[args.command](args)
    except SystemExit as e:  # argparse --help
        return int(e.code or 0)
    except NumericalError as e:
        _print_error(e)
        return 3
    except ToolTissueError as e:
        _print_error(e)
        return 2
    except FileNotFoundError as e:
        _print_error(NotFound(str(e)))
        return 2


if __name__ == "__main__":
    sys.exit(main())
