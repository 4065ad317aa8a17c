"""Command-line entry point.

Subcommands: ``simulate`` (synthetic streams to disk), ``detect`` (run the
detector over a stream file), ``benchmark`` (Monte Carlo MDD/ARL curves) and
``audio`` (speech-in-noise pipeline).  Exit codes: 0 success, 1 usage error,
2 data error.  Flags override a key=value config file, which overrides
defaults; every command accepts --seed.
"""

from __future__ import annotations

import argparse
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .audio import (
    AudioError,
    AudioPipelineConfig,
    load_wav,
    mix_audio,
    sliding_cov,
    sliding_subspace,
    stft_features,
)
from .bench import (
    BASELINE_STEP_PAIRS,
    BaselineMethod,
    ProposedMethod,
    run_comparison,
)
from .centroid import HuberConfig
from .datagen import StreamSpec, gen_stream, manifold_for
from .detector import DegenerateStreamError, DetectorConfig, RunResult, run_detector
from .geometry import GrassmannManifold, SpdManifold, ValidationError
from .streamio import StreamFormatError, read_stream, write_stream


class UsageError(Exception):
    """Bad flag combination or value; exits with status 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the interface contract
    # reserves 2 for data errors, so remap.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}: line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve(args: argparse.Namespace, defaults: dict, converters: dict) -> dict:
    """Merge flag values, config-file values and defaults (in that order)."""
    config = _read_config_file(args.config) if getattr(args, "config", None) else {}
    merged = {}
    for key, default in defaults.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
        elif key in config:
            conv = converters.get(key, str)
            try:
                merged[key] = conv(config[key])
            except ValueError as exc:
                raise UsageError(f"config value for {key}: {exc}") from exc
        else:
            merged[key] = default
    return merged


def _parse_bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _fixture_path(name: str) -> Path:
    return Path(str(resources.files("manifold_cpd") / "fixtures" / name))


def _write_trace(path: Path, result: RunResult) -> None:
    lines = ["t,g,flagged"]
    for t, g, flagged in result.trace():
        lines.append(f"{t},{g!r},{int(flagged)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _default_a_param(tag: str) -> float:
    return 1.0 if tag == "spd" else 0.05


# -- simulate ------------------------------------------------------------------

_SIM_DEFAULTS = {
    "manifold": "spd", "p": 10, "k": 5, "length": 2000,
    "change_at": None, "seed": 0,
}
_SIM_CONV = {
    "manifold": str, "p": int, "k": int, "length": int,
    "change_at": int, "seed": int,
}


def cmd_simulate(args: argparse.Namespace) -> int:
    opts = _resolve(args, _SIM_DEFAULTS, _SIM_CONV)
    if opts["change_at"] is not None and not 0 < opts["change_at"] < opts["length"]:
        raise UsageError("--t-r must satisfy 0 < t_r < T")
    try:
        spec = StreamSpec(
            manifold=opts["manifold"],
            p=opts["p"],
            k=opts["k"] if opts["manifold"] == "grassmann" else 0,
            length=opts["length"],
            change_at=opts["change_at"],
            seed=opts["seed"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    stream = gen_stream(spec)
    ops = manifold_for(spec)
    out = Path(args.output)
    write_stream(out, ops, stream)
    if spec.change_at is not None:
        Path(str(out) + ".truth").write_text(
            f"t_r={spec.change_at}\n", encoding="utf-8"
        )
    print(f"wrote {len(stream)} records to {out}")
    return 0


# -- detect --------------------------------------------------------------------

_DETECT_DEFAULTS = {
    "alpha": 0.05, "a_param": None, "policy": "reset", "dead_time": 50,
    "seed": 0,
}
_DETECT_CONV = {
    "alpha": float, "a_param": float, "policy": str, "dead_time": int,
    "seed": int,
}


def cmd_detect(args: argparse.Namespace) -> int:
    opts = _resolve(args, _DETECT_DEFAULTS, _DETECT_CONV)
    ops, stream = read_stream(args.input)
    a_param = opts["a_param"]
    if a_param is None:
        a_param = _default_a_param(ops.tag)
    try:
        cfg = DetectorConfig(
            huber=HuberConfig(threshold_a=a_param, step_alpha=opts["alpha"]),
            threshold_xi=args.xi,
            post_alarm=opts["policy"],
            dead_time=opts["dead_time"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_detector(ops, cfg, stream)
    trace_path = Path(args.output or f"{args.input}.trace.csv")
    _write_trace(trace_path, result)
    print(f"trace written to {trace_path}")
    if result.flags:
        print("flagged:", " ".join(str(t) for t in result.flags))
    else:
        print("flagged: none")
    return 0


# -- benchmark -------------------------------------------------------------------

_BENCH_DEFAULTS = {
    "manifold": "spd", "p": None, "k": 5, "length": 2000, "change_at": 1500,
    "runs": 200, "seed": 0, "alpha": 0.05, "a_param": None,
    "grid_points": 25, "pilot_runs": 20, "warmup": 600, "chunk": 50,
    "methods": "proposed,baseline", "change_delta": None, "mean_scale": None,
}
_BENCH_CONV = {
    "manifold": str, "p": int, "k": int, "length": int, "change_at": int,
    "runs": int, "seed": int, "alpha": float, "a_param": float,
    "grid_points": int, "pilot_runs": int, "warmup": int, "chunk": int,
    "methods": str, "change_delta": float, "mean_scale": float,
}


def cmd_benchmark(args: argparse.Namespace) -> int:
    opts = _resolve(args, _BENCH_DEFAULTS, _BENCH_CONV)
    if opts["runs"] < 1:
        raise UsageError("--runs must be >= 1")
    manifold = opts["manifold"]
    p = opts["p"] if opts["p"] is not None else (10 if manifold == "spd" else 20)
    a_param = opts["a_param"]
    if a_param is None:
        a_param = _default_a_param(manifold)
    # defaults reproduce the shipped synthetic comparison: a controlled
    # change magnitude and, on the subspace manifold, a signal scale under
    # which the default robustness threshold operates as intended
    delta = opts["change_delta"]
    if delta is None:
        delta = 0.8 if manifold == "spd" else 1.4
    mean_scale = opts["mean_scale"] if opts["mean_scale"] is not None else 20.0
    try:
        from .datagen import grassmann_change_pair, spd_change_pair

        if manifold == "spd":
            pre, post = spd_change_pair(
                seed=opts["seed"] + 77, p=p, delta=delta, dof=p + 2
            )
        else:
            pre, post = grassmann_change_pair(
                seed=opts["seed"] + 78, p=p, k=opts["k"], delta=delta,
                mean_scale=mean_scale,
            )
        spec = StreamSpec(
            manifold=manifold,
            p=p,
            k=opts["k"] if manifold == "grassmann" else 0,
            length=opts["length"],
            change_at=opts["change_at"],
            seed=opts["seed"],
            pre=pre,
            post=post,
            mean_scale=mean_scale,
        )
        huber = HuberConfig(threshold_a=a_param, step_alpha=opts["alpha"])
        _ = DetectorConfig(huber=huber, threshold_xi=1.0)  # rejects A=inf etc.
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    wanted = [m.strip() for m in opts["methods"].split(",") if m.strip()]
    unknown = set(wanted) - {"proposed", "baseline"}
    if unknown or not wanted:
        raise UsageError("--methods takes a subset of: proposed,baseline")
    baselines = (
        [BaselineMethod(f, s) for f, s in BASELINE_STEP_PAIRS]
        if "baseline" in wanted
        else []
    )
    if "proposed" in wanted:
        curves = run_comparison(
            spec, ProposedMethod(huber), baselines,
            n_runs=opts["runs"], seed=opts["seed"], warmup=opts["warmup"],
            n_grid=opts["grid_points"], n_pilot=opts["pilot_runs"],
            chunk=opts["chunk"], csv_path=args.output,
        )
    else:
        # baseline-only sweeps reuse the comparison harness with a stub
        # proposed entry removed afterwards
        curves = run_comparison(
            spec, ProposedMethod(huber), baselines,
            n_runs=opts["runs"], seed=opts["seed"], warmup=opts["warmup"],
            n_grid=opts["grid_points"], n_pilot=opts["pilot_runs"],
            chunk=opts["chunk"], csv_path=None,
        )
        curves.pop("proposed", None)
        from .bench import write_benchmark_csv

        write_benchmark_csv(
            args.output, curves, spec.manifold,
            {"arl_protocol": "change-free-streams", "warmup": opts["warmup"],
             "n_runs": opts["runs"], "seed": opts["seed"]},
        )
    print(f"benchmark CSV written to {args.output}")
    print(f"{'method':<22}{'xi':>12}{'arl':>10}{'mdd':>10}{'cens':>6}")
    for label, points in curves.items():
        for pt in points[:: max(1, len(points) // 5)]:
            print(
                f"{label:<22}{pt.threshold_xi:>12.5g}{pt.arl:>10.1f}"
                f"{pt.mdd:>10.2f}{pt.censored_arl + pt.censored_mdd:>6}"
            )
    return 0


# -- audio -----------------------------------------------------------------------

_AUDIO_DEFAULTS = {
    "snr": -3.0, "offset": 5.0, "mode": "spd", "k": 1, "alpha": 0.05,
    "a_param": None, "xi": None, "warmup": 150, "seed": 0,
    "stft_window": 256, "stft_hop": 128, "channels": 16, "cov_window": 32,
    "epsilon_reg": 1e-6,
}
_AUDIO_CONV = {
    "snr": float, "offset": float, "mode": str, "k": int, "alpha": float,
    "a_param": float, "xi": float, "warmup": int, "seed": int,
    "stft_window": int, "stft_hop": int, "channels": int, "cov_window": int,
    "epsilon_reg": float,
}


def _audio_stream(cfg: AudioPipelineConfig, samples: np.ndarray, mode: str):
    feats = stft_features(samples, cfg)
    if mode == "spd":
        stream = sliding_cov(feats, cfg.cov_window, cfg.epsilon_reg)
        ops = SpdManifold(cfg.channels_out)
    else:
        stream = sliding_subspace(feats, cfg.cov_window, cfg.subspace_k)
        ops = GrassmannManifold(cfg.channels_out, cfg.subspace_k)
    return ops, stream


def speech_onset_index(cfg: AudioPipelineConfig, offset_samples: int) -> int:
    """First detector-stream index whose feature window overlaps the speech."""
    first_frame = max(
        0, -(-(offset_samples - cfg.stft_window + 1) // cfg.stft_hop)
    )
    return max(0, first_frame - cfg.cov_window + 1)


def calibrate_audio_threshold(
    ops, noise_stream, huber: HuberConfig, warmup: int, margin: float = 1.05
) -> float:
    """Pilot threshold: margin above the statistic's maximum on noise alone."""
    pilot_cfg = DetectorConfig(huber=huber, threshold_xi=math.inf, post_alarm="halt")
    pilot = run_detector(ops, pilot_cfg, noise_stream)
    return margin * float(pilot.statistics[warmup:].max())


def cmd_audio(args: argparse.Namespace) -> int:
    opts = _resolve(args, _AUDIO_DEFAULTS, _AUDIO_CONV)
    if args.fixture:
        speech, noise = _fixture_path("speech.wav"), _fixture_path("noise.wav")
    else:
        if not (args.speech and args.noise):
            raise UsageError("provide --speech and --noise, or use --fixture")
        speech, noise = Path(args.speech), Path(args.noise)
    if opts["mode"] not in ("spd", "grassmann"):
        raise UsageError("--mode must be spd or grassmann")
    try:
        cfg = AudioPipelineConfig(
            speech_path=speech,
            noise_path=noise,
            snr_db=opts["snr"],
            speech_offset_s=opts["offset"],
            stft_window=opts["stft_window"],
            stft_hop=opts["stft_hop"],
            channels_out=opts["channels"],
            cov_window=opts["cov_window"],
            subspace_k=opts["k"],
            epsilon_reg=opts["epsilon_reg"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    a_param = opts["a_param"]
    if a_param is None:
        a_param = _default_a_param(opts["mode"])
    try:
        huber = HuberConfig(threshold_a=a_param, step_alpha=opts["alpha"])
        _ = DetectorConfig(huber=huber, threshold_xi=1.0)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    mix = mix_audio(cfg)
    ops, stream = _audio_stream(cfg, mix.samples, opts["mode"])
    onset = speech_onset_index(cfg, mix.speech_offset)

    xi = opts["xi"]
    if xi is None:
        _, noise_samples = load_wav(cfg.noise_path)
        _, noise_stream = _audio_stream(cfg, noise_samples, opts["mode"])
        xi = calibrate_audio_threshold(ops, noise_stream, huber, opts["warmup"])
        print(f"calibrated xi = {xi:.6g}")

    # dead time spans the re-initialization transient so a reset cannot
    # immediately re-alarm on its own settling excursion
    cfg_det = DetectorConfig(
        huber=huber, threshold_xi=xi, post_alarm="reset",
        dead_time=max(50, opts["warmup"]),
    )
    result = run_detector(ops, cfg_det, stream)
    out = Path(args.output)
    write_stream(out, ops, stream)
    trace_path = Path(args.trace or f"{out}.trace.csv")
    _write_trace(trace_path, result)
    print(f"stream written to {out} ({len(stream)} records)")
    print(f"trace written to {trace_path}")
    print(f"speech onset at stream index {onset}")
    flags_after_warmup = [t for t in result.flags if t > opts["warmup"]]
    if flags_after_warmup:
        print("flagged:", " ".join(str(t) for t in flags_after_warmup))
    else:
        print("flagged: none")
    return 0


# -- wiring ----------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="manifold-cpd")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic stream file")
    sim.add_argument("--manifold", choices=("spd", "grassmann"))
    sim.add_argument("--p", type=int)
    sim.add_argument("--k", type=int)
    sim.add_argument("--T", dest="length", type=int)
    sim.add_argument("--t-r", dest="change_at", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--config")
    sim.add_argument("-o", "--output", required=True)
    sim.set_defaults(func=cmd_simulate)

    det = sub.add_parser("detect", help="run the detector over a stream file")
    det.add_argument("-i", "--input", required=True)
    det.add_argument("--xi", type=float, required=True)
    det.add_argument("--alpha", type=float)
    det.add_argument("--a-param", dest="a_param", type=float)
    det.add_argument("--policy", choices=("reset", "halt"))
    det.add_argument("--dead-time", dest="dead_time", type=int)
    det.add_argument("--seed", type=int)
    det.add_argument("--config")
    det.add_argument("-o", "--output")
    det.set_defaults(func=cmd_detect)

    ben = sub.add_parser("benchmark", help="Monte Carlo MDD/ARL comparison")
    ben.add_argument("--manifold", choices=("spd", "grassmann"))
    ben.add_argument("--p", type=int)
    ben.add_argument("--k", type=int)
    ben.add_argument("--T", dest="length", type=int)
    ben.add_argument("--t-r", dest="change_at", type=int)
    ben.add_argument("--runs", type=int)
    ben.add_argument("--seed", type=int)
    ben.add_argument("--alpha", type=float)
    ben.add_argument("--a-param", dest="a_param", type=float)
    ben.add_argument("--methods")
    ben.add_argument("--grid-points", dest="grid_points", type=int)
    ben.add_argument("--pilot-runs", dest="pilot_runs", type=int)
    ben.add_argument("--warmup", type=int)
    ben.add_argument("--chunk", type=int)
    ben.add_argument("--change-delta", dest="change_delta", type=float,
                     help="geodesic magnitude of the change (0 = redraw)")
    ben.add_argument("--mean-scale", dest="mean_scale", type=float)
    ben.add_argument("--config")
    ben.add_argument("-o", "--output", required=True)
    ben.set_defaults(func=cmd_benchmark)

    aud = sub.add_parser("audio", help="speech-in-noise detection pipeline")
    aud.add_argument("--fixture", action="store_true",
                     help="use the bundled synthetic speech/noise pair")
    aud.add_argument("--speech")
    aud.add_argument("--noise")
    aud.add_argument("--mode", choices=("spd", "grassmann"))
    aud.add_argument("--snr", type=float)
    aud.add_argument("--offset", type=float)
    aud.add_argument("--k", type=int)
    aud.add_argument("--alpha", type=float)
    aud.add_argument("--a-param", dest="a_param", type=float)
    aud.add_argument("--xi", type=float)
    aud.add_argument("--warmup", type=int)
    aud.add_argument("--stft-window", dest="stft_window", type=int)
    aud.add_argument("--stft-hop", dest="stft_hop", type=int)
    aud.add_argument("--channels", type=int)
    aud.add_argument("--cov-window", dest="cov_window", type=int)
    aud.add_argument("--epsilon-reg", dest="epsilon_reg", type=float)
    aud.add_argument("--seed", type=int)
    aud.add_argument("--config")
    aud.add_argument("-o", "--output", required=True)
    aud.add_argument("--trace")
    aud.set_defaults(func=cmd_audio)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        StreamFormatError,
        AudioError,
        ValidationError,
        DegenerateStreamError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
