"""Command-line entry point: ``scos <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import codes
from .baselines import brute_force_ml
from .bench import (BIAS_KINDS, CsvWriter, SimConfig, draw_frame, estimate_bias, lemma1_bound,
                    pm_histogram, read_bias_profile, run_fer, write_bias_profile)
from .channel import ebn0_to_sigma
from .config import ConfigError, apply_overrides, decoder_config, load_config, parse_bias
from .ordered_search import BiasProfile, ScosConfig, ScosDecoder

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SATURATED = 0, 1, 2, 3


def _snr_list(text: str) -> list[float]:
    """'2,3' or '1:0.5:3' (start:step:stop inclusive)."""
    if ":" in text:
        a, s, b = (float(x) for x in text.split(":"))
        return [round(float(x), 10) for x in np.arange(a, b + s / 2, s)]
    return [float(x) for x in text.split(",") if x]


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_spec(path: str) -> codes.CodeSpec:
    try:
        return codes.CodeSpec.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load code spec {path}: {exc}") from exc


# ------------------------------------------------------------------ construct

def cmd_construct(args) -> int:
    rule = args.rule
    try:
        if rule == "rm":
            spec = codes.rm_code(args.r, args.m)
        elif rule == "polar-pw":
            spec = codes.polar_code(args.n, args.k, args.beta)
        elif rule == "rm-polar":
            r = args.r if args.r is not None else _rm_order_at_least(args.n, args.k)
            spec = codes.rm_polar_code(args.n, r, args.k, args.beta)
        elif rule == "pac":
            spec = codes.pac_code(args.n, args.k, codes.parse_taps(args.g))
        elif rule == "drm-polar":
            r = args.r if args.r is not None else _rm_order_at_least(args.n, args.k)
            base = codes.rm_polar_code(args.n, r, args.k, args.beta)
            spec = codes.sample_drm_polar(base, args.seed)
        else:  # crc-polar
            spec = codes.crc_polar_spec(args.n, args.k, codes.CrcSpec(args.crc), args.reliability,
                                        args.beta, args.design_snr)
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    name = args.name or f"{rule}_{spec.N}_{spec.payload_bits}.json"
    path = _out_dir(args) / name
    spec.save(path)
    print(f"N={spec.N} K={spec.K} payload={spec.payload_bits} rate={spec.rate:.6g} "
          f"hash={spec.code_hash}")
    print("provenance: " + json.dumps(dict(spec.provenance), sort_keys=True))
    print(f"wrote {path}")
    return EXIT_OK


def _rm_order_at_least(n: int, K: int) -> int:
    for r in range(n + 1):
        if len(codes.rm_info_set(r, n)) >= K:
            return r
    raise ValueError(f"K={K} exceeds N")


# ------------------------------------------------------------------- simulate

def _bias_for(kind: str, path: str | None, spec, snr: float, cfg: dict, seed: int
              ) -> BiasProfile | None:
    if kind == "zero":
        return None
    if kind == "profile":
        return read_bias_profile(path, spec)
    if cfg["bias_kind"] not in BIAS_KINDS:
        raise ConfigError(f"bias_kind must be one of {', '.join(BIAS_KINDS)}")
    return estimate_bias(spec, snr, int(cfg["bias_frames"]), seed, cfg["bias_kind"])


def cmd_simulate(args) -> int:
    cfg = apply_overrides(load_config(args.config), {
        "decoder": args.decoder, "snr": _snr_list(args.snr) if args.snr else None,
        "max_frames": args.frames, "min_frames": args.min_frames,
        "min_frame_errors": args.min_errors, "chunk": args.chunk,
        "all_zero": True if args.all_zero else None,
        "lambda_max_ratio": args.lambda_max_ratio, "eta": args.eta, "m_max": args.m_max,
        "bias": args.bias, "bias_frames": args.bias_frames,
        "bias_kind": args.bias_kind, "budget_check": args.budget_check,
        "list_size": args.list_size, "sc_update": args.sc_update,
        "t_max": args.t_max, "alpha": args.alpha, "flip_order_max": args.flip_order_max,
    })
    spec = _load_spec(args.spec)
    snrs = cfg["snr"]
    if isinstance(snrs, str):
        try:
            snrs = _snr_list(snrs)
        except ValueError as exc:
            raise ConfigError(f"bad snr list {snrs!r}") from exc
    elif not isinstance(snrs, list):
        snrs = [snrs]
    kind, bias_path = parse_bias(cfg["bias"])
    if cfg["decoder"] == "dscf" and spec.crc is None:
        raise ConfigError("dscf needs a code with a CRC")
    out = _out_dir(args) / (args.name or "simulate.csv")
    with open(out, "w") as fh:
        streams = [fh] if args.quiet else [fh, sys.stdout]
        writers = [CsvWriter(s) for s in streams]
        # one run per point so that SNR-dependent bias profiles can be used
        for snr in snrs:
            bias = _bias_for(kind, bias_path, spec, snr, cfg, args.seed) \
                if cfg["decoder"] == "scos" else None
            dcfg = decoder_config(cfg, spec.N, bias)
            try:
                sim = SimConfig(spec, cfg["decoder"], dcfg, (float(snr),),
                                int(cfg["min_frames"]), int(cfg["max_frames"]),
                                int(cfg["min_frame_errors"]), args.seed, args.workers,
                                int(cfg["chunk"]), bool(cfg["all_zero"]))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            if sim.max_frames == 0:
                continue
            res = run_fer(sim)
            for w in writers:
                w.write(res.points[0], args.seed)
    return EXIT_OK


# ----------------------------------------------------------- bias / histogram

def cmd_bias(args) -> int:
    spec = _load_spec(args.spec)
    prof = estimate_bias(spec, args.snr, args.frames, args.seed, args.kind)
    path = _out_dir(args) / (args.name or f"bias_{spec.code_hash}_{args.snr:g}dB.txt")
    write_bias_profile(path, prof, spec, args.snr, args.frames, args.seed)
    print(f"sum p = {prof.p.sum():.6g}; wrote {path}")
    return EXIT_OK


def cmd_histogram(args) -> int:
    spec = _load_spec(args.spec)
    h = pm_histogram(spec, args.snr, args.frames, args.bins, args.seed)
    path = _out_dir(args) / (args.name or f"pm_hist_{spec.code_hash}_{args.snr:g}dB.csv")
    with open(path, "w") as fh:
        fh.write("bin_lo,bin_hi,density\n")
        for lo, hi, d in zip(h.edges[:-1], h.edges[1:], h.density):
            fh.write(f"{lo:.6g},{hi:.6g},{d:.6g}\n")
    print(f"frames={args.frames} above {args.tail:g}: {h.count_above(args.tail)} "
          f"(tail mass {h.tail_mass(args.tail):.6g}); wrote {path}")
    return EXIT_OK


def cmd_vset(args) -> int:
    spec = _load_spec(args.spec)
    bias = read_bias_profile(args.bias_profile, spec) if args.bias_profile else None
    r = lemma1_bound(spec, args.snr, args.frames, args.seed, bias, args.node_cap)
    path = _out_dir(args) / (args.name or f"vset_{spec.code_hash}_{args.snr:g}dB.csv")
    with open(path, "w") as fh:
        fh.write("frame,vset_ratio,visit_ratio,saturated\n")
        for f in range(r.frames):
            fh.write(f"{f},{r.bound[f]:.6g},{r.ratio[f]:.6g},{int(r.saturated[f])}\n")
    print(f"snr_db={args.snr:g} frames={r.frames} mean_bound={r.mean_bound:.6g} "
          f"mean_visit_ratio={r.mean_ratio:.6g} violations={r.violations} "
          f"saturated={int(r.saturated.sum())}")
    if r.saturated.any():
        print("warning: visited-set traversal hit the node cap", file=sys.stderr)
        return EXIT_SATURATED
    return EXIT_OK


def cmd_ml_crosscheck(args) -> int:
    spec = _load_spec(args.spec)
    dec = ScosDecoder(spec, ScosConfig())
    bad = 0
    for snr in _snr_list(args.snr):
        sigma = ebn0_to_sigma(snr, spec.rate)
        for f in range(args.frames):
            _, llr = draw_frame(spec, sigma, args.seed, f)
            o = dec.decode(llr)
            u_ml, pm_ml = brute_force_ml(spec, llr)
            if o.pm != pm_ml or not np.array_equal(o.u_hat, u_ml):
                bad += 1
        print(f"snr_db={snr:g} frames={args.frames} disagreements_so_far={bad}")
    print(f"disagreements={bad}")
    return EXIT_OK if bad == 0 else EXIT_FAIL


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--seed", type=int, default=0)
    glob.add_argument("--workers", type=int, default=1)
    glob.add_argument("--out", default=".", help="output directory")
    glob.add_argument("--name", help="output file name inside --out")

    p = argparse.ArgumentParser(prog="scos", description=__doc__, parents=[glob])
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("construct", parents=[glob], help="build and save a code spec")
    c.add_argument("rule", choices=["rm", "polar-pw", "rm-polar", "pac", "drm-polar", "crc-polar"])
    c.add_argument("--n", type=int)
    c.add_argument("--m", type=int, help="RM length exponent")
    c.add_argument("--k", type=int, help="dimension (payload size for crc-polar)")
    c.add_argument("--r", type=int, help="RM order")
    c.add_argument("--g", default="011011", help="PAC taps g_1..g_m")
    c.add_argument("--beta", type=float, default=codes.DEFAULT_BETA)
    c.add_argument("--crc", default=codes.CRC7_TAPS, help="CRC taps, highest degree first")
    c.add_argument("--reliability", choices=["polar-pw", "ga"], default="polar-pw")
    c.add_argument("--design-snr", type=float, default=0.0)
    c.set_defaults(func=cmd_construct)

    s = sub.add_parser("simulate", parents=[glob], help="FER / complexity Monte Carlo")
    s.add_argument("--spec", required=True)
    s.add_argument("--config")
    s.add_argument("--decoder", choices=["sc", "scos", "scl", "dscf", "ml"])
    s.add_argument("--snr", help="E_b/N_0 list '2,3' or range '1:0.5:3'")
    s.add_argument("--frames", type=int, help="maximum frames per point")
    s.add_argument("--min-frames", type=int)
    s.add_argument("--min-errors", type=int)
    s.add_argument("--chunk", type=int)
    s.add_argument("--all-zero", action="store_true")
    s.add_argument("--lambda-max-ratio", type=float)
    s.add_argument("--eta")
    s.add_argument("--m-max", type=float)
    s.add_argument("--bias")
    s.add_argument("--bias-frames", type=int)
    s.add_argument("--bias-kind", choices=BIAS_KINDS)
    s.add_argument("--budget-check", choices=["pass", "phase"])
    s.add_argument("--sc-update", choices=["minsum", "exact"])
    s.add_argument("--list-size", type=int)
    s.add_argument("--t-max", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--flip-order-max", type=int)
    s.add_argument("--quiet", action="store_true", help="do not echo CSV to stdout")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bias", parents=[glob], help="genie-aided first-error profile")
    b.add_argument("--spec", required=True)
    b.add_argument("--snr", type=float, required=True)
    b.add_argument("--frames", type=int, default=100000)
    b.add_argument("--kind", choices=BIAS_KINDS, default="first-error")
    b.set_defaults(func=cmd_bias)

    h = sub.add_parser("histogram", parents=[glob], help="genie-path PM density")
    h.add_argument("--spec", required=True)
    h.add_argument("--snr", type=float, required=True)
    h.add_argument("--frames", type=int, default=100000)
    h.add_argument("--bins", type=int, default=100)
    h.add_argument("--tail", type=float, default=50.0)
    h.set_defaults(func=cmd_histogram)

    v = sub.add_parser("vset", parents=[glob], help="visited-set lower bound vs SCOS visits")
    v.add_argument("--spec", required=True)
    v.add_argument("--snr", type=float, required=True)
    v.add_argument("--frames", type=int, default=1000)
    v.add_argument("--bias-profile")
    v.add_argument("--node-cap", type=int, default=10 ** 7)
    v.set_defaults(func=cmd_vset)

    x = sub.add_parser("ml-crosscheck", parents=[glob], help="unbounded SCOS vs exhaustive ML")
    x.add_argument("--spec", required=True)
    x.add_argument("--snr", default="0,2,4")
    x.add_argument("--frames", type=int, default=10000)
    x.set_defaults(func=cmd_ml_crosscheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
