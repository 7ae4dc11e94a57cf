"""Command-line front end.

Exit codes: 0 success, 1 invalid argument or domain error, 2 file I/O or
format error, 3 single solve did not converge.

Every subcommand accepts ``--config FILE`` with flat ``key=value`` lines
(keys are flag names without the leading dashes); explicit flags win.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments, theory
from .errors import DomainError, FormatError, InfeasibleError, ResourceError
from .fileio import read_raw_frames, read_wav, write_raw_frames, write_wav
from .model import SupportSet, build_weights
from .operators import gaussian_operator
from .solver import SolveOptions, solve_weighted_bpdn
from .streaming import (AudioStream, StreamingPolicy, audio_pipeline, synthetic_video,
                        video_pipeline, write_audio_metrics, write_video_metrics)

EXIT_OK, EXIT_DOMAIN, EXIT_IO, EXIT_NOT_CONVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_DOMAIN, f"{self.prog}: error: {message}\n")


def _float_in(lo, hi, lo_open=False, hi_open=False):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not a number")
        bad = (v < lo or v > hi or (lo_open and v == lo) or (hi_open and v == hi))
        if bad or not np.isfinite(v):
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            raise argparse.ArgumentTypeError(f"{v} outside {lb}{lo}, {hi}{rb}")
        return v
    return parse


def _int_min(lo):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
        if v < lo:
            raise argparse.ArgumentTypeError(f"{v} is below the minimum {lo}")
        return v
    return parse


def _list_of(parse_one):
    def parse(text):
        return tuple(parse_one(t) for t in str(text).split(",") if t.strip())
    return parse


unit = _float_in(0, 1)
nonneg = _float_in(0, np.inf)
rip = _float_in(0, 1, hi_open=True)


def _add_solver_flags(p):
    p.add_argument("--feasibility-tol", type=_float_in(0, 1, lo_open=True), default=1e-6,
                   help="residual tolerance relative to max(1, ||y||), in (0, 1] (default 1e-6)")
    p.add_argument("--optimality-tol", type=_float_in(0, 1, lo_open=True), default=1e-6,
                   help="relative duality-gap tolerance, in (0, 1] (default 1e-6)")
    p.add_argument("--max-outer", type=_int_min(1), default=100,
                   help="outer Newton iterations, >= 1 (default 100)")
    p.add_argument("--max-inner", type=_int_min(1), default=10000,
                   help="total projected-gradient iterations, >= 1 (default 10000)")


def _solve_options(args):
    return SolveOptions(feasibility_tol=args.feasibility_tol, optimality_tol=args.optimality_tol,
                        max_outer_iterations=args.max_outer,
                        max_inner_iterations=args.max_inner,
                        algorithm=getattr(args, "algorithm", "pareto_root"))


def _add_sweep_flags(p, presets):
    p.add_argument("--preset", choices=presets,
                   help="named experiment grid; explicit flags below override it")
    p.add_argument("--N", type=_int_min(1), help="ambient dimension, >= 1")
    p.add_argument("--k", type=_int_min(0), help="sparsity level, 0 <= k <= N")
    p.add_argument("--n-values", type=_list_of(_int_min(1)), help="comma list of measurement counts, each >= 1")
    p.add_argument("--rho-values", type=_list_of(nonneg), help="comma list of support-size ratios, each >= 0")
    p.add_argument("--alpha-values", type=_list_of(unit), help="comma list of accuracies in [0, 1]")
    p.add_argument("--omega-values", type=_list_of(unit), help="comma list of weights in [0, 1]")
    p.add_argument("--noise-fraction", type=nonneg,
                   help="epsilon as a fraction of ||x||_2, >= 0; 0 means noise-free")
    p.add_argument("--trials", type=_int_min(1), help="trials per cell, >= 1")
    p.add_argument("--seed", type=int, default=0, help="base seed, any integer (default 0)")
    p.add_argument("--jobs", type=_int_min(1), default=1,
                   help="worker processes, >= 1; output does not depend on it (default 1)")
    p.add_argument("--out", required=True, help="per-trial CSV output path")
    p.add_argument("--aggregate-out", help="optional per-cell mean/std CSV output path")
    p.add_argument("--plot-out", help="optional plot-series JSON output path")
    _add_solver_flags(p)


def build_parser():
    parser = _Parser(prog="weightedcs", description="Weighted l1 recovery with partial support information.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("theory", help="recovery-guarantee calculators")
    p.add_argument("--config", help="key=value file with flag defaults")
    p.add_argument("--a", type=_float_in(1, np.inf, lo_open=True), default=3.0, help="oversize factor a > 1 (default 3)")
    p.add_argument("--k", type=_int_min(1), default=1, help="sparsity level k >= 1 (default 1)")
    p.add_argument("--omega", type=unit, default=1.0, help="weight in [0, 1] (default 1)")
    p.add_argument("--rho", type=nonneg, default=1.0, help="support-size ratio >= 0 (default 1)")
    p.add_argument("--alpha", type=unit, default=0.5, help="support accuracy in [0, 1] (default 0.5)")
    p.add_argument("--delta-ak", type=rip, default=0.1, help="RIP constant of order ak, in [0, 1) (default 0.1)")
    p.add_argument("--delta-a1k", type=rip, default=0.1, help="RIP constant of order (a+1)k, in [0, 1) (default 0.1)")
    p.add_argument("--grid", action="store_true",
                   help="emit delta_hat/C0'/C1' CSV over omega in {0,.1,..,1}, alpha in {0,.05,..,1}, rho in {0.5,1,2}")
    p.add_argument("--out", help="CSV path for --grid (default stdout)")
    p.add_argument("--reduced-u", action="store_true", help="print the largest u/k allowed by --delta2k")
    p.add_argument("--delta2k", type=_float_in(0, 1, lo_open=True, hi_open=True), help="RIP constant of order 2k, in (0, 1)")
    p.add_argument("--vaswani", action="store_true", help="evaluate the modified-CS condition from the --d-* flags")
    for name in ("2u", "3u", "k", "ku", "k2u"):
        p.add_argument(f"--d-{name}", type=rip, default=0.0, help=f"delta_{name} for --vaswani, in [0, 1) (default 0)")

    p = sub.add_parser("solve", help="solve one weighted BPDN problem from files")
    p.add_argument("--config", help="key=value file with flag defaults")
    p.add_argument("--matrix", required=True, help="n x N matrix (.npy, or whitespace/comma text)")
    p.add_argument("--y", required=True, help="length-n measurement vector file")
    p.add_argument("--weights", help="length-N weight file, entries >= 0 (default all ones)")
    p.add_argument("--support", help="file of support-estimate indices in [0, N); uses --omega")
    p.add_argument("--omega", type=unit, default=1.0, help="weight on --support, in [0, 1] (default 1)")
    p.add_argument("--epsilon", type=nonneg, default=0.0, help="residual bound >= 0 (default 0)")
    p.add_argument("--algorithm", choices=("pareto_root", "penalized_fallback"), default="pareto_root",
                   help="solver algorithm (default pareto_root)")
    p.add_argument("--out", help="write the solution vector here (one value per line)")
    _add_solver_flags(p)

    p = sub.add_parser("rip", help="exact RIP constant of a small Gaussian or given matrix")
    p.add_argument("--config", help="key=value file with flag defaults")
    p.add_argument("--n", type=_int_min(1), help="rows of the Gaussian matrix, >= 1")
    p.add_argument("--N", type=_int_min(1), help="columns of the Gaussian matrix, >= 1")
    p.add_argument("--k", type=_int_min(1), required=True, help="sparsity order, 1 <= k <= N")
    p.add_argument("--seed", type=int, default=0, help="matrix seed, any integer (default 0)")
    p.add_argument("--matrix", help="use this matrix file instead of a Gaussian draw")

    for name, kinds in (("sweep-sparse", ("fig4a", "fig4b")), ("sweep-rho", ("fig5a", "fig5b")),
                        ("sweep-compressible", tuple(k for k in experiments.PRESETS if k.startswith(("fig6", "fig7", "fig8"))))):
        p = sub.add_parser(name, help=f"synthetic SNR sweep ({name.split('-')[1]})")
        p.add_argument("--config", help="key=value file with flag defaults")
        _add_sweep_flags(p, kinds)
        if name == "sweep-compressible":
            p.add_argument("--p", type=_float_in(1, np.inf, lo_open=True), help="decay power p > 1")

    p = sub.add_parser("video", help="block-streaming video recovery")
    p.add_argument("--config", help="key=value file with flag defaults")
    p.add_argument("--in", dest="infile", help="raw planar 8-bit frames file (omit for a synthetic sequence)")
    p.add_argument("--height", type=_int_min(2), default=144, help="frame height, even, >= 2 (default 144)")
    p.add_argument("--width", type=_int_min(2), default=176, help="frame width, even, >= 2 (default 176)")
    p.add_argument("--count", type=_int_min(1), default=30, help="frames to process, >= 1 (default 30)")
    p.add_argument("--omega", type=unit, default=0.5, help="weight in [0, 1] (default 0.5)")
    p.add_argument("--n0-fraction", type=_float_in(0, 1, lo_open=True), default=0.5,
                   help="first-frame measurement fraction, in (0, 1] (default 0.5)")
    p.add_argument("--nj-fraction", type=_float_in(0, 1, lo_open=True), default=1 / 2.2,
                   help="later-frame measurement fraction, in (0, 1] (default 1/2.2)")
    p.add_argument("--energy-fraction", type=_float_in(0, 1, lo_open=True), default=0.97,
                   help="AC energy kept by the support rule, in (0, 1] (default 0.97)")
    p.add_argument("--standard", action="store_true", help="use standard l1 for every frame")
    p.add_argument("--seed", type=int, default=0, help="sampling seed, any integer (default 0)")
    p.add_argument("--out", help="optional per-frame metrics CSV path")
    p.add_argument("--frames-out", help="write recovered frames as raw 8-bit planar data")
    _add_solver_flags(p)

    p = sub.add_parser("audio", help="block-streaming audio recovery")
    p.add_argument("--config", help="key=value file with flag defaults")
    p.add_argument("--in", dest="infile", required=True, help="16-bit PCM mono WAV file")
    p.add_argument("--block-len", type=_int_min(1), default=2048, help="block length N, >= 1 (default 2048)")
    p.add_argument("--omega", type=_list_of(unit), default=(0.5,),
                   help="comma list of weights in [0, 1] (default 0.5)")
    p.add_argument("--fraction", type=_float_in(0, 1, lo_open=True), default=0.25,
                   help="fraction of samples kept, in (0, 1] (default 0.25)")
    p.add_argument("--cutoff-hz", type=nonneg, default=4000.0, help="low-frequency cutoff >= 0 Hz (default 4000)")
    p.add_argument("--topk-divisor", type=_int_min(1), default=16,
                   help="previous-block coefficients kept = n_j // divisor, divisor >= 1 (default 16)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed, any integer (default 0)")
    p.add_argument("--out", help="optional per-block metrics CSV path")
    p.add_argument("--wav-out", help="write the recovery for the first omega as WAV")
    _add_solver_flags(p)
    return parser


def _read_config(path, subparser_dests):
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        dest = key.lstrip("-").replace("-", "_")
        if dest == "in":
            dest = "infile"
        if dest not in subparser_dests:
            raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
        values[dest] = (key, val)
    return values


def _parse(argv):
    parser = build_parser()
    subs = parser._subparsers._group_actions[0].choices
    required = {}
    for name, sub in subs.items():
        # required flags may come from --config, so they are checked after merging
        required[name] = [a for a in sub._actions if a.required]
        for a in required[name]:
            a.required = False
    args = parser.parse_args(argv)
    sub = subs[args.command]
    if getattr(args, "config", None):
        actions = {a.dest: a for a in sub._actions}
        cfg = _read_config(args.config, actions)
        explicit = set()
        for tok in argv:
            if tok.startswith("--"):
                explicit.add(tok[2:].split("=", 1)[0].replace("-", "_"))
        explicit = {("infile" if e == "in" else e) for e in explicit}
        for dest, (key, val) in cfg.items():
            if dest in explicit:
                continue
            act = actions[dest]
            if act.nargs == 0:
                setattr(args, dest, val.lower() in ("1", "true", "yes", "on"))
            elif act.choices is not None and val not in act.choices:
                sub.error(f"config key {key}: invalid choice {val!r}")
            else:
                try:
                    setattr(args, dest, act.type(val) if act.type else val)
                except argparse.ArgumentTypeError as exc:
                    sub.error(f"config key {key}: {exc}")
    missing = [a.option_strings[-1] for a in required[args.command] if getattr(args, a.dest) is None]
    if missing:
        sub.error(f"the following arguments are required: {', '.join(missing)}")
    return args


def _load_array(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix == ".npy":
        return np.load(path)
    text = path.read_text(encoding="utf-8").replace(",", " ")
    rows = [list(map(float, ln.split())) for ln in text.splitlines() if ln.strip()]
    return np.array(rows, dtype=float).squeeze() if rows else np.zeros(0)


def _fmt(v):
    return "inf" if np.isinf(v) else f"{v:.6f}"


def cmd_theory(args, out):
    if args.reduced_u:
        if args.delta2k is None:
            raise DomainError("--reduced-u needs --delta2k")
        print(f"u_over_k {theory.reduced_condition_max_u_over_k(args.delta2k):.6f}", file=out)
        return EXIT_OK
    if args.vaswani:
        holds = theory.vaswani_condition(args.d_2u, args.d_3u, args.d_k, args.d_ku, args.d_k2u)
        print(f"vaswani_condition {str(holds).lower()}", file=out)
        print(f"u0_boundary_delta_k {theory.vaswani_u0_boundary():.6f}", file=out)
        return EXIT_OK
    if args.grid:
        rows = theory.condition_table(
            omegas=[round(0.1 * i, 1) for i in range(11)],
            alphas=[round(0.05 * i, 2) for i in range(21)],
            rhos=[0.5, 1.0, 2.0], a=args.a, delta=args.delta_a1k)
        if args.out:
            theory.write_condition_csv(rows, args.out)
        else:
            theory.write_condition_csv(rows, out)
        return EXIT_OK
    g = theory.GuaranteeInputs(a=args.a, k=args.k, rho=args.rho, alpha=args.alpha, omega=args.omega,
                               delta_ak=args.delta_ak, delta_a1k=args.delta_a1k)
    res = theory.evaluate(g)
    print(f"gamma {_fmt(res.gamma)}", file=out)
    print(f"delta_hat {_fmt(res.delta_hat)}", file=out)
    print(f"C0p {_fmt(res.C0p)}", file=out)
    print(f"C1p {_fmt(res.C1p)}", file=out)
    print(f"condition_holds {str(res.condition_holds).lower()}", file=out)
    print(f"delta2k_threshold {_fmt(theory.candes_delta2k_conditions(args.omega, args.rho, args.alpha))}", file=out)
    return EXIT_OK


def cmd_solve(args, out):
    A = np.atleast_2d(_load_array(args.matrix))
    y = np.atleast_1d(_load_array(args.y))
    N = A.shape[1]
    if args.weights:
        w = np.atleast_1d(_load_array(args.weights))
    elif args.support:
        idx = np.atleast_1d(_load_array(args.support)).astype(int)
        w = build_weights(SupportSet(idx, N), args.omega, N)
    else:
        w = np.ones(N)
    rep = solve_weighted_bpdn(A, y, w, args.epsilon, _solve_options(args))
    if args.out:
        np.savetxt(args.out, rep.solution, fmt="%.12g")
    print(f"converged {str(rep.converged).lower()}", file=out)
    print(f"status {rep.status}", file=out)
    print(f"residual_norm {rep.residual_norm:.6e}", file=out)
    print(f"weighted_objective {rep.weighted_objective:.12g}", file=out)
    print(f"certified_gap {rep.certified_gap:.3e}", file=out)
    print(f"outer_iterations {rep.outer_iterations}", file=out)
    print(f"inner_iterations {rep.inner_iterations}", file=out)
    if not args.out:
        print("solution " + " ".join(f"{v:.12g}" for v in rep.solution), file=out)
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def cmd_rip(args, out):
    if args.matrix:
        A = np.atleast_2d(_load_array(args.matrix))
    else:
        if args.n is None or args.N is None:
            raise DomainError("rip needs --n and --N (or --matrix)")
        A = gaussian_operator(args.n, args.N, args.seed).matrix
    if args.k > A.shape[1]:
        raise DomainError(f"--k {args.k} exceeds N = {A.shape[1]}")
    print(f"delta_{args.k} {theory.empirical_rip_delta(A, args.k):.10f}", file=out)
    return EXIT_OK


def cmd_sweep(args, out, kind_default):
    overrides = {}
    mapping = {"N": "N", "k": "k", "n_values": "n_values", "rho_values": "rho_values",
               "alpha_values": "alpha_values", "omega_values": "omega_values", "trials": "trials"}
    for flag, field in mapping.items():
        v = getattr(args, flag)
        if v is not None:
            overrides[field] = v
    if args.noise_fraction is not None:
        overrides["noise_fraction"] = args.noise_fraction
        overrides["noise_mode"] = "relative" if args.noise_fraction > 0 else "noise_free"
    if getattr(args, "p", None) is not None:
        overrides["p_values"] = (args.p,)
    overrides["base_seed"] = args.seed
    overrides["solve_options"] = _solve_options(args)
    if args.preset:
        kind, cfg = experiments.preset(args.preset)
        cfg = replace(cfg, **overrides)
    else:
        kind = kind_default
        cfg = experiments.SweepConfig(**overrides)
    result = experiments.run_kind(kind, cfg, jobs=args.jobs)
    experiments.emit_csv(result, args.out)
    if args.aggregate_out:
        experiments.emit_aggregate_csv(result, args.aggregate_out)
    if args.plot_out:
        experiments.emit_plot_data(result, args.plot_out)
    print(f"records {len(result.records)}", file=out)
    return EXIT_OK


def cmd_video(args, out):
    if args.infile:
        seq = read_raw_frames(args.infile, args.height, args.width, args.count)
    else:
        seq = synthetic_video(args.height, args.width, args.count, seed=args.seed)
    policy = StreamingPolicy(n0_fraction=args.n0_fraction, nj_fraction=args.nj_fraction,
                             omega=args.omega, energy_fraction=args.energy_fraction)
    res = video_pipeline(seq, policy, args.seed, _solve_options(args), weighted=not args.standard)
    if args.out:
        write_video_metrics(res, args.out)
    if args.frames_out:
        from .streaming import FrameSequence
        write_raw_frames(FrameSequence(np.clip(np.round(res.recovered), 0, 255).astype(np.uint8)),
                         args.frames_out)
    print(f"mean_psnr_db {np.mean(res.psnr):.6f}", file=out)
    return EXIT_OK


def cmd_audio(args, out):
    stream = read_wav(args.infile)
    results = []
    for om in args.omega:
        policy = StreamingPolicy(nj_fraction=args.fraction, omega=om,
                                 lowfreq_cutoff_hz=args.cutoff_hz, prev_topk_divisor=args.topk_divisor)
        res = audio_pipeline(stream, args.block_len, policy, args.seed, _solve_options(args))
        results.append(res)
        print(f"omega {om:.6f} snr_db {res.snr_db:.6f}", file=out)
    if args.out:
        write_audio_metrics(results, args.out)
    if args.wav_out:
        write_wav(AudioStream(np.clip(results[0].recovered, -1, 1 - 2**-15), stream.sample_rate),
                  args.wav_out)
    return EXIT_OK


COMMANDS = {
    "theory": cmd_theory,
    "solve": cmd_solve,
    "rip": cmd_rip,
    "sweep-sparse": lambda a, o: cmd_sweep(a, o, "sparse"),
    "sweep-rho": lambda a, o: cmd_sweep(a, o, "rho"),
    "sweep-compressible": lambda a, o: cmd_sweep(a, o, "compressible"),
    "video": cmd_video,
    "audio": cmd_audio,
}


def main(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR)
    try:
        return COMMANDS[args.command](args, out)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, InfeasibleError, ResourceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
