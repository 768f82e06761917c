"""Command line entry point: `geflab <subcommand> [--config PATH] [--seed N] [--out DIR] [--threads K]`.

Exit status: 0 when every check of the run passes, 1 on a numeric failure,
2 on a usage or configuration error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance as acc
from . import estimators as est
from . import io
from . import kacrice as kr
from . import plots
from . import spectrogram as sp
from .config import RunConfig, load
from .errors import ConfigError, GefLabError, InsufficientSignal
from .field import GefEvaluator, sample_gef, save_sample
from .landmarks import LOCALMAX, SADDLE, ZERO, Landmark, LandmarkSet
from .rng import stream

SUBCOMMANDS = ("sample", "landmarks", "moments", "kacrice", "spectrogram", "fit", "acceptance")


class UsageError(Exception):
    pass


def _say(msg: str) -> None:
    print(msg, flush=True)


# ------------------------------------------------------------------ subcommands

def cmd_sample(cfg: RunConfig, out: Path, man: io.Manifest) -> bool:
    for i in range(cfg.samples):
        s = sample_gef(cfg.R_max, stream(cfg.seed, i), seed=(cfg.seed, i))
        p = out / "samples" / f"sample-{i:04d}.csv"
        p.parent.mkdir(parents=True, exist_ok=True)
        save_sample(s, p)
        man.add(p)
    _say(f"wrote {cfg.samples} samples (N={s.N}) to {out / 'samples'}")
    return True


def cmd_landmarks(cfg: RunConfig, out: Path, man: io.Manifest) -> bool:
    corpus = est.build_corpus(cfg.samples, cfg.R_max, cfg.seed, cfg.threads)
    unresolved = 0
    for i, ls in enumerate(corpus):
        man.add(io.write_landmarks(out / "landmarks" / f"landmarks-{i:04d}.csv", ls))
        unresolved += ls.diagnostics.get("unresolved_windings", 0)
    first = GefEvaluator(sample_gef(cfg.R_max, stream(cfg.seed, 0), seed=(cfg.seed, 0)))
    man.add(plots.landmark_plot(corpus[0], out / "landmarks-0000.png", first))
    nz = sum(len(ls.zeros) for ls in corpus)
    nc = sum(len(ls.criticals) for ls in corpus)
    _say(f"{len(corpus)} samples: {nz} zeros, {nc} critical points, {unresolved} unresolved windings")
    return unresolved == 0


def cmd_moments(cfg: RunConfig, out: Path, man: io.Manifest) -> bool:
    corpus = est.build_corpus(cfg.samples, cfg.R_max, cfg.seed, cfg.threads)
    means, errs = est.estimate_first_moments(cfg.rho, corpus, cfg.placement)
    rows = [(g, cfg.rho, m, e, est.FIRST_TARGETS[g] * cfg.rho ** 2, len(corpus))
            for g, m, e in zip(est.FIRST, means, errs)]
    man.add(io.write_csv(out / "first_moments.csv", "moments",
                         ("kind", "rho", "estimate", "stderr", "expected", "n_samples"), rows))
    for g, m, e in zip(est.FIRST, means, errs):
        _say(f"E N{g}(rho={cfg.rho}) = {m:.5f} +- {e:.5f}")
    profiles, fits = [], {}
    fit_rows = []
    for pair in cfg.pairs:
        prof = est.pair_profile(pair, cfg.radii, corpus, cfg.placement)
        profiles.append(prof)
        man.add(io.write_profile(out / f"profile_{pair}.csv", prof, len(corpus)))
        try:
            f = est.fit_exponent(prof, (cfg.fit_lo, cfg.fit_hi))
            fits[prof.label] = f
            fit_rows.append((pair, f.slope, f.slope_stderr, f.fit_range[0], f.fit_range[1], f.n_rows))
            _say(f"{pair}: slope {f.slope:.3f} +- {f.slope_stderr:.3f}")
        except InsufficientSignal as e:
            _say(f"{pair}: no fit ({e})")
    man.add(io.write_csv(out / "fits.csv", "fits",
                         ("label", "slope", "slope_stderr", "lo", "hi", "n_rows"), fit_rows))
    if profiles:
        man.add(plots.profile_plot(profiles, out / "profiles.png", fits, "ordered pairs in a disk"))
    return True


def cmd_kacrice(cfg: RunConfig, out: Path, man: io.Manifest) -> bool:
    rows = []
    profiles, fits = [], {}
    for part, kind in enumerate(cfg.kinds):
        rng = stream(cfg.seed, 1, part)
        vals = [kr.sigma(kind, r, cfg.draws, rng) for r in cfg.r_values]
        rows += [(f"sigma_{kind}", r, m, s, cfg.draws) for r, (m, s) in zip(cfg.r_values, vals)]
        prof = acc._profile_from(f"sigma_{kind}", cfg.r_values, vals)
        profiles.append(prof)
        try:
            fits[prof.label] = est.fit_exponent(prof)
            _say(f"sigma_{kind}: slope {fits[prof.label].slope:.3f}")
        except InsufficientSignal:
            pass
    rng = stream(cfg.seed, 2)
    zc = [kr.zc_minus_numerator(z, cfg.draws, rng) for z in cfg.radii]
    rows += [("zc-_integrand", z, m, s, cfg.draws) for z, (m, s) in zip(cfg.radii, zc)]
    zprof = acc._profile_from("zc-_integrand", cfg.radii, zc)
    try:
        f = est.fit_exponent(zprof)
        fits[zprof.label] = f
        _say(f"zc- integrand: slope {f.slope:.3f}")
    except InsufficientSignal:
        pass
    man.add(io.write_kacrice(out / "kacrice.csv", rows))
    mrows = []
    for r in cfg.r_values:
        if r < kr.R_MIN:
            continue
        M = kr.conditional_derivative_cov(r).entries
        mrows += [(r, i, j, M[i, j].real, M[i, j].imag) for i in range(3) for j in range(3)]
    man.add(io.write_csv(out / "conditional_cov.csv", "mtable", ("r", "i", "j", "re", "im"), mrows))
    man.add(plots.profile_plot(profiles, out / "sigma.png", fits, "sigma profiles"))
    man.add(plots.profile_plot([zprof], out / "zc_minus_integrand.png", fits, "zc- integrand"))
    m, s = kr.sigma("c", 0.01, cfg.draws, stream(cfg.seed, 3))
    v, e = m / 1e-4, s / 1e-4
    ok = abs(v - 8) <= max(0.4, 5 * e)
    _say(f"[{'PASS' if ok else 'FAIL'}] sigma_c(0.01)/r^2 = {v:.4f} +- {e:.4f} (target 8)")
    return ok


def _grid_landmark_set(marks: sp.GridLandmarks) -> LandmarkSet:
    nan = float("nan")
    mk = lambda pts, kind: tuple(Landmark(complex(p), kind, nan, nan)  # noqa: E731
                                 for p in sp.to_gef_coordinates(pts))
    return LandmarkSet(0j, nan, mk(marks.minima, ZERO),
                       mk(marks.saddles, SADDLE) + mk(marks.maxima, LOCALMAX))


def cmd_spectrogram(cfg: RunConfig, out: Path, man: io.Manifest) -> bool:
    rng = stream(cfg.seed, 4)
    counts, power, pse = sp.noise_landmark_counts(cfg.area, cfg.realizations, rng, cfg.dt, cfg.delta)
    side = math.sqrt(cfg.area / cfg.realizations)
    f = sp.sample_white_noise(side, cfg.dt, stream(cfg.seed, 5))
    grid = np.arange(0.0, side + 1e-9, cfg.delta)
    sg = sp.stft_gauss(f, grid, grid)
    marks = sp.extract_grid_landmarks(sg)
    man.add(io.write_matrix(out / "spectrogram.csv", sg.x, sg.xi, np.abs(sg.values)))
    man.add(io.write_landmarks(out / "spectrogram_landmarks.csv", _grid_landmark_set(marks)))
    man.add(plots.spectrogram_plot(sg, marks, out / "spectrogram.png"))
    corpus = est.build_corpus(cfg.samples, cfg.R_max, cfg.seed, cfg.threads)
    rows = sp.compare_to_gef(counts, sp.gef_landmark_counts(corpus))
    man.add(io.write_csv(out / "comparison.csv", "comparison",
                         ("kind", "noise", "noise_err", "gef", "gef_err", "target", "discrepancy_sigma"),
                         [(r.kind, r.noise, r.noise_err, r.gef, r.gef_err, r.target,
                           r.discrepancy_sigma) for r in rows]))
    for r in rows:
        flag = " FLAG" if r.flagged else ""
        _say(f"{r.kind}: noise {r.noise:.4f} +- {r.noise_err:.4f}, GEF {r.gef:.4f} +- {r.gef_err:.4f}, "
             f"target {r.target:.4f}{flag}")
    _say(f"mean |V|^2 over the landmark windows: {power:.4f} +- {pse:.4f}")
    return not any(r.flagged for r in rows)


def cmd_fit(cfg: RunConfig, out: Path, man: io.Manifest) -> bool:
    if not cfg.profile:
        raise UsageError("fit needs a profile CSV (config key 'profile' or --profile)")
    _, rows = io.read_csv(cfg.profile, "profile")
    if not rows:
        raise UsageError(f"{cfg.profile}: no rows")
    label = rows[0]["pair"]
    prof = est.RadialProfile(label, tuple(
        est.ProfileRow(float(r["rho"]), float(r["estimate"]), float(r["stderr"]),
                       int(r["n_samples"]), int(r["n_disks"])) for r in rows))
    f = est.fit_exponent(prof, (cfg.fit_lo, cfg.fit_hi))
    man.add(io.write_csv(out / "fit.csv", "fits", ("label", "slope", "slope_stderr", "lo", "hi", "n_rows"),
                         [(label, f.slope, f.slope_stderr, f.fit_range[0], f.fit_range[1], f.n_rows)]))
    man.add(plots.profile_plot([prof], out / "fit.png", {label: f}, f"fit of {label}"))
    _say(f"{label}: slope {f.slope:.3f} +- {f.slope_stderr:.3f} over {f.fit_range} ({f.n_rows} rows)")
    return True


def cmd_acceptance(cfg: RunConfig, out: Path, man: io.Manifest, only=None) -> bool:
    suite = acc.Suite(seed=cfg.seed, threads=cfg.threads)
    checks = acc.run(suite, only, report=lambda c: _say(c.line()))
    man.add(io.write_csv(out / "acceptance.csv", "acceptance",
                         ("criterion", "name", "value", "target", "passed", "detail"),
                         [(c.criterion, c.name, c.value, c.target, int(c.passed), c.detail)
                          for c in checks]))
    for key, val in suite.artifacts.items():
        if isinstance(val, est.RadialProfile):
            man.add(io.write_profile(out / f"{key}.csv", val, 0))
            fit = suite.artifacts.get(f"fit_{key.removeprefix('profile_')}")
            fits = {val.label: fit} if fit is not None else {}
            man.add(plots.profile_plot([val], out / f"{key}.png", fits, val.label))
    for k in sorted({c.criterion for c in checks}):
        man.status[str(k)] = "pass" if all(c.passed for c in checks if c.criterion == k) else "fail"
    n_fail = sum(not c.passed for c in checks)
    _say(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return n_fail == 0


COMMANDS = {"sample": cmd_sample, "landmarks": cmd_landmarks, "moments": cmd_moments,
            "kacrice": cmd_kacrice, "spectrogram": cmd_spectrogram, "fit": cmd_fit,
            "acceptance": cmd_acceptance}


# ------------------------------------------------------------------ plumbing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geflab", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", type=Path, help="key = value run configuration")
    ap.add_argument("--seed", type=int, help="master seed (overrides the config)")
    ap.add_argument("--out", type=Path, help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, help="worker processes (default: $GEFLAB_THREADS, then config)")
    ap.add_argument("--profile", type=Path, help="profile CSV for `fit`")
    ap.add_argument("--only", type=str, help="comma-separated criterion numbers for `acceptance`")
    return ap


def resolve_config(args) -> RunConfig:
    if args.config is not None:
        cfg = load(args.config)
        if args.seed is not None:
            cfg = cfg.with_overrides(seed=args.seed)
    elif args.seed is not None:
        cfg = RunConfig(seed=args.seed)
    else:
        raise ConfigError("a master seed is required (--seed or a config file)", field="seed")
    threads = args.threads
    if threads is None and os.environ.get("GEFLAB_THREADS"):
        try:
            threads = int(os.environ["GEFLAB_THREADS"])
        except ValueError:
            raise ConfigError("GEFLAB_THREADS must be an integer", field="threads") from None
    cfg = cfg.with_overrides(threads=threads,
                             out=str(args.out) if args.out is not None else None,
                             profile=str(args.profile) if args.profile is not None else None)
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1", field="threads")
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = resolve_config(args)
        only = {int(x) for x in args.only.split(",")} if args.only else None
    except (ConfigError, ValueError) as e:
        print(f"geflab: {e}", file=sys.stderr)
        return 2
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    man = io.Manifest(out / "manifest.jsonl", args.subcommand, cfg.digest(), cfg.seed)
    man.start()
    try:
        fn = COMMANDS[args.subcommand]
        ok = fn(cfg, out, man, only) if args.subcommand == "acceptance" else fn(cfg, out, man)
    except (UsageError, ConfigError) as e:
        print(f"geflab: {e}", file=sys.stderr)
        man.finish(False)
        return 2
    except GefLabError as e:
        print(f"geflab: {type(e).__name__}: {e}", file=sys.stderr)
        man.status[args.subcommand] = "error"
        man.finish(False)
        return 1
    man.status[args.subcommand] = "pass" if ok else "fail"
    man.finish(ok)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
