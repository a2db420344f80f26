"""Command-line harness: sample -> triangulate -> fit -> measure -> train.

Subcommands
-----------
sample            draw parameters, solve each, write a (theta, x*) sample file
converge          mesh-refinement study: mesh norm vs max infeasibility/suboptimality
example1-golden   golden-mesh policy vs the closed form, plus the delta/4 sweep
example2-counter  arbitrary-vertex counterexample and the fixed-rule rescue
stable-sampler    refinement study on the tilted double well (jump localization)
margin-sweep      feasibility ratio of a trained net vs constraint margin t
nn-fit            train an MLP on a sample file or on a piecewise policy
make-problem      generate a random LP/QP instance file

Every command is deterministic given its flags: reruns produce byte-identical
CSV bodies.  Timestamps appear only in the ``*_meta.json`` sidecars.

Exit codes: 0 success, 2 validation error, 3 solver-failure budget exceeded,
4 check violation in ``--check`` mode.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import fileio
from . import metrics
from . import neural
from . import policy as pol
from . import problems as pb
from . import simplicial as sim
from . import solvers
from . import svgplot
from .errors import (DegenerateInputError, DimensionMismatchError, GenerationError,
                     OutsideHullError, PwlPolicyError, SolverFailureError,
                     TrainingDivergedError, UnsupportedDimensionError, ValidationError)
from .solvers.simplex import solve_inequality_lp

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER_BUDGET = 3
EXIT_CHECK_FAILED = 4

FAILURE_BUDGET = 0.01          # cmd_sample: tolerated fraction of failed rows
_LOG_FLOOR = 1e-16             # clamp for log-scale plots of exact zeros


# ---------------------------------------------------------------------------
# flag parsing helpers


def _parse_sampler(text: str) -> solvers.SamplerPolicy:
    """``arbitrary`` or ``rule:<id>`` (bare ``rule`` = the default rule)."""
    if text == "arbitrary":
        return solvers.SamplerPolicy(mode=solvers.MODE_ARBITRARY)
    if text == "rule":
        return solvers.LOWEST_POINT
    if text.startswith("rule:"):
        return solvers.SamplerPolicy(mode=solvers.MODE_RULE, rule_id=text[5:])
    raise ValidationError(f"sampler must be 'arbitrary' or 'rule:<id>', got {text!r}")


def _parse_t_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"--t-grid wants a:b:steps, got {text!r}")
    a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
    if steps < 2 or b < a or a < 0:
        raise ValidationError("--t-grid needs 0 <= a <= b and steps >= 2")
    return np.linspace(a, b, steps)


def _parse_hidden(text: str):
    try:
        dims = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ValidationError(f"--hidden wants comma-separated ints, got {text!r}") from None
    if not dims or any(d < 1 for d in dims):
        raise ValidationError("--hidden needs positive layer widths")
    return dims


def _parse_region(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise ValidationError(f"--region wants lo:hi, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if hi <= lo:
        raise ValidationError("--region needs lo < hi")
    return lo, hi


def _resolve_problem(spec: str) -> pb.ParametricProblem:
    if os.path.exists(spec):
        return pb.load_problem(spec)
    return pb.builtin_problem(spec)


def _out_dir(args, default_name: str) -> str:
    out = args.out or f"out-{default_name}"
    os.makedirs(out, exist_ok=True)
    return out


def _meta(args, extra: dict) -> dict:
    flags = {k: (list(v) if isinstance(v, tuple) else v)
             for k, v in sorted(vars(args).items()) if k != "func"}
    return {"version": __version__, "flags": flags,
            "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"), **extra}


def _grid_points(lo: float, hi: float, k: int, per_axis: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_axis)] * k
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _predictor(pp: pol.PiecewisePolicy, clip: bool):
    if not clip:
        return lambda th: pol.evaluate(pp, th)

    def _clipped(th):
        return pol.evaluate(pp, sim.clip_to_hull(pp.triangulation, th))
    return _clipped


def _median3(values: np.ndarray) -> np.ndarray:
    """3-point median filter with edge replication."""
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    for i in range(v.size):
        lo = v[i - 1] if i > 0 else v[0]
        hi = v[i + 1] if i < v.size - 1 else v[-1]
        out[i] = np.median([lo, v[i], hi])
    return out


def _check_line(label: str, ok: bool, detail: str = "") -> bool:
    tail = f" ({detail})" if detail else ""
    print(f"check {'pass' if ok else 'FAIL'}: {label}{tail}")
    return ok


# ---------------------------------------------------------------------------
# sample


def _solve_one(problem, theta, gamma, sampler, seed, row):
    if gamma > 0.0:
        return solvers.solve_gamma_relaxed(
            problem, theta, gamma, seed=solvers.derive_seed(seed, 1, row),
            sampler=sampler.reseeded(row))
    return solvers.solve_exact(problem, theta, sampler.reseeded(row))


def cmd_sample(args) -> int:
    problem = _resolve_problem(args.problem)
    sampler = _parse_sampler(args.sampler)
    sampler = solvers.SamplerPolicy(sampler.mode, sampler.rule_id, args.seed)
    thetas = pb.sample_thetas(problem, args.m, args.distribution, args.seed)
    kept_theta, kept_x, objectives, gaps, failures = [], [], [], [], []
    for i in range(args.m):
        res = _solve_one(problem, thetas[i], args.gamma, sampler, args.seed, i)
        if not res.ok:
            failures.append({"row": i, "status": res.status})
            continue
        kept_theta.append(thetas[i])
        kept_x.append(res.x)
        objectives.append(res.objective)
        gaps.append(res.gamma_gap)
    out = _out_dir(args, "sample")
    csv_path = os.path.join(out, "samples.csv")
    fileio.write_samples_csv(csv_path, np.asarray(kept_theta).reshape(-1, problem.k),
                             np.asarray(kept_x).reshape(-1, problem.n),
                             objectives, gaps)
    fileio.write_json(os.path.join(out, "samples_meta.json"), _meta(args, {
        "problem": {"kind": problem.kind, "n": problem.n, "k": problem.k,
                    "name": problem.name},
        "rows_written": len(kept_theta),
        "failures": failures,
    }))
    print(f"wrote {csv_path} ({len(kept_theta)} rows, {len(failures)} failures)")
    if len(failures) > FAILURE_BUDGET * args.m:
        print(f"solver failure budget exceeded: {len(failures)}/{args.m}",
              file=sys.stderr)
        return EXIT_SOLVER_BUDGET
    return EXIT_OK


# ---------------------------------------------------------------------------
# converge


def _fit_level(problem, grid, sampler, gamma, seed, level):
    xs = np.empty((grid.shape[0], problem.n))
    for i in range(grid.shape[0]):
        res = _solve_one(problem, grid[i], gamma, sampler.reseeded(level),
                         solvers.derive_seed(seed, level), i)
        solvers.require_optimal(res, f"level {level} sample {i}")
        xs[i] = res.x
    return pol.fit((grid, xs), problem.k, seed=solvers.derive_seed(seed, level, 17))


def cmd_converge(args) -> int:
    problem = _resolve_problem(args.problem)
    if args.region is not None:
        lo, hi = _parse_region(args.region)
        dom = problem.theta_domain
        if lo < dom[:, 0].max() or hi > dom[:, 1].min():
            raise ValidationError("--region must lie inside the parameter domain")
    else:
        dom = problem.theta_domain
        lo, hi = float(dom[:, 0].max()), float(dom[:, 1].min())
    sampler = _parse_sampler(args.sampler)
    sampler = solvers.SamplerPolicy(sampler.mode, sampler.rule_id, args.seed)
    test_rng = np.random.default_rng(solvers.derive_seed(args.seed, 999))
    test_thetas = test_rng.uniform(lo, hi, size=(args.test_m, problem.k))

    rows = []
    for level in range(1, args.levels + 1):
        per_axis = 2 ** level + 1
        grid = _grid_points(lo, hi, problem.k, per_axis)
        fitted = _fit_level(problem, grid, sampler, args.gamma, args.seed, level)
        predict = _predictor(fitted, args.extrapolate == "clip")
        report = metrics.evaluate_policy(problem, predict, test_thetas,
                                         mesh_norm=fitted.mesh_norm,
                                         m=grid.shape[0])
        agg = report.aggregates
        rows.append([level, (hi - lo) / 2 ** level, grid.shape[0], fitted.mesh_norm,
                     agg["infeas"]["max"], agg["infeas"]["mean"],
                     agg["subopt"]["max"], agg["subopt"]["mean"],
                     len(report.failures)])
        print(f"level {level}: m={grid.shape[0]} mesh_norm={fitted.mesh_norm:.6g} "
              f"max_infeas={agg['infeas']['max']:.3e} max_subopt={agg['subopt']['max']:.3e}")

    out = _out_dir(args, "converge")
    csv_path = os.path.join(out, "converge.csv")
    header = ["level", "spacing", "m", "mesh_norm", "max_infeas", "mean_infeas",
              "max_subopt", "mean_subopt", "eval_failures"]
    fileio.write_csv(csv_path, header, rows)
    mesh = [r[3] for r in rows]
    svgplot.line_plot(
        os.path.join(out, "converge.svg"),
        [("max infeasibility", mesh, [max(r[4], _LOG_FLOOR) for r in rows]),
         ("max suboptimality", mesh, [max(r[6], _LOG_FLOOR) for r in rows])],
        title="mesh refinement", xlabel="mesh norm", ylabel="max error",
        logx=True, logy=True)
    fileio.write_json(os.path.join(out, "converge_meta.json"), _meta(args, {
        "region": [lo, hi], "rows": len(rows),
    }))
    print(f"wrote {csv_path}")

    if args.check:
        ok = True
        for col, label in ((4, "max_infeas"), (6, "max_subopt")):
            vals = np.array([r[col] for r in rows])
            mono = bool(np.all(np.diff(vals) <= 1e-8))
            ok &= _check_line(f"{label} nonincreasing within 1e-8", mono,
                              f"values {[f'{v:.3e}' for v in vals]}")
            fine = vals[-1] <= 1e-3
            ok &= _check_line(f"{label} finest level <= 1e-3", fine,
                              f"{vals[-1]:.3e}")
        if not ok:
            return EXIT_CHECK_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# example1-golden


GOLDEN_MESH = (0.0, 0.9, 1.1, 2.0)
DELTA_SWEEP = (0.2, 0.1, 0.05, 0.025)


def _fit_example1(problem, mesh_thetas, seed):
    thetas = np.asarray(mesh_thetas, dtype=float).reshape(-1, 1)
    xs = np.empty((thetas.shape[0], problem.n))
    for i in range(thetas.shape[0]):
        res = solvers.solve_lp(problem, thetas[i], solvers.LOWEST_POINT)
        solvers.require_optimal(res, f"golden mesh theta={thetas[i, 0]}")
        xs[i] = res.x
    return pol.fit((thetas, xs), 1, seed=seed)


def cmd_example1_golden(args) -> int:
    problem = pb.builtin_problem("example1")
    golden = _fit_example1(problem, GOLDEN_MESH, args.seed)
    grid = np.linspace(0.0, 2.0, args.test_m)
    diffs = np.empty(args.test_m)
    for i, th in enumerate(grid):
        ref = pol.closed_form_example1(th, 0.9, 1.1)
        diffs[i] = np.abs(pol.evaluate(golden, [th]) - ref).max()
    max_diff = float(diffs.max())
    print(f"golden mesh vs closed form: max |diff| = {max_diff:.3e}")

    test_rng = np.random.default_rng(solvers.derive_seed(args.seed, 5))
    test_thetas = test_rng.uniform(0.0, 2.0, size=(args.test_m, 1))
    rows = []
    for delta in DELTA_SWEEP:
        mesh = np.linspace(0.0, 2.0, int(round(2.0 / delta)) + 1)
        fitted = _fit_example1(problem, mesh, args.seed)
        report = metrics.evaluate_policy(problem, fitted, test_thetas)
        rows.append([delta, fitted.mesh_norm, report.aggregates["subopt"]["max"],
                     delta / 4.0])
        print(f"delta={delta}: max_subopt={rows[-1][2]:.3e} bound={delta / 4:.3e}")

    out = _out_dir(args, "example1-golden")
    csv_path = os.path.join(out, "golden.csv")
    fileio.write_csv(csv_path, ["delta", "mesh_norm", "max_subopt", "bound"], rows)
    svgplot.line_plot(
        os.path.join(out, "golden.svg"),
        [("max suboptimality", [r[0] for r in rows],
          [max(r[2], _LOG_FLOOR) for r in rows]),
         ("delta / 4", [r[0] for r in rows], [r[3] for r in rows])],
        title="suboptimality vs mesh spacing", xlabel="delta", ylabel="gap",
        logx=True, logy=True)
    fileio.write_json(os.path.join(out, "golden_meta.json"), _meta(args, {
        "golden_mesh": list(GOLDEN_MESH), "max_abs_diff": max_diff,
    }))
    print(f"wrote {csv_path}")

    if args.check:
        ok = _check_line("golden mesh matches closed form within 1e-9",
                         max_diff <= 1e-9, f"{max_diff:.3e}")
        for delta, _, gap, bound in rows:
            ok &= _check_line(f"delta={delta}: max_subopt <= delta/4 + 1e-8",
                              gap <= bound + 1e-8, f"{gap:.3e} vs {bound:.3e}")
        if not ok:
            return EXIT_CHECK_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# example2-counter


def _arbitrary_samples(problem, thetas, seed):
    xs = np.empty((thetas.shape[0], 1))
    for i in range(thetas.shape[0]):
        sampler = solvers.SamplerPolicy(mode=solvers.MODE_ARBITRARY,
                                        seed=solvers.derive_seed(seed, i))
        xs[i] = solvers.solve_finite(problem, thetas[i], sampler).x
    return xs


def cmd_example2_counter(args) -> int:
    problem = pb.builtin_problem("example2")
    thetas = xs = None
    pair = attempt_used = None
    for attempt in range(10):
        seed_a = solvers.derive_seed(args.seed, attempt)
        draw = np.sort(np.random.default_rng(seed_a).uniform(0.0, 1.0, args.m))
        cand = draw.reshape(-1, 1)
        vals = _arbitrary_samples(problem, cand, seed_a)
        jumps = np.flatnonzero(np.abs(np.diff(vals[:, 0])) > 1.0)
        if jumps.size:
            thetas, xs, pair, attempt_used = cand, vals, int(jumps[0]), attempt
            break
    if pair is None:
        # vanishingly unlikely (probability 2^-(m-1) per attempt); report honestly
        print("no adjacent {1,3} pair found in 10 attempts", file=sys.stderr)
        return EXIT_SOLVER_BUDGET

    mid = 0.5 * (thetas[pair, 0] + thetas[pair + 1, 0])
    policy_arb = pol.fit((thetas, xs), 1, seed=args.seed)
    mid_gap = metrics.suboptimality(problem, [mid], pol.evaluate(policy_arb, [mid]))

    xs_rule = np.empty_like(xs)
    for i in range(thetas.shape[0]):
        xs_rule[i] = solvers.solve_finite(problem, thetas[i], solvers.LOWEST_POINT).x
    policy_rule = pol.fit((thetas, xs_rule), 1, seed=args.seed)

    grid = np.linspace(thetas[0, 0], thetas[-1, 0], args.test_m)
    rows = []
    for th in grid:
        xa = pol.evaluate(policy_arb, [th])
        xr = pol.evaluate(policy_rule, [th])
        rows.append([th, xa[0], metrics.suboptimality(problem, [th], xa),
                     xr[0], metrics.suboptimality(problem, [th], xr)])
    rule_max = max(r[4] for r in rows)
    print(f"midpoint theta={mid:.6g}: arbitrary-vertex gap={mid_gap:.9f}; "
          f"fixed-rule max gap={rule_max:.3e}")

    out = _out_dir(args, "example2-counter")
    csv_path = os.path.join(out, "counter.csv")
    fileio.write_csv(csv_path, ["theta", "xhat_arbitrary", "gap_arbitrary",
                                "xhat_rule", "gap_rule"], rows)
    svgplot.line_plot(
        os.path.join(out, "counter.svg"),
        [("arbitrary vertex", [r[0] for r in rows], [r[2] for r in rows]),
         ("fixed rule", [r[0] for r in rows], [r[4] for r in rows])],
        title="suboptimality across the parameter range", xlabel="theta",
        ylabel="gap")
    fileio.write_json(os.path.join(out, "counter_meta.json"), _meta(args, {
        "attempt_used": attempt_used, "jump_pair_index": pair,
        "midpoint_theta": float(mid), "midpoint_gap": float(mid_gap),
        "rule_max_gap": float(rule_max),
    }))
    print(f"wrote {csv_path}")

    if args.check:
        ok = _check_line("midpoint gap = 1 within 1e-9",
                         abs(mid_gap - 1.0) <= 1e-9, f"{mid_gap:.12f}")
        ok &= _check_line("fixed-rule max gap <= 1e-8", rule_max <= 1e-8,
                          f"{rule_max:.3e}")
        if not ok:
            return EXIT_CHECK_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# stable-sampler


def cmd_stable_sampler(args) -> int:
    problem = pb.builtin_problem("example3")
    grid = np.linspace(-1.0, 1.0, args.test_m)
    rows = []
    loc_ok = True
    for level in range(1, args.levels + 1):
        intervals = 2 ** (level + 3) + 1          # odd, so theta=0 is never a vertex
        mesh = np.linspace(-1.0, 1.0, intervals + 1).reshape(-1, 1)
        vals = _arbitrary_samples(problem, mesh, solvers.derive_seed(args.seed, level))
        fitted = pol.fit((mesh, vals), 1, seed=args.seed)
        tri = fitted.triangulation
        flip, _ = sim.locate(tri, [0.0])
        gaps = np.empty(grid.size)
        outside = np.zeros(grid.size, dtype=bool)
        for i, th in enumerate(grid):
            j, _ = sim.locate(tri, [th])
            gaps[i] = metrics.suboptimality(problem, [th], pol.evaluate(fitted, [th]))
            outside[i] = j != flip
        max_outside = float(gaps[outside].max())
        loc_ok &= bool(np.all(~outside[gaps > 0.25]))
        rows.append([level, intervals, fitted.mesh_norm, float(gaps.max()),
                     max_outside, sim.simplex_diameter(tri, flip)])
        print(f"level {level}: mesh_norm={fitted.mesh_norm:.6g} "
              f"max_gap={gaps.max():.3e} outside_flip={max_outside:.3e}")

    out = _out_dir(args, "stable-sampler")
    csv_path = os.path.join(out, "stable.csv")
    fileio.write_csv(csv_path, ["level", "intervals", "mesh_norm", "max_gap",
                                "max_gap_outside_flip", "flip_width"], rows)
    svgplot.line_plot(
        os.path.join(out, "stable.svg"),
        [("max gap (all)", [r[2] for r in rows],
          [max(r[3], _LOG_FLOOR) for r in rows]),
         ("max gap off the flip simplex", [r[2] for r in rows],
          [max(r[4], _LOG_FLOOR) for r in rows])],
        title="tilted double well under refinement", xlabel="mesh norm",
        ylabel="suboptimality", logx=True, logy=True)
    fileio.write_json(os.path.join(out, "stable_meta.json"),
                      _meta(args, {"rows": len(rows)}))
    print(f"wrote {csv_path}")

    if args.check:
        ok = True
        for r in rows:
            ok &= _check_line(f"level {r[0]}: gap off the flip simplex <= 1e-8",
                              r[4] <= 1e-8, f"{r[4]:.3e}")
        ok &= _check_line("large gaps localized to the flip simplex", loc_ok)
        widths = [r[5] for r in rows]
        ok &= _check_line("flip simplex width shrinks with refinement",
                          all(b < a for a, b in zip(widths, widths[1:])),
                          f"{[f'{w:.4g}' for w in widths]}")
        if not ok:
            return EXIT_CHECK_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# margin-sweep


def _margin_feasible(problem, theta) -> bool:
    """Exact feasibility of the margin-tightened set via a phase-1 solve."""
    G, h = pb.constraint_rows(problem, theta)
    res = solve_inequality_lp(np.zeros(problem.n), G, h)
    return res.status == "optimal"


def _collect_margin_samples(problem, m, seed, cap):
    """Draw standard-normal thetas feasible for the margin problem, solve each.

    Infeasible draws are resampled (counted against ``cap`` total draws).
    """
    rng = np.random.default_rng(seed)
    dom = problem.theta_domain
    thetas = np.empty((m, problem.k))
    xs = np.empty((m, problem.n))
    drawn = kept = 0
    while kept < m:
        if drawn >= cap:
            raise SolverFailureError(
                f"margin problem infeasible too often: {kept}/{m} after {drawn} draws")
        th = rng.standard_normal(problem.k)
        drawn += 1
        if np.any(th < dom[:, 0]) or np.any(th > dom[:, 1]):
            continue
        if not _margin_feasible(problem, th):
            continue
        res = solvers.solve_exact(problem, th, solvers.LOWEST_POINT)
        if not res.ok:
            continue
        thetas[kept] = th
        xs[kept] = res.x
        kept += 1
    return thetas, xs, drawn


def _run_margin_family(family, args, out):
    fam_idx = {"lp": 1, "qp": 2}[family]
    gen = pb.generate_random_lp if family == "lp" else pb.generate_random_qp
    base = gen(args.n, args.n, seed=solvers.derive_seed(args.seed, fam_idx))
    holdout = pb.sample_thetas(base, args.holdout_m, "normal",
                               solvers.derive_seed(args.seed, fam_idx, 3))
    t_grid = _parse_t_grid(args.t_grid)
    hidden = _parse_hidden(args.hidden)
    rows = []
    for t_idx, t in enumerate(t_grid):
        tightened = pb.with_margin(base, float(t))
        thetas, xs, drawn = _collect_margin_samples(
            tightened, args.m, solvers.derive_seed(args.seed, fam_idx, t_idx, 5),
            cap=10 * args.m)
        cfg = neural.TrainConfig(
            epochs=args.epochs, batch_size=args.batch_size,
            learning_rate=args.lr, hidden=hidden,
            seed=solvers.derive_seed(args.seed, fam_idx, t_idx, 7))
        model = neural.train((thetas, xs), cfg)
        ratio = metrics.feasibility_ratio(base, lambda th: neural.forward(model, th),
                                          holdout)
        rows.append([float(t), ratio, drawn - args.m,
                     model.train_meta["final_train_loss"]])
        print(f"{family} t={t:.4g}: ratio={ratio:.2f}% resampled={drawn - args.m} "
              f"train_loss={model.train_meta['final_train_loss']:.3e}")
    csv_path = os.path.join(out, f"margin_{family}.csv")
    fileio.write_csv(csv_path, ["t", "feasibility_ratio", "resampled", "train_loss"],
                     rows)
    print(f"wrote {csv_path}")
    return rows


def cmd_margin_sweep(args) -> int:
    families = ["lp", "qp"] if args.family == "both" else [args.family]
    out = _out_dir(args, "margin-sweep")
    results = {}
    for family in families:
        results[family] = _run_margin_family(family, args, out)
    svgplot.line_plot(
        os.path.join(out, "margin.svg"),
        [(family, [r[0] for r in rows], [r[1] for r in rows])
         for family, rows in results.items()],
        title="feasibility ratio vs constraint margin", xlabel="margin t",
        ylabel="feasible holdout (%)")
    fileio.write_json(os.path.join(out, "margin_meta.json"), _meta(args, {
        "families": {fam: {"final_ratio": rows[-1][1],
                           "total_resampled": int(sum(r[2] for r in rows))}
                     for fam, rows in results.items()},
    }))

    if args.check:
        ok = True
        for family, rows in results.items():
            ratios = np.array([r[1] for r in rows])
            smooth = _median3(ratios)
            mono = bool(np.all(np.diff(smooth) >= -1e-9))
            ok &= _check_line(f"{family}: smoothed ratio nondecreasing", mono,
                              f"{[f'{v:.1f}' for v in smooth]}")
            ok &= _check_line(f"{family}: ratio reaches 100% at largest t",
                              abs(ratios[-1] - 100.0) <= 1e-9, f"{ratios[-1]:.2f}")
        if not ok:
            return EXIT_CHECK_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# nn-fit


def _hull_grid(pp: pol.PiecewisePolicy, count: int, seed: int) -> np.ndarray:
    """Deterministic evaluation points covering the policy hull."""
    verts = pp.triangulation.vertices
    if pp.k == 1:
        return np.linspace(verts.min(), verts.max(), count).reshape(-1, 1)
    rng = np.random.default_rng(solvers.derive_seed(seed, 23))
    simplices = pp.triangulation.simplices
    good = np.flatnonzero(~pp.triangulation.degenerate)
    picks = good[rng.integers(good.size, size=count)]
    lam = rng.dirichlet(np.ones(pp.k + 1), size=count)
    return np.einsum("tl,tlk->tk", lam, verts[simplices[picks]])


def cmd_nn_fit(args) -> int:
    if not args.samples and not args.policy:
        raise ValidationError("nn-fit needs --samples and/or --policy")
    pp = pol.load_policy(args.policy) if args.policy else None
    if args.samples:
        thetas, xs, _, _ = fileio.read_samples_csv(args.samples)
    else:
        thetas = _hull_grid(pp, args.grid_m, args.seed)
        xs = pol.evaluate_many(pp, thetas)
    total = thetas.shape[0]

    perm = np.random.default_rng(solvers.derive_seed(args.seed, 11)).permutation(total)
    n_hold = int(round(args.holdout_frac * total)) if total >= 10 else 0
    hold_idx, train_idx = perm[:n_hold], perm[n_hold:]
    cfg = neural.TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                             learning_rate=args.lr, hidden=_parse_hidden(args.hidden),
                             seed=args.seed)
    model = neural.train((thetas[train_idx], xs[train_idx]), cfg)

    pred = neural.forward(model, thetas)
    sq = ((pred - xs) ** 2).sum(axis=1)
    train_mse = float(sq[train_idx].mean())
    holdout_mse = float(sq[hold_idx].mean()) if n_hold else None
    inf_norms, spectral1 = neural.norms(model)
    bound = metrics.ge_bound(inf_norms, train_idx.size)

    max_dev = None
    if pp is not None:
        dev_grid = _hull_grid(pp, args.grid_m, args.seed + 1)
        max_dev = float(np.abs(neural.forward(model, dev_grid)
                               - pol.evaluate_many(pp, dev_grid)).max())

    out = _out_dir(args, "nn-fit")
    model_path = os.path.join(out, "model.json")
    neural.save_model(model, model_path)
    is_holdout = np.zeros(total, dtype=bool)
    is_holdout[hold_idx] = True
    rows = [list(thetas[i]) + list(xs[i]) + list(pred[i]) + [int(is_holdout[i])]
            for i in range(total)]
    header = ([f"theta_{i}" for i in range(thetas.shape[1])]
              + [f"target_{j}" for j in range(xs.shape[1])]
              + [f"pred_{j}" for j in range(xs.shape[1])] + ["holdout"])
    csv_path = os.path.join(out, "fit_report.csv")
    fileio.write_csv(csv_path, header, rows)
    fileio.write_json(os.path.join(out, "fit_meta.json"), _meta(args, {
        "train_mse": train_mse, "holdout_mse": holdout_mse,
        "max_dev_vs_policy": max_dev, "layer_inf_norms": inf_norms,
        "layer1_spectral_norm": spectral1, "ge_bound": bound,
        "num_parameters": model.num_parameters,
        "train_rows": int(train_idx.size), "holdout_rows": int(n_hold),
    }))
    hold_txt = "n/a" if holdout_mse is None else f"{holdout_mse:.3e}"
    print(f"train_mse={train_mse:.3e} holdout_mse={hold_txt} ge_bound={bound:.3e}")
    print(f"wrote {model_path} and {csv_path}")

    if args.check:
        ok = _check_line("holdout MSE <= 1e-3",
                         holdout_mse is not None and holdout_mse <= 1e-3,
                         hold_txt)
        gc_samples = (thetas[train_idx[:64]], xs[train_idx[:64]])
        ok &= _check_line("gradient check at 1e-5",
                          neural.gradient_check(model, gc_samples, 1e-5))
        if not ok:
            return EXIT_CHECK_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# make-problem


def cmd_make_problem(args) -> int:
    gen = pb.generate_random_lp if args.kind == "lp" else pb.generate_random_qp
    problem = gen(args.n, args.m_c if args.m_c else args.n, seed=args.seed)
    pb.save_problem(problem, args.out_file)
    print(f"wrote {args.out_file} ({problem.kind}, n={problem.n}, k={problem.k})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser / dispatch


def _add_common(sp, *, seed=0, out=True, check=False):
    sp.add_argument("--seed", type=int, default=seed)
    if out:
        sp.add_argument("--out", default=None, help="output directory")
    if check:
        sp.add_argument("--check", action="store_true",
                        help="verify result thresholds; exit 4 on violation")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pwlpolicy",
        description="piecewise linear policies for parametric optimization")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="solve at sampled parameters, write CSV")
    sp.add_argument("--problem", default="example1",
                    help="builtin name or problem JSON path")
    sp.add_argument("--m", type=int, default=100)
    sp.add_argument("--distribution", choices=("uniform", "normal"), default="uniform")
    sp.add_argument("--sampler", default="rule:always-lowest-point")
    sp.add_argument("--gamma", type=float, default=0.0)
    _add_common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("converge", help="mesh refinement study")
    sp.add_argument("--problem", default="example1")
    sp.add_argument("--levels", type=int, default=5)
    sp.add_argument("--region", default=None, help="lo:hi interval per axis")
    sp.add_argument("--test-m", type=int, default=1000)
    sp.add_argument("--sampler", default="rule:always-lowest-point")
    sp.add_argument("--gamma", type=float, default=0.0)
    sp.add_argument("--extrapolate", choices=("clip",), default=None)
    _add_common(sp, check=True)
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("example1-golden",
                        help="golden mesh vs closed form + delta/4 sweep")
    sp.add_argument("--test-m", type=int, default=1000)
    _add_common(sp, check=True)
    sp.set_defaults(func=cmd_example1_golden)

    sp = sub.add_parser("example2-counter",
                        help="arbitrary-vertex counterexample and the rule rescue")
    sp.add_argument("--m", type=int, default=12)
    sp.add_argument("--test-m", type=int, default=257)
    _add_common(sp, check=True)
    sp.set_defaults(func=cmd_example2_counter)

    sp = sub.add_parser("stable-sampler",
                        help="tilted double well refinement / jump localization")
    sp.add_argument("--levels", type=int, default=4)
    sp.add_argument("--test-m", type=int, default=1001)
    _add_common(sp, check=True)
    sp.set_defaults(func=cmd_stable_sampler)

    sp = sub.add_parser("margin-sweep",
                        help="feasibility ratio of trained nets vs margin t")
    sp.add_argument("--family", choices=("lp", "qp", "both"), default="both")
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--m", type=int, default=1000)
    sp.add_argument("--t-grid", default="0:2:20")
    sp.add_argument("--holdout-m", type=int, default=1000)
    sp.add_argument("--hidden", default="32,32")
    sp.add_argument("--epochs", type=int, default=300)
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--batch-size", type=int, default=64)
    _add_common(sp, check=True)
    sp.set_defaults(func=cmd_margin_sweep)

    sp = sub.add_parser("nn-fit", help="train an MLP on samples or on a policy")
    sp.add_argument("--samples", default=None, help="sample CSV path")
    sp.add_argument("--policy", default=None, help="policy JSON path")
    sp.add_argument("--grid-m", type=int, default=256)
    sp.add_argument("--holdout-frac", type=float, default=0.1)
    sp.add_argument("--hidden", default="32,32")
    sp.add_argument("--epochs", type=int, default=5000)
    sp.add_argument("--lr", type=float, default=1e-3)
    sp.add_argument("--batch-size", type=int, default=64)
    _add_common(sp, check=True)
    sp.set_defaults(func=cmd_nn_fit)

    sp = sub.add_parser("make-problem", help="generate a random LP/QP instance file")
    sp.add_argument("--kind", choices=("lp", "qp"), required=True)
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--m-c", type=int, default=None)
    sp.add_argument("--out-file", required=True)
    _add_common(sp, out=False)
    sp.set_defaults(func=cmd_make_problem)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DimensionMismatchError, UnsupportedDimensionError,
            DegenerateInputError, GenerationError, OutsideHullError,
            TrainingDivergedError, FileNotFoundError,
            json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverFailureError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER_BUDGET


if __name__ == "__main__":
    sys.exit(main())
