"""Command line front end: ``maxlewis {weights,sample,pipeline,verify,diagnose}``.

Exit codes: 0 success, 1 verification failed, 2 invalid input or
configuration, 3 an iteration did not converge, 4 file I/O or format error.
Every output file of a run is written only after the whole run succeeded.
"""

import argparse
import logging
import sys

import numpy as np

from .diagnostics import class_imbalance, coverage_kappa, curve_csv, kappa_csv, max_weight_sum_curve
from .errors import CapExceeded, ConfigError, MaxLewisError, NotConverged
from .io import load_config, read_matrix, read_vector, vector_text, write_outputs
from .lewis import LewisConfig, lewis_weights, verify_fixed_point
from .oracle import brute_force_opt, exact_distortion_p2, monte_carlo_distortion
from .pipeline import FileOracle, MultiRepDataset, compute_weights, run_one_shot, shared_sampler, solve_models
from .regression import evaluate_guarantee
from .sampling import sample_size_bound, spawn_seeds

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4

logger = logging.getLogger("maxlewis")


def _overrides(args) -> dict:
    out = {
        "p": args.p,
        "epsilon": args.epsilon,
        "tau": args.tau,
        "seed": args.seed,
        "out_dir": args.out_dir,
        "format": args.format,
    }
    if getattr(args, "input", None):
        out["unlabeled"] = list(args.input)
    return out


def _config(args):
    return load_config(args.config, _overrides(args))


def _lewis_cfg(cfg) -> LewisConfig:
    return LewisConfig(p=cfg.p, max_iters=cfg.max_iters, fp_tolerance=cfg.fp_tolerance)


def _dataset(cfg) -> MultiRepDataset:
    if not cfg.unlabeled:
        raise ConfigError("no unlabeled feature files given (config 'unlabeled' or --input)")
    unlabeled = [read_matrix(path, cfg.format) for path in cfg.unlabeled]
    labeled = [read_matrix(path, cfg.format) for path in cfg.labeled]
    labels = read_vector(cfg.labeled_labels) if cfg.labeled_labels else np.zeros(0)
    return MultiRepDataset(unlabeled, labeled, labels)


def _pool_labels(cfg, data):
    if cfg.labels is None:
        return None
    y = read_vector(cfg.labels)
    if y.shape[0] != data.n_u:
        raise ConfigError(f"labels file has {y.shape[0]} values for {data.n_u} unlabeled rows")
    return y


def _need_tau(cfg):
    if cfg.tau is None and cfg.scheme == "iid":
        raise ConfigError("tau is required (config 'tau' or --tau)")
    return cfg.tau if cfg.tau is not None else 1


def _r(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------


def cmd_weights(args) -> int:
    overrides = _overrides(args)
    if overrides["seed"] is None:
        overrides["seed"] = 0  # unused; weights are deterministic
    cfg = load_config(args.config, overrides)
    if not args.input:
        raise ConfigError("--input is required")
    A = read_matrix(args.input[0], cfg.format)
    w = lewis_weights(A, _lewis_cfg(cfg))
    table = "index,weight\n" + "".join(f"{i},{_r(v)}\n" for i, v in enumerate(w.w))
    summary = (f"sum={_r(w.w.sum())} min={_r(w.w.min())} max={_r(w.w.max())} "
               f"residual={_r(w.residual)}\n")
    if args.out_dir is not None:
        write_outputs(args.out_dir, {"weights.csv": table, "weights_summary.txt": summary})
    else:
        sys.stdout.write(table)
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _config(args)
    data = _dataset(cfg)
    tau = _need_tau(cfg)
    weights = compute_weights(data.unlabeled, _lewis_cfg(cfg))
    draw_seed = spawn_seeds(cfg.seed, 1)[0]
    plan, S, dist = shared_sampler(weights, data.n_l, tau, cfg.p, draw_seed, cfg.scheme, cfg.m_cap, cfg.beta)
    files = {
        "distribution.csv": "index,probability\n" + "".join(f"{i},{_r(v)}\n" for i, v in enumerate(dist.probs)),
        "plan.csv": "draw_order,index\n" + "".join(f"{i},{q}\n" for i, q in enumerate(plan.draws)),
        "sampling_matrix.csv": "row,source_index,scale\n"
        + "".join(f"{r},{i},{_r(s)}\n" for r, (i, s) in enumerate(zip(S.indices, S.scales))),
    }
    summary = [f"T={_r(dist.total)}", f"m={plan.m}", f"distinct={plan.n_distinct}"]
    if cfg.constant_c is not None:
        d_max = max(U.shape[1] for U in data.unlabeled)
        summary.append(f"advised_m={sample_size_bound(d_max, cfg.p, cfg.epsilon, dist.total, cfg.constant_c)}")
    files["summary.txt"] = "\n".join(summary) + "\n"
    write_outputs(cfg.out_dir, files)
    print(" ".join(summary))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    data = _dataset(cfg)
    tau = _need_tau(cfg)
    if cfg.labels is None:
        raise ConfigError("pipeline needs a 'labels' file for the label oracle")
    y_pool = _pool_labels(cfg, data)
    oracle = FileOracle(cfg.labels)
    res = run_one_shot(
        data, oracle, tau, cfg.epsilon, cfg.p, cfg.activation, _lewis_cfg(cfg), cfg.seed,
        cfg.constrained, m_cap=cfg.m_cap, constant_c=cfg.constant_c, scheme=cfg.scheme,
        beta=cfg.beta, solver_opts={"starts": cfg.starts},
    )
    y_full = np.concatenate([data.labels, y_pool])
    oracle_seed = spawn_seeds(cfg.seed, 3)[2]
    files = {
        "plan.csv": "draw_order,index\n" + "".join(f"{i},{q}\n" for i, q in enumerate(res.plan.draws)),
        "audit.csv": "".join(line + "\n" for line in oracle.audit_lines()),
    }
    rows = ["model,loss,constraint_lhs,constraint_rhs,converged,iterations,opt,ratio"]
    for j, sol in enumerate(res.solutions):
        A = data.full_matrix(j)
        theta_star, opt = brute_force_opt(A, y_full, cfg.activation, cfg.p, cfg.oracle_restarts, oracle_seed)
        ratio = evaluate_guarantee(A, y_full, sol.theta, theta_star, cfg.activation, cfg.p, cfg.epsilon)
        files[f"theta_{j}.csv"] = vector_text(sol.theta)
        rows.append(f"{j},{_r(sol.loss)},{_r(sol.constraint_lhs)},{_r(sol.constraint_rhs)},"
                    f"{int(sol.converged)},{sol.iterations},{_r(opt)},{_r(ratio)}")
    files["guarantee.csv"] = "\n".join(rows) + "\n"
    summary = [f"T={_r(res.T)}", f"m={res.plan.m}", f"queries={oracle.query_count}"]
    if res.advised_m is not None:
        summary.append(f"advised_m={res.advised_m}")
    files["summary.txt"] = "\n".join(summary) + "\n"
    write_outputs(cfg.out_dir, files)
    print(" ".join(summary))
    return EXIT_OK


def _parse_seeds(text):
    if ":" in text:
        lo, hi = (int(s) for s in text.split(":", 1))
        return list(range(lo, hi))
    return [int(s) for s in text.split(",") if s.strip()]


def cmd_verify(args) -> int:
    cfg = _config(args)
    data = _dataset(cfg)
    tau = _need_tau(cfg)
    y_pool = _pool_labels(cfg, data)
    seeds = _parse_seeds(args.seeds) if args.seeds else [cfg.seed]
    weights = compute_weights(data.unlabeled, _lewis_cfg(cfg))
    residuals = [verify_fixed_point(U, w) for U, w in zip(data.unlabeled, weights)]
    y_full = None if y_pool is None else np.concatenate([data.labels, y_pool])
    references = {}

    table = ["seed,model,check,value,threshold,status"]
    per_seed = ["seed,model,distortion,residual,ratio,pass"]
    all_ok = True
    for seed in seeds:
        draw_seed, solve_seed, oracle_seed = spawn_seeds(seed, 3)
        plan, S, _ = shared_sampler(weights, data.n_l, tau, cfg.p, draw_seed, cfg.scheme, cfg.m_cap, cfg.beta)
        sols = None
        if y_full is not None:
            sols = solve_models(data, y_full, S, cfg.activation, cfg.p, cfg.epsilon, cfg.constrained,
                                solve_seed, starts=cfg.starts)
        for j in range(data.k):
            A = data.full_matrix(j)
            if cfg.p == 2:
                dist_val = exact_distortion_p2(A, S).epsilon_hat
            else:
                dist_val = monte_carlo_distortion(A, S, cfg.p, cfg.mc_trials, draw_seed).epsilon_hat
            checks = [("distortion", dist_val, cfg.distortion_threshold),
                      ("fixed_point_residual", residuals[j], cfg.fp_tolerance)]
            ratio = float("nan")
            if sols is not None:
                if j not in references:
                    references[j] = brute_force_opt(A, y_full, cfg.activation, cfg.p,
                                                    cfg.oracle_restarts, spawn_seeds(cfg.seed, 3)[2])[0]
                ratio = evaluate_guarantee(A, y_full, sols[j].theta, references[j],
                                           cfg.activation, cfg.p, cfg.epsilon)
                checks.append(("guarantee_ratio", ratio, cfg.ratio_threshold))
            row_ok = True
            for name, value, threshold in checks:
                ok = bool(value <= threshold)
                row_ok &= ok
                table.append(f"{seed},{j},{name},{_r(value)},{_r(threshold)},{'pass' if ok else 'FAIL'}")
            all_ok &= row_ok
            per_seed.append(f"{seed},{j},{_r(dist_val)},{_r(residuals[j])},{_r(ratio)},{int(row_ok)}")

    files = {"verify.csv": "\n".join(table) + "\n"}
    if args.seeds:
        files["verify_seeds.csv"] = "\n".join(per_seed) + "\n"
    write_outputs(cfg.out_dir, files)
    width = max(len(r.split(",")[2]) for r in table)
    for r in table[1:]:
        seed, j, name, value, threshold, status = r.split(",")
        print(f"{status:4}  seed={seed} model={j} {name:<{width}} {float(value):.4g} <= {float(threshold):.4g}")
    print("all checks passed" if all_ok else "some checks FAILED")
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def cmd_diagnose(args) -> int:
    cfg = _config(args)
    data = _dataset(cfg)
    weights = compute_weights(data.unlabeled, _lewis_cfg(cfg))
    curve = max_weight_sum_curve(weights, ranks=[U.shape[1] for U in data.unlabeled])
    kappas = [(t, coverage_kappa(weights, t)) for t in cfg.kappa_t]
    files = {"curve.csv": curve_csv(curve), "kappa.csv": kappa_csv(kappas)}
    summary = [f"T({pt.k})={_r(pt.T)}" for pt in (curve[0], curve[-1])[: min(len(curve), 2)]]
    if cfg.tau is not None and cfg.labels is not None:
        y_pool = _pool_labels(cfg, data)
        plan, _, _ = shared_sampler(weights, data.n_l, cfg.tau, cfg.p, spawn_seeds(cfg.seed, 1)[0],
                                    cfg.scheme, cfg.m_cap, cfg.beta)
        selected = list(data.labels) + [y_pool[q] for q in plan.distinct]
        summary.append(f"imbalance={_r(class_imbalance(selected))}")
    files["summary.txt"] = "\n".join(summary) + "\n"
    write_outputs(cfg.out_dir, files)
    print(" ".join(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxlewis", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "weights": (cmd_weights, "Lewis weights of one matrix file"),
        "sample": (cmd_sample, "build the shared query plan and sampling matrix"),
        "pipeline": (cmd_pipeline, "select, query and fit all models"),
        "verify": (cmd_verify, "run distortion, fixed-point and guarantee checks"),
        "diagnose": (cmd_diagnose, "T(k) curve, coverage and class imbalance"),
    }
    for name, (func, help_text) in commands.items():
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(func=func)
        sp.add_argument("--config", help="flat 'key = value' run configuration")
        sp.add_argument("--input", action="append", help="feature matrix file (repeatable)")
        sp.add_argument("--p", type=float)
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--tau", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--format", choices=["csv", "binary"])
        if name == "verify":
            sp.add_argument("--seeds", help="seed sweep, 'a:b' (half open) or 'a,b,c'")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NotConverged, CapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (MaxLewisError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
