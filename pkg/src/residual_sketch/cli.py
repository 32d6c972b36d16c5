"""Command-line entry point: ``residual-sketch <command> [options]``.

Every command prints one JSON document on stdout (and optionally writes it
to ``--json-out``). Exit status is 0 on success, 2 for unreadable input or
bad arguments, 3 when a decomposition fails numerically.
"""
import argparse
import json
import logging
import sys
import time

import numpy as np

from . import _random, testkit
from .bilinear import batch_estimate, make_state
from .datasets import (
    load_matrix_stream,
    load_matrixmarket,
    load_movielens,
    load_uci_bow,
    load_vector_stream,
    write_matrix_stream,
    write_vector_stream,
    Triplets,
)
from .errors import NumericalFailure, SketchError
from .transforms import COMPOSED, FAMILIES
from .vector import DEFAULT_C_B, DEFAULT_C_L, ResidualPipeline

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERICAL = 3

MATRIX_FORMATS = ("mm", "bow", "stream", "movielens")


def _ms(seconds):
    return 1000.0 * seconds


def _rel(estimate, exact):
    return None if exact is None or exact == 0 else estimate / exact - 1.0


def load_matrix(path, fmt, shape=None):
    if fmt == "mm":
        return load_matrixmarket(path)
    if fmt == "bow":
        return load_uci_bow(path)
    if fmt == "movielens":
        return load_movielens(path)
    if fmt == "stream":
        return load_matrix_stream(path, shape)
    raise SketchError(f"unknown matrix format {fmt!r}")


def cmd_lowrank(A, k, m, family="osnap", s=2, trials=10, seed=0, with_exact=False,
                inner_dim=None, dataset=None):
    """Run ``trials`` independently seeded bilinear estimates of ``||A - A_k||_F``."""
    if not isinstance(A, Triplets):
        A = Triplets.from_matrix(A)
    exact = testkit.exact_matrix_residual(A.to_csr(), k) if with_exact else None
    per_trial = []
    for t in range(trials):
        tseed = _random.derive_seed(seed, t)
        st = make_state(family, m, A.shape, seed=tseed, s=s, inner_dim=inner_dim)
        res = batch_estimate(A, k, st.left, st.right)
        per_trial.append({
            "seed": tseed,
            "estimate": res.estimate,
            "eps_rel": _rel(res.estimate, exact),
            "timings_ms": {"sketch": _ms(res.sketch_seconds), "finalize": _ms(res.svd_seconds)},
        })
    ests = [tr["estimate"] for tr in per_trial]
    rels = [tr["eps_rel"] for tr in per_trial if tr["eps_rel"] is not None]
    return {
        "command": "lowrank",
        "dataset": dataset,
        "shape": list(A.shape),
        "nnz": A.nnz,
        "params": {"k": k, "m": m, "family": family, "s": s, "trials": trials, "seed": seed,
                   "inner_dim": inner_dim},
        "estimate": float(np.mean(ests)) if ests else None,
        "exact": exact,
        "exact_is_zero": exact == 0 if exact is not None else None,
        "eps_rel": float(np.mean(rels)) if rels else None,
        "mean_abs_eps_rel": float(np.mean(np.abs(rels))) if rels else None,
        "trials": per_trial,
        "timings_ms": {
            "sketch": sum(tr["timings_ms"]["sketch"] for tr in per_trial),
            "finalize": sum(tr["timings_ms"]["finalize"] for tr in per_trial),
        },
    }


def _vector_trials(idx, vals, n, k, p, eps, c_b, c_l, trials, seed):
    for t in range(trials):
        tseed = _random.derive_seed(seed, t)
        pipe = ResidualPipeline(n, k, p, eps, c_b=c_b, c_l=c_l, seed=tseed)
        t0 = time.perf_counter()
        pipe.update_batch(idx, vals)
        t1 = time.perf_counter()
        yield tseed, pipe, t1 - t0


def cmd_vector(idx, vals, n, k, p=3.0, eps=0.5, c_b=DEFAULT_C_B, c_l=DEFAULT_C_L, trials=10,
               seed=0, with_exact=False, dataset=None):
    """Estimate ``||x - x_k||_p^p`` from a turnstile stream, ``trials`` times."""
    exact = None
    if with_exact:
        x = np.zeros(n)
        np.add.at(x, idx, vals)
        exact = testkit.exact_vector_residual(x, k, p)
    per_trial = []
    for tseed, pipe, sk_s in _vector_trials(idx, vals, n, k, p, eps, c_b, c_l, trials, seed):
        t0 = time.perf_counter()
        est = pipe.residual_estimate()
        fin_s = time.perf_counter() - t0
        per_trial.append({
            "seed": tseed,
            "estimate": est,
            "eps_rel": _rel(est, exact),
            "timings_ms": {"sketch": _ms(sk_s), "finalize": _ms(fin_s)},
        })
    rels = [tr["eps_rel"] for tr in per_trial if tr["eps_rel"] is not None]
    b, ell = (pipe.cs.buckets, pipe.cs.rows) if trials else (None, None)
    return {
        "command": "vector",
        "dataset": dataset,
        "n": n,
        "updates": int(len(idx)),
        "params": {"k": k, "p": p, "eps": eps, "cb": c_b, "cl": c_l, "buckets": b, "rows": ell,
                   "trials": trials, "seed": seed},
        "estimate": float(np.mean([tr["estimate"] for tr in per_trial])) if per_trial else None,
        "exact": exact,
        "exact_is_zero": exact == 0 if exact is not None else None,
        "eps_rel": float(np.mean(rels)) if rels else None,
        "trials": per_trial,
        "timings_ms": {
            "sketch": sum(tr["timings_ms"]["sketch"] for tr in per_trial),
            "finalize": sum(tr["timings_ms"]["finalize"] for tr in per_trial),
        },
    }


def cmd_recover(idx, vals, n, k, p=3.0, eps=0.5, c_b=DEFAULT_C_B, c_l=DEFAULT_C_L, seed=0,
                with_exact=False, dataset=None):
    """Emit the k-sparse recovery ``xhat_J`` for a single seeded pipeline."""
    (tseed, pipe, sk_s), = _vector_trials(idx, vals, n, k, p, eps, c_b, c_l, 1, seed)
    t0 = time.perf_counter()
    cand = pipe.sparse_recover()
    fin_s = time.perf_counter() - t0
    report = {
        "command": "recover",
        "dataset": dataset,
        "n": n,
        "params": {"k": k, "p": p, "eps": eps, "cb": c_b, "cl": c_l,
                   "buckets": pipe.cs.buckets, "rows": pipe.cs.rows, "seed": seed},
        "recovered": [{"index": i, "value": v} for i, v in cand.pairs()],
        "residual": None,
        "exact": None,
        "ratio": None,
        "timings_ms": {"sketch": _ms(sk_s), "finalize": _ms(fin_s)},
    }
    if with_exact:
        x = np.zeros(n)
        np.add.at(x, idx, vals)
        resid = float(np.sum(np.abs(x - cand.to_dense(n)) ** p))
        exact = testkit.exact_vector_residual(x, k, p)
        report.update(residual=resid, exact=exact, ratio=None if exact == 0 else resid / exact)
    return report


def cmd_bench(A, k, m, trials=10, seed=0, s=2, with_exact=False, dataset=None):
    """OSNAP against dense Gaussian at matched ``m`` and seeds."""
    reports = {
        fam: cmd_lowrank(A, k, m, family=fam, s=s, trials=trials, seed=seed,
                         with_exact=with_exact, dataset=dataset)
        for fam in ("osnap", "gaussian")
    }
    fast, slow = reports["osnap"]["timings_ms"]["sketch"], reports["gaussian"]["timings_ms"]["sketch"]
    return {
        "command": "bench",
        "dataset": dataset,
        "params": {"k": k, "m": m, "s": s, "trials": trials, "seed": seed},
        "osnap": reports["osnap"],
        "gaussian": reports["gaussian"],
        "timings_ms": {"speedup": slow / fast if fast > 0 else None},
    }


def cmd_exact_matrix(A, k, dataset=None):
    t0 = time.perf_counter()
    value = testkit.exact_matrix_residual(A.to_csr(), k)
    return {"command": "exact", "dataset": dataset, "kind": "matrix", "shape": list(A.shape),
            "params": {"k": k}, "exact": value,
            "timings_ms": {"finalize": _ms(time.perf_counter() - t0)}}


def cmd_exact_vector(idx, vals, n, k, p, dataset=None):
    x = np.zeros(n)
    np.add.at(x, idx, vals)
    return {"command": "exact", "dataset": dataset, "kind": "vector", "n": n,
            "params": {"k": k, "p": p}, "exact": testkit.exact_vector_residual(x, k, p)}


def cmd_gen(args):
    if args.what == "hard":
        spec = testkit.HardInstanceSpec(args.k, args.eps, c=args.c, seed=args.seed,
                                        which=args.which)
        inst = testkit.gen_hard_pair(spec)
        write_matrix_stream(args.out, Triplets.from_matrix(inst.matrix))
        return {"command": "gen hard", "out": args.out, "shape": list(inst.matrix.shape),
                "params": {"k": args.k, "eps": args.eps, "c": args.c, "which": args.which,
                           "seed": args.seed},
                "alpha": inst.alpha}
    if args.what == "zipf":
        spec = testkit.ZipfStreamSpec(args.n, args.exponent, args.scale, args.updates,
                                      args.turnstile, args.seed)
        st = testkit.gen_zipf_stream(spec)
        write_vector_stream(args.out, st.idx, st.vals)
        return {"command": "gen zipf", "out": args.out, "n": args.n, "updates": len(st),
                "params": {"exponent": args.exponent, "scale": args.scale,
                           "turnstile": args.turnstile, "seed": args.seed}}
    n = args.k * args.block
    s = args.spike if args.spike is not None else (n / args.k) ** (1.0 / args.p)
    st = testkit.gen_gap_stream(args.k, args.block, s, args.seed)
    write_vector_stream(args.out, st.idx, st.vals)
    return {"command": "gen gap", "out": args.out, "n": n, "updates": len(st),
            "params": {"k": args.k, "block": args.block, "spike": s, "seed": args.seed},
            "planted": st.planted.tolist()}


def build_parser():
    parser = argparse.ArgumentParser(prog="residual-sketch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, matrix=True):
        p.add_argument("--dataset", required=True, metavar="PATH")
        if matrix:
            p.add_argument("--format", choices=MATRIX_FORMATS, default="mm")
            p.add_argument("--n", type=int, help="rows (stream format only)")
            p.add_argument("--d", type=int, help="columns (stream format only)")
        else:
            p.add_argument("--format", choices=("stream",), default="stream")
            p.add_argument("--n", type=int, help="universe size (default: max index + 1)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--with-exact", action="store_true")
        p.add_argument("--json-out", metavar="PATH")

    def matrix_opts(p):
        p.add_argument("--k", type=int, default=5)
        p.add_argument("--m", type=int, default=50)
        p.add_argument("--s", type=int, default=2)
        p.add_argument("--trials", type=int, default=10)

    def vector_opts(p):
        p.add_argument("--k", type=int, default=10)
        p.add_argument("--p", type=float, default=3.0)
        p.add_argument("--eps", type=float, default=0.5)
        p.add_argument("--cb", type=float, default=DEFAULT_C_B)
        p.add_argument("--cl", type=float, default=DEFAULT_C_L)

    p = sub.add_parser("lowrank", help="estimate ||A - A_k||_F with a bilinear sketch")
    common(p)
    matrix_opts(p)
    p.add_argument("--family", choices=FAMILIES + (COMPOSED,), default="osnap")
    p.add_argument("--inner-dim", type=int, help="CountSketch width for --family composed")

    p = sub.add_parser("bench", help="OSNAP vs dense Gaussian at matched m")
    common(p)
    matrix_opts(p)

    p = sub.add_parser("vector", help="estimate ||x - x_k||_p^p from a vector stream")
    common(p, matrix=False)
    vector_opts(p)
    p.add_argument("--trials", type=int, default=10)

    p = sub.add_parser("recover", help="k-sparse l_p recovery from a vector stream")
    common(p, matrix=False)
    vector_opts(p)

    p = sub.add_parser("exact", help="ground-truth residual via a full decomposition")
    p.add_argument("--dataset", required=True, metavar="PATH")
    p.add_argument("--format", choices=MATRIX_FORMATS + ("vstream",), default="mm",
                   help="vstream reads an 'i v' vector stream")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--p", type=float, default=3.0)
    p.add_argument("--json-out", metavar="PATH")

    gen = sub.add_parser("gen", help="write synthetic instances").add_subparsers(
        dest="what", required=True)
    p = gen.add_parser("hard", help="hard matrix pair, written as an 'i j v' stream")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--c", type=float, default=10.0)
    p.add_argument("--which", choices=("D1", "D2"), default="D1")
    p = gen.add_parser("zipf", help="Zipf turnstile vector stream")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--exponent", type=float, default=1.1)
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--updates", type=int, default=100_000)
    p.add_argument("--turnstile", type=float, default=0.0)
    p = gen.add_parser("gap", help="blocks of {-1,0,1} noise with planted spikes")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--block", type=int, default=1000)
    p.add_argument("--p", type=float, default=3.0)
    p.add_argument("--spike", type=float, help="spike magnitude (default (n/k)**(1/p))")
    for p in gen.choices.values():
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, metavar="PATH")
        p.add_argument("--json-out", metavar="PATH")
    return parser


def run(args):
    """Dispatch parsed arguments to a command and return its report."""
    if args.command == "gen":
        return cmd_gen(args)
    t0 = time.perf_counter()
    if args.command in ("vector", "recover") or getattr(args, "format", None) == "vstream":
        idx, vals, n = load_vector_stream(args.dataset, args.n)
        ingest = time.perf_counter() - t0
        if args.command == "exact":
            report = cmd_exact_vector(idx, vals, n, args.k, args.p, dataset=args.dataset)
        elif args.command == "vector":
            report = cmd_vector(idx, vals, n, args.k, args.p, args.eps, args.cb, args.cl,
                                args.trials, args.seed, args.with_exact, dataset=args.dataset)
        else:
            report = cmd_recover(idx, vals, n, args.k, args.p, args.eps, args.cb, args.cl,
                                 args.seed, args.with_exact, dataset=args.dataset)
    else:
        shape = (args.n, args.d) if args.n is not None and args.d is not None else None
        A = load_matrix(args.dataset, args.format, shape)
        ingest = time.perf_counter() - t0
        if args.command == "lowrank":
            report = cmd_lowrank(A, args.k, args.m, args.family, args.s, args.trials, args.seed,
                                 args.with_exact, args.inner_dim, dataset=args.dataset)
        elif args.command == "bench":
            report = cmd_bench(A, args.k, args.m, args.trials, args.seed, args.s,
                               args.with_exact, dataset=args.dataset)
        else:
            report = cmd_exact_matrix(A, args.k, dataset=args.dataset)
    report.setdefault("timings_ms", {})["ingest"] = _ms(ingest)
    return report


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report = run(args)
    except NumericalFailure as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    except (SketchError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    report["argv"] = list(sys.argv[1:] if argv is None else argv)
    text = json.dumps(report, indent=2)
    print(text)
    if getattr(args, "json_out", None):
        with open(args.json_out, "w") as f:
            f.write(text + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
