"""Command-line front end.

Exit codes: 0 success, 1 I/O failure, 2 invalid input or parameters,
3 numerical failure (degenerate kernel, non-convergence, bad spectrum).
"""
from __future__ import annotations

import argparse
import configparser
import os
import sys
from typing import Dict, List, Optional

from . import __version__
from .embed import METHOD_TABLE, METHODS, diffusion_maps, gp_embedding, make_sketch
from .errors import GPEmbedError, NumericalError, SpecError, TrialError
from .harness import ExperimentConfig, powers_of_two, run_experiment, run_power_sweep
from .io import read_cloud, write_cloud, write_embedding, write_matrix
from .kernel import DEFAULT_DELTA, normalized_kernel
from .manifolds import KINDS, ManifoldSpec, parse_outliers, sample

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SEED_ENV = "GPEMBED_SEED"

# config-file key -> type
CONFIG_KEYS = {
    "manifold": str, "n": int, "r": float, "a": float, "b": float, "outliers": str,
    "trials": int, "eps": float, "p": int, "P": int, "powers": str,
    "k": int, "kmin": int, "kmax": int, "methods": str, "reference": str,
    "delta": float, "seed": int, "threads": int,
}
REQUIRED_KEYS = ("manifold", "n", "trials", "eps", "methods")


class UsageError(GPEmbedError, ValueError):
    pass


def default_seed(explicit: Optional[int]) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None


def embed_cloud(cloud, method: str, k: int, p: int, eps: float, seed: int = 0,
                delta: float = DEFAULT_DELTA):
    """Run one named method on a cloud; diffusion maps use time ``t = p``."""
    if method not in METHOD_TABLE:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    family, norm, dist = METHOD_TABLE[method]
    if not 1 <= k < cloud.n:
        raise UsageError(f"k must satisfy 1 <= k < n = {cloud.n}, got {k}")
    A = normalized_kernel(cloud, eps, norm, delta)
    if family == "diffusion":
        return diffusion_maps(A, k, p)
    return gp_embedding(A, k, p, make_sketch(cloud.n, k, dist, seed))


def _spec_from(values: Dict[str, object], seed=None) -> ManifoldSpec:
    kw = {}
    for key in ("r", "a", "b"):
        if values.get(key) is not None:
            kw[key] = float(values[key])
    if values.get("outliers"):
        kw["outliers"] = parse_outliers(str(values["outliers"]))
    if values.get("manifold") is None:
        raise UsageError("--manifold is required")
    if values.get("n") is None:
        raise UsageError("--n is required")
    return ManifoldSpec(str(values["manifold"]), int(values["n"]), seed, **kw)


def cmd_sample(args) -> int:
    spec = _spec_from(vars(args), default_seed(args.seed))
    write_cloud(sample(spec), args.out)
    return EXIT_OK


def cmd_kernel(args) -> int:
    cloud = read_cloud(args.input)
    A = normalized_kernel(cloud, args.eps, args.normalization, args.delta)
    write_matrix(A.entries, args.out, normalization=A.normalization, eps=repr(args.eps))
    return EXIT_OK


def cmd_embed(args) -> int:
    cloud = read_cloud(args.input)
    seed = default_seed(args.seed)
    emb = embed_cloud(cloud, args.method, args.k, args.p, args.eps, seed, args.delta)
    write_embedding(emb, args.out, eps=repr(float(args.eps)))
    return EXIT_OK


def read_config(path) -> Dict[str, object]:
    """Flat ``key = value`` file; an ``[experiment]`` header is optional."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not any(line.lstrip().startswith("[") for line in text.splitlines()):
        text = "[experiment]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    sections = parser.sections()
    if sections != ["experiment"]:
        raise UsageError(f"{path}: expected a single [experiment] section, got {sections}")
    raw = dict(parser["experiment"])
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise UsageError(f"{path}: unknown keys: {', '.join(unknown)}")
    values, bad = {}, []
    for key, text_value in raw.items():
        try:
            values[key] = CONFIG_KEYS[key](text_value.strip())
        except ValueError:
            bad.append(key)
    if bad:
        raise UsageError(f"{path}: malformed values for keys: {', '.join(sorted(bad))}")
    return values


def _split_list(text) -> List[str]:
    return [t.strip() for t in str(text).replace(";", ",").split(",") if t.strip()]


def build_experiment(values: Dict[str, object]):
    """Validate merged config values into ``(ExperimentConfig, is_sweep)``."""
    missing = [k for k in REQUIRED_KEYS if values.get(k) in (None, "")]
    sweep = values.get("P") is not None or values.get("powers") is not None
    if not sweep and values.get("p") is None:
        missing.append("p")
    if values.get("k") is None and (values.get("kmin") is None or values.get("kmax") is None):
        missing.append("k or kmin/kmax")
    if missing:
        raise UsageError(f"missing keys: {', '.join(missing)}")
    if values.get("k") is not None:
        k_min = k_max = int(values["k"])
    else:
        k_min, k_max = int(values["kmin"]), int(values["kmax"])
    methods = tuple(_split_list(values["methods"]))
    if not methods:
        raise UsageError("methods: list is empty")
    powers = None
    if values.get("powers") is not None:
        try:
            powers = tuple(int(q) for q in _split_list(values["powers"]))
        except ValueError:
            raise UsageError("powers: expected integers") from None
    elif values.get("P") is not None:
        powers = powers_of_two(int(values["P"]))
    reference = values.get("reference") or ("euclidean" if sweep else "diffusion")
    cfg = ExperimentConfig(
        manifold=_spec_from(values),
        trials=int(values["trials"]),
        eps=float(values["eps"]),
        methods=methods,
        p=int(values["p"]) if values.get("p") is not None else (powers[0] if powers else 1),
        k_min=k_min,
        k_max=k_max,
        reference=str(reference),
        sinkhorn_delta=DEFAULT_DELTA if values.get("delta") is None else float(values["delta"]),
        master_seed=default_seed(values.get("seed")),
        powers=powers,
        threads=1 if values.get("threads") is None else int(values["threads"]),
    )
    return cfg, sweep


def cmd_experiment(args) -> int:
    values: Dict[str, object] = read_config(args.config) if args.config else {}
    overrides = {
        "manifold": args.manifold, "n": args.n, "r": args.r, "a": args.a, "b": args.b,
        "outliers": args.outliers, "trials": args.trials, "eps": args.eps, "p": args.p,
        "P": args.P, "k": args.k, "kmin": args.kmin, "kmax": args.kmax,
        "methods": args.methods, "reference": args.reference, "delta": args.delta,
        "seed": args.seed, "threads": args.threads,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg, sweep = build_experiment(values)
    report = run_power_sweep(cfg) if sweep else run_experiment(cfg)
    report.write_csv(args.out)
    if args.raw_out:
        report.write_raw_csv(args.raw_out)
    return EXIT_OK


def _manifold_flags(p, required=True):
    p.add_argument("--manifold", choices=KINDS, required=required)
    p.add_argument("--n", type=int, required=required, help="number of points")
    p.add_argument("--r", type=float, help="flat_torus: radius of the second circle (> 1)")
    p.add_argument("--a", type=float, help="klein: tube center radius")
    p.add_argument("--b", type=float, help="klein: tube radius")
    p.add_argument("--outliers", help='circle_with_outliers: points as "x,y;x,y"')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpembed",
        description="Diffusion-maps and Gaussian-process embeddings of sampled manifolds.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a synthetic manifold to CSV")
    _manifold_flags(p)
    p.add_argument("--seed", type=int, help=f"RNG seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("kernel", help="write a normalized kernel matrix")
    p.add_argument("--input", "--in", dest="input", required=True, help="point cloud CSV")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--normalization", choices=("raw", "symmetric", "bistochastic"),
                   default="symmetric")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("embed", help="embed a point cloud CSV")
    p.add_argument("--input", "--in", dest="input", required=True, help="point cloud CSV")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--p", type=int, default=1, help="kernel power (diffusion time for DM*)")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--seed", type=int, help=f"sketch seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("experiment", help="run a multi-trial distortion experiment")
    p.add_argument("--config", help="key = value config file; flags override its entries")
    _manifold_flags(p, required=False)
    p.add_argument("--trials", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--p", type=int)
    p.add_argument("--P", type=int, help="power sweep over 2, 4, ..., 2**P")
    p.add_argument("--k", type=int, help="fixed target dimension")
    p.add_argument("--kmin", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--methods", help="comma-separated subset of " + ",".join(METHODS))
    p.add_argument("--reference", choices=("diffusion", "euclidean"))
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--threads", type=int, help="parallel trials, 0 = one per CPU")
    p.add_argument("--out", required=True, help="report CSV")
    p.add_argument("--raw-out", help="optional per-trial CSV")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrialError as exc:
        print(f"gpembed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc.cause, ArithmeticError) else EXIT_USAGE
    except NumericalError as exc:
        print(f"gpembed: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GPEmbedError, SpecError, ValueError) as exc:
        print(f"gpembed: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"gpembed: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
