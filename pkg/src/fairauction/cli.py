"""The ``fairauction`` command.

Subcommands are thin wrappers over the library: ``allocate``, ``bounds``,
``payments``, ``stability-check``, ``subset-check``, ``profile``, ``welfare``,
``match``, and ``gen-synth``. JSON goes to stdout with 17-significant-digit
floats; CSV artifacts are written to the paths given. Exit codes: 0 success,
2 usage or validation error, 3 empty result, 4 I/O failure.

Any flag may also be supplied through a JSON config file via ``--config``;
explicit command-line flags take precedence. Commands that draw random
samples (``profile``, ``gen-synth``, ``stability-check``) require an explicit
``--seed`` and are byte-deterministic given one.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset, profiler, serialize, stability, subset
from .errors import EmptyHorizon, FairAuctionError, NoComparableBuckets
from .payments import QuadratureConfig, payment_identity
from .rules import RuleKind, RuleSpec, allocate
from .subset import SetCollection, cluster_capped_alloc, equivalence_clusters, partition_hierarchical_alloc

_EXIT_VALIDATION = 2
_EXIT_EMPTY = 3
_EXIT_IO = 4


def _parse_values(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise FairAuctionError(f"could not parse value list {text!r}") from None


def _build_rule(args) -> RuleSpec:
    kind = RuleKind(args.rule)
    kwargs = {}
    if kind in (RuleKind.IPA, RuleKind.CAPPED_IPA):
        if args.ell is None:
            raise FairAuctionError(f"rule {kind.value!r} requires --ell")
        kwargs["ell"] = args.ell
    if kind is RuleKind.CAPPED_IPA:
        if args.beta is None:
            raise FairAuctionError("rule 'capped-ipa' requires --beta")
        kwargs["beta"] = args.beta
    if kind is RuleKind.PROPORTIONAL:
        if args.exponent is None:
            raise FairAuctionError("rule 'proportional' requires --exponent")
        kwargs["exponent"] = args.exponent
    return RuleSpec(kind, **kwargs)


def _parse_rule_list(text: str) -> list[RuleSpec]:
    """Compact rule list: 'ipa:1,highest-bid,proportional:2,capped-ipa:1:0.5'."""
    specs = []
    for tok in text.split(","):
        parts = tok.strip().split(":")
        try:
            kind = RuleKind(parts[0])
            if kind is RuleKind.IPA:
                specs.append(RuleSpec(kind, ell=float(parts[1])))
            elif kind is RuleKind.CAPPED_IPA:
                specs.append(RuleSpec(kind, ell=float(parts[1]), beta=float(parts[2])))
            elif kind is RuleKind.PROPORTIONAL:
                specs.append(RuleSpec(kind, exponent=float(parts[1])))
            else:
                specs.append(RuleSpec(kind))
        except (ValueError, IndexError) as exc:
            if isinstance(exc, FairAuctionError):
                raise
            raise FairAuctionError(f"bad rule token {tok!r}: use kind[:param[:beta]]") from None
    return specs


def _add_rule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rule", required=True, choices=[k.value for k in RuleKind])
    p.add_argument("--ell", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--exponent", type=float, default=None)


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace, argv: list[str]) -> argparse.Namespace:
    """Fill flags from a JSON config file; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise exc
    except json.JSONDecodeError as exc:
        raise FairAuctionError(f"bad config JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise FairAuctionError("config file must hold a JSON object")
    def to_attr(name: str) -> str:
        attr = name.replace("-", "_")
        return "lam" if attr == "lambda" else attr

    explicit = {to_attr(tok.split("=", 1)[0].lstrip("-")) for tok in argv if tok.startswith("--")}
    for key, value in cfg.items():
        attr = to_attr(key)
        if not hasattr(args, attr):
            raise FairAuctionError(f"unknown config key {key!r}")
        if attr not in explicit:
            setattr(args, attr, value)
    return args


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise FairAuctionError(f"--{name.replace('_', '-')} is required")


def _print_json(obj) -> None:
    sys.stdout.write(serialize.dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_allocate(args) -> int:
    spec = _build_rule(args)
    x = allocate(spec, _parse_values(args.values))
    _print_json({"rule": spec.label(), "probs": list(map(float, x.probs))})
    return 0


def _cmd_bounds(args) -> int:
    report: dict = {}
    if args.ell is not None:
        ell = args.ell
        lam_grid = [1.0 + 0.1 * i for i in range(11)] + [4.0, 10.0]
        bounds = stability.bound_report(ell, args.k)
        report.update(
            {
                "ell": ell,
                "alpha_ell": bounds.alpha_ell,
                "alpha_ell_numeric": stability.alpha_ell_numeric(ell),
                "f_ell_table": [{"lambda": lam, "f": stability.f_ell(lam, ell)} for lam in lam_grid],
                "gap_bounds": dict(zip(("ub_limit", "ratio_lb"), stability.gap_bounds(ell))),
                "prior_free_upper_bound": {
                    "k": args.k,
                    "min_over_lambda": bounds.upper_bound,
                    "argmin_lambda": bounds.params["argmin_lambda"],
                },
            }
        )
    if args.near_optimal_alpha is not None:
        ell_star, beta, guarantee = stability.near_optimal_params(args.near_optimal_alpha)
        report["near_optimal"] = {
            "alpha": args.near_optimal_alpha,
            "ell": ell_star,
            "beta": beta,
            "guarantee": guarantee,
        }
    if not report:
        raise FairAuctionError("nothing to report: pass --ell and/or --near-optimal-alpha")
    if args.curves_out:
        _write_theory_curves(args.curves_out, [float(e) for e in _parse_values(args.curves_ells)])
        report["curves_out"] = str(args.curves_out)
    _print_json(report)
    return 0


def _write_theory_curves(path, ells: list[float]) -> None:
    """CSV of stability and welfare bound curves: columns curve,ell,x,y."""
    import csv as _csv

    lam_grid = np.linspace(1.0, 2.0, 41)
    ell_grid = np.geomspace(0.05, 8.0, 60)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh, lineterminator="\n")
        w.writerow(["curve", "ell", "x", "y"])
        for ell in ells:
            for lam in lam_grid:
                w.writerow(
                    ["stability_bound", serialize.format_float(float(ell)), serialize.format_float(float(lam)), serialize.format_float(stability.f_ell(float(lam), ell))]
                )
        for ell in ell_grid:
            w.writerow(
                ["welfare_ratio_bound", serialize.format_float(float(ell)), serialize.format_float(float(ell)), serialize.format_float(stability.alpha_ell(float(ell)))]
            )


def _cmd_payments(args) -> int:
    spec = _build_rule(args)
    quad = QuadratureConfig(tol=args.quad_tol)
    res = payment_identity(spec, _parse_values(args.values), args.index, quad)
    _print_json(
        {
            "rule": spec.label(),
            "index": args.index,
            "payment": res.payment,
            "allocation_at_truth": res.allocation_at_truth,
            "quadrature_error_estimate": res.quadrature_error_estimate,
        }
    )
    return 0


def _cmd_stability_check(args) -> int:
    _require(args, "seed")
    spec = _build_rule(args)
    diff = stability.stability_violation_search(spec, _parse_values(args.values), args.lam, args.samples, args.seed)
    out = {"rule": spec.label(), "lambda": args.lam, "max_alloc_diff": diff}
    if spec.kind in (RuleKind.IPA, RuleKind.CAPPED_IPA):
        bound = stability.f_ell(args.lam, spec.ell)
        if spec.kind is RuleKind.CAPPED_IPA:
            bound *= spec.beta
        out["stability_bound"] = bound
        out["within_bound"] = diff <= bound + 1e-9
    _print_json(out)
    return 0


def _cmd_subset_check(args) -> int:
    collection = SetCollection.from_json(Path(args.collection).read_text(encoding="utf-8"))
    v = _parse_values(args.values)
    w = _parse_values(args.values2)
    if args.composed == "none":
        rule = _build_rule(args)
    elif args.composed == "cluster-capped":
        _require(args, "ell", "cap_n")
        rule = lambda V: np.vstack([cluster_capped_alloc(row, args.ell, args.cap_n, collection).probs for row in V])
    else:  # partition-hierarchical over the collection's membership clusters
        _require(args, "ell")
        parts = equivalence_clusters(collection)
        rule = lambda V: np.vstack([partition_hierarchical_alloc(row, args.ell, parts).probs for row in V])
    diff = subset.subset_stability_check(rule, collection, v, w)
    lam = stability.stability_param(np.asarray(v, dtype=float), np.asarray(w, dtype=float))
    _print_json({"max_group_diff": diff, "lambda": lam})
    return 0


def _load_horizons(args) -> list[dataset.Horizon]:
    records = dataset.ingest_csv(args.input)
    auctions = dataset.build_auctions(records)
    horizons = dataset.partition_horizons(auctions)
    if args.horizon and args.horizon != "all":
        horizons = [h for h in horizons if h.label == args.horizon]
        if not horizons:
            raise EmptyHorizon(f"no auctions in horizon {args.horizon!r}")
    elif args.horizon == "all":
        merged = dataset.Horizon(label="all")
        for h in horizons:
            merged.auctions.extend(h.auctions)
        horizons = [merged]
    if not horizons:
        raise EmptyHorizon("input contains no auctions")
    return horizons


def _cmd_profile(args) -> int:
    _require(args, "seed", "horizon")
    horizons = _load_horizons(args)
    cfg = profiler.ProfileConfig(
        jaccard_min=args.jaccard_min,
        percentile=args.percentile,
        max_samples_per_bucket=args.max_samples,
        seed=args.seed,
        threads=args.threads,
    )
    if not args.rules and not args.rule:
        raise FairAuctionError("pass --rule or --rules")
    specs = _parse_rule_list(args.rules) if args.rules else [_build_rule(args)]
    profiles = [profiler.build_profile(horizons[0], spec, cfg) for spec in specs]
    profiler.write_profile_csv(profiles, args.out)
    return 0


def _cmd_welfare(args) -> int:
    horizons = _load_horizons(args)
    specs = _parse_rule_list(args.rules)
    reports = [profiler.welfare_report(h, specs) for h in horizons]
    profiler.write_welfare_csv(reports, args.out)
    return 0


def _cmd_match(args) -> int:
    def family(path):
        profiles = profiler.read_profile_csv(path)
        out = {}
        for p in profiles:
            if p.param is None:
                raise FairAuctionError(f"profiles in {path} must carry a parameter for matching")
            out[p.param] = p
        return out

    matches = profiler.match_parameters(family(args.profiles_a), family(args.profiles_b))
    obj = profiler.match_to_json_obj(matches)
    if args.out:
        Path(args.out).write_text(serialize.dumps(obj) + "\n", encoding="utf-8")
    else:
        _print_json(obj)
    return 0


def _cmd_gen_synth(args) -> int:
    _require(args, "seed", "out")
    fields = {}
    if args.synth_config:
        obj = json.loads(Path(args.synth_config).read_text(encoding="utf-8"))
        if not isinstance(obj, dict):
            raise FairAuctionError("synthetic config must be a JSON object")
        fields.update(obj)
    for name in (
        "keywords",
        "advertisers",
        "months",
        "auctions_per_keyword",
        "flip_fraction",
        "bid_sigma",
        "start_month",
        "pair_jaccard",
        "stale_fraction",
    ):
        val = getattr(args, name)
        if val is not None:
            fields[name] = val
    if args.profile_weights is not None:
        fields["pair_similarity_profile"] = tuple(_parse_values(args.profile_weights))
    if args.bidders_range is not None:
        lo, hi = (int(x) for x in _parse_values(args.bidders_range))
        fields["bidders_range"] = (lo, hi)
    cfg = dataset.SyntheticConfig.from_dict(fields)
    records = dataset.gen_synthetic(args.seed, cfg)
    dataset.write_csv(records, args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairauction", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(handler=handler)
        p.add_argument("--config", default=None, help="JSON file supplying any flag; command line wins")
        return p

    p = add("allocate", _cmd_allocate, "run one allocation rule on a value vector")
    _add_rule_flags(p)
    p.add_argument("--values", required=True, help="comma-separated nonnegative values")

    p = add("bounds", _cmd_bounds, "closed-form stability and welfare bounds")
    p.add_argument("--ell", type=float, default=None)
    p.add_argument("--k", type=int, default=10**6, help="advertisers for the prior-free ceiling")
    p.add_argument("--near-optimal-alpha", type=float, default=None)
    p.add_argument("--curves-out", default=None, help="write theory-curve CSV here")
    p.add_argument("--curves-ells", default="0.5,1,2.5", help="stability-curve parameters for --curves-out")

    p = add("payments", _cmd_payments, "truthful payment of one advertiser")
    _add_rule_flags(p)
    p.add_argument("--values", required=True)
    p.add_argument("--index", type=int, required=True, help="0-based advertiser index")
    p.add_argument("--quad-tol", type=float, default=1e-8)

    p = add("stability-check", _cmd_stability_check, "worst observed allocation change within a similarity band")
    _add_rule_flags(p)
    p.add_argument("--values", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None, required=False)

    p = add("subset-check", _cmd_subset_check, "group-level allocation difference over a set collection")
    _add_rule_flags(p)
    p.add_argument("--collection", required=True, help="JSON {'k':…, 'sets': [[1-based indices]…]}")
    p.add_argument("--values", required=True)
    p.add_argument("--values2", required=True)
    p.add_argument("--composed", choices=["none", "cluster-capped", "partition-hierarchical"], default="none")
    p.add_argument("--cap-n", type=int, default=None, help="cluster-width bound for cluster-capped")

    p = add("profile", _cmd_profile, "bid-stability profile CSV for one horizon")
    p.add_argument("--input", required=True, help="bid-record CSV")
    p.add_argument("--horizon", default=None, help="YYYY-MM label, or 'all'")
    p.add_argument("--rule", choices=[k.value for k in RuleKind], default=None)
    p.add_argument("--ell", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--exponent", type=float, default=None)
    p.add_argument("--rules", default=None, help="compact list, e.g. 'ipa:0.1,ipa:1,highest-bid'")
    p.add_argument("--out", required=True)
    p.add_argument("--jaccard-min", type=float, default=0.67)
    p.add_argument("--percentile", type=float, default=90.0)
    p.add_argument("--max-samples", type=int, default=10000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)

    p = add("welfare", _cmd_welfare, "welfare report CSV over horizons")
    p.add_argument("--input", required=True)
    p.add_argument("--horizon", default="all")
    p.add_argument("--rules", required=True)
    p.add_argument("--out", required=True)

    p = add("match", _cmd_match, "match parameters between two profile families")
    p.add_argument("--profiles-a", required=True)
    p.add_argument("--profiles-b", required=True)
    p.add_argument("--out", default=None)

    p = add("gen-synth", _cmd_gen_synth, "seeded synthetic bid log CSV")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--synth-config", default=None, help="JSON object of generator settings")
    p.add_argument("--keywords", type=int, default=None)
    p.add_argument("--advertisers", type=int, default=None)
    p.add_argument("--months", type=int, default=None)
    p.add_argument("--auctions-per-keyword", type=int, default=None)
    p.add_argument("--flip-fraction", type=float, default=None)
    p.add_argument("--bid-sigma", type=float, default=None)
    p.add_argument("--start-month", default=None)
    p.add_argument("--pair-jaccard", type=float, default=None)
    p.add_argument("--stale-fraction", type=float, default=None)
    p.add_argument("--profile-weights", default=None, help="10 comma-separated bucket weights")
    p.add_argument("--bidders-range", default=None, help="lo,hi bidders per auction")

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(parser, args, argv)
        return args.handler(args)
    except (EmptyHorizon, NoComparableBuckets) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_EMPTY
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return _EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_IO
    except FairAuctionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
