"""Command-line entry point.

Examples::

    maqkd --system both --memory wv --mode asymptotic --distance 0:500:10 -o wv.csv
    maqkd --memory ca --mode finite --collection-time 3600 --distance 100:400:10
    maqkd --oracle loading_z --trials 1000000
    maqkd --counts observed.csv --epsilon 1e-10
"""

from __future__ import annotations

import argparse
import csv
import sys
from typing import Any, Sequence

from .counts import read_counts_csv
from .finite_key import DEFAULT_EPSILON, estimate_key
from .oracle import Scenario, run_suite
from .params import IntensitySet, load_config, split_overrides
from .sweep import RunSpec, advantage_window, cutoff_distance, run_sweep, write_sweep_csv

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

_FLAG_KEYS = {
    "system", "memory", "decoherence", "mode", "block_size", "collection_time", "eta_c",
    "epsilon", "distance", "output", "seed", "workers", "refine", "trials",
}


class _SpecError(Exception):
    pass


def _parse_distance(text: str) -> tuple[float, float, float]:
    """``start:stop[:step]`` or a single distance."""
    parts = [p for p in str(text).split(":")]
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise _SpecError(f"bad distance range {text!r}") from exc
    if len(vals) == 1:
        return vals[0], vals[0], 10.0
    if len(vals) == 2:
        return vals[0], vals[1], 10.0
    if len(vals) == 3:
        return vals[0], vals[1], vals[2]
    raise _SpecError(f"bad distance range {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="maqkd",
        description="Key-rate sweeps for memory-assisted and memoryless MDI key distribution.",
    )
    p.add_argument("--system", choices=("ma", "mdi", "both"))
    p.add_argument("--memory", help="wv, ca, sv or custom")
    p.add_argument("--decoherence", choices=("dephasing", "depolarising"))
    p.add_argument("--mode", choices=("asymptotic", "finite"))
    p.add_argument("--block-size", type=float, metavar="N", help="rounds per block")
    p.add_argument("--collection-time", type=float, metavar="SECONDS", help="block set by R_s * T_col")
    p.add_argument("--eta-c", type=float, help="frequency-converter efficiency")
    p.add_argument("--epsilon", type=float, help="failure probability per bound")
    p.add_argument("--distance", help="start:stop:step in km (default 0:500:10)")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="parallel distance chunks")
    p.add_argument("--no-refine", dest="refine", action="store_false", default=None,
                   help="skip the 1 km refinement around crossovers")
    p.add_argument("--config", help="INI-style file whose keys mirror the flags")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a system or memory parameter (repeatable)")
    p.add_argument("--oracle", choices=[s.value for s in Scenario] + ["all"],
                   help="run a Monte-Carlo cross-check instead of a sweep")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials per grid point")
    p.add_argument("--counts", help="estimate a key from a counts CSV instead of sweeping")
    return p


def _merge(args: argparse.Namespace) -> dict[str, Any]:
    """Flags override config-file values."""
    merged: dict[str, Any] = {}
    extra: dict[str, Any] = {}
    if args.config:
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise _SpecError(f"cannot read config: {exc}") from exc
        for k, v in cfg.items():
            (merged if k in _FLAG_KEYS else extra)[k] = v
    for k in _FLAG_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    for item in args.overrides:
        if "=" not in item:
            raise _SpecError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            extra[k.strip()] = float(v)
        except ValueError:
            extra[k.strip()] = v.strip()
    merged["_extra"] = extra
    return merged


def spec_from_values(values: dict[str, Any]) -> RunSpec:
    extra = dict(values.get("_extra", {}))
    sys_kw, mem_kw = split_overrides(extra)
    for k in ("L", "eta_c"):
        sys_kw.pop(k, None)
    mem_kw.pop("name", None)
    unknown = set(extra) - set(sys_kw) - set(mem_kw) - {"L", "name"}
    if unknown:
        raise _SpecError(f"unknown parameter(s): {sorted(unknown)}")
    if "N_r" in mem_kw:
        mem_kw["N_r"] = int(mem_kw["N_r"])
    start, stop, step = _parse_distance(values.get("distance", "0:500:10"))
    mode = values.get("mode", "asymptotic")
    N = values.get("block_size")
    T_col = values.get("collection_time")
    refine = values.get("refine", True)
    if isinstance(refine, str):
        refine = refine.lower() not in ("0", "false", "no", "off")
    return RunSpec(
        system=values.get("system", "both"),
        memory=str(values.get("memory", "wv")).lower(),
        decoherence=values.get("decoherence", "dephasing"),
        mode=mode,
        N=float(N) if N is not None else None,
        T_col=float(T_col) if T_col is not None else None,
        L_start=start,
        L_stop=stop,
        L_step=step,
        eta_c=float(values.get("eta_c", 1.0)),
        epsilon=float(values.get("epsilon", DEFAULT_EPSILON)),
        output=values.get("output"),
        seed=int(values.get("seed", 0)),
        refine=bool(refine),
        workers=int(values.get("workers", 1)),
        system_overrides=sys_kw,
        memory_overrides=mem_kw,
    )


def _run_counts(path: str, values: dict[str, Any], out) -> int:
    counts, header = read_counts_csv(path)
    try:
        I = IntensitySet(
            z=header["z"], w1=header["w1"], w2=header["w2"], v=header["v"],
            p_z=header["p_z"], p_w1=header["p_w1"], p_w2=header["p_w2"], p_v=header["p_v"],
        )
    except KeyError as exc:
        raise _SpecError(f"counts CSV lacks intensity line for {exc}") from exc
    eps = float(values.get("epsilon", DEFAULT_EPSILON))
    f_ec = float(values.get("_extra", {}).get("f_ec", 1.0))
    R_s = float(values.get("_extra", {}).get("R_s", header.get("R_s", 1.0)))
    r = estimate_key(counts, I, epsilon=eps, f_ec=f_ec, R_s=R_s)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["quantity", "value"])
    for name in ("M11_L", "M11Z_L", "E11_U", "E11Z_U", "e_ph_U", "e_Z", "M_Z", "K", "rate_bps", "total_epsilon"):
        w.writerow([name, repr(float(getattr(r, name)))])
    w.writerow(["reason", r.reason])
    return EXIT_NUMERICAL if r.extras.get("numerical_failure") else EXIT_OK


def _run_oracle(scenario: str, values: dict[str, Any], out) -> int:
    trials = int(values.get("trials", 1_000_000))
    seed = int(values.get("seed", 0))
    rows = run_suite(scenario, trials=trials, seed=seed)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["scenario", "quantity", "point", "closed_form", "mc_mean", "mc_stderr", "z_score", "within_3sigma"])
    for r in rows:
        w.writerow([r.scenario, r.quantity, r.point, repr(r.closed_form), repr(r.mean), repr(r.stderr),
                    f"{r.z_score:.3f}", r.ok])
    return EXIT_OK


def _summary(rows, spec: RunSpec, err) -> None:
    if spec.system != "both":
        return
    onset, end = advantage_window(rows)
    fmt = lambda x: "none" if x is None else f"{x:.1f} km"  # noqa: E731
    print(f"crossover: {fmt(onset)}; advantage ends: {fmt(end)}; "
          f"memoryless cutoff: {fmt(cutoff_distance(rows, 'rate_mdi_bps'))}", file=err)


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        values = _merge(args)
        if args.counts:
            return _run_counts(args.counts, values, out)
        if args.oracle:
            return _run_oracle(args.oracle, values, out)
        spec = spec_from_values(values)
    except (_SpecError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID

    rows = run_sweep(spec)
    if not spec.output:
        write_sweep_csv(rows, out, spec)
    _summary(rows, spec, err)
    failed = [r.L_km for r in rows if r.failed]
    if failed:
        print(f"numerical failure at L = {failed}", file=err)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
