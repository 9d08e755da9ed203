"""Command line front end: ``gen | analyze | search | simulate``.

Exit codes: 0 success / certificate found, 1 negative result, 2 input error.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import jsonio
from .certs import Certificate, StateSet, permutation_analysis, verify_arbitrary
from .hmod import ModuleInnerProductContext, check_orthogonal_family, rank_bound_check
from .matcore import (
    Tolerance,
    gen_pauli_x,
    gen_pauli_z,
    haar_unitary,
    is_permutation_matrix,
    is_unitary,
    permutation_matrix,
    random_complex,
    weyl,
)
from .opsys import (
    is_multiplicatively_closed,
    separating_vector_search,
    span_products,
    unambiguous_check,
)
from .search import ImpossibleByTraceTest, SearchConfig, search_certificate
from .simproto import build_protocol, exact_success, simulate, Protocol

log = logging.getLogger(__name__)

FAMILIES = (
    "paulis-x",
    "paulis-z",
    "paulis-all",
    "permutations-cyclic",
    "random-unitary",
    "random-orthogonal-pair",
)

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT = 0, 1, 2


def generate_family(family: str, d: int, seed: int = 0, n: int | None = None) -> StateSet:
    if d < 1:
        raise ValueError(f"bad dimension d={d}")
    rng = np.random.default_rng(seed)
    if family == "paulis-x":
        x = gen_pauli_x(d)
        mats = [np.linalg.matrix_power(x, k) for k in range(d)]
        labels = [f"X^{k}" for k in range(d)]
    elif family == "paulis-z":
        z = gen_pauli_z(d)
        mats = [np.linalg.matrix_power(z, k) for k in range(d)]
        labels = [f"Z^{k}" for k in range(d)]
    elif family == "paulis-all":
        mats = [weyl(d, a, b) for a in range(d) for b in range(d)]
        labels = [f"X^{a}Z^{b}" for a in range(d) for b in range(d)]
    elif family == "permutations-cyclic":
        # P_k = Q X^k R for random permutations Q, R: the isotopes of the cyclic Latin square
        q = permutation_matrix(rng.permutation(d))
        r = permutation_matrix(rng.permutation(d))
        x = gen_pauli_x(d)
        mats = [q @ np.linalg.matrix_power(x, k) @ r for k in range(d)]
        labels = [f"P{k + 1}" for k in range(d)]
    elif family == "random-unitary":
        count = d if n is None else n
        mats = [haar_unitary(d, rng) for _ in range(count)]
        labels = [f"U{k + 1}" for k in range(count)]
    elif family == "random-orthogonal-pair":
        a = random_complex((d, d), rng)
        b = random_complex((d, d), rng)
        b = b - np.vdot(a, b) / np.vdot(a, a) * a
        # normalize so that (I (x) M)|Phi> is a unit vector
        mats = [m * np.sqrt(d) / np.linalg.norm(m) for m in (a, b)]
        labels = ["M1", "M2"]
    else:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    return StateSet.from_matrices(mats, labels)


def _normalized_unitaries(states: StateSet, tol: Tolerance):
    """The members rescaled to unitaries, or None if some member is not a scaled unitary."""
    out = []
    for m in states.matrices:
        u = m * np.sqrt(states.d) / np.linalg.norm(m)
        if not is_unitary(u, Tolerance(zero_abs=max(tol.zero_abs, 1e-9))):
            return None
        out.append(u)
    return out


def analyze(states: StateSet, tol: Tolerance = Tolerance(), cfg: SearchConfig | None = None,
            search: bool = True) -> tuple[dict, int]:
    """Full analysis pipeline; returns the report and the exit code."""
    cfg = cfg or SearchConfig(tol=tol)
    d, n = states.d, states.n
    report = {
        "d": d,
        "n": n,
        "arbitrary_distinguishable": verify_arbitrary(states, tol),
        "certificate": None,
        "construction_used": "none",
        "notes": [],
    }
    notes = report["notes"]
    # permutations are analyzed combinatorially, before the trace test
    if all(is_permutation_matrix(np.real_if_close(m)) for m in states.matrices):
        perm = permutation_analysis(states.matrices)
        report["permutation"] = {
            "distinguishable": perm.distinguishable,
            "latin_square": None if perm.latin is None else perm.latin.cells.tolist(),
        }

    if not report["arbitrary_distinguishable"]:
        report["error"] = "ImpossibleByTraceTest"
        notes.append("states are not pairwise orthogonal; no measurement distinguishes them")
        return report, EXIT_NEGATIVE

    unitaries = _normalized_unitaries(states, tol)
    cert = None
    if unitaries is not None and n > d:
        notes.append(f"{n} maximally entangled states exceed d = {d}: at most d can be "
                     "perfectly distinguished by LOCC, so no certificate exists")
        result = None
    else:
        try:
            result = search_certificate(states, cfg) if search else None
        except ImpossibleByTraceTest:  # pragma: no cover - guarded above
            result = None
    if result is not None:
        if result.found:
            cert = result.certificate
            report["construction_used"] = result.construction
            report["certificate"] = cert.to_json()
        else:
            notes.append(f"numeric search found no certificate (best residual "
                         f"{result.best_residual:.3e}); this is not a proof of impossibility")

    osys = span_products(states, tol)
    sep = separating_vector_search(osys, seed=cfg.seed, tol=tol)
    report["operator_system"] = {
        "dim": osys.dim,
        "algebra": is_multiplicatively_closed(osys, tol),
        "separating_vector": jsonio.vector_to_json(sep) if isinstance(sep, np.ndarray) else None,
        "separating_status": "found" if isinstance(sep, np.ndarray) else sep.reason,
        "max_rank_observed": None if isinstance(sep, np.ndarray) else sep.max_rank,
    }
    unamb = unambiguous_check(states, seed=cfg.seed, w=None if cert is None else cert.W, tol=tol)
    report["unambiguous_vector"] = jsonio.vector_to_json(unamb) if isinstance(unamb, np.ndarray) else None

    bounds = {}
    if unitaries is not None:
        w = cert.W if cert is not None and cert.r == d else None
        fam = check_orthogonal_family(unitaries, ModuleInnerProductContext(w, tol))
        bounds["orthogonal_family"] = fam.to_dict()
        if n > d:
            bounds["orthogonal_family"]["bound_violation"] = f"n = {n} > d = {d}"
    ctx = ModuleInnerProductContext(None if cert is None else cert.W, tol)
    bounds["rank"] = rank_bound_check(list(states.matrices), ctx, seed=cfg.seed).to_dict()
    report["bounds"] = bounds
    return report, EXIT_OK if cert is not None else EXIT_NEGATIVE


# -- argument handling --------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS
    parser.add_argument("--seed", type=int, default=default if suppress else 0)
    parser.add_argument("--tol", type=float, default=default if suppress else 1e-9,
                        help="absolute zero tolerance")
    parser.add_argument("--json-out", default=default if suppress else None, metavar="PATH")
    parser.add_argument("-v", "--verbose", action="store_true", default=default if suppress else False)


def _search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--r", type=int, default=None, help="columns of W (default: d..2d)")
    parser.add_argument("--restarts", type=int, default=32)
    parser.add_argument("--max-iters", type=int, default=2000)
    parser.add_argument("--accept-residual", type=float, default=1e-8)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onewaylocc", description=__doc__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a state-set JSON for a named family")
    gen.add_argument("family", choices=FAMILIES)
    gen.add_argument("--d", type=int, required=True)
    gen.add_argument("--n", type=int, default=None, help="member count for random-unitary")
    _global_flags(gen, suppress=True)

    ana = sub.add_parser("analyze", help="decide, certify and analyze a state set")
    ana.add_argument("stateset")
    ana.add_argument("--no-search", action="store_true", help="skip numeric certificate search")
    _search_flags(ana)
    _global_flags(ana, suppress=True)

    srch = sub.add_parser("search", help="search for a certificate")
    srch.add_argument("stateset")
    srch.add_argument("--no-structured", action="store_true")
    _search_flags(srch)
    _global_flags(srch, suppress=True)

    sim = sub.add_parser("simulate", help="Monte-Carlo run of the protocol from a certificate")
    sim.add_argument("file", help="state set JSON, certificate JSON (state set + W) or search result")
    sim.add_argument("--certificate", default=None, help="certificate or protocol JSON")
    sim.add_argument("--trials", type=int, default=100_000)
    _global_flags(sim, suppress=True)
    return parser


def _emit(obj: dict, path: str | None) -> None:
    text = jsonio.dumps(obj)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _search_config(args, tol: Tolerance) -> SearchConfig:
    return SearchConfig(r=args.r, restarts=args.restarts, max_iters=args.max_iters,
                        accept_residual=args.accept_residual, seed=args.seed, tol=tol)


def _run(args) -> int:
    tol = Tolerance(zero_abs=args.tol)
    if args.command == "gen":
        states = generate_family(args.family, args.d, args.seed, args.n)
        _emit(states.to_json(), args.json_out)
        return EXIT_OK

    if args.command == "analyze":
        states = StateSet.from_json(jsonio.load_file(args.stateset))
        report, code = analyze(states, tol, _search_config(args, tol), search=not args.no_search)
        _emit(report, args.json_out)
        return code

    if args.command == "search":
        states = StateSet.from_json(jsonio.load_file(args.stateset))
        try:
            result = search_certificate(states, _search_config(args, tol), structured=not args.no_structured)
        except ImpossibleByTraceTest as exc:
            _emit({"status": "ImpossibleByTraceTest", "message": str(exc)}, args.json_out)
            return EXIT_NEGATIVE
        out = result.to_json(states)
        if not result.found:
            out["note"] = "randomized search; NotFound does not prove that no certificate exists"
        _emit(out, args.json_out)
        return EXIT_OK if result.found else EXIT_NEGATIVE

    if args.command == "simulate":
        main_obj = jsonio.load_file(args.file)
        if isinstance(main_obj, dict) and "d" not in main_obj and isinstance(main_obj.get("certificate"), dict):
            main_obj = main_obj["certificate"]  # a search result embeds the state set
        states = StateSet.from_json(main_obj)
        extra = jsonio.load_file(args.certificate) if args.certificate else main_obj
        if "alice" in extra:
            proto = Protocol.from_json(extra)
        elif "W" in extra:
            proto = build_protocol(states, Certificate.from_json(extra), tol)
        elif "certificate" in extra and extra["certificate"]:
            proto = build_protocol(states, Certificate.from_json(extra["certificate"]), tol)
        else:
            raise jsonio.FormatError("simulate needs a certificate (W) or a protocol")
        report = simulate(states, proto, args.trials, args.seed)
        out = report.to_json()
        _emit(out, args.json_out)
        return EXIT_OK if exact_success(states, proto) >= 1 - 1e-8 else EXIT_NEGATIVE
    raise AssertionError(args.command)  # pragma: no cover


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (jsonio.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
