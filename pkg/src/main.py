import argparse
import json
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional

from src.certfmt import emit, parse
from src.config import load_settings
from src.console import print_banner, print_message, show_progress
from src.errors import (
    CertificateParseError,
    DomainError,
    GpiError,
    IndeterminateError,
    NotSosError,
    ResourceError,
)
from src.gapbuild import (
    GapInstance,
    GapPolynomial,
    build_conjecture_H,
    build_gap,
    build_gap_symbolic,
    build_instance,
    enumerate_cases,
    expand_chain,
    format_exponents,
    parse_exponents,
    screen_nonnegative,
    specialize_symbolic,
)
from src.moments import Construction, covariance, moment_by_coefficient, moment_by_wick
from src.soscert import CertifyOptions, StrictnessKind, StrictnessVerdict, certify, check_strictness, verify_certificate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REFUSED = 2
EXIT_INDETERMINATE = 3

FIXTURES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")

CERTIFIED_STRICT = "certified-strict"
CERTIFIED_NONNEG = "certified-nonneg"
REFUSED = "refused-not-SOS"
INDETERMINATE = "indeterminate"


class UsageError(GpiError):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class SubproblemReport:
    label: str
    exponents: str
    case_id: int
    reduction_k: Optional[int]
    depth: int
    strict_required: bool
    status: str = INDETERMINATE
    reason: str = ""
    basis_size: Optional[int] = None
    squares: Optional[int] = None
    strictness: Optional[str] = None
    certificate: Optional[str] = None

    @property
    def certified(self):
        return self.status in (CERTIFIED_STRICT, CERTIFIED_NONNEG)


@dataclass
class RunReport:
    """Outcome of one ``certify`` run; ``timings`` is outside the determinism contract."""

    target: str
    entries: List[SubproblemReport] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def verdict(self):
        if any(e.status == REFUSED for e in self.entries):
            return "refused: a subproblem has no SOS certificate"
        if not all(e.certified for e in self.entries):
            return "indeterminate: not every subproblem was certified"
        top = [e for e in self.entries if e.depth == 0 and e.strict_required]
        if all(e.status == CERTIFIED_STRICT for e in top):
            return "inequality certified, strict on every k = m_n subproblem"
        return "inequality certified"

    @property
    def exit_code(self):
        if any(e.status == REFUSED for e in self.entries):
            return EXIT_REFUSED
        if not all(e.certified for e in self.entries):
            return EXIT_INDETERMINATE
        return EXIT_OK

    def to_text(self):
        lines = [f"target: {self.target}", f"verdict: {self.verdict}", ""]
        for e in self.entries:
            line = f"{e.label} k={e.reduction_k} depth={e.depth}: {e.status}"
            if e.basis_size is not None:
                line += f", basis {e.basis_size}"
            if e.squares is not None:
                line += f", {e.squares} squares"
            if e.strictness:
                line += f", {e.strictness}"
            if e.certificate:
                line += f", {e.certificate}"
            if e.reason:
                line += f" ({e.reason})"
            lines.append(line)
        return "\n".join(lines) + "\n"

    def to_json(self):
        document = {
            "target": self.target,
            "verdict": self.verdict,
            "entries": [asdict(e) for e in self.entries],
            "timings": self.timings,
        }
        return json.dumps(document, indent=2, sort_keys=True) + "\n"

    def write(self, directory):
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, "report.txt"), "w", encoding="utf-8") as fh:
            fh.write(self.to_text())
        with open(os.path.join(directory, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def _construction(n, case):
    cases = enumerate_cases(n)
    if not 1 <= case <= len(cases):
        raise DomainError(f"n = {n} has cases 1..{len(cases)}, got {case}")
    return cases[case - 1]


def rebuild_target(metadata):
    """
    Rebuild the polynomial a certificate file claims to certify from its ``instance`` metadata.

    Returns:
    MultiPoly or None: None when the file carries no instance descriptor.
    """
    descriptor = metadata.get("instance")
    if not isinstance(descriptor, dict) or "exponents" not in descriptor:
        return None
    exponents, symbolic = parse_exponents(descriptor["exponents"])
    if descriptor.get("target", "F") == "H":
        return build_conjecture_H(len(exponents), exponents)
    construction = _construction(len(exponents), int(descriptor.get("case", "1")))
    if symbolic is not None:
        return build_gap_symbolic(exponents, construction).poly
    return build_gap(exponents, construction).poly


def certify_instance(instance, options, output_dir):
    """Certify one subproblem and write its certificate; runs in worker processes."""
    entry = SubproblemReport(
        label=instance.label,
        exponents=instance.exponent_text,
        case_id=instance.case_id,
        reduction_k=instance.reduction_k,
        depth=instance.depth,
        strict_required=instance.strict_required,
    )
    started = time.monotonic()
    try:
        gap = build_instance(instance)
        cert = certify(gap.poly, options)
        if instance.strict_required:
            verdict = check_strictness(cert, gap.poly, options)
        elif cert.constant_squares():
            verdict = StrictnessVerdict(StrictnessKind.CONSTANT_SQUARE)
        else:
            verdict = None
        name = instance.file_stem + ".gpicert"
        os.makedirs(output_dir, exist_ok=True)
        with open(os.path.join(output_dir, name), "wb") as fh:
            fh.write(emit(cert, gap, verdict))
        entry.status = CERTIFIED_STRICT if verdict is not None and verdict.is_strict else CERTIFIED_NONNEG
        entry.basis_size = len(cert.basis) if cert.basis is not None else None
        entry.squares = len(cert.terms)
        entry.strictness = verdict.describe() if verdict is not None else None
        entry.certificate = name
    except NotSosError as error:
        entry.status, entry.reason = REFUSED, str(error)
    except (IndeterminateError, ResourceError) as error:
        entry.status, entry.reason = INDETERMINATE, str(error)
    return entry, time.monotonic() - started


def cmd_build(args, settings):
    exponents, symbolic = parse_exponents(args.exponents)
    if args.symbolic != (symbolic is not None):
        raise DomainError("--symbolic goes together with an 'm' in the first exponent slot")
    construction = _construction(len(exponents), args.case)
    if symbolic is not None:
        gap = build_gap_symbolic(exponents, construction, case_id=args.case)
    else:
        gap = build_gap(exponents, construction, case_id=args.case)
    poly = gap.poly
    heading = f"{gap.instance.label}: {construction.describe()}"
    if args.at is not None:
        poly = specialize_symbolic(gap, args.at)
        heading += f", m = {args.at}"
    elif gap.normalization != "1":
        heading += f", divided by {gap.normalization} with m = p^2+1"
    text = poly.to_string()
    if not args.quiet:
        print_message(heading, "cyan")
    print(text)
    negative = screen_nonnegative(poly, samples=200)
    if negative is not None:
        print_message(f"negative value at {negative}", "red")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def _certify_options(args, settings):
    bounds = settings.denominator_bounds
    if args.max_denominator is not None:
        bounds = tuple(b for b in bounds if b <= args.max_denominator) or (args.max_denominator,)
    return CertifyOptions.from_settings(settings, denominator_bounds=bounds, verbose=args.verbose)


def cmd_certify(args, settings):
    exponents, symbolic = parse_exponents(args.exponents)
    if args.symbolic != (symbolic is not None):
        raise DomainError("--symbolic goes together with an 'm' in the first exponent slot")
    options = _certify_options(args, settings)
    work = expand_chain(exponents, symbolic)
    report = RunReport(target=f"F[{format_exponents(exponents, symbolic)}]")
    report.entries = [None] * len(work)
    started = time.monotonic()
    try:
        if settings.workers > 1:
            with ProcessPoolExecutor(max_workers=settings.workers) as pool:
                futures = {pool.submit(certify_instance, inst, options, settings.output_dir): i
                           for i, inst in enumerate(work)}
                try:
                    for future in show_progress(as_completed(futures), "Certifying subproblems",
                                                total=len(work), disable=args.quiet):
                        _record(report, futures[future], future.result(), work, args.quiet)
                except KeyboardInterrupt:
                    # pending subproblems are dropped, running ones finish before the pool exits
                    pool.shutdown(wait=False, cancel_futures=True)
                    raise
        else:
            for index in show_progress(range(len(work)), "Certifying subproblems", disable=args.quiet):
                _record(report, index, certify_instance(work[index], options, settings.output_dir),
                        work, args.quiet)
    except KeyboardInterrupt:
        print_message("interrupted; writing partial report", "yellow")
    for index, entry in enumerate(report.entries):
        if entry is None:
            inst = work[index]
            report.entries[index] = SubproblemReport(
                label=inst.label, exponents=inst.exponent_text, case_id=inst.case_id,
                reduction_k=inst.reduction_k, depth=inst.depth, strict_required=inst.strict_required,
                status=INDETERMINATE, reason="interrupted")
    report.timings["total"] = round(time.monotonic() - started, 3)
    report.write(settings.output_dir)
    color = {EXIT_OK: "green", EXIT_REFUSED: "red"}.get(report.exit_code, "yellow")
    print_message(f"{report.target}: {report.verdict}", color)
    return report.exit_code


def _record(report, index, outcome, work, quiet):
    entry, elapsed = outcome
    report.entries[index] = entry
    report.timings[work[index].file_stem] = round(elapsed, 3)
    if not quiet:
        color = "green" if entry.certified else ("red" if entry.status == REFUSED else "yellow")
        print_message(f"{entry.label} k={entry.reduction_k}: {entry.status}", color)


def _certificate_paths(paths):
    found = []
    for path in paths:
        if os.path.isdir(path):
            found.extend(os.path.join(path, name) for name in sorted(os.listdir(path))
                         if name.endswith(".gpicert"))
        else:
            found.append(path)
    return found


def cmd_verify(args, settings):
    paths = list(args.paths)
    lenient = args.lenient
    if args.published:
        paths.append(FIXTURES_DIR)
        lenient = True
    paths = _certificate_paths(paths)
    if not paths:
        raise UsageError("no certificate files given")
    options = CertifyOptions.from_settings(settings)
    worst = EXIT_OK
    for path in paths:
        name = os.path.relpath(path)
        try:
            with open(path, "rb") as fh:
                data = fh.read()
            cert, target = parse(data, strict=not lenient)
        except (OSError, CertificateParseError) as error:
            print_message(f"FAIL {name}: {error}", "red")
            worst = max(worst, EXIT_USAGE)
            continue
        metadata = json.loads(data.decode("utf-8")).get("metadata", {})
        rebuilt = rebuild_target(metadata)
        if rebuilt is not None and rebuilt != target:
            print_message(f"FAIL {name}: target differs from the rebuilt polynomial", "red")
            worst = EXIT_REFUSED
            continue
        check = verify_certificate(cert, target)
        if not check and metadata.get("erratum"):
            # documented misprint in the source; the target itself was checked above
            print_message(f"KNOWN-ERRATUM {name}: {check.reason}", "yellow")
            continue
        if not check:
            print_message(f"FAIL {name}: {check.reason}", "red")
            worst = EXIT_REFUSED
            continue
        verdict = check_strictness(cert, target, options)
        print_message(f"PASS {name}: {len(cert.terms)} squares, {verdict.describe()}", "green")
    return worst


def random_instance(rng, max_total):
    """A random exponent vector and construction mixing named cells with rational constants."""
    n = rng.randint(1, min(4, max_total))
    exponents = [1] * n
    for _ in range(rng.randint(0, max_total - n)):
        exponents[rng.randrange(n)] += 1
    rows = []
    for k in range(n):
        row = []
        for j in range(n):
            if j > k:
                row.append(Fraction(0))
            elif j == k:
                row.append(Fraction(rng.choice([1, 2, 3]), rng.choice([1, 2])))
            elif rng.random() < 0.5:
                row.append(f"x{k + 1}{j + 1}")
            else:
                row.append(Fraction(rng.randint(-5, 5), rng.randint(1, 4)))
        rows.append(tuple(row))
    return tuple(exponents), Construction(tuple(rows))


def oracle_report(seed, count, max_total, budget, quiet=True):
    """
    Compare coefficient extraction with pairing enumeration on seeded random instances.

    Returns:
    tuple: (report text, number of mismatches).
    """
    rng = random.Random(seed)
    lines = [f"oracle seed={seed} count={count} max_total={max_total} budget={budget}"]
    mismatches = skipped = 0
    for index in show_progress(range(count), "Oracle instances", disable=quiet):
        exponents, construction = random_instance(rng, max_total)
        head = f"{index:4d} m={','.join(map(str, exponents))} {construction.describe()}"
        try:
            wick = moment_by_wick(construction, exponents, budget)
        except ResourceError as error:
            skipped += 1
            lines.append(f"{head}: skipped ({error})")
            continue
        direct = moment_by_coefficient(covariance(construction), exponents)
        if direct == wick:
            lines.append(f"{head}: ok")
        else:
            mismatches += 1
            lines.append(f"{head}: MISMATCH")
    lines.append(f"{count} instances, {mismatches} mismatches, {skipped} skipped")
    return "\n".join(lines) + "\n", mismatches


def cmd_oracle(args, settings):
    budget = args.budget if args.budget is not None else settings.pairing_budget
    text, mismatches = oracle_report(args.seed, args.count, args.max_total, budget, args.quiet)
    os.makedirs(settings.output_dir, exist_ok=True)
    with open(os.path.join(settings.output_dir, "oracle_report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    summary = text.rstrip("\n").rsplit("\n", 1)[-1]
    print_message(summary, "green" if not mismatches else "red")
    return EXIT_OK if not mismatches else EXIT_USAGE


def cmd_conjecture(args, settings):
    exponents, symbolic = parse_exponents(args.m)
    if symbolic is not None:
        raise DomainError("the conjecture polynomial needs concrete exponents")
    H = build_conjecture_H(args.n, exponents)
    label = f"H[{format_exponents(exponents)}]"
    at_origin = H.evaluate({v: 0 for v in H.ring})
    print_message(f"{label}: {len(H)} terms, degree {H.degree()}, H(0) = {at_origin}",
                  "green" if at_origin == 0 else "red")
    negative = screen_nonnegative(H, samples=500)
    if negative is not None:
        print_message(f"{label} is negative at {negative}", "red")
    options = _certify_options(args, settings)
    try:
        cert = certify(H, options)
    except NotSosError as error:
        print_message(f"{label} REFUSED: {error}. This is evidence against the conjecture.", "red")
        return EXIT_REFUSED
    except IndeterminateError as error:
        print_message(f"{label}: indeterminate ({error})", "yellow")
        return EXIT_INDETERMINATE
    instance = GapInstance(exponents=exponents, construction=Construction.lower_triangular(args.n))
    gap = GapPolynomial(instance=instance, poly=H, kind="H")
    verdict = check_strictness(cert, H, options)
    os.makedirs(settings.output_dir, exist_ok=True)
    path = os.path.join(settings.output_dir, "H_" + "_".join(map(str, exponents)) + ".gpicert")
    with open(path, "wb") as fh:
        fh.write(emit(cert, gap, verdict))
    print_message(f"{label}: {len(cert.terms)} squares, {verdict.describe()}, written to {path}", "green")
    return EXIT_OK


def _add_budget_flags(sub):
    sub.add_argument('--max-denominator', type=int, help='Largest denominator tried when rounding')
    sub.add_argument('--max-basis', type=int, help='Largest Gram basis handed to the SDP solver')
    sub.add_argument('--full-basis', action='store_true', help='Skip the Newton polytope filter')
    sub.add_argument('--time-budget', type=float, help='Seconds per subproblem')
    sub.add_argument('--verbose', action='store_true', help='Print solver stage notes')


def _common_flags(default):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--quiet', action='store_true', default=default if default is not None else False,
                        help='No banner, progress bars or per-stage notes')
    common.add_argument('--output-dir', default=default, help='Directory for certificates and reports')
    common.add_argument('--workers', type=int, default=default, help='Worker processes for certify')
    return common


def build_parser():
    # the shared flags work before or after the subcommand
    shared = _common_flags(argparse.SUPPRESS)
    parser = _Parser(prog='gpicert', description='Exact SOS certificates for the Gaussian product inequality.',
                     parents=[_common_flags(None)])
    commands = parser.add_subparsers(dest='command', required=True)

    build = commands.add_parser('build', parents=[shared], help='Print a gap polynomial')
    build.add_argument('--exponents', required=True, help='Exponents such as 4,3,2 or m,1,1,1')
    build.add_argument('--case', type=int, default=1, help='Construction case (1 is full rank)')
    build.add_argument('--symbolic', action='store_true', help='First exponent is the symbol m')
    build.add_argument('--at', type=int, help='Specialize a symbolic gap polynomial at m')
    build.add_argument('--output', help='Also write the polynomial to this file')

    cert = commands.add_parser('certify', parents=[shared], help='Certify every subproblem of an inequality')
    cert.add_argument('--exponents', required=True, help='Exponents such as 4,3,2 or m,3,2')
    cert.add_argument('--symbolic', action='store_true', help='First exponent is the symbol m')
    _add_budget_flags(cert)

    verify = commands.add_parser('verify', parents=[shared], help='Verify certificate files')
    verify.add_argument('paths', nargs='*', help='Certificate files or directories')
    verify.add_argument('--published', '--paper-fixtures', action='store_true',
                        help='Verify the transcribed published certificates')
    verify.add_argument('--lenient', action='store_true', help='Accept non-canonical spelling and ordering')

    oracle = commands.add_parser('oracle', parents=[shared], help='Cross-check the two moment computations')
    oracle.add_argument('--seed', type=int, default=0)
    oracle.add_argument('--count', type=int, default=200)
    oracle.add_argument('--max-total', type=int, default=6, help='Largest sum of exponents')
    oracle.add_argument('--budget', type=int, help='Pairing budget in Gaussian factors')

    conjecture = commands.add_parser('conjecture', parents=[shared], help='Build and try to certify the H polynomial')
    conjecture.add_argument('--n', type=int, required=True)
    conjecture.add_argument('--m', required=True, help='Exponents such as 1,1,1')
    _add_budget_flags(conjecture)
    return parser


COMMANDS = {
    'build': cmd_build,
    'certify': cmd_certify,
    'verify': cmd_verify,
    'oracle': cmd_oracle,
    'conjecture': cmd_conjecture,
}


def main(argv=None, environ=None):
    """
    The main function to execute the script.

    Returns:
    int: 0 success, 1 usage or internal error, 2 refusal, 3 indeterminate.
    """
    try:
        args = build_parser().parse_args(argv)
        settings = load_settings(environ).with_overrides(
            output_dir=args.output_dir,
            workers=args.workers,
            time_budget=getattr(args, 'time_budget', None),
            max_gram_size=getattr(args, 'max_basis', None),
        )
        if getattr(args, 'full_basis', False):
            settings = replace(settings, newton_polytope=False)
        if not args.quiet:
            print_banner("Gaussian product inequality certificates")
        return COMMANDS[args.command](args, settings)
    except NotSosError as error:
        print_message(f"refused: {error}", "red")
        return EXIT_REFUSED
    except IndeterminateError as error:
        print_message(f"indeterminate: {error}", "yellow")
        return EXIT_INDETERMINATE
    except GpiError as error:
        print_message(f"error: {error}", "red")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
