"""
Convolution Lab command-line front end.

Subcommands: eta, kloosterman, poincare, lvalues, congruence, density and
reproduce-paper. Results go to standard output (or --output), diagnostics and
logs to standard error.
"""

import argparse
import json
import logging
import math
import sys
import time
import uuid
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from app import reference
from app.config import VALID_FORMATS, VALID_LOG_LEVELS, RunConfig, config
from app.exceptions import (
    AcceptanceCheckException,
    ConvolutionLabException,
    InvalidInputException,
)
from app.modules.kloosterman import KloostermanQuery, kloosterman_sum, vanishing_scan
from app.modules.modularforms import EtaQuotient, eta_quotient_expand, weakform_m9
from app.modules.padic import (
    DEFAULT_T_VALUES,
    DEFAULT_X_VALUES,
    congruence_families_check,
    d_power_congruence_check,
    density_frame,
    density_mismatches,
    density_table,
    scan_congruence_families,
    unit_congruence_check,
)
from app.modules.poincare import (
    HarmonicParams,
    beta_constant,
    classical_coeffs,
    maass_const_term,
    maass_hol_coeffs,
)
from app.modules.progress_tracker import ProgressTracker
from app.modules.shiftedconv import (
    assemble,
    fit_gamma_delta,
    lvalues_frame,
    mock_modular_form,
    rational_part,
)
from app.serialization import convert_to_serializable, encode_float
from app.validators import parse_eta_spec, parse_int_list

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ACCEPTANCE = 2

EXACT_WINDOW = 2000
D_POWER_WINDOW = 500


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting, so usage errors map to exit 1."""

    def error(self, message):
        raise InvalidInputException(message, {"usage": self.format_usage().strip()})


@dataclass
class CommandResult:
    payload: Dict
    frame: Optional[pd.DataFrame] = None
    text: Optional[str] = None


def _parse_anchors(text: str) -> List[Tuple[int, float]]:
    anchors = []
    for part in text.split(","):
        try:
            h, value = part.split(":")
            anchors.append((int(h), float(value)))
        except ValueError:
            raise InvalidInputException(
                f"Invalid anchor: {part!r}. Use h:value", {"anchors": text}
            )
    return anchors


def _parse_alpha(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InvalidInputException(f"Invalid rational alpha: {text!r}", {"alpha": text})


def _default_anchors() -> str:
    return ",".join(f"{h}:{reference.DHAT[h]}" for h in reference.ANCHORS)


def build_parser() -> argparse.ArgumentParser:
    common = CliArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file with run settings")
    common.add_argument("--output", dest="output_path", help="write the result to this file")
    common.add_argument("--format", choices=VALID_FORMATS)
    common.add_argument("--window", type=int)
    common.add_argument("--c-max", dest="c_max", type=int)
    common.add_argument("--precision-bits", dest="precision_bits", type=int)
    common.add_argument("--modulus-t", dest="modulus_t", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--log-level", choices=VALID_LOG_LEVELS)

    parser = CliArgumentParser(prog="convlab", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)

    eta = sub.add_parser("eta", parents=[common], help="expand an eta quotient")
    eta.add_argument("--spec", default="3:8", help='scale:exponent pairs, e.g. "1:3,9:-3"')

    kl = sub.add_parser("kloosterman", parents=[common], help="Kloosterman sums")
    kl.add_argument("--m", type=int, default=1)
    kl.add_argument("--n", type=int)
    kl.add_argument("--c", type=int)
    kl.add_argument("--p", type=int, default=3)
    kl.add_argument("--n-max", dest="n_max", type=int, default=20)
    kl.add_argument("--scan-c-max", dest="scan_c_max", type=int, default=20)
    kl.add_argument("--tol", type=float, default=1e-20)

    pc = sub.add_parser("poincare", parents=[common], help="Poincare series coefficients")
    pc.add_argument("--m", type=int, default=1)
    pc.add_argument("--k", type=int, default=4)
    pc.add_argument("--N", type=int, default=9)
    pc.add_argument("--n", default="1", help="comma-separated exponents")
    pc.add_argument("--kind", choices=["classical", "maass", "constant"], default="classical")
    pc.add_argument("--normalize", action="store_true", help="divide Maass coefficients by Gamma(k)")

    lv = sub.add_parser("lvalues", parents=[common], help="shifted convolution values")
    lv.add_argument("--h", default="3,6,9,12,15")
    lv.add_argument("--beta", type=float)
    lv.add_argument("--anchors", default=_default_anchors())
    lv.add_argument("--oracle-x", dest="oracle_x", type=int)
    lv.add_argument("--depth", type=int, default=3)
    lv.add_argument("--full", action="store_true", help="include the assembled series in JSON")

    cg = sub.add_parser("congruence", parents=[common], help="3-adic congruence checks")
    cg.add_argument(
        "--statement", choices=["unit", "families", "d-power", "scan", "all"], default="all"
    )
    cg.add_argument("--p", type=int, default=3)
    cg.add_argument("--t", type=int, default=1)
    cg.add_argument("--r", type=int)
    cg.add_argument("--alpha", default="0", help="rational alpha of the normalized mock form")
    cg.add_argument("--max-modulus", dest="max_modulus", type=int, default=36)

    dn = sub.add_parser("density", parents=[common], help="pi(3^t; X) table")
    dn.add_argument("--X", default=",".join(str(x) for x in DEFAULT_X_VALUES))
    dn.add_argument("--t", default=",".join(str(t) for t in DEFAULT_T_VALUES))

    rp = sub.add_parser("reproduce-paper", parents=[common], help="run every published check")
    rp.add_argument("--exact-window", dest="exact_window", type=int, default=EXACT_WINDOW)
    rp.add_argument("--oracle-x", dest="oracle_x", type=int)

    return parser


# Subcommands


def cmd_eta(run: RunConfig, args) -> CommandResult:
    spec = EtaQuotient.from_factors(parse_eta_spec(args.spec))
    series = eta_quotient_expand(spec, run.window)
    frame = pd.DataFrame(
        {"n": [n for n, _ in series.items()], "coefficient": [str(c) for _, c in series.items()]}
    )
    return CommandResult({"spec": str(spec), "series": series.to_dict()}, frame)


def cmd_kloosterman(run: RunConfig, args) -> CommandResult:
    if args.n is not None and args.c is not None:
        value = kloosterman_sum(KloostermanQuery(args.m, args.n, args.c), run.precision_bits)
        payload = {
            "m": args.m,
            "n": args.n,
            "c": args.c,
            "value": float(value.value),
            "error_bound": float(value.error_bound),
        }
        return CommandResult(payload, pd.DataFrame([payload]))

    report = vanishing_scan(args.p, args.m, args.n_max, args.scan_c_max, run.precision_bits, args.tol)
    if not report["pass"]:
        raise AcceptanceCheckException(["kloosterman_vanishing"])
    return CommandResult(report, pd.DataFrame([report]))


def cmd_poincare(run: RunConfig, args) -> CommandResult:
    params = HarmonicParams(args.m, args.k, args.N)
    if args.kind == "constant":
        coefficients = [maass_const_term(params, run.c_max, run.workers)]
    else:
        ns = parse_int_list(args.n, "n")
        compute = classical_coeffs if args.kind == "classical" else maass_hol_coeffs
        coefficients = list(compute(params, ns, run.c_max, run.workers).values())
        if args.kind == "maass" and args.normalize:
            coefficients = [c.normalized(math.factorial(params.k - 1)) for c in coefficients]

    rows = [{"m": params.m, "k": params.k, "N": params.N, **c.to_dict()} for c in coefficients]
    return CommandResult({"kind": args.kind, "coefficients": rows}, pd.DataFrame(rows))


def _beta(run: RunConfig, given: Optional[float]) -> float:
    if given is not None:
        return given
    return float(beta_constant(run.c_max, run.workers).value)


def cmd_lvalues(run: RunConfig, args) -> CommandResult:
    hs = parse_int_list(args.h, "h")
    window = max(run.window, max(hs) + 1)
    beta = _beta(run, args.beta)
    rational = rational_part(window)
    gamma, delta = fit_gamma_delta(beta, _parse_anchors(args.anchors), window, rational=rational)
    assembly = assemble(beta, gamma, delta, window, rational=rational)
    frame = lvalues_frame(assembly, hs, args.oracle_x, args.depth)

    payload = {
        "beta": beta,
        "gamma": gamma,
        "delta": delta,
        "values": frame.to_dict(orient="records"),
    }
    if args.full:
        payload["assembly"] = assembly.to_dict()
    return CommandResult(payload, frame)


def cmd_congruence(run: RunConfig, args) -> CommandResult:
    statements = ["unit", "families", "d-power"] if args.statement == "all" else [args.statement]
    window = run.window
    product = rational_part(window)[2] if {"unit", "families", "scan"} & set(statements) else None

    reports = []
    payload: Dict = {}
    if "unit" in statements:
        reports.append(unit_congruence_check(window, product))
    if "families" in statements:
        reports.extend(congruence_families_check(window, product))
    if "d-power" in statements:
        reports.append(
            d_power_congruence_check(args.p, args.t, min(window, D_POWER_WINDOW), args.r, _parse_alpha(args.alpha))
        )
    if "scan" in statements:
        payload["families"] = scan_congruence_families(args.t, args.max_modulus, window, product)

    payload["reports"] = [r.to_dict() for r in reports]
    failed = [r.statement_id.value for r in reports if not r.passed]
    if failed:
        raise AcceptanceCheckException(failed)
    frame = pd.DataFrame(
        [{"statement": r.statement_id.value, "p": r.p, "pass": r.passed} for r in reports]
    )
    return CommandResult(payload, frame)


def cmd_density(run: RunConfig, args) -> CommandResult:
    rows = density_table(parse_int_list(args.t, "t"), parse_int_list(args.X, "X"), run.modulus_T)
    payload = {
        "T": run.modulus_T,
        "rows": [
            {"t": r.t, "X": r.X, "count": r.count, "proportion": r.proportion, "value": float(r.proportion)}
            for r in rows
        ],
    }
    return CommandResult(payload, density_frame(rows).reset_index())


# reproduce-paper


class ReproducePipeline:
    """Runs every published check in order, recording each as a progress stage."""

    def __init__(self, run: RunConfig, exact_window: int, oracle_x: Optional[int] = None):
        self.run = run
        self.exact_window = exact_window
        self.oracle_x = oracle_x
        self.checks: Dict[str, bool] = {}
        self.lvalues: Optional[pd.DataFrame] = None
        self.density: Optional[pd.DataFrame] = None
        self.beta: Optional[float] = None
        self._product = None

    def stages(self) -> List[Tuple[str, Callable[[], bool]]]:
        return [
            ("m_expansion", self.check_m_expansion),
            ("L_f_expansion", self.check_mock_form),
            ("kloosterman_vanishing", self.check_vanishing),
            ("beta", self.check_beta),
            ("maass_coefficients", self.check_maass),
            ("lvalues", self.check_lvalues),
            ("unit_congruence", self.check_unit),
            ("congruence_families", self.check_families),
            ("d_power", self.check_d_power),
            ("density", self.check_density),
        ]

    def product(self):
        if self._product is None:
            self._product = rational_part(self.exact_window)
        return self._product

    def check_m_expansion(self) -> bool:
        m = weakform_m9(100)
        return [m[n] for n in (-1, 2, 5, 8)] == [1, 2, -49, 48]

    def check_mock_form(self) -> bool:
        L_f = mock_modular_form(100)
        expected = [Fraction(1), Fraction(-1, 4), Fraction(49, 125), Fraction(-3, 32)]
        return [L_f[n] for n in (-1, 2, 5, 8)] == expected

    def check_vanishing(self) -> bool:
        return vanishing_scan(3, 1, 20, 20, max(self.run.precision_bits, 128))["pass"]

    def check_beta(self) -> bool:
        self.beta = float(beta_constant(self.run.c_max, self.run.workers).value)
        return abs(self.beta - reference.BETA) <= reference.BETA_TOLERANCE

    def check_maass(self) -> bool:
        params = HarmonicParams(1, 4, 9)
        coefficients = maass_hol_coeffs(params, list(reference.MAASS_NORMALIZED), self.run.c_max, self.run.workers)
        return all(
            abs(coefficients[n].normalized(math.factorial(params.k - 1)).value - expected)
            <= reference.MAASS_TOLERANCE
            for n, expected in reference.MAASS_NORMALIZED.items()
        )

    def check_lvalues(self) -> bool:
        beta = self.beta if self.beta is not None else reference.BETA
        rational = self.product()
        anchors = [(h, reference.DHAT[h]) for h in reference.ANCHORS]
        gamma, delta = fit_gamma_delta(beta, anchors, self.exact_window, rational=rational)
        assembly = assemble(beta, gamma, delta, self.exact_window, rational=rational)
        frame = lvalues_frame(assembly, sorted(reference.DHAT), self.oracle_x)
        frame["published"] = [reference.DHAT[h] for h in frame["h"]]
        self.lvalues = frame
        predicted = frame[~frame["h"].isin(reference.ANCHORS)]
        return bool(((predicted["dhat_closed"] - predicted["published"]).abs() <= reference.DHAT_TOLERANCE).all())

    def check_unit(self) -> bool:
        return unit_congruence_check(self.exact_window, self.product()[2]).passed

    def check_families(self) -> bool:
        return all(r.passed for r in congruence_families_check(self.exact_window, self.product()[2]))

    def check_d_power(self) -> bool:
        return all(
            d_power_congruence_check(3, t, D_POWER_WINDOW, r).passed for t, r in ((1, 2), (2, 1))
        )

    def check_density(self) -> bool:
        X_values = [X for X in reference.DENSITY if X + 2 <= max(self.run.window, 2)]
        if not X_values:
            logger.warning(f"Window {self.run.window} is too small for any density row")
            return False
        rows = density_table(DEFAULT_T_VALUES, X_values, self.run.modulus_T)
        self.density = density_frame(rows)
        mismatches = density_mismatches(rows, reference.DENSITY, reference.DENSITY_TOLERANCE)
        for X, t, observed, published in mismatches:
            logger.warning(f"Density pi(3^{t}; {X}) = {observed:.6f}, published {published:.3f}")
        return not mismatches

    def execute(self, tracker: Optional[ProgressTracker] = None) -> Dict[str, bool]:
        task_id = f"reproduce-{uuid.uuid4().hex[:8]}"
        stages = self.stages()
        if tracker:
            tracker.create_task(task_id, total=len(stages))
        try:
            for index, (name, check) in enumerate(stages):
                if tracker:
                    tracker.update_progress(task_id, index, len(stages), f"running {name}")
                started = time.perf_counter()
                passed = bool(check())
                self.checks[name] = passed
                elapsed = time.perf_counter() - started
                logger.info(f"Check {name}: {'pass' if passed else 'FAIL'} ({elapsed:.1f}s)")
                if tracker:
                    tracker.record_stage(task_id, name, passed, elapsed)
        except ConvolutionLabException as e:
            if tracker:
                tracker.fail_task(task_id, e.message)
            raise
        if tracker:
            tracker.complete_task(task_id)
        return self.checks


def cmd_reproduce(run: RunConfig, args) -> CommandResult:
    smallest = min(reference.DENSITY) + 2
    if run.window < smallest:
        raise InvalidInputException(
            f"reproduce-paper needs --window >= {smallest} for the density table",
            {"window": run.window, "minimum": smallest},
        )
    pipeline = ReproducePipeline(run, args.exact_window, args.oracle_x)
    config.ensure_directories()
    checks = pipeline.execute(ProgressTracker(config.PROGRESS_PATH))
    failed = [name for name, passed in checks.items() if not passed]
    summary = "ALL CHECKS PASS" if not failed else f"FAILED: {', '.join(failed)}"

    lvalues = pipeline.lvalues if pipeline.lvalues is not None else pd.DataFrame()
    density = pipeline.density.reset_index() if pipeline.density is not None else pd.DataFrame()
    payload = {
        "lvalues": lvalues.to_dict(orient="records"),
        "density": density.to_dict(orient="records"),
        "checks": checks,
        "summary": summary,
    }
    text = "\n".join(
        [_csv(lvalues), _csv(density), summary, ""]
    )
    if failed:
        _emit(run, CommandResult(payload, text=text))
        raise AcceptanceCheckException(failed)
    return CommandResult(payload, text=text)


COMMANDS = {
    "eta": cmd_eta,
    "kloosterman": cmd_kloosterman,
    "poincare": cmd_poincare,
    "lvalues": cmd_lvalues,
    "congruence": cmd_congruence,
    "density": cmd_density,
    "reproduce-paper": cmd_reproduce,
}


def _csv(frame: pd.DataFrame) -> str:
    """Float cells become the rounded decimals of encode_float; missing values stay empty."""
    out = frame.copy()
    for column in out.select_dtypes(include="floating").columns:
        out[column] = ["" if pd.isna(v) else encode_float(v)["decimal"] for v in out[column]]
    return out.to_csv(index=False)


def _render(run: RunConfig, result: CommandResult) -> str:
    if run.format == "csv":
        if result.text is not None:
            return result.text
        if result.frame is not None:
            return _csv(result.frame)
    return json.dumps(convert_to_serializable(result.payload), indent=2, sort_keys=True) + "\n"


def _emit(run: RunConfig, result: CommandResult) -> None:
    rendered = _render(run, result)
    if run.output_path:
        with open(run.output_path, "w") as f:
            f.write(rendered)
        logger.info(f"Wrote {run.command} result to {run.output_path}")
    else:
        sys.stdout.write(rendered)


def _report_error(e: ConvolutionLabException) -> None:
    sys.stderr.write(json.dumps(convert_to_serializable(e.to_dict()), sort_keys=True) + "\n")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Execute one subcommand.

    Returns:
        0 on success, 1 on invalid input or configuration (or any other domain
        error), 2 when an acceptance check fails
    """
    try:
        args = build_parser().parse_args(argv)
        if args.log_level:
            logging.getLogger().setLevel(args.log_level)
        flags = {
            key: getattr(args, key)
            for key in ("window", "c_max", "precision_bits", "modulus_t", "output_path", "format", "workers")
        }
        run_config = RunConfig.from_sources(args.command, flags, args.config)
        logger.debug(f"Run configuration: {run_config.as_dict()}")
        _emit(run_config, COMMANDS[args.command](run_config, args))
        return EXIT_OK
    except AcceptanceCheckException as e:
        _report_error(e)
        return EXIT_ACCEPTANCE
    except ConvolutionLabException as e:
        _report_error(e)
        return EXIT_ERROR


def configure_logging() -> None:
    """Log to standard error; standard output carries only results."""
    logging.basicConfig(stream=sys.stderr, **config.get_log_config())


def main() -> None:
    configure_logging()
    sys.exit(run())
