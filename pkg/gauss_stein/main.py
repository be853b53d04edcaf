"""gauss-stein command line.

Exit codes:
  0  success
  2  invalid input (flags, state files, settings, physically invalid states)
  3  support/domain failure (sigma not full rank, pure-state domain, numerical failure)
  4  formula vs oracle tolerance breach
  5  oracle unreliable (cutoff too small, not converged, rank deficiency)
"""
import argparse
import io
import json
import logging
import sys
from typing import List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, ValidationError

from .divergence import divergence_report
from .errors import GaussSteinError, InvalidArgumentError, StateValidationError
from .illumination import TRANSMITTERS, comparison_sweep, illumination_params
from .models import AppSettings, StateDocument
from .scenario_manager import ScenarioLibrary, oracle_check
from .settings import get_settings, with_overrides
from .states import GaussianState, load_state, validate
from .stein import CSV_NOTE, curve_frame, exponent_curve, log_trial_grid

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    command: str
    inputs: List[str] = []
    out: Optional[str] = None
    tolerance_overrides: dict = {}

    @property
    def output_format(self) -> str:
        if self.out is None:
            return "csv" if self.command in ("illumination", "exponent") else "json"
        if self.out.endswith(".csv"):
            return "csv"
        if self.out.endswith(".json"):
            return "json"
        raise InvalidArgumentError(f"cannot infer output format from '{self.out}' (use .csv or .json)")


# --- Output ---
def _frame_to_csv(frame: pd.DataFrame, digits: int) -> str:
    buf = io.StringIO()
    buf.write(CSV_NOTE + "\n")
    frame.to_csv(buf, index=False, float_format=f"%.{digits}g", lineterminator="\n")
    return buf.getvalue()


def _emit(payload, config: RunConfig, settings: AppSettings):
    fmt = config.output_format
    if isinstance(payload, pd.DataFrame):
        text = (
            _frame_to_csv(payload, settings.output.significant_digits)
            if fmt == "csv"
            else payload.to_json(orient="records", indent=2, double_precision=15) + "\n"
        )
    else:
        if fmt == "csv":
            raise InvalidArgumentError(f"'{config.command}' produces a JSON report, not CSV")
        data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
        text = json.dumps(data, indent=2) + "\n"

    if config.out is None:
        sys.stdout.write(text)
    else:
        with open(config.out, "w", newline="") as f:
            f.write(text)
        logger.info("  -> wrote %s", config.out)


def _parse_overrides(pairs: Sequence[str]) -> dict:
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise InvalidArgumentError(f"--tol expects KEY=VALUE, got '{pair}'")
        try:
            overrides[key.strip()] = float(value)
        except ValueError:
            raise InvalidArgumentError(f"--tol {key}: '{value}' is not a number")
    return overrides


# --- Commands ---
def cmd_divergence(args, config: RunConfig, settings: AppSettings) -> int:
    rho = load_state(args.state_a, settings.numerics)
    sigma = load_state(args.state_b, settings.numerics)
    logger.info("--- Divergence %s || %s ---", args.state_a, args.state_b)
    _emit(divergence_report(rho, sigma, settings.numerics), config, settings)
    return 0


def cmd_validate(args, config: RunConfig, settings: AppSettings) -> int:
    try:
        state = load_state(args.state, settings.numerics)
    except StateValidationError as e:
        # well-formed but unphysical files still get a report
        state = _load_unvalidated(args.state, e)
    report = validate(state, settings=settings.numerics)
    _emit(report, config, settings)
    return 0 if report.passed else 2


def _load_unvalidated(path: str, original: StateValidationError) -> GaussianState:
    try:
        with open(path, "r") as f:
            doc = StateDocument.model_validate_json(f.read())
        return GaussianState.from_moments(doc.mean, doc.cov)
    except (OSError, ValueError):
        raise original


def cmd_illumination(args, config: RunConfig, settings: AppSettings) -> int:
    p = illumination_params(args.ns, args.nb, args.eta, args.epsilon)
    transmitters = TRANSMITTERS if args.transmitter == "both" else (args.transmitter,)
    grid = log_trial_grid(args.m_max, args.m_points)
    logger.info("--- Illumination sweep %s over %d trial counts ---", "/".join(transmitters), len(grid))
    frame = comparison_sweep(p, grid, transmitters, settings.illumination.workers, settings.numerics)
    _emit(frame, config, settings)
    return 0


def cmd_exponent(args, config: RunConfig, settings: AppSettings) -> int:
    grid = log_trial_grid(args.m_max, args.m_points)
    points = exponent_curve(args.d, args.v, args.epsilon, grid, settings.numerics)
    _emit(curve_frame(args.d, args.v, points), config, settings)
    return 0


def cmd_oracle_check(args, config: RunConfig, settings: AppSettings) -> int:
    report = oracle_check(args.scenario, args.cutoff, settings.numerics, settings.oracle,
                          raise_on_breach=False)
    _emit(report, config, settings)
    if not report.passed:
        logger.error("oracle check '%s' breached tolerance: dD=%.3e dV=%.3e",
                     args.scenario, abs(report.formula_d - report.oracle_d),
                     abs(report.formula_v - report.oracle_v))
        return 4
    return 0


HANDLERS = {
    "divergence": cmd_divergence,
    "illumination": cmd_illumination,
    "exponent": cmd_exponent,
    "oracle-check": cmd_oracle_check,
    "validate": cmd_validate,
}


def build_parser(settings: AppSettings) -> argparse.ArgumentParser:
    ill = settings.illumination
    parser = argparse.ArgumentParser(
        prog="gauss-stein",
        description="Relative entropy, relative entropy variance and second-order Stein exponents "
                    "for Gaussian states (xxpp ordering, vacuum variance 1/2).",
        epilog=__doc__.split("\n", 2)[2],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr.")
    parser.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a numerics tolerance (repeatable), e.g. --tol pure_tol=1e-9.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("divergence", help="D and V between two state files.")
    p.add_argument("state_a", help="Null state rho (JSON).")
    p.add_argument("state_b", help="Alternative state sigma (JSON).")
    p.add_argument("--out", help="Output file (.json); stdout when omitted.")

    p = sub.add_parser("validate", help="Check a state file against the uncertainty relation.")
    p.add_argument("state", help="State file (JSON).")
    p.add_argument("--out", help="Output file (.json).")

    p = sub.add_parser("illumination", help="Coherent vs entangled transmitter exponent sweep.")
    p.add_argument("--transmitter", choices=[*TRANSMITTERS, "both"], default="both")
    p.add_argument("--ns", type=float, required=True, help="Mean signal photon number N_S.")
    p.add_argument("--nb", type=float, required=True, help="Mean background photon number N_B > 0.")
    p.add_argument("--eta", type=float, required=True, help="Transmissivity in (0, 1).")
    p.add_argument("--epsilon", type=float, default=ill.epsilon, help=f"Type-I bound (default: {ill.epsilon:g}).")
    p.add_argument("--m-max", type=int, default=ill.m_max, dest="m_max", help=f"Largest trial count (default: {ill.m_max}).")
    p.add_argument("--m-points", type=int, default=ill.m_points, dest="m_points",
                   help=f"Points on the log-spaced trial grid (default: {ill.m_points}).")
    p.add_argument("--out", help="Output file (.csv or .json); CSV on stdout when omitted.")

    p = sub.add_parser("exponent", help="Exponent curve for given D and V.")
    p.add_argument("--d", type=float, required=True, help="Relative entropy D (nats).")
    p.add_argument("--v", type=float, required=True, help="Relative entropy variance V (nats^2).")
    p.add_argument("--epsilon", type=float, default=ill.epsilon)
    p.add_argument("--m-max", type=int, default=ill.m_max, dest="m_max")
    p.add_argument("--m-points", type=int, default=ill.m_points, dest="m_points")
    p.add_argument("--out", help="Output file (.csv or .json).")

    p = sub.add_parser("oracle-check", help="Formula vs Fock-oracle comparison for a preset scenario.")
    p.add_argument("--scenario", required=True,
                   help="One of: " + ", ".join(ScenarioLibrary.get_available_scenarios(oracle_only=True)))
    p.add_argument("--cutoff", type=int, default=None, help="Photons per mode (default: per scenario).")
    p.add_argument("--out", help="Output file (.json).")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        settings = get_settings()
        parser = build_parser(settings)
    except GaussSteinError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    args = parser.parse_args(argv)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(message)s",
        force=True,
    )
    try:
        overrides = _parse_overrides(args.tol)
        if overrides:
            settings = settings.model_copy(update={"numerics": with_overrides(settings.numerics, **overrides)})
        inputs = [getattr(args, k) for k in ("state_a", "state_b", "state") if getattr(args, k, None)]
        config = RunConfig(command=args.command, inputs=inputs, out=args.out, tolerance_overrides=overrides)
        config.output_format  # unknown --out extensions fail before any work
        return HANDLERS[args.command](args, config, settings)
    except GaussSteinError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return InvalidArgumentError.exit_code


if __name__ == "__main__":
    sys.exit(main())
