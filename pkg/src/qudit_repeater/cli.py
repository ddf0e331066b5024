"""Command-line interface.

Subcommands::

    gain             evaluate one repeater line
    sweep            one-dimensional sweeps and the published figure/table datasets
    validate         compare closed-form statistics with the Monte Carlo oracle
    pseudothreshold  code-capacity pseudothreshold of a code

Values are resolved as flags > ``--config`` file > defaults. Exit codes:
0 success (including negative gain), 1 oracle disagreement, 2 configuration
error, 3 invalid physical regime.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional

from . import __version__, explorer
from .channels import PhysicalParams, Topology
from .errors import ConfigError, InvalidRegime, NoCrossing, RepeaterError
from .oracle import compare_with_oracle
from .qecc import CodeParams, custom_code, polynomial_code
from .statistics import Encoding, evaluate, pseudothreshold

logger = logging.getLogger(__name__)

SCHEMA = "qudit-repeater/1"
EXIT_ORACLE, EXIT_CONFIG, EXIT_REGIME = 1, 2, 3


@dataclass
class RunConfig:
    """Complete, declarative description of one CLI run."""

    encoding: str = "mm"
    dim: int = 13
    code: Optional[list] = None  # [n, d] for a custom code; polynomial code otherwise
    alpha: float = 0.2
    fM: float = 1e-2
    fG: float = 1e-3
    gamma: float = 1e-2
    c: float = 200.0
    L: float = 200.0
    N: Optional[int] = None
    L0: Optional[float] = None
    figure: Optional[int] = None
    table: Optional[int] = None
    var: Optional[str] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    points: int = 50
    log: bool = False
    fraction: float = 0.9
    n_cap: int = explorer.DEFAULT_N_CAP
    format: str = "csv"
    out: Optional[str] = None
    samples: int = 10**6
    seed: int = 12345
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def canonical(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def validate(self) -> None:
        if self.code is not None:
            self.code = [int(v) for v in self.code]
            if len(self.code) != 2:
                raise ConfigError("code must be given as n,d")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        self.physical()
        self.code_params()
        Encoding.parse(self.encoding)
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if not 0 < self.fraction <= 1:
            raise ConfigError("fraction must lie in (0, 1]")

    def physical(self) -> PhysicalParams:
        return PhysicalParams(alpha=self.alpha, f_M=self.fM, f_G=self.fG, gamma=self.gamma, c=self.c)

    def code_params(self) -> CodeParams:
        if self.code is not None:
            return custom_code(self.dim, *self.code)
        return polynomial_code(self.dim)

    def topology(self) -> Topology:
        if self.N is not None:
            return Topology(self.L, self.N)
        if self.L0 is not None:
            return Topology.from_spacing(self.L, self.L0)
        raise ConfigError("give --N or --L0")

    def repeater(self) -> explorer.RepeaterConfig:
        return explorer.RepeaterConfig(
            self.physical(), self.code_params(), Encoding.parse(self.encoding), self.n_cap
        )


# flag name -> RunConfig field
_FLAG_FIELDS = {
    "encoding": "encoding",
    "dim": "dim",
    "code": "code",
    "L": "L",
    "N": "N",
    "L0": "L0",
    "alpha": "alpha",
    "fM": "fM",
    "fG": "fG",
    "gamma": "gamma",
    "c": "c",
    "out": "out",
    "format": "format",
    "seed": "seed",
    "samples": "samples",
    "workers": "workers",
    "fraction": "fraction",
    "n_cap": "n_cap",
    "figure": "figure",
    "table": "table",
    "var": "var",
    "start": "start",
    "stop": "stop",
    "points": "points",
    "log": "log",
}


def _code_arg(text: str) -> list:
    try:
        n, d = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected n,d") from None
    return [n, d]


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file (flags override it)")
    p.add_argument("--encoding", choices=["mm", "fock"])
    p.add_argument("--dim", type=int, help="qudit dimension D")
    p.add_argument("--code", type=_code_arg, metavar="n,d", help="custom code instead of the polynomial code")
    p.add_argument("--L", type=float, help="total distance in km")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--N", type=int, help="number of elementary links (even)")
    g.add_argument("--L0", type=float, help="link spacing in km")
    p.add_argument("--alpha", type=float, help="fiber attenuation, dB/km")
    p.add_argument("--fM", type=float, help="measurement error rate")
    p.add_argument("--fG", type=float, help="gate error rate")
    p.add_argument("--gamma", type=float, help="memory decay rate, dB/ms")
    p.add_argument("--c", type=float, help="signal speed, km/ms")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--fraction", type=float, help="operating-point fraction of the maximal bound")
    p.add_argument("--n-cap", dest="n_cap", type=int, help="largest link count searched")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qudit-repeater",
        description="Capacity bounds and quantum-repeater gain of error-corrected qudit repeaters",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gain", help="evaluate one configuration")
    _shared(p)

    p = sub.add_parser("sweep", help="parameter sweeps and figure/table datasets")
    _shared(p)
    what = p.add_mutually_exclusive_group()
    what.add_argument("--figure", type=int, choices=[2, 3, 4, 5, 6])
    what.add_argument("--table", type=int, choices=[1])
    what.add_argument("--var", choices=list(explorer.SweepSpec.VARS))
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--log", action="store_true", default=None)

    p = sub.add_parser("validate", help="check analytic statistics against Monte Carlo")
    _shared(p)

    p = sub.add_parser("pseudothreshold", help="code-capacity pseudothreshold")
    _shared(p)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data.update(json.load(fh))
    for flag, name in _FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            data[name] = v
    return RunConfig.from_dict(data)


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if hasattr(v, "item"):
        return _json_safe(v.item())
    return v


# fields that change where or how fast output is produced, never its content
_NON_CONTENT = ("out", "workers")


def meta_block(cfg: RunConfig, command: str) -> dict:
    content = RunConfig(**{**cfg.to_dict(), **{k: getattr(RunConfig, k) for k in _NON_CONTENT}})
    return {
        "schema": SCHEMA,
        "version": __version__,
        "command": command,
        "config": content.to_dict(),
        "config_sha256": content.digest(),
        "seed": cfg.seed,
    }


def render(result: explorer.RegimeResult, meta: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {"schema": SCHEMA, "meta": meta, "derived": result.derived, "rows": result.rows}
        return json.dumps(_json_safe(doc), indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# meta: " + json.dumps(_json_safe(meta), sort_keys=True) + "\n")
    if result.derived:
        buf.write("# derived: " + json.dumps(_json_safe(result.derived), sort_keys=True) + "\n")
    cols = result.columns
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in result.rows:
        w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_gain(cfg: RunConfig) -> int:
    report = evaluate(cfg.physical(), cfg.topology(), cfg.code_params(), Encoding.parse(cfg.encoding))
    row = explorer.report_row(report)
    if cfg.format == "json" or cfg.out:
        res = explorer.RegimeResult(rows=[row], name="gain")
        _emit(render(res, meta_block(cfg, "gain"), cfg.format), cfg)
    if not cfg.out:
        if cfg.format != "json":
            width = max(len(k) for k in row)
            for k, v in row.items():
                print(f"{k:<{width}}  {_fmt(v)}")
        if report.even_distance:
            logger.warning("code distance %d is even; only %d errors are correctable", report.d, report.t)
    return 0


def _sweep_result(cfg: RunConfig) -> explorer.RegimeResult:
    params, w = cfg.physical(), cfg.workers
    if cfg.table == 1:
        return explorer.table1(params=params, workers=w)
    if cfg.figure is not None:
        return {
            2: lambda: explorer.figure2(params, workers=w),
            3: lambda: explorer.figure3(params, fraction=cfg.fraction, workers=w),
            4: lambda: explorer.figure4(params, workers=w),
            5: lambda: explorer.figure5(params, workers=w),
            6: lambda: explorer.figure6(params),
        }[cfg.figure]()
    if cfg.var is None:
        raise ConfigError("sweep needs --figure, --table or --var")
    if cfg.start is None or cfg.stop is None:
        raise ConfigError("--var needs --from and --to")
    fixed = {"L": cfg.L}
    if cfg.N is not None:
        fixed["N"] = cfg.N
    spec = explorer.SweepSpec(
        var=cfg.var,
        start=cfg.start,
        stop=cfg.stop,
        points=cfg.points,
        scale="log" if cfg.log else "linear",
        fixed=fixed,
        encodings=(cfg.encoding,),
        params=params,
        D=cfg.dim,
        code=tuple(cfg.code) if cfg.code else None,
        fraction=cfg.fraction,
        n_cap=cfg.n_cap,
    )
    return explorer.run_sweep(spec, w)


def cmd_sweep(cfg: RunConfig) -> int:
    res = _sweep_result(cfg)
    _emit(render(res, meta_block(cfg, "sweep"), cfg.format), cfg)
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    comparisons = compare_with_oracle(
        cfg.physical(),
        cfg.topology(),
        cfg.code_params(),
        Encoding.parse(cfg.encoding),
        samples=cfg.samples,
        seed=cfg.seed,
    )
    rows = [asdict(c) for c in comparisons]
    if cfg.out or cfg.format == "json":
        _emit(render(explorer.RegimeResult(rows=rows), meta_block(cfg, "validate"), cfg.format), cfg)
    if not cfg.out and cfg.format != "json":
        print(f"{'quantity':<18} {'analytic':>14} {'empirical':>14} {'sigma':>10} {'z':>7}")
        for c in comparisons:
            print(
                f"{c.quantity:<18} {c.analytic:>14.8f} {c.empirical:>14.8f} "
                f"{c.sigma:>10.2e} {c.z:>7.2f}  {'ok' if c.ok else 'FAIL'}"
            )
    return 0 if all(c.ok for c in comparisons) else EXIT_ORACLE


def cmd_pseudothreshold(cfg: RunConfig) -> int:
    code = cfg.code_params()
    res = pseudothreshold(code)
    if cfg.format == "json" or cfg.out:
        row = {"code": code.label(), **asdict(res)}
        _emit(render(explorer.RegimeResult(rows=[row]), meta_block(cfg, "pseudothreshold"), cfg.format), cfg)
    if not cfg.out and cfg.format != "json":
        print(f"{code.label()}: physical rate {res.physical_rate:.6f} "
              f"(per nontrivial error {res.per_error_rate:.6g})")
    return 0


COMMANDS = {
    "gain": cmd_gain,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "pseudothreshold": cmd_pseudothreshold,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except InvalidRegime as exc:
        print(f"invalid regime: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (ConfigError, NoCrossing) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RepeaterError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
