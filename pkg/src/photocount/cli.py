"""Command-line front end.

Every subcommand calls one library function and writes the result with
that object's own ``to_json``/``to_csv`` so the output is byte-identical to
a direct library call. Errors end with a single line on stderr of the form
``error: <Code>: <message>``; exit status is 2 for bad configuration and 1
for domain errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .distributions import (
    DEFAULT_EPSILON_TAIL,
    PMF,
    CompoundPoissonParams,
    FamilyParams,
    PoissonParams,
    compound_poisson_pmf,
    family_pmf,
    pmf_from_values,
    values_from_csv,
)
from .errors import BadConfig, PhotocountError
from .montecarlo import simulate
from .simplex import contains, vertices_csv
from .stability import analyze, eta_critical
from .transform import TransformSpec, forward, inverse

OUTPUT_DIR_ENV = "PHOTOCOUNT_OUTPUT_DIR"
COMMANDS = ("forward", "invert", "stability", "etacrit", "simplex", "simulate", "figures")
FIGURE2_CLUSTERIZATION = (0.2, 1.0, 50.0)
FIGURE1_EFFICIENCIES = (1.0, 0.8, 0.4)


@dataclass
class RunConfig:
    command: str
    eta: float | None = None
    input_path: str | None = None
    values: list[float] | None = None
    output_path: str | None = None
    family: str | None = None
    mean: float | None = None
    a: float | None = None
    epsilon_tail: float = DEFAULT_EPSILON_TAIL
    dim: int | None = None
    n_max: int | None = None
    use_hint: bool = True
    exact: bool = False
    samples: int | None = None
    seed: int = 0
    workers: int = 1
    which: int | None = None
    vertices_path: str | None = None
    format: str = "csv"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise BadConfig(f"unknown command {self.command!r}")
        if self.format not in ("json", "csv"):
            raise BadConfig(f"format must be json or csv, got {self.format!r}")
        needs_eta = self.command in ("forward", "invert", "stability", "simplex", "simulate")
        if needs_eta:
            if self.eta is None:
                raise BadConfig(f"{self.command} requires --eta")
            if not (0.0 < self.eta <= 1.0):
                raise BadConfig(f"--eta must lie in (0, 1], got {self.eta!r}")
        if self.family is not None:
            if self.family not in ("poisson", "compound-poisson"):
                raise BadConfig(f"unknown family {self.family!r}")
            if self.mean is None:
                raise BadConfig("--family requires --mean")
            if self.family == "compound-poisson" and self.a is None:
                raise BadConfig("compound-poisson requires --a")
        sources = sum(x is not None for x in (self.input_path, self.values, self.family))
        if self.command in ("forward", "invert", "stability", "simulate") and sources != 1:
            raise BadConfig("give exactly one of --input, --values or --family")
        if self.command == "etacrit" and self.family is None:
            raise BadConfig("etacrit requires --family")
        if self.command == "simulate" and (self.samples is None or self.samples < 1):
            raise BadConfig("simulate requires --samples >= 1")
        if self.command == "simplex" and sources == 0 and self.dim is None:
            raise BadConfig("simplex needs --dim when no input is given")
        if self.command == "figures" and self.which not in (1, 2):
            raise BadConfig("figures requires --which 1 or --which 2")

    def family_params(self) -> FamilyParams | None:
        if self.family == "poisson":
            return PoissonParams(self.mean)
        if self.family == "compound-poisson":
            return CompoundPoissonParams(self.mean, self.a)
        return None


def _read_values(path: str) -> tuple[list[float], dict | None]:
    text = Path(path).read_text()
    if path.lower().endswith(".json"):
        data = json.loads(text)
        if isinstance(data, dict):
            return [float(v) for v in data["probs"]], data
        return [float(v) for v in data], None
    return values_from_csv(text), None


def _raw_input(cfg: RunConfig) -> list[float]:
    if cfg.values is not None:
        return list(cfg.values)
    if cfg.input_path is not None:
        return _read_values(cfg.input_path)[0]
    return list(family_pmf(cfg.family_params(), cfg.epsilon_tail).probs)


def _pmf_input(cfg: RunConfig) -> PMF:
    if cfg.family is not None:
        return family_pmf(cfg.family_params(), cfg.epsilon_tail)
    if cfg.input_path is not None:
        values, meta = _read_values(cfg.input_path)
        if meta is not None:
            return PMF.from_dict(meta)
        return pmf_from_values(values, "strict")
    return pmf_from_values(cfg.values, "strict")


def _render(obj, fmt: str) -> str:
    return obj.to_json() if fmt == "json" else obj.to_csv()


def resolve_output(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _emit(text: str, cfg: RunConfig, out) -> None:
    if cfg.output_path:
        target = resolve_output(cfg.output_path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    else:
        out.write(text if text.endswith("\n") else text + "\n")


def figure2_csv(mean: float = 4.0, epsilon_tail: float = DEFAULT_EPSILON_TAIL) -> str:
    """Compound Poisson curves for a = 0.2, 1, 50; cells past a curve's support are empty."""
    curves = [
        compound_poisson_pmf(CompoundPoissonParams(mean, a), epsilon_tail).probs
        for a in FIGURE2_CLUSTERIZATION
    ]
    lines = ["m," + ",".join(f"a={a!r}" for a in FIGURE2_CLUSTERIZATION)]
    for m in range(max(c.size for c in curves)):
        cells = [repr(float(c[m])) if m < c.size else "" for c in curves]
        lines.append(f"{m}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def figure1_csv(dim: int = 3) -> str:
    """Simplex vertices for the lossless detector and for eta = 0.8, 0.4."""
    blocks = [vertices_csv(TransformSpec(eta, dim)).splitlines() for eta in FIGURE1_EFFICIENCIES]
    rows = blocks[0][:1] + [row for block in blocks for row in block[1:]]
    return "\n".join(rows) + "\n"


def _etacrit_text(params: FamilyParams, fmt: str) -> str:
    value = eta_critical(params)
    a = getattr(params, "clusterization", None)
    if fmt == "json":
        return json.dumps({"family": type(params).__name__, "mean": params.mean, "a": a, "eta_cr": value})
    return f"mean,a,eta_cr\n{params.mean!r},{'' if a is None else repr(a)},{value!r}\n"


def run(cfg: RunConfig, out=None, err=None) -> int:
    """Execute one command; returns the process exit status."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        cfg.validate()
        cmd = cfg.command
        if cmd == "forward":
            p = _pmf_input(cfg)
            spec = TransformSpec(cfg.eta, cfg.dim or len(p))
            _emit(_render(forward(p, spec), cfg.format), cfg, out)
        elif cmd == "invert":
            q = _raw_input(cfg)
            spec = TransformSpec(cfg.eta, cfg.dim or len(q))
            result = inverse(q, spec, exact=cfg.exact)
            if len(q) == spec.dim and abs(sum(q) - 1.0) <= 1e-9:
                check = contains(q, spec)
                if not check.inside:
                    bad = ",".join(str(v.index) for v in check.violations)
                    err.write(
                        f"warning: input is outside the Q-simplex; reconstructed indices {bad} leave [0, 1]\n"
                    )
            if not all(result.converged):
                err.write("warning: some series terms do not decay over the available support\n")
            _emit(_render(result, cfg.format), cfg, out)
        elif cmd == "stability":
            q = _raw_input(cfg)
            hint = cfg.family_params() if cfg.use_hint else None
            report = analyze(q, cfg.eta, n_max=cfg.n_max, family=hint)
            _emit(_render(report, cfg.format), cfg, out)
            err.write(report.summary_line() + "\n")
        elif cmd == "etacrit":
            _emit(_etacrit_text(cfg.family_params(), cfg.format), cfg, out)
        elif cmd == "simplex":
            has_input = cfg.input_path is not None or cfg.values is not None or cfg.family is not None
            q = _raw_input(cfg) if has_input else None
            dim = cfg.dim or len(q)
            spec = TransformSpec(cfg.eta, dim)
            if cfg.vertices_path:
                resolve_output(cfg.vertices_path).write_text(vertices_csv(spec))
            if q is None:
                _emit(vertices_csv(spec), cfg, out)
            else:
                _emit(_render(contains(q, spec), cfg.format), cfg, out)
        elif cmd == "simulate":
            p = _pmf_input(cfg)
            result = simulate(p, cfg.eta, cfg.samples, cfg.seed, workers=cfg.workers)
            _emit(_render(result, cfg.format), cfg, out)
        elif cmd == "figures":
            if cfg.which == 2:
                mean = 4.0 if cfg.mean is None else cfg.mean
                text = figure2_csv(mean, cfg.epsilon_tail)
            else:
                text = figure1_csv(cfg.dim or 3)
            _emit(text, cfg, out)
    except BadConfig as exc:
        err.write(f"error: {exc.code}: {exc}\n")
        return 2
    except PhotocountError as exc:
        err.write(f"error: {exc.code}: {exc}\n")
        return 1
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        err.write(f"error: BadConfig: {exc}\n")
        return 2
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"error: BadConfig: {message}\n")


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="photocount", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, eta=True, source=True):
        if eta:
            p.add_argument("--eta", type=float, help="detection efficiency in (0, 1]")
        if source:
            p.add_argument("--input", dest="input_path", help="CSV (index,value) or JSON file")
            p.add_argument("--values", type=_float_list, help="comma-separated values")
        p.add_argument("--family", choices=["poisson", "compound-poisson"])
        p.add_argument("--mean", type=float)
        p.add_argument("--a", type=float, help="clusterization parameter")
        p.add_argument("--epsilon-tail", type=float, default=DEFAULT_EPSILON_TAIL)
        p.add_argument("--output", dest="output_path")
        p.add_argument("--format", choices=["json", "csv"], default="csv")

    p = sub.add_parser("forward", help="photon-number -> photocount distribution")
    common(p)
    p.add_argument("--dim", type=int)

    p = sub.add_parser("invert", help="photocount -> photon-number reconstruction")
    common(p)
    p.add_argument("--dim", type=int)
    p.add_argument("--exact", action="store_true", help="exact rational arithmetic")

    p = sub.add_parser("stability", help="convergence analysis of the inverse series")
    common(p)
    p.add_argument("--n-max", type=int)
    p.add_argument("--no-hint", dest="use_hint", action="store_false",
                   help="judge from the data even when --family is given")

    p = sub.add_parser("etacrit", help="critical efficiency of an analytic family")
    common(p, eta=False, source=False)

    p = sub.add_parser("simplex", help="Q-simplex membership and vertices")
    common(p)
    p.add_argument("--dim", type=int)
    p.add_argument("--vertices", dest="vertices_path", help="also write vertex CSV here")

    p = sub.add_parser("simulate", help="Monte Carlo photodetection")
    common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("figures", help="data behind the simplex and compound Poisson plots")
    common(p, eta=False, source=False)
    p.add_argument("--which", type=int, choices=[1, 2])
    p.add_argument("--dim", type=int)
    return parser


def config_from_args(argv: Sequence[str] | None = None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in ns.items() if k in fields})


def main(argv: Sequence[str] | None = None) -> int:
    return run(config_from_args(argv))


if __name__ == "__main__":
    sys.exit(main())
