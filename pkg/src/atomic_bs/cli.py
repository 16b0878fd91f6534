"""Command-line front end.

Each subcommand writes one table (CSV by default) and, for ``joint``, a
JSON sidecar with grid metadata and the normalisation.  Figure settings
live in ``recipes/*.cfg`` and are selected with ``--recipe NAME``; explicit
flags override recipe values.

Environment:
    ATOMIC_BS_OUTPUT_DIR  directory for relative ``--output`` paths
    ATOMIC_BS_WORKERS     worker processes for sweeps (default 1)
    ATOMIC_BS_BACKEND     ``numba`` (default) or ``numpy``
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, _kernels, amplitude, linear_reference, moments, oracles
from .core import (Grid1D, Grid2D, PulseKind, ScatterParams, default_frequency_axis,
                   default_time_axis, load_sampled_pulse)

COMMANDS = ("coincidence", "excitation", "joint", "delay-scan", "marginal")
HEADERS = {
    "coincidence": ("x", "c_atomic", "c_linear", "c_oracle"),
    "excitation": ("bandwidth", "t", "p_excited"),
    "joint": ("x", "y", "value"),
    "delay-scan": ("delay", "c_atomic"),
    "marginal": ("tau", "density"),
}
# below this bandwidth the monochromatic closed form is offered as the oracle
MONOCHROMATIC_LIMIT = 0.05


def parse_values(text: str) -> tuple:
    """Sweep values: ``"0.1, 0.5, 1"``, ``"lin:a:b:n"`` or ``"log:a:b:n"``."""
    text = text.strip()
    if not text:
        return ()
    if text.startswith(("lin:", "log:")):
        kind, a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
        vals = np.linspace(a, b, n) if kind == "lin" else np.geomspace(a, b, n)
        return tuple(float(v) for v in vals)
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _format_values(values) -> str:
    return ", ".join(format(v, ".17g") for v in values)


@dataclass
class RunConfig:
    """Everything needed to reproduce one CLI run."""

    command: str = "coincidence"
    pulse: str = "square"
    gamma: float = 1.0
    detuning: float = 0.0
    bandwidth: float = 1.0
    delay: float = 0.0
    sweep: str = "bandwidth"
    values: tuple = ()
    bandwidths: tuple = (0.1, 1.25, 10.0)
    delays: tuple = ()
    domain: str = "time"
    time: float = math.inf
    reference: str = "atomic"
    points: int = 512
    postselect: float | None = None
    pulse_file: str = ""
    output: str = ""
    format: str = "csv"
    seed: int = 0  # reserved; every computation is deterministic

    _TUPLES = ("values", "bandwidths", "delays")

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.sweep not in ("detuning", "bandwidth"):
            raise ValueError(f"unknown sweep variable {self.sweep!r}; use detuning or bandwidth")
        if self.domain not in ("time", "frequency"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.reference not in ("atomic", "linear"):
            raise ValueError(f"unknown reference {self.reference!r}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.command == "joint" and self.domain == "frequency" and math.isfinite(self.time):
            raise ValueError("the joint spectrum is only defined after scattering; drop --time")
        PulseKind(self.pulse)

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        section = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in self._TUPLES:
                section[f.name] = _format_values(v)
            elif v is None:
                section[f.name] = ""
            elif isinstance(v, float):
                section[f.name] = format(v, ".17g")
            else:
                section[f.name] = str(v)
        cp["run"] = section
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_mapping(cls, mapping, base: RunConfig | None = None) -> RunConfig:
        cfg = dataclasses.replace(base) if base is not None else cls()
        defaults = dataclasses.asdict(cls())
        for key, raw in mapping.items():
            key = key.replace("-", "_")
            if key not in defaults:
                raise ValueError(f"unknown config key {key!r}")
            default = defaults[key]
            if key in cls._TUPLES:
                value = parse_values(raw) if isinstance(raw, str) else tuple(float(v) for v in raw)
            elif key == "postselect":
                value = None if raw in ("", None) else float(raw)
            elif isinstance(default, int):
                value = int(raw)
            elif isinstance(default, float):
                value = float(raw)
            else:
                value = str(raw)
            setattr(cfg, key, value)
        return cfg

    @classmethod
    def from_text(cls, text: str, base: RunConfig | None = None) -> RunConfig:
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        if "run" not in cp:
            raise ValueError("config needs a [run] section")
        return cls.from_mapping(dict(cp["run"]), base)

    def params(self, **overrides) -> ScatterParams:
        kw = dict(gamma=self.gamma, detuning=self.detuning, bandwidth=self.bandwidth,
                  delay=self.delay, pulse_kind=self.pulse)
        kw.update(overrides)
        return ScatterParams(**kw)

    def make_pulse(self, bandwidth: float | None = None):
        bw = self.bandwidth if bandwidth is None else bandwidth
        if self.pulse == PulseKind.SAMPLED.value:
            if not self.pulse_file:
                raise ValueError("a sampled pulse needs --pulse-file")
            return load_sampled_pulse(self.pulse_file)
        return self.params(bandwidth=bw).make_pulse()


def recipe_names() -> list:
    return sorted(p.name[:-4] for p in resources.files("atomic_bs.recipes").iterdir()
                  if p.name.endswith(".cfg"))


def load_recipe(name: str) -> RunConfig:
    path = resources.files("atomic_bs.recipes") / f"{name}.cfg"
    if not path.is_file():
        raise ValueError(f"unknown recipe {name!r}; available: {', '.join(recipe_names())}")
    return RunConfig.from_text(path.read_text())


# -- computations ---------------------------------------------------------------

def _workers() -> int:
    return max(1, int(os.environ.get("ATOMIC_BS_WORKERS", "1")))


def _map(fn, items):
    items = list(items)
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _oracle(cfg: RunConfig, params: ScatterParams) -> float | None:
    if params.pulse_kind is not PulseKind.SQUARE or params.delay != 0.0:
        return None
    sigma = params.bandwidth / params.gamma
    if params.detuning == 0.0:
        return oracles.coincidence_square_resonant(sigma)
    if sigma <= MONOCHROMATIC_LIMIT:
        return oracles.coincidence_monochromatic(params.detuning / params.gamma)
    return None


def _coincidence_row(args):
    cfg, x = args
    key = "detuning" if cfg.sweep == "detuning" else "bandwidth"
    params = cfg.params(**{key: x})
    pulse = cfg.make_pulse(params.bandwidth)
    c_atomic = moments.coincidence(params, pulse)
    c_linear = linear_reference.linear_coincidence(pulse, params.detuning, params.gamma,
                                                   params.delay)
    return x, c_atomic, c_linear, _oracle(cfg, params)


def cmd_coincidence(cfg: RunConfig):
    values = cfg.values or (parse_values("lin:-4:4:81") if cfg.sweep == "detuning"
                            else parse_values("log:0.02:10:40"))
    return _map(_coincidence_row, [(cfg, x) for x in values]), {}


def _excitation_rows(args):
    cfg, bw = args
    params = cfg.params(bandwidth=bw)
    trace = moments.integrate_moments(params, cfg.make_pulse(bw))
    stride = max(1, len(trace.times) // 2000)
    p = trace.excitation
    return [(bw, float(t), float(v)) for t, v in zip(trace.times[::stride], p[::stride])]


def cmd_excitation(cfg: RunConfig):
    rows = []
    for block in _map(_excitation_rows, [(cfg, bw) for bw in cfg.bandwidths]):
        rows.extend(block)
    return rows, {}


def _require_resonant(cfg: RunConfig) -> None:
    if cfg.detuning != 0.0 or cfg.delay != 0.0:
        raise ValueError("two-time and spectral correlations need detuning 0 and delay 0")


def cmd_joint(cfg: RunConfig):
    _require_resonant(cfg)
    pulse = cfg.make_pulse()
    linear = cfg.reference == "linear"
    if cfg.domain == "time":
        grid = Grid2D.square(default_time_axis(pulse, cfg.gamma, cfg.points))
        dist = amplitude.joint_time_distribution(pulse, cfg.time, grid, cfg.gamma, linear)
    else:
        grid = Grid2D.square(default_frequency_axis(pulse, cfg.gamma, cfg.points))
        if linear:
            dist = linear_reference.linear_joint_spectrum(pulse, grid, 0.0, cfg.gamma)
        else:
            dist = amplitude.joint_spectrum(pulse, grid, cfg.gamma)
    xs, ys = grid.x.nodes, grid.y.nodes
    rows = [(xs[i], ys[j], dist.values[i, j]) for i in range(xs.size) for j in range(ys.size)]
    meta = {"grid": {"domain": dist.domain, **grid.to_dict()},
            "normalization": dist.normalization}
    return rows, meta


def cmd_delay_scan(cfg: RunConfig):
    pulse = cfg.make_pulse()
    delays = cfg.delays or tuple(float(v) for v in np.linspace(0.0, 2.0 * pulse.duration, 21))
    rows = _map(_delay_row, [(cfg, d) for d in delays])
    return rows, {}


def _delay_row(args):
    cfg, d = args
    return d, moments.delay_scan(cfg.params(), cfg.make_pulse(), [d])[0][1]


def cmd_marginal(cfg: RunConfig):
    _require_resonant(cfg)
    pulse = cfg.make_pulse()
    grid = Grid2D.square(default_time_axis(pulse, cfg.gamma, cfg.points))
    joint = amplitude.joint_time_distribution(pulse, math.inf, grid, cfg.gamma,
                                              cfg.reference == "linear")
    tau, density = amplitude.marginal_time_distribution(joint, cfg.postselect)
    return list(zip(tau, density)), {"normalization": joint.normalization}


RUNNERS = {"coincidence": cmd_coincidence, "excitation": cmd_excitation, "joint": cmd_joint,
           "delay-scan": cmd_delay_scan, "marginal": cmd_marginal}


# -- output -----------------------------------------------------------------------

def _cell(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def render_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def render_json(header, rows) -> str:
    table = {"columns": list(header),
             "rows": [[None if v is None else float(v) for v in row] for row in rows]}
    return json.dumps(table, indent=1, allow_nan=False) + "\n"


def engine_versions() -> dict:
    import numba
    import scipy

    return {"atomic_bs": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "backend": _kernels.BACKEND}


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def output_path(cfg: RunConfig) -> Path | None:
    if not cfg.output:
        return None
    path = Path(cfg.output)
    base = os.environ.get("ATOMIC_BS_OUTPUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def run(cfg: RunConfig, stdout=None) -> Path | None:
    """Execute ``cfg`` and write its outputs; returns the table path if any."""
    cfg.validate()
    start = time.perf_counter()
    rows, meta = RUNNERS[cfg.command](cfg)
    elapsed = time.perf_counter() - start
    header = HEADERS[cfg.command]
    text = render_csv(header, rows) if cfg.format == "csv" else render_json(header, rows)
    path = output_path(cfg)
    if path is None:
        (stdout or sys.stdout).write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    if cfg.command == "joint":
        sidecar = {"config": dataclasses.asdict(cfg), **meta, "runtime_seconds": elapsed,
                   "engine_versions": engine_versions()}
        side_text = json.dumps(_json_safe(sidecar), indent=1, sort_keys=True) + "\n"
        if path is None:
            sys.stderr.write(side_text)
        else:
            with open(path.with_suffix(".json"), "w", newline="\n") as fh:
                fh.write(side_text)
    return path


# -- argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atomic-bs",
                                     description="Two-photon scattering on a waveguide-coupled atom.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--recipe", help="start from a shipped figure recipe")
        p.add_argument("--config", help="start from a [run] key=value file")
        p.add_argument("--pulse", choices=[k.value for k in PulseKind])
        p.add_argument("--pulse-file", help="CSV tau,re,im for --pulse sampled")
        p.add_argument("--gamma", type=float)
        p.add_argument("--detuning", type=float, help="Delta/gamma")
        p.add_argument("--bandwidth", type=float, help="Omega/gamma")
        p.add_argument("--delay", type=float, help="gamma * delay")
        p.add_argument("--output", "-o")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--points", type=int)
        if name == "coincidence":
            p.add_argument("--sweep")
            p.add_argument("--values", help="'a, b, c', 'lin:a:b:n' or 'log:a:b:n'")
        if name == "excitation":
            p.add_argument("--bandwidths")
        if name == "delay-scan":
            p.add_argument("--delays")
        if name in ("joint", "marginal"):
            p.add_argument("--reference", choices=("atomic", "linear"))
        if name == "joint":
            p.add_argument("--domain", choices=("time", "frequency"))
            p.add_argument("--time", type=float, help="running time; omit for t -> inf")
        if name == "marginal":
            p.add_argument("--postselect", type=float, help="condition on this tau2")
        p.add_argument("--dump-config", action="store_true",
                       help="print the resolved configuration and exit")
    return parser


def config_from_args(args) -> RunConfig:
    cfg = load_recipe(args.recipe) if args.recipe else RunConfig()
    if args.config:
        cfg = RunConfig.from_text(Path(args.config).read_text(), cfg)
    if cfg.command != args.command and (args.recipe or args.config):
        raise ValueError(f"recipe is for {cfg.command!r}, not {args.command!r}")
    overrides = {k: v for k, v in vars(args).items()
                 if v is not None and k not in ("recipe", "config", "dump_config", "command")}
    overrides["command"] = args.command
    return RunConfig.from_mapping(overrides, cfg)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        if args.dump_config:
            sys.stdout.write(cfg.to_text())
            return 0
        run(cfg)
    except (ValueError, oracles.OutOfDomainError) as exc:
        parser.exit(2, f"atomic-bs: error: {exc}\n")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
