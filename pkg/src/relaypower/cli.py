"""Command line interface: rate sweeps, envelope geometry, allocation and
fixed-vs-allocated comparisons, all emitted as CSV or ``key=value`` text.

Settings come from an optional flat config file (``key = value`` lines,
``#`` comments) overridden by flags named after the keys, e.g.
``--fading-h32-kind`` for ``fading.h32.kind``.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from . import allocation as alloc
from .envelope import build_envelope, envelope_rate
from .fading import LINKS, Empirical, FadingModel, Fixed, IntegratorSpec, Rayleigh, states_from_fading
from .rates import crossover_f, d_rate_cf, d_rate_df, rate_cf, rate_df, rate_hybrid


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(message)
        self.key = key


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _positive(key, v):
    x = float(v)
    if not (math.isfinite(x) and x > 0):
        raise ValueError(f"must be positive, got {v!r}")
    return x


def _nonneg(key, v):
    x = float(v)
    if not (math.isfinite(x) and x >= 0):
        raise ValueError(f"must be finite and >= 0, got {v!r}")
    return x


def _count(key, v):
    n = int(v)
    if n < 1:
        raise ValueError(f"must be a positive integer, got {v!r}")
    return n


def _choice(*options):
    def parse(key, v):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}, got {v!r}")
        return v
    return parse


KEYS = {
    "s1": (_nonneg, None),
    "t": (_nonneg, None),
    "p1_bar": (_positive, "1"),
    "p2_bar": (_positive, "1"),
    "integrator.kind": (_choice("mc", "quad", "exact"), "quad"),
    "integrator.samples": (_count, "10000"),
    "integrator.seed": (lambda k, v: int(v), "0"),
    "integrator.nodes": (_count, "16"),
    "grid.s2_max": (_positive, None),
    "grid.points": (_count, "101"),
    "protocol": (_choice("df", "cf", "hybrid", "all"), None),
}
for _link in LINKS:
    KEYS[f"fading.{_link}.kind"] = (_choice("rayleigh", "fixed", "empirical"), "rayleigh")
    KEYS[f"fading.{_link}.param"] = (lambda k, v: v, "1")


def read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line{lineno}", f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in KEYS:
                raise ConfigError(key, f"unknown config key {key!r}")
            values[key] = value
    return values


@dataclass
class RunConfig:
    values: dict

    @classmethod
    def build(cls, file_values: dict, overrides: dict) -> "RunConfig":
        raw = {k: d for k, (_, d) in KEYS.items() if d is not None}
        raw.update(file_values)
        raw.update({k: v for k, v in overrides.items() if v is not None})
        parsed = {}
        for key, value in raw.items():
            parser, _ = KEYS[key]
            try:
                parsed[key] = parser(key, value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, f"{key}: {exc}") from None
        return cls(parsed)

    def get(self, key):
        return self.values.get(key)

    def budget(self) -> alloc.PowerBudget:
        return alloc.PowerBudget(self.values["p1_bar"], self.values["p2_bar"])

    def link(self, name):
        kind = self.values[f"fading.{name}.kind"]
        key = f"fading.{name}.param"
        param = self.values[key]
        try:
            if kind == "rayleigh":
                return Rayleigh(_positive(key, param))
            if kind == "fixed":
                return Fixed(_nonneg(key, param))
            pairs = [item.split(":") for item in str(param).split(",") if item.strip()]
            return Empirical(tuple(float(a) for a, _ in pairs), tuple(float(p) for _, p in pairs))
        except ValueError as exc:
            raise ConfigError(key, f"{key}: {exc}") from None

    def fading(self) -> FadingModel:
        return FadingModel(*(self.link(name) for name in LINKS))

    def integrator(self) -> IntegratorSpec:
        return IntegratorSpec(
            kind=self.values["integrator.kind"],
            samples=self.values["integrator.samples"],
            seed=self.values["integrator.seed"],
            nodes=self.values["integrator.nodes"],
        )

    def operating_point(self):
        """``(s1, t)`` from explicit keys or from fixed link amplitudes."""
        s1, t = self.values.get("s1"), self.values.get("t")
        if s1 is not None and t is not None:
            return s1, t
        links = [self.link(name) for name in LINKS]
        if all(isinstance(d, Fixed) for d in links) and links[0].value > 0:
            s1_, t_, _ = alloc.snr_of((links[0].value, links[1].value, links[2].value), self.values["p1_bar"])
            return (s1 if s1 is not None else s1_), (t if t is not None else t_)
        raise ConfigError("s1" if s1 is None else "t", "s1 and t must be given or derivable from fixed links")


def _protocols(cfg, default):
    chosen = cfg.get("protocol") or default
    return ["df", "cf", "hybrid"] if chosen == "all" else [chosen]


def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def cmd_rates(cfg: RunConfig, args) -> str:
    s1, t = cfg.operating_point()
    cross = crossover_f(s1, t)
    default_max = 2.0 * cross if np.isfinite(cross) else 10.0 * max(s1, 1.0)
    s2 = np.linspace(0.0, cfg.get("grid.s2_max") or default_max, cfg.get("grid.points"))
    if s1 > 0:
        env = envelope_rate(s2, build_envelope(s1, t))
    else:
        env = rate_hybrid(s1, t, s2)
    cols = [
        s2, rate_df(s1, t, s2), rate_cf(s1, t, s2), rate_hybrid(s1, t, s2), env,
        d_rate_df(s1, t, s2, "left"), d_rate_df(s1, t, s2, "right"), d_rate_cf(s1, t, s2),
    ]
    header = ["s2", "rate_df", "rate_cf", "rate_hybrid", "rate_envelope", "d_df_left", "d_df_right", "d_cf"]
    return _csv(zip(*(np.atleast_1d(c) for c in cols)), header)


def cmd_envelope(cfg: RunConfig, args) -> str:
    s1, t = cfg.operating_point()
    if s1 <= 0:
        raise ConfigError("s1", "s1 must be positive to build an envelope")
    geom = build_envelope(s1, t)
    lines = [f"s1={fmt(s1)}", f"t={fmt(t)}"]
    if geom.degenerate:
        lines.append("degenerate: CF dominates")
    else:
        lines += [f"s_d={fmt(geom.s_d)}", f"s_c={fmt(geom.s_c)}", f"k={fmt(geom.k)}", "degenerate=false"]
    if args.curve:
        top = cfg.get("grid.s2_max") or (2.0 * float(geom.s_c) if not geom.degenerate else 10.0 * max(s1, 1.0))
        s2 = np.linspace(0.0, top, cfg.get("grid.points"))
        _write(args.curve, _csv(zip(s2, rate_hybrid(s1, t, s2), envelope_rate(s2, geom)),
                                ["s2", "rate_hybrid", "rate_envelope"]))
    return "\n".join(lines) + "\n"


def _solve_all(cfg, protocols):
    budget = cfg.budget()
    fading = cfg.fading()
    integrator = cfg.integrator()
    states = states_from_fading(fading, integrator)
    for name in protocols:
        policy = alloc.solve_mu(name, budget, fading, integrator, states=states)
        yield name, policy, alloc.average_rate(policy), states


def cmd_allocate(cfg: RunConfig, args) -> str:
    rows, state_rows = [], []
    for name, policy, rate, states in _solve_all(cfg, _protocols(cfg, "hybrid")):
        power = policy.achieved_power
        rows.append([name, policy.mu_star, power.value, _se(power.stderr), rate.value, _se(rate.stderr),
                     policy.saturated, policy.budget_slack])
        if args.states:
            amps = states.amplitudes
            p2, s2 = policy.allocate(amps[:, 0], amps[:, 1], amps[:, 2])
            for i, (a, w) in enumerate(zip(amps, states.weights)):
                state_rows.append([name, str(i), a[0], a[1], a[2], w, s2[i], p2[i]])
    if args.states:
        _write(args.states, _csv(state_rows, ["protocol", "state", "a31", "a21", "a32", "weight", "s2", "p2"]))
    header = ["protocol", "mu_star", "expected_power", "power_stderr", "average_rate", "rate_stderr",
              "saturated", "budget_slack"]
    return _csv(rows, header)


def cmd_simulate(cfg: RunConfig, args) -> str:
    budget = cfg.budget()
    rows = []
    for name, policy, rate, states in _solve_all(cfg, _protocols(cfg, "all")):
        fixed = alloc.fixed_power_baseline(budget, None, name, states=states)
        rows.append([name, "fixed", fixed.value, budget.p2_bar, 0.0])
        rows.append([name, "allocated", rate.value, policy.achieved_power.value, rate.value - fixed.value])
    return _csv(rows, ["protocol", "mode", "avg_rate", "mean_power", "gain"])


def _se(x):
    return math.nan if x is None else x


def _write(path, text):
    """Write ``text`` to ``path`` atomically."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".relaypower-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


COMMANDS = {
    "rates": cmd_rates,
    "envelope": cmd_envelope,
    "allocate": cmd_allocate,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaypower", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help="write the main output to this file instead of stdout")
        for key in KEYS:
            flag = key.replace(".", "-")
            names = [f"--{flag}"]
            if "_" in flag:
                names.append(f"--{flag.replace('_', '-')}")
            p.add_argument(*names, dest=key, default=None, metavar="VALUE")
        if name == "envelope":
            p.add_argument("--curve", help="also write the envelope curve as CSV here")
        if name == "allocate":
            p.add_argument("--states", help="also write per-state S2/P2 as CSV here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = RunConfig.build(file_values, {k: getattr(args, k) for k in KEYS})
        text = COMMANDS[args.command](cfg, args)
        if args.out:
            _write(args.out, text)
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        print(f"error: key={exc.key} {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
