"""Command-line front end.

Subcommands evaluate a named preset (optionally reshaped by a flat
`section.key = value` config file and --set overrides) and write
deterministic CSV: a sorted comment block with the fully resolved
configuration, then a header row, then data rows. Floats are written
with repr so files round-trip bit-exactly; no timestamps are embedded.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import replace

from . import __version__
from .coincidence import ArmEfficiency, DetectorSpec, PairRates, jitter_sigma_from_fwhm
from .core import SPECTRUM_KINDS, SpectralShape
from .demux import build_channel_plan
from .montecarlo import (
    MCConfig,
    channel_sim_config,
    compare_with_analytic,
    dump_time_tags,
    reduce_streams,
    run_channel_pair,
    simulate_channel_pair,
    simulate_plan,
)
from .qkd import KeyRateParams
from .scenario import (
    MICIUS_BAND_DB,
    MICIUS_SKR_BPS,
    ScenarioPreset,
    SweepAxis,
    SweepSpec,
    evaluate,
    link_budget,
    load_preset,
    optimize,
    plan_summary,
    preset_names,
    run_sweep,
)
from .source import SourceSpec

log = logging.getLogger("qlink")


class ConfigError(Exception):
    pass


def _float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} expects a number, got {raw!r}") from None


def _int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key} expects an integer, got {raw!r}") from None


def _kind(raw: str, key: str) -> str:
    if raw not in SPECTRUM_KINDS:
        raise ConfigError(f"{key} must be one of {', '.join(SPECTRUM_KINDS)}, got {raw!r}")
    return raw


def _optional_float(raw: str, key: str) -> float | None:
    if raw.lower() in ("none", ""):
        return None
    return _float(raw, key)


KNOWN_KEYS = {
    "source.brightness_pairs_per_s_per_mw": _float,
    "source.pump_power_mw": _float,
    "source.pump_wavelength_nm": _float,
    "source.visibility": _float,
    "source.spectrum_kind": _kind,
    "source.spectrum_fwhm_nm": _float,
    "channel_plan.bandwidth_pm": _float,
    "channel_plan.spacing_pm": _float,
    "channel_plan.num_pairs": _int,
    "channel_plan.efficiency": _float,
    "channel_plan.span_nm": _optional_float,
    "arm.optics": _float,
    "arm.fiber_coupling": _float,
    "arm.demux_insertion": _float,
    "link.attenuation_db": _float,
    "detector.efficiency": _float,
    "detector.jitter_sigma_ns": _float,
    "detector.jitter_fwhm_ns": _float,
    "detector.dead_time_ns": _float,
    "detector.dark_rate_cps": _float,
    "coincidence.window_ns": _float,
    "keyrate.sifting_factor": _float,
    "keyrate.error_correction_inefficiency": _float,
}


def parse_config_text(text: str, origin: str) -> dict[str, str]:
    """Flat `section.key = value` lines; `#` starts a comment."""
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{origin}:{lineno}: expected 'section.key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if "." not in key:
            raise ConfigError(f"{origin}:{lineno}: key {key!r} is missing its section prefix")
        entries[key] = raw
    return entries


def collect_overrides(args: argparse.Namespace) -> dict[str, str]:
    entries: dict[str, str] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        entries.update(parse_config_text(text, args.config))
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = (part.strip() for part in item.split("=", 1))
        entries[key] = raw
    return entries


def assemble_preset(name: str, overrides: dict[str, str]) -> ScenarioPreset:
    base = load_preset(name) if name in preset_names() else None
    if base is None:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")

    vals: dict[str, object] = {}
    for key, raw in overrides.items():
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        vals[key] = KNOWN_KEYS[key](raw, key)
    if "detector.jitter_sigma_ns" in vals and "detector.jitter_fwhm_ns" in vals:
        raise ConfigError("set either detector.jitter_sigma_ns or detector.jitter_fwhm_ns, not both")

    try:
        return _build(base, vals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build(base: ScenarioPreset, vals: dict[str, object]) -> ScenarioPreset:
    def pick(key: str, fallback):
        return vals.get(key, fallback)

    pump_wl = pick("source.pump_wavelength_nm", base.source.pump_wavelength_nm)
    spectrum = SpectralShape(
        pick("source.spectrum_kind", base.source.spectrum.kind),
        2.0 * pump_wl,
        pick("source.spectrum_fwhm_nm", base.source.spectrum.fwhm_nm),
        1.0,
    )
    source = SourceSpec(
        brightness_pairs_per_s_per_mw=pick(
            "source.brightness_pairs_per_s_per_mw", base.source.brightness_pairs_per_s_per_mw
        ),
        pump_power_mw=pick("source.pump_power_mw", base.source.pump_power_mw),
        pump_wavelength_nm=pump_wl,
        spectrum=spectrum,
        visibility=pick("source.visibility", base.source.visibility),
    )
    plan = build_channel_plan(
        pump_wl,
        pick("channel_plan.bandwidth_pm", base.plan.bandwidth_pm),
        pick("channel_plan.spacing_pm", base.plan.spacing_pm),
        pick("channel_plan.num_pairs", base.plan.num_pairs),
        pick("channel_plan.efficiency", base.plan.pairs[0].efficiency if base.plan.pairs else 1.0),
        pick("channel_plan.span_nm", None),
    )
    if "detector.jitter_fwhm_ns" in vals:
        jitter = jitter_sigma_from_fwhm(vals["detector.jitter_fwhm_ns"])
    else:
        jitter = pick("detector.jitter_sigma_ns", base.det_a.jitter_sigma_ns)
    det = DetectorSpec(
        efficiency=pick("detector.efficiency", base.det_a.efficiency),
        jitter_sigma_ns=jitter,
        dead_time_ns=pick("detector.dead_time_ns", base.det_a.dead_time_ns),
        dark_rate_cps=pick("detector.dark_rate_cps", base.det_a.dark_rate_cps),
    )
    dual_db = pick("link.attenuation_db", base.arm_a.link_attenuation_db + base.arm_b.link_attenuation_db)
    arm = ArmEfficiency(
        optics=pick("arm.optics", base.arm_a.optics),
        fiber_coupling=pick("arm.fiber_coupling", base.arm_a.fiber_coupling),
        demux_insertion=pick("arm.demux_insertion", base.arm_a.demux_insertion),
        link_attenuation_db=dual_db / 2.0,
        detector=det.efficiency,
    )
    params = KeyRateParams(
        sifting_factor=pick("keyrate.sifting_factor", base.key_params.sifting_factor),
        error_correction_inefficiency=pick(
            "keyrate.error_correction_inefficiency", base.key_params.error_correction_inefficiency
        ),
    )
    return ScenarioPreset(
        base.name,
        source,
        plan,
        arm,
        arm,
        det,
        det,
        pick("coincidence.window_ns", base.window_ns),
        params,
    )


def resolved_config(preset: ScenarioPreset, extra: dict[str, object] | None = None) -> dict[str, str]:
    """The fully resolved configuration, one flat key per knob."""
    rc = {
        "tool_version": __version__,
        "preset": preset.name,
        "source.brightness_pairs_per_s_per_mw": repr(preset.source.brightness_pairs_per_s_per_mw),
        "source.pump_power_mw": repr(preset.source.pump_power_mw),
        "source.pump_wavelength_nm": repr(preset.source.pump_wavelength_nm),
        "source.visibility": repr(preset.source.visibility),
        "source.spectrum_kind": preset.source.spectrum.kind,
        "source.spectrum_fwhm_nm": repr(preset.source.spectrum.fwhm_nm),
        "channel_plan.bandwidth_pm": repr(preset.plan.bandwidth_pm),
        "channel_plan.spacing_pm": repr(preset.plan.spacing_pm),
        "channel_plan.num_pairs": str(preset.plan.num_pairs),
        "channel_plan.efficiency": repr(preset.plan.pairs[0].efficiency if preset.plan.pairs else 1.0),
        "arm.optics": repr(preset.arm_a.optics),
        "arm.fiber_coupling": repr(preset.arm_a.fiber_coupling),
        "arm.demux_insertion": repr(preset.arm_a.demux_insertion),
        "link.attenuation_db": repr(preset.arm_a.link_attenuation_db + preset.arm_b.link_attenuation_db),
        "detector.efficiency": repr(preset.det_a.efficiency),
        "detector.jitter_sigma_ns": repr(preset.det_a.jitter_sigma_ns),
        "detector.dead_time_ns": repr(preset.det_a.dead_time_ns),
        "detector.dark_rate_cps": repr(preset.det_a.dark_rate_cps),
        "coincidence.window_ns": repr(preset.window_ns),
        "keyrate.sifting_factor": repr(preset.key_params.sifting_factor),
        "keyrate.error_correction_inefficiency": repr(preset.key_params.error_correction_inefficiency),
    }
    for key, value in (extra or {}).items():
        rc[key] = value if isinstance(value, str) else repr(value) if isinstance(value, float) else str(value)
    return rc


def _cell(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_csv(out_path: str | None, resolved: dict[str, str], header: list[str], rows: list[list]) -> None:
    fh = sys.stdout if out_path in (None, "-") else open(out_path, "w", newline="", encoding="ascii")
    try:
        for key in sorted(resolved):
            fh.write(f"# {key} = {resolved[key]}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


RATE_COLUMNS = ["singles_a", "singles_b", "trues", "accidentals", "car", "visibility", "qber"]


def _rate_cells(p: PairRates) -> list[float]:
    return [p.singles_a, p.singles_b, p.trues, p.accidentals, p.car, p.visibility, p.qber]


def _parse_axis(raw: str) -> SweepAxis:
    parts = raw.split(":")
    if len(parts) != 4:
        raise ConfigError(f"--axis expects NAME:START:STOP:STEPS, got {raw!r}")
    name = parts[0].strip()
    try:
        axis = SweepAxis(name, float(parts[1]), float(parts[2]), int(parts[3]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return axis


def cmd_rates(preset: ScenarioPreset, args: argparse.Namespace) -> int:
    result = evaluate(preset, demux_on=not args.no_demux)
    rows = [[i + 1] + _rate_cells(p) + [k.sifted, k.skr]
            for i, (p, k) in enumerate(zip(result.rates.pairs, result.keys.channels))]
    rows.append(["total"] + _rate_cells(result.rates.totals)
                + [result.keys.sifted_total, result.keys.skr_total])
    write_csv(
        args.out,
        resolved_config(preset, {"demux_on": not args.no_demux}),
        ["pair"] + RATE_COLUMNS + ["sifted", "skr"],
        rows,
    )
    return 0


def cmd_sweep(preset: ScenarioPreset, args: argparse.Namespace) -> int:
    axes = tuple(_parse_axis(a) for a in args.axis)
    try:
        spec = SweepSpec(axes, demux_on=not args.no_demux)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    points = run_sweep(preset, spec)
    header = [a.name for a in axes] + ["demux_on"] + RATE_COLUMNS + ["sifted", "skr"]
    rows = [list(p.values) + [p.demux_on] + _rate_cells(p.totals) + [p.sifted, p.skr] for p in points]
    write_csv(args.out, resolved_config(preset, {"demux_on": not args.no_demux}), header, rows)
    return 0


def cmd_optimize(preset: ScenarioPreset, args: argparse.Namespace) -> int:
    axes = tuple(_parse_axis(a) for a in args.axis)
    try:
        spec = SweepSpec(axes, demux_on=not args.no_demux)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    result = optimize(preset, spec, args.objective)
    if result.no_positive_rate:
        log.warning("no grid point yields a positive rate; reporting the first point")
    extra = {
        "demux_on": not args.no_demux,
        "objective": args.objective,
        "no_positive_rate": result.no_positive_rate,
    }
    header = [a.name for a in axes] + ["demux_on"] + RATE_COLUMNS + ["sifted", "skr"]
    p = result.best
    rows = [list(p.values) + [p.demux_on] + _rate_cells(p.totals) + [p.sifted, p.skr]]
    write_csv(args.out, resolved_config(preset, extra), header, rows)
    return 0


def cmd_linkbudget(preset: ScenarioPreset, args: argparse.Namespace) -> int:
    if args.steps < 2:
        raise ConfigError(f"--steps must be at least 2, got {args.steps}")
    if args.start_db >= args.stop_db:
        raise ConfigError(f"need --from < --to, got {args.start_db} >= {args.stop_db}")
    rows = []
    for row in link_budget(preset, args.start_db, args.stop_db, args.steps, demux_on=not args.no_demux):
        rows.append(["model", row.attenuation_db] + _rate_cells(row.totals) + [row.skr])
    if args.overlay:
        for db in MICIUS_BAND_DB:
            rows.append(["reference", db, "", "", "", "", "", "", "", MICIUS_SKR_BPS])
    extra = {"demux_on": not args.no_demux, "overlay": args.overlay}
    write_csv(args.out, resolved_config(preset, extra),
              ["series", "attenuation_db"] + RATE_COLUMNS + ["skr"], rows)
    return 0


def cmd_plan(preset: ScenarioPreset, args: argparse.Namespace) -> int:
    rows = [
        [r.index, r.signal_center_nm, r.idler_center_nm, r.band_fraction, r.capture_fraction]
        for r in plan_summary(preset)
    ]
    extra = {"conjugacy_residual_nm": preset.plan.conjugacy_residual_nm()}
    write_csv(args.out, resolved_config(preset, extra),
              ["pair", "signal_center_nm", "idler_center_nm", "band_fraction", "capture_fraction"], rows)
    return 0


def cmd_mc(preset: ScenarioPreset, args: argparse.Namespace) -> int:
    if args.duration <= 0:
        raise ConfigError(f"--duration must be > 0 s, got {args.duration}")
    mcfg = MCConfig(duration_s=args.duration, seed=args.seed)
    num_pairs = preset.plan.num_pairs
    if not 0 <= args.channel <= num_pairs:
        raise ConfigError(f"--channel must be 0 (all) or 1..{num_pairs}, got {args.channel}")

    header = ["channel", "statistic", "observed", "expected", "sigma", "z"]
    rows: list[list] = []
    if args.channel == 0:
        if args.dump:
            raise ConfigError("--dump needs a single --channel")
        configs = {
            k: channel_sim_config(
                preset.source, preset.plan, k, preset.arm_a, preset.arm_b,
                preset.det_a, preset.det_b, preset.window_ns,
            )
            for k in range(1, num_pairs + 1)
        }
        reports = simulate_plan(configs, mcfg)
        for k in sorted(reports):
            for c in compare_with_analytic(configs[k], reports[k]):
                rows.append([k, c.statistic, c.observed, c.expected, c.sigma, c.z])
    else:
        cfg = channel_sim_config(
            preset.source, preset.plan, args.channel, preset.arm_a, preset.arm_b,
            preset.det_a, preset.det_b, preset.window_ns,
        )
        streams = simulate_channel_pair(cfg, mcfg, args.channel)
        report = reduce_streams(cfg, mcfg, streams)
        if args.dump:
            dump_time_tags(args.dump, cfg, mcfg, streams)
            log.info("wrote %d time tags to %s", len(streams[0]) + len(streams[1]), args.dump)
        for c in compare_with_analytic(cfg, report):
            rows.append([args.channel, c.statistic, c.observed, c.expected, c.sigma, c.z])

    extra = {"duration_s": args.duration, "seed": args.seed, "channel": args.channel}
    write_csv(args.out, resolved_config(preset, extra), header, rows)
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--preset", default="lab", help="instrument preset (%s)" % ", ".join(preset_names()))
    sub.add_argument("--config", help="flat section.key = value config file")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    sub.add_argument("--out", help="output CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlink",
        description="Coincidence statistics and key-rate landscapes for a "
                    "frequency-multiplexed entangled pair source.",
    )
    parser.add_argument("--version", action="version", version=f"qlink {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("rates", help="per-channel and total rates at the working point")
    _add_common(p)
    p.add_argument("--no-demux", action="store_true", help="route the full flux to one channel pair")
    p.set_defaults(func=cmd_rates)

    p = subs.add_parser("sweep", help="rates over a one- or two-axis grid")
    _add_common(p)
    p.add_argument("--axis", action="append", required=True, metavar="NAME:START:STOP:STEPS",
                   help="sweep axis, repeatable (max 2): pump_power_mw, window_ns, attenuation_db")
    p.add_argument("--no-demux", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("optimize", help="best grid point for an objective")
    _add_common(p)
    p.add_argument("--axis", action="append", required=True, metavar="NAME:START:STOP:STEPS")
    p.add_argument("--objective", choices=("skr", "qber"), default="skr")
    p.add_argument("--no-demux", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = subs.add_parser("linkbudget", help="key rate against dual-link attenuation")
    _add_common(p)
    p.add_argument("--from", dest="start_db", type=float, default=30.0, help="first attenuation, dB")
    p.add_argument("--to", dest="stop_db", type=float, default=75.0, help="last attenuation, dB")
    p.add_argument("--steps", type=int, default=46)
    p.add_argument("--overlay", action="store_true", help="append published reference rows")
    p.add_argument("--no-demux", action="store_true")
    p.set_defaults(func=cmd_linkbudget)

    p = subs.add_parser("plan", help="channel placement and spectral capture")
    _add_common(p)
    p.set_defaults(func=cmd_plan)

    p = subs.add_parser("mc", help="event-level simulation checked against the rate model")
    _add_common(p)
    p.add_argument("--duration", type=float, default=0.1, help="simulated time, seconds")
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--channel", type=int, default=1, help="channel pair index, 0 for all")
    p.add_argument("--dump", help="write time tags to this path")
    p.set_defaults(func=cmd_mc)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        preset = assemble_preset(args.preset, collect_overrides(args))
        for key, value in sorted(resolved_config(preset).items()):
            log.info("resolved %s = %s", key, value)
        return args.func(preset, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
