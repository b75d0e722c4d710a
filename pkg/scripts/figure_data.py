#!/usr/bin/env python3
"""Emit the CSV data behind the standard plots.

Writes four files into --outdir:

  landscape.csv        key rate over pump power x coincidence window,
                       28-pair plan on the lab instrument
  linkbudget_snspd.csv key rate vs dual-link attenuation, SNSPD downlink,
                       with published reference rows appended
  linkbudget_spad.csv  same sweep for the SPAD downlink
  car_vs_channels.csv  per-channel CAR and key rate as the flux is split
                       over more and more demux channels

Everything routes through the command-line tool so the files carry the
same resolved-config comment block as any other run.
"""
import argparse
import csv
import os
import sys

from qlink.cli import main as qlink_main
from qlink.demux import build_channel_plan
from qlink.scenario import evaluate, load_preset


def car_vs_channels(path):
    lab = load_preset("lab")
    from dataclasses import replace

    rows = []
    for pairs in (1, 2, 4, 8, 16, 28):
        plan = build_channel_plan(lab.source.pump_wavelength_nm, 75.0, 300.0, pairs)
        preset = replace(lab, plan=plan)
        for demux_on in (False, True):
            result = evaluate(preset, demux_on)
            totals = result.rates.totals
            per_channel = result.rates.pairs[0]
            rows.append([
                2 * pairs, demux_on, repr(per_channel.car), repr(totals.car),
                repr(totals.qber), repr(result.keys.skr_total),
            ])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["channels", "demux_on", "car_per_channel", "car_total", "qber", "skr"])
        writer.writerows(rows)


def run(argv):
    code = qlink_main(argv)
    if code != 0:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", default="figure_data")
    parser.add_argument("--steps", type=int, default=60, help="grid resolution for the landscape")
    args = parser.parse_args()
    os.makedirs(args.outdir, exist_ok=True)

    run([
        "sweep", "--preset", "lab",
        "--set", "channel_plan.num_pairs=28",
        "--axis", f"pump_power_mw:5:30:{args.steps}",
        "--axis", f"window_ns:0.2:3.0:{args.steps}",
        "--out", os.path.join(args.outdir, "landscape.csv"),
    ])
    for preset in ("snspd", "spad"):
        run([
            "linkbudget", "--preset", f"downlink-{preset}",
            "--from", "30", "--to", "75", "--steps", "46", "--overlay",
            "--out", os.path.join(args.outdir, f"linkbudget_{preset}.csv"),
        ])
    car_vs_channels(os.path.join(args.outdir, "car_vs_channels.csv"))
    print(f"wrote 4 files to {args.outdir}/")


if __name__ == "__main__":
    main()
