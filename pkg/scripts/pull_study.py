"""Repeat one HOM configuration over many seeds and summarise the fit pulls.

A well-calibrated fit gives pulls with mean near 0 and spread near 1.
"""

import argparse

import numpy as np

from homsync.coincidence import HomScenario, run_hom
from homsync.jitterchain import JitterStage, SyncChain
from homsync.pairsource import PhotonSource
from homsync.wavepacket import PulseShape, Spectrum


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=0.1)
    ap.add_argument("--jitter", type=float, default=50.0)
    ap.add_argument("--overlap", type=float, default=1.0)
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--step", type=float, default=20.0)
    ap.add_argument("--pulses", type=int, default=100_000)
    args = ap.parse_args(argv)

    src = PhotonSource(PulseShape.delta(), Spectrum(775.0, 1e9), Spectrum(1548.0, 30.0), args.p, "thermal")
    chain = SyncChain((JitterStage("trigger", args.jitter),)) if args.jitter > 0 else SyncChain()
    delays = np.arange(-600.0, 600.0 + args.step / 2, args.step)
    pv, pw = [], []
    for seed in range(args.seeds):
        r = run_hom(HomScenario(src, src, delays, chain, args.overlap, pulses_per_point=args.pulses, seed=seed))
        pv.append((r.net_visibility - r.prediction.expected_visibility) / r.net_visibility_error)
        pw.append((r.dip_fwhm - r.prediction.dip_fwhm) / r.dip_fwhm_error)
    for label, x in (("visibility", pv), ("fwhm", pw)):
        x = np.asarray(x)
        print(f"{label} pull: mean {x.mean():+.2f}  std {x.std(ddof=1):.2f}  max |pull| {np.abs(x).max():.2f}")


if __name__ == "__main__":
    main()
