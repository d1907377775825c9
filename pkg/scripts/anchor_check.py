"""Madrid-Sevilla key capacity at n = 0 for a few distance scalings.

Also reports the constant excess noise that would make the model return
given target capacities, to help compare against external reference values.

Usage: python3 scripts/anchor_check.py [--target LAMBDA=BPS ...]
"""

import argparse

from cvqkd_wdm.cvqkd_model import QkdParams, optimal_secret_fraction, transmittance
from cvqkd_wdm.network import build_spanish_topology


def capacity(length_km: float, xi: float, params: QkdParams) -> float:
    return params.f_sym * optimal_secret_fraction(transmittance(length_km, params), xi, params).r


def fit_xi(length_km: float, target_bps: float, params: QkdParams) -> float:
    """Bisect for the excess noise at which the capacity equals ``target_bps``."""
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if capacity(length_km, mid, params) > target_bps else (lo, mid)
    return 0.5 * (lo + hi)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--target", action="append", default=[], metavar="LAMBDA=BPS")
    args = ap.parse_args()
    targets = dict((float(a), float(b)) for a, b in (t.split("=") for t in args.target))

    params = QkdParams()
    print("lambda,length_km,capacity_bps,target_bps,xi_fit")
    for lam in sorted({0.01, 0.02, 0.05, 0.1, 0.2, *targets}):
        length = build_spanish_topology(lam).link_by_pair[(1, 7)].scaled_length_km
        cap = capacity(length, params.xi_0, params)
        target = targets.get(lam)
        fit = "" if target is None or target <= 0 else f"{fit_xi(length, target, params):.5g}"
        print(f"{lam:g},{length:.4g},{cap:.0f},{'' if target is None else f'{target:.0f}'},{fit}")


if __name__ == "__main__":
    main()
