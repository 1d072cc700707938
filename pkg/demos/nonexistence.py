"""Gaussian probes of boundedness from below.

Shrinking Gaussians are evaluated in closed form, so no grid limits how
narrow they get. Above the critical power the energy collapses; for
dav = 0 any power above 6 collapses like sigma0^(-1/2).
"""
import numpy as np

from dmsolve import nonexistence_probe, uniform01


def main():
    mu = uniform01(64)
    cases = [(12.0, 1.0), (10.0, 1.0), (8.0, 1.0), (6.0, 1.0), (4.0, 1.0), (8.0, 0.0), (6.0, 0.0)]
    print(" gamma  dav   min H           unbounded")
    for gamma, dav in cases:
        rep = nonexistence_probe(gamma, 1.0, dav, 1.0, mu)
        print(f"{gamma:6.0f} {dav:4.0f}   {rep.minimum: .6e}   {rep.unbounded}")
    rep = nonexistence_probe(8.0, 1.0, 0.0, 1.0, mu, np.geomspace(1e-2, 1e-4, 41))
    print(f"gamma=8, dav=0: log-log slope of |H| {rep.slope(1e-4, 1e-2):.6f}")


if __name__ == "__main__":
    main()
