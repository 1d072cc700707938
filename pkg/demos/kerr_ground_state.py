"""Kerr ground state for the model dispersion profile.

Minimizes H over ||f||^2 = 1 with dav = 1, then compares the result with
the best Gaussian and checks the optimality conditions.
"""
import numpy as np

from dmsolve import (GaussianParams, MinimizeConfig, evaluate_H, gaussian_field, kerr, minimize,
                     model_profile, pushforward_measure)


def main():
    mu = pushforward_measure(model_profile(), 64)
    cfg = MinimizeConfig(lam=1.0, dav=1.0)
    res = minimize(cfg, mu, kerr())
    gauss = {s: evaluate_H(gaussian_field(GaussianParams(1.0, s), cfg.grid), 1.0, mu, kerr())
             for s in (1.0, 2.0, 4.0, 8.0)}
    print("Gaussian energies:", {s: round(e, 6) for s, e in gauss.items()})
    print(f"minimizer energy  {res.energy:.10f}")
    print(f"multiplier omega  {res.omega:.8f}   (2E/lambda = {2 * res.energy:.8f})")
    print(f"EL residual       {res.el_residual:.2e}")
    print(f"r-quadrature gap  {res.quad_error:.1e}")
    peak = np.abs(res.field.values).max()
    print(f"peak |f|          {peak:.6f}")
    for row in res.restarts:
        print("  restart", row)


if __name__ == "__main__":
    main()
