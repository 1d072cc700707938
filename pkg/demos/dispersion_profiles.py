"""From a dispersion profile to the measure on accumulated dispersion."""
import numpy as np

from dmsolve import DispersionProfile, density_at, model_profile, pushforward_measure
from dmsolve.profiles import density_lp_norm


def main():
    profiles = {
        "model (+1, -1)": model_profile(),
        "two-level (+2, -2)": DispersionProfile([(2.0, 1.0), (-2.0, 1.0)]),
        "asymmetric (+2 for 1, -1 for 2)": DispersionProfile([(2.0, 1.0), (-1.0, 2.0)]),
    }
    for name, prof in profiles.items():
        mu = pushforward_measure(prof, 32)
        lo, hi = prof.support()
        rs = np.linspace(lo, hi, 7)[1:-1]
        psi = [density_at(prof, r, strict=False) for r in rs]
        print(f"{name}: support [{lo}, {hi}], mean r {mu.mean():.12f}, "
              f"||psi||_2 {density_lp_norm(prof, 2):.6f}")
        print("   psi at", np.round(rs, 3).tolist(), "=", psi)


if __name__ == "__main__":
    main()
