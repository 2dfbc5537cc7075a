"""Compare the two forms of the limiting covariance Sigma with a simulation.

The printed form can be indefinite when the long-run correlation is large; the
corrected form is what the scaled Hessian converges to. This script prints both
and a Monte Carlo mean of the scaled Hessian at the true parameter.

Run with ``python demos/sigma_audit.py`` (about half a minute).
"""
import warnings

import numpy as np

from mlwhittle.inference import ScalingDelta, SigmaAuditWarning, sigma_matrix
from mlwhittle.model import implied_farima_params
from mlwhittle.simulate import SystemSpec, mix_seed, paper_farima, simulate_system
from mlwhittle.whittle import ObjectiveContext, default_m, hessian


def main() -> None:
    np.set_printoptions(suppress=True)
    omega = np.array([[1.0, 1.6], [1.6, 4.0]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SigmaAuditWarning)
        printed = sigma_matrix(0.3, 0.3, omega, form="printed")
    corrected = sigma_matrix(0.3, 0.3, omega)
    print("rho = 0.8, nu = 0.3, gamma = 0.3")
    print("  printed eigenvalues:  ", np.round(printed.audit()["eigenvalues"], 3))
    print("  corrected eigenvalues:", np.round(np.linalg.eigvalsh(corrected.matrix), 3))

    n, reps = 8192, 100
    m = default_m(n)
    spec = paper_farima((0.1, 0.3), rho=0.5, ar_coeff=0.0)
    gamma0, om = implied_farima_params(spec)
    D = ScalingDelta(0.2, 2 * np.pi * m / n).diag
    H = np.mean([hessian(ObjectiveContext.from_series(
        simulate_system(SystemSpec(spec, 1.0, mix_seed(1, r)), n), m), [1.0, gamma0, 0.1, 0.3])
        / np.outer(D, D) for r in range(reps)], axis=0)
    print(f"\nscaled Hessian mean over {reps} draws (n = {n}, m = {m}):")
    print(np.round(H, 3))
    print("corrected Sigma:")
    print(np.round(sigma_matrix(gamma0, 0.2, om).matrix, 3))


if __name__ == "__main__":
    main()
