"""Estimate a fractionally cointegrated pair and test the usual hypotheses.

Simulates y = x + u1 with a persistent regressor x = u2, fits the local Whittle
estimator, and prints estimates, standard errors and Wald tests.

Run with ``python demos/estimation_walkthrough.py``.
"""
import numpy as np

from mlwhittle.inference import confidence_intervals, named_hypothesis, standard_errors, wald_test
from mlwhittle.model import implied_farima_params
from mlwhittle.simulate import SystemSpec, paper_farima, simulate_system
from mlwhittle.whittle import default_m, estimate


def main() -> None:
    n = 4096
    # no short-memory factor, so the whole band carries the power law
    spec = paper_farima((0.1, 0.4), rho=0.6, ar_coeff=0.0)
    z = simulate_system(SystemSpec(spec, beta0=1.0, seed=42), n)
    gamma0, omega0 = implied_farima_params(spec)
    truth = np.array([1.0, gamma0, 0.1, 0.4])

    m = default_m(n)
    res = estimate(z, m)
    se = standard_errors(res)
    ci = confidence_intervals(res)

    print(f"n = {n}, m = {m}, converged = {res.converged}, boundary = {res.boundary_hit}")
    print(f"{'param':>7} {'true':>8} {'estimate':>9} {'se':>8}   95% interval")
    for k, name in enumerate(("beta", "gamma", "delta1", "delta2")):
        est = res.theta_hat.as_array()[k]
        print(f"{name:>7} {truth[k]:8.4f} {est:9.4f} {se[k]:8.4f}   [{ci[k, 0]:.4f}, {ci[k, 1]:.4f}]")
    print(f"Omega_hat: w11 = {res.omega_hat.w11:.4f}, w12 = {res.omega_hat.w12:.4f}, w22 = {res.omega_hat.w22:.4f} "
          f"(true {omega0.w11:.4f}, {omega0.w12:.4f}, {omega0.w22:.4f})")

    # beta = 0 should be rejected; the FARIMA phase nu pi/2 should not
    for h in ("no-cointegration", "purely-nondeterministic", "short-memory-error"):
        w = wald_test(res, *named_hypothesis(h), name=h)
        print(f"{h:>24}: W = {w.statistic:9.3f}  p = {w.p_value:.4f}")


if __name__ == "__main__":
    main()
