"""Reproduce one Monte Carlo cell of the rejection-frequency table.

Runs 200 replications of the (0.05, 0.45), rho = 0.75 design at n = 512 and
prints the summary table. Results are identical for any thread count.

Run with ``python demos/rejection_table_cell.py`` (about a minute).
"""
from mlwhittle import mc


def main() -> None:
    cfg = mc.McConfig(delta0=(0.05, 0.45), rho=0.75, n_list=(512,), m_rule=64, reps=200, seed=2024)
    print(mc.summarize(mc.run(cfg, workers=2)))


if __name__ == "__main__":
    main()
