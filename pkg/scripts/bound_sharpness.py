"""Calibrate lambda_L, then compare the LASSO recovery rate with the upper bound over t.

At large t the recovery rate should approach the bound; below the
irrepresentability transition (k=20 on the reference matrix) recovery stays
near zero whatever t is.

    python scripts/bound_sharpness.py --k 5 --replicates 1000 --out sharpness.csv
"""
import argparse

from signrec.experiments import DEFAULT_T_GRID, ExperimentPlan, resolve_tuning, run_cell, write_results


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--setting", default="setting1", choices=["setting1", "setting2"])
    ap.add_argument("--k", type=int, nargs="+", default=[5, 20])
    ap.add_argument("--replicates", type=int, default=1000)
    ap.add_argument("--lambda-l", type=float, default=None, help="skip calibration")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="sharpness.csv")
    a = ap.parse_args()

    plan = ExperimentPlan(setting=a.setting, k_list=a.k, t_grid=DEFAULT_T_GRID, estimators=["L"],
                          n_replicates=a.replicates, master_seed=a.seed, lambda_L=a.lambda_l, threads=a.threads)
    resolve_tuning(plan, log=print)
    print(f"lambda_L = {plan.lambda_L:.3f}")
    cells = []
    for k in a.k:
        for t in plan.t_grid:
            c = run_cell(plan, k, t, "L")
            cells.append(c)
            print(f"k={k:3d} t={t:7g}  recovery {c.recovery_prob:.3f}  bound {c.mc_bound:.3f}  FWER {c.fwer:.3f}")
    write_results(a.out, cells, a.seed)


if __name__ == "__main__":
    main()
