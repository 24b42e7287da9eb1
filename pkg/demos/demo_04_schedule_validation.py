"""Numerically checking the convergence-theorem schedule conditions.

The validator estimates tail exponents of each schedule series (with polylog
factors regressed away) and checks the effective-learning-rate recursion.
The theorem defaults pass every condition; deliberately broken schedules
fail the intended ones.
"""

from lq_explore.learner import ScheduleSet, validate_schedules


def show(title, report):
    print(f"\n{title}")
    for name, entry in report.items():
        if isinstance(entry, dict):
            detail = ", ".join(f"{k}={v:.3g}" for k, v in entry.items()
                               if isinstance(v, float))
            print(f"  {name:<28} {'PASS' if entry['passed'] else 'FAIL'}  {detail}")


show("theorem defaults", validate_schedules(ScheduleSet(), horizon_n=10 ** 7))

show("broken: constant b_n",
     validate_schedules(ScheduleSet(b_fn=lambda n: 5.0), horizon_n=10 ** 6))

show("broken: a_n = 1/n^2 with b_n = n^{1/4} (sum a/b converges)",
     validate_schedules(ScheduleSet(a_Gamma_fn=lambda n: 1.0 / (n + 1) ** 2,
                                    b_fn=lambda n: (n + 1) ** 0.25),
                        horizon_n=10 ** 7))
