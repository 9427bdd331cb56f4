"""Open-ended learning with a simulated teacher, on easy and impossible data.

First: ten seeded runs on cleanly separable Gaussian categories, where the
learner should absorb all five categories and stop only because the data
runs out. Then one run on constant features, where no learner can tell
categories apart and the run must stall at the breakpoint.
"""

from mvgrasp.protocol import (
    ProtocolConfig,
    aggregate_runs,
    constant_dataset,
    gaussian_dataset,
    run_experiment,
)

labels = ["bottle", "bowl", "mug", "plate", "spoon"]

# ---------------------------------------------------------------------------
# Separable data: every run should end with all categories learned.

data = gaussian_dataset(labels, instances_per_category=40, d=16, seed=7)
reports = [run_experiment(ProtocolConfig(seed=s), data) for s in range(1, 11)]

print("separable Gaussian clusters, d=16, 5 categories x 40 instances")
print("seed  qci  alc   aic    gca    apa  stop")
for r in reports:
    print(
        f" {r.seed:3d} {r.qci:4d} {r.alc:4d} {r.aic:5.2f} "
        f"{r.gca:6.3f} {r.apa:6.3f}  {r.stop_reason}"
    )

summary = aggregate_runs(reports)
print("aggregate (mean +- std over 10 seeds)")
for metric, stats in summary.items():
    print(f"  {metric:4s} {stats['mean']:7.3f} +- {stats['std']:.3f}")
print()

# ---------------------------------------------------------------------------
# Constant features: identical instances everywhere, so accuracy hovers at
# chance and the run stops 100 fruitless asks after the last teach.

flat = constant_dataset(labels, instances_per_category=250)
report = run_experiment(ProtocolConfig(seed=5), flat)

teaches = [e for e in report.timeline if e.event == "teach"]
asks = [e for e in report.timeline if e.event == "ask"]
print("constant features, same 5 categories")
print(f"  stop reason        {report.stop_reason}")
print(f"  categories learned {report.alc} of {len(labels)}")
print(f"  ask iterations     {report.qci}")
print(f"  last teach at ask  {teaches[-1].iteration}, "
      f"final ask {asks[-1].iteration} "
      f"-> {asks[-1].iteration - teaches[-1].iteration} asks without progress")
print()

print("timeline tail (last 6 events)")
print("  iter  event    label      predicted  correct")
for e in report.timeline[-6:]:
    predicted = e.predicted or "-"
    correct = "-" if e.correct is None else str(e.correct)
    print(f"  {e.iteration:4d}  {e.event:8s} {e.label:10s} {predicted:10s} {correct}")
