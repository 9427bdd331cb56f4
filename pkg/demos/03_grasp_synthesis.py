"""Antipodal grasp synthesis on a cylinder, end to end.

Renders fixed-size views, lets entropy choose the grasp view, anneals a
budget of candidates into a quality/rotation/width map, extracts the best
collision-free grasp, and sketches the map as ASCII art. Also shows the
rectangle-overlap metric used to score predictions against ground truth.
"""

import numpy as np

from mvgrasp.geometry import sample_primitive
from mvgrasp.grasping import (
    AnnealSchedule,
    GraspRect,
    angle_difference,
    iou_valid,
    plan_grasp,
    rect_iou,
)

# ---------------------------------------------------------------------------
# Full pipeline on a tube-shaped object.

cloud = sample_primitive("cylinder", (0.03, 0.12), 400, seed=12)
plan = plan_grasp(cloud, budget=48, seed=4, bins=48, schedule=AnnealSchedule(iters=120))

print("object: cylinder r=0.03 m h=0.12 m, 400 surface samples")
print("ranked view entropies (bits):",
      " >= ".join(f"{h:.3f}" for h in plan.entropies))
print(f"entropy picks view {plan.view_index}")
print()

best = plan.best
u, v = best.center_px
print("best grasp")
print(f"  pixel          ({u}, {v}) of {plan.grasp_map.quality.shape[0]}^2")
print(f"  rotation       {np.degrees(best.rotation_rad):6.1f} deg about the view axis")
print(f"  opening width  {best.width_m * 1000:6.1f} mm")
print(f"  quality        {best.quality:6.3f}")
print(f"  collision-free {plan.collision_free}")
print()

point = plan.pose.point
print(f"  grasp point    [{point[0]:+.3f} {point[1]:+.3f} {point[2]:+.3f}] m "
      "(object frame)")
print(f"  approach axis  [{plan.pose.approach[0]:+.2f} "
      f"{plan.pose.approach[1]:+.2f} {plan.pose.approach[2]:+.2f}]")
print()

# ---------------------------------------------------------------------------
# The quality map, coarsened to character art: darker means better.

quality = plan.grasp_map.quality
chars = " .:-=+*#%@"
step = quality.shape[0] // 24
print("quality map (24x24 downsample, @ = best)")
for i in range(0, quality.shape[0], step):
    row = ""
    for j in range(0, quality.shape[1], step):
        block = np.nanmax(quality[i : i + step, j : j + step])
        row += chars[min(int(block * (len(chars) - 1)), len(chars) - 1)]
    print("  " + row)
print()

# ---------------------------------------------------------------------------
# Scoring grasps as oriented rectangles: overlap above 25 percent and angle
# within 30 degrees counts as a match.

truth = GraspRect(center=(0.0, 0.0), angle_rad=0.0, width=0.08, height=0.02)
cases = [
    ("same rectangle", GraspRect(center=(0.0, 0.0), angle_rad=0.0, width=0.08, height=0.02)),
    ("shifted 10 mm", GraspRect(center=(0.01, 0.0), angle_rad=0.0, width=0.08, height=0.02)),
    ("tilted 20 deg", GraspRect(center=(0.0, 0.0), angle_rad=np.radians(20), width=0.08, height=0.02)),
    ("tilted 45 deg", GraspRect(center=(0.0, 0.0), angle_rad=np.radians(45), width=0.08, height=0.02)),
    ("far away", GraspRect(center=(0.2, 0.2), angle_rad=0.0, width=0.08, height=0.02)),
]
print("prediction vs ground truth (0.08 x 0.02 m rectangle at the origin)")
print("  case            iou    angle_deg  match")
for name, rect in cases:
    iou = rect_iou(rect, truth)
    angle = np.degrees(angle_difference(rect.angle_rad, truth.angle_rad))
    print(f"  {name:14s} {iou:5.3f} {angle:9.1f}   {iou_valid(rect, truth)}")
