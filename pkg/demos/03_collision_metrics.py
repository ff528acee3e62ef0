"""Collision metrics: pairwise overlap ratio (POR) and pairwise IoU (PIoU).

Run:  python demos/03_collision_metrics.py
"""

from roomsynth import (
    OrientedBox,
    ToyConfig,
    corpus_metrics,
    footprint_intersection_area,
    footprint_iou,
    generate_toy_corpus,
    scene_piou,
    scene_por,
)


def box(cx, cy, length, width, rotate=0.0, category="bed"):
    return OrientedBox(category, (cx, cy, 0.0), length, width, 50.0, rotate)


# The kernel: exact intersection area of two rotated rectangle footprints.
a = box(0, 0, 200, 100)
b = box(60, 20, 150, 90, rotate=30)
print(f"intersection(a, b) = {footprint_intersection_area(a, b):8.1f} cm^2")
print(f"IoU(a, b)          = {footprint_iou(a, b):8.4f}")

# Identities worth knowing: identical pair -> 1, half-overlapping equal
# squares -> 1/3, disjoint -> 0.
s1, s2 = box(0, 0, 100, 100), box(50, 0, 100, 100)
print(f"half-overlap squares IoU = {footprint_iou(s1, s2):.4f} (exactly 1/3)")

# Per-scene POR = colliding pairs / all pairs; PIoU = mean pairwise IoU.
boxes = [box(0, 0, 100, 100), box(50, 0, 100, 100), box(500, 0, 100, 100)]
print(f"POR  = {scene_por(boxes):.4f}  (1 colliding pair of 3)")
print(f"PIoU = {scene_piou(boxes):.4f}")

# Corpus aggregation: per-scene values first, then the arithmetic mean.
scenes = generate_toy_corpus(0, 20, ToyConfig(collision_mode="force"))
agg = corpus_metrics(scenes)
print("\ncorpus of 20 force-mode scenes:")
print(agg.to_table())
