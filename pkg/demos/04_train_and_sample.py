"""Train the reference denoiser on toy layouts and sample new ones.

Small-scale by design: a few hundred 48x48 layouts and a few epochs, enough
to watch the loss fall and to draw samples conditioned on a floor plan.
Expect several minutes of CPU time.

Run:  python demos/04_train_and_sample.py
"""

import pathlib

import numpy as np

from roomsynth import ToyConfig, default_house_palette, generate_toy_corpus, save_png
from roomsynth.diffusion import TinyUNetDenoiser, TrainConfig, make_schedule, sample, save_checkpoint, train
from roomsynth.raster import rasterize_floorplan, rasterize_layout

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

palette = default_house_palette()
canvas = (48, 48)
config = ToyConfig(
    room_count=(1, 1),
    room_width_cm=(600.0, 700.0),
    room_height_cm=(600.0, 700.0),
    furniture_per_room=(2, 3),
    categories=("bed", "cabinet", "sofa"),
)

scenes = generate_toy_corpus(0, 300, config)
dataset = []
for scene in scenes:
    layout = rasterize_layout(scene, palette, canvas, margin=3)
    floor = rasterize_floorplan(scene, palette, canvas, margin=3, transform=layout.transform)
    dataset.append((layout, floor))
print(f"dataset: {len(dataset)} layout/floor-plan pairs at {canvas[0]}px")

schedule = make_schedule("linear", 100, 0.005, 0.055)
model = TinyUNetDenoiser(widths=(8, 16, 32), seed=0, zero_init_out=True)
print(f"model parameters: {model.parameter_count}")

result = train(
    model,
    dataset,
    TrainConfig(learning_rate=2e-3, batch_size=16, epochs=5, seed=1, decay_milestones=(4,)),
    schedule,
)
print("per-epoch mean loss:", [round(v, 4) for v in result.loss_curve])

save_checkpoint(OUT / "demo_checkpoint.npz", model, schedule, palette_hash=palette.hash())
result.save_csv(OUT / "demo_loss.csv")

# Sample three layouts for the same floor plan; diversity comes from the seed.
cond = dataset[0][1]
for seed in range(3):
    image = sample(model, cond, schedule, np.random.default_rng(seed))
    save_png(image, OUT / f"demo_sample_{seed}.png")
print(f"wrote demo_checkpoint.npz, demo_loss.csv, demo_sample_*.png under {OUT}")
print("(a few epochs only: samples are rough; train longer for cleaner layouts)")
