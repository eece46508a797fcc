"""Train the 15-15-7-7 network on synthetic faces and score a held-out set."""
import time

import numpy as np

from facexpr.mlp import (LABELS, LabeledSample, TrainConfig, accuracy, confusion_matrix,
                         init_model, load_model, predict, save_model, train)
from facexpr.pipeline import process_image
from facexpr.synthetic import make_dataset


def samples(faces):
    return [LabeledSample(process_image(f.image).vector, f.label) for f in faces]


t0 = time.perf_counter()
train_set = samples(make_dataset(70, seed=1))
test_set = samples(make_dataset(21, seed=2))
print(f"features for {len(train_set) + len(test_set)} images in {time.perf_counter() - t0:.1f} s")

model, history = train(init_model(0), train_set, TrainConfig(seed=0))
print("epochs:", len(history), "final mse:", round(history[-1], 6))
print("train accuracy:", accuracy(model, train_set))
print("test accuracy:", accuracy(model, test_set))

cm = confusion_matrix(model, test_set)
print("         " + " ".join(f"{l[:3]:>4s}" for l in LABELS))
for label, row in zip(LABELS, cm):
    print(f"{label:8s} " + " ".join(f"{int(v):4d}" for v in row))

# the text model reloads to the same network
text = save_model(model)
print(text.decode().splitlines()[0])
again = load_model(text)
label, scores = predict(again, test_set[0].x())
print(label, np.round(scores, 3), "truth:", test_set[0].label)
