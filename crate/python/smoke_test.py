"""Smoke test for the pyffcnn extension.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/pyffcnn-*.whl
"""

import math
import random
import sys
import tempfile
from pathlib import Path

import pyffcnn


def bars(n, classes, seed):
    """Oriented bars on a 32x32 canvas, one orientation per class."""
    rng = random.Random(seed)
    pixels, labels = [], []
    for i in range(n):
        c = i % classes
        labels.append(c)
        s, co = math.sin(math.pi * c / classes), math.cos(math.pi * c / classes)
        shift = rng.uniform(-1.5, 1.5)
        for y in range(32):
            for x in range(32):
                dy, dx = y - 15.5, x - 15.5
                ink = 0.9 if abs(dx * s - dy * co + shift) < 2 and abs(dx * co + dy * s) < 11 else 0.0
                pixels.append(min(1.0, ink + rng.uniform(0, 0.1)))
    return pyffcnn.ImageSet(pixels, (n, 32, 32, 1), labels, 10, "gray")


def main():
    train, test = bars(200, 10, 1), bars(100, 10, 2)
    assert train.shape == (200, 32, 32, 1) and len(test) == 100

    labeled, unlabeled = train.split(4, seed=0)
    assert len(labeled) == 50 and len(unlabeled) == 150

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        train.save_ffc(tmp / "train.ffc")
        again = pyffcnn.ImageSet.load_ffc(tmp / "train.ffc")
        assert again.labels == train.labels

        cfg = pyffcnn.Config("mnist", fraction="1/4", seed=3, model_dir=tmp / "single")
        assert cfg.get("unlabeled_mode") == "selected"
        rec = pyffcnn.run(cfg, train, test)
        print(f"single network: {rec['accuracy']:.1f}% ({rec['labeled_count']} labeled)")
        assert rec["accuracy"] > 50

        model = pyffcnn.Model.load(tmp / "single" / "model.ffm")
        pred, dec = model.predict(test)
        hits = sum(p == t for p, t in zip(pred, test.labels))
        assert abs(100 * hits / len(test) - rec["accuracy"]) < 1e-9
        assert len(dec[0]) == model.num_classes == 10

        cfg.set("ensemble_types", "T1")
        cfg.set("model_dir", str(tmp / "ens"))
        rec = pyffcnn.run(cfg, train, test)
        print(f"T1 ensemble: {rec['ensemble_accuracy']:.1f}%, members {rec['member_accuracies']}")
        ens = pyffcnn.Ensemble.load(tmp / "ens" / "ensemble.txt")
        fused, per_member = ens.predict(test)
        assert len(per_member) == len(ens.members) == 4
        hits = sum(p == t for p, t in zip(fused, test.labels))
        assert abs(100 * hits / len(test) - rec["ensemble_accuracy"]) < 1e-9

    try:
        pyffcnn.Config("mnist", fraction="3/7").validate()
    except pyffcnn.FfcnnError as e:
        print(f"rejected bad fraction: {e}")
    else:
        sys.exit("bad fraction accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
