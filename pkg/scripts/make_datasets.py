"""Regenerate the bundled CSV files under src/tabqgan/data/."""

from pathlib import Path

from tabqgan.datasets import ADULT_SAMPLE, TOY_SAMPLE, make_adult_surrogate, make_toy_dataset

OUT = Path(__file__).resolve().parents[1] / "src" / "tabqgan" / "data"

if __name__ == "__main__":
    make_adult_surrogate(2000, seed=0).to_csv(OUT / ADULT_SAMPLE, index=False)
    make_toy_dataset(1000, seed=0).to_csv(OUT / TOY_SAMPLE, index=False)
