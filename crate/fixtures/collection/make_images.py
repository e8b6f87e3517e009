"""Regenerates the fixture paintings. Output is deterministic."""

from pathlib import Path

from PIL import Image

SIZES = {
    "KMS1": (320, 240),
    "KMS2": (256, 192),
    "KMS3": (200, 200),
    "KMS4": (240, 160),
    "KMS5": (64, 48),
    "KMSD1": (100, 100),
}


def paint(name, w, h):
    seed = sum(name.encode())
    img = Image.new("RGB", (w, h))
    px = img.load()
    for y in range(h):
        for x in range(w):
            band = (x // 16 + y // 16) % 4
            px[x, y] = (
                (x * 3 + seed) % 256,
                (y * 5 + band * 40) % 256,
                ((x ^ y) + seed * 7) % 256,
            )
    return img


if __name__ == "__main__":
    out = Path(__file__).parent / "images"
    out.mkdir(exist_ok=True)
    for name, (w, h) in SIZES.items():
        paint(name, w, h).save(out / f"{name}.png", optimize=False)
