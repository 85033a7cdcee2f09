"""Write the 5000-digit MNIST sample shipped inside the mlxtend wheel as IDX files.

    python3 scripts/make_mnist_idx.py [--out data/mnist]

Downloads the wheel with pip if it is not already in --cache.
"""
import argparse
import gzip
import io
import pathlib
import struct
import subprocess
import sys
import zipfile

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def find_wheel(cache: pathlib.Path) -> pathlib.Path:
    wheels = sorted(cache.glob("mlxtend-*.whl"))
    if not wheels:
        cache.mkdir(parents=True, exist_ok=True)
        subprocess.run([sys.executable, "-m", "pip", "download", "mlxtend", "--no-deps",
                        "-d", str(cache)], check=True)
        wheels = sorted(cache.glob("mlxtend-*.whl"))
    return wheels[-1]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/mnist")
    ap.add_argument("--cache", default="/tmp/mlx")
    args = ap.parse_args()

    with zipfile.ZipFile(find_wheel(pathlib.Path(args.cache))) as zf:
        raw = gzip.decompress(zf.read(MEMBER)).decode()

    images, labels = bytearray(), bytearray()
    count = 0
    for line in io.StringIO(raw):
        cells = line.strip().split(",")
        if len(cells) != 785:
            continue
        images.extend(int(float(v)) for v in cells[:784])
        labels.append(int(float(cells[784])))
        count += 1

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "images-idx3-ubyte").write_bytes(struct.pack(">IIII", 0x803, count, 28, 28) + images)
    (out / "labels-idx1-ubyte").write_bytes(struct.pack(">II", 0x801, count) + labels)
    print(f"wrote {count} images to {out}")


if __name__ == "__main__":
    main()
