#!/usr/bin/env python3
"""Fetch the public embedding tables and corpora used by the reproduction
tests and scripts.

Downloads into the data directory (default ./data, override with --data or
EMBCAT_DATA). Every source is a public URL; nothing here is bundled with the
package. The senna table is assembled from the files inside the senna-v3.0
release archive (word list and embedding matrix ship separately there), so
that download has an assembly step.

Expected layout after a full run:

    data/
      glove.6B.100d.txt
      glove.840B.300d.txt
      GoogleNews-vectors-negative300.bin
      senna.txt
      conll2003/train.txt
      conll2003/valid.txt
      sst2/stsa.binary.phrases.train
      sst2/stsa.binary.dev

Re-runs skip files that already exist. Total download is roughly 4 GB and
the 840B unzip needs another 5 GB of scratch space.
"""

import argparse
import gzip
import os
import shutil
import sys
import tarfile
import urllib.request
import zipfile
from pathlib import Path

GLOVE_6B_URL = "https://nlp.stanford.edu/data/glove.6B.zip"
GLOVE_840B_URL = "https://nlp.stanford.edu/data/glove.840B.300d.zip"
GOOGLE_NEWS_URL = (
    "https://s3.amazonaws.com/dl4j-distribution/GoogleNews-vectors-negative300.bin.gz"
)
SENNA_URL = "https://ronan.collobert.com/senna/senna-v3.0.tgz"
CONLL_URLS = {
    "train.txt": "https://raw.githubusercontent.com/glample/tagger/master/dataset/eng.train",
    "valid.txt": "https://raw.githubusercontent.com/glample/tagger/master/dataset/eng.testa",
}
SST2_URLS = {
    "stsa.binary.phrases.train": (
        "https://raw.githubusercontent.com/harvardnlp/sent-conv-torch/master/data/"
        "stsa.binary.phrases.train"
    ),
    "stsa.binary.dev": (
        "https://raw.githubusercontent.com/harvardnlp/sent-conv-torch/master/data/"
        "stsa.binary.dev"
    ),
}


def _download(url, dest):
    dest.parent.mkdir(parents=True, exist_ok=True)
    tmp = dest.with_suffix(dest.suffix + ".part")
    print(f"fetching {url}")

    def hook(blocks, block_size, total):
        done = blocks * block_size
        if total > 0:
            sys.stderr.write(f"\r  {done / 1e6:8.1f} / {total / 1e6:.1f} MB")
        else:
            sys.stderr.write(f"\r  {done / 1e6:8.1f} MB")

    urllib.request.urlretrieve(url, tmp, reporthook=hook)
    sys.stderr.write("\n")
    tmp.rename(dest)


def fetch_glove_6b(data):
    out = data / "glove.6B.100d.txt"
    if out.exists():
        return
    archive = data / "glove.6B.zip"
    if not archive.exists():
        _download(GLOVE_6B_URL, archive)
    with zipfile.ZipFile(archive) as z:
        z.extract("glove.6B.100d.txt", data)
    archive.unlink()


def fetch_glove_840b(data):
    out = data / "glove.840B.300d.txt"
    if out.exists():
        return
    archive = data / "glove.840B.300d.zip"
    if not archive.exists():
        _download(GLOVE_840B_URL, archive)
    with zipfile.ZipFile(archive) as z:
        z.extract("glove.840B.300d.txt", data)
    archive.unlink()


def fetch_google_news(data):
    out = data / "GoogleNews-vectors-negative300.bin"
    if out.exists():
        return
    archive = data / "GoogleNews-vectors-negative300.bin.gz"
    if not archive.exists():
        _download(GOOGLE_NEWS_URL, archive)
    print("  gunzip")
    with gzip.open(archive, "rb") as src, open(out, "wb") as dst:
        shutil.copyfileobj(src, dst, 1 << 20)
    archive.unlink()


def fetch_senna(data):
    """The senna release stores tokens and vectors in two parallel files;
    stitch them into one table in text format."""
    out = data / "senna.txt"
    if out.exists():
        return
    archive = data / "senna-v3.0.tgz"
    if not archive.exists():
        _download(SENNA_URL, archive)
    with tarfile.open(archive) as tar:
        words = tar.extractfile("senna/hash/words.lst").read().decode().splitlines()
        vectors = tar.extractfile("senna/embeddings/embeddings.txt").read().decode().splitlines()
    if len(words) != len(vectors):
        raise SystemExit(
            f"senna word list ({len(words)}) and matrix ({len(vectors)}) disagree"
        )
    with open(out, "w", encoding="utf-8") as f:
        for w, v in zip(words, vectors):
            f.write(f"{w} {' '.join(v.split())}\n")
    archive.unlink()


def fetch_conll(data):
    for name, url in CONLL_URLS.items():
        out = data / "conll2003" / name
        if not out.exists():
            _download(url, out)


def fetch_sst2(data):
    for name, url in SST2_URLS.items():
        out = data / "sst2" / name
        if not out.exists():
            _download(url, out)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--data",
        type=Path,
        default=Path(os.environ.get("EMBCAT_DATA", "data")),
        help="destination directory (default: ./data or EMBCAT_DATA)",
    )
    parser.add_argument(
        "--only",
        choices=["glove6b", "glove840b", "googlenews", "senna", "conll", "sst2"],
        action="append",
        help="fetch just the named sources (repeatable; default: everything)",
    )
    args = parser.parse_args(argv)
    jobs = {
        "glove6b": fetch_glove_6b,
        "glove840b": fetch_glove_840b,
        "googlenews": fetch_google_news,
        "senna": fetch_senna,
        "conll": fetch_conll,
        "sst2": fetch_sst2,
    }
    for name in args.only or jobs:
        jobs[name](args.data)
    print(f"done; data in {args.data}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
