"""
Loading corpora and splitting them
==================================

Loaders read JSON-lines (or CSV where noted in docs/formats/), normalize
every text, and report malformed rows by row number instead of dying on
the first bad line. This script builds a small corpus file on the fly,
loads it, binarizes the crowd scores at two thresholds, and splits the
result with stratification.
"""

import json
import tempfile
from collections import Counter
from pathlib import Path

from hatescan.corpus import SplitConfig, binarize, load_parler, split

workdir = Path(tempfile.mkdtemp(prefix="hatescan-demo-"))

# ---------------------------------------------------------------------
# 1. Write a corpus with crowd-scored hatefulness in [1, 5], including
#    two rows a real scrape would contain: missing text and a bad score.
# ---------------------------------------------------------------------

rows = []
for i in range(12):
    rows.append({"id": f"calm{i}", "text": f"Lovely weather on day {i}",
                 "label_mean": 1.0 + (i % 3) * 0.5})
for i in range(6):
    rows.append({"id": f"mid{i}", "text": f"This take number {i} is heated",
                 "label_mean": 3.4})
for i in range(6):
    rows.append({"id": f"bad{i}", "text": f"Pure hate example {i}",
                 "label_mean": 4.6, "disputable": i % 2 == 0})
rows.append({"id": "broken1", "label_mean": 2.0})
rows.append({"id": "broken2", "text": "score out of range", "label_mean": 9.0})

corpus_path = workdir / "posts.jsonl"
with corpus_path.open("w", encoding="utf-8") as fh:
    for row in rows:
        fh.write(json.dumps(row) + "\n")

# ---------------------------------------------------------------------
# 2. Load. Bad rows are collected with their line numbers; the good
#    rows come back as Post objects with raw (unnormalized) text.
# ---------------------------------------------------------------------

posts = load_parler(str(corpus_path))
print(f"loaded {len(posts)} posts, {len(posts.errors)} rejected rows:")
for problem in posts.errors:
    print(f"  row {problem.row}: {problem.message}")
print()

# ---------------------------------------------------------------------
# 3. Binarize at a threshold on the crowd score. The cut is inclusive,
#    so the 3.4-scored posts flip between thresholds 3 and 4.
# ---------------------------------------------------------------------

for threshold in (3, 4):
    examples = [binarize(p, threshold) for p in posts]
    counts = Counter(e.label for e in examples)
    print(f"threshold {threshold}: {dict(counts)}")
print()

# ---------------------------------------------------------------------
# 4. Stratified split: per-class proportions survive into both halves,
#    and the same seed always yields the same split.
# ---------------------------------------------------------------------

examples = [binarize(p, 3) for p in posts]
train, test = split(examples, SplitConfig(train_fraction=0.8, seed=0))
again, _ = split(examples, SplitConfig(train_fraction=0.8, seed=0))
assert train == again

print(f"split {len(examples)} examples -> {len(train)} train / {len(test)} test")
print("train labels:", dict(Counter(e.label for e in train)))
print("test labels: ", dict(Counter(e.label for e in test)))
