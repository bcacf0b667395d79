"""
The full two-stage pipeline over a corpus
=========================================

Stage 1 decides hate vs normal; only posts flagged hateful reach stage
2, which names the targeted group. Streaming a corpus through both
stages yields a target distribution, the package's end product. This
script trains both stages on synthetic data, runs a corpus, and renders
the distribution in all three report formats.
"""

import random

from hatescan.corpus import LabeledExample
from hatescan.model import FeatureConfig, Hyperparams, train
from hatescan.pipeline import (
    Pipeline,
    render_chart,
    render_csv,
    render_json,
    run_corpus,
)

rng = random.Random(0)
FC = FeatureConfig(hash_dim=4096)
HP = Hyperparams(max_epochs=6, learning_rate=0.1, seed=0)

# ---------------------------------------------------------------------
# 1. Stage 1: a detector. "filth" marks the hateful class here.
# ---------------------------------------------------------------------

filler = ["we", "all", "went", "to", "the", "market", "and", "back"]
detect_rows = []
for i in range(40):
    base = rng.sample(filler, 4)
    detect_rows.append(
        LabeledExample(" ".join(["filth", "scum"] + base), "hate", "demo"))
    detect_rows.append(
        LabeledExample(" ".join(base + ["again"]), "normal", "demo"))
detector = train(detect_rows, [], HP, FC)

# ---------------------------------------------------------------------
# 2. Stage 2: a target classifier over the group keywords.
# ---------------------------------------------------------------------

keywords = {"Jewish": "jews", "Islam": "muslims", "African": "africans"}
target_rows = []
for cls, keyword in keywords.items():
    for _ in range(30):
        words = [keyword] + rng.sample(filler, 3)
        rng.shuffle(words)
        target_rows.append(LabeledExample(" ".join(words), cls, "demo"))
target_model = train(target_rows, [], HP, FC)

# ---------------------------------------------------------------------
# 3. A corpus to scan: hateful posts mentioning each group, plus a
#    majority of harmless chatter and one non-English post that the
#    language filter should exclude.
# ---------------------------------------------------------------------

corpus = []
for cls, keyword in keywords.items():
    n = {"Jewish": 12, "Islam": 9, "African": 6}[cls]
    corpus += [f"the {keyword} are filth and scum as always {i}"
               for i in range(n)]
corpus += [f"we went to the market and back again {i}" for i in range(53)]
corpus.append("dies ist ein deutscher satz ohne englische worte")
rng.shuffle(corpus)

pipeline = Pipeline(detector=detector, target_model=target_model,
                    threshold_tag="demo-models")
distribution = run_corpus(corpus, pipeline, workers=2)

# ---------------------------------------------------------------------
# 4. The same distribution, three ways.
# ---------------------------------------------------------------------

print(render_chart(distribution))
print()
print(render_csv(distribution))
print(render_json(distribution))
