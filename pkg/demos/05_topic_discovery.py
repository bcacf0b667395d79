"""
Topic discovery and topic-augmented inputs
==========================================

Unlabeled posts get embedded, density-clustered, and each cluster is
named by its four most distinctive words. The names exist to be glued
onto classifier inputs ("text <TOPIC> w1 w2 w3 w4"), which gives a
linear model a coarse context signal it cannot learn from single posts.
"""

import random

from hatescan.topics import (
    OUTLIER,
    assign_topics,
    concat_topic,
    fit_topics,
)

# ---------------------------------------------------------------------
# 1. A corpus with three planted themes plus some one-off noise posts.
# ---------------------------------------------------------------------

THEMES = {
    "kitchen": ["oven", "recipe", "dough", "butter", "skillet", "simmer"],
    "football": ["keeper", "midfield", "offside", "corner", "tackle", "derby"],
    "markets": ["stocks", "hedge", "dividend", "equity", "futures", "yield"],
}

rng = random.Random(4)
docs = []
for words in THEMES.values():
    for _ in range(60):
        docs.append(" ".join(rng.choice(words) for _ in range(6)))
docs += ["xylophone quasar bagpipe", "zeppelin marmalade sphinx"]
rng.shuffle(docs)

# ---------------------------------------------------------------------
# 2. Fit: tune clustering over a small grid, cluster, name clusters.
# ---------------------------------------------------------------------

model = fit_topics(docs)
topics = sorted(set(model.labels) - {OUTLIER})
outliers = sum(1 for l in model.labels if l == OUTLIER)
print(f"{len(docs)} docs -> {len(topics)} topics, {outliers} outliers")
print(f"chosen clustering: min_cluster_size={model.params.min_cluster_size}, "
      f"min_samples={model.params.min_samples}")
for topic in topics:
    size = sum(1 for l in model.labels if l == topic)
    print(f"  {model.names[topic]:<40} ({size} docs)")
print()

# ---------------------------------------------------------------------
# 3. Assign unseen posts. Assignment is nearest-centroid with a
#    per-topic distance ceiling, so off-theme text lands in the
#    outlier bucket instead of the least-bad topic.
# ---------------------------------------------------------------------

new_posts = [
    "simmer the butter then fold the dough",
    "late tackle in midfield, clear offside",
    "dividend yield beats the futures curve",
    "completely unrelated gibberish vocabulary",
]
assignments = assign_topics(model, new_posts)
for text, topic in zip(new_posts, assignments):
    name = model.names[topic] if topic != OUTLIER else "(outlier)"
    print(f"  {name:<40} <- {text!r}")
print()

# ---------------------------------------------------------------------
# 4. Concatenation, the form classifiers actually consume. Outliers
#    pass through unchanged.
# ---------------------------------------------------------------------

for text, topic in zip(new_posts, assignments):
    print(" ", concat_topic(text, model, topic))
