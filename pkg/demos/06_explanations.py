"""
Explaining a prediction token by token
======================================

For any trained classifier, a local surrogate answers "which tokens in
this post pushed the score toward that class". The method: knock random
subsets of tokens out, watch the class probability move, and fit a
small ridge regression over the keep/drop masks, weighted toward masks
close to the full text. Token weights are the regression coefficients.
"""

import random
import tempfile
from pathlib import Path

from hatescan.corpus import LabeledExample
from hatescan.explain import ExplainConfig, lime_explain, render_html
from hatescan.model import FeatureConfig, Hyperparams, train

# ---------------------------------------------------------------------
# 1. Train a small target classifier with planted class keywords.
# ---------------------------------------------------------------------

rng = random.Random(0)
filler = ["have", "a", "say", "about", "the", "thing", "today"]
keywords = {"Jewish": "jews", "Islam": "muslims", "Other": "nobody"}
rows = []
for cls, keyword in keywords.items():
    for _ in range(30):
        words = [keyword] + rng.sample(filler, 4)
        rng.shuffle(words)
        rows.append(LabeledExample(" ".join(words), cls, "synthetic"))

model = train(rows, [], Hyperparams(max_epochs=6, learning_rate=0.1, seed=0),
              FeatureConfig(hash_dim=4096))

# ---------------------------------------------------------------------
# 2. Explain one prediction. Short texts use every possible token mask
#    (exact); longer ones fall back to sampling.
# ---------------------------------------------------------------------

text = "jews have a say about the thing"
explanation = lime_explain(model, text, "Jewish",
                           ExplainConfig(n_features=5, seed=0))

print(f"text:  {text!r}")
print(f"class: {explanation.target_class}")
print(f"intercept (baseline probability): {explanation.intercept:+.3f}")
print("token weights, strongest first:")
for token, weight in explanation.token_weights:
    bar = "#" * int(40 * abs(weight))
    sign = "+" if weight >= 0 else "-"
    print(f"  {token:<10} {sign}{abs(weight):.3f} {bar}")
print()

# ---------------------------------------------------------------------
# 3. The same explanation as a static HTML fragment, tokens colored
#    by the sign of their weight.
# ---------------------------------------------------------------------

out = Path(tempfile.mkdtemp(prefix="hatescan-demo-")) / "explanation.html"
out.write_text(render_html(explanation), encoding="utf-8")
print(f"wrote {out}")
