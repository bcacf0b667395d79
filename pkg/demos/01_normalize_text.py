"""
Text normalization, rule by rule
================================

Every model in this package sees text through one deterministic cleaning
pass. This script walks the individual rewrite rules, then shows the two
properties the rest of the code relies on: idempotence and the English
filter.
"""

from hatescan.normalize import default_config, is_english, normalize

# ---------------------------------------------------------------------
# 1. One messy post, start to finish
# ---------------------------------------------------------------------

raw = "@JaneDoe DON'T share https://bit.ly/x — it's a SCAM!! \U0001f621 #staysafe"
print("raw:       ", raw)
print("normalized:", normalize(raw))
print()

# ---------------------------------------------------------------------
# 2. Each rule in isolation
# ---------------------------------------------------------------------

cases = [
    ("lowercasing",        "Mixed CASE Text"),
    ("mention masking",    "@someone hello"),
    ("url masking",        "see www.example.com now"),
    ("hashtag masking",    "winning #bigly"),
    ("emoji to alias",     "nice \U0001f602 one"),
    ("contraction split",  "I can't and won't"),
    ("punctuation folding", "wait… “really”?"),
    ("whitespace collapse", "  too   many\tspaces  "),
]

width = max(len(name) for name, _ in cases)
for name, text in cases:
    print(f"{name:<{width}}  {text!r:<28} -> {normalize(text)!r}")
print()

# ---------------------------------------------------------------------
# 3. Idempotence: normalizing twice never changes anything further.
#    Loaders depend on this; normalized files can be re-ingested safely.
# ---------------------------------------------------------------------

once = normalize(raw)
assert normalize(once) == once
print("idempotent: normalize(normalize(x)) == normalize(x)")
print()

# ---------------------------------------------------------------------
# 4. The English filter used to exclude posts before classification.
#    It is a cheap stopword-ratio test, not real language identification.
# ---------------------------------------------------------------------

config = default_config()
for text in [
    "this is a perfectly ordinary english sentence",
    "das ist ein ganz normaler deutscher satz",
    "short",
]:
    print(f"is_english={str(is_english(text, config)):<5}  {text!r}")
