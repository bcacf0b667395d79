"""
Back-translation augmentation
=============================

Round-tripping a post through another language yields a paraphrase that
keeps the label. In production this runs against a translation service
over HTTP; here a scripted client stands in so the demo is offline and
deterministic. The interesting parts are the bookkeeping: how outputs
are ordered, and how garbage translations get caught instead of
polluting the training set.
"""

from hatescan.augment import AugmentConfig, augment_dataset, back_translate
from hatescan.corpus import LabeledExample

# ---------------------------------------------------------------------
# 1. A toy client. Forward passes tag the text; the return pass turns
#    the tag into a word-order change, like a real round trip would.
# ---------------------------------------------------------------------

class ToyTranslator:
    def translate(self, text, source, target):
        if target != "en":
            return f"{target} {text}"
        lang, _, rest = text.partition(" ")
        first, _, tail = rest.partition(" ")
        return f"{tail} {first} ({lang} order)"

client = ToyTranslator()
print("round trip of one post:")
print("  in: ", "the party was on fire last night")
print("  out:", back_translate("the party was on fire last night",
                               "de", client))
print()

# ---------------------------------------------------------------------
# 2. Whole-dataset augmentation: originals first, then one block per
#    pivot language, inside each block the original order. Labels and
#    origins carry over; only the text and the augmented flag change.
# ---------------------------------------------------------------------

rows = [
    LabeledExample("those people ruin everything they touch", "hate", "demo"),
    LabeledExample("my cat knocked the plant over again", "normal", "demo"),
    LabeledExample("they should all go back where they came from", "hate", "demo"),
]

config = AugmentConfig(languages=("de", "es"))
augmented = augment_dataset(rows, config, client)
print(f"{len(rows)} originals -> {len(augmented)} rows after augmentation:")
for e in augmented:
    flag = "aug" if e.augmented else "orig"
    print(f"  [{flag}] ({e.label}) {e.text}")
print()

# ---------------------------------------------------------------------
# 3. Failure handling. A client that echoes text unchanged produces
#    useless augmentations; the round-trip filter rejects them (along
#    with empty, length-exploded, and mostly-non-ascii outputs), and
#    the result records what failed per language.
# ---------------------------------------------------------------------

class EchoTranslator:
    def translate(self, text, source, target):
        return text

echoed = augment_dataset(rows, config, EchoTranslator())
print(f"echo client: {len(echoed)} rows kept "
      f"(every round trip failed the usefulness check)")
print(f"failures by language: {dict(echoed.failures)} "
      f"out of {echoed.attempted} attempts")
