#!/usr/bin/env python3
"""Regenerate src/hatescan/data/emoji_table.tsv from the Unicode character database.

Each assigned codepoint in the emoji blocks below gets one row mapping the
character to a ``:short_name:`` token derived from its official Unicode name
(lowercased, spaces and hyphens folded to underscores).  For every base entry a
second row maps the emoji-presentation sequence (base + U+FE0F) to the same
token so variation selectors are consumed during replacement.

The checked-in table is a frozen snapshot; rerun this script only when
deliberately refreshing it, and review the diff.
"""

import sys
import unicodedata

# Inclusive codepoint ranges covering the emoji-bearing blocks.
RANGES = [
    (0x1F1E6, 0x1F1FF),  # regional indicator symbols
    (0x1F300, 0x1F5FF),  # miscellaneous symbols and pictographs
    (0x1F600, 0x1F64F),  # emoticons
    (0x1F680, 0x1F6FF),  # transport and map symbols
    (0x1F900, 0x1F9FF),  # supplemental symbols and pictographs
    (0x1FA70, 0x1FAFF),  # symbols and pictographs extended-A
    (0x2600, 0x26FF),    # miscellaneous symbols
    (0x2700, 0x27BF),    # dingbats
]

# Commonly used singletons outside the contiguous blocks above.
EXTRAS = [
    0x203C, 0x2049,                     # !! and !? ornaments
    0x2122, 0x2139,                     # trade mark, information source
    0x2194, 0x2195, 0x2196, 0x2197, 0x2198, 0x2199, 0x21A9, 0x21AA,
    0x231A, 0x231B, 0x2328, 0x23CF,
    0x23E9, 0x23EA, 0x23EB, 0x23EC, 0x23ED, 0x23EE, 0x23EF,
    0x23F0, 0x23F1, 0x23F2, 0x23F3, 0x23F8, 0x23F9, 0x23FA,
    0x24C2, 0x25AA, 0x25AB, 0x25B6, 0x25C0, 0x25FB, 0x25FC, 0x25FD, 0x25FE,
    0x2934, 0x2935,
    0x2B05, 0x2B06, 0x2B07, 0x2B1B, 0x2B1C, 0x2B50, 0x2B55,
    0x3030, 0x303D, 0x3297, 0x3299,
    0x1F004, 0x1F0CF,                   # mahjong red dragon, playing card joker
    0x1F170, 0x1F171, 0x1F17E, 0x1F17F, 0x1F18E,
    0x1F191, 0x1F192, 0x1F193, 0x1F194, 0x1F195, 0x1F196, 0x1F197,
    0x1F198, 0x1F199, 0x1F19A,
    0x1F201, 0x1F202, 0x1F21A, 0x1F22F,
    0x1F232, 0x1F233, 0x1F234, 0x1F235, 0x1F236, 0x1F237, 0x1F238,
    0x1F239, 0x1F23A, 0x1F250, 0x1F251,
]

KEYCAP_BASES = "0123456789#*"


def short_name(cp: int) -> str | None:
    try:
        name = unicodedata.name(chr(cp))
    except ValueError:
        return None
    return name.lower().replace(" ", "_").replace("-", "_")


def main() -> int:
    rows: list[tuple[str, str]] = []
    seen: set[str] = set()

    codepoints: list[int] = []
    for lo, hi in RANGES:
        codepoints.extend(range(lo, hi + 1))
    codepoints.extend(EXTRAS)

    for cp in codepoints:
        name = short_name(cp)
        if name is None:
            continue
        ch = chr(cp)
        if ch in seen:
            continue
        seen.add(ch)
        rows.append((ch, f":{name}:"))
        rows.append((ch + "️", f":{name}:"))

    for base in KEYCAP_BASES:
        name = short_name(ord(base))
        if name is None:
            continue
        token = f":keycap_{name}:"
        rows.append((base + "️⃣", token))
        rows.append((base + "⃣", token))

    out = sys.stdout
    out.write("# emoji -> :short_name: replacement table\n")
    out.write("# generated by tools/gen_emoji_table.py from the Unicode %s data\n"
              % unicodedata.unidata_version)
    out.write("# columns: emoji<TAB>token; longest emoji matched first\n")
    for ch, token in rows:
        out.write(f"{ch}\t{token}\n")
    sys.stderr.write(f"{len(rows)} rows\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
