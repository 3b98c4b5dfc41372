"""Regenerate src/vaxsent/data/lexicon.tsv.

Source: en-sentiment.xml from the TextBlob wheel (pattern's English adjective
lexicon, PDDL). Per-sense polarity/intensity are averaged per word form, forms
are normalized with the package's own lemmatizer so they line up with the
preprocessed token stream, and the domain additions below are layered on top.

    python tools/build_lexicon.py path/to/en-sentiment.xml
"""

import sys
import xml.etree.ElementTree as ET
from collections import defaultdict
from pathlib import Path

from vaxsent.preprocess import NEGATORS, LemmaRules, StopwordList, lemmatize

OUT = Path(__file__).resolve().parents[1] / "src" / "vaxsent" / "data" / "lexicon.tsv"

# term -> polarity; see data/LEXICON_CHANGELOG.md
ADDITIONS = {
    "stopped": -0.3,
    "hoax": -0.7,
    "scam": -0.7,
    "conspiracy": -0.4,
    "efficacy": 0.3,
    "protection": 0.3,
    "immunity": 0.2,
    "shortage": -0.4,
    "delay": -0.3,
    "banned": -0.5,
    "ban": -0.4,
    "risk": -0.3,
    "fear": -0.5,
    "scared": -0.5,
    "worried": -0.4,
    "thank": 0.4,
    "relief": 0.4,
    "death": -0.6,
    "died": -0.6,
    "side effect": -0.3,
    "blood clot": -0.6,
    "herd immunity": 0.4,
    "well done": 0.6,
}


def main(xml_path):
    rules = LemmaRules.builtin()
    sw = StopwordList.load()
    senses = defaultdict(list)
    for w in ET.parse(xml_path).getroot().iter("word"):
        form = w.get("form", "").lower()
        if "'" in form:
            continue
        parts = form.replace("-", " ").split()
        if not parts or len(parts) > 2 or not all(p.isalnum() for p in parts):
            continue
        if any(p in sw for p in parts):
            continue
        term = " ".join(lemmatize(p, rules) for p in parts)
        senses[term].append((float(w.get("polarity")), float(w.get("intensity", 1.0))))

    entries = {}
    for term, vals in senses.items():
        pol = sum(p for p, _ in vals) / len(vals)
        inten = sum(i for _, i in vals) / len(vals)
        entries[term] = (round(pol, 4), round(inten, 4), 0)
    for term, pol in ADDITIONS.items():
        entries[term] = (pol, 1.0, 0)
    for term in NEGATORS:
        entries[term] = (0.0, 1.0, 1)

    lines = [
        "# term\tpolarity\tintensity\tnegator",
        "# generated by tools/build_lexicon.py; do not edit by hand",
    ]
    for term in sorted(entries):
        pol, inten, neg = entries[term]
        lines.append(f"{term}\t{pol:g}\t{inten:g}\t{neg}")
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(entries)} entries to {OUT}")


if __name__ == "__main__":
    main(sys.argv[1])
