"""Regenerate src/vaxsent/data/sample_corpus.jsonl.

The comments are synthetic: short English and Hinglish (romanized Hindi mixed
with English) sentences assembled from fragments. Candidates are drawn with a
fixed seed and kept until every sentiment label reaches its quota, so the
corpus covers all seven classes with a skew similar to real vaccine threads
(mostly neutral and mildly positive).

    python3 tools/make_sample_corpus.py
"""

import random
from pathlib import Path

from vaxsent.annotate import Lexicon, SentimentLabel, annotate_corpus
from vaxsent.ingest import DEFAULT_SUBREDDITS, Comment, save_corpus

SEED = 20210501
N = 200
QUOTAS = {
    SentimentLabel.Neutral: 66,
    SentimentLabel.WeaklyPositive: 58,
    SentimentLabel.Positive: 22,
    SentimentLabel.StronglyPositive: 8,
    SentimentLabel.WeaklyNegative: 30,
    SentimentLabel.Negative: 11,
    SentimentLabel.StronglyNegative: 5,
}
assert sum(QUOTAS.values()) == N

VACCINES = ["covishield", "covaxin", "sputnik", "vaccination"]

TITLES = [
    "Daily discussion thread: {v} rollout",
    "{v} slots open for 18+ in Pune",
    "Anyone else got {v} this week?",
    "State wise {v} numbers",
    "Questions about {v} second dose gap",
    "{v} update from the health ministry",
]

SUBJECTS = [
    "Got my first dose of {v} today",
    "Mummy ko {v} lagwaya aaj",
    "Took {v} at the district hospital",
    "Papa ka {v} second dose done",
    "Booked {v} on cowin for tomorrow",
    "Mera {v} slot finally mila",
    "My whole family took {v}",
    "Bhai {v} centre pe line lagi thi",
]

NEUTRAL = [
    "the centre opens at 9",
    "kal subah jaana hai",
    "waiting for the certificate on cowin",
    "the gap between doses is 12 weeks now",
    "kya aapko sms aaya",
    "they asked for aadhaar",
    "which centre did you go to",
    "Is {v} ki efficacy kya hai?",
    "the nurse wrote the batch number",
    "dose ke baad ghar aa gaye",
]

POSITIVE = [
    "staff was very nice", "process was smooth", "it was quick and easy", "the doctors were helpful",
    "feeling fine now", "so glad it is done", "great job by the volunteers", "no side effects, feeling good",
    "thank you health workers", "sab kuch easy tha", "best decision this year", "the hospital was clean",
    "excellent arrangement", "vaccine is safe and effective", "huge relief for my parents",
    "the staff were wonderful", "amazing work", "mild fever only", "slots are available now",
]

NEGATIVE = [
    "line was very long", "bahut slow process tha", "had fever and was tired", "the app kept crashing",
    "there is a shortage of doses", "my arm was painful", "the site was a mess", "delay in second dose",
    "people are scared of side effects", "worried about blood clots", "staff was rude",
    "worst management ever", "terrible experience", "horrible crowd", "felt sick the whole night",
    "so many fake news forwards", "they stopped the drive midway", "this is a scam",
]

NEGATED = [
    "not bad at all", "not a good experience", "never felt safe there", "it was not easy",
    "nahi lagta it is dangerous", "no problem at all",
]

FILLERS = ["yaar", "bhai", "btw", "lol", "honestly", "", "", ""]


def candidate(rng: random.Random) -> tuple[str, str]:
    v = rng.choice(VACCINES)
    title = rng.choice(TITLES).format(v=v.capitalize() if rng.random() < 0.5 else v)
    parts = [rng.choice(SUBJECTS).format(v=v)]
    mood = rng.random()
    if mood < 0.35:
        parts.append(rng.choice(NEUTRAL).format(v=v))
    elif mood < 0.65:
        parts += rng.sample(POSITIVE, rng.choice([1, 1, 2]))
    elif mood < 0.9:
        parts += rng.sample(NEGATIVE, rng.choice([1, 1, 2]))
    else:
        parts.append(rng.choice(NEGATED))
    if rng.random() < 0.3:
        parts.append(rng.choice(POSITIVE + NEGATIVE + NEUTRAL).format(v=v))
    filler = rng.choice(FILLERS)
    body = ", ".join(parts)
    if filler:
        body = f"{body} {filler}"
    return title, body[0].upper() + body[1:] + rng.choice([".", "!", "", "?"])


def build(seed: int = SEED) -> list[Comment]:
    rng = random.Random(seed)
    lex = Lexicon.builtin()
    left = dict(QUOTAS)
    seen: set[str] = set()
    out: list[Comment] = []
    t0 = 1619827200  # 2021-05-01 UTC
    attempts = 0
    while sum(left.values()) > 0:
        attempts += 1
        if attempts > 200_000:
            raise RuntimeError(f"could not fill quotas: {left}")
        title, body = candidate(rng)
        if body in seen:
            continue
        c = Comment(
            comment_id=f"s{len(out) + 1:04d}",
            post_id=f"p{rng.randrange(1, 41):03d}",
            subreddit=rng.choice(DEFAULT_SUBREDDITS),
            post_title=title,
            selftext="",
            body=body,
            score=rng.randrange(-3, 60),
            created_at=t0 + rng.randrange(0, 90 * 86400),
        )
        (a,) = annotate_corpus([c], lex)
        if left[a.label] == 0:
            continue
        left[a.label] -= 1
        seen.add(body)
        out.append(c)
    return out


def main():
    target = Path(__file__).resolve().parents[1] / "src" / "vaxsent" / "data" / "sample_corpus.jsonl"
    comments = build()
    save_corpus(comments, target)
    print(f"wrote {len(comments)} comments to {target}")


if __name__ == "__main__":
    main()
