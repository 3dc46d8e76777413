"""Brute-force oracle for the rule families and corpus statistics.

Written from the rule definitions alone (no shared code with the C++
library). Run from this directory to regenerate the frozen CSVs:

    python3 rules_oracle.py ../../data/minicorpus.jsonl
"""
import json
import string
import sys

PUNCT = set(string.punctuation)
WH = {"what", "who", "where", "when", "why", "how"}
AUX = {"is", "are", "was", "were", "do", "does", "did", "can", "could", "should",
       "would", "will", "has", "have", "had"}
SELF = {"i", "i'm", "i'd", "i've", "im"}
RULES = ["QM", "QM_AND_5W1H", "LI_RULE1", "LI_RULE2", "LI_RULE12", "EFRON"]


def tokens(text):
    out = []
    for chunk in text.split():
        if all(c in PUNCT for c in chunk):
            out.extend(chunk)
            continue
        a = 0
        while chunk[a] in PUNCT:
            a += 1
        b = len(chunk)
        while chunk[b - 1] in PUNCT:
            b -= 1
        out.extend(chunk[:a])
        out.append(chunk[a:b])
        out.extend(chunk[b:])
    return out


def words(text):
    return [t for t in tokens(text) if not all(c in PUNCT for c in t)]


def qm(text):
    return text.rstrip().endswith("?")


def fires(rule, text):
    low = [t.lower() for t in tokens(text)]
    w = [t.lower() for t in words(text)]
    r1 = bool(w) and w[0] in WH
    r2 = any(low[i] in WH and low[i + 1] in AUX for i in range(len(low) - 1))
    efron = any(low[i] in SELF and (low[i + 1].startswith("try") or low[i + 1] in ("like", "need"))
                and low[i + 2] == "to" and low[i + 3] in ("find", "know")
                for i in range(len(low) - 3))
    return {
        "QM": qm(text),
        "QM_AND_5W1H": qm(text) or any(t in WH for t in low),
        "LI_RULE1": r1,
        "LI_RULE2": r2,
        "LI_RULE12": r1 or r2,
        "EFRON": qm(text) or efron,
    }[rule]


def main(path):
    rows = [json.loads(l) for l in open(path, encoding="utf-8") if l.strip()]
    with open("rules_minicorpus.csv", "w") as out:
        out.write("rule,tp,fp,fn,precision,recall,f1\n")
        for rule in RULES:
            tp = fp = fn = 0
            for r in rows:
                gold = r["label"] in ("question", "c_question")
                pred = fires(rule, r["text"])
                tp += gold and pred
                fp += pred and not gold
                fn += gold and not pred
            p = tp / (tp + fp) if tp + fp else 0.0
            rc = tp / (tp + fn) if tp + fn else 0.0
            f = 2 * p * rc / (p + rc) if p + rc else 0.0
            out.write(f"{rule},{tp},{fp},{fn},{p:.17g},{rc:.17g},{f:.17g}\n")
    with open("candidates_minicorpus.txt", "w") as out:
        for r in rows:
            if any(fires(rule, r["text"]) for rule in RULES):
                out.write(r["id"] + "\n")

    vocab = {"<unk>"}
    for r in rows:
        vocab.update(t.lower() for t in tokens(r["text"]))
    V = len(vocab)
    with open("stats_minicorpus.csv", "w") as out:
        out.write("class,sentences,ending_in_question_mark,containing_5w1h,avg_words,avg_length,"
                  "avg_capitalized,avg_coverage\n")
        groups = [(l, [r for r in rows if r["label"] == l])
                  for l in ("question", "c_question", "non_question")]
        groups.append(("all", rows))
        for name, rs in groups:
            if not rs:
                continue
            n = len(rs)
            qmark = sum(qm(r["text"]) for r in rs)
            wh = sum(any(t.lower() in WH for t in tokens(r["text"])) for r in rs)
            avg_words = sum(len(words(r["text"])) for r in rs) / n
            avg_len = sum(len(r["text"]) for r in rs) / n
            avg_cap = sum(sum(w[0].isupper() for w in words(r["text"])) for r in rs) / n
            avg_cov = sum(len({w.lower() for w in words(r["text"])}) / V for r in rs) / n
            out.write(f"{name},{n},{qmark},{wh},{avg_words:.17g},{avg_len:.17g},"
                      f"{avg_cap:.17g},{avg_cov:.17g}\n")


if __name__ == "__main__":
    main(sys.argv[1])
