"""Regenerates demo_embeddings.txt: small clustered vectors for the bundled
corpus vocabulary. They are synthetic, not trained on any text."""
import json
import re
import numpy as np

DIM = 50
rng = np.random.default_rng(20)

groups = {}
for line in open("semantic_lexicon.tsv"):
    if line.startswith("#") or not line.strip():
        continue
    tok, grp = line.rstrip("\n").split("\t")
    groups[tok.lower()] = grp

words = set()
for line in open("minicorpus.jsonl"):
    text = json.loads(line)["text"].lower()
    words.update(t for t in re.findall(r"[a-z']+", text))
words.update(groups)
words.update(g.lower() for g in set(groups.values()))

wh = {"what", "who", "where", "when", "why", "how", "which"}
aux = {"is", "are", "was", "were", "do", "does", "did", "can", "could", "should", "would", "will", "has", "have", "had"}
centroids = {name: rng.normal(0, 0.3, DIM) for name in ["Anatomy", "Disorders", "Phenomena", "Procedures", "wh", "aux"]}

def vector(word):
    base = np.zeros(DIM)
    if word in groups:
        base = centroids[groups[word]]
    elif word.capitalize() in centroids:
        base = centroids[word.capitalize()]
    elif word in wh:
        base = centroids["wh"]
    elif word in aux:
        base = centroids["aux"]
    return base + rng.normal(0, 0.1, DIM)

with open("demo_embeddings.txt", "w") as out:
    ordered = sorted(words)
    out.write(f"{len(ordered)} {DIM}\n")
    for w in ordered:
        out.write(w + " " + " ".join(f"{x:.5f}" for x in vector(w)) + "\n")
