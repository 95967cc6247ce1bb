"""Rebuilds mini.dict and mini_gold.txt from a full cmudict.dict.

usage: python3 build_mini_dict.py CMUDICT SIZE SEED OUT_DICT OUT_GOLD
The bundled files were made with SIZE=220 SEED=1 from cmudict 1.1.3.
"""
import random
import sys

GOLD = "cat bat hat pin tin dog log cup bus pen ten net big fig hot pot sun run band tent dogs".split()
EXTRA = "boolean booleans boole woolen woolens vowels".split()


def levenshtein(a, b):
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def main(path, size, seed, out_dict, out_gold):
    cmu = {}
    for line in open(path):
        line = line.split("#")[0].strip()
        if not line:
            continue
        word, *phones = line.split()
        if "(" in word or not word.isalpha() or not word.isascii():
            continue
        cmu.setdefault(word, phones)

    extra = [w for w in EXTRA if w in cmu]
    pool = sorted({w for w in cmu if len(w) >= 2 and any(0 < levenshtein(w, g) <= 2 for g in GOLD)} - set(GOLD))
    rng = random.Random(seed)
    rng.shuffle(pool)
    chosen = set(GOLD) | set(extra)
    for w in pool:
        if len(chosen) >= size:
            break
        chosen.add(w)

    with open(out_dict, "w") as f:
        for w in sorted(chosen):
            f.write(w.upper() + "  " + " ".join(cmu[w]) + "\n")
    # Every gold word has a one-to-one, in-order letter/phoneme alignment.
    with open(out_gold, "w") as f:
        for w in GOLD:
            assert len(cmu[w]) == len(w), w
            f.write(w.upper() + " ||| " + " ".join(f"{i}-{i}" for i in range(len(w))) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], int(sys.argv[2]), int(sys.argv[3]), sys.argv[4], sys.argv[5])
