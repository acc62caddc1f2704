"""Regenerates the bundled toy dataset under data/toy/ (deterministic)."""

import csv
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parents[1]
OUT = ROOT / "data" / "toy"

GRADES = {"I": 1.0, "A+": 0.8, "A": 0.5, "A-": 0.2, "B+": 0.1, "B": 0.05, "B-": 0.02,
          "C+": 0.01, "C": 0.005, "C-": 0.002, "D+": 0.001, "D": 0.0005, "D-": 0.0001,
          "E": 0.00001, "N": 0.0}

CAUSES = ["HIV/AIDS", "Malaria", "Pneumonia", "Road traffic accident", "Maternal"]

AGE = ["elder", "adult", "child", "neonate"]
SEX = ["male", "female"]

# Grade per symptom and cause (columns follow CAUSES).
TABLE = {
    "elder":         ["B+", "B+", "A-", "B+", "N"],
    "adult":         ["A",  "A-", "A-", "A",  "I"],
    "child":         ["B+", "A",  "A-", "A-", "N"],
    "neonate":       ["N",  "B",  "B+", "N",  "N"],
    "male":          ["A",  "A",  "A",  "A+", "N"],
    "female":        ["A",  "A",  "A",  "A-", "I"],
    "pregnant":      ["C+", "C+", "C+", "C+", "A+"],
    "fever":         ["A",  "A+", "A",  "B-", "A-"],
    "cough":         ["A",  "B",  "A+", "C",  "C+"],
    "breathless":    ["A-", "B+", "A",  "B",  "B"],
    "chest_pain":    ["B+", "C+", "A-", "B",  "C"],
    "diarrhea":      ["A",  "B+", "B",  "C",  "C+"],
    "vomit":         ["B+", "A-", "B",  "B-", "B+"],
    "headache":      ["B+", "A",  "B",  "B",  "B"],
    "paralysis":     ["C",  "B-", "C",  "B+", "C"],
    "injury":        ["C",  "C",  "C",  "A+", "C"],
    "bleeding":      ["C",  "C",  "C",  "A-", "A"],
    "weight_loss":   ["A+", "B",  "B",  "C",  "C"],
    "rash":          ["A-", "B",  "C+", "C",  "C"],
    "baby_cried":    ["B",  "B",  "B",  "B",  "B"],
    "cried_stopped": ["C+", "C+", "C+", "C+", "C+"],
}
SYMPTOMS = list(TABLE)

CATEGORY = {"HIV/AIDS": "TB/AIDS", "Malaria": "Infectious", "Pneumonia": "Infectious",
            "Road traffic accident": "External", "Maternal": "Maternal"}


def value(symptom, k):
    return GRADES[TABLE[symptom][k]]


def simulate(rng, n, csmf, prefix):
    rows = []
    causes = rng.choice(len(CAUSES), size=n, p=csmf)
    for i, k in enumerate(causes):
        rec = {}
        age_w = np.array([value(a, k) for a in AGE])
        age = AGE[rng.choice(4, p=age_w / age_w.sum())]
        sex_w = np.array([value(s, k) for s in SEX])
        sex = SEX[rng.choice(2, p=sex_w / sex_w.sum())]
        for s in AGE:
            rec[s] = "yes" if s == age else "no"
        for s in SEX:
            rec[s] = "yes" if s == sex else "no"
        for s in SYMPTOMS:
            if s in rec:
                continue
            p = value(s, k)
            if s == "pregnant" and sex == "male":
                p = 0.0
            rec[s] = "yes" if rng.random() < p else "no"
            if rng.random() < 0.05:
                rec[s] = "dk"
        rec["ID"] = f"{prefix}{i + 1:04d}"
        rec["Cause"] = CAUSES[k]
        rows.append(rec)
    return rows


def canonical(token):
    return {"yes": "Y", "no": "", "dk": "."}[token]


def write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def physician_codes(rng, rows):
    out = []
    cats = sorted(set(CATEGORY.values()))
    for r in rows:
        truth = CATEGORY[r["Cause"]]
        codes = []
        for doc in ("doc1", "doc2", "doc3"):
            u = rng.random()
            if u < 0.15:
                codes += ["NA", "NA"]
            elif u < 0.2:
                codes += ["Unknown", doc]
            elif u < 0.85:
                codes += [truth, doc]
            else:
                codes += [cats[rng.integers(len(cats))], doc]
        out.append([r["ID"]] + codes[:4])
    return out


def main():
    rng = np.random.default_rng(20240101)
    OUT.mkdir(parents=True, exist_ok=True)
    train = simulate(rng, 400, [0.25, 0.2, 0.25, 0.15, 0.15], "T")
    test = simulate(rng, 200, [0.3, 0.15, 0.2, 0.2, 0.15], "D")

    header = ["ID"] + SYMPTOMS + ["Cause"]
    write(OUT / "raw.csv", header, [[r[h] for h in header] for r in test])
    write(OUT / "test.csv", header,
          [[r["ID"]] + [canonical(r[s]) for s in SYMPTOMS] + [r["Cause"]] for r in test])
    write(OUT / "train.csv", header,
          [[r["ID"]] + [canonical(r[s]) for s in SYMPTOMS] + [r["Cause"]] for r in train])
    write(OUT / "probbase.csv", ["symptom"] + CAUSES, [[s] + TABLE[s] for s in SYMPTOMS])
    write(OUT / "prevalence_tags.csv", ["cause", "tag"], [["HIV/AIDS", "hiv"], ["Malaria", "malaria"]])
    write(OUT / "category_map.csv", ["cause", "category"], [[c, CATEGORY[c]] for c in CAUSES])
    write(OUT / "grouping.csv", ["cause", "group"], [[c, CATEGORY[c]] for c in CAUSES])
    write(OUT / "physician.csv", ["ID", "code1", "rev1", "code2", "rev2"], physician_codes(rng, test))


if __name__ == "__main__":
    main()
