#!/usr/bin/env python3
"""Regenerates crates/core/fixtures/toy_corpus.jsonl (deterministic)."""
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "crates" / "core" / "fixtures"

rng = random.Random(20250711)
names = [n for n in (FIX / "iupac_names.txt").read_text().split("\n") if n]
names = names[-600:]

catalysts = ["palladium acetate", "copper iodide", "nickel chloride", "ruthenium trichloride",
             "iron porphyrin", "zinc triflate", "scandium triflate", "rhodium carbonyl",
             "titanium isopropoxide", "cobalt salen"]
solvents = ["tetrahydrofuran", "dichloromethane", "acetonitrile", "toluene", "dimethylformamide",
            "methanol", "ethyl acetate", "dimethyl sulfoxide", "water", "dioxane"]
methods = ["nuclear magnetic resonance", "mass spectrometry", "infrared spectroscopy",
           "x-ray diffraction", "cyclic voltammetry", "gas chromatography",
           "high performance liquid chromatography", "differential scanning calorimetry"]
props = ["solubility", "melting point", "oxidation potential", "binding affinity",
         "quantum yield", "thermal stability", "enantiomeric excess", "band gap"]
topics = ["cross coupling", "asymmetric hydrogenation", "photoredox catalysis", "polymerization",
          "electrochemical reduction", "ligand design", "crystal engineering", "drug discovery"]
sources = ["chemrxiv", "s2orc", "pubchem"]

templates = [
    "We report the {topic} of {name} using {cat} in {solv} at {temp} degrees Celsius. "
    "The reaction reached a yield of {yld} percent after {hours} hours, and the product was "
    "characterized by {meth}. Control experiments without {cat} gave no conversion, which "
    "indicates that the metal center is required for turnover. The {prop} of the isolated "
    "material was measured as {val} and compared with related compounds reported earlier. "
    "Kinetic analysis revealed a first order dependence on the substrate concentration and "
    "a pronounced solvent effect when {solv} was replaced with {solv2}.",
    "The compound {name} was prepared in {steps} steps from commercially available starting "
    "materials. Its {prop} was determined to be {val} using {meth}, which is substantially "
    "different from the value predicted by density functional theory calculations. We attribute "
    "this discrepancy to intermolecular hydrogen bonding in the solid state. When the synthesis "
    "was carried out in {solv} with {cat} as the catalyst, the overall yield improved to {yld} "
    "percent and the purification required only a single recrystallization from {solv2}.",
    "In the context of {topic}, {name} serves as a versatile building block. Screening of "
    "{n} catalysts showed that {cat} provides the highest selectivity, while reactions in "
    "{solv} proceeded faster than those in {solv2}. The {prop} of the resulting products "
    "correlated linearly with the electronic character of the substituents, as confirmed by "
    "{meth}. These observations suggest that the rate determining step involves oxidative "
    "addition, and they provide design principles for related transformations at {temp} "
    "degrees Celsius with loadings as low as {load} mol percent.",
]

records = []
for i in range(140):
    t = rng.choice(templates)
    solv, solv2 = rng.sample(solvents, 2)
    text = t.format(
        topic=rng.choice(topics), name=names[i * 3], cat=rng.choice(catalysts), solv=solv,
        solv2=solv2, temp=rng.randint(20, 160), yld=rng.randint(35, 98), hours=rng.randint(1, 48),
        meth=rng.choice(methods), prop=rng.choice(props), val=f"{rng.uniform(0.1, 250):.2f}",
        steps=rng.randint(2, 9), n=rng.randint(6, 30), load=rng.choice([0.5, 1, 2, 5]),
    )
    records.append({"_id": f"toy-{i:04d}", "title": "", "text": text, "source": rng.choice(sources)})

short = [
    "Spectra are shown in the supporting information.",
    "Yields refer to isolated material after chromatography.",
    "All reagents were used as received unless noted otherwise.",
    "See Table 2 for the full screening data.",
    "Computational details are provided below.",
    "The authors declare no competing financial interest.",
    "Crystal data were deposited with the structural database.",
    "Reaction conditions were optimized as described previously.",
]
for j, text in enumerate(short):
    records.append({"_id": f"toy-short-{j:02d}", "title": "", "text": text, "source": "chemrxiv"})

funding = (
    "This work was supported by the national research council under grant number {g}. "
    "The authors acknowledge funding from the foundation for advanced studies and thank the "
    "institutional computing center for providing computational resources. We also thank our "
    "colleagues for helpful discussions and the technical staff for their assistance with "
    "instrument maintenance during the course of this project, and we are grateful to the "
    "anonymous reviewers whose comments improved the manuscript considerably."
)
for j in range(4):
    records.append({"_id": f"toy-ack-{j:02d}", "title": "", "text": funding.format(g=rng.randint(10000, 99999)),
                    "source": "s2orc"})

rng.shuffle(records)
with open(FIX / "toy_corpus.jsonl", "w") as f:
    for r in records:
        f.write(json.dumps(r, ensure_ascii=False) + "\n")
print(len(records))
