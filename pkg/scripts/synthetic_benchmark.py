#!/usr/bin/env python3
"""Compare SOLS and SOPP ensembles against their inputs on synthetic families.

Prints three tables per run: convergence (final residual and iteration
count), synonym mean ranks, and analogy Hit@1/Hit@10 with the mean, min and
max over the input models.

    python scripts/synthetic_benchmark.py --dims 20 50 --seeds 0 1 2 --noise-sigma 0.7
"""

import argparse

import numpy as np

from wordensemble.alignment import CombineConfig, combine
from wordensemble.evaluation import run_analogy_test, run_synonym_test
from wordensemble.synthetic import SyntheticSpec, generate_family, recovery_error


def evaluate(model, fam):
    syn = run_synonym_test(model, fam.planted_synonyms)
    ana = run_analogy_test(model, fam.planted_analogies)
    return syn.mean_rank, ana.hit_at_1, ana.hit_at_10, recovery_error(fam, model)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--dims", type=int, nargs="+", default=[50])
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--vocab-size", type=int, default=2000)
    parser.add_argument("--n-models", type=int, default=10)
    parser.add_argument("--noise-sigma", type=float, default=0.7)
    parser.add_argument("--threshold", type=float, default=0.001)
    args = parser.parse_args()

    conv_rows, syn_rows, ana_rows = [], [], []
    for dim in args.dims:
        acc = {k: [] for k in ("sols", "sopp", "in_rank", "in_h1", "in_h10", "min_h1", "max_h1",
                               "sols_it", "sopp_it", "sols_err", "sopp_err", "in_rec", "sopp_rec")}
        for seed in args.seeds:
            fam = generate_family(SyntheticSpec(vocab_size=args.vocab_size, dim=dim, n_models=args.n_models,
                                                noise_sigma=args.noise_sigma, seed=seed))
            inputs = list(fam.inputs)
            res = {m: combine(inputs, CombineConfig(method=m, threshold=args.threshold)) for m in ("sols", "sopp")}
            ins = [evaluate(m, fam) for m in inputs]
            for m in ("sols", "sopp"):
                acc[m].append(evaluate(res[m].combined, fam))
                acc[f"{m}_it"].append(res[m].iterations)
                acc[f"{m}_err"].append(res[m].residual_history[-1])
            acc["in_rank"].append(np.mean([r[0] for r in ins]))
            acc["in_h1"].append(np.mean([r[1] for r in ins]))
            acc["in_h10"].append(np.mean([r[2] for r in ins]))
            acc["min_h1"].append(min(r[1] for r in ins))
            acc["max_h1"].append(max(r[1] for r in ins))
            acc["in_rec"].append(np.mean([r[3] for r in ins]))

        sols, sopp = np.mean(acc["sols"], axis=0), np.mean(acc["sopp"], axis=0)
        conv_rows.append((dim, np.mean(acc["sols_err"]), np.mean(acc["sols_it"]),
                          np.mean(acc["sopp_err"]), np.mean(acc["sopp_it"])))
        syn_rows.append((dim, sols[0], sopp[0], np.mean(acc["in_rank"])))
        ana_rows.append((dim, sols[1], sopp[1], np.mean(acc["in_h1"]), np.mean(acc["min_h1"]),
                         np.mean(acc["max_h1"]), sols[2], sopp[2], np.mean(acc["in_h10"]),
                         np.mean(acc["in_rec"]), sopp[3]))

    print(f"seeds {args.seeds}, |V|={args.vocab_size}, r={args.n_models}, noise {args.noise_sigma}\n")
    print(f"{'dim':>4} {'SOLS err':>9} {'#it':>5} {'SOPP err':>9} {'#it':>5}")
    for d, e1, i1, e2, i2 in conv_rows:
        print(f"{d:>4} {e1:9.6f} {i1:5.1f} {e2:9.6f} {i2:5.1f}")
    print(f"\n{'dim':>4} {'SOLS':>8} {'SOPP':>8} {'mean W':>8}   (synonym mean rank)")
    for d, a, b, c in syn_rows:
        print(f"{d:>4} {a:8.2f} {b:8.2f} {c:8.2f}")
    print(f"\n{'dim':>4} {'h1 SOLS':>8} {'SOPP':>6} {'meanW':>6} {'minW':>6} {'maxW':>6}"
          f" {'h10 SOLS':>9} {'SOPP':>6} {'meanW':>6}  {'rec W':>6} {'rec SOPP':>8}")
    for row in ana_rows:
        d, *vals = row
        print(f"{d:>4} " + " ".join(f"{v:6.3f}" for v in vals))


if __name__ == "__main__":
    main()
