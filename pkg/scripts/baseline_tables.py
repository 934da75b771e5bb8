"""Classical factor-analytic baseline on the presets, one table row per group.

    python3 scripts/baseline_tables.py --datasets d1 d3 --seeds 0-2
"""

import argparse

from respclust.baseline import classical_pipeline
from respclust.synthgen import generate_preset


def seed_range(text):
    lo, _, hi = text.partition("-")
    return list(range(int(lo), int(hi or lo) + 1))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datasets", nargs="+", default=["d1", "d2", "d3"])
    ap.add_argument("--seeds", type=seed_range, default=seed_range("0"))
    args = ap.parse_args(argv)

    head = f"{'data':>4} {'seed':>4} {'group':>5} {'bartlett_p':>10} {'kmo':>6} {'kaiser':>6} {'alpha':>6}  verdict"
    for name in args.datasets:
        for seed in args.seeds:
            rep = classical_pipeline(generate_preset(name, seed))
            print(head)
            for g in rep.groups:
                verdict = "ok" if g.applicable else "blocked: " + ", ".join(g.reasons)
                print(f"{name:>4} {seed:>4} {g.group:>5} {g.bartlett['p']:>10.2e} {g.kmo['overall']:>6.3f} "
                      f"{g.n_kaiser_components:>6} {g.cronbach_alpha:>6.3f}  {verdict}")
            if rep.kruskal_wallis is not None:
                kw = rep.kruskal_wallis
                print(f"  Kruskal-Wallis H={kw['H']:.2f} df={kw['df']} p={kw['p']:.2e}")
                for r in rep.dunn:
                    flag = "" if r["p_adjusted"] <= 0.05 else "  (n.s.)"
                    print(f"  Dunn {'-'.join(r['pair'])}: z={r['z']:+.2f} p_adj={r['p_adjusted']:.3g}{flag}")
            print()


if __name__ == "__main__":
    main()
