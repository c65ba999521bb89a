"""Fitting the small-level decay of the gradient norm on fibers.

Near the minimum the ratio r(t) = A(t) / V'(t) decays like c * t^nu; the
exponent nu controls how fast sublevel volumes shrink, via the certified
bound V(t) <= C t^(1 - nu).  The demo fits nu for three radial fields,
compares against the exact exponents, and prints the bound's tightness
across the fit window.  Run as:

    python3 demos/05_decay_exponent.py
"""

from sublevel_kit import check_decay_bound, fit_exponent, get_field


def main():
    print(f"{'field':>18} {'nu fit':>10} {'nu true':>8} {'residual':>10} "
          f"{'certified':>10}")
    fits = {}
    for fid in ("squared_norm:2", "quartic_norm:2", "euclidean_norm:2"):
        field, oracle = get_field(fid)
        fit = fit_exponent(field, resolution=192,
                           oracle_nu=oracle.loja_exponent)
        fits[fid] = fit
        print(f"{fid:>18} {fit.nu:10.5f} {oracle.loja_exponent:8.2f} "
              f"{fit.residual:10.2e} {str(fit.certified):>10}")
        for w in fit.warnings:
            print(f"{'':>18}   note: {w}")

    fit = fits["squared_norm:2"]
    rep = check_decay_bound(fit)
    print(f"\nvolume bound V(t) <= C t^(1-nu) for squared_norm:2 "
          f"(C = {fit.c_constant:.5f}, nu = {fit.nu:.5f}):")
    for t, v, bound, tight in rep.rows[::3]:
        print(f"  t = {t:6.4f}: V = {v:9.6f} <= {bound:9.6f} "
              f"(tightness {tight:.3f})")
    print(f"bound verdict: {'holds everywhere' if rep.passed else 'VIOLATED'}")


if __name__ == "__main__":
    main()
