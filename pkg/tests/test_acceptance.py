"""Acceptance criteria, one test per criterion at its stated tolerance.

Each test records a PASS/FAIL line; ``conftest.py`` prints them in the
terminal summary.  Run standalone with ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from parosc import cli, kernels, squarefn, symbols, verify
from parosc.families import eigenfunction, random_band_limited, wave_packets
from parosc.grids import GridSpec
from parosc.transform import analyze, synthesize

RESULTS = {}

SPEC = GridSpec(rho_halfwidth=8.0, rho_points=64, x_halfwidth=10.0, x_points=64)
PACKET_SPEC = GridSpec(rho_halfwidth=16.0, rho_points=128, x_halfwidth=10.0, x_points=80)


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} :: {detail}"
    RESULTS[number] = line
    print(line)
    return passed


def criterion_1():
    start = time.perf_counter()
    worst = {}
    for d in (1, 2):
        for n in (1, 2, 3):
            ratios = np.array(verify.g_identity_ratios(n, d, count=20, seed=0))
            worst[(n, d)] = float(np.max(np.abs(ratios / squarefn.gamma_constant(n) - 1.0)))
    elapsed = time.perf_counter() - start
    err = max(worst.values())
    return record(1, "exact g_N identity (N=1,2,3; d=1,2; 20 inputs)", err < 1e-2 and elapsed < 60,
                  f"max rel. deviation {err:.2e} < 1e-2, runtime {elapsed:.1f}s < 60s")


def criterion_2():
    start = time.perf_counter()
    errs = {(d, r): float(verify.mehler_errors(0, d, r).max()) for d in (1, 2) for r in (0.3, 0.5, 0.7)}
    elapsed = time.perf_counter() - start
    err = max(errs.values())
    detail = ", ".join(f"d={d} r={r}: {e:.1e}" for (d, r), e in errs.items())
    return record(2, "Mehler series K=60 vs closed form", err < 1e-8 and elapsed < 10,
                  f"max rel. err {err:.2e} (< 1e-8 required) [{detail}], runtime {elapsed:.1f}s")


def criterion_3():
    errs = {t: float(verify.heat_kernel_errors(0, t).max()) for t in (0.3, 0.5, 1.0)}
    defect = verify.semigroup_defect(0.5, 0.5)
    ok = max(errs.values()) < 1e-6 and defect < 1e-5
    return record(3, "heat kernel closed form vs spectral sum; semigroup", ok,
                  f"max rel. err {max(errs.values()):.2e} < 1e-6, semigroup defect {defect:.2e} < 1e-5")


def criterion_4():
    checks = verify.suite_plancherel(0)
    ok = all(c.passed for c in checks)
    detail = "; ".join(f"{c.name} {c.measured:.3g} {c.relation} {c.tolerance:g}" for c in checks)
    return record(4, "mixed-transform isometry and H_par stencil order", ok, detail)


def criterion_5():
    errs = verify.polylog_errors(0, samples=20)
    worst = max(errs.values())
    exact = max(abs(kernels.polylog_neg(0, 0.5) - 1.0), abs(kernels.polylog_neg(1, 0.5) - 2.0),
                abs(kernels.polylog_neg(0, -1.0) + 0.5), abs(kernels.polylog_neg(1, -1.0) + 0.25),
                abs(kernels.polylog_neg(1, 0.25) - 0.25 / 0.75 ** 2))
    return record(5, "coth/tanh derivatives N<=5 vs Richardson; Li_0, Li_-1", worst < 1e-6 and exact == 0,
                  f"max rel. err {worst:.2e} < 1e-6, rational defect {exact:.1e}")


def criterion_6():
    sym = symbols.imaginary_power_symbol(1.0)
    rows = []
    for n in (0, 1, 2):
        for name, (small, large) in (("heat", verify.kernel_bound_growth(n, 0)),
                                     ("M_t pointwise", verify.mt_pointwise_growth(n, sym, 0)),
                                     ("M_t integral", verify.mt_integral_growth(n, sym, 0))):
            rows.append((name, n, small, large, large / small))
    ok = all(math.isfinite(r[3]) and r[4] < 2.0 for r in rows)
    worst = max(r[4] for r in rows)
    return record(6, "kernel-bound sup ratios stable under x4 sampling (N=0,1,2; d=1)", ok,
                  f"max growth {worst:.3f} < 2 over {len(rows)} bounds, all finite")


def criterion_7():
    spec = GridSpec(rho_halfwidth=8.0, rho_points=32, x_halfwidth=10.0, x_points=64)
    max_degree = 12
    family = random_band_limited(spec, 4, seed=0, tau_band=6, degree_band=10, max_degree=max_degree)
    names = list(symbols.REGISTRY_EXAMPLES) + ["lp-block:j=2,normalized=1"]
    worst_excess = worst_eq = 0.0
    for name in names:
        sym = symbols.parse_symbol(name)
        sup = symbols.spectrum_sup(family[0], sym)
        for s in family:
            ratio = synthesize(symbols.apply_symbol(s, sym)).lp_norm(2) / synthesize(s).lp_norm(2)
            worst_excess = max(worst_excess, ratio / sup - 1.0)
        # eigenfunction at the resolved maximizer of |m|
        table = np.abs(symbols.symbol_table(family[0], sym))
        i, mu = np.unravel_index(np.argmax(table), table.shape)
        f = eigenfunction(spec, int(spec.tau_bins[i]), family[0].multi_indices[mu])
        s = analyze(f, max_degree)
        ratio = synthesize(symbols.apply_symbol(s, sym)).lp_norm(2) / f.lp_norm(2)
        worst_eq = max(worst_eq, abs(ratio - sup))
    ok = worst_excess <= 1e-12 and worst_eq < 1e-10
    return record(7, "p=2 multiplier bound and sharpness on eigenfunctions", ok,
                  f"max (ratio/sup - 1) {worst_excess:.1e} <= 0, eigenfunction |ratio - sup| "
                  f"{worst_eq:.1e} < 1e-10 over {len(names)} symbols")


def criterion_8():
    family = random_band_limited(SPEC, 16, seed=0, tau_band=5, degree_band=8, max_degree=16)
    rep = squarefn.lp_equivalence_probe(family, (1.5, 2.0, 3.0), seed=0)
    r = rep.results
    p2 = max(abs(r["2.0"]["c1"] - 1.0), abs(r["2.0"]["c2"] - 1.0))
    moves = {p: r[p]["relative_change"] for p in ("1.5", "3.0")}
    ok = p2 < 1e-6 and all(v <= 0.25 for v in moves.values())
    return record(8, "Littlewood-Paley p=2 exact; p=1.5,3 bands stable", ok,
                  f"p=2 deviation {p2:.1e} < 1e-6; band change under doubling "
                  f"p=1.5 {moves['1.5']:.1%}, p=3 {moves['3.0']:.1%} (<= 25%); "
                  f"bands [{r['1.5']['c1']:.3f}, {r['1.5']['c2']:.3f}], [{r['3.0']['c1']:.3f}, {r['3.0']['c2']:.3f}]")


def criterion_9():
    order = symbols.default_order(1)
    family = wave_packets(PACKET_SPEC, 32, seed=0)
    rep = squarefn.pointwise_domination_probe(order, symbols.imaginary_power_symbol(1.0), family, 0,
                                              max_degree=30, stability_tol=0.2)
    r = rep.results
    return record(9, f"domination probe g_(N+1)(T_m f) <= C g*_N(f), N={order}, d=1", rep.passed,
                  f"C(16)={r['constant_half']:.3f}, C(32)={r['constant']:.3f}, "
                  f"change {r['relative_change']:.1%} <= 20%")


def criterion_10(tmp_path):
    small = ["--grid.rho_points", "128", "--grid.x_halfwidth", "10", "--grid.x_points", "80",
             "--hermite.max_degree", "30"]
    runs = {
        "domination": small + ["--probe.family_size", "2", "probe", "domination",
                               "--symbol", "imaginary-power:gamma=1"],
        "lp-equivalence": small + ["--probe.family_size", "4", "--hermite.max_degree", "16",
                                   "probe", "lp-equivalence"],
        "kernel-bounds": ["--probe.samples", "200", "probe", "kernel-bounds",
                          "--symbol", "imaginary-power:gamma=1"],
        "certify": ["certify", "--symbol", "riesz-like:theta=0.5", "--certify.samples", "1024"],
    }
    identical = {}
    for name, argv in runs.items():
        blobs = []
        for rep in range(2):
            out = tmp_path / f"{name}-{rep}.json"
            cli.main(["--seed", "12345"] + argv + ["--out", str(out)])
            blobs.append(out.read_bytes())
        identical[name] = blobs[0] == blobs[1] and len(blobs[0]) > 0 and b'"seed": 12345' in blobs[0]
    return record(10, "byte-identical reports for a fixed seed", all(identical.values()),
                  ", ".join(f"{k}: {'identical' if v else 'DIFFERENT'}" for k, v in identical.items()))


def test_criterion_01_g_identity():
    assert criterion_1()


def test_criterion_02_mehler():
    assert criterion_2()


def test_criterion_03_heat_kernel():
    assert criterion_3()


def test_criterion_04_isometry():
    assert criterion_4()


def test_criterion_05_polylog():
    assert criterion_5()


def test_criterion_06_kernel_bounds():
    assert criterion_6()


def test_criterion_07_multiplier_sharpness():
    assert criterion_7()


def test_criterion_08_littlewood_paley():
    assert criterion_8()


def test_criterion_09_domination():
    assert criterion_9()


def test_criterion_10_determinism(tmp_path):
    assert criterion_10(tmp_path)


if __name__ == "__main__":
    import pathlib
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        for k in range(1, 10):
            globals()[f"criterion_{k}"]()
        criterion_10(pathlib.Path(tmp))
