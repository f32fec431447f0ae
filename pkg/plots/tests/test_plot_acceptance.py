"""Acceptance checks for the renderer: the drawn step curves pass through the
hand-computed points, and a single-trajectory convergence render is the
identity."""

import pytest

from hgplots import PlotSpec, load_series, render

# three instances, two algorithms: A is best on two and 1.5x worse on the
# third, so its curve passes through (1.0, 2/3) and (1.5, 1.0)
PERF_THREE_INSTANCE = """algorithm,ratio,fraction
A,1.000000,0.333333
A,1.000000,0.666667
A,1.500000,1.000000
B,1.000000,0.333333
B,1.250000,0.666667
B,2.000000,1.000000
"""


def test_performance_curve_hits_hand_computed_points(tmp_path):
    path = tmp_path / "perf.csv"
    path.write_text(PERF_THREE_INSTANCE)
    series = load_series([str(path)], "performance")
    a = series["A"]
    assert (a[1][0], a[1][1]) == (1.0, pytest.approx(2 / 3, abs=1e-6))
    assert a[-1] == (1.5, pytest.approx(1.0))
    # fraction-of-best is the height at r = 1.0
    assert max(f for r, f in a if r == 1.0) == pytest.approx(2 / 3, abs=1e-6)
    assert max(f for r, f in series["B"] if r == 1.0) == pytest.approx(1 / 3, abs=1e-6)
    # curves are monotone step functions
    for pts in series.values():
        fractions = [f for _, f in pts]
        assert fractions == sorted(fractions)
    out = str(tmp_path / "perf.svg")
    render(PlotSpec(inputs=[str(path)], kind="performance", output=out))
    with open(out) as f:
        content = f.read()
    assert "<svg" in content and content.count("<path") > 2
    print("\nACCEPTANCE performance-plot-semantics: PASS")


def test_convergence_identity_single_trajectory(tmp_path):
    # aggregating one instance and one seed is the identity, so the rendered
    # series must equal the raw trajectory value-for-value
    raw = [(1.0, 50.0), (10.0, 42.0), (100.0, 40.0)]
    path = tmp_path / "conv.csv"
    path.write_text(
        "algorithm,elapsed_s,geomean_best\n"
        + "".join(f"evolve,{t},{v}\n" for t, v in raw)
    )
    series = load_series([str(path)], "convergence")
    assert series["evolve"] == [(t, pytest.approx(v)) for t, v in raw]
    out = str(tmp_path / "conv.svg")
    render(PlotSpec(inputs=[str(path)], kind="convergence", output=out))
    with open(out) as f:
        assert "<svg" in f.read()
    print("\nACCEPTANCE convergence-plot-semantics: PASS")
