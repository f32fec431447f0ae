import pytest

PERF_FIXTURE = """algorithm,ratio,fraction
A,1.000000,0.333333
A,1.000000,0.666667
A,1.500000,1.000000
B,1.000000,0.333333
B,1.250000,0.666667
B,2.000000,1.000000
"""

CONV_FIXTURE = """algorithm,elapsed_s,geomean_best
evolve,1,50
evolve,10,42
evolve,100,40
"""


@pytest.fixture
def perf_csv(tmp_path):
    path = tmp_path / "perf.csv"
    path.write_text(PERF_FIXTURE)
    return str(path)


@pytest.fixture
def conv_csv(tmp_path):
    path = tmp_path / "conv.csv"
    path.write_text(CONV_FIXTURE)
    return str(path)
