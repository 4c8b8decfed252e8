import pathlib

import pytest

import qpfkam

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def test_golden_convergents():
    cf = qpfkam.convergents("golden", 20)
    q = cf["q"]
    assert all(q[n] == q[n - 1] + q[n - 2] for n in range(2, 20))
    assert abs(cf["alpha"] - 0.6180339887498949) < 1e-15


def test_rational_frequency():
    cf = qpfkam.convergents({"kind": "rational", "num": 3, "den": 7}, 10)
    assert cf["rational_input"]
    assert cf["partial_quotients"] == [2, 3]


def test_run_names():
    assert "kam-run" in qpfkam.run_names()


def test_norm_run():
    status, result, _ = qpfkam.run_file(str(CONFIGS / "norm_example.json"))
    assert status == 0
    assert result["status"] == 0


def test_cf_run_tables():
    status, _, tables = qpfkam.run({"run": "cf", "params": {"depth": 10}})
    assert status == 0
    header, rows = tables["convergents.csv"]
    assert header == ["n", "a_n", "p_n", "q_n"]
    assert len(rows) == 10


def test_bad_config_raises():
    with pytest.raises(qpfkam.QpfkamError):
        qpfkam.run({"run": "no-such-run"})
