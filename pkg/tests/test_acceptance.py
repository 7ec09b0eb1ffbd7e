"""End-to-end acceptance criteria at full size.

Each test prints one ``[PASS]`` / ``[FAIL]`` line so the outcome is
visible in the ``pytest -v`` log.
"""
import json

import pytest

from ssa_sim.cli import main
from ssa_sim.cost_model import REFERENCE_TABLE_UJ
from ssa_sim.verify import (
    check_count_trace, check_exact_params, check_sc_product, check_simulator, check_statistical,
)

GRID = (2, 4, 8, 16)
pytestmark = pytest.mark.slow


def _report(capsys, label, result):
    with capsys.disabled():
        print(f"\n{label}: {result.line()}")
    assert result.passed, result.line()


@pytest.fixture(scope="module")
def simulator_results():
    return check_simulator(grid=GRID, t=64, seeds=30)


def test_criterion_1_sc_multiplication(capsys):
    res = check_sc_product(t=1 << 16, seeds=10, levels=(0.0, 0.25, 0.5, 0.75, 1.0))
    assert res.stats["cases"] == 25 * 10
    _report(capsys, "criterion 1", res)


def test_criterion_2_exact_parameters(capsys):
    res = check_exact_params(grid=GRID, instances=100)
    assert res.stats["instances"] == 16 * 100
    _report(capsys, "criterion 2", res)


def test_criterion_3_bit_exactness(capsys, simulator_results):
    res = simulator_results[0]
    assert res.stats["cells"] == 16 * 30
    _report(capsys, "criterion 3", res)


def test_criterion_4_cycle_contracts(capsys, simulator_results):
    _report(capsys, "criterion 4", simulator_results[1])


def test_criterion_5_statistical_convergence(capsys):
    res = check_statistical(n=8, d_k=16, t=4096, seeds=30, tol=0.05, fraction=0.99)
    assert res.stats["elements"] == 30 * 8 * 16
    _report(capsys, "criterion 5", res)


def test_criterion_6_count_trace_agreement(capsys):
    res = check_count_trace(cells=10, grid=GRID)
    assert res.stats["cells"] == 10
    _report(capsys, "criterion 6", res)


def test_criterion_7_reported_result_status(capsys, tmp_path):
    # accuracy results need full transformer training and are out of scope;
    # the energy table is reproduced in structure with published values as anchors
    assert main(["energy", "--n", "64", "--d-k", "64", "--t", "10", "-o", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "energy.json").read_text())
    rows = report["rows"]
    structure = set(rows) == {"ann", "spikformer", "ssa"} and all(
        r["total_uj"] == pytest.approx(r["processing_uj"] + r["memory_uj"]) for r in rows.values())
    anchors = REFERENCE_TABLE_UJ["ssa"] == (1.23, 52.80, 54.03)
    cross = report["trace_crosscheck"]["agrees"]
    ok = structure and anchors and cross
    with capsys.disabled():
        print(f"\ncriterion 7: [{'PASS' if ok else 'FAIL'}] energy table structure={structure}, "
              f"reference anchors={anchors}, count crosscheck={cross}; "
              "accuracy figures not reproducible at desk scale (documented)")
    assert ok
