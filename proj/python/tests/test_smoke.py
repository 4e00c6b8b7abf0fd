import numpy as np
import pytest

import stkm


@pytest.fixture(scope="module")
def scenario():
    return stkm.generate(n_clusters=3, points_per_cluster=[20], T=15, seed=1)


def test_generate_shapes(scenario):
    assert scenario["positions"].shape == (15, 60, 2)
    assert scenario["truth"].shape == (60,)
    assert scenario["centers"].shape == (15, 3, 2)


def test_fit_and_phase2_recover_truth(scenario):
    result = stkm.fit(scenario["positions"], k=3, lam=0.8)
    assert result["weights"].shape == (15, 60, 3)
    np.testing.assert_allclose(result["weights"].sum(axis=2), 1.0, atol=1e-9)
    trace = result["objective_trace"]
    assert np.all(np.diff(trace) <= 1e-9 * np.abs(trace[:-1]) + 1e-9)
    value = stkm.objective(scenario["positions"], result["centers"], result["weights"], 0.8)
    assert value == pytest.approx(trace[-1])

    labels = stkm.extract_assignments(result["weights"])
    assert labels.shape == (15, 60)
    sim = stkm.similarity_matrix(labels)
    np.testing.assert_array_equal(np.diag(sim), 1.0)
    lt = stkm.long_term_clusters(labels, k_target=3)
    assert stkm.long_term_ami(lt["partition"], scenario["truth"]) == 1.0
    assert stkm.total_ami(labels, scenario["truth"]) > 0.8


def test_fit_robust(scenario):
    result = stkm.fit_robust(scenario["positions"], k=3, c_const=1.0)
    assert result["centers"].shape == (15, 3, 2)


def test_project_simplex():
    np.testing.assert_allclose(stkm.project_simplex([2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(stkm.project_simplex([0.2, 0.2, 0.2]), [1 / 3] * 3)


def test_ami():
    assert stkm.ami([0, 0, 1, 1], [5, 5, 2, 2]) == 1.0
    assert stkm.ami([0, 0, 1, 1], [0, 0, 0, 0]) == 0.0


def test_load_trajectories(tmp_path):
    path = tmp_path / "gap.csv"
    path.write_text("id,t,x\na,0,0\na,2,2\nb,0,1\nb,1,1\nb,2,1\n")
    loaded = stkm.load_trajectories(path, interval=1.0)
    assert loaded["ids"] == ["a", "b"]
    assert loaded["positions"][1, 0, 0] == 1.0


def test_errors_raise():
    with pytest.raises(stkm.StkmError):
        stkm.fit(np.zeros((3, 4, 2)), k=2, lam=1.5)
    with pytest.raises(ValueError):
        stkm.project_simplex(np.zeros((2, 2)))
