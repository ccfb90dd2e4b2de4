import math

import pytest

import chbell

OPTIMAL = [1.570796, 2.151407, 1.681738, 1.251473]
UNFIXED = [
    [46068, 29173, 46039, 27153020],
    [48076, 34145, 146205, 28352350],
    [150840, 34473, 47447, 27827318],
    [150505, 1862, 144070, 27926994],
]


def test_probabilities_sum_to_one():
    p = chbell.joint_detection_probabilities(0.26, 0.3, 0.7)
    assert math.isclose(sum(p), 1.0, abs_tol=1e-12)
    cc = (math.cos(0.3) * math.cos(0.7) + 0.26 * math.sin(0.3) * math.sin(0.7)) ** 2 / (1 + 0.26**2)
    assert math.isclose(p[0], cc, abs_tol=1e-12)


def test_published_matrix():
    ch, ratio, violated = chbell.ch_linear(UNFIXED)
    assert abs(ch - 5.8701e-05) < 1e-9
    assert violated and ratio > 1


def test_bad_arguments_raise():
    with pytest.raises(ValueError):
        chbell.joint_detection_probabilities(2.0, 0, 0)
    with pytest.raises(ValueError):
        chbell.ch_linear(UNFIXED[:3])


def test_simulation_is_seeded():
    a = chbell.run_experiment(angles=OPTIMAL, runs=10, seed=4, sampling="aggregated")
    b = chbell.run_experiment(angles=OPTIMAL, runs=10, seed=4, sampling="aggregated")
    assert a == b
    assert 0.0 <= a["positivity"] <= 1.0


def test_search_smoke():
    r = chbell.powell_search(runs=10, replicates=2, seed=1)
    assert r["angles"][0] == pytest.approx(math.pi / 2)
    assert r["best_score"] > 0


def test_greedy():
    assert chbell.greedy_coincidences([0.0], [10.0], 10.0) == 1
    assert chbell.greedy_coincidences([0.0, 1.0], [0.5], 1.0) == 1


def test_cli_pipeline(tmp_path):
    ev, binary = str(tmp_path / "ev.txt"), str(tmp_path / "ev.bin")
    code, _, err = chbell.run_cli(["synth", "--efficiency", "1", "--runs", "1", "--partition-size", "2000",
                                   "-o", ev, "--out", str(tmp_path / "s.txt")])
    assert code == 0, err
    code, _, err = chbell.run_cli(["compile", ev, "-o", binary, "--out", str(tmp_path / "c.txt")])
    assert code == 0, err
    full = chbell.analyze(binary, partition_size=500)
    legacy = chbell.analyze(binary, partition_size=500, mode="legacy")
    assert full["counts"] == legacy["counts"]
    assert full["total"] >= full["sufficient"] >= full["positive"]
    code, _, err = chbell.run_cli(["analyze", str(tmp_path / "missing.bin")])
    assert code != 0 and "not found" in err
