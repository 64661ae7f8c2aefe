import json
import math

import pytest

import lexdiff


@pytest.fixture(scope="module")
def world():
    p = lexdiff.WorldParams()
    p.agents = 600
    p.counties = 20
    p.words = 3
    p.seeds_per_word = 5
    p.mean_degree = 8
    p.seed = 4
    w = lexdiff.generate_world(p)
    truth = lexdiff.SimulationConfig()
    truth.stickiness = 0.9
    for k, word in enumerate(w.words):
        truth.seed = 100 + k
        w.add_usage(word, truth)
    return w


def test_world_shape(world):
    assert world.num_agents == 600
    assert world.num_counties == 20
    assert world.words == ["w001", "w002", "w003"]
    assert len(world.seeds("w001")) == 5
    assert world.identity_dimension == 7
    assert all(0.0 <= v <= 1.0 for v in world.identity(0))
    assert world.usage_count("w001") >= 5


def test_round_trip(world, tmp_path):
    lexdiff.write_world(world, tmp_path / "w")
    back = lexdiff.load_world(tmp_path / "w")
    assert back.agent_ids == world.agent_ids
    assert back.num_edges == world.num_edges
    assert back.usage_count("w002") == world.usage_count("w002")


def test_validation_errors_list_problems(tmp_path):
    (tmp_path / "agents.tsv").write_text("a\t99999\n")
    with pytest.raises(lexdiff.ValidationError) as err:
        lexdiff.load_world(tmp_path)
    assert len(err.value.problems) >= 2
    assert isinstance(err.value, ValueError)


def test_simulate_is_deterministic(world):
    c = lexdiff.SimulationConfig()
    c.seed = 9
    c.mode = "network_only"
    a = lexdiff.simulate(world, "w001", c)
    b = lexdiff.simulate(world, "w001", c)
    assert a == b
    assert a["config"]["mode"] == "network_only"
    assert len(a["adopter_counts"]) == a["iterations"]
    assert sum(sum(it.values()) for it in a["county_uses"]) == a["total_uses"]
    with pytest.raises(lexdiff.InputError):
        lexdiff.simulate(world, "missing", c)
    c.q = 1.5
    with pytest.raises(ValueError):
        lexdiff.simulate(world, "w001", c)


def test_tuning(world):
    g = lexdiff.tune_global(world, multiplier=1.0, trials=1, q=[0.75], r=[0.4, 0.8], theta=[100])
    assert len(g["surface"]) == 2
    assert g["best"]["r"] in (0.4, 0.8)
    s = lexdiff.tune_stickiness(world, words=["w002"], multiplier=1.0, trials=1, grid=[0.5, 0.9])
    assert len(s) == 1
    assert s[0]["best"]["stickiness"] in (0.5, 0.9)


def test_experiment(world, tmp_path):
    plan = {
        "words": ["w001", "w002"],
        "trials": 2,
        "seed": 3,
        "simulation": {"stickiness": 0.9},
        "evaluation": {"neighbors": 5, "bootstrap": 100},
    }
    a = lexdiff.run_experiment(world, plan, threads=1, out_dir=tmp_path / "a")
    b = lexdiff.run_experiment(world, json.dumps(plan), threads=2)
    assert len(a["trials"]) == 2 * 4 * 2
    assert [t["total_uses"] for t in a["trials"]] == [t["total_uses"] for t in b["trials"]]
    assert a["digest"] == b["digest"]
    assert {m["mode"] for m in a["modes"]} == set(lexdiff.modes)
    assert (tmp_path / "a" / "summary.tsv").exists()
    # A world this small can leave too few pathways for the regression.
    assert all(f["word"] == "" and f["stage"] in ("regression", "regions") for f in a["failures"])
    assert max(t["total_uses"] for t in a["trials"]) > 100


def test_geostats():
    lat = [0.0, 0.0, 0.0, 0.0, 0.0]
    lon = [0.0, 1.0, 2.0, 3.0, 4.0]
    z = lexdiff.getis_ord([1, 1, 9, 1, 1], lat, lon, k=3)
    assert z[2] == max(z)
    assert abs(sum(z)) < 5
    assert lexdiff.getis_ord([2, 2, 2, 2, 2], lat, lon, k=3) is None
    assert lexdiff.lees_l([1, 2, 3, 4, 5], [1, 2, 3, 4, 5], lat, lon, k=2) > 0
    assert lexdiff.classify_similarity(0.5) == "very_similar"
    assert lexdiff.kendall_tau_b([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3)
    assert lexdiff.zero_inflated_tau([0, 0, 1, 2], [0, 0, 1, 2]) == pytest.approx(0.75)
    assert math.isclose(lexdiff.great_circle_km(0, 0, 0, 1), 111.19, rel_tol=1e-3)
