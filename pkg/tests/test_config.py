import pytest

from kdqi.config import Param, config_hash, read_config_file, resolve
from kdqi.errors import ConfigError
from kdqi.seeding import derive_seed, task_rng

PARAMS = [Param("p", "int", 31), Param("eta", "float", 0.1), Param("grid", "floats", None),
          Param("reduced", "bool", True)]


def test_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\np = 7\neta = 0.2  # trailing\ngrid = 0.1, 0.2\nreduced = no\n")
    vals = resolve(PARAMS, read_config_file(f), {"eta": 0.3, "p": None})
    assert vals == {"p": 7, "eta": 0.3, "grid": (0.1, 0.2), "reduced": False}


def test_errors(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("nonsense\n")
    with pytest.raises(ConfigError):
        read_config_file(f)
    with pytest.raises(ConfigError):
        resolve(PARAMS, {"q": "1"}, {})
    with pytest.raises(ConfigError):
        resolve(PARAMS, {"p": "x"}, {})
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.cfg")
    assert resolve(PARAMS, {"seed": "3"}, {})["p"] == 31


def test_hash_is_stable_and_sensitive():
    a = config_hash("x", {"p": 7, "g": (1.0, 2.0)}, 0)
    assert a == config_hash("x", {"g": (1.0, 2.0), "p": 7}, 0)
    assert a != config_hash("x", {"p": 7, "g": (1.0, 2.0)}, 1)
    assert len(a) == 16


def test_seed_derivation():
    assert derive_seed(0, "a", 1) == derive_seed(0, "a", 1)
    assert len({derive_seed(0, "a", i) for i in range(100)}) == 100
    assert derive_seed(0, "a", 0) != derive_seed(0, "b", 0)
    assert task_rng(1, "k", 2).random() == task_rng(1, "k", 2).random()
