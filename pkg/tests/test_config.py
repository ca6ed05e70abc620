import pytest
from hypothesis import given
from hypothesis import strategies as st

from phqnet.config import RunConfig, parse_modalities
from phqnet.errors import ConfigError
from phqnet.seeding import derive_rng


def test_defaults():
    c = RunConfig()
    assert (c.layers, c.kernel, c.hidden, c.dropout, c.batch_size) == (10, 5, 128, 0.5, 16)
    assert c.lr == 1e-3
    assert c.replace(task="regression").lr == 1e-5
    assert c.replace(task="regression", learning_rate=0.01).lr == 0.01


def test_round_trip_is_identity(tmp_path):
    c = RunConfig(task="regression", modalities="a,l", learning_rate=3e-4, seed=11, embeddings="x y.txt")
    assert RunConfig.loads(c.dumps()) == c
    c.save(tmp_path / "c.cfg")
    assert RunConfig.load(tmp_path / "c.cfg") == c


@given(st.integers(0, 2**31), st.floats(1e-6, 1.0), st.sampled_from(["a", "v", "l", "a,v,l", "v,a"]))
def test_round_trip_property(seed, lr, mods):
    c = RunConfig(seed=seed, learning_rate=lr, modalities=mods)
    assert RunConfig.loads(c.dumps()) == c


def test_modalities_are_canonically_ordered():
    assert parse_modalities("l,a") == ("audio", "linguistic")
    with pytest.raises(ConfigError, match="linguistic"):
        parse_modalities("x")
    with pytest.raises(ConfigError):
        parse_modalities("")


@pytest.mark.parametrize("text", ["nope = 1", "epochs", "epochs = x", "epochs = 1\nepochs = 2", "dropout = 1.0",
                                  "encoder = mean"])
def test_bad_files(text):
    with pytest.raises(ConfigError):
        RunConfig.loads(text)


def test_derived_streams_are_independent():
    a = derive_rng(1, "trainer/shuffle").random(3)
    assert (a == derive_rng(1, "trainer/shuffle").random(3)).all()
    assert not (a == derive_rng(1, "trainer/dropout").random(3)).any()
    assert not (a == derive_rng(2, "trainer/shuffle").random(3)).any()
