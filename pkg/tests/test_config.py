import math

import pytest
from hypothesis import given, settings, strategies as st

from geflab.config import RunConfig, load, loads
from geflab.errors import ConfigError

floats = st.floats(1e-6, 1e6, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32), radii=st.lists(floats, min_size=1, max_size=6), draws=st.integers(1, 10 ** 8),
       rho=floats, placement=st.sampled_from(["tiling", "continuous"]))
def test_round_trip(seed, radii, draws, rho, placement):
    cfg = RunConfig(seed=seed, radii=tuple(radii), draws=draws, rho=rho, placement=placement)
    assert loads(cfg.dumps()) == cfg


def test_defaults_and_digest():
    a = loads("seed = 1\n")
    assert a.fit_hi == math.inf and a.placement == "continuous"
    assert a.digest() == loads(a.dumps()).digest()
    assert a.digest() != loads("seed = 2\n").digest()


def test_comments_and_whitespace():
    cfg = loads("# a comment\n\n  seed=4  \npairs = zz ,cc\n")
    assert cfg.seed == 4 and cfg.pairs == ("zz", "cc")


@pytest.mark.parametrize("text,line,field", [
    ("seed = 1\nnope = 3\n", 2, "nope"),
    ("seed = 1\nsamples = many\n", 2, "samples"),
    ("seed = 1\nseed = 2\n", 2, "seed"),
    ("seed = 1\nradii = 0.1,,0.2\n", 2, "radii"),
    ("seed = 1\njust text\n", 2, None),
    ("samples = 3\n", None, "seed"),
])
def test_errors_carry_location(text, line, field):
    with pytest.raises(ConfigError) as e:
        loads(text)
    assert e.value.line == line and e.value.field == field
    if line:
        assert str(e.value).startswith(f"line {line}")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load(tmp_path / "absent.cfg")
