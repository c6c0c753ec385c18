from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from iqnet.config import (
    KINDS,
    OPTIONS,
    int_list,
    parse_config,
    parse_initial,
    parse_interference,
    parse_text,
)
from iqnet.errors import ParseError, SemanticError
from iqnet.interference import geometric, ones, validate

MINIMAL = """
[experiment]
kind = mean-vs-formula
lambda = 0.25
interference = ones:3
"""


def test_minimal_file_gets_defaults(tmp_path):
    path = tmp_path / "m.ini"
    path.write_text(MINIMAL)
    cfg = parse_config(path)
    assert cfg.kind == "mean-vs-formula" and cfg.lam == 0.25
    assert cfg.seq == ones(3)
    assert (cfg.mode, cfg.n, cfg.K, cfg.seeds, cfg.batches) == ("torus", 50, 0, [0], 30)
    assert (cfg.burn_in, cfg.horizon, cfg.initial) == (20000, 200000, "zero")
    assert cfg.options["rel_tol"] == 0.03
    assert cfg.source == str(path)


def test_unknown_key_names_key_and_line():
    text = MINIMAL + "lambda_rate = 0.3\n"
    with pytest.raises(ParseError) as exc:
        parse_text(text)
    assert exc.value.code == "PARSE_ERROR"
    assert exc.value.key == "lambda_rate"
    assert exc.value.line == 6


def test_unknown_kind_section_key():
    text = MINIMAL + "\n[mean-vs-formula]\nwidth = 4\n"
    with pytest.raises(ParseError) as exc:
        parse_text(text)
    assert exc.value.key == "width" and exc.value.line == 8


def test_foreign_section_rejected():
    with pytest.raises(ParseError) as exc:
        parse_text(MINIMAL + "\n[loynes]\nT0 = 2\n")
    assert exc.value.key == "loynes"


def test_bad_value_and_missing_key():
    with pytest.raises(ParseError) as exc:
        parse_text(MINIMAL.replace("0.25", "fast"))
    assert exc.value.key == "lambda"
    with pytest.raises(ParseError):
        parse_text("[experiment]\nkind = loynes\n")
    with pytest.raises(ParseError):
        parse_text("lambda = 1\n")


def test_duplicate_key_is_parse_error():
    with pytest.raises(ParseError):
        parse_text(MINIMAL + "lambda = 0.2\n")


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        parse_config(tmp_path / "absent.ini")


def test_supercritical_is_semantic_error():
    with pytest.raises(SemanticError) as exc:
        parse_text(MINIMAL.replace("0.25", "0.5"))
    assert exc.value.code == "SEMANTIC_ERROR"


@pytest.mark.parametrize("change", [
    ("kind = mean-vs-formula", "kind = supercritical-growth"),
    ("ones:3", "ones:3\nmode = box"),
    ("ones:3", "ones:3\nn = 0"),
    ("ones:3", "ones:3\nseeds = 4-2"),
    ("ones:3", "ones:4"),
    ("ones:3", "ones:3\nbatches = 5"),
])
def test_semantic_errors(change):
    with pytest.raises((SemanticError, ParseError)):
        parse_text(MINIMAL.replace(*change))


def test_kind_sections_parse_types():
    cfg = parse_text(MINIMAL.replace("mean-vs-formula", "frozen-wall").replace("0.25", "0.3")
                     + "mode = box\nn = 5\n[frozen-wall]\nmagnitude = inf\ncheckpoints = 10,20\n")
    assert cfg.options["magnitude"] == "inf"
    assert cfg.options["checkpoints"] == [10.0, 20.0]


def test_every_kind_parses_with_defaults():
    for kind in KINDS:
        lam = 0.5 if kind == "supercritical-growth" else 0.25
        extra = "mode = box\nn = 10\n" if kind in ("frozen-wall", "local-vs-box") else ""
        if kind == "infinite-support":
            extra = "interference = geometric:1/2:16\n"
        text = f"[experiment]\nkind = {kind}\nlambda = {lam}\n{extra}"
        cfg = parse_text(text)
        assert set(cfg.options) == set(OPTIONS[kind])


def test_parse_interference_forms():
    assert parse_interference("ones:5") == ones(5)
    assert parse_interference("geometric:1/2:3") == geometric(Fraction(1, 2), 3)
    assert parse_interference("weights:-1=1/2,0=2,1=1/2") == validate({-1: Fraction(1, 2), 0: 2, 1: Fraction(1, 2)})
    with pytest.raises(ValueError):
        parse_interference("triangle:3")


def test_parse_initial_forms():
    assert parse_initial("zero").value_at(3) == 0
    assert parse_initial("constant:4").value_at(-9) == 4
    sparse = parse_initial("sparse:2/7,5/1")
    assert [sparse.value_at(i) for i in (0, 2, -2, 5, 6)] == [0, 7, 7, 1, 0]


@given(st.lists(st.integers(0, 500), min_size=1, max_size=10))
def test_int_list_roundtrip(xs):
    assert int_list(",".join(map(str, xs))) == xs


def test_int_list_ranges():
    assert int_list("0-3,7") == [0, 1, 2, 3, 7]


def test_echo_is_plain():
    cfg = parse_text(MINIMAL)
    echo = cfg.echo()
    assert echo["lambda"] == 0.25 and echo["interference"] == "ones:3"
    assert list(echo["options"]) == sorted(echo["options"])
