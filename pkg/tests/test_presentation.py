import pytest

from edgeends.corpus import ladder_pair, ray
from edgeends.presentation import (
    OMEGA,
    DuplicateIdError,
    ParseError,
    TruncationError,
    figure1,
    load,
    make_presentation,
    parse,
    serialize,
    truncate,
    validate,
)
from conftest import FIXTURES


def test_figure1_validates():
    assert validate(figure1()).ok


def test_single_core_vertex_validates():
    assert validate(make_presentation(core=["v"])).ok


def test_dangling_fan_reported_once():
    p = make_presentation(core=["v"], generators={"r": "ray"}, fans=[("v", "z", OMEGA)])
    assert validate(p).kinds() == ["dangling-reference"]


def test_self_ladder_rejected():
    p = make_presentation(generators={"r": "ray"}, ladders=[("r", "r")])
    assert "self-ladder" in validate(p).kinds()


def test_empty_finite_fan_support_rejected():
    p = make_presentation(core=["v"], generators={"r": "ray"}, fans=[("v", "r", [])])
    assert "empty-fan-support" in validate(p).kinds()


def test_truncate_single_ray():
    g = truncate(ray(), 3)
    assert len(g.vertices) == 3 and len(g.edges) == 2


def test_truncate_figure1():
    g = truncate(figure1(), 2)
    assert g.vertices == {"v0", "vinf", "r+[0]", "r+[1]", "r-[0]", "r-[1]"}
    fan = [e for e in g.edges if "vinf" in e]
    core = [e for e in g.edges if "v0" in e]
    assert len(fan) == 4 and len(core) == 2 and len(g.edges) == 8


def test_truncate_ladder_pair():
    g = truncate(ladder_pair(), 4)
    assert len(g.vertices) == 8 and len(g.edges) == 2 * 3 + 4


def test_truncate_rejects_short_depth():
    p = make_presentation(core=["v"], generators={"r": "ray"}, edges=[("v", "r[5]")])
    with pytest.raises(TruncationError):
        truncate(p, 3)


def test_round_trip_figure1_file():
    text = (FIXTURES / "fig1.egp").read_text()
    assert serialize(parse(text)) == text
    assert load(FIXTURES / "fig1.egp") == figure1()


def test_fans_section_omega():
    p = parse("[core]\nvinf\n[generators]\nr+ ray\n[fans]\nvinf r+ omega\n")
    (fan,) = p.fans
    assert fan.is_omega and fan.generator == "r+"


def test_duplicate_generator_id():
    with pytest.raises(DuplicateIdError):
        parse("[generators]\nr ray\nr clique\n")


def test_parse_error_has_line_number():
    with pytest.raises(ParseError) as err:
        parse("[generators]\nr ray\n[bogus]\n")
    assert err.value.line == 3
