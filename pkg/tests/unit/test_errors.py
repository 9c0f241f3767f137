import pytest

from src.errors import (
    BRepSyntaxError,
    CadopsError,
    ConfigError,
    DegenerateAxis,
    EmptySketch,
    IoError,
    ShapeError,
    TopologyError,
)


class TestCadopsError:
    def test_is_exception_subclass(self):
        assert issubclass(CadopsError, Exception)

    def test_message_preserved(self):
        err = CadopsError("bad input")
        assert err.message == "bad input"

    def test_str_repr(self):
        assert str(ShapeError("3 vs 4")) == "ShapeError: 3 vs 4"

    @pytest.mark.parametrize("cls", [ConfigError, IoError, DegenerateAxis, EmptySketch])
    def test_domain_errors_share_base(self, cls):
        with pytest.raises(CadopsError, match="boom"):
            raise cls("boom")


class TestBRepSyntaxError:
    def test_carries_position(self):
        err = BRepSyntaxError("Expecting value", line=3, offset=7)
        assert (err.line, err.offset) == (3, 7)
        assert "line 3, offset 7" in str(err)


class TestTopologyError:
    def test_names_rule_and_entity(self):
        err = TopologyError("mate involution", entity="coedge", entity_id=12, detail="mate(mate(c)) != c")
        assert err.rule == "mate involution"
        assert err.entity == "coedge"
        assert err.entity_id == 12
        assert str(err) == "TopologyError: mate involution violated at coedge 12: mate(mate(c)) != c"

    def test_without_detail(self):
        err = TopologyError("loop closure", entity="face", entity_id=0)
        assert err.message == "loop closure violated at face 0"
