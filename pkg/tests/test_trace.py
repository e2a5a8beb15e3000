import json

import pytest

from discgen.trace import (ConfigError, RunConfig, TraceFormatError, config_digest,
                           generate_lines, parse_lines, read_lines, write_trace)


def test_header_is_self_describing():
    lines = list(generate_lines(RunConfig("z-in-zp", 3, p=2)))
    header = json.loads(lines[0])
    assert header["format"] == 1 and header["case"] == 1 and header["p"] == 2
    assert header["budget"] == "geom-1/16" and header["enum"] == "zigzag"
    assert header["random_free"] is True and header["thin"] is False
    assert header["init"] == {"x": "0", "y": "0", "U": {"center": "0", "size": "level:5"},
                              "measure": "1/32"}
    assert header["digest"] == config_digest(header)
    assert len(lines) == 4


def test_case1_record_schema():
    # V_j is the coarsest ball of measure < r_j = 2^-(j+4): levels 5 and 6;
    # step measure 2 * 2^-6 + 2^-5 + 2^-6
    rec = json.loads(list(generate_lines(RunConfig("z-in-zp", 1, p=2)))[1])
    assert rec == {"step": 1, "case": 1, "target_index": 1, "target": "1", "x": "2", "y": "1",
                   "U": {"center": "0", "size": "level:6"},
                   "z_new": [{"z": "-1", "V": {"center": "0", "size": "level:5"}},
                             {"z": "-2", "V": {"center": "0", "size": "level:6"}}],
                   "measures": {"step": "5/64", "cumulative": "7/64"}}


def test_case2_record_schema():
    lines = list(generate_lines(RunConfig("q-usual", 2)))
    assert json.loads(lines[0])["budget"] is None
    assert json.loads(lines[2]) == {"step": 1, "case": 2, "g": "1/1", "x": "2/1", "gx": "3/1"}
    f2 = list(generate_lines(RunConfig("f2-discrete", 1)))
    assert json.loads(f2[1]) == {"step": 0, "case": 2, "g": "", "x": "", "gx": ""}


def test_output_is_ascii_and_compact():
    for line in generate_lines(RunConfig("golden-rotation", 4)):
        assert line.isascii() and ", " not in line and ": " not in line


def test_byte_identical_runs(tmp_path):
    cfg = RunConfig("golden-rotation", 15, thin=True)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert write_trace(a, generate_lines(cfg)) == 16
    write_trace(b, generate_lines(cfg))
    assert a.read_bytes() == b.read_bytes()
    assert len(read_lines(a)) == 16


@pytest.mark.parametrize("cfg,msg", [
    (RunConfig("z-in-zp", 10_001, p=2), "at most 10000"),
    (RunConfig("z-in-zp", -1, p=2), "non-negative"),
    (RunConfig("z-in-zp", 5, p=6), "prime"),
    (RunConfig("q-usual", 5, budget="geom-1/16"), "not precompact"),
    (RunConfig("golden-rotation", 5, budget="const-1/6"), "diverges"),
])
def test_config_validation(cfg, msg):
    with pytest.raises(ConfigError, match=msg):
        cfg.validate()


def test_read_and_parse_errors(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text('{"format":1}')
    with pytest.raises(TraceFormatError, match="truncated"):
        read_lines(path)
    with pytest.raises(TraceFormatError, match="lacks"):
        parse_lines(['{"format":1}'])
    with pytest.raises(TraceFormatError, match="line 2"):
        parse_lines(['{"format":1}', "nope"])
