import json

import pytest

from dynperc.config import (OPTION_DEFAULTS, ConfigError, ExperimentSpec, build_spec, load_config,
                            satisfiable_c_star, validate_config)
from dynperc.io import OutputDir, build_tag, csv_text, read_csv


def _write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_file_gets_defaults(tmp_path):
    spec = validate_config(_write(tmp_path, 'command = "sweep"\n'))
    assert spec.params.n == 64 and spec.params.M == 17 and spec.params.C_star == 16
    assert spec.options == OPTION_DEFAULTS["sweep"] and spec.workers == 1


def test_range_error_names_key(tmp_path):
    with pytest.raises(ConfigError) as exc:
        validate_config(_write(tmp_path, 'command = "sweep"\n[params]\np = 1.5\n'))
    assert any("params.p" in m for m in exc.value.problems)


def test_samples_zero_rejected():
    with pytest.raises(ConfigError, match="params.samples"):
        build_spec({"command": "sweep", "params": {"samples": 0}})


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as exc:
        build_spec({"command": "radius", "params": {"sampels": 3}, "options": {"tt": 1},
                    "extra": 1})
    msgs = " ".join(exc.value.problems)
    assert "params.sampels" in msgs and "options.tt" in msgs and "extra" in msgs


def test_syntax_error_has_position(tmp_path):
    with pytest.raises(ConfigError, match="line 2"):
        load_config(_write(tmp_path, 'command = "sweep"\n[params\n'))


def test_small_c_star_warns_but_accepts():
    with pytest.warns(UserWarning, match="C_star"):
        spec = build_spec({"command": "sweep", "params": {"C_star": 4, "d": 2}})
    assert spec.params.C_star == 4 < satisfiable_c_star(2)


def test_spec_round_trip():
    spec = build_spec({"command": "animal", "params": {"seed": 5, "samples": 3},
                       "options": {"Ls": [4, 5], "q": 0.2}, "workers": 2, "out": "x"})
    again = ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert again == spec


def test_csv_header_round_trip(tmp_path):
    text = csv_text(["a", "b"], [[1, 0.1], {"a": 2, "b": None}], {"params": {"n": 4}}, "tag-1")
    p = tmp_path / "x.csv"
    p.write_text(text)
    header, rows = read_csv(p)
    assert header == {"build": "tag-1", "params": {"n": 4}}
    assert rows == [{"a": "1", "b": "0.1"}, {"a": "2", "b": ""}]


def test_output_dir_atomic(tmp_path):
    target = tmp_path / "out"
    with pytest.raises(RuntimeError):
        with OutputDir(target) as out:
            out.write_text("a.txt", "x")
            raise RuntimeError("boom")
    assert not target.exists() and not list(tmp_path.iterdir())
    with OutputDir(target) as out:
        out.write_json("m.json", {"k": 1})
    assert json.loads((target / "m.json").read_text()) == {"k": 1}
    with pytest.raises(FileExistsError):
        with OutputDir(target):
            pass


def test_build_tag():
    assert build_tag().startswith("dynperc-")
