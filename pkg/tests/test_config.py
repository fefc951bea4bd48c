import textwrap

import numpy as np
import pytest

from fraflow.harness.config import (
    MAX_SWEEP_RUNS,
    ConfigError,
    load_config,
    parse_config,
    preset_names,
)

BASE = textwrap.dedent("""\
    [experiment]
    name = tiny
    kind = flow

    [objective]
    name = quadratic
    a = 2, 0; 0, 1
    b = 1, 1

    [flow]
    alpha = 3
    theta = 0.5
    mode = grad_memory
    x0 = 1, 0.5
""")


def test_minimal_config_defaults():
    spec = parse_config(BASE)
    assert spec.name == "tiny" and spec.kind == "flow"
    np.testing.assert_array_equal(spec.objective["A"], [[2.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(spec.flow["v0"], [0.0, 0.0])
    assert spec.flow["t0"] == 1.0 and spec.flow["dt"] == 1e-3 and spec.flow["t_end"] == 100.0
    assert spec.outputs["fit"] == "best" and spec.outputs["window"] is None
    assert spec.out_dir.endswith("tiny")
    assert not spec.has_sweep


def test_inline_comments_and_case():
    spec = parse_config(BASE.replace("alpha = 3", "ALPHA = 3.5  # damping"))
    assert spec.flow["alpha"] == 3.5


def test_spec_hash_tracks_text():
    a, b = parse_config(BASE), parse_config(BASE + "\n[outputs]\nfit = power\n")
    assert a.spec_hash == parse_config(BASE).spec_hash
    assert a.spec_hash != b.spec_hash


def _line_error(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value


def test_malformed_line_named():
    err = _line_error(BASE.replace("theta = 0.5", "theta 0.5"))
    assert err.line == 12
    assert str(err).startswith("line 12:")


def test_unknown_key_named():
    err = _line_error(BASE.replace("theta = 0.5", "thetta = 0.5"))
    assert err.line == 12 and "thetta" in str(err)


def test_unknown_section_named():
    err = _line_error(BASE + "[plots]\ncolor = red\n")
    assert err.line == BASE.count("\n") + 1


def test_bad_value_named():
    err = _line_error(BASE.replace("alpha = 3", "alpha = three"))
    assert err.line == 11 and "alpha" in str(err)


def test_bad_choice():
    err = _line_error(BASE.replace("mode = grad_memory", "mode = sideways"))
    assert err.line == 13


def test_missing_required():
    err = _line_error(BASE.replace("x0 = 1, 0.5\n", ""))
    assert "x0" in str(err)


def test_missing_objective():
    with pytest.raises(ConfigError, match="objective"):
        parse_config("[flow]\nalpha = 3\nx0 = 1\n")


def test_content_before_header():
    assert _line_error("alpha = 3\n" + BASE).line == 1


def test_duplicate_key():
    assert _line_error(BASE + "alpha = 4\n").line == BASE.count("\n") + 1


def test_window_needs_two_numbers():
    err = _line_error(BASE + "[outputs]\nwindow = 1, 2, 3\n")
    assert err.line == BASE.count("\n") + 2


def test_sweep_points_order():
    spec = parse_config(BASE + "[sweep]\nalpha = 2.5, 3\ntheta = 0.6, 1.0\n")
    assert spec.has_sweep
    assert spec.sweep_points() == [(None, 2.5, 0.6), (None, 2.5, 1.0), (None, 3.0, 0.6), (None, 3.0, 1.0)]


def _values(n):
    return ", ".join(f"{0.01 * k:g}" for k in range(1, n + 1))


def test_sweep_cap():
    ok = parse_config(BASE + f"[sweep]\nalpha = {_values(16)}\ntheta = {_values(16)}\n")
    assert len(ok.sweep_points()) == MAX_SWEEP_RUNS == 256
    err = _line_error(BASE + f"[sweep]\nalpha = {_values(17)}\ntheta = {_values(16)}\n")
    assert "272" in str(err) and err.line == BASE.count("\n") + 1


def test_empty_sweep_list():
    assert "empty" in str(_line_error(BASE + "[sweep]\ntheta = ,\n"))


def test_scalar_fde_kind():
    spec = parse_config("[experiment]\nkind = scalar_fde\n[fde]\ngamma = 2\ntheta = 0.5\n")
    assert spec.fde == {"gamma": 2.0, "theta": 0.5, "v0": 1.0, "t0": 0.0, "dt": 1e-3, "t_end": 5.0}


def test_presets_all_parse():
    names = preset_names()
    assert set(names) >= {"ml-scalar", "classical-rate", "critical-alpha", "strong-convex-ml",
                          "loja-cases", "picard-crosscheck"}
    for name in names:
        spec = load_config(name)
        assert spec.name == name


def test_load_config_from_file(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(BASE)
    assert load_config(str(p)).source == str(p)


def test_load_config_missing():
    with pytest.raises(FileNotFoundError):
        load_config("no-such-preset")
