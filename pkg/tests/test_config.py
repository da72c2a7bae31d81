"""Configuration persistence and working-directory scaffolding."""

import os

import pytest
from hypothesis import given, settings, strategies as st

from libwrap.config import (
    WorkingDir, WrapperConfig, init_working_dir, merge_config, parse_config,
    serialize_config, update_config,
)
from libwrap.errors import LibwrapError, ValidationError


def test_minimal_config_defaults():
    config = WrapperConfig(name="fftw3")
    assert config.display_name == "fftw3"
    assert config.language == "c"


def test_invalid_name_rejected():
    with pytest.raises(ValidationError, match="bad name!"):
        WrapperConfig(name="bad name!")


def test_cxx_rejected():
    with pytest.raises(ValidationError, match="C libraries only"):
        WrapperConfig(name="qtgui_and_qtwidgets", language="c++")


def test_mapping_and_void_sets_must_be_disjoint():
    with pytest.raises(ValidationError, match="both"):
        WrapperConfig(name="x", ellipsis_mappings={"f": "vf"},
                      variadic_is_void={"f"})


def test_serialize_parse_identity_example():
    config = WrapperConfig(
        name="fftw3",
        display_name="FFTW 3",
        preprocessor_flags=["-I/opt/fftw/include", "-DNDEBUG"],
        linker_flags=["-L/opt/fftw/lib"],
        libs=["-lfftw3"],
        ellipsis_mappings={"printf": "vprintf"},
        variadic_is_void={"legacy_fn"},
        install_prefix="/opt/wrappers",
    )
    assert parse_config(serialize_config(config)) == config


def test_serialization_is_deterministic():
    config = WrapperConfig(name="x", ellipsis_mappings={"b": "vb", "a": "va"})
    assert serialize_config(config) == serialize_config(config)


_token = st.from_regex(r"-[A-Za-z][A-Za-z0-9/_.=-]{0,10}", fullmatch=True)
_ident = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True)


@st.composite
def _configs(draw):
    mappings = draw(st.dictionaries(_ident, _ident, max_size=3))
    void_set = draw(st.sets(_ident, max_size=3)) - set(mappings)
    return WrapperConfig(
        name=draw(st.from_regex(r"[A-Za-z0-9_-]{1,12}", fullmatch=True)),
        display_name=draw(st.from_regex(r"[A-Za-z0-9 ._-]{0,16}", fullmatch=True)).strip(),
        preprocessor_flags=draw(st.lists(_token, max_size=4)),
        linker_flags=draw(st.lists(_token, max_size=4)),
        libs=draw(st.lists(_token, max_size=4)),
        ellipsis_mappings=mappings,
        variadic_is_void=void_set,
        install_prefix=draw(st.from_regex(r"/[A-Za-z0-9/_-]{0,16}", fullmatch=True)),
    )


@settings(max_examples=150, deadline=None)
@given(_configs())
def test_serialize_parse_roundtrip_property(config):
    assert parse_config(serialize_config(config)) == config


def test_init_scaffolds_five_paths(tmp_path):
    config = WrapperConfig(name="fftw3", libs=["-lfftw3"])
    wd = init_working_dir(config, tmp_path / "wd")
    for path in wd.paths():
        assert os.path.exists(path), path
    assert os.path.exists(wd.readme_file)
    assert wd.load_config() == config


def test_init_refuses_nonempty_destination(tmp_path):
    dest = tmp_path / "wd"
    dest.mkdir()
    (dest / "precious.txt").write_text("user data")
    with pytest.raises(LibwrapError, match="not empty"):
        init_working_dir(WrapperConfig(name="x"), dest)
    assert (dest / "precious.txt").read_text() == "user data"


def test_second_init_never_overwrites_user_edits(tmp_path):
    dest = tmp_path / "wd"
    wd = init_working_dir(WrapperConfig(name="x"), dest)
    with open(wd.header_aggregate, "w") as fh:
        fh.write("#include <mylib.h>\n")
    with pytest.raises(LibwrapError):
        init_working_dir(WrapperConfig(name="x"), dest)
    assert open(wd.header_aggregate).read() == "#include <mylib.h>\n"


def test_update_appends_list_fields(tmp_path):
    wd = init_working_dir(
        WrapperConfig(name="x", preprocessor_flags=["-I/a"]), tmp_path / "wd"
    )
    updated = update_config(wd, {"preprocessor_flags": ["-I/opt/x"]})
    assert updated.preprocessor_flags == ["-I/a", "-I/opt/x"]
    assert wd.load_config() == updated


def test_update_with_no_changes_is_byte_identical(tmp_path):
    wd = init_working_dir(WrapperConfig(name="x", libs=["-lx"]), tmp_path / "wd")
    before = open(wd.config_file, "rb").read()
    update_config(wd, {})
    assert open(wd.config_file, "rb").read() == before


def test_update_stores_ellipsis_mapping(tmp_path):
    wd = init_working_dir(WrapperConfig(name="x"), tmp_path / "wd")
    updated = update_config(wd, {"ellipsis_mappings": {"printf": "vprintf"}})
    assert updated.ellipsis_mappings == {"printf": "vprintf"}
    assert "ellipsis_mapping = printf:vprintf" in open(wd.config_file).read()


def test_invalid_update_leaves_old_file_intact(tmp_path):
    wd = init_working_dir(WrapperConfig(name="x"), tmp_path / "wd")
    before = open(wd.config_file, "rb").read()
    with pytest.raises(ValidationError):
        update_config(wd, {"language": "c++"})
    assert open(wd.config_file, "rb").read() == before


def test_merge_scalar_replaces():
    config = WrapperConfig(name="x", display_name="Old")
    assert merge_config(config, {"display_name": "New"}).display_name == "New"


def test_workingdir_reports_missing_initialization(tmp_path):
    wd = WorkingDir.at(tmp_path / "nowhere")
    with pytest.raises(LibwrapError, match="libwrap init"):
        wd.check_initialized()
