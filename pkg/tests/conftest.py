import shutil

import pytest

import support


def pytest_collection_modifyitems(config, items):
    if shutil.which(support.CC) is None:
        skip = pytest.mark.skip(reason=f"no C toolchain ({support.CC}) available")
        for item in items:
            if "needs_cc" in item.keywords:
                item.add_marker(skip)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "needs_cc: test drives the real C toolchain"
    )


@pytest.fixture(scope="session")
def microlib(tmp_path_factory):
    return support.build_microlib(str(tmp_path_factory.mktemp("microlib")))


@pytest.fixture(scope="session")
def mainlib(tmp_path_factory):
    return support.build_mainlib(str(tmp_path_factory.mktemp("mainlib")))


@pytest.fixture(scope="session")
def crosslibs(tmp_path_factory):
    return support.build_crosslibs(str(tmp_path_factory.mktemp("crosslibs")))


@pytest.fixture(scope="session")
def reconcilelib(tmp_path_factory):
    return support.build_reconcilelib(str(tmp_path_factory.mktemp("reconcile")))


@pytest.fixture(scope="session")
def micro_workspace(tmp_path_factory, microlib):
    """A microlib wrapper working directory, built and installed."""
    tmp = str(tmp_path_factory.mktemp("microws"))
    wd = support.init_workspace(
        tmp, "microlib", microlib, "-lmicrolib",
        extra_init_args=[
            "--ellipsis-mapping", "mk_logf_style:mk_vlogf_style",
            "--variadic-is-void", "mk_unknown",
        ],
    )
    support.write(f"{wd}/libwrap.h", "#include <microlib.h>\n")
    support.write(f"{wd}/main.c", support.FIDELITY_DRIVER)
    assert support.cli_run(["build", wd])[0] == 0
    assert support.cli_run(["install", wd])[0] == 0
    return {
        "wd": wd,
        "prefix": f"{tmp}/prefix",
        "install": f"{tmp}/prefix/microlib",
        "microlib": microlib,
    }
