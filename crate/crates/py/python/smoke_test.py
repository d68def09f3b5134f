"""Smoke test for the uvc_py extension module.

Builds the extension with cargo unless UVC_PY_LIB points at an already
built shared library, then exercises each binding once.
"""

import json
import os
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[3]
DATA = ROOT / "crates" / "core" / "tests" / "data"


def load_module():
    lib = os.environ.get("UVC_PY_LIB")
    if lib is None:
        subprocess.run(
            ["cargo", "build", "--release", "-p", "uvc-py"], cwd=ROOT, check=True
        )
        lib = ROOT / "target" / "release" / "libuvc_py.so"
    tmp = tempfile.mkdtemp()
    shutil.copy(lib, os.path.join(tmp, "uvc_py.so"))
    sys.path.insert(0, tmp)
    import uvc_py

    return uvc_py


def main():
    uvc = load_module()
    fib = (DATA / "fib.c").read_text()
    order = (DATA / "order.c").read_text()
    fold = (DATA / "fold.abs").read_text()

    text = uvc.extract(fib)
    assert "class C_one_to_fib(Global global) implements I_one_to_fib" in text

    model = uvc.Model.from_c(fib)
    verdicts = model.verify(jobs=4)
    assert verdicts and all(v == "VALID" for _, _, v in verdicts), verdicts

    free, unresolved = model.deadlock()
    assert len(unresolved) == 9, unresolved
    assert "Global.set_x" in free

    for n, expected in [(1, {1}), (3, {1, 2}), (4, {1, 2, 3})]:
        x = model.explore(f"C_one_to_fib.call({n})")
        assert x.results == expected and x.exhausted, x
        assert not x.violations

    x = uvc.Model.from_c(order).explore("C_main.call()")
    assert x.results == {1, 2}

    result, trace = model.run_random("C_one_to_fib.call(3)", seed=11)
    assert result in (1, 2)
    assert trace.startswith("0: invEv(env, ")

    report = json.loads(uvc.run("verify", fold, kind="abs"))
    assert report["exit_code"] == 0

    try:
        uvc.Model.from_c("int f(int *p) { return *p; }")
    except uvc.UvcError:
        pass
    else:
        raise AssertionError("pointer program accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
