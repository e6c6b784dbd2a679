import os
import shutil

import pytest

from isynth.evaluator import Budget
from isynth.kernel import Kernel

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SAMPLES = os.path.join(REPO, "samples")
DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")


@pytest.fixture
def samples_kernel():
    return Kernel(root=SAMPLES)


@pytest.fixture
def workspace(tmp_path):
    """A scratch copy of the sample corpus (sessions write files)."""
    dest = tmp_path / "ws"
    shutil.copytree(SAMPLES, dest)
    return dest


@pytest.fixture
def ws_kernel(workspace):
    return Kernel(root=str(workspace))


def kernel_for(root, **kw):
    return Kernel(root=str(root), **kw)


def write_module_file(dirpath, name, text):
    path = os.path.join(str(dirpath), name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def corpus_files():
    out = []
    for base, _, files in os.walk(SAMPLES):
        if "scripts" in base:
            continue
        for f in sorted(files):
            if f.endswith(".rkt"):
                out.append(os.path.join(base, f))
    return sorted(out)
