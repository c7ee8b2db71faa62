import numpy as np
import pytest

from colorscreen.molio import Atom, Bond, Molecule, assign_radii


def build(name, elements, coords, bonds=(), charges=None, props=None):
    charges = charges or [0] * len(elements)
    atoms = [Atom(e, tuple(map(float, p)), c) for e, p, c in zip(elements, coords, charges)]
    return assign_radii(Molecule(name, atoms, [Bond(a, b, o) for a, b, o in bonds], props or {}))


def random_carbon_molecule(rng, n, name="rand"):
    pts = [np.zeros(3)]
    while len(pts) < n:
        v = rng.normal(size=3)
        cand = pts[-1] + 1.5 * v / np.linalg.norm(v)
        if min(np.linalg.norm(cand - p) for p in pts) > 1.3:
            pts.append(cand)
    return build(name, ["C"] * n, pts)


def random_pose(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q), rng.normal(scale=2.0, size=3)


@pytest.fixture
def benzene():
    ang = np.arange(6) * np.pi / 3
    xyz = np.c_[1.39 * np.cos(ang), 1.39 * np.sin(ang), np.zeros(6)]
    return build("benzene", ["C"] * 6, xyz, [(i, (i + 1) % 6, 4) for i in range(6)])


@pytest.fixture
def acetic_acid():
    # CH3-C(=O)-OH, heavy atoms only
    xyz = [(0, 0, 0), (1.5, 0, 0), (2.1, 1.05, 0), (2.1, -1.1, 0)]
    return build("acetic", ["C", "C", "O", "O"], xyz, [(0, 1, 1), (1, 2, 2), (1, 3, 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda l: int(l.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
