import json

import numpy as np
import pytest

from colorscreen.molio import (DEFAULT_RADIUS, Atom, Bond, DatasetManifest, Molecule, SDFError, load_manifest, parse_sdf,
                               read_sdf, to_sdf, write_sdf)

ETHANOL = """ethanol
  test

  3  2  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.5000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    2.0000    1.4000    0.0000 O   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0
  2  3  1  0
M  END
>  <ACTIVITY>
7.5

$$$$
"""

AMMONIUM = """ammonium
  test

  2  1  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.4700    0.0000    0.0000 N   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0
M  CHG  1   2   1
M  END
$$$$
"""


def test_parse_basic_record():
    (mol,) = parse_sdf(ETHANOL)
    assert mol.name == "ethanol"
    assert [a.element for a in mol.atoms] == ["C", "C", "O"]
    assert mol.coords[2].tolist() == [2.0, 1.4, 0.0]
    assert [(b.atom_a, b.atom_b, b.order) for b in mol.bonds] == [(0, 1, 1), (1, 2, 1)]
    assert mol.properties == {"ACTIVITY": "7.5"}
    assert mol.atoms[0].vdw_radius == pytest.approx(1.70)
    assert mol.atoms[2].vdw_radius == pytest.approx(1.52)


def test_charge_block_and_multiple_records():
    mols = parse_sdf(ETHANOL + AMMONIUM)
    assert [m.name for m in mols] == ["ethanol", "ammonium"]
    assert mols[1].atoms[1].formal_charge == 1


def test_crlf_and_bytes():
    (mol,) = parse_sdf(ETHANOL.replace("\n", "\r\n").encode())
    assert len(mol.atoms) == 3


def test_roundtrip(tmp_path):
    mols = parse_sdf(ETHANOL + AMMONIUM)
    write_sdf(tmp_path / "x.sdf", mols)
    back = read_sdf(tmp_path / "x.sdf")
    for a, b in zip(mols, back):
        assert a.name == b.name
        assert np.allclose(a.coords, b.coords)
        assert [x.formal_charge for x in a.atoms] == [x.formal_charge for x in b.atoms]
        assert a.bonds == b.bonds
        assert a.properties == b.properties


def test_bad_bond_index_strict_and_lenient():
    bad = ETHANOL.replace("  2  3  1  0", "  2  9  1  0")
    with pytest.raises(SDFError, match="record 1"):
        parse_sdf(bad)
    assert [m.name for m in parse_sdf(bad + AMMONIUM, strict=False)] == ["ammonium"]


def test_v3000_rejected():
    with pytest.raises(SDFError, match="V3000"):
        parse_sdf(ETHANOL.replace("V2000", "V3000"))


def test_truncated_record():
    with pytest.raises(SDFError):
        parse_sdf("\n".join(ETHANOL.splitlines()[:6]))


def test_non_numeric_coordinate():
    with pytest.raises(SDFError, match="coordinate"):
        parse_sdf(ETHANOL.replace("1.5000", "1.5x00"))


def test_hydrogen_only_molecule_rejected():
    with pytest.raises(ValueError):
        Molecule("h2", [Atom("H", (0, 0, 0)), Atom("H", (0.7, 0, 0))])


def test_unknown_element_gets_default_radius():
    (mol,) = parse_sdf(ETHANOL.replace(" O   0", " Xx  0"))
    assert mol.atoms[2].vdw_radius == DEFAULT_RADIUS


def test_bond_validation():
    with pytest.raises(ValueError):
        Molecule("m", [Atom("C", (0, 0, 0))], [Bond(0, 3, 1)])


def test_transformed_is_rigid():
    (mol,) = parse_sdf(ETHANOL)
    c, s = np.cos(0.3), np.sin(0.3)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    moved = mol.transformed(rot, np.array([1.0, 2.0, 3.0]))
    d0 = np.linalg.norm(mol.coords[:, None] - mol.coords[None], axis=-1)
    d1 = np.linalg.norm(moved.coords[:, None] - moved.coords[None], axis=-1)
    assert np.allclose(d0, d1)


def _manifest_dir(tmp_path, queries=None):
    (tmp_path / "a.sdf").write_text(ETHANOL)
    (tmp_path / "d.sdf").write_text(AMMONIUM)
    doc = {"dataset": "toy", "actives": ["a.sdf"], "decoys": ["d.sdf"]}
    if queries:
        doc["queries"] = queries
    (tmp_path / "m.json").write_text(json.dumps(doc))
    return tmp_path / "m.json"


def test_manifest_load(tmp_path):
    m = load_manifest(_manifest_dir(tmp_path))
    actives, decoys, queries = m.load()
    assert [x.name for x in actives] == ["ethanol"]
    assert [x.name for x in decoys] == ["ammonium"]
    assert [x.name for x in queries] == ["ethanol"]  # active-as-query default


def test_manifest_missing_file(tmp_path):
    path = _manifest_dir(tmp_path, queries=["nope.sdf"])
    with pytest.raises(FileNotFoundError, match="nope.sdf"):
        load_manifest(path)


def test_manifest_invariants():
    with pytest.raises(ValueError):
        DatasetManifest("x", (), ("d.sdf",))
    with pytest.raises(ValueError):
        DatasetManifest("x", ("a.sdf",), ("a.sdf",))


def test_manifest_name_clash(tmp_path):
    (tmp_path / "a.sdf").write_text(ETHANOL)
    (tmp_path / "d.sdf").write_text(ETHANOL)
    (tmp_path / "m.json").write_text(json.dumps({"dataset": "t", "actives": ["a.sdf"], "decoys": ["d.sdf"]}))
    with pytest.raises(ValueError, match="both"):
        load_manifest(tmp_path / "m.json").load()
