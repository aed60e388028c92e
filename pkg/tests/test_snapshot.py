import struct

import numpy as np
import pytest

from amhd.dynamics import PhysParams
from amhd.initial import make_initial, random_divfree
from amhd.snapshot import MAGIC, Snapshot, SnapshotError, read_snapshot, write_snapshot
from amhd.spectral import Grid


@pytest.mark.parametrize("form", ["primitive", "vorticity-current"])
def test_write_read_write_is_byte_identical(tmp_path, form):
    g = Grid(16, 24)
    st = random_divfree(g, 4, form)
    snap = Snapshot.from_state(st, PhysParams(beta=1.25, eta=0.05, mode="full-fractional", formulation=form))
    a = tmp_path / "a.snap"
    b = tmp_path / "b.snap"
    write_snapshot(a, snap)
    write_snapshot(b, read_snapshot(a))
    assert a.read_bytes() == b.read_bytes()
    back = read_snapshot(a)
    assert (back.n1, back.n2, back.beta, back.eta, back.mode, back.formulation) == (
        16, 24, 1.25, 0.05, "full-fractional", form,
    )


def test_layout(tmp_path, grid32):
    st = make_initial("orszag-tang-like", grid32)
    data = Snapshot.from_state(st, PhysParams()).to_bytes()
    head = struct.Struct("<4sIIIdddBB")
    magic, ver, n1, n2, t, beta, eta, mode, form = head.unpack_from(data)
    assert (magic, ver, n1, n2, mode, form) == (MAGIC, 1, 32, 32, 0, 1)
    assert len(data) == head.size + 2 * 32 * 32 * 8
    omega = np.frombuffer(data, "<f8", 32 * 32, head.size).reshape(32, 32)
    np.testing.assert_array_equal(omega, st.fields[0].physical())


def test_to_state_recovers_coefficients(grid32):
    st = make_initial("orszag-tang-like", grid32, "primitive")
    back = Snapshot.from_state(st, PhysParams(formulation="primitive")).to_state()
    for x, y in zip(back.fields, st.fields):
        np.testing.assert_allclose(x.coeffs, y.coeffs, atol=1e-15)


def test_corrupt_files(grid32):
    data = Snapshot.from_state(make_initial("taylor-green", grid32), PhysParams()).to_bytes()
    with pytest.raises(SnapshotError, match="magic"):
        Snapshot.from_bytes(b"XXXX" + data[4:])
    with pytest.raises(SnapshotError):
        Snapshot.from_bytes(data[:-8])
    with pytest.raises(SnapshotError):
        Snapshot.from_bytes(data[:10])
    bad_version = data[:4] + struct.pack("<I", 9) + data[8:]
    with pytest.raises(SnapshotError, match="version"):
        Snapshot.from_bytes(bad_version)
