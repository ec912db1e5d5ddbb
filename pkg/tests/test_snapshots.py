import json
import struct

import numpy as np
import pytest

from qmlab.errors import IoFailure, SchemaMismatch
from qmlab.hilbert import GridSpec, PhysicsParams, gaussian_packet, random_packet_state
from qmlab.snapshots import MAGIC, csv_header, read_binary, read_csv, write_binary, write_csv


@pytest.mark.parametrize("dim, n", [(1, 64), (2, 16), (3, 8)])
def test_binary_round_trip_is_exact(tmp_path, dim, n):
    g = GridSpec(dim, n, 10.0)
    psi = random_packet_state(g, np.random.default_rng(dim))
    path = write_binary(psi, tmp_path / "s.bin", PhysicsParams(theta=0.5))
    back, header = read_binary(path)
    assert back.grid == g
    np.testing.assert_array_equal(back.amplitudes, psi.amplitudes)
    assert header["params"]["theta"] == 0.5 and header["layout"] == "interleaved_re_im"


def test_csv_round_trip(tmp_path):
    g = GridSpec(2, 32, 16.0)
    psi = gaussian_packet(g, 0.0, 1.0, (0.5, 0.0))
    path = write_csv(psi, tmp_path / "s.csv")
    assert path.read_text().splitlines()[0] == "x,y,re_psi,im_psi,rho"
    np.testing.assert_array_equal(read_csv(path, g).amplitudes, psi.amplitudes)
    with pytest.raises(SchemaMismatch):
        read_csv(path, GridSpec(2, 8, 16.0))


def test_csv_header():
    assert csv_header(GridSpec(1, 8, 1.0)) == ["x", "re_psi", "im_psi", "rho"]


def _rewrite(path, mutate):
    raw = bytearray(path.read_bytes())
    mutate(raw)
    path.write_bytes(bytes(raw))


@pytest.fixture
def snap(tmp_path):
    return write_binary(gaussian_packet(GridSpec(1, 32, 16.0)), tmp_path / "s.bin")


def test_bad_magic(snap):
    _rewrite(snap, lambda r: r.__setitem__(slice(0, 8), b"NOTSNAP!"))
    with pytest.raises(SchemaMismatch):
        read_binary(snap)


def test_corrupt_payload(snap):
    _rewrite(snap, lambda r: r.__setitem__(-1, r[-1] ^ 0xFF))
    with pytest.raises(SchemaMismatch, match="checksum"):
        read_binary(snap)


def test_wrong_version(snap):
    raw = snap.read_bytes()
    (hlen,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16:16 + hlen])
    header["format_version"] = 99
    hb = json.dumps(header).encode()
    snap.write_bytes(MAGIC + struct.pack("<Q", len(hb)) + hb + raw[16 + hlen:])
    with pytest.raises(SchemaMismatch, match="version"):
        read_binary(snap)


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        read_binary(tmp_path / "absent.bin")
