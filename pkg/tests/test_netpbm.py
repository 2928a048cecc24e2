import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from kinseg.errors import DomainError, MalformedHeaderError, NetpbmError, TruncatedDataError, UnsupportedMaxvalError
from kinseg.netpbm import read_mask, read_netpbm, read_pgm, render_particles, write_pgm, write_ppm


def test_plain_graymap_with_comments(tmp_path):
    f = tmp_path / "a.pgm"
    f.write_bytes(b"P2\n# made by hand\n3 2 # width height\n255\n0 128 255\n  1 2 3\n")
    v, maxval = read_netpbm(f)
    assert maxval == 255
    assert v.tolist() == [[0, 128, 255], [1, 2, 3]]
    assert read_pgm(f)[0, 2] == 1.0


def test_sixteen_bit_big_endian(tmp_path):
    f = tmp_path / "b.pgm"
    f.write_bytes(b"P5 2 1 65535\n" + bytes([0x01, 0x02, 0xFF, 0xFF]))
    v, _ = read_netpbm(f)
    assert v.tolist() == [[258, 65535]]


@pytest.mark.parametrize("payload, err", [
    (b"P6\n1 1\n255\n\0\0\0", MalformedHeaderError),
    (b"P5\n2 2\n255\n\0\0\0", TruncatedDataError),
    (b"P5\n1 1\n1023\n\0\0", UnsupportedMaxvalError),
    (b"P2\n2 1\n255\n1", TruncatedDataError),
    (b"P2\n1 1\n255\n300", NetpbmError),
    (b"P5\nx 1\n255\n\0", MalformedHeaderError),
])
def test_malformed(tmp_path, payload, err):
    f = tmp_path / "bad.pgm"
    f.write_bytes(payload)
    with pytest.raises(err):
        read_netpbm(f)


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint16, st.tuples(st.integers(1, 8), st.integers(1, 8))), st.sampled_from([255, 65535]),
       st.booleans())
def test_round_trip(tmp_path_factory, samples, maxval, plain):
    samples = samples.astype(np.int64) % (maxval + 1)
    f = tmp_path_factory.mktemp("rt") / "x.pgm"
    write_pgm(samples / maxval, f, maxval=maxval, plain=plain)
    v, m = read_netpbm(f)
    assert m == maxval and np.array_equal(v, samples)


def test_mask_io(tmp_path):
    m = np.array([[True, False], [False, True]])
    write_pgm(m, tmp_path / "m.pgm")
    assert np.array_equal(read_mask(tmp_path / "m.pgm"), m)
    assert not (tmp_path / "m.pgm.part").exists()
    with pytest.raises(DomainError):
        write_pgm(np.array([[1.5]]), tmp_path / "bad.pgm")


def test_render_and_ppm(tmp_path):
    canvas = render_particles([[-1, -1], [1, 1], [5, 0]], size=8)
    assert canvas.shape == (8, 8, 3)
    assert (canvas[0, 0] == 0).all() and (canvas[7, 7] == 0).all()
    assert (canvas == 0).all(axis=2).sum() == 2
    colored = render_particles([[0, 0]], features=[1.0], size=9)
    assert colored[4, 4].tolist() == [255, 255, 255] and colored[0, 0].tolist() == [0, 0, 60]
    write_ppm(canvas, tmp_path / "f.ppm")
    data = (tmp_path / "f.ppm").read_bytes()
    assert data.startswith(b"P6\n8 8\n255\n") and len(data) == 11 + 8 * 8 * 3
