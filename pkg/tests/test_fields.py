import numpy as np
import pytest

from conelab.errors import DomainError
from conelab.fields import SampledField, read_field, thread_count, write_field


def test_parseval(rng):
    f = SampledField(rng.normal(size=(16, 12, 20)) + 1j * rng.normal(size=(16, 12, 20)),
                     (3.0, 2.0, 5.0), (-1.5, -1.0, -2.5))
    assert f.parseval_defect() < 1e-12


def test_geometry_of_grid():
    f = SampledField.zeros((4, 8), (2.0, 4.0))
    assert np.allclose(f.spacing, [0.5, 0.5])
    assert f.cell_volume == pytest.approx(0.25)
    assert f.axes()[0][0] == -1.0
    assert f.frequencies()[0][1] == pytest.approx(np.pi)


def test_invalid_metadata_is_rejected():
    with pytest.raises(DomainError):
        SampledField(np.zeros((2, 2)), (1.0,), (0.0, 0.0))
    with pytest.raises(DomainError):
        SampledField(np.zeros((2, 2)), (1.0, 0.0), (0.0, 0.0))


def test_binary_round_trip(tmp_path, rng):
    f = SampledField(rng.normal(size=(5, 6, 7)) + 1j * rng.normal(size=(5, 6, 7)),
                     (1.0, 2.5, np.pi), (0.1, -0.2, 0.3))
    write_field(tmp_path / "f.bin", f)
    g = read_field(tmp_path / "f.bin")
    assert np.array_equal(f.data, g.data)
    assert g.extents == f.extents and g.origin == f.origin
    assert (tmp_path / "f.bin").stat().st_size == 5 * 6 * 7 * 16


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("CONELAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("CONELAB_THREADS", "0")
    assert thread_count() == 1
    monkeypatch.setenv("CONELAB_THREADS", "many")
    with pytest.raises(DomainError):
        thread_count()
    monkeypatch.delenv("CONELAB_THREADS")
    assert thread_count() >= 1


def test_shift_is_periodic():
    f = SampledField(np.arange(8.0).reshape(2, 4), (1.0, 1.0), (0.0, 0.0))
    assert np.array_equal(f.shifted((0, 4)).data, f.data)
    assert f.shifted((1, 1)).data[1, 1] == 0.0
