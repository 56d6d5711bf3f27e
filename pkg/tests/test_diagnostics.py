"""Diagnostics records, CSV format, field dumps, and the decay fitter."""

import numpy as np
import pytest

import cmaflow as cm
from cmaflow import cmaf
from cmaflow.diagnostics import (
    COLUMNS,
    CSV_HEADER_COMMENT,
    DiagnosticsRecord,
    fit_decay,
    read_csv,
    write_csv,
)

from conftest import random_bandlimited


def make_record(t, seed=0):
    rng = np.random.default_rng(seed)
    vals = rng.uniform(0.1, 2.0, size=len(COLUMNS) - 1)
    return DiagnosticsRecord(t, *vals)


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        records = [make_record(0.0, 1), make_record(0.125, 2),
                   make_record(1.0 / 3.0, 3)]
        path = tmp_path / "diag.csv"
        write_csv(path, records)
        back = read_csv(path)
        assert len(back) == 3
        for a, b in zip(records, back):
            for col in COLUMNS:
                assert getattr(a, col) == getattr(b, col), col

    def test_header_and_columns(self, tmp_path):
        path = tmp_path / "diag.csv"
        write_csv(path, [])
        lines = path.read_text().splitlines()
        assert lines[0] == CSV_HEADER_COMMENT
        assert lines[1].split(",") == COLUMNS
        assert COLUMNS[0] == "t"
        assert len(COLUMNS) == 13

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# something else\n" + ",".join(COLUMNS) + "\n")
        with pytest.raises(ValueError, match="header"):
            read_csv(path)

    def test_rejects_wrong_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(CSV_HEADER_COMMENT + "\nt,dt\n")
        with pytest.raises(ValueError, match="columns"):
            read_csv(path)


class TestCmafFormat:
    @pytest.mark.parametrize("n,N", [(1, 64), (2, 16)])
    def test_round_trip_bit_exact(self, tmp_path, n, N):
        grid = cm.Grid(n, N)
        rng = np.random.default_rng(42)
        field = random_bandlimited(grid, rng, amp=1.0)
        path = tmp_path / "u.cmaf"
        cmaf.write_field(path, field)
        back = cmaf.read_field(path)
        assert back.grid == grid
        assert np.array_equal(back.values, field.values)

    def test_read_info(self, tmp_path):
        grid = cm.Grid(1, 16)
        path = tmp_path / "u.cmaf"
        cmaf.write_field(path, cm.ScalarField.zeros(grid))
        assert cmaf.read_info(path) == (1, 16, 256)

    def test_header_layout(self, tmp_path):
        grid = cm.Grid(1, 16)
        path = tmp_path / "u.cmaf"
        cmaf.write_field(path, cm.ScalarField.zeros(grid))
        raw = path.read_bytes()
        assert raw[:5] == b"CMAF\x01"
        assert len(raw) == 5 + 16 + 256 * 8

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.cmaf"
        path.write_bytes(b"NOPE\x01" + b"\x00" * 16)
        with pytest.raises(ValueError, match="magic"):
            cmaf.read_info(path)

    def test_inconsistent_count(self, tmp_path):
        import struct
        path = tmp_path / "bad.cmaf"
        path.write_bytes(b"CMAF\x01" + struct.pack("<IIQ", 1, 16, 999))
        with pytest.raises(ValueError, match="inconsistent"):
            cmaf.read_info(path)

    def test_truncated_payload(self, tmp_path):
        grid = cm.Grid(1, 16)
        path = tmp_path / "u.cmaf"
        cmaf.write_field(path, cm.ScalarField.zeros(grid))
        raw = path.read_bytes()
        path.write_bytes(raw[:-16])
        with pytest.raises(ValueError, match="truncated"):
            cmaf.read_field(path)


class TestFitDecay:
    def test_exact_exponential(self):
        t = np.linspace(0.0, 5.0, 100)
        omega = 3.0 * np.exp(-2.0 * t)
        fit = fit_decay(t, omega)
        assert fit.fitted
        assert fit.eta == pytest.approx(2.0, abs=1e-6)
        assert fit.C == pytest.approx(3.0, rel=1e-6)
        assert fit.r_squared > 0.999999

    def test_noisy_exponential(self):
        rng = np.random.default_rng(2024)
        t = np.linspace(0.0, 5.0, 200)
        omega = 3.0 * np.exp(-2.0 * t) * (1.0 + 0.01 * rng.standard_normal(200))
        fit = fit_decay(t, omega)
        assert fit.fitted
        assert abs(fit.eta - 2.0) / 2.0 < 0.05
        assert fit.r_squared > 0.9

    def test_final_decade_ignores_early_plateau(self):
        # flat for a while, then clean decay: the fit must use the tail
        t = np.linspace(0.0, 10.0, 400)
        omega = np.where(t < 5.0, 1.0, np.exp(-3.0 * (t - 5.0)))
        # keep the tail above the floor within one decade of the end
        omega = np.maximum(omega, np.exp(-3.0 * 5.0))
        fit = fit_decay(t, omega)
        assert fit.fitted
        # a whole-series fit would report eta near 1.5, not 3
        assert fit.eta == pytest.approx(3.0, rel=0.05)

    def test_floor_skip(self):
        t = np.linspace(0.0, 1.0, 10)
        omega = np.zeros(10)
        fit = fit_decay(t, omega)
        assert not fit.fitted
        assert "floor" in fit.note

    def test_mismatched_shapes(self):
        with pytest.raises(ValueError):
            fit_decay([0.0, 1.0], [1.0])
