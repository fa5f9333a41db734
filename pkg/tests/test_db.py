"""
Tests for the sweep registry.
"""
import pytest

from src.db import Database
from src.models import SweepCellResult


@pytest.fixture
def db(tmp_path):
    database = Database(str(tmp_path / "sweeps.db"))
    database.initialize_schema()
    yield database
    database.close()


class TestDatabase:
    """Test recording and reloading sweep cells."""

    def test_wal_mode(self, db):
        """Test the registry runs in write-ahead-log mode."""
        assert db.fetchone("PRAGMA journal_mode")["journal_mode"] == "wal"

    def test_record_and_reload(self, db):
        """Test a completed cell comes back with its params and metrics."""
        result = SweepCellResult(
            cell_id="model.d_a=32", params={"model.d_a": 32}, status="completed",
            criterion=2.5, metrics={"ap@0.5": 0.8},
        )
        db.record_cell("abc", result)
        assert db.completed_cells("abc") == {"model.d_a=32": result}
        assert db.completed_cells("other") == {}

    def test_failed_cells_not_completed(self, db):
        """Test failed cells are stored but not treated as done."""
        db.record_cell("abc", SweepCellResult(cell_id="x", params={}, status="failed", error="boom"))
        assert db.completed_cells("abc") == {}
        cells = db.sweep_cells("abc")
        assert len(cells) == 1 and cells[0].error == "boom"

    def test_replace(self, db):
        """Test re-recording a cell replaces the earlier row."""
        db.record_cell("abc", SweepCellResult(cell_id="x", params={}, status="failed", error="boom"))
        db.record_cell("abc", SweepCellResult(cell_id="x", params={}, status="completed", criterion=1.0))
        assert [c.status for c in db.sweep_cells("abc")] == ["completed"]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
