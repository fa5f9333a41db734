"""
Tests for chart generation.
"""
import pandas as pd
import pytest

from src.models import PredictionRecord
from src.visualization import ChartGenerator


class TestChartGenerator:
    """Test that each chart builds the expected traces."""

    def test_history_chart(self):
        """Test loss, criterion, checkpoint and lr traces."""
        history = pd.DataFrame({
            "epoch": [0, 1, 2], "loss": [1.0, 0.8, 0.7], "loc": [0.9, 0.7, 0.6], "rec": [0.2, 0.2, 0.1],
            "det": [0.0, 0.0, 0.0], "criterion": [0.5, 0.9, 0.8], "lr": [1e-3, 1e-3, 5e-4],
            "improved": [True, True, False],
        })
        fig = ChartGenerator().history_chart(history)
        names = [trace.name for trace in fig.data]
        assert names == ["loss", "loc", "rec", "det", "criterion", "checkpoint", "lr"]
        assert list(fig.data[5].x) == [0, 1]

    def test_sweep_chart(self):
        """Test only ranked cells are drawn and the best is highlighted."""
        table = pd.DataFrame({
            "cell_id": ["a", "b", "c"], "avg_rank": [1.0, 2.0, None],
            "best": [True, False, False], "criterion": [2.0, 1.0, None],
        })
        fig = ChartGenerator().sweep_chart(table)
        assert list(fig.data[0].x) == ["a", "b"]
        assert list(fig.data[0].marker.color) == ["#c62828", "#1f77b4"]

    def test_calibration_chart(self):
        """Test a zero theta keeps a linear axis."""
        table = pd.DataFrame({"theta": [0.0, 0.01, 0.1], "auc": [0.5, 0.8, 0.7], "ap": [0.5, 0.9, 0.6]})
        fig = ChartGenerator().calibration_chart(table, best_theta=0.01)
        assert len(fig.data) == 2
        assert fig.layout.xaxis.type == "linear"

    def test_timeline_chart(self, tmp_path):
        """Test one trace per predicted segment and an HTML file on disk."""
        record = PredictionRecord(
            video_id="clip", duration=10.0, segments=[(1.0, 2.0, 0.9), (4.0, 6.0, 0.3)],
            valid_segments=[(0.0, 8.0)],
        )
        charts = ChartGenerator()
        fig = charts.timeline_chart(record)
        assert len(fig.data) == 2
        assert len(fig.layout.shapes) == 1
        path = charts.write_html(fig, str(tmp_path / "out" / "clip.html"))
        assert (tmp_path / "out" / "clip.html").exists() and path.endswith("clip.html")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
