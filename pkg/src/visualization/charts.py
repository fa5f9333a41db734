"""
Charts for training runs, sweeps, theta calibration and per-video timelines.
Uses Plotly for interactive charts.
"""
from pathlib import Path
from typing import Optional

import pandas as pd
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from src.models import PredictionRecord

LOSS_COLUMNS = ["loss", "loc", "rec", "det"]


class ChartGenerator:
    """Generate interactive charts for training and scoring outputs."""

    def history_chart(self, history: pd.DataFrame, title: str = "Training History") -> go.Figure:
        """Loss components, validation criterion and learning rate per epoch.

        Args:
            history: DataFrame with the history.csv columns
            title: Chart title

        Returns:
            Plotly figure
        """
        fig = make_subplots(rows=3, cols=1, shared_xaxes=True, vertical_spacing=0.06,
                            subplot_titles=("Loss", "Criterion", "Learning rate"))
        for column in LOSS_COLUMNS:
            if column in history.columns:
                fig.add_trace(go.Scatter(x=history['epoch'], y=history[column], mode='lines', name=column),
                              row=1, col=1)

        fig.add_trace(go.Scatter(
            x=history['epoch'],
            y=history['criterion'],
            mode='lines+markers',
            name='criterion',
            line=dict(color='#2e7d32', width=2)
        ), row=2, col=1)

        improved = history[history['improved'].astype(bool)]
        if not improved.empty:
            fig.add_trace(go.Scatter(
                x=improved['epoch'],
                y=improved['criterion'],
                mode='markers',
                name='checkpoint',
                marker=dict(color='#c62828', symbol='star', size=10)
            ), row=2, col=1)

        fig.add_trace(go.Scatter(
            x=history['epoch'],
            y=history['lr'],
            mode='lines',
            name='lr',
            line=dict(color='gray', shape='hv')
        ), row=3, col=1)
        fig.update_yaxes(type='log', row=3, col=1)
        fig.update_layout(title=title, xaxis3_title="Epoch", hovermode='x unified', template='plotly_white')
        return fig

    def sweep_chart(self, table: pd.DataFrame, title: str = "Grid Sweep") -> go.Figure:
        """Average rank per cell (lower is better), best cell highlighted."""
        ranked = table[table['avg_rank'].notna()]
        colors = ['#c62828' if best else '#1f77b4' for best in ranked['best']]
        fig = go.Figure(go.Bar(
            x=ranked['cell_id'],
            y=ranked['avg_rank'],
            marker_color=colors,
            customdata=ranked['criterion'],
            hovertemplate="%{x}<br>Average rank: %{y:.2f}<br>Criterion: %{customdata:.4f}<extra></extra>"
        ))
        fig.update_layout(
            title=title,
            xaxis_title="Cell",
            yaxis_title="Average rank",
            template='plotly_white'
        )
        return fig

    def calibration_chart(self, table: pd.DataFrame, best_theta: Optional[float] = None,
                          title: str = "Threshold Calibration") -> go.Figure:
        """AUC and AP of the thresholded aggregate versus theta."""
        fig = go.Figure()
        for column, color in [('auc', '#1f77b4'), ('ap', '#ff7f0e')]:
            fig.add_trace(go.Scatter(
                x=table['theta'],
                y=table[column],
                mode='lines+markers',
                name=column.upper(),
                line=dict(color=color, width=2)
            ))
        if best_theta is not None:
            fig.add_vline(x=best_theta, line=dict(color='gray', dash='dash'),
                          annotation_text=f"theta={best_theta:g}")
        fig.update_layout(
            title=title,
            xaxis_title="theta",
            yaxis_title="Score",
            xaxis_type='log' if (table['theta'] > 0).all() else 'linear',
            template='plotly_white'
        )
        return fig

    def timeline_chart(self, record: PredictionRecord) -> go.Figure:
        """Predicted segments (height = confidence) over the valid segments of one video."""
        fig = go.Figure()
        for start, end in record.valid_segments:
            fig.add_vrect(x0=start, x1=end, fillcolor='#2e7d32', opacity=0.12, line_width=0)
        for start, end, confidence in record.segments:
            fig.add_trace(go.Scatter(
                x=[start, start, end, end],
                y=[0, confidence, confidence, 0],
                mode='lines',
                fill='toself',
                line=dict(color='#c62828', width=1),
                showlegend=False,
                hovertemplate=f"[{start:.2f}, {end:.2f}] s<br>confidence {confidence:.3f}<extra></extra>"
            ))
        fig.update_layout(
            title=f"{record.video_id} ({record.duration:.1f} s)",
            xaxis=dict(title="Time (s)", range=[0, record.duration]),
            yaxis=dict(title="Confidence", range=[0, 1.05]),
            template='plotly_white'
        )
        return fig

    @staticmethod
    def write_html(fig: go.Figure, path: str) -> str:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        fig.write_html(path, include_plotlyjs='cdn')
        return path
