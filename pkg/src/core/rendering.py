import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from config.constants import SVG_FORMAT  # noqa: E402
from config.settings import OUTPUT_DIR  # noqa: E402
from src.models.errors import EmptyInput  # noqa: E402
from src.models.simulation import BoxplotSummary  # noqa: E402

logger = logging.getLogger(__name__)

METRIC_LABELS = {
    'sensitivity': 'Sensitivity',
    'specificity': 'Specificity',
    'weight_correlation': 'Correlation',
}
RATIO_COLORS = ['#4C72B0', '#DD8452', '#55A868', '#C44E52', '#8172B3']


class BoxplotRenderer:
    """Draws precomputed boxplot statistics as SVG panel grids"""

    def __init__(self, output_dir: Optional[Path] = None, panel_size: Sequence[float] = (2.6, 2.4)):
        """
        Initialize renderer

        Args:
            output_dir: Directory SVG files are written to
            panel_size: Width and height of one panel in inches
        """
        self.output_dir = Path(output_dir or OUTPUT_DIR)
        self.panel_size = panel_size

    def render(self, summaries: List[BoxplotSummary], metric: str,
               output_path: Optional[Path] = None) -> Path:
        """
        Render one metric as a grid of panels

        Rows are data types and columns are gamma values. Inside a panel the
        x-axis is sample size and boxes are colored by lambda ratio.

        Returns:
            Path to the written SVG

        Raises:
            EmptyInput: If there are no summaries for the metric
        """
        selected = [s for s in summaries if s.metric == metric and s.count > 0]
        if not selected:
            raise EmptyInput(f"No summaries to render for {metric}")

        data_types = sorted({s.data_type for s in selected})
        gammas = sorted({s.gamma for s in selected})
        ratios = sorted({s.R for s in selected})
        sizes = sorted({s.n for s in selected})
        colors = {r: RATIO_COLORS[i % len(RATIO_COLORS)] for i, r in enumerate(ratios)}
        index: Dict[tuple, BoxplotSummary] = {(s.data_type, s.gamma, s.R, s.n): s for s in selected}

        fig, axes = plt.subplots(
            len(data_types), len(gammas), squeeze=False, sharex=True, sharey=True,
            figsize=(self.panel_size[0] * len(gammas), self.panel_size[1] * len(data_types)),
        )
        width = 0.8 / len(ratios)
        for row, data_type in enumerate(data_types):
            for col, gamma in enumerate(gammas):
                ax = axes[row][col]
                for k, ratio in enumerate(ratios):
                    stats, positions = [], []
                    for i, n in enumerate(sizes):
                        summary = index.get((data_type, gamma, ratio, n))
                        if summary is None:
                            continue
                        stats.append(summary.to_bxp(str(n)))
                        positions.append(i + (k - (len(ratios) - 1) / 2.0) * width)
                    if not stats:
                        continue
                    ax.bxp(stats, positions=positions, widths=width * 0.9, patch_artist=True,
                           manage_ticks=False,
                           boxprops={'facecolor': colors[ratio], 'linewidth': 0.6},
                           medianprops={'color': 'black', 'linewidth': 0.8},
                           flierprops={'marker': '.', 'markersize': 2})
                ax.set_xticks(range(len(sizes)))
                ax.set_xticklabels([str(n) for n in sizes], rotation=45, fontsize=7)
                ax.tick_params(axis='y', labelsize=7)
                if row == 0:
                    ax.set_title(f"gamma = {gamma:g}", fontsize=9)
                if col == len(gammas) - 1:
                    ax.yaxis.set_label_position("right")
                    ax.set_ylabel(data_type, fontsize=9)
                if col == 0:
                    ax.text(-0.35, 0.5, METRIC_LABELS.get(metric, metric), rotation=90,
                            transform=ax.transAxes, va='center', fontsize=8)

        fig.supxlabel("Sample size", fontsize=9)
        fig.legend(handles=[Patch(facecolor=colors[r], label=f"R = {r:g}") for r in ratios],
                   loc='upper center', ncol=len(ratios), fontsize=8, frameon=False)
        fig.tight_layout(rect=(0, 0, 1, 0.93))

        path = Path(output_path) if output_path else self.output_dir / f"{metric}{SVG_FORMAT}"
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fig.savefig(path, format='svg', metadata={'Date': None})
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            raise
        finally:
            plt.close(fig)
        logger.info(f"Rendered {metric} boxplots to {path}")
        return path

    def render_all(self, summaries: List[BoxplotSummary], metrics: Sequence[str]) -> List[Path]:
        """One SVG per metric, skipping metrics with no data"""
        paths = []
        for metric in metrics:
            try:
                paths.append(self.render(summaries, metric))
            except EmptyInput:
                logger.warning(f"No data for {metric}; skipping its plot")
        return paths
