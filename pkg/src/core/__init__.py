# Correlation, glasso, selection, generation and metrics
