"""Figure rendering for order-oracle descent sample files.

render   : samples.csv (+ optional report.json) to a heatmap image with
           theoretical-covariance ellipse overlays, plus grid/meta side files.
cli      : the `plot` command line front end.
"""

__version__ = "0.1.0"
