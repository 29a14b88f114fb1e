"""Random Dirichlet series: abscissa estimation and Borel-Cantelli criteria."""

__version__ = "0.1.0"
