"""editlift: headline-to-post editing analytics and matched effect estimation.

The package splits into ingestion (`corpus`), text measures (`embedding`,
`textsim`), style grouping (`cluster`), the clickbait scorer (`clickbait`,
on top of `nn`), the matched-estimation framework (`causal`), the synthetic
benchmark generator (`synthbench`), and the command-line front end (`cli`).
"""

__version__ = "0.1.0"
