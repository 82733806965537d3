"""
Mollified training of neural networks: objectives that start smoothed (near-convex,
near-identity networks) and anneal toward the original non-convex objective.
"""

__version__ = "0.1.0"
