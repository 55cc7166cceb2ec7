"""Class2Simi package.

Learning with noisy class labels by training on pairwise similarity
labels corrected with a 2x2 similarity transition matrix.
"""

from .pipeline import Class2SimiPipeline, run_experiment, run_matrix_robustness
from .transition import ClassTransitionMatrix, SimilarityTransitionMatrix, class2simi
