"""Multi-modal depressive-symptom severity scoring.

Sentence-level audio, facial-keypoint and transcript features are summarized
by a causal dilated convolutional network (or an LSTM / mean baseline) and
fed to PHQ regression and MDD classification heads.
"""

__version__ = "0.1.0"
