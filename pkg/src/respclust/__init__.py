"""Clustering-based comparison of questionnaire groups.

Questionnaires are clustered into response types (Ward linkage, gap
statistic); each group is summarised by its fingerprint, the share of its
questionnaires on each response type, and groups are compared through their
fingerprints. A classical PCA-plus-rank-test pipeline is included for
comparison.
"""

__version__ = "0.1.0"
