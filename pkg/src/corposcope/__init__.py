"""Corpus profiling, per-language PCA, and subset selection for fine-tuning datasets."""

__version__ = "0.1.0"

SCHEMA_VERSIONS = {
    "profile": "corposcope/profile/1",
    "pca": "corposcope/pca/1",
    "subset_manifest": "corposcope/subset-manifest/1",
    "run_manifest": "corposcope/run-manifest/1",
}
