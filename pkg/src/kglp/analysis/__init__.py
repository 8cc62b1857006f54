"""Structural features of test facts and performance reports over them."""

from kglp.analysis.buckets import (
    BucketReport,
    JoinError,
    bucket_report,
    group_report,
    join_feature,
    log_edges,
    read_feature_file,
    write_feature_file,
)
from kglp.analysis.paths import PathGraph, enumerate_relational_paths
from kglp.analysis.peers import PeerCounts, count_peers, peer_features
from kglp.analysis.properties import PROPERTIES, RelationProfile, detect_relation_properties
from kglp.analysis.rps import RpsIndex, build_rps_index, rps, rps_score_all, rps_scorer

__all__ = [
    "BucketReport", "JoinError", "bucket_report", "group_report", "join_feature", "log_edges",
    "read_feature_file", "write_feature_file", "PathGraph", "enumerate_relational_paths",
    "PeerCounts", "count_peers", "peer_features", "PROPERTIES", "RelationProfile",
    "detect_relation_properties", "RpsIndex", "build_rps_index", "rps", "rps_score_all",
    "rps_scorer",
]
