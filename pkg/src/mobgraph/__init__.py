"""Mobility graphs from geo-tagged event streams.

The toolkit infers user home locations from night-time activity, derives a
data-driven neighborhood division through density clustering, selects robust
space partitions with an information distance, and builds a directed,
person-weighted mobility graph whose communities and centralities describe
how people move between areas.
"""

from .analysis import (CentralityScores, CommunityPartition, RankedNode, betweenness,
                       louvain, modularity, rank_nodes)
from .clustering import (NOISE, ClusterParams, Clustering, HomeLocation, dbscan,
                         infer_home, neighborhoods)
from .geo import (EARTH_RADIUS_KM, BoundingBox, GeoPoint, euclidean_deg, haversine_km,
                  nearest_center, nearest_center_bulk)
from .graph import (DegreeStats, DegreeSummary, MobilityGraph, build_graph, degree_stats,
                    ks_two_sample, prune_isolated, weak_components)
from .ingest import (GeoEvent, NightWindow, RecordIssue, filter_bbox, filter_night,
                     group_by_user, parse_events)
from .partition import (EpsilonPair, NodeSet, assemble_nodes, entropy, entropy_labels,
                        mutual_information, mutual_information_labels, sample_pairs,
                        select_top, variation_of_information,
                        variation_of_information_labels, vi_matrix)
from .pipeline import PipelineConfig, PipelineError, run
from .synth import GroundTruth, SynthConfig, block_commute_matrix, generate, nmi_labels

__version__ = "0.1.0"
