"""Classically driven blind quantum computation on cluster states.

Flow enumeration and counting, a statevector backend, the interactive
client/server protocol and an exact single-run leakage analysis.
"""

from cdbqc.graph import GridSpec, Graph, OpenGraph, build_cluster_grid, neighborhood, odd_neighborhood
from cdbqc.flows import (
    FlowBits,
    GFlow,
    GridFlow,
    check_gflow,
    count_flows_closed_form,
    count_flows_product_form,
    cut_flow_counts,
    dependency_functions,
    enumerate_grid_flows,
)
from cdbqc.protocol import MeasurementPattern, ProtocolTranscript, run_protocol, run_protocol_exhaustive

__version__ = "0.1.0"
