import random

import pytest

from riskmap.geo import GpsPoint
from riskmap.osm import (
    OsmParseError,
    StreetGraph,
    StreetSegment,
    match_to_segment,
    parse_osm,
    point_segment_distance,
)

OSM_HEADER = '<?xml version="1.0" encoding="UTF-8"?>\n<osm version="0.6">'


def osm_doc(nodes, ways):
    lines = [OSM_HEADER]
    for nid, lat, lon in nodes:
        lines.append(f'<node id="{nid}" lat="{lat}" lon="{lon}"/>')
    for way_id, refs, tags in ways:
        lines.append(f'<way id="{way_id}">')
        lines.extend(f'<nd ref="{r}"/>' for r in refs)
        lines.extend(f'<tag k="{k}" v="{v}"/>' for k, v in tags.items())
        lines.append("</way>")
    lines.append("</osm>")
    return "\n".join(lines)


TWO_NODES = [("1", 41.4, 2.15), ("2", 41.4, 2.1506)]


class TestParse:
    def test_one_highway_way_two_nodes_one_segment(self):
        graph = parse_osm(osm_doc(TWO_NODES, [("10", ["1", "2"], {"highway": "residential"})]))
        assert len(graph.segments) == 1
        segment = graph.segments[0]
        assert segment.segment_id == "10:0"
        assert segment.way_id == "10"
        assert segment.start == GpsPoint(41.4, 2.15)

    def test_four_node_way_three_segments(self):
        nodes = [("1", 41.4, 2.15), ("2", 41.4, 2.151), ("3", 41.4, 2.152), ("4", 41.4, 2.153)]
        graph = parse_osm(osm_doc(nodes, [("10", ["1", "2", "3", "4"], {"highway": "footway"})]))
        assert [s.segment_id for s in graph.segments] == ["10:0", "10:1", "10:2"]

    @pytest.mark.parametrize("n", [2, 3, 5, 9])
    def test_way_with_n_nodes_has_n_minus_one_segments(self, n):
        nodes = [(str(i), 41.4, 2.15 + 0.001 * i) for i in range(n)]
        ways = [("7", [str(i) for i in range(n)], {"highway": "path"})]
        assert len(parse_osm(osm_doc(nodes, ways)).segments) == n - 1

    def test_way_without_highway_tag_contributes_nothing(self):
        graph = parse_osm(osm_doc(TWO_NODES, [("10", ["1", "2"], {"building": "yes"})]))
        assert graph.segments == ()
        assert len(graph.nodes) == 2

    def test_non_walkable_highway_filtered(self):
        graph = parse_osm(osm_doc(TWO_NODES, [("10", ["1", "2"], {"highway": "motorway"})]))
        assert graph.segments == ()

    def test_malformed_xml_rejected(self):
        with pytest.raises(OsmParseError, match="malformed"):
            parse_osm("<osm><node id=")

    def test_undefined_node_reference_rejected(self):
        doc = osm_doc(TWO_NODES, [("10", ["1", "99"], {"highway": "residential"})])
        with pytest.raises(OsmParseError, match="undefined node"):
            parse_osm(doc)

    def test_dangling_ref_on_filtered_way_is_tolerated(self):
        doc = osm_doc(TWO_NODES, [("10", ["1", "99"], {"building": "yes"})])
        parse_osm(doc)


class TestPointSegmentDistance:
    def test_endpoint_distance_zero(self):
        segment = StreetSegment("s:0", GpsPoint(41.4, 2.15), GpsPoint(41.4, 2.151), "s")
        assert point_segment_distance(GpsPoint(41.4, 2.15), segment) == 0.0

    def test_offset_distance(self):
        segment = StreetSegment("s:0", GpsPoint(41.4, 2.15), GpsPoint(41.4, 2.152), "s")
        assert point_segment_distance(GpsPoint(41.401, 2.151), segment) == pytest.approx(
            111.2, abs=0.5
        )


def simple_graph():
    doc = osm_doc(
        [
            ("1", 41.4, 2.15),
            ("2", 41.4, 2.1506),   # way 10: west-east, ~50 m
            ("3", 41.401, 2.15),
            ("4", 41.401, 2.1506), # way 20: parallel, ~111 m north
        ],
        [
            ("10", ["1", "2"], {"highway": "residential"}),
            ("20", ["3", "4"], {"highway": "residential"}),
        ],
    )
    return parse_osm(doc)


class TestMatch:
    def test_point_on_segment_matches_it(self):
        graph = simple_graph()
        assert match_to_segment(GpsPoint(41.4, 2.1503), graph) == "10:0"

    def test_point_beyond_radius_matches_nothing(self):
        graph = simple_graph()
        # halfway between the streets: ~55 m from each, beyond the 25 m default
        assert match_to_segment(GpsPoint(41.4005, 2.1503), graph) is None
        assert match_to_segment(GpsPoint(41.4005, 2.1503), graph, max_radius=60) is not None

    def test_equidistant_tie_breaks_to_smaller_id(self):
        graph = simple_graph()
        midpoint = GpsPoint(41.4005, 2.1503)
        assert match_to_segment(midpoint, graph, max_radius=100) == "10:0"

    def test_invariant_under_storage_order(self):
        graph = simple_graph()
        shuffled = list(graph.segments)
        random.Random(3).shuffle(shuffled)
        permuted = StreetGraph(segments=tuple(shuffled), nodes=graph.nodes)
        for lat, lon in [(41.4005, 2.1503), (41.4001, 2.1501), (41.4009, 2.1505)]:
            p = GpsPoint(lat, lon)
            assert match_to_segment(p, graph, 200) == match_to_segment(p, permuted, 200)

    def test_empty_graph_matches_nothing(self):
        graph = StreetGraph(segments=(), nodes={})
        assert match_to_segment(GpsPoint(41.4, 2.15), graph) is None

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(ValueError):
            match_to_segment(GpsPoint(41.4, 2.15), simple_graph(), max_radius=0)


def test_coincident_endpoints_rejected():
    with pytest.raises(ValueError, match="coincident"):
        StreetSegment("s:0", GpsPoint(41.4, 2.15), GpsPoint(41.4, 2.15), "s")
