"""Street graph extraction from OSM XML extracts and nearest-segment matching."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .geo import GpsPoint, point_to_segment_meters

# Highway values considered relevant for pedestrian routes. Anything else
# (motorways, waterways, buildings) contributes no segments.
WALKABLE_HIGHWAYS = frozenset(
    {
        "footway",
        "path",
        "pedestrian",
        "residential",
        "living_street",
        "primary",
        "secondary",
        "tertiary",
        "unclassified",
        "service",
        "steps",
        "crossing",
    }
)

DEFAULT_MATCH_RADIUS_M = 25.0


class OsmParseError(ValueError):
    """Raised for malformed XML or dangling node references on kept ways."""


@dataclass(frozen=True)
class StreetSegment:
    """One consecutive node pair of a walkable way."""

    segment_id: str
    start: GpsPoint
    end: GpsPoint
    way_id: str

    def __post_init__(self) -> None:
        if self.start == self.end:
            raise ValueError(f"segment {self.segment_id!r} has coincident endpoints")


@dataclass(frozen=True)
class StreetGraph:
    segments: tuple[StreetSegment, ...]
    nodes: dict[str, GpsPoint]


def parse_osm(document: str) -> StreetGraph:
    """Build the street graph from an OSM XML extract.

    Every way whose highway tag is in the walkable whitelist emits one segment
    per consecutive node pair; node references of kept ways must resolve.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise OsmParseError(f"malformed OSM XML: {exc}") from exc

    nodes: dict[str, GpsPoint] = {}
    for node in root.iter("node"):
        try:
            nodes[node.attrib["id"]] = GpsPoint(
                float(node.attrib["lat"]), float(node.attrib["lon"])
            )
        except (KeyError, ValueError) as exc:
            raise OsmParseError(f"bad node element: {exc}") from exc

    segments: list[StreetSegment] = []
    for way in root.iter("way"):
        way_id = way.attrib.get("id", "")
        tags = {
            tag.attrib.get("k"): tag.attrib.get("v") for tag in way.findall("tag")
        }
        if tags.get("highway") not in WALKABLE_HIGHWAYS:
            continue
        refs = [nd.attrib["ref"] for nd in way.findall("nd")]
        for ref in refs:
            if ref not in nodes:
                raise OsmParseError(f"way {way_id!r} references undefined node {ref!r}")
        for i in range(len(refs) - 1):
            segments.append(
                StreetSegment(
                    segment_id=f"{way_id}:{i}",
                    start=nodes[refs[i]],
                    end=nodes[refs[i + 1]],
                    way_id=way_id,
                )
            )
    return StreetGraph(segments=tuple(segments), nodes=nodes)


def point_segment_distance(p: GpsPoint, segment: StreetSegment) -> float:
    """Meters from p to the segment on its local tangent plane."""
    return point_to_segment_meters(p, segment.start, segment.end)


def match_to_segment(
    p: GpsPoint, graph: StreetGraph, max_radius: float = DEFAULT_MATCH_RADIUS_M
) -> str | None:
    """Id of the nearest segment within max_radius, or None.

    Ties break on the lexicographically smallest segment id, so the result
    does not depend on graph storage order.
    """
    if not max_radius > 0:
        raise ValueError(f"max_radius must be positive, got {max_radius}")
    best: tuple[float, str] | None = None
    for segment in graph.segments:
        d = point_segment_distance(p, segment)
        if d > max_radius:
            continue
        key = (d, segment.segment_id)
        if best is None or key < best:
            best = key
    return best[1] if best is not None else None
