"""Georeferenced risk event maps: matching, aggregation, GeoJSON rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .catalog import BinaryAnswer, QuerySession, QuestionCatalog
from .geo import GpsPoint
from .osm import DEFAULT_MATCH_RADIUS_M, StreetGraph, match_to_segment
from .risk import (
    DEFAULT_THRESHOLDS,
    CategoryAnswers,
    RiskCategory,
    RiskThresholds,
    SegmentRisk,
    WeightConfig,
    classify,
    image_risk,
    segment_risk,
)

CATEGORY_STROKE: dict[RiskCategory, str] = {
    RiskCategory.SAFE: "#2ecc71",
    RiskCategory.CAUTION: "#f1c40f",
    RiskCategory.DANGER: "#e67e22",
    RiskCategory.HIGH_RISK: "#e74c3c",
    RiskCategory.UNOBSERVED: "#9e9e9e",
}
TRAJECTORY_STROKE = "#1f6feb"
TRAJECTORY_DASH = "4 4"


@dataclass(frozen=True)
class Keyframe:
    image_id: str
    position: GpsPoint
    timestamp: float
    sequence_id: str


@dataclass(frozen=True)
class EventNode:
    """One analyzed keyframe: location, answered questions, risk."""

    position: GpsPoint
    image_id: str
    labels: tuple[tuple[str, BinaryAnswer], ...]
    risk: float
    embedding_ref: str | None = None


@dataclass(frozen=True)
class RiskEventMap:
    """Per-segment aggregated risk plus the trajectory and event nodes."""

    segments: tuple
    segment_risks: dict[str, SegmentRisk]
    categories: dict[str, RiskCategory]
    trajectory: tuple[GpsPoint, ...]
    events: tuple[EventNode, ...]
    unobserved: tuple[str, ...] = field(default_factory=tuple)


def assemble_event_map(
    keyframes: Sequence[Keyframe],
    risks: Mapping[str, float],
    graph: StreetGraph,
    max_radius: float = DEFAULT_MATCH_RADIUS_M,
    labels: Mapping[str, tuple[tuple[str, BinaryAnswer], ...]] | None = None,
    thresholds: RiskThresholds = DEFAULT_THRESHOLDS,
) -> RiskEventMap:
    """Aggregate precomputed per-image risks onto the street graph.

    Keyframes that match no segment still contribute to the trajectory and
    event nodes; graph segments nobody matched are listed unobserved.
    """
    seen: set[str] = set()
    for kf in keyframes:
        if kf.image_id in seen:
            raise ValueError(f"duplicate image id {kf.image_id!r}")
        seen.add(kf.image_id)
    missing = [kf.image_id for kf in keyframes if kf.image_id not in risks]
    if missing:
        raise ValueError(f"no risk for image(s): {', '.join(sorted(missing))}")

    ordered = sorted(keyframes, key=lambda kf: (kf.timestamp, kf.image_id))
    by_segment: dict[str, list[tuple[str, float]]] = {}
    for kf in ordered:
        segment_id = match_to_segment(kf.position, graph, max_radius)
        if segment_id is not None:
            by_segment.setdefault(segment_id, []).append(
                (kf.image_id, risks[kf.image_id])
            )

    segment_risks: dict[str, SegmentRisk] = {}
    categories: dict[str, RiskCategory] = {}
    unobserved: list[str] = []
    for segment in graph.segments:
        contributors = by_segment.get(segment.segment_id)
        if contributors:
            aggregated = segment_risk(segment.segment_id, contributors)
            segment_risks[segment.segment_id] = aggregated
            categories[segment.segment_id] = classify(aggregated.value, thresholds)
        else:
            categories[segment.segment_id] = RiskCategory.UNOBSERVED
            unobserved.append(segment.segment_id)

    label_map = labels or {}
    events = tuple(
        EventNode(
            position=kf.position,
            image_id=kf.image_id,
            labels=label_map.get(kf.image_id, ()),
            risk=risks[kf.image_id],
        )
        for kf in ordered
    )
    return RiskEventMap(
        segments=graph.segments,
        segment_risks=segment_risks,
        categories=categories,
        trajectory=tuple(kf.position for kf in ordered),
        events=events,
        unobserved=tuple(unobserved),
    )


def build_event_map(
    keyframes: Sequence[Keyframe],
    sessions: Mapping[str, QuerySession],
    graph: StreetGraph,
    weights: WeightConfig,
    catalog: QuestionCatalog,
    max_radius: float = DEFAULT_MATCH_RADIUS_M,
    thresholds: RiskThresholds = DEFAULT_THRESHOLDS,
) -> RiskEventMap:
    """Score every image from its session, then aggregate onto the graph.

    Event nodes keep every answered question as a semantic label; the stored
    risk is the recomputation from the session's Level-1 answers.
    """
    keyframe_ids = {kf.image_id for kf in keyframes}
    stray = set(sessions) - keyframe_ids
    if stray:
        raise ValueError(f"session(s) without a keyframe: {', '.join(sorted(stray))}")

    order = {q.id: i for i, q in enumerate(catalog.questions)}
    risks: dict[str, float] = {}
    labels: dict[str, tuple[tuple[str, BinaryAnswer], ...]] = {}
    for kf in keyframes:
        session = sessions.get(
            kf.image_id, QuerySession(kf.image_id, {}, catalog.version)
        )
        risks[kf.image_id] = image_risk(
            CategoryAnswers.from_session(session, catalog), weights
        )
        labels[kf.image_id] = tuple(
            sorted(session.answers.items(), key=lambda item: order.get(item[0], len(order)))
        )
    return assemble_event_map(keyframes, risks, graph, max_radius, labels, thresholds)


def render_geojson(event_map: RiskEventMap) -> str:
    """Serialize the map as a GeoJSON FeatureCollection.

    Segments are LineStrings colored by category (unobserved segments carry no
    risk property), the trajectory is a dashed blue LineString, keyframes are
    Points. Output is deterministic: fixed feature order, sorted keys.
    """
    features: list[dict] = []
    for segment in event_map.segments:
        category = event_map.categories[segment.segment_id]
        properties: dict = {
            "segment_id": segment.segment_id,
            "category": category.value,
            "stroke": CATEGORY_STROKE[category],
        }
        aggregated = event_map.segment_risks.get(segment.segment_id)
        if aggregated is not None:
            properties["risk"] = aggregated.value
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [
                        [segment.start.lon, segment.start.lat],
                        [segment.end.lon, segment.end.lat],
                    ],
                },
                "properties": properties,
            }
        )

    if event_map.trajectory:
        coords = [[p.lon, p.lat] for p in event_map.trajectory]
        if len(coords) == 1:
            # LineStrings need two positions; a single-keyframe run degenerates.
            coords = coords * 2
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {
                    "role": "trajectory",
                    "stroke": TRAJECTORY_STROKE,
                    "dash": TRAJECTORY_DASH,
                },
            }
        )

    for event in event_map.events:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [event.position.lon, event.position.lat],
                },
                "properties": {
                    "role": "keyframe",
                    "image_id": event.image_id,
                    "risk": event.risk,
                },
            }
        )

    collection = {"type": "FeatureCollection", "features": features}
    return json.dumps(collection, sort_keys=True, indent=2)


def summarize(event_map: RiskEventMap) -> dict:
    """Segment counts per category plus keyframe/match totals."""
    counts = {category.value: 0 for category in RiskCategory}
    for category in event_map.categories.values():
        counts[category.value] += 1
    matched_images = {
        image_id
        for aggregated in event_map.segment_risks.values()
        for image_id in aggregated.contributing_images
    }
    return {
        "segments": counts,
        "keyframes": len(event_map.events),
        "matched_keyframes": len(matched_images),
    }
