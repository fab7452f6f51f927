"""Deterministic synthetic fixture world: two cities, one street each,
cascade-consistent ground truth, and a matching keyframe manifest."""

import json
import random
from dataclasses import dataclass
from pathlib import Path

from riskmap.catalog import (
    BinaryAnswer,
    QuerySession,
    default_catalog,
    next_questions,
    record_answer,
)

SEED = 20260419

CITIES = [
    # (city, continent, prefix, way_id, lat0, lon0)
    ("alpha", "europe", "a", 100, 41.4000, 2.1500),
    ("beta", "asia", "b", 200, 35.0100, 139.7000),
]

LON_STEP = 0.0003  # ~25 m of street per segment at the fixture latitudes
LAT_OFFSET = 0.000027  # keyframes sit ~3 m north of the street


def random_session(catalog, rng, image_id, p_yes=0.3, p_skip=0.05):
    """Drive a session to completion with random answers; always cascade-legal."""
    session = QuerySession(image_id, {}, catalog.version)
    while True:
        pending = next_questions(session, catalog)
        if not pending:
            return session
        for qid in pending:
            roll = rng.random()
            if roll < p_skip:
                answer = BinaryAnswer.UNANSWERED
            elif roll < p_skip + p_yes:
                answer = BinaryAnswer.YES
            else:
                answer = BinaryAnswer.NO
            session = record_answer(session, qid, answer, catalog)


@dataclass
class World:
    root: Path
    manifest: Path
    gt: Path
    osm: Path
    catalog_version: str
    image_ids: list


def build_world(root: Path, images_per_city=12, seed=SEED) -> World:
    catalog = default_catalog()
    rng = random.Random(seed)

    osm_nodes = []
    osm_ways = []
    sequences = []
    gt_images = []
    image_ids = []
    node_id = 1

    for city, continent, prefix, way_id, lat0, lon0 in CITIES:
        refs = []
        for k in range(images_per_city + 1):
            osm_nodes.append((node_id, lat0, lon0 + LON_STEP * k))
            refs.append(node_id)
            node_id += 1
        osm_ways.append((way_id, refs))

        entries = []
        for k in range(images_per_city):
            image_id = f"{prefix}_{k:03d}"
            image_ids.append(image_id)
            entries.append(
                {
                    "image_id": image_id,
                    "path": "",
                    "lat": lat0 + LAT_OFFSET,
                    "lon": lon0 + LON_STEP * k + LON_STEP / 2,
                    "timestamp": 1700000000 + 10 * k,
                }
            )
            session = random_session(catalog, rng, image_id)
            gt_images.append(
                {
                    "image_id": image_id,
                    "city": city,
                    "continent": continent,
                    "sequence_id": f"{prefix}-seq",
                    "answers": {
                        qid: a.value for qid, a in sorted(session.answers.items())
                    },
                }
            )
        sequences.append(
            {
                "sequence_id": f"{prefix}-seq",
                "city": city,
                "continent": continent,
                "images": entries,
            }
        )

    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps({"sequences": sequences}, indent=2))

    gt_path = root / "gt.json"
    gt_path.write_text(
        json.dumps({"catalog_version": catalog.version, "images": gt_images}, indent=2)
    )

    osm_path = root / "route.osm"
    osm_path.write_text(render_osm(osm_nodes, osm_ways))

    return World(
        root=root,
        manifest=manifest_path,
        gt=gt_path,
        osm=osm_path,
        catalog_version=catalog.version,
        image_ids=image_ids,
    )


def render_osm(nodes, ways, highway="residential"):
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', '<osm version="0.6">']
    for nid, lat, lon in nodes:
        lines.append(f'  <node id="{nid}" lat="{lat:.7f}" lon="{lon:.7f}"/>')
    for way_id, refs in ways:
        lines.append(f'  <way id="{way_id}">')
        for ref in refs:
            lines.append(f'    <nd ref="{ref}"/>')
        lines.append(f'    <tag k="highway" v="{highway}"/>')
        lines.append("  </way>")
    lines.append("</osm>")
    return "\n".join(lines) + "\n"
