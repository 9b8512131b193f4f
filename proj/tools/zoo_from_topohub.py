#!/usr/bin/env python3
# Copyright 2026 The oproute Authors
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Convert topohub Topology Zoo JSON files to Topology Zoo style GraphML.

topohub stores node positions as [longitude, latitude]. The output uses the
Latitude/Longitude/label keys of the original Zoo files.

    python3 tools/zoo_from_topohub.py topohub/data/topozoo/Abilene.json data/topologyzoo
"""

import argparse
import json
import pathlib
from xml.sax.saxutils import escape, quoteattr


def to_graphml(doc, name):
    out = [
        '<?xml version="1.0" encoding="utf-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key attr.name="Latitude" attr.type="double" for="node" id="d0" />',
        '  <key attr.name="Longitude" attr.type="double" for="node" id="d1" />',
        '  <key attr.name="label" attr.type="string" for="node" id="d2" />',
        '  <key attr.name="Network" attr.type="string" for="graph" id="d3" />',
        '  <graph edgedefault="undirected">',
        f"    <data key=\"d3\">{escape(name)}</data>",
    ]
    for node in doc["nodes"]:
        lon, lat = node["pos"]
        out.append(f"    <node id={quoteattr(str(node['id']))}>")
        out.append(f'      <data key="d0">{lat!r}</data>')
        out.append(f'      <data key="d1">{lon!r}</data>')
        out.append(f"      <data key=\"d2\">{escape(str(node.get('name', node['id'])))}</data>")
        out.append("    </node>")
    for edge in doc["edges"]:
        out.append(
            f"    <edge source={quoteattr(str(edge['source']))} "
            f"target={quoteattr(str(edge['target']))} />"
        )
    out += ["  </graph>", "</graphml>", ""]
    return "\n".join(out)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("inputs", nargs="+", type=pathlib.Path)
    parser.add_argument("outdir", type=pathlib.Path)
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    for path in args.inputs:
        doc = json.loads(path.read_text())
        target = args.outdir / (path.stem + ".graphml")
        target.write_text(to_graphml(doc, path.stem))
        print(f"{target}: {len(doc['nodes'])} nodes, {len(doc['edges'])} edges")


if __name__ == "__main__":
    main()
