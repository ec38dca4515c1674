from __future__ import annotations

import xml.etree.ElementTree as ET

import pytest

from lsc import compile_circuit, data_text, parse_circuit
from lsc.render import UnknownFormat, render
from lsc.schedule import SurgerySchedule, adjacent, frames


def schedule(name, place=None):
    return compile_circuit(parse_circuit(data_text(name)), data_text(place) if place else None).schedule


def test_shared_target_frames_match_golden(golden):
    assert render(schedule("shared_target.icm"), "ascii") == golden("shared_target.render.txt")


def test_frame_per_timestep():
    s = schedule("steane.icm", "steane.place")
    text = render(s, "ascii")
    assert text.count("step ") == s.num_timesteps == 7
    assert "step 5/7: inject" in text


def test_steane_injections_sit_next_to_their_qubits():
    s = schedule("steane.icm", "steane.place")
    frame = frames(s)[4]
    injected = {pid: cells for pid, cells in frame.patches.items() if pid.startswith("Y")}
    assert sorted(s.qubit_map[p] + 1 for p in injected) == [1, 2, 3, 4, 5, 6, 7]
    for pid, cells in injected.items():
        q = s.qubit_map[pid]
        owners = [cs for p, cs in frame.patches.items() if s.qubit_map.get(p) == q and p != pid]
        assert any(adjacent(cells, cs) for cs in owners)


def test_split_and_merge_frames_differ():
    text = render(schedule("shared_target.icm"), "ascii")
    split, merge = text.split("step ")[2:4]
    assert "1 1" in split and "1-1" in merge


def test_svg_has_one_group_per_frame():
    s = schedule("rotation_z.icm")
    root = ET.fromstring(render(s, "svg"))
    groups = [g for g in root if g.tag.endswith("g")]
    assert [g.get("id") for g in groups] == [f"step{i}" for i in range(1, s.num_timesteps + 1)]


def test_empty_schedule_has_no_frames():
    s = SurgerySchedule(grid=(0, 0), steps=(), qubit_map={})
    assert render(s, "ascii") == ""
    assert ET.fromstring(render(s, "svg")).find("{http://www.w3.org/2000/svg}g") is None


def test_rendering_is_deterministic():
    a = render(schedule("reed_muller.icm", "reed_muller.place"), "svg")
    b = render(schedule("reed_muller.icm", "reed_muller.place"), "svg")
    assert a == b


def test_unknown_format():
    with pytest.raises(UnknownFormat):
        render(schedule("shared_target.icm"), "png")
