from __future__ import annotations

import math
import random

import numpy as np
import pytest

from porch.detector_service import create_detector_app
from porch.detectors import (DEFAULT_PALETTE, DetectorDescriptor, DetectorRegistry,
                             NoBackendAvailable, ProtocolError, SelectionPolicy,
                             Unreachable, detect_with_fallback, palette_detect,
                             remote_detect, select_backend)
from porch.model import Frame

from conftest import frame_with_rect, solid_frame
from helpers import flood_fill_components, free_port, running_app


def test_uniform_background_no_detections():
    assert palette_detect(solid_frame(64, 48)) == []


def test_single_red_rect_detection():
    frame = frame_with_rect(64, 48, (8, 8, 32, 24), (255, 0, 0))
    out = palette_detect(frame)
    assert len(out) == 1
    d = out[0]
    assert d.label == "person"
    assert d.identity is not None and not d.identity.known
    assert (d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h) == (8, 8, 32, 24)
    # area arithmetic: sqrt(768/3072) = 0.5
    assert abs(d.confidence - math.sqrt(768 / 3072)) < 1e-12
    assert d.confidence == 0.5


def test_two_disjoint_rects():
    arr = np.full((48, 64, 3), (16, 16, 16), dtype=np.uint8)
    arr[4:16, 4:20] = (200, 0, 0)   # alice, 16x12
    arr[30:42, 40:56] = (0, 0, 255)  # car, 16x12
    frame = Frame(width=64, height=48, pixels=arr.tobytes(), ts_ms=0, seq=0)
    out = palette_detect(frame)
    assert [d.label for d in out] == ["car", "person"]  # sorted by (label, y, x)
    car, person = out
    assert person.identity.known and person.identity.name == "alice"
    assert abs(person.confidence - math.sqrt(192 / 3072)) < 1e-12
    assert person.confidence == 0.25
    assert car.confidence == 0.25
    assert (car.bbox.x, car.bbox.y, car.bbox.w, car.bbox.h) == (40, 30, 16, 12)


def test_touching_different_colors_stay_separate():
    arr = np.full((10, 10, 3), (16, 16, 16), dtype=np.uint8)
    arr[2:5, 2:5] = (255, 0, 0)
    arr[2:5, 5:8] = (200, 0, 0)  # adjacent but a different palette color
    frame = Frame(width=10, height=10, pixels=arr.tobytes(), ts_ms=0, seq=0)
    out = palette_detect(frame)
    assert len(out) == 2


def test_l_shaped_component_is_one_detection():
    arr = np.full((10, 10, 3), (16, 16, 16), dtype=np.uint8)
    arr[1:6, 1:3] = (0, 255, 0)
    arr[4:6, 3:8] = (0, 255, 0)
    frame = Frame(width=10, height=10, pixels=arr.tobytes(), ts_ms=0, seq=0)
    out = palette_detect(frame)
    assert len(out) == 1
    d = out[0]
    assert (d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h) == (1, 1, 7, 5)
    assert abs(d.confidence - math.sqrt(20 / 100)) < 1e-12


def random_rect_scene(rng: random.Random, max_rects=4):
    """Random non-overlapping (1px-separated) palette rects; returns frame + truth."""
    width = rng.randrange(24, 96)
    height = rng.randrange(24, 72)
    arr = np.full((height, width, 3), (16, 16, 16), dtype=np.uint8)
    colors = list(DEFAULT_PALETTE)
    placed = []
    for _ in range(rng.randrange(0, max_rects + 1)):
        for _attempt in range(30):
            w = rng.randrange(1, max(2, width // 3))
            h = rng.randrange(1, max(2, height // 3))
            x = rng.randrange(0, width - w + 1)
            y = rng.randrange(0, height - h + 1)
            # require a 1px halo so same-color rects never merge
            if all(x + w + 1 <= px or px + pw + 1 <= x or y + h + 1 <= py or py + ph + 1 <= y
                   for px, py, pw, ph in [p[1] for p in placed]):
                color = rng.choice(colors)
                arr[y : y + h, x : x + w] = color
                placed.append((color, (x, y, w, h)))
                break
    frame = Frame(width=width, height=height, pixels=arr.tobytes(), ts_ms=0, seq=0)
    truth = []
    for color, (x, y, w, h) in placed:
        label, identity = DEFAULT_PALETTE[color]
        truth.append({"label": label, "identity": identity, "bbox": (x, y, w, h),
                      "area": w * h})
    truth.sort(key=lambda t: (t["label"], t["bbox"][1], t["bbox"][0]))
    return frame, truth


def assert_matches_truth(frame, truth, detections):
    assert len(detections) == len(truth)
    total = frame.width * frame.height
    for d, t in zip(detections, truth):
        assert d.label == t["label"]
        assert d.identity == t["identity"]
        assert (d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h) == t["bbox"]
        assert abs(d.confidence - math.sqrt(t["area"] / total)) < 1e-9


def test_random_scenes_match_ground_truth_and_flood_fill_oracle():
    rng = random.Random(1234)
    for _ in range(60):
        frame, truth = random_rect_scene(rng)
        out = palette_detect(frame)
        assert_matches_truth(frame, truth, out)
        # second, fully independent route: naive flood fill
        oracle = flood_fill_components(frame, DEFAULT_PALETTE)
        assert len(oracle) == len(out)
        for d, c in zip(out, oracle):
            assert d.label == c["label"]
            assert d.identity == c["identity"]
            assert (d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h) == c["bbox"]
            assert abs(d.confidence - math.sqrt(c["area"] / (frame.width * frame.height))) < 1e-9


# -- selection policy ---------------------------------------------------------------


def desc(name, cost, acc, available=True):
    return DetectorDescriptor(name=name, cost_per_call=cost, accuracy_score=acc,
                              available=available)


def brute_force_select(registry, policy):
    """Literal restatement of the policy rule via filter + sort."""
    available = [d for d in registry if d.available]
    if not available:
        raise NoBackendAvailable("none")
    qualifying = [d for d in available if d.accuracy_score >= policy.min_accuracy]
    if qualifying:
        return sorted(qualifying, key=lambda d: (d.cost_per_call, d.name))[0]
    return sorted(available, key=lambda d: (-d.accuracy_score, d.name))[0]


def test_select_cheapest_qualifying():
    registry = [desc("A", 0, 0.9), desc("B", 5, 0.99)]
    assert select_backend(registry, SelectionPolicy(0.8)).name == "A"


def test_select_higher_floor_picks_b():
    registry = [desc("A", 0, 0.9), desc("B", 5, 0.99)]
    assert select_backend(registry, SelectionPolicy(0.95)).name == "B"


def test_select_fallback_max_accuracy():
    registry = [desc("A", 1, 0.5), desc("B", 2, 0.7)]
    assert select_backend(registry, SelectionPolicy(0.9)).name == "B"


def test_select_all_unavailable_raises():
    registry = [desc("A", 1, 0.5, available=False)]
    with pytest.raises(NoBackendAvailable):
        select_backend(registry, SelectionPolicy(0.9))


def test_select_tie_breaks_by_name():
    registry = [desc("beta", 1, 0.9), desc("alpha", 1, 0.9)]
    assert select_backend(registry, SelectionPolicy(0.8)).name == "alpha"


def test_select_matches_brute_force_small_grid():
    costs = [0.0, 1.0, 2.0]
    accs = [0.1, 0.5, 0.9]
    names = "ABC"
    import itertools

    for size in (1, 2, 3):
        for combo in itertools.product(itertools.product(costs, accs), repeat=size):
            registry = [desc(names[i], c, a) for i, (c, a) in enumerate(combo)]
            for floor in (0.0, 0.5, 0.95):
                policy = SelectionPolicy(floor)
                assert select_backend(registry, policy).name == \
                    brute_force_select(registry, policy).name


def test_select_cost_scale_invariance():
    registry = [desc("A", 1, 0.9), desc("B", 3, 0.95), desc("C", 2, 0.85)]
    policy = SelectionPolicy(0.8)
    baseline = select_backend(registry, policy).name
    for k in (0.001, 7.0, 1e6):
        scaled = [desc(d.name, d.cost_per_call * k, d.accuracy_score) for d in registry]
        assert select_backend(scaled, policy).name == baseline


# -- fallback --------------------------------------------------------------------------


class CountingBackend:
    def __init__(self, fail=False, result=()):
        self.fail = fail
        self.calls = 0
        self.result = list(result)

    def detect(self, frame):
        self.calls += 1
        if self.fail:
            raise Unreachable("down")
        return self.result


def make_registry(specs):
    descriptors = [desc(name, cost, acc) for name, cost, acc, _ in specs]
    backends = {name: backend for name, _, _, backend in specs}
    return DetectorRegistry(descriptors, backends=backends), backends


def test_fallback_to_local_when_remote_down():
    remote = CountingBackend(fail=True)
    local = CountingBackend(result=[])
    registry, _ = make_registry([
        ("remote-hi", 0.0, 0.99, remote),
        ("palette-local", 1.0, 0.9, local),
    ])
    detections, used = detect_with_fallback(registry, SelectionPolicy(0.8), solid_frame(8, 8))
    assert used == "palette-local"
    assert remote.calls == 1 and local.calls == 1
    # remote is now sticky-unavailable: next frame goes straight to local
    detect_with_fallback(registry, SelectionPolicy(0.8), solid_frame(8, 8))
    assert remote.calls == 1 and local.calls == 2


def test_fallback_single_healthy_backend():
    local = CountingBackend(result=[])
    registry, _ = make_registry([("palette-local", 1.0, 0.9, local)])
    _, used = detect_with_fallback(registry, SelectionPolicy(0.8), solid_frame(8, 8))
    assert used == "palette-local"


def test_fallback_each_backend_tried_exactly_once():
    backends = {name: CountingBackend(fail=True) for name in ("a", "b", "c")}
    registry, _ = make_registry([(name, float(i), 0.9, b)
                                 for i, (name, b) in enumerate(backends.items())])
    with pytest.raises(NoBackendAvailable):
        detect_with_fallback(registry, SelectionPolicy(0.8), solid_frame(8, 8))
    assert all(b.calls == 1 for b in backends.values())


def test_unavailable_backend_never_invoked():
    bad = CountingBackend(fail=True)
    good = CountingBackend()
    descriptors = [DetectorDescriptor("down", 0.0, 0.99, available=False),
                   DetectorDescriptor("up", 1.0, 0.9)]
    registry = DetectorRegistry(descriptors, backends={"down": bad, "up": good})
    detect_with_fallback(registry, SelectionPolicy(0.8), solid_frame(8, 8))
    assert bad.calls == 0 and good.calls == 1


def test_health_flips_back_after_retry_window():
    clock = {"now": 1000}
    registry = DetectorRegistry([desc("a", 0.0, 0.9)],
                                backends={"a": CountingBackend()},
                                clock=lambda: clock["now"])
    registry.mark_unavailable("a")
    registry.probe()
    assert not registry.snapshot()[0].available
    clock["now"] += 10_000
    registry.probe()
    assert registry.snapshot()[0].available


# -- remote wire protocol ------------------------------------------------------------


@pytest.fixture(scope="module")
def detector_server():
    with running_app(create_detector_app()) as base_url:
        yield base_url


def test_remote_matches_local_differential(detector_server):
    rng = random.Random(7)
    for _ in range(5):
        frame, _selections = random_rect_scene(rng)
        assert remote_detect(detector_server, frame) == palette_detect(frame)


def test_remote_endpoint_down_unreachable():
    frame = solid_frame(8, 8)
    with pytest.raises(Unreachable):
        remote_detect(f"http://127.0.0.1:{free_port()}", frame, timeout_s=0.5)


def test_remote_bad_bbox_is_protocol_error(detector_server):
    class LyingBackend:
        def detect(self, frame):
            from porch.model import BoundingBox, Detection
            return [Detection(label="car", confidence=0.5, bbox=BoundingBox(0, 0, 999, 999))]

    with running_app(create_detector_app(LyingBackend())) as url:
        with pytest.raises(ProtocolError):
            remote_detect(url, solid_frame(8, 8))
