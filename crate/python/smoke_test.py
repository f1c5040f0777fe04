"""Quick check that the extension module loads and agrees with hand-computed values."""

import json
import math
import tempfile
from pathlib import Path

import gvp


def close(a, b, tol=1e-9):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)


def main():
    a = gvp.BBox(0, 0, 10, 10)
    b = gvp.BBox(5, 0, 10, 10)
    assert close(gvp.iou(a, b), 50 / 150)
    assert close(gvp.iou(a, a), 1.0)
    assert gvp.union_area([a, b]) == 150.0
    assert gvp.clip_box(gvp.BBox(-5, -5, 20, 20), 10, 10) == a

    roi = gvp.RoiPolygon.rect(gvp.BBox(0, 0, 20, 10), 100, 100)
    assert close(gvp.coverage_fraction([a], roi), 0.5)

    dets = [gvp.Detection(a, 0.9), gvp.Detection(gvp.BBox(1, 0, 10, 10), 0.8), gvp.Detection(gvp.BBox(50, 50, 5, 5), 0.7)]
    kept = gvp.nms(dets, 0.5)
    assert [d.confidence for d in kept] == [0.9, 0.7]

    matches, fp, fn = gvp.match_greedy(dets, [a, gvp.BBox(80, 80, 5, 5)])
    assert [(d, g) for d, g, _ in matches] == [(0, 0)]
    assert fp == [1, 2] and fn == [1]

    p, r, f1 = gvp.precision_recall_f1(94, 6, 18)
    assert close(p, 0.94) and close(r, 94 / 112)
    assert close(gvp.average_precision([(0.9, True), (0.8, False), (0.7, True)], 2), (51 + 50 * 2 / 3) / 101)
    assert close(gvp.average_precision([(0.9, True), (0.8, True)], 2), 1.0)

    day0 = 1_704_047_400
    ts = [day0 + 300 * i for i in range(288)]
    bins = gvp.profile(ts, [0.39] * 288, "hourly")
    assert len(bins) == 24 and all(close(mean, 0.39) for _, _, _, mean in bins)

    events = gvp.detect_events([0, 300, 600], [0.4, 0.4, 0.0])
    assert [e[0] for e in events] == ["clear"]

    summary = gvp.simulate(days=3, seed=7)
    assert summary["frames"] == 3 * 288
    assert summary["clear_events"] == 3
    assert len(summary["coverage"]) == summary["frames"]

    noisy = gvp.simulate(days=1, seed=7, precision=0.94, recall=0.84)
    assert close(noisy["expected_precision"], 0.94, 1e-6) and close(noisy["expected_recall"], 0.84, 1e-6)

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "detections.jsonl"
        record = {"frame_id": "20240101_000000", "ts": 1704067200, "boxes": [{"x": 1, "y": 2, "w": 3, "h": 4, "conf": 0.9, "cls": 0}]}
        path.write_text(json.dumps(record) + "\n")
        [(frame_id, stamp, found)] = gvp.load_detections(str(path))
        assert frame_id == "20240101_000000" and stamp == 1704067200
        assert found[0].bbox == gvp.BBox(1, 2, 3, 4)
        try:
            gvp.load_detections(str(Path(tmp) / "missing.jsonl"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file should raise OSError")

    try:
        gvp.RoiPolygon([(0, 0), (1, 1)], 10, 10)
    except ValueError:
        pass
    else:
        raise AssertionError("degenerate ROI should raise ValueError")

    print("gvp smoke test passed")


if __name__ == "__main__":
    main()
