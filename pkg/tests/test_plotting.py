import numpy as np
import pytest

from autodess.plotting import best_so_far, paired_scatter, score_boxplots, search_history


def is_png(path):
    return path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_best_so_far():
    assert best_so_far([3, 1, 2, 0.5, 4]).tolist() == [3, 1, 1, 0.5, 0.5]


def test_boxplots_with_mask(tmp_path):
    rng = np.random.default_rng(0)
    scores = {"a": rng.random(12), "b": rng.random(12)}
    masks = {"a": np.arange(12) < 2}
    out = score_boxplots(scores, tmp_path / "sub" / "box.png", "acc", masks)
    assert out.exists() and is_png(out)


def test_paired_scatter(tmp_path):
    rng = np.random.default_rng(1)
    out = paired_scatter(rng.random(8), {"x": rng.random(8), "y": rng.random(8)},
                         tmp_path / "pair.png", title="f1")
    assert is_png(out)


@pytest.mark.parametrize("hpo", [{}, {"knn": [{"objective": 0.3}, {"objective": 0.2}]}])
def test_search_history_tolerates_empty_stages(tmp_path, hpo):
    report = {"history": {"feateng": [], "hpo": hpo,
                          "ensemble": [{"objective": 0.4}, {"objective": 0.1}]}}
    assert is_png(search_history(report, tmp_path / "h.png"))
