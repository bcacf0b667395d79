"""Two-stage orchestration, distribution accounting and report rendering."""

import json
import random

import pytest

from hatescan.corpus import TARGET_CLASSES, Post
from hatescan.errors import DataError, ModelError
from hatescan.model import Hyperparams
from hatescan.model import save as save_model
from hatescan.model import train
from hatescan.corpus import LabeledExample
from hatescan.pipeline import (
    Classification,
    Pipeline,
    PipelineConfig,
    TargetDistribution,
    classify_post,
    distribution_from_dict,
    load_pipeline,
    render_chart,
    render_csv,
    render_json,
    report,
    run_corpus,
)


class StubModel:
    """Scripted predictor with a call counter."""

    def __init__(self, fn, class_list=("hate", "normal")):
        self.fn = fn
        self.class_list = class_list
        self.calls = 0
        self.seen = []

    def predict(self, text):
        self.calls += 1
        self.seen.append(text)
        label = self.fn(text)
        return label, {label: 1.0}


def always(label):
    return StubModel(lambda text: label)


def marker_detector():
    return StubModel(lambda text: "hate" if "hatemark" in text.split() else "normal")


def marker_target():
    def fn(text):
        for token in text.split():
            if token.startswith("target"):
                return token[len("target"):].capitalize()
        return "Other"

    return StubModel(fn, class_list=TARGET_CLASSES)


def planted_corpus():
    """100 posts: 30 hateful split 15/9/6 African/Islam/Other, 70 normal."""
    rng = random.Random(7)
    posts = []
    for target, n in (("african", 15), ("islam", 9), ("other", 6)):
        posts += [f"hatemark target{target} is the worst of all {i}"
                  for i in range(n)]
    posts += [f"a perfectly normal sentence about the day number {i}"
              for i in range(70)]
    rng.shuffle(posts)
    return posts


# ------------------------------------------------------------ classify_post

def test_always_normal_detector_short_circuits():
    target = always("Jewish")
    pipe = Pipeline(detector=always("normal"), target_model=target)
    for text in ("one post", "another post", "third post"):
        assert classify_post(text, pipe) == Classification(label="normal")
    assert target.calls == 0


def test_always_hate_composes_with_target():
    pipe = Pipeline(detector=always("hate"), target_model=always("Jewish"))
    for text in ("one post", "another post"):
        result = classify_post(text, pipe)
        assert result == Classification(label="hate", target="Jewish")


def test_classify_normalizes_before_detection():
    detector = marker_detector()
    pipe = Pipeline(detector=detector, target_model=marker_target())
    classify_post("HATEMARK Targetafrican THING", pipe)
    assert detector.seen == ["hatemark targetafrican thing"]


def test_classify_with_topic_model_appends_words():
    from hatescan.topics import TOPIC_MARKER, fit_topics

    corpus = ["mosque veil imam quran", "imam veil mosque quran",
              "quran mosque imam veil", "veil imam quran mosque"]
    topic_model = fit_topics(corpus)
    target = marker_target()
    pipe = Pipeline(detector=always("hate"), target_model=target,
                    topic_model=topic_model)
    classify_post("mosque veil imam quran", pipe)
    assert len(target.seen) == 1
    assert TOPIC_MARKER in target.seen[0]
    assert target.seen[0].startswith("mosque veil imam quran")


# ------------------------------------------------------------ run_corpus

def planted_pipeline(batch_size=256):
    return Pipeline(detector=marker_detector(), target_model=marker_target(),
                    threshold_tag="threshold-3", batch_size=batch_size)


def test_planted_distribution_recovered_exactly():
    dist = run_corpus(planted_corpus(), planted_pipeline())
    assert dist.total_posts == 100
    assert dist.hateful_posts == 30
    assert dist.normal_posts == 70
    assert dist.per_target == {"African": 15, "Islam": 9, "Other": 6,
                               "Jewish": 0, "LGBT": 0}
    assert dist.fractions["African"] == pytest.approx(0.5)
    assert dist.fractions["Islam"] == pytest.approx(0.3)
    assert dist.fractions["Other"] == pytest.approx(0.2)
    assert dist.hateful_posts / dist.total_posts == pytest.approx(0.30)
    assert dist.detector_tag == "threshold-3"


def test_empty_corpus_all_zero():
    dist = run_corpus([], planted_pipeline())
    assert dist.total_posts == 0
    assert dist.fractions == {t: 0.0 for t in TARGET_CLASSES}


def test_stage_two_runs_exactly_once_per_hateful_post():
    pipe = planted_pipeline()
    dist = run_corpus(planted_corpus(), pipe)
    assert pipe.target_model.calls == dist.hateful_posts == 30


def test_accounting_includes_excluded_and_failed():
    def touchy(text):
        if "explode" in text:
            raise RuntimeError("boom")
        return "normal"

    pipe = Pipeline(detector=StubModel(touchy), target_model=always("Other"))
    posts = [
        "a normal english sentence with the usual words",
        "das ist doch wirklich ganz furchtbar schlimm heute",
        "please explode now thanks",
        "ceci est une phrase sans mots anglais typiques",
        "another ordinary english sentence about the weather",
    ]
    dist = run_corpus(posts, pipe)
    assert dist.total_posts == 5
    assert dist.excluded_posts == 2
    assert dist.failed_posts == 1
    assert dist.normal_posts == 2
    assert (dist.hateful_posts + dist.normal_posts + dist.excluded_posts
            + dist.failed_posts) == dist.total_posts


def test_result_independent_of_batch_size_and_workers():
    posts = planted_corpus()
    baseline = run_corpus(posts, planted_pipeline(batch_size=256))
    for batch_size in (1, 7, 100):
        assert run_corpus(posts, planted_pipeline(batch_size)) == baseline
    parallel = run_corpus(posts, planted_pipeline(batch_size=16), workers=4)
    assert parallel == baseline


def test_run_corpus_accepts_post_objects():
    posts = [Post(id="1", text="hatemark targetislam is the worst"),
             Post(id="2", text="just a normal thing to say")]
    dist = run_corpus(posts, planted_pipeline())
    assert dist.hateful_posts == 1
    assert dist.per_target["Islam"] == 1


def test_run_corpus_rejects_bad_workers():
    with pytest.raises(ValueError):
        run_corpus([], planted_pipeline(), workers=0)


# ------------------------------------------------------------ distribution

def make_dist(**overrides):
    base = dict(total_posts=10, hateful_posts=4, normal_posts=5,
                excluded_posts=1, failed_posts=0,
                per_target={"African": 2, "Islam": 1, "Jewish": 1,
                            "LGBT": 0, "Other": 0},
                detector_tag="t3")
    base.update(overrides)
    return TargetDistribution(**base)


def test_distribution_validates_totals():
    with pytest.raises(ValueError):
        make_dist(total_posts=11)
    with pytest.raises(ValueError):
        make_dist(per_target={"African": 1, "Islam": 0, "Jewish": 0,
                              "LGBT": 0, "Other": 0})


def test_fractions_sum_to_one():
    dist = make_dist()
    assert sum(dist.fractions.values()) == pytest.approx(1.0, abs=1e-9)


# ------------------------------------------------------------ rendering

def test_json_round_trip():
    dist = make_dist()
    parsed = distribution_from_dict(json.loads(render_json(dist)))
    assert parsed == dist


def test_json_rejects_corrupt_document():
    with pytest.raises(DataError):
        distribution_from_dict({"total_posts": 3})


def test_csv_rows_in_descending_count_order():
    text = render_csv(make_dist())
    lines = text.strip().splitlines()
    assert lines[0] == "target,count,fraction"
    counts = [int(line.split(",")[1]) for line in lines[1:]]
    assert counts == sorted(counts, reverse=True)
    assert lines[1].startswith("African,2,0.5")


def test_csv_zero_counts_when_no_hate():
    dist = make_dist(hateful_posts=0, normal_posts=9,
                     per_target={t: 0 for t in TARGET_CLASSES})
    lines = render_csv(dist).strip().splitlines()
    assert len(lines) == 1 + len(TARGET_CLASSES)
    assert all(line.split(",")[1] == "0" for line in lines[1:])


def test_chart_shows_bars_and_tag():
    chart = render_chart(make_dist())
    assert "detector: t3" in chart
    assert "#" in chart
    assert "African" in chart.splitlines()[2]
    assert "(50.0%)" in chart


def test_chart_degenerate_no_hate():
    dist = make_dist(hateful_posts=0, normal_posts=9,
                     per_target={t: 0 for t in TARGET_CLASSES})
    assert "no hateful posts" in render_chart(dist)


def test_report_writes_all_formats(tmp_path):
    dist = make_dist()
    for fmt, name in (("json", "d.json"), ("csv", "d.csv"),
                      ("text-chart", "d.txt")):
        path = report(dist, fmt, str(tmp_path / name))
        assert (tmp_path / name).read_text() != ""
        assert path == str(tmp_path / name)
    with pytest.raises(ValueError):
        report(dist, "xml", str(tmp_path / "d.xml"))


# ------------------------------------------------------------ loading

def trained_pair(tmp_path):
    rng = random.Random(0)
    filler = ["day", "thing", "words", "talk", "post", "note"]
    detect = []
    for i in range(40):
        base = rng.sample(filler, 3)
        detect.append(LabeledExample(" ".join(["filth"] + base), "hate", "s"))
        detect.append(LabeledExample(" ".join(base), "normal", "s"))
    target = []
    for keyword, cls in (("jews", "Jewish"), ("muslim", "Islam"),
                         ("nobody", "Other")):
        for i in range(30):
            words = [keyword] + rng.sample(filler, 3)
            rng.shuffle(words)
            target.append(LabeledExample(" ".join(words), cls, "s"))
    hp = Hyperparams(max_epochs=6, learning_rate=0.1, seed=0)
    detector = train(detect, [], hp)
    target_model = train(target, [], hp)
    det_path = str(tmp_path / "detect.bin")
    tgt_path = str(tmp_path / "target.bin")
    save_model(detector, det_path)
    save_model(target_model, tgt_path)
    return det_path, tgt_path


def test_load_pipeline_end_to_end(tmp_path):
    det_path, tgt_path = trained_pair(tmp_path)
    config = PipelineConfig(detector_path=det_path, target_model_path=tgt_path,
                            threshold_tag="threshold-3")
    pipe = load_pipeline(config)
    hateful = classify_post("filth jews day thing", pipe)
    assert hateful.label == "hate"
    assert hateful.target == "Jewish"
    normal = classify_post("words talk day", pipe)
    assert normal == Classification(label="normal")


def test_load_pipeline_missing_model(tmp_path):
    config = PipelineConfig(detector_path=str(tmp_path / "absent.bin"),
                            target_model_path=str(tmp_path / "absent2.bin"))
    with pytest.raises(ModelError):
        load_pipeline(config)


def test_pipeline_config_validates_batch_size():
    with pytest.raises(ValueError):
        PipelineConfig(detector_path="a", target_model_path="b", batch_size=0)
