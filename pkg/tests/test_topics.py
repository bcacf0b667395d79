"""Topic discovery: clustering, naming, tuning, assignment, persistence."""

import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hatescan.errors import DataError, ModelError
from hatescan.normalize import NormalizerConfig, default_config, normalize
from hatescan.topics import (
    OUTLIER,
    TOPIC_MARKER,
    ClusterParams,
    TfidfProjectionEmbedder,
    TopicModel,
    assign_topic,
    assign_topics,
    cluster,
    concat_topic,
    fit_topics,
    load_topics,
    name_topics,
    save_topics,
    tune_params,
)


def two_blobs(n_per=50, separation=10.0, scale=1.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal((0.0, 0.0), scale, size=(n_per, 2))
    b = rng.normal((separation, 0.0), scale, size=(n_per, 2))
    return np.vstack([a, b])


def as_partition(labels):
    """Non-outlier labels as a set of frozensets of member indices."""
    groups = {}
    for i, lab in enumerate(labels):
        if lab != OUTLIER:
            groups.setdefault(lab, set()).add(i)
    return {frozenset(v) for v in groups.values()}


# ---------------------------------------------------------------- params

def test_cluster_params_validation():
    with pytest.raises(ValueError):
        ClusterParams(min_cluster_size=1, min_samples=1)
    with pytest.raises(ValueError):
        ClusterParams(min_cluster_size=5, min_samples=0)
    with pytest.raises(ValueError):
        ClusterParams(min_cluster_size=5, min_samples=6)


# ---------------------------------------------------------------- embedder

def test_embedder_deterministic_across_instances():
    texts = ["muslim ban now", "jews control media", "muslim veil"]
    a = TfidfProjectionEmbedder(dim=16, seed=7).embed(texts)
    b = TfidfProjectionEmbedder(dim=16, seed=7).embed(texts)
    assert np.array_equal(a, b)


def test_embedder_seed_changes_vectors():
    texts = ["muslim ban now", "jews control media"]
    a = TfidfProjectionEmbedder(dim=16, seed=0).embed(texts)
    b = TfidfProjectionEmbedder(dim=16, seed=1).embed(texts)
    assert not np.allclose(a, b)


def test_embedder_rows_unit_norm():
    texts = ["one two three", "four five", "one five"]
    vecs = TfidfProjectionEmbedder(dim=32).embed(texts)
    norms = np.linalg.norm(vecs, axis=1)
    assert np.allclose(norms, 1.0)


def test_embedder_idf_frozen_after_first_call():
    emb = TfidfProjectionEmbedder(dim=16)
    emb.embed(["alpha beta", "beta gamma", "gamma delta"])
    v1 = emb.embed(["alpha gamma"])
    v2 = emb.embed(["alpha gamma"])
    assert np.array_equal(v1, v2)


def test_embedder_unseen_terms_embed_to_zero():
    emb = TfidfProjectionEmbedder(dim=16)
    emb.embed(["alpha beta", "beta gamma"])
    vec = emb.embed(["zzzz qqqq"])[0]
    assert np.array_equal(vec, np.zeros(16))


def test_embedder_rejects_tiny_dim():
    with pytest.raises(ValueError):
        TfidfProjectionEmbedder(dim=1)


# ---------------------------------------------------------------- cluster

def test_two_well_separated_blobs_give_two_clusters():
    vectors = two_blobs(n_per=50, separation=10.0, scale=0.5)
    labels = cluster(vectors, ClusterParams(min_cluster_size=10, min_samples=5))
    found = set(labels) - {OUTLIER}
    assert len(found) == 2
    assert sum(1 for lab in labels if lab == OUTLIER) <= 5
    # each blob lands (almost) wholly in one cluster
    first_half = [lab for lab in labels[:50] if lab != OUTLIER]
    second_half = [lab for lab in labels[50:] if lab != OUTLIER]
    assert len(set(first_half)) == 1
    assert len(set(second_half)) == 1
    assert set(first_half) != set(second_half)


def test_single_blob_gives_one_cluster():
    rng = np.random.default_rng(3)
    vectors = rng.normal(0.0, 1.0, size=(60, 2))
    labels = cluster(vectors, ClusterParams(min_cluster_size=10, min_samples=5))
    assert set(labels) - {OUTLIER} == {0}
    assert sum(1 for lab in labels if lab == OUTLIER) <= 5


def test_identical_points_below_floor_all_outliers():
    vectors = np.ones((5, 3))
    labels = cluster(vectors, ClusterParams(min_cluster_size=10, min_samples=2))
    assert labels == [OUTLIER] * 5


def test_identical_points_above_floor_one_cluster():
    vectors = np.ones((12, 3))
    labels = cluster(vectors, ClusterParams(min_cluster_size=10, min_samples=2))
    assert labels == [0] * 12


def test_components_below_min_cluster_size_dissolve():
    # three tight triplets, far apart; floor of 4 dissolves them all
    base = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]])
    vectors = np.vstack([base, base + 50.0, base + 100.0])
    labels = cluster(vectors, ClusterParams(min_cluster_size=4, min_samples=2))
    assert labels == [OUTLIER] * 9


def test_cluster_deterministic():
    vectors = two_blobs(seed=5)
    params = ClusterParams(min_cluster_size=10, min_samples=5)
    assert cluster(vectors, params) == cluster(vectors, params)


def test_cluster_permutation_invariant_as_partition():
    vectors = two_blobs(n_per=25, separation=12.0, scale=0.6, seed=9)
    params = ClusterParams(min_cluster_size=8, min_samples=3)
    rng = np.random.default_rng(11)
    perm = rng.permutation(len(vectors))
    base = cluster(vectors, params)
    permuted = cluster(vectors[perm], params)
    # map permuted labels back to original indices and compare partitions
    unpermuted = [None] * len(vectors)
    for new_pos, old_pos in enumerate(perm):
        unpermuted[old_pos] = permuted[new_pos]
    assert as_partition(base) == as_partition(unpermuted)


def test_fewer_rows_than_floor_all_outliers(caplog):
    vectors = np.zeros((3, 2))
    with caplog.at_level("WARNING", logger="hatescan.topics"):
        labels = cluster(vectors, ClusterParams(min_cluster_size=5, min_samples=2))
    assert labels == [OUTLIER] * 3
    assert any("outlier" in rec.message for rec in caplog.records)


# ---------------------------------------------------------------- naming

TOY_TEXTS = [
    "muslim muslim ban people",
    "muslim veil",
    "ban veil people",
    "jews media people",
    "jews money media",
    "money control people",
]
TOY_LABELS = [0, 0, 0, 1, 1, 1]


def test_name_topics_hand_computed_toy():
    # cluster 0: tf muslim=3 ban=2 veil=2 people=2; cluster 1: jews=2
    # media=2 money=2 people=2 control=1. "people" sits in both topics, so
    # its damping factor is log(1 + 2/2) = log 2 against log 3 for the rest.
    names = name_topics(TOY_TEXTS, TOY_LABELS, k=4)
    assert names[0] == "0_muslim_ban_veil_people"
    assert names[1] == "1_jews_media_money_people"


def test_name_topics_k_truncates():
    names = name_topics(TOY_TEXTS, TOY_LABELS, k=2)
    assert names[0] == "0_muslim_ban"
    assert names[1] == "1_jews_media"


def test_name_topics_scoring_matches_formula():
    texts = ["aaa aaa bbb", "bbb ccc"]
    labels = [0, 1]
    # topic 0: aaa tf 2 cf 1, bbb tf 1 cf 2; T = 2
    score_aaa = 2 * math.log(1 + 2 / 1)
    score_bbb = 1 * math.log(1 + 2 / 2)
    assert score_aaa > score_bbb
    assert name_topics(texts, labels, k=1)[0] == "0_aaa"


def test_name_topics_excludes_stopwords_and_placeholders():
    texts = ["the and or <USER> <URL> wolves", "wolves the <HASHTAG> moon"]
    names = name_topics(texts, [0, 0], k=4)
    assert names[0] == "0_moon_wolves" or names[0] == "0_wolves_moon"
    for banned in ("the", "and", "<user>", "<USER>", "<URL>", "<HASHTAG>"):
        assert banned not in names[0].split("_")


def test_name_topics_names_outlier_label_too():
    texts = ["aaa bbb", "ccc ddd"]
    names = name_topics(texts, [0, OUTLIER], k=2)
    assert names[OUTLIER].startswith("-1_")
    assert names[OUTLIER] == "-1_ccc_ddd"


def test_name_topics_empty_topic_degenerate_name():
    names = name_topics(["the and of"], [0], k=4)
    assert names[0] == "0_"


def test_name_topics_ties_break_lexicographically():
    names = name_topics(["zebra apple zebra apple"], [0], k=2)
    assert names[0] == "0_apple_zebra"


def test_name_topics_order_within_cluster_irrelevant():
    shuffled = list(zip(TOY_TEXTS, TOY_LABELS))
    random.Random(4).shuffle(shuffled)
    names = name_topics([t for t, _ in shuffled], [lab for _, lab in shuffled], k=4)
    assert names == name_topics(TOY_TEXTS, TOY_LABELS, k=4)


def test_name_topics_length_mismatch():
    with pytest.raises(ValueError):
        name_topics(["a"], [0, 1])


# ---------------------------------------------------------------- tuning

def count_outliers(vectors, params):
    return sum(1 for lab in cluster(vectors, params) if lab == OUTLIER)


def test_tune_params_minimizes_outliers_by_reevaluation():
    rng = np.random.default_rng(2)
    blob = rng.normal(0.0, 0.5, size=(30, 2))
    scattered = np.array([[40.0, 0.0], [0.0, 40.0], [-40.0, 0.0],
                          [0.0, -40.0], [40.0, 40.0]])
    vectors = np.vstack([blob, scattered])
    grid = [ClusterParams(mcs, ms)
            for mcs in (2, 5, 10, 25) for ms in (1, 2) if ms <= mcs]
    best = tune_params(vectors, grid)
    best_count = count_outliers(vectors, best)
    for params in grid:
        assert count_outliers(vectors, params) >= best_count


def test_tune_params_tie_prefers_smaller_params():
    vectors = two_blobs(n_per=40, separation=15.0, scale=0.4, seed=1)
    grid = [ClusterParams(20, 10), ClusterParams(5, 2), ClusterParams(5, 5),
            ClusterParams(10, 2)]
    counts = {p: count_outliers(vectors, p) for p in grid}
    best = tune_params(vectors, grid)
    floor = min(counts.values())
    tied = [p for p, c in counts.items() if c == floor]
    expected = min(tied, key=lambda p: (p.min_cluster_size, p.min_samples))
    assert best == expected


def test_tune_params_empty_grid():
    with pytest.raises(ValueError):
        tune_params(np.zeros((4, 2)), [])


# ---------------------------------------------------------------- fitting

VOCABS = {
    "muslims": ["muslim", "islam", "mosque", "veil", "quran", "imam", "hijab", "sharia"],
    "jews": ["jews", "zionist", "synagogue", "rabbi", "kosher", "hebrew", "israel", "shekel"],
    "lgbt": ["gay", "pride", "rainbow", "drag", "queer", "trans", "closet", "parade"],
    "africans": ["african", "ghetto", "hood", "rap", "tribe", "kinte", "melanin", "dreads"],
}


def planted_corpus(per_topic=40, words_per_doc=6, seed=0):
    rng = random.Random(seed)
    texts, origins = [], []
    for vocab_name in sorted(VOCABS):
        words = VOCABS[vocab_name]
        for _ in range(per_topic):
            texts.append(" ".join(rng.choice(words) for _ in range(words_per_doc)))
            origins.append(vocab_name)
    return texts, origins


def vocab_of(word):
    for vocab_name, words in VOCABS.items():
        if word in words:
            return vocab_name
    return None


@pytest.fixture(scope="module")
def planted_fit():
    texts, origins = planted_corpus()
    model = fit_topics(texts, embedder=TfidfProjectionEmbedder(dim=64, seed=0))
    return texts, origins, model


def test_fit_topics_recovers_planted_vocabularies(planted_fit):
    texts, origins, model = planted_fit
    topics = set(model.labels) - {OUTLIER}
    assert len(topics) == 4
    assert sum(1 for lab in model.labels if lab == OUTLIER) <= len(texts) // 10
    # each topic's name words come from a single vocabulary, 4 distinct ones
    seen_vocabs = set()
    for topic in topics:
        words = model.name_words[topic]
        assert len(words) == 4
        homes = {vocab_of(w) for w in words}
        assert len(homes) == 1 and None not in homes
        seen_vocabs |= homes
    assert len(seen_vocabs) == 4


def test_fit_topics_clusters_align_with_origins(planted_fit):
    texts, origins, model = planted_fit
    # majority origin per topic must be unique across topics
    majority = {}
    for topic in set(model.labels) - {OUTLIER}:
        members = [origins[i] for i, lab in enumerate(model.labels) if lab == topic]
        majority[topic] = max(set(members), key=members.count)
        assert members.count(majority[topic]) / len(members) >= 0.9
    assert len(set(majority.values())) == len(majority)


def test_fit_topics_empty_corpus():
    with pytest.raises(DataError):
        fit_topics([])


def test_fit_topics_names_follow_id_word_format(planted_fit):
    _, _, model = planted_fit
    for topic, name in model.names.items():
        assert name.startswith(f"{topic}_")
        if topic != OUTLIER:
            assert name == f"{topic}_" + "_".join(model.name_words[topic])


def test_topic_model_rejects_mismatched_names():
    with pytest.raises(ValueError):
        TopicModel(labels=(0, 0, 1), names={0: "0_x", OUTLIER: "-1_"},
                   params=ClusterParams(2, 1))
    with pytest.raises(ValueError):
        TopicModel(labels=(0, 0), names={0: "0_x"}, params=ClusterParams(2, 1))


# ---------------------------------------------------------------- assign

def test_assign_matches_fit_labels(planted_fit):
    texts, _, model = planted_fit
    assigned = assign_topics(model, texts)
    pairs = [(a, b) for a, b in zip(assigned, model.labels) if b != OUTLIER]
    agree = sum(1 for a, b in pairs if a == b)
    assert agree / len(pairs) >= 0.9


def test_assign_novel_text_lands_in_matching_topic(planted_fit):
    _, _, model = planted_fit
    label = assign_topic(model, "mosque veil imam quran")
    assert label != OUTLIER
    assert vocab_of(model.name_words[label][0]) == "muslims"


def test_assign_far_text_is_outlier(planted_fit):
    _, _, model = planted_fit
    assert assign_topic(model, "qqqq wwww zzzz") == OUTLIER


def test_assign_empty_input(planted_fit):
    _, _, model = planted_fit
    assert assign_topics(model, []) == []


def test_assign_without_clusters_gives_outliers():
    model = fit_topics(["aaa bbb", "aaa ccc", "bbb ccc"],
                       grid=[ClusterParams(8, 2)])
    assert set(model.labels) == {OUTLIER}
    assert assign_topics(model, ["aaa bbb", "new text"]) == [OUTLIER, OUTLIER]


def test_assign_without_embedder_rejected():
    model = TopicModel(labels=(OUTLIER,), names={OUTLIER: "-1_"},
                       params=ClusterParams(2, 1))
    with pytest.raises(ModelError):
        assign_topics(model, ["text"])


# ---------------------------------------------------------------- concat

def small_model():
    return TopicModel(
        labels=(0, 0, 1, 1, OUTLIER),
        names={0: "0_muslim_ban_veil_people", 1: "1_jews_media_money_people",
               OUTLIER: "-1_"},
        params=ClusterParams(2, 1),
        name_words={0: ("muslim", "ban", "veil", "people"),
                    1: ("jews", "media", "money", "people"), OUTLIER: ()},
    )


def test_concat_topic_appends_marker_and_words():
    out = concat_topic("some normalized text", small_model(), 0)
    assert out == "some normalized text <TOPIC> muslim ban veil people"


def test_concat_topic_outlier_unchanged():
    assert concat_topic("anything here", small_model(), OUTLIER) == "anything here"


def test_concat_topic_empty_text_trimmed():
    out = concat_topic("", small_model(), 1)
    assert out == "<TOPIC> jews media money people"


def test_concat_topic_unknown_label():
    with pytest.raises(ValueError):
        concat_topic("text", small_model(), 7)


def test_concat_output_stable_under_renormalization():
    config = default_config()
    aware = NormalizerConfig(
        emoji_table=config.emoji_table,
        contraction_table=config.contraction_table,
        english_stopword_set=config.english_stopword_set,
        folding_table=config.folding_table,
        extra_placeholders=(TOPIC_MARKER,),
    )
    text = str(normalize("Muslims took over the media!!", config))
    out = concat_topic(text, small_model(), 1)
    assert TOPIC_MARKER in out
    assert str(normalize(out, aware)) == out


@settings(max_examples=50)
@given(st.sampled_from([0, 1, OUTLIER]))
def test_concat_topic_idempotent_per_label(label):
    model = small_model()
    once = concat_topic("base text", model, label)
    if label == OUTLIER:
        assert once == "base text"
    else:
        assert once.count(TOPIC_MARKER) == 1


# ---------------------------------------------------------------- persistence

def test_save_load_round_trip(tmp_path, planted_fit):
    texts, _, model = planted_fit
    path = tmp_path / "topics.json"
    save_topics(model, str(path))
    loaded = load_topics(str(path))
    assert loaded.labels == model.labels
    assert loaded.names == model.names
    assert loaded.name_words == model.name_words
    assert loaded.params == model.params
    assert loaded.ceilings == model.ceilings
    for topic in model.centroids:
        assert np.array_equal(loaded.centroids[topic], model.centroids[topic])
    probes = ["mosque veil imam", "jews shekel israel", "unrelated gibberish qqqq"]
    assert assign_topics(loaded, probes) == assign_topics(model, probes)


def test_load_missing_file(tmp_path):
    with pytest.raises(ModelError):
        load_topics(str(tmp_path / "nope.json"))


def test_load_truncated_json(tmp_path, planted_fit):
    _, _, model = planted_fit
    path = tmp_path / "topics.json"
    save_topics(model, str(path))
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(ModelError):
        load_topics(str(path))


def test_load_wrong_version(tmp_path, planted_fit):
    _, _, model = planted_fit
    path = tmp_path / "topics.json"
    save_topics(model, str(path))
    doc = json.loads(path.read_text())
    doc["version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelError):
        load_topics(str(path))


def test_load_missing_field(tmp_path, planted_fit):
    _, _, model = planted_fit
    path = tmp_path / "topics.json"
    save_topics(model, str(path))
    doc = json.loads(path.read_text())
    del doc["centroids"]
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelError):
        load_topics(str(path))


def test_save_requires_serializable_embedder(tmp_path):
    model = TopicModel(labels=(OUTLIER,), names={OUTLIER: "-1_"},
                       params=ClusterParams(2, 1))
    with pytest.raises(ModelError):
        save_topics(model, str(tmp_path / "topics.json"))
