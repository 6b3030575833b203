import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import semalloc as sm
from semalloc import (
    CategoryCorpus,
    ConfigurationError,
    FileEmbeddings,
    HashEmbedder,
    average_similarity,
    build_similarity_tensor,
    cosine_match,
    load_problem,
)
from semalloc.core_model import DemandScenario, VspDemand
from semalloc.similarity import load_corpora_csv

finite_vectors = st.lists(
    st.floats(min_value=-100, max_value=100), min_size=2, max_size=8
).filter(lambda v: any(abs(x) > 1e-6 for x in v))


@st.composite
def vector_pairs(draw):
    dim = draw(st.integers(min_value=2, max_value=8))
    coords = st.floats(min_value=-100, max_value=100)
    nonzero = st.lists(coords, min_size=dim, max_size=dim).filter(
        lambda v: any(abs(x) > 1e-6 for x in v)
    )
    return draw(nonzero), draw(nonzero)


class TestCosineMatch:
    def test_identical_vectors(self):
        assert cosine_match([1, 2, 2], [1, 2, 2]) == 1.0

    def test_orthogonal_vectors(self):
        assert cosine_match([1, 0], [0, 1]) == 0.0

    def test_known_angle(self):
        # dot = 8, both norms 3
        assert cosine_match([1, 2, 2], [2, 1, 2]) == pytest.approx(8 / 9, rel=1e-15)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero-norm"):
            cosine_match([0, 0], [1, 0])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            cosine_match([1, 0], [1, 0, 0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            cosine_match([1, float("nan")], [1, 0])

    @given(pair=vector_pairs())
    def test_symmetry(self, pair):
        a, b = pair
        assert cosine_match(a, b) == pytest.approx(cosine_match(b, a), abs=1e-12)

    @given(pair=vector_pairs(), scale=st.floats(min_value=1e-3, max_value=1e3))
    def test_scale_invariance(self, pair, scale):
        a, b = pair
        scaled = [scale * x for x in a]
        assert cosine_match(scaled, b) == pytest.approx(cosine_match(a, b), abs=1e-9)
        assert cosine_match(a, [scale * x for x in a]) == pytest.approx(1.0, abs=1e-9)

    @given(pair=vector_pairs())
    def test_result_in_range(self, pair):
        a, b = pair
        assert -1.0 <= cosine_match(a, b) <= 1.0


def unit_vector_with_cosine(target: float) -> list[float]:
    """Planar vector whose angle to (1, 0) has the requested cosine."""
    return [target, math.sqrt(1 - target * target)]


class TestAverageSimilarity:
    def test_identical_single_entry(self):
        provider = FileEmbeddings({"cat": [1.0, 0.0]})
        corpus = CategoryCorpus(0, (("cat", 1),))
        score = average_similarity(np.array([1.0, 0.0]), corpus, provider)
        assert score == pytest.approx(1.0, abs=1e-12)

    def test_equal_count_mean(self):
        provider = FileEmbeddings({"same": [1.0, 0.0], "orth": [0.0, 1.0]})
        corpus = CategoryCorpus(0, (("same", 1), ("orth", 1)))
        score = average_similarity(np.array([1.0, 0.0]), corpus, provider)
        assert score == pytest.approx(0.5, abs=1e-12)

    def test_three_entry_mean(self):
        provider = FileEmbeddings(
            {
                "a": unit_vector_with_cosine(0.9),
                "b": unit_vector_with_cosine(0.8),
                "c": unit_vector_with_cosine(0.79),
            }
        )
        corpus = CategoryCorpus(2, (("a", 1), ("b", 1), ("c", 1)))
        score = average_similarity(np.array([1.0, 0.0]), corpus, provider)
        assert score == pytest.approx((0.9 + 0.8 + 0.79) / 3, abs=1e-12)
        assert score == pytest.approx(0.83, abs=1e-9)

    def test_negative_matches_clamp_to_zero(self):
        provider = FileEmbeddings({"anti": [-1.0, 0.0]})
        corpus = CategoryCorpus(0, (("anti", 3),))
        assert average_similarity(np.array([1.0, 0.0]), corpus, provider) == 0.0

    def test_empty_corpus_rejected(self):
        provider = HashEmbedder()
        with pytest.raises(ValueError, match="empty"):
            average_similarity(provider.embed("x"), CategoryCorpus(0, ()), provider)

    def test_count_weighting_equals_entry_splitting(self):
        provider = FileEmbeddings({"a": [1.0, 0.0], "b": [0.0, 1.0]})
        interest = np.array([1.0, 0.0])
        merged = CategoryCorpus(0, (("a", 2), ("b", 1)))
        split = CategoryCorpus(0, (("a", 1), ("a", 1), ("b", 1)))
        assert average_similarity(interest, merged, provider) == average_similarity(
            interest, split, provider
        )

    def test_reorder_invariance(self):
        provider = HashEmbedder()
        interest = provider.embed("traffic")
        entries = [("bus", 2), ("car", 1), ("bike", 3)]
        forward = CategoryCorpus(0, tuple(entries))
        backward = CategoryCorpus(0, tuple(reversed(entries)))
        assert average_similarity(interest, forward, provider) == pytest.approx(
            average_similarity(interest, backward, provider), abs=1e-12
        )


class TestProviders:
    def test_hash_embedder_deterministic(self):
        a, b = HashEmbedder(), HashEmbedder()
        assert np.array_equal(a.embed("red bus"), b.embed("red bus"))
        assert a.embed("red bus").shape == (64,)

    def test_hash_embedder_never_zero(self):
        emb = HashEmbedder()
        assert emb.embed("!!!").any()
        with pytest.raises(ValueError):
            emb.embed("")

    def test_hash_embedder_token_order_insensitive(self):
        emb = HashEmbedder()
        assert np.array_equal(emb.embed("bus red"), emb.embed("red bus"))

    def test_file_embeddings_missing_key(self):
        provider = FileEmbeddings({"known": [1.0, 0.0]})
        with pytest.raises(ConfigurationError, match="unknown"):
            provider.embed("unknown")

    def test_file_embeddings_rejects_mixed_dimension(self):
        with pytest.raises(ConfigurationError, match="dimension"):
            FileEmbeddings({"a": [1.0, 0.0], "b": [1.0, 0.0, 0.0]})

    def test_file_embeddings_rejects_zero_vector(self):
        with pytest.raises(ConfigurationError, match="zero"):
            FileEmbeddings({"a": [0.0, 0.0]})

    def test_file_embeddings_from_bundled_file(self):
        provider = FileEmbeddings.from_path(sm.data_file("embeddings_demo.json"))
        assert provider.embed("vehicles on road").shape == (2,)


class TestSimilarityTensor:
    def test_identical_texts_give_full_similarity(self):
        provider = HashEmbedder()
        scenarios = (
            DemandScenario(1.0, (VspDemand("vehicles", 10, 1.0),)),
        )
        corpora = {0: CategoryCorpus(0, (("vehicles", 1),))}
        tensor = build_similarity_tensor(scenarios, corpora, provider)
        assert tensor.shape == (1, 1, 1)
        assert tensor[0, 0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_bundled_corpus_reproduces_published_columns(self):
        corpora = load_corpora_csv(sm.data_file("corpora_demo.csv"))
        provider = FileEmbeddings.from_path(sm.data_file("embeddings_demo.json"))
        scenarios = (
            DemandScenario(0.5, (VspDemand("vehicles on road", 90, 1.0),)),
            DemandScenario(0.5, (VspDemand("buses and traffic lights", 90, 1.0),)),
        )
        tensor = build_similarity_tensor(scenarios, corpora, provider)
        assert tensor[0, :, 0] == pytest.approx([0.72, 0.697, 0.83], abs=1e-9)
        assert tensor[0, :, 1] == pytest.approx([0.793, 0.661, 0.57], abs=1e-9)

    def test_missing_corpus_names_device(self):
        provider = HashEmbedder()
        scenarios = (DemandScenario(1.0, (VspDemand("x", 1, 1.0),)),)
        with pytest.raises(ConfigurationError, match="device 1"):
            build_similarity_tensor(
                scenarios,
                {0: CategoryCorpus(0, (("a", 1),)), 2: CategoryCorpus(2, (("b", 1),))},
                provider,
            )

    def test_missing_interest_embedding_is_configuration_error(self):
        provider = FileEmbeddings({"a": [1.0, 0.0]})
        scenarios = (DemandScenario(1.0, (VspDemand("unmapped", 1, 1.0),)),)
        corpora = {0: CategoryCorpus(0, (("a", 1),))}
        with pytest.raises(ConfigurationError, match="unmapped"):
            build_similarity_tensor(scenarios, corpora, provider)

    def test_tensor_values_stay_in_unit_interval(self):
        provider = HashEmbedder(dimension=8)
        rng = np.random.default_rng(7)
        words = ["bus", "car", "bike", "tree", "rain", "road", "sign", "lane"]
        scenarios = tuple(
            DemandScenario(
                0.25,
                tuple(VspDemand(str(rng.choice(words)), 5, 1.0) for _ in range(2)),
            )
            for _ in range(4)
        )
        corpora = {
            e: CategoryCorpus(
                e,
                tuple((str(rng.choice(words)) + " scene", int(rng.integers(1, 4))) for _ in range(3)),
            )
            for e in range(3)
        }
        tensor = build_similarity_tensor(scenarios, corpora, provider)
        assert tensor.shape == (2, 3, 4)
        assert np.all(tensor >= 0.0) and np.all(tensor <= 1.0)


class TestCorpusCsv:
    def test_load_bundled_corpora(self):
        corpora = load_corpora_csv(sm.data_file("corpora_demo.csv"))
        assert sorted(corpora) == [0, 1, 2]
        assert corpora[0].total == 2

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ConfigurationError, match="header"):
            load_corpora_csv(path)

    def test_malformed_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("device_id,category,count\nx,cat,1\n")
        with pytest.raises(ConfigurationError, match="malformed"):
            load_corpora_csv(path)

    def test_nonpositive_count_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("device_id,category,count\n0,cat,0\n")
        with pytest.raises(ValueError, match="positive"):
            load_corpora_csv(path)
