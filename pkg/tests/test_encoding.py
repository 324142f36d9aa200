import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from memdialog import encoding


class TestBowVector:
    def test_empty(self):
        assert encoding.bow_vector([], 5).size == 0

    def test_multiplicity_ignored(self):
        v = encoding.bow_vector([2, 2, 4], 6)
        assert v.tolist() == [2, 4]

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            encoding.bow_vector([7], 5)

    @given(st.lists(st.integers(0, 19), min_size=1, max_size=12),
           st.randoms(use_true_random=False))
    def test_order_invariant(self, ids, rnd):
        shuffled = list(ids)
        rnd.shuffle(shuffled)
        a = encoding.bow_vector(ids, 20)
        b = encoding.bow_vector(shuffled, 20)
        assert a.tolist() == b.tolist()


def _weights_oracle(J, d):
    # independently coded scalar formula, 1-based indices
    out = np.zeros((d, J))
    for k in range(1, d + 1):
        for j in range(1, J + 1):
            out[k - 1, j - 1] = (1 - j / J) - (k / d) * (1 - 2 * j / J)
    return out


class TestPositionWeights:
    def test_single_position(self):
        l = encoding.position_weights(1, 4)
        assert np.allclose(l[:, 0], [0.25, 0.5, 0.75, 1.0])

    def test_two_by_two(self):
        l = encoding.position_weights(2, 2)
        assert np.allclose(l, [[0.5, 0.5], [0.5, 1.0]])

    @pytest.mark.parametrize("n", [1, 3, 17])
    def test_last_corner_is_one(self, n):
        assert encoding.position_weights(n, n)[n - 1, n - 1] == pytest.approx(1.0)

    @given(st.integers(1, 50), st.integers(1, 100))
    @settings(max_examples=60, deadline=None)
    def test_matches_formula_oracle(self, J, d):
        got = encoding.position_weights(J, d)
        assert np.max(np.abs(got - _weights_oracle(J, d))) <= 1e-12

    def test_invalid_sizes(self):
        with pytest.raises(ValueError):
            encoding.position_weights(0, 3)


class TestEmbedUtterance:
    def setup_method(self):
        rng = np.random.default_rng(1)
        self.A = rng.normal(size=(3, 8))

    def test_single_token(self):
        l = encoding.position_weights(1, 3)
        bow = encoding.embed_utterance([5], self.A, encoding.BOW)
        pos = encoding.embed_utterance([5], self.A, encoding.POSITION, l)
        assert np.allclose(bow, self.A[:, 5])
        assert np.allclose(pos, l[:, 0] * self.A[:, 5])

    def test_bow_permutation_invariant(self):
        a = encoding.embed_utterance([1, 2, 3], self.A, encoding.BOW)
        b = encoding.embed_utterance([3, 1, 2, 2], self.A, encoding.BOW)
        assert np.allclose(a, b)

    def test_position_order_sensitive(self):
        A = np.zeros((2, 4))
        A[0, 1] = 1.0  # word 1 -> e1
        A[1, 2] = 1.0  # word 2 -> e2
        l = encoding.position_weights(2, 2)
        fwd = encoding.embed_utterance([1, 2], A, encoding.POSITION, l)
        rev = encoding.embed_utterance([2, 1], A, encoding.POSITION, l)
        assert np.allclose(fwd, [l[0, 0], l[1, 1]])
        assert not np.allclose(fwd, rev)

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            encoding.embed_utterance([], self.A, encoding.BOW)

    @given(st.lists(st.integers(0, 7), min_size=1, max_size=6),
           st.sampled_from([encoding.BOW, encoding.POSITION]))
    @settings(max_examples=40, deadline=None)
    def test_linear_in_embedding_matrix(self, ids, mode):
        rng = np.random.default_rng(4)
        A1 = rng.normal(size=(3, 8))
        A2 = rng.normal(size=(3, 8))
        l = encoding.position_weights(6, 3)
        one = encoding.embed_utterance(ids, A1, mode, l)
        two = encoding.embed_utterance(ids, A2, mode, l)
        both = encoding.embed_utterance(ids, A1 + A2, mode, l)
        assert np.allclose(both, one + two, rtol=1e-5, atol=1e-9)

    def test_position_duplicates_count_per_occurrence(self):
        l = encoding.position_weights(3, 3)
        one = encoding.embed_utterance([4], self.A, encoding.POSITION, l)
        twice = encoding.embed_utterance([4, 4], self.A, encoding.POSITION, l)
        assert not np.allclose(one, twice)
        assert np.allclose(twice, (l[:, 0] + l[:, 1]) * self.A[:, 4])
