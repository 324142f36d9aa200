import numpy as np
import pytest

from memdialog import benchmark, corpus

from conftest import make_tiny_model


class TestDummyCandidates:
    def test_count_and_uniqueness(self):
        base = corpus.CandidateSet([("hello",)])
        out = benchmark.gen_dummy_candidates(5, base)
        assert len(out.responses) == 6
        assert len({tuple(r) for r in out.responses}) == 6
        # base set untouched
        assert len(base.responses) == 1

    def test_vocab_extension(self):
        base = corpus.CandidateSet([("hello",)])
        vocab = corpus.build_vocabulary([], base, t=1)
        before = vocab.size
        benchmark.gen_dummy_candidates(3, base, vocab)
        assert vocab.size == before + 3

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            benchmark.gen_dummy_candidates(-1, corpus.CandidateSet())


@pytest.fixture(scope="module")
def model_and_examples():
    model, prepared = make_tiny_model()
    return model, prepared.train_examples


class TestLatency:
    def test_report_shape(self, model_and_examples):
        model, examples = model_and_examples
        report = benchmark.measure_prediction_latency(
            model, examples, c_values=[4, 50], trials=5, warmup=1)
        assert [row["c"] for row in report.rows] == [4, 50]
        for row in report.rows:
            assert row["median_s"] > 0
            assert row["p95_s"] >= row["median_s"]
        assert "kernels=" in report.machine

    def test_model_untouched(self, model_and_examples):
        model, examples = model_and_examples
        before = {k: v.copy() for k, v in model.params.items()}
        benchmark.measure_prediction_latency(model, examples, [10],
                                             trials=3, warmup=1)
        for name, tensor in before.items():
            assert np.array_equal(model.params[name], tensor)

    def test_cannot_shrink_candidates(self, model_and_examples):
        model, examples = model_and_examples
        with pytest.raises(ValueError):
            benchmark.measure_prediction_latency(model, examples, [1],
                                                 trials=1, warmup=0)

    def test_inflated_head_keeps_real_scores(self, model_and_examples):
        from memdialog import nlg

        model, examples = model_and_examples
        q, _, _ = model.encode_forward(examples[-1])
        base_scores, base_pred = nlg.score_candidates(q, model.candidate_head)
        big = benchmark._candidate_head_at_size(model, 40)
        scores, pred = nlg.score_candidates(q, big)
        n = len(base_scores)
        # same relative ordering among the real candidates
        assert np.argmax(scores[:n]) == base_pred

    def test_wordbyword_head_timing(self):
        model, prepared = make_tiny_model(head="wordbyword")
        report = benchmark.measure_prediction_latency(
            model, prepared.train_examples, [10, 100], trials=3, warmup=1)
        assert len(report.rows) == 2


class TestFitLinear:
    def test_exact_line(self):
        slope, intercept, r2 = benchmark.fit_linear([0, 1, 2, 3],
                                                    [1, 3, 5, 7])
        assert slope == pytest.approx(2.0)
        assert intercept == pytest.approx(1.0)
        assert r2 == pytest.approx(1.0)

    def test_noisy_line_high_r2(self):
        rng = np.random.default_rng(0)
        xs = np.arange(20.0)
        ys = 3 * xs + 1 + rng.normal(scale=0.1, size=20)
        _, _, r2 = benchmark.fit_linear(xs, ys)
        assert r2 > 0.99

    def test_flat_data(self):
        slope, _, r2 = benchmark.fit_linear([1, 2, 3], [5, 5, 5])
        assert slope == pytest.approx(0.0)
        assert r2 == 1.0


class TestSpace:
    def test_candidate_bytes_grow_with_set(self):
        model, _ = make_tiny_model()
        small = benchmark.measure_space(model)
        large = benchmark.measure_space(model, c_total=200)
        assert large["candidate_bytes"] > small["candidate_bytes"]
        assert large["param_bytes"] == small["param_bytes"]
        assert large["n_candidates"] == 200

    def test_wordbyword_no_candidate_bytes(self):
        model, _ = make_tiny_model(head="wordbyword")
        space = benchmark.measure_space(model)
        assert space["candidate_bytes"] == 0
        want = sum(v.nbytes for v in model.params.values())
        assert space["param_bytes"] == want


class TestKernelComparison:
    def test_rows_cover_every_backend(self):
        from memdialog import kernels

        result = benchmark.compare_kernel_backends(
            d=8, vocab_size=50, n_rows=10, row_len=4, n_candidates=20,
            trials=2)
        impls = kernels.implementations()
        want = sum(len(v) for v in impls.values())
        assert len(result["rows"]) == want
        for row in result["rows"]:
            assert row["mean_s"] > 0
