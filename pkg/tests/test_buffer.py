import numpy as np
import pytest

from cade.continual import MemoryBuffer, buffer_insert, buffer_sample
from cade.features import FeatureMap


def fm(value, label=0, task_id=1):
    return FeatureMap(np.full((1, 1), float(value)), label, task_id)


def stream(n, task_id=1, start=0, labels=None):
    return [fm(start + i, label=(labels[i] if labels else i % 2), task_id=task_id)
            for i in range(n)]


class TestConstruction:
    def test_rejections(self):
        with pytest.raises(ValueError, match="capacity"):
            MemoryBuffer(0)
        with pytest.raises(ValueError, match="strategy"):
            MemoryBuffer(10, "lifo")


class TestFixedRandom:
    def test_quota_partition(self):
        buf = MemoryBuffer(500, "fixed-random")
        rng = np.random.default_rng(0)
        for t in (1, 2, 3):
            buf.insert(stream(300, task_id=t), rng)
        assert len(buf) == 500
        counts = {}
        for s in buf.items():
            counts[s.task_id] = counts.get(s.task_id, 0) + 1
        # capacity 500 over 3 tasks: remainder goes to the earliest tasks
        assert counts == {1: 167, 2: 167, 3: 166}

    def test_single_task_keeps_min_of_quota_and_data(self):
        buf = MemoryBuffer(500, "fixed-random")
        buf.insert(stream(300, task_id=1), np.random.default_rng(0))
        assert len(buf) == 300

    def test_stored_items_come_from_the_stream(self):
        buf = MemoryBuffer(20, "fixed-random")
        rng = np.random.default_rng(1)
        s1, s2 = stream(50, task_id=1), stream(50, task_id=2)
        buf.insert(s1, rng)
        buf.insert(s2, rng)
        allowed = {id(s) for s in s1 + s2}
        assert all(id(s) in allowed for s in buf.items())

    def test_mixed_task_batch_rejected(self):
        buf = MemoryBuffer(10, "fixed-random")
        bad = stream(2, task_id=1) + stream(2, task_id=2)
        with pytest.raises(ValueError, match="one task"):
            buf.insert(bad, np.random.default_rng(0))

    def test_duplicate_task_rejected(self):
        buf = MemoryBuffer(10, "fixed-random")
        rng = np.random.default_rng(0)
        buf.insert(stream(5, task_id=1), rng)
        with pytest.raises(ValueError, match="already"):
            buf.insert(stream(5, task_id=1), rng)


class TestReservoir:
    def test_small_stream_fully_kept_in_order(self):
        buf = MemoryBuffer(100, "reservoir")
        items = stream(60)
        buf.insert(items, np.random.default_rng(0))
        assert buf.items() == items

    def test_capacity_is_hard(self):
        buf = MemoryBuffer(37, "reservoir")
        rng = np.random.default_rng(0)
        for _ in range(10):
            buf.insert(stream(100), rng)
            assert len(buf) == 37

    def test_chunking_does_not_change_the_result(self):
        items = stream(500)
        whole = MemoryBuffer(25, "reservoir")
        whole.insert(items, np.random.default_rng(7))
        chunked = MemoryBuffer(25, "reservoir")
        rng = np.random.default_rng(7)
        for k in range(0, 500, 50):
            chunked.insert(items[k:k + 50], rng)
        assert [id(s) for s in whole.items()] == [id(s) for s in chunked.items()]

    def test_inclusion_frequency_is_uniform(self):
        # binomial oracle: keep probability is capacity/stream for every item
        cap, n, trials = 10, 200, 3000
        items = stream(n)
        hits = np.zeros(n)
        rng = np.random.default_rng(12345)
        for _ in range(trials):
            buf = MemoryBuffer(cap, "reservoir")
            buf.insert(items, rng)
            for s in buf.items():
                hits[int(s.features[0, 0])] += 1
        p = cap / n
        se = np.sqrt(p * (1.0 - p) / trials)
        freq = hits / trials
        assert np.all(np.abs(freq - p) <= 3.0 * se)


class TestRingBuffer:
    def test_balance_after_every_insert(self):
        buf = MemoryBuffer(10, "ring-buffer")
        rng_labels = np.random.default_rng(3)
        labels = list(rng_labels.integers(0, 2, 200))
        for i, s in enumerate(stream(200, labels=labels)):
            buf.insert([s], np.random.default_rng(0))
            n0, n1 = buf.class_counts()
            assert abs(n0 - n1) <= 1, f"unbalanced after insert {i}"
            assert len(buf) <= 10

    def test_fifo_keeps_newest_per_class(self):
        buf = MemoryBuffer(10, "ring-buffer")
        items = stream(100)                      # alternating labels
        buf.insert(items, np.random.default_rng(0))
        assert len(buf) == 10
        kept = sorted(int(s.features[0, 0]) for s in buf.items())
        assert kept == list(range(90, 100))

    def test_single_class_stream_stays_balanced(self):
        buf = MemoryBuffer(10, "ring-buffer")
        items = stream(50, labels=[0] * 50)
        buf.insert(items, np.random.default_rng(0))
        assert buf.class_counts() == (1, 0)
        assert int(buf.items()[0].features[0, 0]) == 49


class TestMeanOfFeature:
    @staticmethod
    def embed(maps):
        return np.array([[m.features[0, 0]] for m in maps])

    def test_selects_nearest_to_class_mean(self):
        buf = MemoryBuffer(4, "mean-of-feature")
        rng = np.random.default_rng(0)
        class0 = [fm(v, 0) for v in (0.0, 10.0, 4.0, 6.0)]   # mean 5
        class1 = [fm(v, 1) for v in (1.0, 2.0, 9.0)]         # mean 4
        buf.insert(class0 + class1, rng, embed=self.embed)
        kept0 = sorted(s.features[0, 0] for s in buf.items() if s.label == 0)
        kept1 = sorted(s.features[0, 0] for s in buf.items() if s.label == 1)
        assert kept0 == [4.0, 6.0]
        assert kept1 == [1.0, 2.0]

    def test_reselects_over_stored_and_new(self):
        buf = MemoryBuffer(4, "mean-of-feature")
        rng = np.random.default_rng(0)
        buf.insert([fm(0.0, 0), fm(100.0, 0), fm(7.0, 1), fm(8.0, 1)],
                   rng, embed=self.embed)
        # class-0 pool becomes {0, 100, 49, 51}: mean 50, keep 49 and 51
        buf.insert([fm(49.0, 0), fm(51.0, 0)], rng, embed=self.embed)
        kept = sorted(s.features[0, 0] for s in buf.items() if s.label == 0)
        assert kept == [49.0, 51.0]

    def test_needs_embed(self):
        buf = MemoryBuffer(4, "mean-of-feature")
        with pytest.raises(ValueError, match="embed"):
            buf.insert([fm(1.0)], np.random.default_rng(0))


class TestSample:
    def test_full_draw_is_a_permutation(self):
        buf = MemoryBuffer(16, "reservoir")
        items = stream(16)
        buf.insert(items, np.random.default_rng(0))
        got = buffer_sample(buf, 16, np.random.default_rng(1))
        assert sorted(id(s) for s in got) == sorted(id(s) for s in items)

    def test_deterministic_given_seed(self):
        buf = MemoryBuffer(30, "reservoir")
        buf.insert(stream(30), np.random.default_rng(0))
        a = buffer_sample(buf, 10, np.random.default_rng(5))
        b = buffer_sample(buf, 10, np.random.default_rng(5))
        assert [id(s) for s in a] == [id(s) for s in b]

    def test_oversample_uses_replacement(self):
        buf = MemoryBuffer(4, "reservoir")
        buf.insert(stream(4), np.random.default_rng(0))
        got = buffer_sample(buf, 9, np.random.default_rng(2))
        assert len(got) == 9

    def test_single_draw_is_uniform(self):
        buf = MemoryBuffer(5, "reservoir")
        buf.insert(stream(5), np.random.default_rng(0))
        rng = np.random.default_rng(99)
        hits = np.zeros(5)
        trials = 2000
        for _ in range(trials):
            hits[int(buffer_sample(buf, 1, rng)[0].features[0, 0])] += 1
        p = 0.2
        se = np.sqrt(p * (1.0 - p) / trials)
        assert np.all(np.abs(hits / trials - p) <= 3.0 * se)

    def test_empty_buffer_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            buffer_sample(MemoryBuffer(4, "reservoir"), 1,
                          np.random.default_rng(0))


class TestCapacityFuzz:
    @pytest.mark.parametrize("strategy", ["reservoir", "ring-buffer",
                                          "mean-of-feature"])
    def test_capacity_never_exceeded(self, strategy):
        buf = MemoryBuffer(13, strategy)
        rng = np.random.default_rng(11)
        embed = TestMeanOfFeature.embed if strategy == "mean-of-feature" else None
        for round_ in range(30):
            labels = list(rng.integers(0, 2, 17))
            buf.insert(stream(17, start=17 * round_, labels=labels), rng,
                       embed=embed)
            assert len(buf) <= 13

    def test_fixed_random_capacity(self):
        buf = MemoryBuffer(13, "fixed-random")
        rng = np.random.default_rng(11)
        for t in range(1, 8):
            buffer_insert(buf, stream(29, task_id=t), rng)
            assert len(buf) <= 13
