import logging

import numpy as np
import pytest

from coreplan.errors import ParseError, ValidationError
from coreplan.graph import from_edges, random_graph
from coreplan.ppr import PprParams, complete_params, derive_params
from coreplan.workload import (
    ForaEngine, QuerySet, SyntheticEngine, SyntheticWorkload, TimingStats, generate_queries,
    preprocess, read_queries, time_query, write_queries,
)


class TestQueries:
    def test_deterministic(self):
        g = random_graph(50, 2.0, seed=1)
        assert generate_queries(g, 5, seed=9) == generate_queries(g, 5, seed=9)
        assert generate_queries(g, 5, seed=9).sources != generate_queries(g, 5, seed=10).sources

    def test_single_vertex(self):
        g = from_edges([0], [0])
        assert set(generate_queries(g, 20, seed=0).sources) == {0}

    def test_range(self):
        g = random_graph(281903 // 100, 1.0, seed=2)
        qs = generate_queries(g, 10**4, seed=3)
        assert len(qs) == 10**4 and max(qs.sources) < g.n

    def test_count_validated(self, cycle2):
        with pytest.raises(ValidationError):
            generate_queries(cycle2, 0, seed=1)

    def test_file_round_trip(self, tmp_path, cycle2):
        qs = generate_queries(cycle2, 7, seed=4)
        write_queries(qs, tmp_path / "q.txt")
        assert read_queries(tmp_path / "q.txt", cycle2).sources == qs.sources

    def test_file_errors(self, tmp_path, cycle2):
        (tmp_path / "q.txt").write_text("0\n9\n")
        with pytest.raises(ParseError, match="line 2"):
            read_queries(tmp_path / "q.txt", cycle2)


class TestTimingStats:
    def test_constant_sequential(self):
        st = preprocess(SyntheticEngine(SyntheticWorkload("constant", (2.0,)), 10, 0), 10, c=1)
        assert (st.t_pre, st.t_max, st.t_avg, st.t_bar) == (20.0, 2.0, 2.0, 2.0)
        assert st.elapsed == st.t_pre
        assert st.t_hat == 4.0

    def test_constant_two_cores(self, caplog):
        with caplog.at_level(logging.WARNING):
            st = preprocess(SyntheticEngine(SyntheticWorkload("constant", (2.0,)), 10, 0), 10, c=2)
        assert st.t_pre == 20.0 and st.t_avg == 4.0 and st.elapsed == 10.0
        assert "c << s" in caplog.text

    def test_uniform_mean(self):
        engine = SyntheticEngine(SyntheticWorkload("uniform", (1.0, 3.0)), 664, 5)
        st = preprocess(engine, 664, c=1)
        assert st.t_bar == pytest.approx(float(np.mean(engine.durations())), rel=1e-12)
        assert 1.9 <= st.t_bar <= 2.1

    def test_invariants(self):
        st = TimingStats.from_durations([1.0, 3.0, 2.0], c=3, t_hat=5.0)
        assert st.t_max == 3.0 and st.t_pre == 6.0 and st.t_avg == 6.0 and st.s == 3

    def test_t_hat_below_max(self):
        with pytest.raises(ValidationError):
            TimingStats.from_durations([1.0, 3.0], t_hat=2.0)

    def test_nonpositive_duration(self):
        with pytest.raises(ValidationError):
            TimingStats.from_durations([1.0, 0.0])


class TestSynthetic:
    @pytest.mark.parametrize("spec", ["constant:2", "uniform:1,3", "lognormal:0,0.5,3"])
    def test_draws_in_range_and_reproducible(self, spec):
        wl = SyntheticWorkload.parse(spec)
        a = wl.draw(2000, seed=3)
        assert np.all((a > 0) & (a <= wl.t_hat))
        assert np.array_equal(a, wl.draw(2000, seed=3))

    def test_attempts_differ(self):
        e = SyntheticEngine(SyntheticWorkload("uniform", (1.0, 2.0)), 10, 1)
        assert not np.array_equal(e.durations(0), e.durations(1))

    @pytest.mark.parametrize("spec", ["constant:0", "uniform:3,1", "lognormal:0,1", "poisson:1", "uniform:a"])
    def test_invalid(self, spec):
        with pytest.raises(ValidationError):
            SyntheticWorkload.parse(spec)


class TestRealTiming:
    def test_time_query_positive_and_fast(self, cycle2):
        params = complete_params(cycle2, PprParams(delta=0.5, p_f=0.5, omega=10))
        times = [time_query(cycle2, 0, params, seed=1) for _ in range(20)]
        assert all(t > 0 for t in times)
        assert min(times) < 1e-3

    def test_fora_engine_real_preprocess(self):
        g = random_graph(200, 3.0, seed=1)
        params = derive_params(g)
        engine = ForaEngine(g, generate_queries(g, 12, 1), params, seed=2)
        st = preprocess(engine, 12, c=1, virtual=False)
        assert st.s == 12 and all(t > 0 for t in st.durations)
        assert st.elapsed >= st.t_pre * 0.99
