import csv

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rstar.chains import (ChainSet, ChainSetError, CsvFormatError, CsvLayout, NonFiniteError,
                          RaggedChainsError, fold, load_csv, make_labeled, n_test_rows,
                          normal_quantile, rank_normalize, rank_normalize_values, split_chains,
                          subset_params, thin, write_csv)


def _write_long(path, rows, header=("chain", "iteration", "x")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


class TestChainSet:
    def test_promotes_2d(self):
        cs = ChainSet(np.zeros((3, 5)))
        assert cs.shape == (3, 5, 1)
        assert cs.param_names == ("x1",)

    @pytest.mark.parametrize("shape", [(1, 10, 1), (2, 3, 1), (2, 10, 0)])
    def test_rejects_small(self, shape):
        with pytest.raises(ChainSetError):
            ChainSet(np.zeros(shape))

    def test_rejects_nan(self):
        draws = np.zeros((2, 5, 1))
        draws[1, 3, 0] = np.nan
        with pytest.raises(NonFiniteError, match="chain 2, iteration 4"):
            ChainSet(draws)

    def test_read_only(self):
        cs = ChainSet(np.zeros((2, 5)))
        with pytest.raises(ValueError):
            cs.draws[0, 0, 0] = 1.0


class TestCsv:
    def test_shape_and_order(self, tmp_path, rng):
        path = tmp_path / "d.csv"
        rows = [(c, s, rng.standard_normal()) for c in (3, 1, 4, 2) for s in range(1, 2001)]
        _write_long(path, rows)
        cs = load_csv(path)
        assert cs.shape == (4, 2000, 1)
        first_of_chain1 = next(r[2] for r in rows if r[0] == 1)
        assert cs.draws[0, 0, 0] == first_of_chain1

    def test_ragged(self, tmp_path):
        path = tmp_path / "d.csv"
        lengths = {1: 2000, 2: 2000, 3: 1999, 4: 2000}
        _write_long(path, [(c, s, 0.5) for c, n in lengths.items() for s in range(n)])
        with pytest.raises(RaggedChainsError, match="chain 3"):
            load_csv(path)

    def test_nan_cell(self, tmp_path):
        path = tmp_path / "d.csv"
        rows = [(c, s, 0.0) for c in (1, 2) for s in range(5)]
        rows[6] = (2, 1, "NaN")
        _write_long(path, rows)
        with pytest.raises(NonFiniteError, match="row 8.*'x'"):
            load_csv(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "d.csv"
        rows = [(c, s, 0.0) for c in (1, 2) for s in range(5)]
        rows[2] = (1, 2, "abc")
        _write_long(path, rows)
        with pytest.raises(CsvFormatError, match="row 4"):
            load_csv(path)

    def test_single_chain(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_long(path, [(1, s, 0.0) for s in range(5)])
        with pytest.raises(ChainSetError, match="at least 2 chains"):
            load_csv(path)

    def test_round_trip_bit_exact(self, tmp_path, rng):
        cs = ChainSet(rng.standard_normal((3, 7, 2)) * 1e-7, ("a", "b"))
        write_csv(cs, tmp_path / "d.csv")
        back = load_csv(tmp_path / "d.csv")
        assert back.param_names == ("a", "b")
        assert np.array_equal(back.draws, cs.draws)

    def test_per_chain(self, tmp_path):
        paths = []
        for c in range(3):
            p = tmp_path / f"c{c}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["a", "b"])
                w.writerows([(c, s) for s in range(6)])
            paths.append(p)
        cs = load_csv(paths, CsvLayout("per_chain"))
        assert cs.shape == (3, 6, 2)
        assert np.all(cs.param(0)[2] == 2)


class TestTransforms:
    def test_split_default_shape(self):
        assert split_chains(ChainSet(np.zeros((4, 1000))), 2).shape == (8, 500, 1)

    def test_split_remainder(self):
        draws = np.arange(14, dtype=float).reshape(2, 7)
        out = split_chains(ChainSet(draws), 2)
        assert out.shape == (4, 3, 1)
        assert out.param(0).tolist() == [[1, 2, 3], [4, 5, 6], [8, 9, 10], [11, 12, 13]]

    def test_split_identity(self, iid_chains):
        assert np.array_equal(split_chains(iid_chains, 1).draws, iid_chains.draws)

    def test_split_too_short(self):
        with pytest.raises(ChainSetError):
            split_chains(ChainSet(np.zeros((2, 5))), 3)

    @pytest.mark.parametrize("s,k,expected", [(10000, 5, 2000), (7, 3, 3), (9, 1, 9)])
    def test_thin(self, s, k, expected):
        assert thin(ChainSet(np.zeros((2, s))), k).n_iter == expected

    def test_thin_keeps_first(self):
        out = thin(ChainSet(np.arange(14.0).reshape(2, 7)), 3)
        assert out.param(0)[0].tolist() == [0, 3, 6]

    def test_subset_stride(self):
        cs = ChainSet(np.zeros((2, 4, 10)))
        assert subset_params(cs, stride=5).param_names == ("x1", "x6")

    def test_subset_order_and_range(self):
        cs = ChainSet(np.arange(2 * 4 * 3, dtype=float).reshape(2, 4, 3))
        assert subset_params(cs, [3, 1]).param_names == ("x3", "x1")
        assert np.array_equal(subset_params(cs, [1, 2, 3]).draws, cs.draws)
        with pytest.raises(ChainSetError):
            subset_params(cs, [4])

    def test_subset_large_stride(self):
        cs = ChainSet(np.zeros((2, 4, 18105)))
        assert subset_params(cs, stride=5).n_params == 3621

    @pytest.mark.parametrize("values,expected", [([1, 2, 3], [1, 0, 1]), ([-2.5, 2.5], [2.5, 2.5]),
                                                 ([5, 5, 5, 5], [0, 0, 0, 0])])
    def test_fold(self, values, expected):
        assert fold(np.array(values, float)).tolist() == expected


class TestRankNormalize:
    def test_lowest_of_four_matches_mpmath(self):
        z = rank_normalize_values(np.array([[0.1, 3.0], [2.0, 5.0]]))
        mp = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf("0.625") / mpmath.mpf("4.25") - 1))
        assert z[0, 0] == pytest.approx(mp, abs=1e-12)
        assert mp == pytest.approx(-1.049, abs=5e-4)

    def test_constant(self):
        assert np.all(rank_normalize(ChainSet(np.ones((2, 5)))) == 0)

    @pytest.mark.parametrize("p", [1e-9, 0.01, 0.3, 0.5, 0.77, 0.999999])
    def test_quantile_against_mpmath(self, p):
        mpmath.mp.dps = 40
        expected = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))
        assert normal_quantile(p) == pytest.approx(expected, abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.int64, (2, 6), elements=st.integers(-1000, 1000)))
    def test_monotone_invariance(self, values):
        # integer grid keeps the transform strictly increasing in floating point
        values = values.astype(float)
        base = rank_normalize_values(values)
        assert np.array_equal(base, rank_normalize_values(np.exp(values / 100.0) * 3 + 1))


class TestLabeled:
    def test_default_sizes(self):
        ds = make_labeled(ChainSet(np.zeros((4, 2000))), 0.3, seed=1)
        assert len(ds.train) == 5600 and len(ds.test) == 2400
        assert np.all(np.bincount(ds.y_test)[1:] == 600)

    def test_deterministic(self, iid_chains):
        a, b = make_labeled(iid_chains, seed=7), make_labeled(iid_chains, seed=7)
        assert np.array_equal(a.test, b.test)
        assert not np.array_equal(a.test, make_labeled(iid_chains, seed=8).test)

    def test_degenerate(self):
        with pytest.raises(ChainSetError):
            make_labeled(ChainSet(np.zeros((2, 4))), 0.999)
        with pytest.raises(ChainSetError):
            make_labeled(ChainSet(np.zeros((2, 4))), 0.0)

    def test_rounding(self):
        assert n_test_rows(2000, 0.3) == 600
        assert n_test_rows(5, 0.3) == 2

    @settings(max_examples=40, deadline=None)
    @given(st.integers(4, 60), st.integers(2, 5), st.floats(0.05, 0.8), st.integers(0, 2**32 - 1))
    def test_bijection(self, s, n, frac, seed):
        cs = ChainSet(np.arange(n * s, dtype=float).reshape(n, s))
        try:
            ds = make_labeled(cs, frac, seed)
        except ChainSetError:
            return
        rows = np.sort(np.concatenate([ds.train, ds.test]))
        assert np.array_equal(rows, np.arange(n * s))
        assert np.array_equal(ds.x[:, 0], np.arange(n * s))
        assert np.array_equal(ds.chain, np.repeat(np.arange(1, n + 1), s))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 4), st.integers(2, 40), st.integers(1, 4))
    def test_split_then_merge(self, n, s, factor):
        cs = ChainSet(np.random.default_rng(s).standard_normal((n, max(4, s * factor))))
        try:
            out = split_chains(cs, factor)
        except ChainSetError:
            return
        merged = out.draws.reshape(n, factor * out.n_iter, 1)
        assert np.array_equal(merged, cs.draws[:, cs.n_iter % factor:])

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, st.integers(1, 30).map(lambda k: 2 * k + 1), elements=st.floats(-1e6, 1e6)))
    def test_fold_odd_has_zero(self, values):
        out = fold(values)
        assert np.all(out >= 0) and np.any(out == 0)
