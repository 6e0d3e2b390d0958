import pytest

import engine
from decomposition import LemmaReport
from engine import Engine, EngineException, SUITES, T_GRID, max_depth
from tree import RhiException


@pytest.mark.parametrize('k, depth, capped', [
	[2, 20, 13],
	[2, 6, 6],
	[4, 10, 7],
	[8, 6, 5],
	[3, 20, 8],
])
def test_max_depth(k, depth, capped):
	assert max_depth(k, depth) == capped
	assert k ** capped <= 4096 * k


def test_cases_deterministic():
	first = [case.describe() for case in Engine('prefix-bound', 25, 3).cases()]
	second = [case.describe() for case in Engine('prefix-bound', 25, 3).cases()]
	other = [case.describe() for case in Engine('prefix-bound', 25, 4).cases()]

	assert first == second
	assert first != other
	assert [case['index'] for case in first] == list(range(25))
	assert all(case['k'] in (2, 4, 8) and 1 <= case['depth'] <= max_depth(case['k'], 6) for case in first)
	assert all(case['p'] in (1.5, 2.0, 3.0) for case in first)


@pytest.mark.parametrize('suite, count, depth', [
	['prefix-bound', 500, 6],
	['muckenhoupt', 200, 6],
	['weaktype', 200, 6],
])
def test_suites_pass(suite, count, depth):
	result = Engine(suite, count, 0, depth=depth).run()
	assert result.ok, result.counterexample
	assert result.passed == count
	assert result.counterexample is None
	assert [r.index for r in result.results] == list(range(count))


@pytest.mark.parametrize('p', [1.5, 2.0, 3.0])
def test_decomposition_suite(p):
	# every t of the grid on 200 weights
	result = Engine('decomposition', 200, 0, depth=4, p_list=[p]).run()
	assert result.ok, result.counterexample
	assert result.passed == 200
	assert all(r.details['t'] == list(T_GRID) for r in result.results)


def test_exchange_suite():
	result = Engine('lemma', 1000, 0, depth=4).run()
	assert result.suite == 'exchange'
	assert result.ok, result.counterexample
	assert result.skipped == 0
	assert result.passed == 1000
	assert all(r.details['hypotheses_hold'] and r.details['conclusion_holds'] for r in result.results)


def test_theorem_alias():
	result = Engine('theorem1', 10, 1).run()
	assert result.suite == 'prefix-bound'
	assert result.passed == 10


def test_skipped_cases(monkeypatch):
	def check(case, tolerance):
		return (None, {}) if case.index % 2 else (True, {})

	monkeypatch.setitem(engine.CHECKS, 'exchange', check)
	result = Engine('exchange', 6, 0).run()

	assert result.ok
	assert result.passed == 3
	assert result.skipped == 3
	assert result.to_dict()['skipped'] == 3


def test_exchange_hypotheses_fail(monkeypatch):
	def broken(w, top, other, p, tolerance=1e-10):
		return LemmaReport(3, 4, False, True, True, False, 1, 2, True)

	monkeypatch.setattr(engine, 'check_exchange_lemma', broken)
	result = Engine('exchange', 4, 0, depth=3).run()

	assert result.failed == 4
	assert result.counterexample['details']['hypotheses_hold'] is False


def test_counterexample(monkeypatch):
	def check(case, tolerance):
		if case.index == 5:
			raise RhiException('boom')
		return case.index != 3, {'index': case.index}

	monkeypatch.setitem(engine.CHECKS, 'prefix-bound', check)
	result = Engine('prefix-bound', 8, 1, workers=3).run()

	assert not result.ok
	assert result.failed == 2
	assert result.passed == 6
	assert result.counterexample['index'] == 3
	assert result.counterexample['details'] == {'index': 3}
	assert result.counterexample['suite'] == 'prefix-bound'
	assert len(result.counterexample['weight']['leaves']) == result.counterexample['k'] ** result.counterexample['depth']
	assert result.results[5].error == 'boom'
	assert result.to_dict()['failed'] == 2


@pytest.mark.parametrize('kwargs', [
	{'suite': 'unknown', 'count': 1, 'seed': 0},
	{'suite': 'weaktype', 'count': 0, 'seed': 0},
	{'suite': 'weaktype', 'count': 1, 'seed': -1},
	{'suite': 'weaktype', 'count': 1, 'seed': 0, 'k_list': [1]},
	{'suite': 'weaktype', 'count': 1, 'seed': 0, 'p_list': [1]},
	{'suite': 'weaktype', 'count': 1, 'seed': 0, 'depth': 0},
	{'suite': 'weaktype', 'count': 1, 'seed': 0, 'workers': 0},
	{'suite': 'weaktype', 'count': 1, 'seed': 0, 'tolerance': -1},
])
def test_engine_errors(kwargs):
	with pytest.raises(EngineException):
		Engine(**kwargs)


def test_suites():
	assert set(SUITES) == set(engine.CHECKS)
