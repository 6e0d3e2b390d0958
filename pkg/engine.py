import logging
import math
import queue
import threading

from dataclasses import dataclass, field

import numpy as np

from decomposition import build_top_set, check_exchange_lemma, decompose, trace_prefix_bound
from exponents import effective_constant
from rearrange import prefix_average, prefix_muckenhoupt_constant, prefix_rhi_constant, rearrangement
from tree import RhiException, TreeSpace
from weight import gen_random

LOGGER = logging.getLogger(__name__)

SUITES = ('prefix-bound', 'muckenhoupt', 'exchange', 'weaktype', 'decomposition')
SUITE_ALIASES = {'theorem1': 'prefix-bound', 'lemma': 'exchange'}

# leaf count ceiling per case is MAX_LEAVES_PER_CHILD * k
MAX_LEAVES_PER_CHILD = 4096
T_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
LAMBDAS_PER_WEIGHT = 20
# draws of t before an exchange case is skipped
MAX_DRAWS = 10


class EngineException(RhiException):
	pass


@dataclass
class Case:
	index: int
	k: int
	depth: int
	p: float
	weight_seed: int
	rng: np.random.Generator

	def weight(self):
		return gen_random(TreeSpace(self.k, self.depth), self.weight_seed)

	def describe(self):
		return {'index': self.index, 'k': self.k, 'depth': self.depth, 'p': self.p, 'weight_seed': self.weight_seed}


@dataclass
class CaseResult:
	index: int
	# None for a skipped case
	passed: bool
	details: dict = field(default_factory=dict)
	error: str = None


@dataclass
class EngineResult:
	suite: str
	count: int
	seed: int
	passed: int
	failed: int
	counterexample: dict = None
	results: list = field(default_factory=list)
	skipped: int = 0

	@property
	def ok(self):
		return self.failed == 0

	def to_dict(self):
		return {
			'suite': self.suite,
			'count': self.count,
			'seed': self.seed,
			'passed': self.passed,
			'failed': self.failed,
			'skipped': self.skipped,
			'counterexample': self.counterexample,
		}


def max_depth(k, depth):
	'''
	Largest depth <= `depth` keeping k**depth within MAX_LEAVES_PER_CHILD * k leaves.
	'''
	cap = 1 + int(math.floor(math.log(MAX_LEAVES_PER_CHILD) / math.log(k) + 1e-9))
	return max(1, min(depth, cap))


def check_prefix_bound(case, tolerance):
	w = case.weight()
	c = w.dyadic_rhi_constant(case.p).constant
	report = prefix_rhi_constant(rearrangement(w), case.p)
	bound = effective_constant(c, case.k)

	return report.constant <= bound * (1 + tolerance), {
		'c': c,
		'prefix_constant': report.constant,
		'witness_t': report.witness_t,
		'bound': bound,
	}


def check_muckenhoupt(case, tolerance):
	w = case.weight()
	c = w.dyadic_muckenhoupt_constant(case.p).constant
	report = prefix_muckenhoupt_constant(rearrangement(w), case.p)
	bound = effective_constant(c, case.k)

	return report.constant <= bound * (1 + tolerance), {
		'c': c,
		'prefix_constant': report.constant,
		'witness_t': report.witness_t,
		'bound': bound,
	}


def check_exchange(case, tolerance):
	'''
	Top set of a random measure t against the balanced set built at its prefix average.

	t is drawn above one leaf, and redrawn while nothing exceeds the prefix average.
	'''
	w = case.weight()
	h = rearrangement(w)

	for _ in range(MAX_DRAWS):
		t = float(case.rng.uniform(w.space.leaf_measure, 1.0))
		balanced = decompose(w, prefix_average(h, t)).balanced
		if len(balanced):
			break
	else:
		LOGGER.warning('case %d: nothing exceeds the prefix average in %d draws, skipped', case.index, MAX_DRAWS)
		return None, {'draws': MAX_DRAWS}

	report = check_exchange_lemma(w, build_top_set(w, t), balanced, case.p)
	if not report.hypotheses_hold:
		LOGGER.error('case %d: exchange hypotheses fail at t=%r', case.index, t)

	return report.hypotheses_hold and report.conclusion_holds, dict(report.to_dict(), t=t)


def check_weaktype(case, tolerance):
	w = case.weight()
	maximal = w.maximal_function()
	lambdas = np.exp(case.rng.uniform(
		math.log(maximal.min() / 2),
		math.log(maximal.max() * 2),
		LAMBDAS_PER_WEIGHT,
	))

	failures = []
	for lam in lambdas:
		report = w.weak_type_check(float(lam))
		if not report.holds:
			failures.append({'lam': report.lam, 'lhs': report.lhs, 'rhs': report.rhs})

	return not failures, {'lambdas': LAMBDAS_PER_WEIGHT, 'failures': failures}


def check_decomposition(case, tolerance):
	w = case.weight()
	assertions = 0
	degenerate = 0

	for t in T_GRID:
		trace = trace_prefix_bound(w, case.p, t)
		if not trace.holds:
			return False, trace.to_dict()

		assertions += len(trace.assertions)
		degenerate += trace.degenerate

	return True, {'t': list(T_GRID), 'assertions': assertions, 'degenerate': degenerate}


CHECKS = {
	'prefix-bound': check_prefix_bound,
	'muckenhoupt': check_muckenhoupt,
	'exchange': check_exchange,
	'weaktype': check_weaktype,
	'decomposition': check_decomposition,
}


class CaseThread(threading.Thread):
	def __init__(self, worker_num, in_queue, out_queue, check, tolerance):
		self.worker_num = worker_num
		self.in_queue = in_queue
		self.out_queue = out_queue
		self.check = check
		self.tolerance = tolerance
		super().__init__(daemon=True)

	def run(self):
		while True:
			case = self.in_queue.get()
			if case is None:
				return

			LOGGER.debug('worker %d: case %d', self.worker_num, case.index)
			try:
				passed, details = self.check(case, self.tolerance)
				result = CaseResult(case.index, None if passed is None else bool(passed), details)

			except RhiException as e:
				LOGGER.exception('case %d raised', case.index)
				result = CaseResult(case.index, False, error=str(e))

			except Exception as e:
				LOGGER.exception('case %d crashed', case.index)
				result = CaseResult(case.index, False, error='%s: %s' % (e.__class__.__name__, e))

			self.out_queue.put(result)

	def __str__(self):
		return '%s(%s)' % (self.__class__.__name__, self.worker_num)


class Engine:
	def __init__(self, suite, count, seed, k_list=(2, 4, 8), depth=6, p_list=(1.5, 2.0, 3.0), workers=4, tolerance=1e-9):
		suite = SUITE_ALIASES.get(suite, suite)

		try:
			assert suite in CHECKS, 'unknown suite: %r' % (suite, )
			assert count >= 1, 'count must be at least 1: %r' % (count, )
			assert seed >= 0, 'seed must be non-negative: %r' % (seed, )
			assert k_list and all(int(k) == k and k >= 2 for k in k_list), 'k values must be integers >= 2: %r' % (k_list, )
			assert depth >= 1, 'depth must be at least 1: %r' % (depth, )
			assert p_list and all(math.isfinite(p) and p > 1 for p in p_list), 'p values must be reals > 1: %r' % (p_list, )
			assert workers >= 1, 'need at least one worker: %r' % (workers, )
			assert math.isfinite(tolerance) and tolerance >= 0, 'tolerance must be a non-negative real: %r' % (tolerance, )

		except AssertionError as e:
			raise EngineException(str(e)) from e

		LOGGER.info('Suite params: suite=%s, count=%r, seed=%r, k=%r, depth=%r, p=%r', suite, count, seed, k_list, depth, p_list)

		self.suite = suite
		self.count = count
		self.seed = seed
		self.k_list = [int(k) for k in k_list]
		self.depth = depth
		self.p_list = [float(p) for p in p_list]
		self.workers = workers
		self.tolerance = tolerance

	def cases(self):
		for index, child in enumerate(np.random.SeedSequence(self.seed).spawn(self.count)):
			rng = np.random.default_rng(child)
			k = int(rng.choice(self.k_list))
			depth = int(rng.integers(1, max_depth(k, self.depth) + 1))
			p = float(rng.choice(self.p_list))
			yield Case(index, k, depth, p, int(rng.integers(2 ** 63)), rng)

	def run(self):
		in_queue = queue.Queue()
		out_queue = queue.Queue()

		cases = list(self.cases())
		for case in cases:
			in_queue.put(case)

		threads = [
			CaseThread(i, in_queue, out_queue, CHECKS[self.suite], self.tolerance)
			for i in range(min(self.workers, len(cases)))
		]
		for thread in threads:
			in_queue.put(None)
			thread.start()

		for thread in threads:
			thread.join()

		results = sorted((out_queue.get() for _ in cases), key=lambda result: result.index)
		passed = [result for result in results if result.passed]
		failed = [result for result in results if result.passed is False]
		skipped = len(results) - len(passed) - len(failed)

		counterexample = None
		if failed:
			first = failed[0]
			case = cases[first.index]
			counterexample = dict(
				case.describe(),
				suite=self.suite,
				weight=case.weight().to_dict(),
				details=first.details,
				error=first.error,
			)
			LOGGER.warning('%s: %d of %d cases failed, first is case %d', self.suite, len(failed), len(results), first.index)

		LOGGER.info('%s finished: %d passed, %d failed, %d skipped', self.suite, len(passed), len(failed), skipped)
		return EngineResult(
			self.suite,
			self.count,
			self.seed,
			len(passed),
			len(failed),
			counterexample,
			results,
			skipped,
		)
