import json
import logging
import math

from dataclasses import dataclass

import numpy as np

from tree import NodeId, RhiException, TreeSpace

LOGGER = logging.getLogger(__name__)

# relative tolerance on every comparison between computed reals
TOLERANCE = 1e-12


class InvalidWeight(RhiException):
	pass


def exceeds(a, b):
	'''
	Strict a > b, with values inside the tolerance band around b counted as equal.
	'''
	return a > b + TOLERANCE * abs(b)


@dataclass(frozen=True)
class RhiReport:
	exponent: float
	constant: float
	witness: NodeId

	def to_dict(self):
		return {
			'exponent': self.exponent,
			'constant': self.constant,
			'witness': list(self.witness),
		}


@dataclass(frozen=True)
class WeakTypeReport:
	lam: float
	lhs: float
	rhs: float
	holds: bool


def _check_exponent(p):
	if not (math.isfinite(p) and p > 1):
		raise InvalidWeight('exponent must be a finite real above 1: %r' % (p, ))


class DyadicWeight():
	'''
	A non-negative weight that is constant on every leaf of a TreeSpace.

	Node integrals are aggregated bottom-up, each parent summing its k children,
	and cached per exponent.
	'''

	def __init__(self, space, leaf_values):
		try:
			values = np.array(leaf_values, dtype=float)
		except (TypeError, ValueError) as e:
			raise InvalidWeight('leaf values must be reals') from e

		try:
			assert values.ndim == 1, 'leaf values must be a flat sequence'
			assert values.size == space.n_leaves, 'expected %d leaves, got %d' % (space.n_leaves, values.size)
			assert np.isfinite(values).all(), 'leaf values must be finite'
			assert (values >= 0).all(), 'leaf values must be non-negative'

		except AssertionError as e:
			raise InvalidWeight(str(e)) from e

		values.flags.writeable = False

		self.space = space
		self.leaf_values = values
		self.prefix_sums = np.cumsum(values * space.leaf_measure)
		self._power_sums = {}

		self._level_integrals(1.0)

	@property
	def k(self):
		return self.space.k

	@property
	def depth(self):
		return self.space.depth

	def _leaf_powers(self, q):
		if q == 1:
			return self.leaf_values

		with np.errstate(divide='ignore'):
			return self.leaf_values ** q

	def _level_integrals(self, q):
		q = float(q)
		if q not in self._power_sums:
			levels = [self._leaf_powers(q) * self.space.leaf_measure]
			for _ in range(self.depth):
				levels.append(levels[-1].reshape(-1, self.k).sum(axis=1))

			self._power_sums[q] = levels[::-1]
			LOGGER.debug('cached level integrals for q=%r', q)

		return self._power_sums[q]

	def _check_positive(self, first, count):
		if (self.leaf_values[first:first + count] <= 0).any():
			raise InvalidWeight('zero leaf value with a negative exponent')

	def integral(self, q=1):
		if q < 0:
			self._check_positive(0, self.space.n_leaves)

		return float(self._level_integrals(q)[0][0])

	def node_integral(self, node, q=1):
		node = self.space.validate(node)
		if q < 0:
			self._check_positive(*self.space.leaf_range(node))

		return float(self._level_integrals(q)[node.level][node.index])

	def node_average(self, node, q=1):
		node = self.space.validate(node)
		if node.level == self.depth:
			if q < 0:
				self._check_positive(node.index, 1)

			return float(self._leaf_powers(q)[node.index])

		return self.node_integral(node, q) / self.space.node_measure(node)

	def level_averages(self, level, q=1):
		if level == self.depth:
			return np.asarray(self._leaf_powers(q), dtype=float)

		return self._level_integrals(q)[level] * float(self.k) ** level

	def _sup_report(self, exponent, ratios):
		best = max(float(np.max(r)) for r in ratios)

		for level, r in enumerate(ratios):
			ties = np.flatnonzero(r >= best - TOLERANCE * abs(best))
			if ties.size:
				return RhiReport(exponent, best, NodeId(level, int(ties[0])))

	def dyadic_rhi_constant(self, p):
		_check_exponent(p)
		if not (self.leaf_values > 0).any():
			raise InvalidWeight('weight is identically zero')

		ratios = []
		for level in range(self.depth + 1):
			plain = self.level_averages(level)
			powered = self.level_averages(level, p)
			with np.errstate(divide='ignore', invalid='ignore'):
				# zero averages mean a null node, where the inequality is trivial
				ratios.append(np.where(plain > 0, powered / plain ** p, -np.inf))

		return self._sup_report(p, ratios)

	def dyadic_muckenhoupt_constant(self, p):
		_check_exponent(p)
		self._check_positive(0, self.space.n_leaves)

		r = -1.0 / (p - 1)
		ratios = [
			self.level_averages(level) * self.level_averages(level, r) ** (p - 1)
			for level in range(self.depth + 1)
		]

		return self._sup_report(p, ratios)

	def maximal_function(self):
		maximal = np.asarray(self.leaf_values, dtype=float).copy()
		for level in range(self.depth):
			spread = np.repeat(self.level_averages(level), self.k ** (self.depth - level))
			np.maximum(maximal, spread, out=maximal)

		return maximal

	def weak_type_check(self, lam):
		if not (math.isfinite(lam) and lam > 0):
			raise InvalidWeight('lambda must be a positive real: %r' % (lam, ))

		level_set = self.maximal_function() > lam
		lhs = float(level_set.sum()) * self.space.leaf_measure
		rhs = float(self.leaf_values[level_set].sum()) * self.space.leaf_measure / lam
		holds = lhs <= rhs + TOLERANCE * max(lhs, rhs)

		LOGGER.debug('weak type at lambda=%r: %r <= %r (%s)', lam, lhs, rhs, holds)
		return WeakTypeReport(lam, lhs, rhs, holds)

	def is_constant(self):
		return bool(np.all(self.leaf_values == self.leaf_values[0]))

	def scaled(self, lam):
		return DyadicWeight(self.space, self.leaf_values * lam)

	def to_dict(self):
		return {
			'k': self.k,
			'depth': self.depth,
			'leaves': [float(x) for x in self.leaf_values],
		}

	def __repr__(self):
		return '%s(k=%d, depth=%d, integral=%r)' % (self.__class__.__name__, self.k, self.depth, self.integral())


def from_leaves(k, depth, values):
	return DyadicWeight(TreeSpace(k, depth), values)


def from_dict(obj):
	try:
		assert isinstance(obj, dict), 'weight document must be an object'
		assert set(obj) >= {'k', 'depth', 'leaves'}, 'weight document needs k, depth and leaves'
		assert isinstance(obj['leaves'], list), 'leaves must be a list'
		assert all(
			isinstance(x, (int, float)) and not isinstance(x, bool)
			for x in obj['leaves']
		), 'leaves must be numbers'
		assert all(
			isinstance(obj[key], int) and not isinstance(obj[key], bool)
			for key in ('k', 'depth')
		), 'k and depth must be integers'

	except AssertionError as e:
		raise InvalidWeight(str(e)) from e

	try:
		return from_leaves(obj['k'], obj['depth'], obj['leaves'])
	except RhiException as e:
		raise InvalidWeight(str(e)) from e


def dumps_weight(w):
	return json.dumps(w.to_dict()) + '\n'


def dump_weight(w, path):
	with open(path, 'w') as f:
		f.write(dumps_weight(w))

	LOGGER.info('wrote %d leaves to %s', w.space.n_leaves, path)


def load_weight(path):
	try:
		with open(path) as f:
			obj = json.load(f)

	except (OSError, ValueError) as e:
		raise InvalidWeight('cannot read weight file %s: %s' % (path, e)) from e

	return from_dict(obj)


def gen_constant(space, value):
	if not (math.isfinite(value) and value >= 0):
		raise InvalidWeight('constant value must be a non-negative real: %r' % (value, ))

	return DyadicWeight(space, np.full(space.n_leaves, float(value)))


def gen_two_value(space, high, low, share=0.5):
	'''
	`high` on the first round(share * n) leaves, `low` on the rest.
	'''
	if not 0 <= share <= 1:
		raise InvalidWeight('share must lie in [0, 1]: %r' % (share, ))

	values = np.full(space.n_leaves, float(low))
	values[:int(round(share * space.n_leaves))] = high
	return DyadicWeight(space, values)


def gen_power(space, alpha):
	'''
	Cell averages of u**-alpha on (0, 1], exact by the antiderivative.

	The total integral telescopes to 1 / (1 - alpha) at any depth.
	'''
	if not 0 < alpha < 1:
		raise InvalidWeight('alpha must lie in (0, 1): %r' % (alpha, ))

	n = space.n_leaves
	antiderivative = (np.arange(n + 1, dtype=float) / n) ** (1 - alpha)
	return DyadicWeight(space, np.diff(antiderivative) * n / (1 - alpha))


def gen_random(space, seed, low=1e-3, high=1e3):
	'''
	Leaf values log-uniform in [low, high], reproducible for a fixed seed.
	'''
	if not (0 < low <= high and math.isfinite(high)):
		raise InvalidWeight('empty value range [%r, %r]' % (low, high))

	rng = np.random.default_rng(seed)
	if low == high:
		return gen_constant(space, low)

	values = np.exp(rng.uniform(math.log(low), math.log(high), space.n_leaves))
	return DyadicWeight(space, np.clip(values, low, high))
