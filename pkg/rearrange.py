import csv
import logging
import math

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from tree import RhiException
from weight import TOLERANCE

LOGGER = logging.getLogger(__name__)

# in-step search resolution for method='bounded'
T_TOLERANCE = 1e-10


class StepFunctionException(RhiException):
	pass


@dataclass(frozen=True)
class PrefixReport:
	exponent: float
	constant: float
	witness_t: float

	def to_dict(self):
		return {
			'exponent': self.exponent,
			'constant': self.constant,
			'witness_t': self.witness_t,
		}


class StepFunction():
	'''
	Non-increasing, left-continuous step function on (0, 1].

	Takes values[i] on (breakpoints[i], breakpoints[i + 1]].
	'''

	def __init__(self, breakpoints, values):
		breakpoints = np.array(breakpoints, dtype=float)
		values = np.array(values, dtype=float)

		try:
			assert breakpoints.ndim == 1 and values.ndim == 1, 'expected flat sequences'
			assert values.size >= 1, 'at least one step is needed'
			assert breakpoints.size == values.size + 1, 'need one more breakpoint than values'
			assert breakpoints[0] == 0 and breakpoints[-1] == 1, 'breakpoints must run from 0 to 1'
			assert (np.diff(breakpoints) > 0).all(), 'breakpoints must strictly increase'
			assert np.isfinite(values).all() and (values >= 0).all(), 'values must be finite and non-negative'
			assert (np.diff(values) <= 0).all(), 'values must not increase'

		except AssertionError as e:
			raise StepFunctionException(str(e)) from e

		breakpoints.flags.writeable = False
		values.flags.writeable = False

		self.breakpoints = breakpoints
		self.values = values
		self._cumulative = {}

	@property
	def n_steps(self):
		return self.values.size

	def _powers(self, q):
		if q < 0 and (self.values <= 0).any():
			raise StepFunctionException('zero value with a negative exponent')

		return self.values ** q

	def cumulative(self, q=1):
		'''
		Integrals of h**q from 0 up to each breakpoint.
		'''
		q = float(q)
		if q not in self._cumulative:
			pieces = self._powers(q) * np.diff(self.breakpoints)
			self._cumulative[q] = np.concatenate([[0.0], np.cumsum(pieces)])

		return self._cumulative[q]

	def _step_index(self, t):
		# t in (t[i-1], t[i]] lies on step i - 1
		return np.clip(np.searchsorted(self.breakpoints, t, side='left'), 1, self.n_steps) - 1

	def __call__(self, t):
		return self.values[self._step_index(t)]

	def integral(self, t, q=1):
		t = np.asarray(t, dtype=float)
		step = self._step_index(t)
		powers = self._powers(q)
		return self.cumulative(q)[step] + powers[step] * (t - self.breakpoints[step])

	def to_leaves(self, n):
		return self((np.arange(n) + 0.5) / n)

	def __eq__(self, other):
		return (
			isinstance(other, StepFunction)
			and np.array_equal(self.breakpoints, other.breakpoints)
			and np.array_equal(self.values, other.values)
		)

	def __repr__(self):
		return '%s(breakpoints=%r, values=%r)' % (self.__class__.__name__, list(self.breakpoints), list(self.values))


def rearrangement(w):
	'''
	The non-increasing rearrangement of a DyadicWeight, equal adjacent heights merged.
	'''
	n = w.space.n_leaves
	order = np.argsort(-w.leaf_values, kind='stable')
	ordered = w.leaf_values[order]

	starts = np.flatnonzero(np.diff(ordered) != 0) + 1
	ends = np.append(starts, n)

	return StepFunction(np.concatenate([[0], ends]) / n, ordered[np.concatenate([[0], starts])])


def _check_t(t):
	if not 0 < t <= 1:
		raise StepFunctionException('t must lie in (0, 1]: %r' % (t, ))


def prefix_average(h, t, q=1):
	_check_t(t)
	return float(h.integral(t, q)) / t


def _power_means(h, t, r):
	'''
	Evaluates the prefix means of h and h**r at every t.
	'''
	t = np.asarray(t, dtype=float)
	return h.integral(t, 1) / t, h.integral(t, r) / t


def _stationary_points(h, r, a, b):
	'''
	Interior stationary points of M_1(t)**a * M_r(t)**b, one candidate per step.

	On a step both integrals are affine in t, so the numerator of the
	logarithmic derivative is affine too and has at most one root.
	'''
	lower = h.breakpoints[:-1]
	upper = h.breakpoints[1:]
	slope_1 = h.values
	slope_r = h._powers(r)
	offset_1 = h.cumulative(1)[:-1] - slope_1 * lower
	offset_r = h.cumulative(r)[:-1] - slope_r * lower

	with np.errstate(divide='ignore', invalid='ignore'):
		t = -(a + b) * offset_1 * offset_r / (a * offset_1 * slope_r + b * offset_r * slope_1)

	inside = np.isfinite(t) & (t > lower) & (t < upper)
	return t[inside]


def _bounded_points(h, r, a, b):
	def negative_log(t):
		m_1, m_r = _power_means(h, t, r)
		return -(a * math.log(m_1) + b * math.log(m_r))

	points = []
	for lower, upper in zip(h.breakpoints[1:-1], h.breakpoints[2:]):
		result = optimize.minimize_scalar(
			negative_log,
			bounds=(lower, upper),
			method='bounded',
			options={'xatol': T_TOLERANCE},
		)
		points.append(result.x)

	return np.array(points, dtype=float)


def _prefix_sup(h, exponent, r, a, b, method):
	if h.values[0] <= 0:
		raise StepFunctionException('step function is identically zero')

	if method == 'closed':
		interior = _stationary_points(h, r, a, b)
	elif method == 'bounded':
		interior = _bounded_points(h, r, a, b)
	else:
		raise StepFunctionException('unknown search method: %r' % (method, ))

	candidates = np.concatenate([h.breakpoints[1:], interior])
	m_1, m_r = _power_means(h, candidates, r)
	ratios = m_1 ** a * m_r ** b

	best = float(np.max(ratios))
	ties = candidates[ratios >= best - TOLERANCE * abs(best)]

	LOGGER.debug('prefix sup over %d candidates (%d interior): %r', candidates.size, interior.size, best)
	return PrefixReport(exponent, best, float(np.max(ties)))


def prefix_rhi_constant(h, q, method='closed'):
	'''
	sup over t in (0, 1] of (1/t int_0^t h**q) / (1/t int_0^t h)**q.
	'''
	if not (math.isfinite(q) and q > 1):
		raise StepFunctionException('exponent must be a finite real above 1: %r' % (q, ))

	return _prefix_sup(h, q, q, -q, 1.0, method)


def prefix_muckenhoupt_constant(h, p, method='closed'):
	'''
	sup over t of (1/t int_0^t h) * (1/t int_0^t h**(-1/(p-1)))**(p-1).
	'''
	if not (math.isfinite(p) and p > 1):
		raise StepFunctionException('exponent must be a finite real above 1: %r' % (p, ))

	return _prefix_sup(h, p, -1.0 / (p - 1), 1.0, p - 1, method)


def ratio_curve(h, q, n_samples):
	if n_samples < 2:
		raise StepFunctionException('need at least two samples: %r' % (n_samples, ))
	if h.values[0] <= 0:
		raise StepFunctionException('step function is identically zero')

	grid = np.union1d(h.breakpoints[1:], np.arange(1, n_samples + 1) / n_samples)
	m_1, m_q = _power_means(h, grid, q)
	ratios = m_q / m_1 ** q

	return [(float(t), float(ratio)) for t, ratio in zip(grid, ratios)]


def write_curve(curve, path):
	with open(path, 'w', newline='') as f:
		writer = csv.writer(f)
		writer.writerow(['t', 'ratio'])
		for t, ratio in curve:
			writer.writerow(['%.17g' % t, '%.17g' % ratio])

	LOGGER.info('wrote %d curve samples to %s', len(curve), path)
