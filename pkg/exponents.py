import logging
import math

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from tree import RhiException

LOGGER = logging.getLogger(__name__)

# a root beyond this is reported as +infinity
ROOT_CAP = 1e9
RESIDUAL_TOLERANCE = 1e-12


class ExponentException(RhiException):
	pass


@dataclass(frozen=True)
class ExponentResult:
	p: float
	C: float
	p0: float
	residual: float
	monotone: bool = True

	@property
	def finite(self):
		return math.isfinite(self.p0)

	@property
	def q_range(self):
		'''
		Half-open integrability range [p, p0).
		'''
		return self.p, self.p0

	def to_dict(self):
		return {
			'p': self.p,
			'C': self.C,
			'p0': self.p0 if self.finite else 'infinity',
			'residual': self.residual,
			'monotone': self.monotone,
		}


def _log_equation(q, p, C):
	# log of ((q - p) / q) * (q / (q - 1))**p * C
	return math.log1p(-p / q) - p * math.log1p(-1.0 / q) + math.log(C)


def _check_monotone(p, C, lower, upper):
	grid = np.geomspace(lower, upper, 64)
	values = np.array([_log_equation(q, p, C) for q in grid])
	monotone = bool((np.diff(values) >= -1e-14).all())
	if not monotone:
		LOGGER.warning('equation for p=%r, C=%r is not increasing on [%r, %r]', p, C, lower, upper)

	return monotone


def p0_solve(p, C):
	'''
	Root p0 > p of ((p0 - p) / p0) * (p0 / (p0 - 1))**p * C = 1.

	The left-hand side increases towards C, so there is a finite root exactly
	when C > 1; roots past ROOT_CAP are reported as infinite.
	'''
	try:
		assert math.isfinite(p) and p > 1, 'p must be a finite real above 1: %r' % (p, )
		assert math.isfinite(C) and C >= 1, 'C must be a finite real of at least 1: %r' % (C, )

	except AssertionError as e:
		raise ExponentException(str(e)) from e

	gap = p * 1e-6
	while _log_equation(p + gap, p, C) >= 0 and gap > p * 1e-15:
		gap /= 2
	lower = p + gap
	if _log_equation(lower, p, C) >= 0:
		# root closer to p than a float can resolve
		residual = abs(math.expm1(_log_equation(lower, p, C)))
		LOGGER.warning('p0 for p=%r, C=%r is below %r, returning the lower bracket', p, C, lower)
		return ExponentResult(p, C, lower, residual)

	upper = max(2 * p, 4.0)
	while _log_equation(upper, p, C) <= 0:
		upper *= 2
		if upper > ROOT_CAP:
			LOGGER.info('no root below %r for p=%r, C=%r', ROOT_CAP, p, C)
			residual = abs(math.expm1(_log_equation(ROOT_CAP, p, C)))
			return ExponentResult(p, C, math.inf, residual)

	try:
		root = optimize.bisect(
			_log_equation,
			lower,
			upper,
			args=(p, C),
			xtol=1e-300,
			rtol=4 * np.finfo(float).eps,
			maxiter=2000,
		)

	except (ValueError, RuntimeError) as e:
		raise ExponentException('no sign change for p=%r, C=%r in [%r, %r]' % (p, C, lower, upper)) from e

	residual = abs(math.expm1(_log_equation(root, p, C)))
	if residual > RESIDUAL_TOLERANCE:
		LOGGER.warning('p0 residual %r above tolerance for p=%r, C=%r', residual, p, C)

	LOGGER.debug('p0(p=%r, C=%r) = %r in [%r, %r]', p, C, root, lower, upper)
	return ExponentResult(p, C, root, residual, _check_monotone(p, C, lower, upper))


def effective_constant(c, k):
	'''
	The constant k*c - k + 1 carried over to the rearrangement on prefix intervals.
	'''
	return k * c - k + 1


def improvement_range(p, c, k):
	try:
		assert isinstance(k, int) and k >= 2, 'k must be an integer of at least 2: %r' % (k, )
		assert math.isfinite(c) and c >= 1, 'c must be a finite real of at least 1: %r' % (c, )

	except AssertionError as e:
		raise ExponentException(str(e)) from e

	return p0_solve(p, effective_constant(c, k))


def improvement_curve(p, constants):
	return [p0_solve(p, C) for C in constants]


def power_weight_constant(alpha, p):
	'''
	Prefix reverse Hölder constant of u**-alpha, the same for every t.
	'''
	try:
		assert math.isfinite(p) and p > 1, 'p must be a finite real above 1: %r' % (p, )
		assert 0 <= alpha and alpha * p < 1, 'need 0 <= alpha and alpha * p < 1: alpha=%r, p=%r' % (alpha, p)

	except AssertionError as e:
		raise ExponentException(str(e)) from e

	return (1 - alpha) ** p / (1 - alpha * p)
