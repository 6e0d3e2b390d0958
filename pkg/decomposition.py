import logging
import math

from dataclasses import dataclass, field

import numpy as np

from rearrange import prefix_average, rearrangement
from tree import NodeId, ROOT, RhiException
from weight import TOLERANCE, exceeds

LOGGER = logging.getLogger(__name__)

TRACE_TOLERANCE = 1e-9
BALANCE_TOLERANCE = 1e-10


class TraceException(RhiException):
	pass


class FractionalSet():
	'''
	A measurable set given by the fraction of every leaf it covers.

	A portion occupies the start of its leaf, so unions and intersections of
	portions on one leaf are max and min.
	'''

	def __init__(self, portions=None):
		self.portions = {}
		for leaf, fraction in sorted((portions or {}).items()):
			if fraction <= 0:
				continue
			if fraction > 1 + TOLERANCE:
				raise TraceException('fraction above 1 on leaf %d: %r' % (leaf, fraction))
			self.portions[int(leaf)] = min(float(fraction), 1.0)

	@classmethod
	def from_nodes(cls, space, nodes):
		portions = {}
		for node in nodes:
			first, count = space.leaf_range(node)
			portions.update((leaf, 1.0) for leaf in range(first, first + count))

		return cls(portions)

	def leaves(self):
		return list(self.portions)

	def _arrays(self):
		leaves = np.fromiter(self.portions.keys(), dtype=int, count=len(self.portions))
		fractions = np.fromiter(self.portions.values(), dtype=float, count=len(self.portions))
		return leaves, fractions

	def measure(self, space):
		return math.fsum(self.portions.values()) * space.leaf_measure

	def integral(self, w, q=1):
		leaves, fractions = self._arrays()
		return float(np.sum(fractions * w.leaf_values[leaves] ** q)) * w.space.leaf_measure

	def average(self, w, q=1):
		if not self.portions:
			raise TraceException('average over an empty set')

		return self.integral(w, q) / self.measure(w.space)

	def carried_values(self, w):
		leaves, _ = self._arrays()
		return w.leaf_values[leaves]

	def union(self, other):
		portions = dict(self.portions)
		for leaf, fraction in other.portions.items():
			portions[leaf] = max(fraction, portions.get(leaf, 0.0))

		return FractionalSet(portions)

	def intersection(self, other):
		return FractionalSet({
			leaf: min(fraction, other.portions[leaf])
			for leaf, fraction in self.portions.items()
			if leaf in other.portions
		})

	def difference(self, other):
		return FractionalSet({
			leaf: fraction - other.portions.get(leaf, 0.0)
			for leaf, fraction in self.portions.items()
		})

	def __len__(self):
		return len(self.portions)

	def __eq__(self, other):
		return isinstance(other, FractionalSet) and self.portions == other.portions

	def to_dict(self):
		return {str(leaf): fraction for leaf, fraction in self.portions.items()}

	def __repr__(self):
		return '%s(%r)' % (self.__class__.__name__, self.portions)


@dataclass(frozen=True)
class Assertion:
	name: str
	lhs: float
	rhs: float
	relation: str
	holds: bool

	def to_dict(self):
		return {
			'name': self.name,
			'lhs': self.lhs,
			'rhs': self.rhs,
			'relation': self.relation,
			'holds': self.holds,
		}


def check(name, lhs, rhs, relation, tolerance=TRACE_TOLERANCE, scale=0.0):
	'''
	Records lhs <relation> rhs with a slack of `tolerance` relative to the
	larger side, or to `scale` when both sides may cancel to zero.

	Strict relations get no slack.
	'''
	slack = tolerance * max(abs(lhs), abs(rhs), scale)
	if relation == '<':
		holds = lhs < rhs
	elif relation == '>':
		holds = lhs > rhs
	elif relation == '<=':
		holds = lhs <= rhs + slack
	elif relation == '>=':
		holds = lhs >= rhs - slack
	elif relation == '==':
		holds = abs(lhs - rhs) <= slack
	else:
		raise TraceException('unknown relation: %r' % (relation, ))

	if not holds:
		LOGGER.warning('assertion %s failed: %r %s %r', name, lhs, relation, rhs)

	return Assertion(name, float(lhs), float(rhs), relation, bool(holds))


def stopping_decomposition(w, threshold):
	'''
	Maximal nodes whose average exceeds threshold, ordered by leaf position.

	They are pairwise disjoint and cover {M phi > threshold}. The root may not
	qualify, since every node then needs a father.
	'''
	if not threshold > 0:
		raise TraceException('threshold must be positive: %r' % (threshold, ))
	if exceeds(w.node_average(ROOT), threshold):
		raise TraceException('root average %r exceeds threshold %r' % (w.node_average(ROOT), threshold))

	space = w.space
	covered = np.zeros(space.n_leaves, dtype=bool)
	stopped = []

	for level in range(1, space.depth + 1):
		block = space.k ** (space.depth - level)
		hits = ~covered[::block] & (w.level_averages(level) > threshold + TOLERANCE * threshold)
		stopped.extend(NodeId(level, int(index)) for index in np.flatnonzero(hits))
		covered |= np.repeat(hits, block)

	LOGGER.debug('%d stopped nodes above %r', len(stopped), threshold)
	return sorted(stopped, key=lambda node: space.leaf_range(node)[0])


def select_fathers(space, stopped):
	'''
	Fathers of the stopped nodes, keeping only those maximal under inclusion.
	'''
	if not stopped:
		raise TraceException('no stopped nodes')
	if any(space.validate(node).level == 0 for node in stopped):
		raise TraceException('the root has no father')

	fathers = set(space.father(node) for node in stopped)
	maximal = [
		father
		for father in fathers
		if not any(ancestor in fathers for ancestor in space.ancestors(father)[:-1])
	]

	return sorted(maximal, key=lambda node: space.leaf_range(node)[0])


def build_balanced_set(w, father, stopped_union, threshold):
	'''
	Pads stopped_union with a part of the rest of father until the average drops to threshold.

	Leaves are taken in ascending value order, the last one fractionally.
	Returns (balanced, remainder, filler) with remainder = father minus balanced.
	'''
	space = w.space
	first, count = space.leaf_range(father)
	h = space.leaf_measure

	try:
		assert len(stopped_union), 'empty stopped set'
		assert all(first <= leaf < first + count for leaf in stopped_union.leaves()), 'stopped set leaves the father'
		assert not exceeds(w.node_average(father), threshold), 'father average above threshold'
		assert not exceeds(threshold, stopped_union.average(w)), 'stopped set average below threshold'

	except AssertionError as e:
		raise TraceException(str(e)) from e

	excess = stopped_union.integral(w) - threshold * stopped_union.measure(space)
	filler = {}

	if exceeds(stopped_union.average(w), threshold):
		candidates = sorted(
			(w.leaf_values[leaf], leaf, 1.0 - stopped_union.portions.get(leaf, 0.0))
			for leaf in range(first, first + count)
		)

		for value, leaf, available in candidates:
			if excess <= 0:
				break
			if available <= 0:
				continue
			if value >= threshold:
				# father average equal to the threshold up to rounding
				if excess <= TOLERANCE * threshold * space.node_measure(father):
					break
				raise TraceException('cannot bring the average of %s down to %r' % (father, threshold))

			drop = (threshold - value) * available * h
			if drop <= excess:
				filler[leaf] = available
				excess -= drop
			else:
				filler[leaf] = excess / ((threshold - value) * h)
				excess = 0.0

	filler = FractionalSet(filler)
	balanced = FractionalSet({
		leaf: stopped_union.portions.get(leaf, 0.0) + filler.portions.get(leaf, 0.0)
		for leaf in set(stopped_union.portions) | set(filler.portions)
	})
	remainder = FractionalSet({
		leaf: 1.0 - balanced.portions.get(leaf, 0.0)
		for leaf in range(first, first + count)
	})

	LOGGER.debug('balanced %s: filler %r, residual %r', father, filler.portions, excess)
	return balanced, remainder, filler


def build_top_set(w, t):
	'''
	A set of measure t carrying the t-largest values, at most one leaf fractional.

	Its average is the prefix average of the rearrangement at t.
	'''
	if not 0 < t <= 1:
		raise TraceException('t must lie in (0, 1]: %r' % (t, ))

	n = w.space.n_leaves
	order = np.argsort(-w.leaf_values, kind='stable')
	need = t * n

	full = int(math.floor(need))
	rest = need - full
	if 1 - rest < TOLERANCE:
		full, rest = full + 1, 0.0
	full = min(full, n)

	portions = {int(leaf): 1.0 for leaf in order[:full]}
	if full < n and rest > TOLERANCE:
		portions[int(order[full])] = rest

	return FractionalSet(portions)


@dataclass(frozen=True)
class LemmaReport:
	average: float
	other_average: float
	equal_averages: bool
	bounded_outside: bool
	ordered: bool
	hypotheses_hold: bool
	lhs: float
	rhs: float
	conclusion_holds: bool

	def to_dict(self):
		return {
			'average': self.average,
			'other_average': self.other_average,
			'equal_averages': self.equal_averages,
			'bounded_outside': self.bounded_outside,
			'ordered': self.ordered,
			'hypotheses_hold': self.hypotheses_hold,
			'lhs': self.lhs,
			'rhs': self.rhs,
			'conclusion_holds': self.conclusion_holds,
		}


def check_exchange_lemma(w, top, other, p, tolerance=BALANCE_TOLERANCE):
	'''
	Checks that swapping part of `top` for smaller values at the same average
	raises the p-th power average.

	Hypotheses: equal averages A; phi <= A on every leaf with a part outside
	top & other; values carried by other - top never exceed values carried
	by top. Conclusion: avg(phi**p, top) <= avg(phi**p, other).
	'''
	if not len(top) or not len(other):
		raise TraceException('both sets must be non-empty')

	average = top.average(w)
	other_average = other.average(w)
	equal_averages = abs(average - other_average) <= tolerance * max(average, other_average)

	outside = np.ones(w.space.n_leaves, dtype=bool)
	for leaf, fraction in top.intersection(other).portions.items():
		if fraction >= 1:
			outside[leaf] = False
	bounded_outside = not outside.any() or w.leaf_values[outside].max() <= average * (1 + tolerance)

	swapped_in = other.difference(top)
	ordered = not len(swapped_in) or (
		swapped_in.carried_values(w).max() <= top.carried_values(w).min() * (1 + tolerance)
	)

	lhs = top.average(w, p)
	rhs = other.average(w, p)
	conclusion_holds = lhs <= rhs + TOLERANCE * max(lhs, rhs)

	hypotheses_hold = bool(equal_averages and bounded_outside and ordered)
	if not hypotheses_hold:
		LOGGER.info('exchange hypotheses fail: equal=%s bounded=%s ordered=%s', equal_averages, bounded_outside, ordered)

	return LemmaReport(
		average,
		other_average,
		bool(equal_averages),
		bool(bounded_outside),
		bool(ordered),
		hypotheses_hold,
		lhs,
		rhs,
		bool(conclusion_holds),
	)


@dataclass
class FatherRecord:
	father: NodeId
	stopped: list
	stopped_union: FractionalSet
	filler: FractionalSet
	balanced: FractionalSet
	remainder: FractionalSet
	measures: dict = field(default_factory=dict)
	averages: dict = field(default_factory=dict)

	def to_dict(self):
		return {
			'father': list(self.father),
			'stopped': [list(node) for node in self.stopped],
			'stopped_union': self.stopped_union.to_dict(),
			'filler': self.filler.to_dict(),
			'balanced': self.balanced.to_dict(),
			'remainder': self.remainder.to_dict(),
			'measures': self.measures,
			'averages': self.averages,
		}


@dataclass
class Decomposition:
	threshold: float
	stopped: list
	fathers: list
	records: list
	exceedance: FractionalSet
	balanced: FractionalSet
	father_union: FractionalSet


def decompose(w, threshold):
	'''
	Stopped nodes, their maximal fathers and one balanced set per father.
	'''
	space = w.space
	stopped = stopping_decomposition(w, threshold)
	exceedance = FractionalSet.from_nodes(space, stopped)

	if not stopped:
		return Decomposition(threshold, [], [], [], exceedance, FractionalSet(), FractionalSet())

	fathers = select_fathers(space, stopped)
	records = []
	balanced = FractionalSet()

	groups = {father: [] for father in fathers}
	for node in stopped:
		owner = next(ancestor for ancestor in space.ancestors(space.father(node)) if ancestor in groups)
		groups[owner].append(node)

	for father in fathers:
		inside = groups[father]
		stopped_union = FractionalSet.from_nodes(space, inside)
		piece, remainder, filler = build_balanced_set(w, father, stopped_union, threshold)

		records.append(FatherRecord(
			father,
			inside,
			stopped_union,
			filler,
			piece,
			remainder,
			measures={
				'father': space.node_measure(father),
				'stopped_union': stopped_union.measure(space),
				'filler': filler.measure(space),
				'balanced': piece.measure(space),
				'remainder': remainder.measure(space),
			},
			averages={
				'father': w.node_average(father),
				'stopped_union': stopped_union.average(w),
				'balanced': piece.average(w),
			},
		))
		balanced = balanced.union(piece)

	LOGGER.info('threshold %r: %d stopped nodes under %d fathers', threshold, len(stopped), len(fathers))
	return Decomposition(
		threshold,
		stopped,
		fathers,
		records,
		exceedance,
		balanced,
		FractionalSet.from_nodes(space, fathers),
	)


@dataclass
class DecompositionTrace:
	t: float
	p: float
	k: int
	c: float
	threshold: float
	prefix_power_average: float
	bound_factor: float
	degenerate: bool
	decomposition: Decomposition
	top_set: FractionalSet
	null_set: FractionalSet
	lemma: LemmaReport = None
	assertions: list = field(default_factory=list)

	@property
	def holds(self):
		return all(assertion.holds for assertion in self.assertions)

	def failed(self):
		return [assertion for assertion in self.assertions if not assertion.holds]

	def to_dict(self):
		dec = self.decomposition
		return {
			't': self.t,
			'p': self.p,
			'k': self.k,
			'c': self.c,
			'threshold': self.threshold,
			'prefix_power_average': self.prefix_power_average,
			'bound_factor': self.bound_factor,
			'degenerate': self.degenerate,
			'exceedance': dec.exceedance.to_dict(),
			'stopped': [list(node) for node in dec.stopped],
			'fathers': [list(node) for node in dec.fathers],
			'records': [record.to_dict() for record in dec.records],
			'balanced': dec.balanced.to_dict(),
			'father_union': dec.father_union.to_dict(),
			'null_set': self.null_set.to_dict(),
			'top_set': self.top_set.to_dict(),
			'lemma': self.lemma.to_dict() if self.lemma else None,
			'assertions': [assertion.to_dict() for assertion in self.assertions],
			'holds': self.holds,
		}


def _father_assertions(w, record, threshold, p, c):
	space = w.space
	father = record.father
	father_measure = space.node_measure(father)
	father_integral = w.node_integral(father)
	piece_measure = record.balanced.measure(space)
	piece_integral = record.balanced.integral(w)
	remainder_power = record.remainder.integral(w, p) if len(record.remainder) else 0.0

	return [
		check('father_average_at_most_threshold', record.averages['father'], threshold, '<='),
		check('stopped_average_above_threshold', record.averages['stopped_union'], threshold, '>'),
		check('stopped_measure_lower', father_measure / space.k, record.measures['stopped_union'], '<='),
		check('stopped_measure_upper', record.measures['stopped_union'], father_measure, '<'),
		check('balanced_piece_average', record.averages['balanced'], threshold, '==', BALANCE_TOLERANCE),
		check(
			'remainder_holder_bound',
			remainder_power,
			father_measure ** (1 - p) * father_integral ** p - piece_measure ** (1 - p) * piece_integral ** p,
			'>=',
			scale=father_measure ** (1 - p) * father_integral ** p,
		),
		check(
			'piece_power_bound',
			w.node_integral(father, p) - remainder_power,
			(c - 1) * father_measure ** (1 - p) * father_integral ** p + piece_measure * threshold ** p,
			'<=',
		),
	]


def trace_prefix_bound(w, p, t):
	'''
	Runs the stopping-time argument behind

		(1/t) int_0^t (phi*)**p <= (k c - k + 1) ((1/t) int_0^t phi*)**p

	for one weight, exponent and t, recording every intermediate inequality.
	'''
	if not (math.isfinite(p) and p > 1):
		raise TraceException('exponent must be a finite real above 1: %r' % (p, ))
	if not 0 < t <= 1:
		raise TraceException('t must lie in (0, 1]: %r' % (t, ))
	if not (w.leaf_values > 0).any():
		raise TraceException('weight is identically zero')

	space = w.space
	k = space.k
	c = w.dyadic_rhi_constant(p).constant
	h = rearrangement(w)
	threshold = prefix_average(h, t)
	prefix_power = prefix_average(h, t, p)
	bound_factor = k * (c - 1) + 1

	dec = decompose(w, threshold)
	top = build_top_set(w, t)
	trace = DecompositionTrace(
		t, p, k, c, threshold, prefix_power, bound_factor, not dec.stopped, dec, top, FractionalSet(),
	)

	if trace.degenerate:
		# M phi <= A_t everywhere, hence phi* <= A_t on (0, t]
		LOGGER.info('t=%r: nothing exceeds %r, direct bound', t, threshold)
		trace.assertions = [
			check('rearrangement_at_most_threshold', float(h.values[0]), threshold, '<='),
			check('prefix_power_at_most_threshold_power', prefix_power, threshold ** p, '<='),
			check('prefix_bound', prefix_power, bound_factor * threshold ** p, '<='),
		]
		return trace

	assertions = []
	for record in dec.records:
		assertions.extend(_father_assertions(w, record, threshold, p, c))

	balanced = dec.balanced
	balanced_measure = balanced.measure(space)
	balanced_power = balanced.average(w, p)
	father_measure = dec.father_union.measure(space)

	trace.lemma = check_exchange_lemma(w, top, balanced, p)
	failed_hypotheses = [
		trace.lemma.equal_averages,
		trace.lemma.bounded_outside,
		trace.lemma.ordered,
	].count(False)

	assertions.extend([
		check('balanced_average', balanced.average(w), threshold, '==', BALANCE_TOLERANCE),
		check('balanced_measure_within_t', balanced_measure, t, '<='),
		check('exceedance_inside_balanced', dec.exceedance.difference(balanced).measure(space), 0.0, '<=', scale=t),
		check('exchange_hypotheses', failed_hypotheses, 0, '=='),
		check('top_set_power_average', prefix_power, balanced_power, '<='),
		check(
			'balanced_power_bound',
			balanced_power,
			((c - 1) * father_measure / balanced_measure + 1) * threshold ** p,
			'<=',
		),
		check('father_measure_bound', father_measure, k * balanced_measure, '<='),
		check('final_bound', balanced_power, bound_factor * threshold ** p, '<='),
		check('prefix_bound', prefix_power, bound_factor * threshold ** p, '<='),
	])
	trace.assertions = assertions

	LOGGER.info('t=%r, p=%r: %d assertions, holds=%s', t, p, len(assertions), trace.holds)
	return trace
