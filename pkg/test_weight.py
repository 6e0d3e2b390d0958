import json
import math

import numpy as np
import pytest

from tree import ROOT, TreeSpace
from weight import InvalidWeight, dump_weight, exceeds, from_dict, from_leaves, gen_constant, gen_power, gen_random
from weight import gen_two_value, load_weight


def brute_force_rhi(w, p):
	'''
	Enumerates nodes one by one from their leaf blocks.
	'''
	space = w.space
	best, witness = -math.inf, None
	for node in space.nodes():
		first, count = space.leaf_range(node)
		values = [float(x) for x in w.leaf_values[first:first + count]]
		plain = sum(values) / count
		if plain <= 0:
			continue

		ratio = sum(x ** p for x in values) / count / plain ** p
		if ratio > best * (1 + 1e-12):
			best, witness = ratio, node

	return best, witness


@pytest.mark.parametrize('k, depth, values, integral', [
	[2, 1, [1, 3], 2],
	[2, 2, [8, 2, 1, 1], 3],
	[2, 0, [5], 5],
])
def test_from_leaves(k, depth, values, integral):
	w = from_leaves(k, depth, values)
	assert w.integral() == pytest.approx(integral)
	assert w.prefix_sums[-1] == pytest.approx(integral)
	assert (np.diff(w.prefix_sums) >= 0).all()


@pytest.mark.parametrize('values', [
	[1, 2, 3],
	[1, -1],
	[1, math.inf],
	[1, math.nan],
])
def test_from_leaves_errors(values):
	with pytest.raises(InvalidWeight):
		from_leaves(2, 1, values)


def test_node_average():
	w = from_leaves(2, 1, [1, 3])
	assert w.node_average(ROOT) == pytest.approx(2)
	assert w.node_average(ROOT, 2) == pytest.approx(5)

	w = from_leaves(2, 2, [8, 2, 1, 1])
	assert w.node_average((1, 0)) == pytest.approx(5)
	assert w.node_average((2, 0)) == 8

	# negative exponent needs positive values
	w = from_leaves(2, 1, [0, 1])
	with pytest.raises(InvalidWeight):
		w.node_average(ROOT, -1)
	assert w.node_average((1, 1), -1) == 1


@pytest.mark.parametrize('values, p, constant, witness', [
	[[2, 2, 2, 2], 2, 1, (0, 0)],
	[[1, 3], 2, 1.25, (0, 0)],
	[[8, 2, 1, 1], 2, 35 / 18, (0, 0)],
	[[0, 0, 1, 3], 2, 2.5, (0, 0)],
])
def test_dyadic_rhi_constant(values, p, constant, witness):
	w = from_leaves(2, int(math.log2(len(values))), values)
	report = w.dyadic_rhi_constant(p)
	assert report.constant == pytest.approx(constant, rel=1e-12)
	assert report.witness == witness


def test_dyadic_rhi_constant_errors():
	with pytest.raises(InvalidWeight):
		from_leaves(2, 1, [0, 0]).dyadic_rhi_constant(2)

	with pytest.raises(InvalidWeight):
		from_leaves(2, 1, [1, 3]).dyadic_rhi_constant(1)


@pytest.mark.parametrize('values, p, constant', [
	[[5, 5], 2, 1],
	[[1, 3], 2, 4 / 3],
	[[1, 1], 3, 1],
])
def test_dyadic_muckenhoupt_constant(values, p, constant):
	report = from_leaves(2, 1, values).dyadic_muckenhoupt_constant(p)
	assert report.constant == pytest.approx(constant, rel=1e-12)


def test_dyadic_muckenhoupt_zero():
	with pytest.raises(InvalidWeight):
		from_leaves(2, 1, [0, 1]).dyadic_muckenhoupt_constant(2)


@pytest.mark.parametrize('values, maximal', [
	[[1, 3], [2, 3]],
	[[8, 2, 1, 1], [8, 5, 3, 3]],
	[[4, 4, 4, 4], [4, 4, 4, 4]],
])
def test_maximal_function(values, maximal):
	w = from_leaves(2, int(math.log2(len(values))), values)
	assert w.maximal_function() == pytest.approx(maximal)


@pytest.mark.parametrize('values, lam, lhs, rhs', [
	[[1, 3], 2.5, 0.5, 0.6],
	[[1, 3], 10, 0, 0],
	[[8, 2, 1, 1], 4, 0.5, 0.625],
])
def test_weak_type_check(values, lam, lhs, rhs):
	w = from_leaves(2, int(math.log2(len(values))), values)
	report = w.weak_type_check(lam)
	assert report.lhs == pytest.approx(lhs)
	assert report.rhs == pytest.approx(rhs)
	assert report.holds


def test_weak_type_check_lambda():
	with pytest.raises(InvalidWeight):
		from_leaves(2, 1, [1, 3]).weak_type_check(0)


@pytest.mark.parametrize('seed', range(20))
def test_random_properties(seed):
	rng = np.random.default_rng(seed)
	k = int(rng.choice([2, 3, 4]))
	depth = int(rng.integers(1, 4))
	w = gen_random(TreeSpace(k, depth), seed)
	p = float(rng.choice([1.5, 2.0, 3.0]))
	lam = float(rng.uniform(0.1, 10))

	# agrees with enumerating every node
	report = w.dyadic_rhi_constant(p)
	constant, witness = brute_force_rhi(w, p)
	assert report.constant == pytest.approx(constant, rel=1e-12)
	assert report.witness == witness
	assert report.constant >= 1

	# scale invariance
	scaled = w.scaled(lam).dyadic_rhi_constant(p)
	assert scaled.constant == pytest.approx(report.constant, rel=1e-10)

	# homogeneity of the maximal function
	assert w.scaled(lam).maximal_function() == pytest.approx(lam * w.maximal_function(), rel=1e-12)

	assert w.dyadic_muckenhoupt_constant(p).constant >= 1 - 1e-12

	for level in np.geomspace(1e-3, 1e3, 12):
		assert w.weak_type_check(float(level)).holds


def test_gen_power():
	w = gen_power(TreeSpace(2, 10), 0.25)
	assert w.space.n_leaves == 1024
	assert w.integral() == pytest.approx(4 / 3, rel=1e-12)

	# cell averages of a decreasing function
	assert (np.diff(w.leaf_values) < 0).all()

	with pytest.raises(InvalidWeight):
		gen_power(TreeSpace(2, 3), 1)


def test_power_weight_depth():
	constants = [gen_power(TreeSpace(2, depth), 0.25).dyadic_rhi_constant(2).constant for depth in range(1, 21)]

	assert all(b >= a * (1 - 1e-12) for a, b in zip(constants, constants[1:]))
	assert constants[-1] == pytest.approx(1.125, rel=0.02)
	assert constants[-1] <= 1.125 * (1 + 1e-12)


def test_gen_random():
	space = TreeSpace(2, 5)
	w = gen_random(space, 7)
	assert np.array_equal(w.leaf_values, gen_random(space, 7).leaf_values)
	assert not np.array_equal(w.leaf_values, gen_random(space, 8).leaf_values)
	assert w.leaf_values.min() >= 1e-3
	assert w.leaf_values.max() <= 1e3

	assert gen_random(space, 1, 2, 2).is_constant()

	with pytest.raises(InvalidWeight):
		gen_random(space, 1, 3, 2)

	with pytest.raises(InvalidWeight):
		gen_random(space, 1, 0, 2)


def test_gen_constant_two_value():
	space = TreeSpace(2, 3)
	w = gen_constant(space, 5)
	assert list(w.leaf_values) == [5] * 8
	assert w.dyadic_rhi_constant(2).constant == pytest.approx(1)

	w = gen_two_value(space, 3, 1, 0.25)
	assert list(w.leaf_values) == [3, 3, 1, 1, 1, 1, 1, 1]

	with pytest.raises(InvalidWeight):
		gen_constant(space, -1)


def test_exceeds():
	assert exceeds(2, 1)
	assert not exceeds(1, 1)
	assert not exceeds(1 + 1e-15, 1)
	assert not exceeds(1, 2)


def test_weight_file(tmp_path):
	path = tmp_path / 'w.json'
	w = from_leaves(2, 2, [8, 2, 1, 1])
	dump_weight(w, path)

	assert json.loads(path.read_text()) == {'k': 2, 'depth': 2, 'leaves': [8, 2, 1, 1]}
	assert list(load_weight(path).leaf_values) == [8, 2, 1, 1]


@pytest.mark.parametrize('document', [
	[1, 2],
	{'k': 2, 'leaves': [1, 2]},
	{'k': 2, 'depth': 1, 'leaves': [1, 'x']},
	{'k': 2, 'depth': 1, 'leaves': [1, 2, 3]},
	{'k': 2.5, 'depth': 1, 'leaves': [1, 2]},
	{'k': 1, 'depth': 1, 'leaves': [1]},
])
def test_from_dict_errors(document):
	with pytest.raises(InvalidWeight):
		from_dict(document)


def test_load_weight_errors(tmp_path):
	with pytest.raises(InvalidWeight):
		load_weight(tmp_path / 'missing.json')

	path = tmp_path / 'bad.json'
	path.write_text('{not json')
	with pytest.raises(InvalidWeight):
		load_weight(path)
