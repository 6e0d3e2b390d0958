import logging

from typing import NamedTuple

LOGGER = logging.getLogger(__name__)


class RhiException(Exception):
	pass


class InvalidNode(RhiException):
	pass


class NodeId(NamedTuple):
	level: int
	index: int

	def __str__(self):
		return '(%d,%d)' % (self.level, self.index)


ROOT = NodeId(0, 0)


class TreeSpace():
	'''
	The probability space (X, mu) cut into a k-homogeneous tree of finite depth.

	Every node splits into k children of equal measure, so only k and the depth
	matter: node (level, index) owns the contiguous leaf block
	[index * k**(depth - level), (index + 1) * k**(depth - level)).
	'''

	def __init__(self, k, depth):
		try:
			assert isinstance(k, int) and not isinstance(k, bool), 'k must be an integer: %r' % (k, )
			assert isinstance(depth, int) and not isinstance(depth, bool), 'depth must be an integer: %r' % (depth, )
			assert k >= 2, 'k must be at least 2: %r' % (k, )
			assert depth >= 0, 'depth must be non-negative: %r' % (depth, )

		except AssertionError as e:
			raise InvalidNode(str(e)) from e

		self.k = k
		self.depth = depth

	@property
	def n_leaves(self):
		return self.k ** self.depth

	@property
	def leaf_measure(self):
		return float(self.k) ** -self.depth

	def level_size(self, level):
		return self.k ** level

	def validate(self, node):
		try:
			level, index = node
			assert 0 <= level <= self.depth, 'level out of range: %r' % (node, )
			assert 0 <= index < self.k ** level, 'index out of range: %r' % (node, )

		except (AssertionError, TypeError, ValueError) as e:
			raise InvalidNode('invalid node %r for k=%d, depth=%d' % (node, self.k, self.depth)) from e

		return NodeId(level, index)

	def is_leaf(self, node):
		return self.validate(node).level == self.depth

	def node_measure(self, node):
		node = self.validate(node)
		return float(self.k) ** -node.level

	def children(self, node):
		node = self.validate(node)
		if node.level == self.depth:
			raise InvalidNode('leaf %s has no children' % (node, ))

		return [
			NodeId(node.level + 1, self.k * node.index + j)
			for j in range(self.k)
		]

	def father(self, node):
		node = self.validate(node)
		if node.level == 0:
			raise InvalidNode('the root has no father')

		return NodeId(node.level - 1, node.index // self.k)

	def leaf_range(self, node):
		node = self.validate(node)
		count = self.k ** (self.depth - node.level)
		return node.index * count, count

	def leaf_node(self, leaf):
		return self.validate((self.depth, leaf))

	def ancestors(self, node):
		'''
		Chain from the root down to node, node included.
		'''
		node = self.validate(node)
		chain = [node]
		while chain[-1].level > 0:
			chain.append(self.father(chain[-1]))

		return chain[::-1]

	def contains(self, outer, inner):
		outer = self.validate(outer)
		inner = self.validate(inner)
		if outer.level > inner.level:
			return False

		return inner.index // self.k ** (inner.level - outer.level) == outer.index

	def level_nodes(self, level):
		if not 0 <= level <= self.depth:
			raise InvalidNode('level out of range: %r' % (level, ))

		return [NodeId(level, index) for index in range(self.k ** level)]

	def nodes(self):
		for level in range(self.depth + 1):
			yield from self.level_nodes(level)

	def __eq__(self, other):
		return isinstance(other, TreeSpace) and (self.k, self.depth) == (other.k, other.depth)

	def __hash__(self):
		return hash((self.k, self.depth))

	def __repr__(self):
		return '%s(k=%d, depth=%d)' % (self.__class__.__name__, self.k, self.depth)
