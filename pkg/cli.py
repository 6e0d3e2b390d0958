import argparse
import json
import logging
import math
import sys

from dataclasses import asdict, dataclass, field, fields

import numpy as np
from jinja2 import Template

from db import DB_FILE, DEFAULT_VERIFY_PARAMS, latest_verify_params, save_counterexample, save_run_result, save_verify_params
from db import setupdb
from decomposition import trace_prefix_bound
from engine import SUITE_ALIASES, SUITES, Engine
from exponents import effective_constant, improvement_range, p0_solve
from rearrange import prefix_muckenhoupt_constant, prefix_rhi_constant, ratio_curve, rearrangement, write_curve
from tree import RhiException, TreeSpace
from weight import dump_weight, gen_constant, gen_power, gen_random, gen_two_value, load_weight

LOGGER = logging.getLogger(__name__)

GENERATORS = ('constant', 'two-value', 'random', 'power')

# slack when comparing a computed constant against its bound
BOUND_TOLERANCE = 1e-9

SUMMARIES = {
	'gen': '''{{ kind }} weight: k={{ w.k }}, depth={{ w.depth }}, {{ w.space.n_leaves }} leaves, integral {{ '%.17g' | format(w.integral()) }}
wrote {{ out }}''',

	'analyze': '''weight: k={{ r.k }}, depth={{ r.depth }}, p={{ r.p }}
dyadic RHI constant:  {{ '%.17g' | format(r.dyadic.constant) }} at node {{ r.dyadic.witness }}
prefix RHI constant:  {{ '%.17g' | format(r.prefix.constant) }} at t={{ '%.17g' | format(r.prefix.witness_t) }}
bound k*c - k + 1:    {{ '%.17g' | format(r.bound) }} (margin {{ '%.17g' | format(r.margin) }}){% if not r.holds %} VIOLATED{% endif %}
p0 for c:             {{ r.p0_dyadic }}
p0 for the bound:     {{ r.p0_bound }}
{%- if r.muckenhoupt %}
dyadic Muckenhoupt:   {{ '%.17g' | format(r.muckenhoupt.dyadic.constant) }} at node {{ r.muckenhoupt.dyadic.witness }}
prefix Muckenhoupt:   {{ '%.17g' | format(r.muckenhoupt.prefix.constant) }} (bound {{ '%.17g' | format(r.muckenhoupt.bound) }})
{%- endif %}''',

	'verify': '''{{ r.suite }}: {{ r.passed }} passed, {{ r.failed }} failed{% if r.skipped %}, {{ r.skipped }} skipped{% endif %} (count={{ r.count }}, seed={{ r.seed }})
{%- if r.counterexample %}
first counterexample: case {{ r.counterexample.index }}, k={{ r.counterexample.k }}, depth={{ r.counterexample.depth }}, p={{ r.counterexample.p }}
{%- endif %}''',

	'trace': '''t={{ tr.t }}, p={{ tr.p }}, threshold {{ '%.17g' | format(tr.threshold) }}, c={{ '%.17g' | format(tr.c) }}{% if tr.degenerate %} (degenerate){% endif %}
{{ tr.decomposition.stopped | length }} stopped nodes, {{ tr.decomposition.fathers | length }} fathers
{%- for a in tr.assertions %}
{{ 'ok  ' if a.holds else 'FAIL' }} {{ a.name }}: {{ '%.17g' | format(a.lhs) }} {{ a.relation }} {{ '%.17g' | format(a.rhs) }}
{%- endfor %}''',

	'p0': '''p={{ r.p }}, C={{ '%.17g' | format(r.C) }}: p0 = {{ 'infinity' if not r.finite else '%.17g' | format(r.p0) }} (residual {{ '%.3g' | format(r.residual) }})''',

	'curve': '''{{ n }} samples of the prefix ratio, max {{ '%.17g' | format(peak) }}
wrote {{ out }}''',
}


class ConfigException(RhiException):
	pass


@dataclass
class RunConfig:
	command: str
	kind: str = None
	file: str = None
	out: str = None
	k: int = 2
	depth: int = 4
	p: float = 2.0
	t: float = None
	c: float = None
	alpha: float = None
	value: float = 1.0
	high: float = 2.0
	low: float = 1.0
	share: float = 0.5
	seed: int = None
	min_value: float = 1e-3
	max_value: float = 1e3
	count: int = None
	k_list: list = field(default_factory=lambda: [2, 4, 8])
	p_list: list = field(default_factory=lambda: [1.5, 2.0, 3.0])
	samples: int = 100
	workers: int = 4
	tolerance: float = 1e-9
	save_params: bool = False
	method: str = 'closed'
	db: str = None

	def validate(self):
		try:
			assert self.k >= 2, 'k must be at least 2: %r' % (self.k, )
			assert self.depth >= 0, 'depth must be non-negative: %r' % (self.depth, )
			assert math.isfinite(self.p) and self.p > 1, 'p must be a finite real above 1: %r' % (self.p, )

			if self.command == 'gen' and self.kind == 'power':
				assert self.alpha is not None and 0 < self.alpha < 1, 'alpha must lie in (0, 1): %r' % (self.alpha, )
			if self.command == 'trace':
				assert self.t is not None and 0 < self.t <= 1, 't must lie in (0, 1]: %r' % (self.t, )
			if self.command == 'p0':
				assert self.c is not None and math.isfinite(self.c) and self.c >= 1, 'c must be a real of at least 1: %r' % (self.c, )
			if self.command == 'verify':
				assert self.count >= 1, 'count must be at least 1: %r' % (self.count, )
				assert self.depth >= 1, 'depth must be at least 1: %r' % (self.depth, )
				assert all(k >= 2 for k in self.k_list), 'k values must be at least 2: %r' % (self.k_list, )
				assert all(p > 1 for p in self.p_list), 'p values must be above 1: %r' % (self.p_list, )
				assert self.workers >= 1, 'need at least one worker: %r' % (self.workers, )
				assert math.isfinite(self.tolerance) and self.tolerance >= 0, 'tolerance must be a non-negative real: %r' % (self.tolerance, )
				assert self.db or not self.save_params, 'storing verify defaults needs a ledger (--db)'
			if self.command == 'curve':
				assert self.samples >= 2, 'samples must be at least 2: %r' % (self.samples, )

		except AssertionError as e:
			raise ConfigException(str(e)) from e

		return self

	def to_dict(self):
		return asdict(self)


def jsonable(obj):
	'''
	Converts a report into plain JSON types, infinities written as strings.
	'''
	if isinstance(obj, dict):
		return {str(key): jsonable(value) for key, value in obj.items()}
	if isinstance(obj, (list, tuple)):
		return [jsonable(value) for value in obj]
	if isinstance(obj, (bool, np.bool_)):
		return bool(obj)
	if isinstance(obj, (int, np.integer)):
		return int(obj)
	if isinstance(obj, (float, np.floating)):
		if math.isinf(obj):
			return 'infinity' if obj > 0 else '-infinity'
		return float(obj)

	return obj


def write_document(config, result, path):
	document = {'config': config.to_dict(), 'result': result}
	with open(path, 'w') as f:
		json.dump(jsonable(document), f, indent=2, allow_nan=False)
		f.write('\n')

	LOGGER.info('wrote report to %s', path)


def summary(name, **kwargs):
	print(Template(SUMMARIES[name]).render(**kwargs))


def cmd_gen(config):
	space = TreeSpace(config.k, config.depth)
	if config.kind == 'constant':
		w = gen_constant(space, config.value)
	elif config.kind == 'two-value':
		w = gen_two_value(space, config.high, config.low, config.share)
	elif config.kind == 'random':
		w = gen_random(space, config.seed or 0, config.min_value, config.max_value)
	else:
		w = gen_power(space, config.alpha)

	dump_weight(w, config.out)
	summary('gen', kind=config.kind, w=w, out=config.out)
	return 0


def analyze(w, p, method='closed'):
	k = w.k
	dyadic = w.dyadic_rhi_constant(p)
	h = rearrangement(w)
	prefix = prefix_rhi_constant(h, p, method)
	bound = effective_constant(dyadic.constant, k)

	report = {
		'k': k,
		'depth': w.depth,
		'p': p,
		'dyadic': dyadic,
		'prefix': prefix,
		'bound': bound,
		'margin': bound - prefix.constant,
		'holds': prefix.constant <= bound * (1 + BOUND_TOLERANCE),
		'p0_dyadic': p0_solve(p, dyadic.constant).to_dict()['p0'],
		'p0_bound': improvement_range(p, dyadic.constant, k).to_dict()['p0'],
		'muckenhoupt': None,
	}

	if (w.leaf_values > 0).all():
		muck = w.dyadic_muckenhoupt_constant(p)
		muck_prefix = prefix_muckenhoupt_constant(h, p, method)
		muck_bound = effective_constant(muck.constant, k)
		report['muckenhoupt'] = {
			'dyadic': muck,
			'prefix': muck_prefix,
			'bound': muck_bound,
			'holds': muck_prefix.constant <= muck_bound * (1 + BOUND_TOLERANCE),
		}

	return report


def _analysis_document(report):
	document = dict(report, dyadic=report['dyadic'].to_dict(), prefix=report['prefix'].to_dict())
	if report['muckenhoupt']:
		muck = report['muckenhoupt']
		document['muckenhoupt'] = dict(muck, dyadic=muck['dyadic'].to_dict(), prefix=muck['prefix'].to_dict())

	return document


def cmd_analyze(config):
	w = load_weight(config.file)
	report = analyze(w, config.p, config.method)

	if config.out:
		write_document(config, _analysis_document(report), config.out)

	summary('analyze', r=report)
	holds = report['holds'] and (report['muckenhoupt'] is None or report['muckenhoupt']['holds'])
	return 0 if holds else 1


def cmd_verify(config):
	engine = Engine(
		config.kind,
		config.count,
		config.seed,
		k_list=config.k_list,
		depth=config.depth,
		p_list=config.p_list,
		workers=config.workers,
		tolerance=config.tolerance,
	)
	result = engine.run()

	if config.db:
		setupdb(config.db)
		run_id = save_run_result(
			'verify',
			jsonable(config.to_dict()),
			result.suite,
			result.count,
			result.seed,
			result.passed,
			result.failed,
			db_file=config.db,
		)
		if result.counterexample:
			save_counterexample(run_id, jsonable(result.counterexample), db_file=config.db)
		if config.save_params:
			save_verify_params(config.count, config.seed, db_file=config.db)
			LOGGER.info('stored count=%r, seed=%r as verify defaults', config.count, config.seed)

	if config.out:
		write_document(config, result.to_dict(), config.out)

	summary('verify', r=result)
	return 0 if result.ok else 1


def cmd_trace(config):
	w = load_weight(config.file)
	trace = trace_prefix_bound(w, config.p, config.t)

	if config.out:
		write_document(config, trace.to_dict(), config.out)

	summary('trace', tr=trace)
	return 0 if trace.holds else 1


def cmd_p0(config):
	result = improvement_range(config.p, config.c, config.k)

	if config.out:
		write_document(config, dict(result.to_dict(), c=config.c, k=config.k), config.out)

	summary('p0', r=result)
	return 0


def cmd_curve(config):
	h = rearrangement(load_weight(config.file))
	curve = ratio_curve(h, config.p, config.samples)
	write_curve(curve, config.out)

	summary('curve', n=len(curve), peak=max(ratio for _, ratio in curve), out=config.out)
	return 0


def cmd_report(config):
	from web.runs import render_runs

	db_file = config.db or DB_FILE
	setupdb(db_file)
	html = render_runs(db_file)

	if config.out:
		with open(config.out, 'w') as f:
			f.write(html)
		LOGGER.info('wrote ledger page to %s', config.out)
	else:
		print(html)

	return 0


COMMANDS = {
	'gen': cmd_gen,
	'analyze': cmd_analyze,
	'verify': cmd_verify,
	'trace': cmd_trace,
	'p0': cmd_p0,
	'curve': cmd_curve,
	'report': cmd_report,
}


def build_parser():
	parser = argparse.ArgumentParser(prog='rhitree', description='Reverse Hölder constants of weights on homogeneous trees.')
	parser.add_argument('-v', '--verbose', action='store_true')
	parser.add_argument('-q', '--quiet', action='store_true')
	commands = parser.add_subparsers(dest='command', required=True)

	gen = commands.add_parser('gen', help='write a weight file')
	gen.add_argument('kind', choices=GENERATORS)
	gen.add_argument('--k', type=int, default=2)
	gen.add_argument('--depth', type=int, default=4)
	gen.add_argument('--value', type=float, default=1.0)
	gen.add_argument('--high', type=float, default=2.0)
	gen.add_argument('--low', type=float, default=1.0)
	gen.add_argument('--share', type=float, default=0.5)
	gen.add_argument('--alpha', type=float)
	gen.add_argument('--seed', type=int, default=0)
	gen.add_argument('--min', dest='min_value', type=float, default=1e-3)
	gen.add_argument('--max', dest='max_value', type=float, default=1e3)
	gen.add_argument('--out', required=True)

	analyze = commands.add_parser('analyze', help='constants of a weight and its rearrangement')
	analyze.add_argument('file')
	analyze.add_argument('--p', type=float, default=2.0)
	analyze.add_argument('--method', choices=('closed', 'bounded'), default='closed')
	analyze.add_argument('--out')

	verify = commands.add_parser('verify', help='run a property suite on seeded random weights')
	verify.add_argument('kind', metavar='suite', choices=SUITES + tuple(SUITE_ALIASES))
	verify.add_argument('--count', type=int)
	verify.add_argument('--seed', type=int)
	verify.add_argument('--k-list', type=int, nargs='+', default=[2, 4, 8])
	verify.add_argument('--depth', type=int, default=6)
	verify.add_argument('--p-list', type=float, nargs='+', default=[1.5, 2.0, 3.0])
	verify.add_argument('--workers', type=int, default=4)
	verify.add_argument('--tolerance', type=float, default=1e-9)
	verify.add_argument('--db')
	verify.add_argument('--save-params', action='store_true', help='store count and seed as defaults in the ledger')
	verify.add_argument('--out')

	trace = commands.add_parser('trace', help='run the stopping-time argument for one t')
	trace.add_argument('file')
	trace.add_argument('--p', type=float, default=2.0)
	trace.add_argument('--t', type=float, required=True)
	trace.add_argument('--out')

	p0 = commands.add_parser('p0', help='self-improvement exponent for the bound k*c - k + 1')
	p0.add_argument('--p', type=float, required=True)
	p0.add_argument('--c', type=float, required=True)
	p0.add_argument('--k', type=int, default=2)
	p0.add_argument('--out')

	curve = commands.add_parser('curve', help='export the prefix ratio of the rearrangement as CSV')
	curve.add_argument('file')
	curve.add_argument('--p', type=float, default=2.0)
	curve.add_argument('--samples', type=int, default=100)
	curve.add_argument('--out', required=True)

	report = commands.add_parser('report', help='render the run ledger as HTML')
	report.add_argument('--db')
	report.add_argument('--out')

	return parser


def config_from_args(args):
	names = set(f.name for f in fields(RunConfig))
	config = RunConfig(**{key: value for key, value in vars(args).items() if key in names and value is not None})

	if config.command == 'verify' and (config.count is None or config.seed is None):
		count, seed = DEFAULT_VERIFY_PARAMS
		if config.db:
			setupdb(config.db)
			count, seed = latest_verify_params(config.db)
		if config.count is None:
			config.count = count
		if config.seed is None:
			config.seed = seed

	return config.validate()


def main(argv=None):
	parser = build_parser()
	try:
		args = parser.parse_args(argv)
	except SystemExit as e:
		return e.code or 0

	level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.INFO
	logging.basicConfig(level=level)

	try:
		config = config_from_args(args)
		LOGGER.debug('config: %r', config)
		return COMMANDS[config.command](config)

	except RhiException as e:
		LOGGER.error('%s', e)
		print('error: %s' % (e, ), file=sys.stderr)
		return 2


if __name__ == '__main__':
	sys.exit(main())
