import datetime as dt
import sqlite3
import sys

import markdown2
from jinja2 import Template

from db import recent_runs

HEADER = '''
# Verification runs

Each `verify` run draws `count` seeded random weights on k-homogeneous trees and checks one property per weight.

- **prefix-bound** (`theorem1`): the rearrangement satisfies the prefix reverse Hölder inequality with constant `k*c - k + 1`
- **muckenhoupt**: the same bound for the Muckenhoupt constant
- **exchange** (`lemma`): trading part of a top set for smaller values at equal average raises the p-th power average
- **weaktype**: `mu(M phi > lambda) <= (1/lambda) int_{M phi > lambda} phi`
- **decomposition**: the full stopping-time argument, every inequality asserted

A run with failures stores its first counterexample.
'''

RECENT_RUNS = 50

SUITE_QUERY = '''
	select suite, sum(passed), sum(failed)
	from runs
	where command = 'verify'
	group by 1
	order by 1
'''

TEMPLATE = '''<html>
	<head>
		<style>
			table, th, td {
				border: 1px solid black;
			}
			.failed {
				color: red;
			}
		</style>
	</head>

	<body>
		{{ markdown }}

		<h2>Totals</h2>

		<table>
			<thead>
				<tr>
					<th>suite</th>
					<th>passed</th>
					<th>failed</th>
				</tr>
			</thead>

			<tbody>
				{% for suite, passed, failed in totals %}
					<tr>
						<td>{{ suite }}</td>
						<td>{{ passed }}</td>
						<td{% if failed %} class="failed"{% endif %}>{{ failed }}</td>
					</tr>
				{% endfor %}
			</tbody>
		</table>

		<h2>Recent runs</h2>

		<table>
			<thead>
				<tr>
					<th>id</th>
					<th>command</th>
					<th>suite</th>
					<th>count</th>
					<th>seed</th>
					<th>passed</th>
					<th>failed</th>
					<th>date</th>
					<th>counterexamples</th>
				</tr>
			</thead>

			<tbody>
				{% for run in runs %}
					<tr>
						{% for cell in run %}
							<td>{{ '' if cell is none else cell }}</td>
						{% endfor %}
					</tr>
				{% endfor %}
			</tbody>
		</table>

		<p>generated {{ now }}</p>
	</body>
</html>
'''


def render_runs(db_file):
	runs = recent_runs(RECENT_RUNS, db_file)

	conn = sqlite3.connect(db_file)
	cur = conn.cursor()
	cur.execute(SUITE_QUERY)
	totals = cur.fetchall()

	conn.commit()
	conn.close()

	return Template(TEMPLATE).render(
		markdown=markdown2.markdown(HEADER),
		runs=runs,
		totals=totals,
		now=str(dt.datetime.now()),
	)


def main():
	print(render_runs(sys.argv[1] if len(sys.argv) > 1 else 'rhitree.db'))


if __name__ == '__main__':
	main()
