import json
import sqlite3

DB_FILE = 'rhitree.db'

DEFAULT_VERIFY_PARAMS = (10, 0)

SCHEMA = [
'''
create table if not exists runs (
	id integer primary key,
	command text not null,
	suite text,
	count integer,
	seed integer,
	passed integer,
	failed integer,
	config text not null,
	cr_date timestamp default current_timestamp
);
''',
'''
create table if not exists counterexamples (
	id integer primary key,
	run_id integer not null references runs (id),
	document text not null,
	cr_date timestamp default current_timestamp
);
''',
'''
create table if not exists verify_params (
	count integer not null,
	seed integer not null,
	cr_date timestamp default current_timestamp
);
''',
]


def setupdb(db_file=DB_FILE):
	conn = sqlite3.connect(db_file)
	cur = conn.cursor()
	for statement in SCHEMA:
		cur.execute(statement)

	conn.commit()
	conn.close()


def latest_verify_params(db_file=DB_FILE):
	conn = sqlite3.connect(db_file)
	cur = conn.cursor()
	cur.execute('select count, seed from verify_params order by cr_date desc, rowid desc limit 1')

	params = cur.fetchone()

	conn.commit()
	conn.close()

	return params or DEFAULT_VERIFY_PARAMS


def save_verify_params(count, seed, db_file=DB_FILE):
	conn = sqlite3.connect(db_file)
	cur = conn.cursor()
	cur.execute('insert into verify_params (count, seed) values (?, ?)', (count, seed))

	conn.commit()
	conn.close()


def save_run_result(command, config, suite=None, count=None, seed=None, passed=None, failed=None, db_file=DB_FILE):
	conn = sqlite3.connect(db_file)
	cur = conn.cursor()
	cur.execute('''
	insert into runs
	(command, suite, count, seed, passed, failed, config)
	values (?, ?, ?, ?, ?, ?, ?)''', (
		command,
		suite,
		count,
		seed,
		passed,
		failed,
		json.dumps(config, sort_keys=True),
	))
	run_id = cur.lastrowid

	conn.commit()
	conn.close()

	return run_id


def save_counterexample(run_id, document, db_file=DB_FILE):
	conn = sqlite3.connect(db_file)
	cur = conn.cursor()
	cur.execute(
		'insert into counterexamples (run_id, document) values (?, ?)',
		(run_id, json.dumps(document, sort_keys=True)),
	)

	conn.commit()
	conn.close()


def recent_runs(limit=20, db_file=DB_FILE):
	conn = sqlite3.connect(db_file)
	cur = conn.cursor()
	cur.execute('''
		select runs.id, command, suite, count, seed, passed, failed, runs.cr_date, count(counterexamples.id)
		from runs
		left join counterexamples on counterexamples.run_id = runs.id
		group by runs.id
		order by runs.id desc
		limit ?
	''', (limit, ))

	rows = cur.fetchall()

	conn.commit()
	conn.close()

	return rows


if __name__ == '__main__':
	setupdb()
