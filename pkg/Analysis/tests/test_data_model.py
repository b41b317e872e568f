'''
Tests for reaction-time ingestion and dataset construction.
'''
import numpy as np
import pytest

from conftest import listed_exclusions, make_row, requires_dataset, requires_exclusions, write_rows
from data_model.builder import (
	apply_exclusions, build_clustered_sample, build_model_dataset, records_frame, summarize_by_year
)
from data_model.config import EXCLUSION_COLUMNS, EXCLUSIONS_FILE, INPUT_FILE
from data_model.loader import load_csv, load_exclusions
from data_model.records import (
	ClusteredSample, Competition, Event, Gender, ModelDataset, Round
)
from data_model.utils import dataset_checksum
from errors import DataFormatError, EmptySelectionError, InsufficientClustersError, InvalidSampleError


def _records(tmp_path, rows):
	return load_csv(write_rows(tmp_path / 'rt.csv', rows))


def _pair(athlete, treatment_rt, control_rt, gender='men'):
	"""One athlete with a 2022 Worlds final and a 2019 Worlds final."""
	return [
		make_row(athlete_id=athlete, gender=gender, heat_id=f'W22-{gender}-F', rt_seconds=treatment_rt),
		make_row(athlete_id=athlete, gender=gender, competition='world2019', year=2019,
			heat_id=f'W19-{gender}-F', rt_seconds=control_rt),
	]


############
# load_csv #
############

def test_load_example_row(tmp_path):
	rows = [make_row(athlete_id='allen_d', event='hurdles110', heat_id='W22-110H-F', rt_seconds='0.101')]
	records = _records(tmp_path, rows)

	assert len(records) == 1
	record = records[0]
	assert record.athlete_id == 'allen_d'
	assert record.gender is Gender.MEN
	assert record.event is Event.HURDLES110
	assert record.competition == Competition('world', 2022)
	assert record.round is Round.FINAL
	assert record.rt_seconds == pytest.approx(0.101)
	assert record.dq is False
	assert record.line == 2


def test_load_empty_file(tmp_path):
	path = tmp_path / 'empty.csv'
	path.write_text('')
	assert load_csv(str(path)) == []


def test_load_header_only(tmp_path):
	assert _records(tmp_path, []) == []


def test_non_numeric_rt_names_the_row(tmp_path):
	rows = [make_row(), make_row(athlete_id='B', rt_seconds='abc')]
	with pytest.raises(DataFormatError) as excinfo:
		_records(tmp_path, rows)

	assert excinfo.value.line == 3
	assert excinfo.value.column == 'rt_seconds'
	assert 'line 3' in str(excinfo.value)


@pytest.mark.parametrize('column, value', [
	('gender', 'mixed'),
	('event', 'dash200'),
	('round', 'quarterfinal'),
	('competition', 'olympics2021'),
	('dq', 'maybe'),
	('year', 'twenty'),
])
def test_unknown_tokens_are_rejected(tmp_path, column, value):
	with pytest.raises(DataFormatError) as excinfo:
		_records(tmp_path, [make_row(**{column: value})])
	assert excinfo.value.column == column


def test_competition_year_must_agree(tmp_path):
	with pytest.raises(DataFormatError):
		_records(tmp_path, [make_row(competition='world2019', year=2022)])


def test_missing_header_column(tmp_path):
	path = tmp_path / 'bad.csv'
	path.write_text('athlete_id,gender\nA,men\n')
	with pytest.raises(DataFormatError) as excinfo:
		load_csv(str(path))
	assert excinfo.value.line == 1


def test_heat_must_be_consistent(tmp_path):
	rows = [make_row(), make_row(athlete_id='B', round='semifinal')]
	with pytest.raises(DataFormatError) as excinfo:
		_records(tmp_path, rows)
	assert excinfo.value.column == 'heat_id'


def test_negative_rt_is_kept_on_load(tmp_path):
	records = _records(tmp_path, [make_row(rt_seconds='-0.050', dq='true')])
	assert records[0].rt_seconds == pytest.approx(-0.05)


def test_missing_file():
	with pytest.raises(FileNotFoundError):
		load_csv('/nonexistent/reaction_times.csv')


def test_other_world_championships_parse():
	assert Competition.parse('world2017') == Competition('world', 2017)
	with pytest.raises(ValueError):
		Competition.parse('national2019')


##########################
# build_clustered_sample #
##########################

def test_clustered_sample_basic(tmp_path):
	rows = _pair('A', 0.140, 0.150) + _pair('B', 0.130, 0.160)
	sample = build_clustered_sample(_records(tmp_path, rows), 'world2022', 'world2019', gender='men')

	assert sample.n == 2
	assert sample.n_obs == 4
	assert sample.athlete_ids == ('A', 'B')
	assert sample.treatment.tolist() == [True, False, True, False]


def test_one_sided_athlete_is_dropped(tmp_path):
	rows = _pair('A', 0.140, 0.150) + _pair('B', 0.130, 0.160) + [
		make_row(athlete_id='C', heat_id='W22-men-F', rt_seconds=0.145),
	]
	sample = build_clustered_sample(_records(tmp_path, rows), 'world2022', 'world2019', gender='men')
	assert 'C' not in sample.athlete_ids
	assert sample.n == 2


def test_negative_rts_dropped_dq_kept(tmp_path):
	rows = _pair('A', 0.140, 0.150) + _pair('B', 0.130, 0.160) + [
		make_row(athlete_id='A', heat_id='W22-men-SF', round='semifinal', rt_seconds=-0.010, dq='true'),
		make_row(athlete_id='B', heat_id='W22-men-SF', round='semifinal', rt_seconds=0.099, dq='true'),
	]
	sample = build_clustered_sample(_records(tmp_path, rows), 'world2022', 'world2019', gender='men')

	assert np.all(sample.values > 0)
	assert sample.n_obs == 5
	assert 0.099 in sample.values.tolist()


def test_insufficient_clusters(tmp_path):
	rows = _pair('A', 0.140, 0.150) + [make_row(athlete_id='B', heat_id='W22-men-F')]
	with pytest.raises(InsufficientClustersError):
		build_clustered_sample(_records(tmp_path, rows), 'world2022', 'world2019', gender='men')


def test_empty_selection(tmp_path):
	rows = _pair('A', 0.140, 0.150) + _pair('B', 0.130, 0.160)
	with pytest.raises(EmptySelectionError):
		build_clustered_sample(_records(tmp_path, rows), 'world2022', 'world2023', gender='men')


def test_filters_must_be_disjoint(tmp_path):
	rows = _pair('A', 0.140, 0.150)
	with pytest.raises(ValueError):
		build_clustered_sample(_records(tmp_path, rows), 'world2022', ['world2022', 'world2019'], gender='men')


def test_pooled_genders(tmp_path):
	rows = (
		_pair('A', 0.140, 0.150) + _pair('B', 0.130, 0.160)
		+ _pair('W1', 0.150, 0.170, gender='women') + _pair('W2', 0.145, 0.180, gender='women')
	)
	records = _records(tmp_path, rows)

	men = build_clustered_sample(records, 'world2022', 'world2019', gender='men')
	pooled = build_clustered_sample(records, 'world2022', 'world2019', pool_genders=True)
	assert men.n == 2
	assert pooled.n == 4
	with pytest.raises(ValueError):
		build_clustered_sample(records, 'world2022', 'world2019')


def test_cluster_sizes_sum_to_total(synthetic_csv):
	records = load_csv(synthetic_csv)
	for treatment, control in [('world2022', 'national2022'), ('world2022', 'world2019'), ('world2022', 'world2023')]:
		sample = build_clustered_sample(records, treatment, control, gender='women')
		assert int(sample.m.sum()) == sample.n_obs
		assert len(sample.clusters) == sample.n


def test_random_record_sets_satisfy_invariants(tmp_path):
	rng = np.random.default_rng(11)
	for rep in range(20):
		rows = []
		for athlete in range(rng.integers(3, 9)):
			for competition, year in (('world2022', 2022), ('world2019', 2019)):
				for _ in range(rng.integers(0, 3)):
					rows.append(make_row(
						athlete_id=f'A{athlete}', competition=competition, year=year,
						heat_id=f'{competition}-F', rt_seconds=f'{rng.uniform(-0.02, 0.25):.3f}',
					))
		records = _records(tmp_path, rows)
		try:
			sample = build_clustered_sample(records, 'world2022', 'world2019', gender='men')
		except (InsufficientClustersError, EmptySelectionError):
			continue
		# construction itself validates; check the mixed-cluster property explicitly too
		for _, observations in sample.clusters:
			groups = {group for _, group in observations}
			assert groups == {'treatment', 'control'}
		assert np.all(sample.values > 0)


def test_clustered_sample_rejects_single_group_cluster():
	with pytest.raises(InvalidSampleError):
		ClusteredSample.from_clusters([
			('A', [(0.14, 'treatment'), (0.15, 'control')]),
			('B', [(0.13, 'treatment')]),
		])


def test_clustered_sample_is_read_only():
	sample = ClusteredSample.from_clusters([
		('A', [(0.14, 'treatment'), (0.15, 'control')]),
		('B', [(0.13, 'treatment'), (0.16, 'control')]),
	])
	with pytest.raises(ValueError):
		sample.values[0] = 1.0


#######################
# build_model_dataset #
#######################

def _model_rows():
	return [
		make_row(athlete_id='A', year=2019, competition='world2019', heat_id='W19-SF1', round='semifinal', rt_seconds=0.140),
		make_row(athlete_id='B', year=2019, competition='world2019', heat_id='W19-SF1', round='semifinal', rt_seconds=-0.010, dq='true'),
		make_row(athlete_id='C', year=2019, competition='world2019', heat_id='W19-F', rt_seconds=0.150),
		make_row(athlete_id='A', year=2019, competition='world2019', heat_id='W19-H1', round='heat', rt_seconds=0.160),
		make_row(athlete_id='A', heat_id='W22-F', rt_seconds=0.130),
		make_row(athlete_id='B', heat_id='W22-F', rt_seconds=0.099, dq='true'),
		make_row(athlete_id='A', year=2023, competition='world2023', heat_id='W23-F', rt_seconds=0.145),
		make_row(athlete_id='D', competition='national2022', heat_id='N22-F', rt_seconds=0.120),
		make_row(athlete_id='W', gender='women', heat_id='W22-WF', rt_seconds=0.170),
	]


def test_model_dataset_filters(tmp_path):
	records = _records(tmp_path, _model_rows())

	data = build_model_dataset(records, 'men')
	# heats, national meetings, negative times and women are out
	assert data.n == 5
	assert data.venue_years == (2019, 2022, 2023)
	assert data.heats_per_venue == {2019: 2, 2022: 1, 2023: 1}
	assert np.all(data.values > 0)

	assert build_model_dataset(records, 'men', include_2022=False).n == 3
	assert build_model_dataset(records, 'men', include_positive_dq=False).n == 4
	assert build_model_dataset(records, None).n == 6


def test_model_dataset_rounds(tmp_path):
	records = _records(tmp_path, _model_rows())
	data = build_model_dataset(records, 'men', rounds=['heat', 'semifinal', 'final'])
	assert data.n == 6


def test_model_dataset_is_idempotent(tmp_path):
	records = _records(tmp_path, _model_rows())
	first = build_model_dataset(records, 'men', include_2022=False)
	again = build_model_dataset(records, 'men', include_2022=False)
	assert first.values.tolist() == again.values.tolist()
	assert first.heat_keys == again.heat_keys


def test_model_dataset_empty_selection(tmp_path):
	records = _records(tmp_path, [make_row(competition='national2022', heat_id='N22-F')])
	with pytest.raises(EmptySelectionError):
		build_model_dataset(records, 'men')


def test_model_dataset_nesting():
	data = ModelDataset.from_arrays([0.1, 0.2, 0.3], [2019, 2019, 2022], ['H1', 'H2', 'H1'])
	# same heat_id in two years is two heats
	assert data.heat_count == 3
	assert data.heat_keys == ((2019, 'H1'), (2019, 'H2'), (2022, 'H1'))
	with pytest.raises(InvalidSampleError):
		ModelDataset(
			values=np.array([0.1, 0.2]), venue=np.array([0, 1]), heat=np.array([0, 0]),
			venue_years=(2019, 2022), heat_keys=((2019, 'H1'),), heat_venue=np.array([0]),
		)


def test_summarize_by_year(tmp_path):
	records = _records(tmp_path, _model_rows())
	summary = summarize_by_year(build_model_dataset(records, 'men'))
	assert summary['year'].tolist() == [2019, 2022, 2023]
	assert summary['n'].tolist() == [2, 2, 1]


##############
# Exclusions #
##############

def test_exclusions(tmp_path):
	records = _records(tmp_path, _model_rows())
	path = write_rows(tmp_path / 'exclusions.csv',
		[{'athlete_id': 'B', 'heat_id': 'W22-F', 'reason': 'outlier'}], EXCLUSION_COLUMNS)
	keys = load_exclusions(path)

	assert keys == frozenset({('B', 'W22-F')})
	assert len(apply_exclusions(records, keys)) == len(records) - 1
	assert build_model_dataset(records, 'men', exclusions=keys).n == 4


def test_bundled_exclusion_list_loads():
	keys = load_exclusions(EXCLUSIONS_FILE)
	assert all(len(key) == 2 for key in keys)


def test_records_frame_and_checksum(synthetic_csv):
	records = load_csv(synthetic_csv)
	frame = records_frame(records)
	assert len(frame) == len(records)
	assert set(frame['kind']) == {'national', 'world'}
	assert len(dataset_checksum(synthetic_csv)) == 64


###################
# Bundled dataset #
###################

@requires_dataset
@pytest.mark.parametrize('name, treatment, control, gender, expected', [
	('2022nat-vs-2022world', 'world2022', 'national2022', 'men', (17, 80)),
	('2022nat-vs-2022world', 'world2022', 'national2022', 'women', (17, 80)),
	('2019-vs-2022', 'world2022', 'world2019', 'men', (34, 134)),
	('2019-vs-2022', 'world2022', 'world2019', 'women', (31, 124)),
	('2022-vs-2023', 'world2022', 'world2023', 'men', (45, 161)),
	('2022-vs-2023', 'world2022', 'world2023', 'women', (47, 182)),
])
def test_bundled_comparison_counts(name, treatment, control, gender, expected):
	sample = build_clustered_sample(load_csv(INPUT_FILE), treatment, control, gender=gender)
	assert (sample.n, sample.n_obs) == expected


@requires_dataset
def test_bundled_pooled_counts():
	records = load_csv(INPUT_FILE)
	counts = [
		build_clustered_sample(records, treatment, control, pool_genders=True)
		for treatment, control in [('world2022', 'national2022'), ('world2022', 'world2019'), ('world2022', 'world2023')]
	]
	assert [(s.n_obs, s.n) for s in counts] == [(160, 35), (258, 65), (343, 92)]


@requires_dataset
def test_bundled_model_dataset_sizes():
	records = load_csv(INPUT_FILE)
	assert build_model_dataset(records, 'men').n == 776
	assert build_model_dataset(records, 'men', include_positive_dq=False).n == 759
	assert build_model_dataset(records, 'women').n == 733


@requires_dataset
@requires_exclusions
def test_bundled_women_outlier_is_excluded():
	records = load_csv(INPUT_FILE)
	exclusions = listed_exclusions()
	assert build_model_dataset(records, 'women', exclusions=exclusions).n == 732

	removed = [record for record in records if (record.athlete_id, record.heat_id) in exclusions]
	assert len(removed) == 1
	assert removed[0].dq
